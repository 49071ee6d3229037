//! The full three-step assignment pipeline wired together: anchor-subset
//! detection, tolerance-scheduled anchor matching, chain assembly, and
//! expansion into a per-position assignment.

use serde::Serialize;

use crate::ingest::DatasetBundle;
use crate::linking::match_anchors;
use crate::model::{Assignment, ScoringConfig, ToleranceSchedule};
use crate::search::{
    astar_assemble, finalize_assignment, multi_start_greedy, AssemblyResult, ChainItem, SearchError,
};
use crate::typing::{find_anchor_subsets, TypingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Greedy,
    Astar,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Greedy => write!(f, "greedy"),
            Strategy::Astar => write!(f, "astar"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignParams {
    pub typing: TypingParams,
    pub schedule: ToleranceSchedule,
    pub scoring: ScoringConfig,
    pub strategy: Strategy,
    pub threads: usize,
}

impl Default for AssignParams {
    fn default() -> Self {
        AssignParams {
            typing: TypingParams::default(),
            schedule: ToleranceSchedule::default(),
            scoring: ScoringConfig::default(),
            strategy: Strategy::Greedy,
            threads: 1,
        }
    }
}

/// Summary of one matched anchor subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedSubset {
    pub start_pos: usize,
    pub len: usize,
    pub members: Vec<String>,
}

/// Summary of one subset left unmatched at schedule exhaustion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnmatchedSubset {
    pub start_pos: usize,
    pub len: usize,
    pub residues: String,
}

/// What happened during a run: anchor bookkeeping, item counts, and both
/// cost views (assembly cost includes penalties; assignment error is the
/// per-position chain error).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignReport {
    pub strategy: Strategy,
    pub subsets_found: usize,
    pub matched: Vec<MatchedSubset>,
    pub unmatched: Vec<UnmatchedSubset>,
    pub chain_items: usize,
    pub items_placed: usize,
    pub items_unplaced: usize,
    pub assembly_error: f64,
    pub assignment_error: f64,
    pub positions_assigned: usize,
}

#[derive(Debug, Clone)]
pub struct AssignOutcome {
    pub assignment: Assignment,
    pub report: AssignReport,
}

/// Run the whole pipeline on a dataset bundle.
pub fn run_assign(
    bundle: &DatasetBundle,
    params: &AssignParams,
) -> Result<AssignOutcome, SearchError> {
    let subsets = find_anchor_subsets(&bundle.sequence, &bundle.stats, &params.typing);
    let outcome = match_anchors(
        &subsets,
        &bundle.spins,
        &bundle.stats,
        &params.schedule,
        params.typing.cutoff,
        &params.typing,
    );

    let mut items: Vec<ChainItem> = outcome
        .pseudoresidues
        .iter()
        .cloned()
        .map(ChainItem::Pseudo)
        .collect();
    items.extend(
        bundle
            .spins
            .iter()
            .filter(|s| !outcome.consumed.contains(&s.id))
            .cloned()
            .map(ChainItem::Spin),
    );

    let result: AssemblyResult = if items.is_empty() {
        AssemblyResult::empty(&items)
    } else {
        match params.strategy {
            Strategy::Greedy => {
                multi_start_greedy(&items, &bundle.sequence, &params.scoring, params.threads)?
            }
            Strategy::Astar => astar_assemble(&items, &bundle.sequence, &params.scoring)?,
        }
    };

    let assignment =
        finalize_assignment(&result, &bundle.sequence, &bundle.spins, &params.scoring)?;

    let report = AssignReport {
        strategy: params.strategy,
        subsets_found: subsets.len(),
        matched: outcome
            .pseudoresidues
            .iter()
            .map(|p| MatchedSubset {
                start_pos: p.anchor_pos.expect("matched pseudoresidues are anchored"),
                len: p.span(),
                members: p.members.clone(),
            })
            .collect(),
        unmatched: outcome
            .unmatched
            .iter()
            .map(|s| UnmatchedSubset {
                start_pos: s.start_pos,
                len: s.len(),
                residues: s.residues.iter().map(|r| r.letter()).collect(),
            })
            .collect(),
        chain_items: items.len(),
        items_placed: result.placements.len(),
        items_unplaced: result.unplaced.len(),
        assembly_error: result.total_error,
        assignment_error: assignment.total_error,
        positions_assigned: assignment.mapping.len(),
    };

    Ok(AssignOutcome { assignment, report })
}
