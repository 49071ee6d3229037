//! Sequential linking: score i ↔ i−1 connectivity between spin systems,
//! match anchor subsets to chains of linked spins under a rising tolerance
//! schedule, and collapse matched chains into pseudoresidues.
//!
//! Two tolerance regimes coexist on purpose: a raw-ppm gate decides whether
//! two units *can* be sequential neighbors (the experimental match
//! tolerance), while σ-normalized squared deviations rank how *well* they
//! match. Gates use ppm, scores use σ units.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{
    AnchorSubset, ChemicalShift, Pseudoresidue, ReferenceStats, ScoringConfig, SpinSystem,
    ToleranceSchedule,
};
use crate::typing::{candidate_types, TypingParams};

#[derive(Debug, Error, PartialEq)]
pub enum LinkingError {
    #[error("pseudoresidue must have at least one member")]
    EmptyMembers,
    #[error("duplicate member '{0}' in pseudoresidue")]
    DuplicateMember(String),
    #[error("unknown spin system '{0}'")]
    UnknownMember(String),
}

/// Anything that exposes boundary shifts for sequential linking: a bare
/// spin system or a pseudoresidue. `back_*` are the intra (i) shifts of
/// the unit's last residue, `front_*` the i−1 shifts of its first.
pub trait Linkable {
    fn back_ca(&self) -> Option<ChemicalShift>;
    fn back_cb(&self) -> Option<ChemicalShift>;
    fn front_ca_prev(&self) -> Option<ChemicalShift>;
    fn front_cb_prev(&self) -> Option<ChemicalShift>;
}

impl Linkable for SpinSystem {
    fn back_ca(&self) -> Option<ChemicalShift> {
        self.ca_i
    }
    fn back_cb(&self) -> Option<ChemicalShift> {
        self.cb_i
    }
    fn front_ca_prev(&self) -> Option<ChemicalShift> {
        self.ca_prev
    }
    fn front_cb_prev(&self) -> Option<ChemicalShift> {
        self.cb_prev
    }
}

impl Linkable for Pseudoresidue {
    fn back_ca(&self) -> Option<ChemicalShift> {
        self.back_ca_i
    }
    fn back_cb(&self) -> Option<ChemicalShift> {
        self.back_cb_i
    }
    fn front_ca_prev(&self) -> Option<ChemicalShift> {
        self.front_ca_prev
    }
    fn front_cb_prev(&self) -> Option<ChemicalShift> {
        self.front_cb_prev
    }
}

/// σ-normalized squared discrepancy between one unit's intra shifts and the
/// next unit's preceding shifts. `dims_used == 0` means no dimension was
/// comparable, and the value is +∞: absence of evidence is not a match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkError {
    pub value: f64,
    pub dims_used: usize,
}

impl LinkError {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Error of placing `b` immediately after `a`: compares a's intra (i)
/// shifts with b's preceding (i−1) shifts over the dimensions present on
/// both sides, averaged.
pub fn link_error<A, B>(a: &A, b: &B, cfg: &ScoringConfig) -> LinkError
where
    A: Linkable + ?Sized,
    B: Linkable + ?Sized,
{
    let mut sum = 0.0;
    let mut dims = 0;
    for (back, front) in [
        (a.back_ca(), b.front_ca_prev()),
        (a.back_cb(), b.front_cb_prev()),
    ] {
        if let (Some(x), Some(y)) = (back, front) {
            let d = (y.ppm() - x.ppm()) / cfg.sigma_link;
            sum += d * d;
            dims += 1;
        }
    }
    if dims == 0 {
        LinkError {
            value: f64::INFINITY,
            dims_used: 0,
        }
    } else {
        LinkError {
            value: sum / dims as f64,
            dims_used: dims,
        }
    }
}

/// The cost a link contributes to an assembly, capped at the break
/// penalty: a pair that matches worse than a chain break carries no more
/// evidence than one, and the cap keeps multi-start totals comparable
/// across chains with different coverage. No-evidence links (+∞) land on
/// the cap.
pub fn pair_cost(err: &LinkError, cfg: &ScoringConfig) -> f64 {
    err.value.min(cfg.break_penalty)
}

/// Raw-ppm gate: true when at least one dimension is comparable and every
/// comparable dimension differs by at most `tol` ppm.
pub fn links_within<A, B>(a: &A, b: &B, tol: f64) -> bool
where
    A: Linkable + ?Sized,
    B: Linkable + ?Sized,
{
    let mut dims = 0;
    for (back, front) in [
        (a.back_ca(), b.front_ca_prev()),
        (a.back_cb(), b.front_cb_prev()),
    ] {
        if let (Some(x), Some(y)) = (back, front) {
            if (y.ppm() - x.ppm()).abs() > tol {
                return false;
            }
            dims += 1;
        }
    }
    dims >= 1
}

/// All ordered pairs (a, b) whose comparable dimensions agree within `tol`
/// ppm. Monotone in `tol` by construction.
pub fn enumerate_links(spins: &[SpinSystem], tol: f64) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for a in spins {
        for b in spins {
            if a.id != b.id && links_within(a, b, tol) {
                out.insert((a.id.clone(), b.id.clone()));
            }
        }
    }
    out
}

/// Collapse an ordered chain of spin systems into a pseudoresidue whose
/// boundary shifts come from the first member's i−1 fields and the last
/// member's intra fields.
pub fn build_pseudoresidue(
    member_ids: &[String],
    spins: &[SpinSystem],
    anchor_pos: Option<usize>,
) -> Result<Pseudoresidue, LinkingError> {
    if member_ids.is_empty() {
        return Err(LinkingError::EmptyMembers);
    }
    let mut seen = BTreeSet::new();
    for id in member_ids {
        if !seen.insert(id.as_str()) {
            return Err(LinkingError::DuplicateMember(id.clone()));
        }
    }
    let lookup = |id: &String| {
        spins
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| LinkingError::UnknownMember(id.clone()))
    };
    let first = lookup(&member_ids[0])?;
    let last = lookup(&member_ids[member_ids.len() - 1])?;
    Ok(Pseudoresidue {
        members: member_ids.to_vec(),
        anchor_pos,
        front_ca_prev: first.ca_prev,
        front_cb_prev: first.cb_prev,
        back_ca_i: last.ca_i,
        back_cb_i: last.cb_i,
    })
}

/// Result of anchor matching: pseudoresidues pinned to sequence positions,
/// the spin systems they consumed, and any subsets that stayed unmatched
/// when the schedule was exhausted.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub pseudoresidues: Vec<Pseudoresidue>,
    pub consumed: BTreeSet<String>,
    pub unmatched: Vec<AnchorSubset>,
}

/// Match anchor subsets to chains of sequentially linked spin systems,
/// iterating the tolerance schedule from tight to loose.
///
/// At each tolerance, subsets are tried in descending uniqueness order; a
/// subset is matched only when exactly one candidate chain exists, where a
/// candidate chain picks, for each subset position, an unconsumed spin
/// whose candidate types include that position's residue, with consecutive
/// members passing the raw-ppm gate at the current tolerance. Ambiguous
/// subsets are deferred to a later tolerance rather than guessed. Subsets
/// still unmatched when the schedule runs out are reported, not fatal.
pub fn match_anchors(
    subsets: &[AnchorSubset],
    spins: &[SpinSystem],
    stats: &ReferenceStats,
    sched: &ToleranceSchedule,
    cutoff: f64,
    typing: &TypingParams,
) -> MatchOutcome {
    // Typing does not depend on the tolerance; compute candidate spin lists
    // per subset position once.
    let spin_candidates: Vec<Vec<Vec<usize>>> = subsets
        .iter()
        .map(|subset| {
            subset
                .residues
                .iter()
                .map(|&res| {
                    spins
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| {
                            s.has_intra()
                                && candidate_types(s, stats, cutoff, typing)
                                    .iter()
                                    .any(|t| t.residue == res)
                        })
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect()
        })
        .collect();

    // Descending uniqueness, then ascending start position.
    let mut order: Vec<usize> = (0..subsets.len()).collect();
    order.sort_by(|&a, &b| {
        subsets[b]
            .uniqueness_score
            .partial_cmp(&subsets[a].uniqueness_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(subsets[a].start_pos.cmp(&subsets[b].start_pos))
    });

    let mut matched: Vec<Option<Pseudoresidue>> = vec![None; subsets.len()];
    let mut consumed: BTreeSet<usize> = BTreeSet::new();

    for tol in sched.values() {
        // Matching one subset shrinks the pool and can disambiguate
        // another at the same tolerance, so sweep to a fixpoint.
        loop {
            let mut progressed = false;
            for &si in &order {
                if matched[si].is_some() {
                    continue;
                }
                if let Some(chain) = unique_chain(&spin_candidates[si], spins, tol, &consumed) {
                    let ids: Vec<String> = chain.iter().map(|&i| spins[i].id.clone()).collect();
                    let pseudo = build_pseudoresidue(&ids, spins, Some(subsets[si].start_pos))
                        .expect("chain members are distinct and present");
                    consumed.extend(chain);
                    matched[si] = Some(pseudo);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
        if matched.iter().all(|m| m.is_some()) {
            break;
        }
    }

    let mut pseudoresidues = Vec::new();
    let mut unmatched = Vec::new();
    for (si, slot) in matched.into_iter().enumerate() {
        match slot {
            Some(p) => pseudoresidues.push(p),
            None => unmatched.push(subsets[si].clone()),
        }
    }
    let consumed_ids = consumed.into_iter().map(|i| spins[i].id.clone()).collect();
    MatchOutcome {
        pseudoresidues,
        consumed: consumed_ids,
        unmatched,
    }
}

/// Find the unique chain for one subset at the given tolerance, if there is
/// exactly one. Stops searching as soon as two distinct chains are found.
fn unique_chain(
    candidates: &[Vec<usize>],
    spins: &[SpinSystem],
    tol: f64,
    consumed: &BTreeSet<usize>,
) -> Option<Vec<usize>> {
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut partial = Vec::with_capacity(candidates.len());
    chain_dfs(candidates, spins, tol, consumed, &mut partial, &mut found);
    if found.len() == 1 {
        found.pop()
    } else {
        None
    }
}

fn chain_dfs(
    candidates: &[Vec<usize>],
    spins: &[SpinSystem],
    tol: f64,
    consumed: &BTreeSet<usize>,
    partial: &mut Vec<usize>,
    found: &mut Vec<Vec<usize>>,
) {
    if found.len() >= 2 {
        return;
    }
    let depth = partial.len();
    if depth == candidates.len() {
        found.push(partial.clone());
        return;
    }
    for &cand in &candidates[depth] {
        if consumed.contains(&cand) || partial.contains(&cand) {
            continue;
        }
        if let Some(&prev) = partial.last() {
            if !links_within(&spins[prev], &spins[cand], tol) {
                continue;
            }
        }
        partial.push(cand);
        chain_dfs(candidates, spins, tol, consumed, partial, found);
        partial.pop();
        if found.len() >= 2 {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typing::find_anchor_subsets;

    fn spin(
        id: &str,
        ca_i: Option<f64>,
        cb_i: Option<f64>,
        ca_prev: Option<f64>,
        cb_prev: Option<f64>,
    ) -> SpinSystem {
        SpinSystem::new(
            id,
            ca_i.map(|v| ChemicalShift::new(v).unwrap()),
            cb_i.map(|v| ChemicalShift::new(v).unwrap()),
            ca_prev.map(|v| ChemicalShift::new(v).unwrap()),
            cb_prev.map(|v| ChemicalShift::new(v).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn exact_match_scores_zero_over_two_dims() {
        let cfg = ScoringConfig::default();
        let a = spin("a", Some(58.0), Some(32.0), None, None);
        let b = spin("b", Some(61.0), Some(40.0), Some(58.0), Some(32.0));
        let err = link_error(&a, &b, &cfg);
        assert_eq!(err.value, 0.0);
        assert_eq!(err.dims_used, 2);
    }

    #[test]
    fn one_sigma_deviation_scores_one_over_one_dim() {
        let cfg = ScoringConfig::default();
        let a = spin("a", Some(58.0), None, None, None);
        let b = spin("b", None, None, Some(58.0 + cfg.sigma_link), Some(32.0));
        let err = link_error(&a, &b, &cfg);
        assert!((err.value - 1.0).abs() < 1e-12);
        assert_eq!(err.dims_used, 1);
    }

    #[test]
    fn no_shared_dims_is_infinite() {
        let cfg = ScoringConfig::default();
        let a = spin("a", None, None, Some(58.0), Some(32.0));
        let b = spin("b", Some(61.0), Some(40.0), None, None);
        let err = link_error(&a, &b, &cfg);
        assert!(err.value.is_infinite());
        assert_eq!(err.dims_used, 0);
        assert_eq!(pair_cost(&err, &cfg), cfg.break_penalty);
    }

    /// Five spins chained with exact i ↔ i−1 agreement and well-separated
    /// shift values: the link set at a tight tolerance is exactly the four
    /// true successor pairs, verified against the full ordered-pair space.
    #[test]
    fn exact_chain_yields_exactly_true_links() {
        let shifts = [
            (50.0, 30.0),
            (55.0, 35.0),
            (60.0, 40.0),
            (45.0, 20.0),
            (63.0, 69.0),
        ];
        let mut spins = Vec::new();
        for (i, &(ca, cb)) in shifts.iter().enumerate() {
            let prev = if i == 0 { None } else { Some(shifts[i - 1]) };
            spins.push(spin(
                &format!("s{i}"),
                Some(ca),
                Some(cb),
                prev.map(|p| p.0),
                prev.map(|p| p.1),
            ));
        }
        let links = enumerate_links(&spins, 0.1);
        let expected: BTreeSet<(String, String)> = (0..4)
            .map(|i| (format!("s{i}"), format!("s{}", i + 1)))
            .collect();
        assert_eq!(links, expected);
    }

    #[test]
    fn zero_tolerance_excludes_noisy_links() {
        let a = spin("a", Some(58.0), Some(32.0), None, None);
        let b = spin("b", Some(61.0), Some(40.0), Some(58.001), Some(32.0));
        assert!(enumerate_links(&[a, b], 0.0).is_empty());
    }

    #[test]
    fn pseudoresidue_single_member_mirrors_spin() {
        let s = spin("a", Some(58.0), Some(32.0), Some(60.0), Some(30.0));
        let p = build_pseudoresidue(&["a".to_string()], std::slice::from_ref(&s), None).unwrap();
        assert_eq!(p.front_ca_prev, s.ca_prev);
        assert_eq!(p.front_cb_prev, s.cb_prev);
        assert_eq!(p.back_ca_i, s.ca_i);
        assert_eq!(p.back_cb_i, s.cb_i);
        assert_eq!(p.span(), 1);
        // A single-member pseudoresidue links exactly like the bare spin.
        let other = spin("x", Some(61.0), None, Some(58.0), Some(32.0));
        let cfg = ScoringConfig::default();
        assert_eq!(
            link_error(&p, &other, &cfg).value,
            link_error(&s, &other, &cfg).value
        );
    }

    #[test]
    fn pseudoresidue_boundaries_come_from_ends() {
        let s1 = spin("a", Some(58.0), Some(32.0), Some(50.0), Some(20.0));
        let s2 = spin("b", Some(61.0), Some(40.0), Some(58.0), Some(32.0));
        let p = build_pseudoresidue(
            &["a".to_string(), "b".to_string()],
            &[s1.clone(), s2.clone()],
            Some(3),
        )
        .unwrap();
        assert_eq!(p.front_ca_prev, s1.ca_prev);
        assert_eq!(p.front_cb_prev, s1.cb_prev);
        assert_eq!(p.back_ca_i, s2.ca_i);
        assert_eq!(p.back_cb_i, s2.cb_i);
        assert_eq!(p.anchor_pos, Some(3));
    }

    #[test]
    fn pseudoresidue_rejects_duplicates() {
        let s = spin("a", Some(58.0), Some(32.0), None, None);
        let err = build_pseudoresidue(&["a".to_string(), "a".to_string()], &[s], None);
        assert_eq!(err, Err(LinkingError::DuplicateMember("a".to_string())));
    }

    /// Typing parameters that admit only glycine into anchor subsets, so
    /// matching scenarios stay small and explicit.
    fn gly_only_typing() -> TypingParams {
        TypingParams {
            min_uniqueness: 5.0,
            ..TypingParams::default()
        }
    }

    #[test]
    fn single_candidate_matches_at_first_tolerance() {
        let stats = crate::ingest::bundled_reference_stats();
        let seq = crate::ingest::parse_sequence("MKGVL").unwrap();
        let typing = gly_only_typing();
        let subsets = find_anchor_subsets(&seq, &stats, &typing);
        assert_eq!(subsets.len(), 1, "G at position 2 is the only anchor");

        // One glycine-like spin among clearly non-glycine spins.
        let spins = vec![
            spin("g1", Some(45.3), None, Some(56.9), Some(32.7)),
            spin("k1", Some(57.0), Some(32.8), Some(53.1), Some(19.0)),
            spin("v1", Some(62.5), Some(32.7), Some(45.3), None),
        ];
        let out = match_anchors(
            &subsets,
            &spins,
            &stats,
            &ToleranceSchedule::default(),
            typing.cutoff,
            &typing,
        );
        assert_eq!(out.pseudoresidues.len(), 1);
        assert_eq!(out.pseudoresidues[0].members, vec!["g1".to_string()]);
        assert_eq!(out.pseudoresidues[0].anchor_pos, Some(2));
        assert!(out.consumed.contains("g1"));
        assert!(out.unmatched.is_empty());
    }

    #[test]
    fn ambiguous_subset_stays_unmatched() {
        let stats = crate::ingest::bundled_reference_stats();
        let seq = crate::ingest::parse_sequence("MKGVL").unwrap();
        let typing = gly_only_typing();
        let subsets = find_anchor_subsets(&seq, &stats, &typing);

        // Two indistinguishable glycine candidates at every tolerance.
        let spins = vec![
            spin("g1", Some(45.3), None, Some(56.9), Some(32.7)),
            spin("g2", Some(45.3), None, Some(56.9), Some(32.7)),
        ];
        let out = match_anchors(
            &subsets,
            &spins,
            &stats,
            &ToleranceSchedule::default(),
            typing.cutoff,
            &typing,
        );
        assert!(out.pseudoresidues.is_empty());
        assert!(out.consumed.is_empty());
        assert_eq!(out.unmatched.len(), 1);
        assert_eq!(out.unmatched[0].start_pos, 2);
    }

    /// Matching one subset can disambiguate another at the same tolerance:
    /// the GG chain consumes two of the three glycine-like spins, leaving
    /// the singleton subset a unique candidate. Consumed sets stay
    /// disjoint.
    #[test]
    fn consumption_disambiguates_and_never_overlaps() {
        let stats = crate::ingest::bundled_reference_stats();
        let seq = crate::ingest::parse_sequence("GGKLMG").unwrap();
        let typing = gly_only_typing();
        let subsets = find_anchor_subsets(&seq, &stats, &typing);
        assert_eq!(subsets.len(), 2);

        let spins = vec![
            spin("g1", Some(45.2), None, None, None),
            spin("g2", Some(45.9), None, Some(45.2), None),
            spin("g3", Some(44.8), None, Some(56.1), Some(33.0)),
        ];
        let out = match_anchors(
            &subsets,
            &spins,
            &stats,
            &ToleranceSchedule::default(),
            typing.cutoff,
            &typing,
        );
        assert_eq!(out.pseudoresidues.len(), 2);
        let mut all_members = Vec::new();
        for p in &out.pseudoresidues {
            all_members.extend(p.members.clone());
        }
        let unique: BTreeSet<_> = all_members.iter().collect();
        assert_eq!(unique.len(), all_members.len());
        let singleton = out
            .pseudoresidues
            .iter()
            .find(|p| p.anchor_pos == Some(5))
            .expect("singleton subset matched");
        assert_eq!(singleton.members, vec!["g3".to_string()]);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_spin(idx: usize) -> impl Strategy<Value = SpinSystem> {
        (
            proptest::option::of(20.0..70.0f64),
            proptest::option::of(15.0..72.0f64),
            proptest::option::of(20.0..70.0f64),
            proptest::option::of(15.0..72.0f64),
        )
            .prop_filter_map("at least one shift", move |(ca, cb, cap, cbp)| {
                SpinSystem::new(
                    format!("s{idx}"),
                    ca.map(|v| ChemicalShift::new(v).unwrap()),
                    cb.map(|v| ChemicalShift::new(v).unwrap()),
                    cap.map(|v| ChemicalShift::new(v).unwrap()),
                    cbp.map(|v| ChemicalShift::new(v).unwrap()),
                )
                .ok()
            })
    }

    fn arb_spins() -> impl Strategy<Value = Vec<SpinSystem>> {
        (2usize..8).prop_flat_map(|n| {
            (0..n)
                .map(arb_spin)
                .collect::<Vec<_>>()
                .prop_map(|spins| spins)
        })
    }

    proptest! {
        #[test]
        fn enumerate_links_monotone_in_tolerance(
            spins in arb_spins(),
            t1 in 0.0..0.5f64,
            t2 in 0.0..0.5f64,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let small = enumerate_links(&spins, lo);
            let large = enumerate_links(&spins, hi);
            prop_assert!(small.is_subset(&large));
        }

        #[test]
        fn link_error_value_nonnegative(spins in arb_spins()) {
            let cfg = ScoringConfig::default();
            for a in &spins {
                for b in &spins {
                    let err = link_error(a, b, &cfg);
                    prop_assert!(err.value >= 0.0);
                    prop_assert!((err.dims_used == 0) == err.value.is_infinite());
                }
            }
        }
    }
}
