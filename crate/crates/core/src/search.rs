//! Chain assembly: order pseudoresidues and leftover spin systems into a
//! single chain laid onto the sequence frame, by greedy growth from every
//! possible start, by A*, or by exhaustive enumeration (the verification
//! oracle).
//!
//! All three strategies share one placement model, so their costs are
//! directly comparable:
//!
//! * a chain starts at one item and grows only forward ("behind" the tail);
//! * items occupy consecutive sequence positions; proline positions can
//!   hold no spin system and are skipped, charging the break penalty for
//!   the crossing;
//! * anchored items must sit exactly at their anchor position, and nothing
//!   else may cover an unplaced anchor's footprint — so when the chain
//!   reaches an anchor position, that anchor is the only legal move;
//! * items left out of the chain each charge the unplaced penalty.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use thiserror::Error;

use crate::linking::{link_error, pair_cost, Linkable};
use crate::model::{
    Assignment, ChemicalShift, ProteinSequence, Pseudoresidue, ResidueCode, ScoringConfig,
    SpinSystem,
};

/// Past this many items the A* open set is impractical; the error says so
/// instead of silently truncating.
pub const ASTAR_MAX_ITEMS: usize = 20;

/// The exhaustive oracle enumerates every ordering; nine items is where
/// that stops being cheap.
pub const ORACLE_MAX_ITEMS: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("no chain items to assemble")]
    NoItems,
    #[error("unknown start item '{0}'")]
    UnknownStart(String),
    #[error("duplicate chain item id '{0}'")]
    DuplicateItem(String),
    #[error("infeasible anchors: {0}")]
    InfeasibleAnchors(String),
    #[error("{n} items exceed the {what} limit of {limit}; use the greedy strategy")]
    TooManyItems {
        n: usize,
        limit: usize,
        what: &'static str,
    },
    #[error("item '{id}' spans past the sequence end from position {pos}")]
    SpanOverflow { id: String, pos: usize },
    #[error("assignment references unknown spin '{0}'")]
    UnknownSpin(String),
}

/// One unit the search can place: a bare spin system (span 1) or a
/// pseudoresidue (span = member count), possibly pinned to a position.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainItem {
    Spin(SpinSystem),
    Pseudo(Pseudoresidue),
}

impl ChainItem {
    /// Identifier used for deterministic tie-breaking: the spin id, or the
    /// first member's id for a pseudoresidue.
    pub fn id(&self) -> &str {
        match self {
            ChainItem::Spin(s) => &s.id,
            ChainItem::Pseudo(p) => &p.members[0],
        }
    }

    pub fn span(&self) -> usize {
        match self {
            ChainItem::Spin(_) => 1,
            ChainItem::Pseudo(p) => p.span(),
        }
    }

    pub fn anchor_pos(&self) -> Option<usize> {
        match self {
            ChainItem::Spin(_) => None,
            ChainItem::Pseudo(p) => p.anchor_pos,
        }
    }

    /// Member spin ids in sequence order.
    pub fn member_ids(&self) -> Vec<&str> {
        match self {
            ChainItem::Spin(s) => vec![s.id.as_str()],
            ChainItem::Pseudo(p) => p.members.iter().map(|m| m.as_str()).collect(),
        }
    }
}

impl Linkable for ChainItem {
    fn back_ca(&self) -> Option<ChemicalShift> {
        match self {
            ChainItem::Spin(s) => s.back_ca(),
            ChainItem::Pseudo(p) => p.back_ca(),
        }
    }
    fn back_cb(&self) -> Option<ChemicalShift> {
        match self {
            ChainItem::Spin(s) => s.back_cb(),
            ChainItem::Pseudo(p) => p.back_cb(),
        }
    }
    fn front_ca_prev(&self) -> Option<ChemicalShift> {
        match self {
            ChainItem::Spin(s) => s.front_ca_prev(),
            ChainItem::Pseudo(p) => p.front_ca_prev(),
        }
    }
    fn front_cb_prev(&self) -> Option<ChemicalShift> {
        match self {
            ChainItem::Spin(s) => s.front_cb_prev(),
            ChainItem::Pseudo(p) => p.front_cb_prev(),
        }
    }
}

/// A finished assembly: items at sequence offsets, the chain cost plus
/// unplaced penalties, and which start produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyResult {
    pub placements: Vec<(usize, ChainItem)>,
    pub total_error: f64,
    pub start_item: Option<String>,
    pub unplaced: Vec<ChainItem>,
}

impl AssemblyResult {
    pub fn empty(items: &[ChainItem]) -> AssemblyResult {
        AssemblyResult {
            placements: Vec::new(),
            total_error: 0.0,
            start_item: None,
            unplaced: items.to_vec(),
        }
    }
}

/// A partial chain during assembly. Immutable from the outside; grown via
/// [`Assembler::extend`].
#[derive(Debug, Clone)]
pub struct Chain {
    placed: Vec<bool>,
    order: Vec<usize>,
    offsets: Vec<usize>,
    next_pos: usize,
    crossed_gap: bool,
    cost: f64,
}

impl Chain {
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn placed_count(&self) -> usize {
        self.order.len()
    }

    fn tail(&self) -> usize {
        *self.order.last().expect("chain is never empty")
    }

    fn mask(&self) -> u64 {
        self.placed
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &p)| if p { m | (1 << i) } else { m })
    }
}

/// Shared placement machinery: precomputed pairwise link costs, proline
/// mask, anchor footprints, and the per-item admissible completion bounds
/// used by the A* heuristic.
pub struct Assembler<'a> {
    items: &'a [ChainItem],
    cfg: &'a ScoringConfig,
    seq_len: usize,
    placeable: Vec<bool>,
    cost: Vec<Vec<f64>>,
    h_item: Vec<f64>,
    anchors: Vec<(usize, usize, usize)>, // (item index, start, end)
}

impl<'a> Assembler<'a> {
    pub fn new(
        items: &'a [ChainItem],
        seq: &ProteinSequence,
        cfg: &'a ScoringConfig,
    ) -> Result<Assembler<'a>, SearchError> {
        let mut ids = BTreeSet::new();
        for item in items {
            if !ids.insert(item.id()) {
                return Err(SearchError::DuplicateItem(item.id().to_string()));
            }
        }

        let placeable: Vec<bool> = seq
            .residues()
            .iter()
            .map(|&r| r != ResidueCode::Pro)
            .collect();

        let mut anchors = Vec::new();
        for (i, item) in items.iter().enumerate() {
            if let Some(pos) = item.anchor_pos() {
                let end = pos + item.span();
                if end > seq.len() {
                    return Err(SearchError::InfeasibleAnchors(format!(
                        "item '{}' anchored at {pos} spans past the sequence end",
                        item.id()
                    )));
                }
                if (pos..end).any(|p| !placeable[p]) {
                    return Err(SearchError::InfeasibleAnchors(format!(
                        "item '{}' anchored at {pos} covers a proline position",
                        item.id()
                    )));
                }
                anchors.push((i, pos, end));
            }
        }
        for (k, &(i, s1, e1)) in anchors.iter().enumerate() {
            for &(j, s2, e2) in anchors.iter().skip(k + 1) {
                if s1 < e2 && s2 < e1 {
                    return Err(SearchError::InfeasibleAnchors(format!(
                        "items '{}' and '{}' overlap at positions {}..{} and {}..{}",
                        items[i].id(),
                        items[j].id(),
                        s1,
                        e1,
                        s2,
                        e2
                    )));
                }
            }
        }

        let n = items.len();
        let mut cost = vec![vec![0.0; n]; n];
        let mut min_finite_in = vec![f64::INFINITY; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let err = link_error(&items[i], &items[j], cfg);
                cost[i][j] = pair_cost(&err, cfg);
                if err.value.is_finite() && err.value < min_finite_in[j] {
                    min_finite_in[j] = err.value;
                }
            }
        }
        // Admissible per-item bound on the cost it will add to any
        // completion: placed items pay at least the cheapest incoming link
        // (or a break when none is finite), unplaced ones pay the unplaced
        // penalty.
        let h_item = (0..n)
            .map(|j| {
                min_finite_in[j]
                    .min(cfg.break_penalty)
                    .min(cfg.unplaced_penalty)
            })
            .collect();

        Ok(Assembler {
            items,
            cfg,
            seq_len: seq.len(),
            placeable,
            cost,
            h_item,
            anchors,
        })
    }

    pub fn items(&self) -> &[ChainItem] {
        self.items
    }

    fn advance(&self, mut pos: usize) -> usize {
        while pos < self.seq_len && !self.placeable[pos] {
            pos += 1;
        }
        pos
    }

    fn footprint_fits(&self, pos: usize, span: usize) -> bool {
        pos + span <= self.seq_len && (pos..pos + span).all(|p| self.placeable[p])
    }

    fn overlaps_unplaced_anchor(&self, placed: &[bool], pos: usize, span: usize) -> bool {
        self.anchors
            .iter()
            .any(|&(i, s, e)| !placed[i] && pos < e && s < pos + span)
    }

    /// Start a chain with the given item: at its anchor position when
    /// anchored, else at the earliest offset compatible with every anchored
    /// item. `None` when the item cannot be placed at all.
    pub fn start(&self, idx: usize) -> Option<Chain> {
        let item = &self.items[idx];
        let span = item.span();
        let no_placed = vec![false; self.items.len()];
        let offset = match item.anchor_pos() {
            Some(pos) => pos,
            None => {
                let mut found = None;
                for pos in 0..self.seq_len {
                    if self.footprint_fits(pos, span)
                        && !self.overlaps_unplaced_anchor(&no_placed, pos, span)
                    {
                        found = Some(pos);
                        break;
                    }
                }
                found?
            }
        };
        let mut placed = no_placed;
        placed[idx] = true;
        let end = offset + span;
        let next_pos = self.advance(end);
        Some(Chain {
            placed,
            order: vec![idx],
            offsets: vec![offset],
            crossed_gap: next_pos > end,
            next_pos,
            cost: 0.0,
        })
    }

    /// Item indices that can legally be placed at the chain's next
    /// position. When that position is an unplaced anchor's, the anchor is
    /// the only candidate, which makes its placement mandatory for any
    /// strategy that places while it can.
    pub fn feasible(&self, chain: &Chain) -> Vec<usize> {
        let pos = chain.next_pos;
        if pos >= self.seq_len {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (idx, item) in self.items.iter().enumerate() {
            if chain.placed[idx] {
                continue;
            }
            let span = item.span();
            match item.anchor_pos() {
                Some(a) => {
                    if a == pos {
                        out.push(idx);
                    }
                }
                None => {
                    if self.footprint_fits(pos, span)
                        && !self.overlaps_unplaced_anchor(&chain.placed, pos, span)
                    {
                        out.push(idx);
                    }
                }
            }
        }
        out
    }

    /// The cost of appending `idx` behind the current tail: the pairwise
    /// link cost, or the break penalty when the chain crossed a proline
    /// gap to get here.
    pub fn step_cost(&self, chain: &Chain, idx: usize) -> f64 {
        if chain.crossed_gap {
            self.cfg.break_penalty
        } else {
            self.cost[chain.tail()][idx]
        }
    }

    /// Append a feasible item behind the tail.
    pub fn extend(&self, chain: &Chain, idx: usize) -> Chain {
        let added = self.step_cost(chain, idx);
        let offset = chain.next_pos;
        let end = offset + self.items[idx].span();
        let mut placed = chain.placed.clone();
        placed[idx] = true;
        let mut order = chain.order.clone();
        order.push(idx);
        let mut offsets = chain.offsets.clone();
        offsets.push(offset);
        let next_pos = self.advance(end);
        Chain {
            placed,
            order,
            offsets,
            crossed_gap: next_pos > end,
            next_pos,
            cost: chain.cost + added,
        }
    }

    /// Penalty for abandoning the chain in this state.
    pub fn finish_cost(&self, chain: &Chain) -> f64 {
        let unplaced = chain.placed.iter().filter(|&&p| !p).count();
        unplaced as f64 * self.cfg.unplaced_penalty
    }

    /// Admissible lower bound on the remaining cost of any completion.
    pub fn heuristic(&self, chain: &Chain) -> f64 {
        chain
            .placed
            .iter()
            .enumerate()
            .filter(|(_, &p)| !p)
            .map(|(i, _)| self.h_item[i])
            .sum()
    }

    /// Exact minimum completion cost from this state, by exhaustive
    /// enumeration. Exponential; for tests and the oracle only.
    pub fn min_completion_cost(&self, chain: &Chain) -> f64 {
        let mut best = self.finish_cost(chain);
        for idx in self.feasible(chain) {
            let added = self.step_cost(chain, idx);
            if added >= best {
                continue;
            }
            let next = self.extend(chain, idx);
            let rest = self.min_completion_cost(&next) + added;
            if rest < best {
                best = rest;
            }
        }
        best
    }

    fn result_from_chain(&self, chain: &Chain, start_idx: usize) -> AssemblyResult {
        let placements = chain
            .order
            .iter()
            .zip(chain.offsets.iter())
            .map(|(&i, &o)| (o, self.items[i].clone()))
            .collect();
        let unplaced = chain
            .placed
            .iter()
            .enumerate()
            .filter(|(_, &p)| !p)
            .map(|(i, _)| self.items[i].clone())
            .collect();
        AssemblyResult {
            placements,
            total_error: chain.cost + self.finish_cost(chain),
            start_item: Some(self.items[start_idx].id().to_string()),
            unplaced,
        }
    }
}

fn greedy_from(assembler: &Assembler<'_>, start_idx: usize) -> AssemblyResult {
    let Some(mut chain) = assembler.start(start_idx) else {
        // Nothing placeable from this start: every item is unplaced.
        let mut r = AssemblyResult::empty(assembler.items());
        r.start_item = Some(assembler.items()[start_idx].id().to_string());
        r.total_error = assembler.items().len() as f64 * assembler.cfg.unplaced_penalty;
        return r;
    };
    loop {
        let candidates = assembler.feasible(&chain);
        let Some(&best) = candidates.iter().min_by(|&&a, &&b| {
            assembler
                .step_cost(&chain, a)
                .total_cmp(&assembler.step_cost(&chain, b))
                .then_with(|| assembler.items()[a].id().cmp(assembler.items()[b].id()))
        }) else {
            break;
        };
        chain = assembler.extend(&chain, best);
    }
    assembler.result_from_chain(&chain, start_idx)
}

/// Grow a chain from one start item, always appending the unplaced item
/// with the lowest cost behind the current tail; when the chain reaches an
/// anchor position that anchor must be placed. Items that no longer fit
/// stay unplaced and are charged the unplaced penalty.
pub fn greedy_assemble(
    items: &[ChainItem],
    start_id: &str,
    seq: &ProteinSequence,
    cfg: &ScoringConfig,
) -> Result<AssemblyResult, SearchError> {
    let assembler = Assembler::new(items, seq, cfg)?;
    let start_idx = items
        .iter()
        .position(|i| i.id() == start_id)
        .ok_or_else(|| SearchError::UnknownStart(start_id.to_string()))?;
    Ok(greedy_from(&assembler, start_idx))
}

/// Run the greedy assembly once from every item and keep the lowest total
/// error; ties break toward the lexicographically smallest start id.
/// `threads` > 1 evaluates starts in parallel with a deterministic
/// reduction.
pub fn multi_start_greedy(
    items: &[ChainItem],
    seq: &ProteinSequence,
    cfg: &ScoringConfig,
    threads: usize,
) -> Result<AssemblyResult, SearchError> {
    if items.is_empty() {
        return Err(SearchError::NoItems);
    }
    let assembler = Assembler::new(items, seq, cfg)?;

    let better = |a: &AssemblyResult, b: &AssemblyResult| -> bool {
        match a.total_error.total_cmp(&b.total_error) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.start_item < b.start_item,
        }
    };

    let reduce = |results: Vec<AssemblyResult>| -> AssemblyResult {
        results
            .into_iter()
            .reduce(|best, r| if better(&r, &best) { r } else { best })
            .expect("at least one start")
    };

    if threads <= 1 || items.len() < 2 {
        let results: Vec<AssemblyResult> = (0..items.len())
            .map(|i| greedy_from(&assembler, i))
            .collect();
        return Ok(reduce(results));
    }

    let workers = threads.min(items.len());
    let chunk = items.len().div_ceil(workers);
    let locals = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let lo = w * chunk;
            let hi = ((w + 1) * chunk).min(items.len());
            let assembler = &assembler;
            handles.push(scope.spawn(move || {
                (lo..hi)
                    .map(|i| greedy_from(assembler, i))
                    .collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("greedy worker panicked"))
            .collect::<Vec<_>>()
    });
    Ok(reduce(locals))
}

#[derive(Debug)]
struct AstarNode {
    f: f64,
    g: f64,
    done: bool,
    order: Vec<u8>,
}

impl PartialEq for AstarNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for AstarNode {}
impl PartialOrd for AstarNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for AstarNode {
    // BinaryHeap is a max-heap; reverse so the smallest f pops first, with
    // a total deterministic order below that.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.done.cmp(&other.done))
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Optimal assembly under the same cost model as the greedy search, via A*
/// over (placed set, tail) states with an admissible per-item heuristic.
pub fn astar_assemble(
    items: &[ChainItem],
    seq: &ProteinSequence,
    cfg: &ScoringConfig,
) -> Result<AssemblyResult, SearchError> {
    if items.len() > ASTAR_MAX_ITEMS {
        return Err(SearchError::TooManyItems {
            n: items.len(),
            limit: ASTAR_MAX_ITEMS,
            what: "A*",
        });
    }
    let assembler = Assembler::new(items, seq, cfg)?;
    if items.is_empty() {
        return Ok(AssemblyResult::empty(items));
    }

    let replay = |order: &[u8]| -> Option<Chain> {
        let mut chain = assembler.start(order[0] as usize)?;
        for &idx in &order[1..] {
            chain = assembler.extend(&chain, idx as usize);
        }
        Some(chain)
    };

    let mut heap: BinaryHeap<AstarNode> = BinaryHeap::new();
    let mut any_start = false;
    for idx in 0..items.len() {
        if let Some(chain) = assembler.start(idx) {
            any_start = true;
            let g = chain.cost();
            heap.push(AstarNode {
                f: g + assembler.heuristic(&chain),
                g,
                done: false,
                order: vec![idx as u8],
            });
        }
    }
    if !any_start {
        return Ok(AssemblyResult::empty(items));
    }

    // The dedup key must carry the frame position and gap flag besides
    // (placed set, tail): orders over the same set can end at different
    // positions when anchors or proline runs interact with item spans,
    // and such states have different futures.
    let mut best_g: HashMap<(u64, u8, usize, bool), f64> = HashMap::new();
    while let Some(node) = heap.pop() {
        let chain = replay(&node.order).expect("replayed order is valid");
        if node.done {
            let mut result = assembler.result_from_chain(&chain, node.order[0] as usize);
            result.total_error = node.g;
            return Ok(result);
        }
        let key = (
            chain.mask(),
            *node.order.last().unwrap(),
            chain.next_pos,
            chain.crossed_gap,
        );
        match best_g.get(&key) {
            Some(&g) if g <= node.g => continue,
            _ => {
                best_g.insert(key, node.g);
            }
        }
        heap.push(AstarNode {
            f: node.g + assembler.finish_cost(&chain),
            g: node.g + assembler.finish_cost(&chain),
            done: true,
            order: node.order.clone(),
        });
        for idx in assembler.feasible(&chain) {
            let added = assembler.step_cost(&chain, idx);
            let next = assembler.extend(&chain, idx);
            let g = node.g + added;
            let mut order = node.order.clone();
            order.push(idx as u8);
            heap.push(AstarNode {
                f: g + assembler.heuristic(&next),
                g,
                done: false,
                order,
            });
        }
    }
    unreachable!("a finish node is always reachable");
}

/// Exhaustively enumerate every ordering consistent with the anchors and
/// return the cheapest. Verification oracle: tests and the `evaluate`
/// command only.
pub fn exhaustive_oracle(
    items: &[ChainItem],
    seq: &ProteinSequence,
    cfg: &ScoringConfig,
) -> Result<AssemblyResult, SearchError> {
    if items.len() > ORACLE_MAX_ITEMS {
        return Err(SearchError::TooManyItems {
            n: items.len(),
            limit: ORACLE_MAX_ITEMS,
            what: "exhaustive oracle",
        });
    }
    let assembler = Assembler::new(items, seq, cfg)?;
    if items.is_empty() {
        return Ok(AssemblyResult::empty(items));
    }

    fn recurse(assembler: &Assembler<'_>, chain: &Chain, best: &mut Option<(f64, Chain)>) {
        let total = chain.cost() + assembler.finish_cost(chain);
        let replace = match best {
            None => true,
            Some((cost, held)) => total < *cost || (total == *cost && chain.order() < held.order()),
        };
        if replace {
            *best = Some((total, chain.clone()));
        }
        for idx in assembler.feasible(chain) {
            let next = assembler.extend(chain, idx);
            recurse(assembler, &next, best);
        }
    }

    let mut best: Option<(f64, Chain)> = None;
    let mut best_start: Option<usize> = None;
    for idx in 0..items.len() {
        if let Some(chain) = assembler.start(idx) {
            let mut local: Option<(f64, Chain)> = None;
            recurse(&assembler, &chain, &mut local);
            if let Some((cost, held)) = local {
                let take = match &best {
                    None => true,
                    Some((bc, _)) => {
                        cost < *bc
                            || (cost == *bc && items[idx].id() < items[best_start.unwrap()].id())
                    }
                };
                if take {
                    best = Some((cost, held));
                    best_start = Some(idx);
                }
            }
        }
    }

    match (best, best_start) {
        (Some((cost, chain)), Some(start)) => {
            let mut result = assembler.result_from_chain(&chain, start);
            result.total_error = cost;
            Ok(result)
        }
        _ => Ok(AssemblyResult::empty(items)),
    }
}

/// Expand an assembly into a per-position assignment. Pseudoresidues map
/// their members to consecutive positions; positions not covered stay
/// unassigned. The assignment's total error is recomputed at position
/// level so that pseudoresidue-internal links count too.
pub fn finalize_assignment(
    result: &AssemblyResult,
    seq: &ProteinSequence,
    spins: &[SpinSystem],
    cfg: &ScoringConfig,
) -> Result<Assignment, SearchError> {
    let by_id: BTreeMap<&str, &SpinSystem> = spins.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut mapping: BTreeMap<usize, String> = BTreeMap::new();
    for (offset, item) in &result.placements {
        for (k, member) in item.member_ids().into_iter().enumerate() {
            let pos = offset + k;
            if pos >= seq.len() {
                return Err(SearchError::SpanOverflow {
                    id: item.id().to_string(),
                    pos,
                });
            }
            mapping.insert(pos, member.to_string());
        }
    }

    let mut total_error = 0.0;
    let positions: Vec<usize> = mapping.keys().copied().collect();
    for pair in positions.windows(2) {
        let (pa, pb) = (pair[0], pair[1]);
        let sa = by_id
            .get(mapping[&pa].as_str())
            .ok_or_else(|| SearchError::UnknownSpin(mapping[&pa].clone()))?;
        let sb = by_id
            .get(mapping[&pb].as_str())
            .ok_or_else(|| SearchError::UnknownSpin(mapping[&pb].clone()))?;
        if pb == pa + 1 {
            total_error += pair_cost(&link_error(*sa, *sb, cfg), cfg);
        } else {
            total_error += cfg.break_penalty;
        }
    }

    let assigned: BTreeSet<&str> = mapping.values().map(|s| s.as_str()).collect();
    let unassigned = spins
        .iter()
        .filter(|s| !assigned.contains(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();

    Ok(Assignment {
        mapping,
        total_error,
        unassigned,
    })
}
