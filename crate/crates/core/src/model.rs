//! Domain types shared by every other module: residues, sequences, chemical
//! shifts, spin systems, reference statistics, and assignments.
//!
//! All types here are immutable value types after construction and carry no
//! I/O. Positions are 0-based everywhere in memory; 1-based numbering only
//! appears in serialized output files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown residue code '{0}'")]
    UnknownResidue(char),
    #[error("protein sequence must contain at least 2 residues, got {0}")]
    SequenceTooShort(usize),
    #[error("chemical shift must be finite, got {0}")]
    NonFiniteShift(f64),
    #[error("spin system '{0}' has no observable shifts")]
    EmptySpinSystem(String),
    #[error("reference stats missing residue {0}")]
    MissingResidue(ResidueCode),
    #[error("reference stats for {residue}: {field} sd must be > 0, got {value}")]
    NonPositiveSd {
        residue: ResidueCode,
        field: &'static str,
        value: f64,
    },
    #[error("glycine must not carry a Cβ entry")]
    GlycineBeta,
    #[error("reference stats for {0} missing Cβ entry")]
    MissingBeta(ResidueCode),
    #[error("invalid tolerance schedule: start {start}, step {step}, max {max}")]
    BadSchedule { start: f64, step: f64, max: f64 },
}

/// One of the 20 standard amino acids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResidueCode {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

impl ResidueCode {
    pub const ALL: [ResidueCode; 20] = [
        ResidueCode::Ala,
        ResidueCode::Arg,
        ResidueCode::Asn,
        ResidueCode::Asp,
        ResidueCode::Cys,
        ResidueCode::Gln,
        ResidueCode::Glu,
        ResidueCode::Gly,
        ResidueCode::His,
        ResidueCode::Ile,
        ResidueCode::Leu,
        ResidueCode::Lys,
        ResidueCode::Met,
        ResidueCode::Phe,
        ResidueCode::Pro,
        ResidueCode::Ser,
        ResidueCode::Thr,
        ResidueCode::Trp,
        ResidueCode::Tyr,
        ResidueCode::Val,
    ];

    pub fn from_letter(c: char) -> Option<ResidueCode> {
        let code = match c.to_ascii_uppercase() {
            'A' => ResidueCode::Ala,
            'R' => ResidueCode::Arg,
            'N' => ResidueCode::Asn,
            'D' => ResidueCode::Asp,
            'C' => ResidueCode::Cys,
            'Q' => ResidueCode::Gln,
            'E' => ResidueCode::Glu,
            'G' => ResidueCode::Gly,
            'H' => ResidueCode::His,
            'I' => ResidueCode::Ile,
            'L' => ResidueCode::Leu,
            'K' => ResidueCode::Lys,
            'M' => ResidueCode::Met,
            'F' => ResidueCode::Phe,
            'P' => ResidueCode::Pro,
            'S' => ResidueCode::Ser,
            'T' => ResidueCode::Thr,
            'W' => ResidueCode::Trp,
            'Y' => ResidueCode::Tyr,
            'V' => ResidueCode::Val,
            _ => return None,
        };
        Some(code)
    }

    pub fn letter(self) -> char {
        match self {
            ResidueCode::Ala => 'A',
            ResidueCode::Arg => 'R',
            ResidueCode::Asn => 'N',
            ResidueCode::Asp => 'D',
            ResidueCode::Cys => 'C',
            ResidueCode::Gln => 'Q',
            ResidueCode::Glu => 'E',
            ResidueCode::Gly => 'G',
            ResidueCode::His => 'H',
            ResidueCode::Ile => 'I',
            ResidueCode::Leu => 'L',
            ResidueCode::Lys => 'K',
            ResidueCode::Met => 'M',
            ResidueCode::Phe => 'F',
            ResidueCode::Pro => 'P',
            ResidueCode::Ser => 'S',
            ResidueCode::Thr => 'T',
            ResidueCode::Trp => 'W',
            ResidueCode::Tyr => 'Y',
            ResidueCode::Val => 'V',
        }
    }

    pub(crate) fn index(self) -> usize {
        Self::ALL.iter().position(|&r| r == self).unwrap()
    }

    /// Glycine is the only standard residue without a β-carbon.
    pub fn has_beta_carbon(self) -> bool {
        self != ResidueCode::Gly
    }
}

impl fmt::Display for ResidueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Ordered residues of the protein under assignment. Always length ≥ 2:
/// a one-residue sequence admits no sequential links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence {
    residues: Vec<ResidueCode>,
}

impl ProteinSequence {
    pub fn new(residues: Vec<ResidueCode>) -> Result<ProteinSequence, ModelError> {
        if residues.len() < 2 {
            return Err(ModelError::SequenceTooShort(residues.len()));
        }
        Ok(ProteinSequence { residues })
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn residues(&self) -> &[ResidueCode] {
        &self.residues
    }

    pub fn residue(&self, pos: usize) -> ResidueCode {
        self.residues[pos]
    }
}

impl fmt::Display for ProteinSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.residues {
            write!(f, "{}", r.letter())?;
        }
        Ok(())
    }
}

/// A chemical shift in ppm. Always finite; the carbon sanity window
/// [0, 100] ppm is enforced at ingest, not here.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChemicalShift(f64);

impl ChemicalShift {
    pub fn new(ppm: f64) -> Result<ChemicalShift, ModelError> {
        if !ppm.is_finite() {
            return Err(ModelError::NonFiniteShift(ppm));
        }
        Ok(ChemicalShift(ppm))
    }

    pub fn ppm(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ChemicalShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One observed backbone unit: the Cα/Cβ shifts of residue i plus the
/// Cα/Cβ shifts of the preceding residue i−1, any of which may be missing.
/// `extra` carries unmodeled passthrough columns from the input table
/// (e.g. H/N shifts), preserved verbatim on round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub id: String,
    pub ca_i: Option<ChemicalShift>,
    pub cb_i: Option<ChemicalShift>,
    pub ca_prev: Option<ChemicalShift>,
    pub cb_prev: Option<ChemicalShift>,
    pub extra: Vec<(String, String)>,
}

impl SpinSystem {
    pub fn new(
        id: impl Into<String>,
        ca_i: Option<ChemicalShift>,
        cb_i: Option<ChemicalShift>,
        ca_prev: Option<ChemicalShift>,
        cb_prev: Option<ChemicalShift>,
    ) -> Result<SpinSystem, ModelError> {
        let id = id.into();
        if ca_i.is_none() && cb_i.is_none() && ca_prev.is_none() && cb_prev.is_none() {
            return Err(ModelError::EmptySpinSystem(id));
        }
        Ok(SpinSystem {
            id,
            ca_i,
            cb_i,
            ca_prev,
            cb_prev,
            extra: Vec::new(),
        })
    }

    pub fn has_intra(&self) -> bool {
        self.ca_i.is_some() || self.cb_i.is_some()
    }
}

/// Mean and standard deviation of one shift dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftStat {
    pub mean: f64,
    pub sd: f64,
}

/// Reference shift statistics for one residue type. `cb` is `None` only
/// for glycine, which has no β-carbon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidueStat {
    pub ca: ShiftStat,
    pub cb: Option<ShiftStat>,
}

/// Per-residue-type Cα/Cβ statistics: the characteristic shift ranges used
/// for typing and anchor detection. Complete over all 20 residue codes.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceStats {
    by_residue: [ResidueStat; 20],
}

impl ReferenceStats {
    pub fn new(entries: BTreeMap<ResidueCode, ResidueStat>) -> Result<ReferenceStats, ModelError> {
        let mut by_residue = [ResidueStat {
            ca: ShiftStat { mean: 0.0, sd: 1.0 },
            cb: None,
        }; 20];
        for res in ResidueCode::ALL {
            let stat = entries
                .get(&res)
                .copied()
                .ok_or(ModelError::MissingResidue(res))?;
            if stat.ca.sd <= 0.0 || !stat.ca.sd.is_finite() {
                return Err(ModelError::NonPositiveSd {
                    residue: res,
                    field: "ca",
                    value: stat.ca.sd,
                });
            }
            match (res.has_beta_carbon(), stat.cb) {
                (false, Some(_)) => return Err(ModelError::GlycineBeta),
                (true, None) => return Err(ModelError::MissingBeta(res)),
                (true, Some(cb)) if cb.sd <= 0.0 || !cb.sd.is_finite() => {
                    return Err(ModelError::NonPositiveSd {
                        residue: res,
                        field: "cb",
                        value: cb.sd,
                    });
                }
                _ => {}
            }
            by_residue[res.index()] = stat;
        }
        Ok(ReferenceStats { by_residue })
    }

    pub fn get(&self, res: ResidueCode) -> &ResidueStat {
        &self.by_residue[res.index()]
    }
}

/// Rising sequence of raw-ppm match tolerances used during anchor matching:
/// start, start+step, … clamped to max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSchedule {
    pub start: f64,
    pub step: f64,
    pub max: f64,
}

impl ToleranceSchedule {
    pub fn new(start: f64, step: f64, max: f64) -> Result<ToleranceSchedule, ModelError> {
        let ok = start > 0.0 && start <= max && step > 0.0 && start.is_finite() && max.is_finite();
        if !ok {
            return Err(ModelError::BadSchedule { start, step, max });
        }
        Ok(ToleranceSchedule { start, step, max })
    }

    /// The tolerances in rising order. The first value ≥ max is clamped to
    /// max and terminates the schedule.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 0.. {
            let v = self.start + k as f64 * self.step;
            if v >= self.max {
                out.push(self.max);
                break;
            }
            out.push(v);
        }
        out
    }
}

impl Default for ToleranceSchedule {
    fn default() -> Self {
        ToleranceSchedule {
            start: 0.1,
            step: 0.05,
            max: 0.2,
        }
    }
}

/// A contiguous stretch of the protein sequence whose residues all exceed
/// the uniqueness threshold; candidate for matching to a spin-system chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSubset {
    pub start_pos: usize,
    pub residues: Vec<ResidueCode>,
    pub uniqueness_score: f64,
}

impl AnchorSubset {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// Sequence positions covered by this subset.
    pub fn positions(&self) -> std::ops::Range<usize> {
        self.start_pos..self.start_pos + self.residues.len()
    }
}

/// An ordered chain of spin systems collapsed to a single linkable unit.
/// Boundary shifts are copies of the first member's i−1 fields and the
/// last member's intra fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudoresidue {
    pub members: Vec<String>,
    pub anchor_pos: Option<usize>,
    pub front_ca_prev: Option<ChemicalShift>,
    pub front_cb_prev: Option<ChemicalShift>,
    pub back_ca_i: Option<ChemicalShift>,
    pub back_cb_i: Option<ChemicalShift>,
}

impl Pseudoresidue {
    pub fn span(&self) -> usize {
        self.members.len()
    }
}

/// Scoring configuration shared by linking, search, and validation.
///
/// `sigma_link` is the link-noise scale used to normalize squared shift
/// deviations; `break_penalty` is charged for an adjacent pair with no
/// usable link (e.g. across a proline gap); `unplaced_penalty` is charged
/// per chain item left out of an assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub sigma_link: f64,
    pub break_penalty: f64,
    pub unplaced_penalty: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        // unplaced > break: abandoning a nonempty chain segment must cost
        // strictly more than crossing the gap that separates it, or the
        // two tie and coverage is decided by id order.
        ScoringConfig {
            sigma_link: 0.2,
            break_penalty: 10.0,
            unplaced_penalty: 12.0,
        }
    }
}

/// Partial or total map from sequence positions to spin-system ids.
///
/// `total_error` is the sum over consecutive assigned positions of the
/// σ-normalized link error (break penalty where the pair is non-adjacent
/// or the link carries no evidence); it excludes unplaced-item penalties,
/// which belong to the search layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: BTreeMap<usize, String>,
    pub total_error: f64,
    pub unassigned: BTreeSet<String>,
}

impl Assignment {
    pub fn empty(spins: &[SpinSystem]) -> Assignment {
        Assignment {
            mapping: BTreeMap::new(),
            total_error: 0.0,
            unassigned: spins.iter().map(|s| s.id.clone()).collect(),
        }
    }
}

/// A single problem found by [`validate_assignment`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownSpin { pos: usize, id: String },
    DuplicateSpin { id: String },
    PositionOutOfRange { pos: usize, len: usize },
    TotalErrorMismatch { stated: f64, recomputed: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownSpin { pos, id } => {
                write!(f, "position {pos} references unknown spin '{id}'")
            }
            Violation::DuplicateSpin { id } => {
                write!(f, "spin '{id}' assigned to more than one position")
            }
            Violation::PositionOutOfRange { pos, len } => {
                write!(f, "position {pos} outside sequence of length {len}")
            }
            Violation::TotalErrorMismatch { stated, recomputed } => {
                write!(
                    f,
                    "total_error {stated} does not match recomputed {recomputed}"
                )
            }
        }
    }
}

/// Outcome of [`validate_assignment`]: empty means the assignment is
/// internally consistent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

const TOTAL_ERROR_TOLERANCE: f64 = 1e-9;

/// Check an assignment against the dataset it claims to describe: every id
/// must exist, no spin may be used twice, positions must be in range, and
/// the stated total error must match a from-scratch recomputation within
/// 1e-9. Never aborts; all problems are reported as violations.
pub fn validate_assignment(
    a: &Assignment,
    spins: &[SpinSystem],
    seq: &ProteinSequence,
    cfg: &ScoringConfig,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let by_id: BTreeMap<&str, &SpinSystem> = spins.iter().map(|s| (s.id.as_str(), s)).collect();

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for (&pos, id) in &a.mapping {
        if pos >= seq.len() {
            report.violations.push(Violation::PositionOutOfRange {
                pos,
                len: seq.len(),
            });
        }
        if !by_id.contains_key(id.as_str()) {
            report.violations.push(Violation::UnknownSpin {
                pos,
                id: id.clone(),
            });
        }
        if !seen.insert(id.as_str()) {
            report
                .violations
                .push(Violation::DuplicateSpin { id: id.clone() });
        }
    }

    // Recompute the total error independently of however the assignment was
    // produced: walk assigned positions in order; sequence-adjacent pairs
    // contribute their link error, anything else is a chain break.
    let mut recomputed = 0.0;
    let assigned: Vec<(usize, &String)> = a.mapping.iter().map(|(&p, id)| (p, id)).collect();
    for pair in assigned.windows(2) {
        let (pos_a, id_a) = pair[0];
        let (pos_b, id_b) = pair[1];
        let (Some(sa), Some(sb)) = (by_id.get(id_a.as_str()), by_id.get(id_b.as_str())) else {
            continue;
        };
        if pos_b == pos_a + 1 {
            let err = crate::linking::link_error(*sa, *sb, cfg);
            recomputed += crate::linking::pair_cost(&err, cfg);
        } else {
            recomputed += cfg.break_penalty;
        }
    }
    if (recomputed - a.total_error).abs() > TOTAL_ERROR_TOLERANCE {
        report.violations.push(Violation::TotalErrorMismatch {
            stated: a.total_error,
            recomputed,
        });
    }

    report
}
