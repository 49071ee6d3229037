//! Residue typing from intra-residue shifts and detection of anchor
//! subsets: short stretches of the sequence whose residues have shift
//! statistics distinctive enough to pin spin-system chains to positions.
//!
//! Scores are σ-normalized squared deviations so Cα and Cβ are
//! commensurable and cutoffs are unit-free. Averaging over the observed
//! dimensions keeps one-shift spin systems from looking systematically
//! better than two-shift ones.

use thiserror::Error;

use crate::model::{AnchorSubset, ProteinSequence, ReferenceStats, ResidueCode, SpinSystem};

#[derive(Debug, Error, PartialEq)]
pub enum TypingError {
    #[error("spin system '{0}' has no intra-residue shifts to type")]
    NoIntraShifts(String),
}

/// Tunables for typing and anchor detection. All defaults are recorded in
/// run metadata; none of them is physically canonical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypingParams {
    /// Maximum type score admitted into a candidate set.
    pub cutoff: f64,
    /// Minimum per-residue uniqueness for anchor membership.
    pub min_uniqueness: f64,
    /// Maximum anchor subset length.
    pub max_len: usize,
    /// Maximum number of anchor subsets returned.
    pub max_subsets: usize,
    /// Added to the Cα term when a non-glycine hypothesis faces a spin
    /// without an observed Cβ: absence is weak evidence, not disqualifying.
    pub missing_cb_penalty: f64,
    /// Uniqueness bonus for the categorical presence/absence of a Cβ
    /// dimension (glycine against everything else).
    pub glycine_bonus: f64,
    /// Treat proline as never anchorable (it carries no amide proton, so
    /// no spin system is ever observed for it).
    pub exclude_proline: bool,
}

impl Default for TypingParams {
    fn default() -> Self {
        TypingParams {
            cutoff: 6.0,
            min_uniqueness: 0.3,
            max_len: 6,
            max_subsets: 32,
            missing_cb_penalty: 1.0,
            glycine_bonus: 3.0,
            exclude_proline: true,
        }
    }
}

/// How well a spin system's intra shifts fit one residue type; lower is
/// better, 0 is an exact hit on the type means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeScore {
    pub residue: ResidueCode,
    pub score: f64,
}

/// Normalized squared deviation of the spin's intra shifts from the
/// reference statistics of `res`, averaged over observed dimensions.
///
/// Glycine is categorical: an observed Cβ makes the glycine hypothesis
/// impossible (+∞), while a missing Cβ under a non-glycine hypothesis
/// only adds `missing_cb_penalty`.
pub fn type_score(
    spin: &SpinSystem,
    res: ResidueCode,
    stats: &ReferenceStats,
    params: &TypingParams,
) -> Result<TypeScore, TypingError> {
    if !spin.has_intra() {
        return Err(TypingError::NoIntraShifts(spin.id.clone()));
    }
    let stat = stats.get(res);

    if !res.has_beta_carbon() && spin.cb_i.is_some() {
        return Ok(TypeScore {
            residue: res,
            score: f64::INFINITY,
        });
    }

    let mut sum = 0.0;
    let mut dims = 0usize;
    if let Some(ca) = spin.ca_i {
        let z = (ca.ppm() - stat.ca.mean) / stat.ca.sd;
        let mut term = z * z;
        if res.has_beta_carbon() && spin.cb_i.is_none() {
            term += params.missing_cb_penalty;
        }
        sum += term;
        dims += 1;
    }
    if let (Some(cb), Some(cb_stat)) = (spin.cb_i, stat.cb) {
        let z = (cb.ppm() - cb_stat.mean) / cb_stat.sd;
        sum += z * z;
        dims += 1;
    }
    debug_assert!(dims > 0);
    Ok(TypeScore {
        residue: res,
        score: sum / dims as f64,
    })
}

/// All residue types whose score is within `cutoff`, best first, ties
/// broken alphabetically by one-letter code. Empty when the spin has no
/// intra shifts or nothing fits.
pub fn candidate_types(
    spin: &SpinSystem,
    stats: &ReferenceStats,
    cutoff: f64,
    params: &TypingParams,
) -> Vec<TypeScore> {
    if !spin.has_intra() {
        return Vec::new();
    }
    let mut out: Vec<TypeScore> = ResidueCode::ALL
        .iter()
        .filter_map(|&res| type_score(spin, res, stats, params).ok())
        .filter(|t| t.score <= cutoff)
        .collect();
    out.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.residue.letter().cmp(&b.residue.letter()))
    });
    out
}

/// Separation of one residue type from its nearest neighbor in shift-
/// statistics space: the minimum over all other types of the per-dimension
/// pooled-σ normalized distance between type means. A presence/absence
/// mismatch on the Cβ dimension adds the categorical glycine bonus.
pub fn residue_uniqueness(res: ResidueCode, stats: &ReferenceStats, params: &TypingParams) -> f64 {
    let mut min_sep = f64::INFINITY;
    for &other in &ResidueCode::ALL {
        if other == res {
            continue;
        }
        let sep = pair_separation(res, other, stats, params);
        if sep < min_sep {
            min_sep = sep;
        }
    }
    min_sep
}

fn pair_separation(
    a: ResidueCode,
    b: ResidueCode,
    stats: &ReferenceStats,
    params: &TypingParams,
) -> f64 {
    let sa = stats.get(a);
    let sb = stats.get(b);
    let pooled = |x: f64, y: f64| ((x * x + y * y) / 2.0).sqrt();

    let dca = (sa.ca.mean - sb.ca.mean) / pooled(sa.ca.sd, sb.ca.sd);
    let mut sq = dca * dca;
    let mut bonus = 0.0;
    match (sa.cb, sb.cb) {
        (Some(ca_b), Some(cb_b)) => {
            let dcb = (ca_b.mean - cb_b.mean) / pooled(ca_b.sd, cb_b.sd);
            sq += dcb * dcb;
        }
        (None, None) => {}
        _ => bonus = params.glycine_bonus,
    }
    sq.sqrt() + bonus
}

/// Scan the sequence for maximal runs of consecutive positions whose
/// residue uniqueness reaches `min_uniqueness`; each run, truncated to
/// `max_len`, becomes one anchor subset scored by the sum of member
/// uniqueness. Returns at most `max_subsets`, sorted by descending score
/// then ascending start position; subsets never overlap.
pub fn find_anchor_subsets(
    seq: &ProteinSequence,
    stats: &ReferenceStats,
    params: &TypingParams,
) -> Vec<AnchorSubset> {
    let mut uniq_by_type = [0.0f64; 20];
    for &res in &ResidueCode::ALL {
        uniq_by_type[res.index()] = if params.exclude_proline && res == ResidueCode::Pro {
            f64::NEG_INFINITY
        } else {
            residue_uniqueness(res, stats, params)
        };
    }
    let uniq = |pos: usize| uniq_by_type[seq.residue(pos).index()];

    let mut subsets = Vec::new();
    let mut pos = 0;
    while pos < seq.len() {
        if uniq(pos) < params.min_uniqueness {
            pos += 1;
            continue;
        }
        let run_start = pos;
        while pos < seq.len() && uniq(pos) >= params.min_uniqueness {
            pos += 1;
        }
        let len = (pos - run_start).min(params.max_len);
        if len == 0 {
            continue;
        }
        let residues: Vec<ResidueCode> = (run_start..run_start + len)
            .map(|p| seq.residue(p))
            .collect();
        let score: f64 = (run_start..run_start + len).map(uniq).sum();
        subsets.push(AnchorSubset {
            start_pos: run_start,
            residues,
            uniqueness_score: score,
        });
    }

    subsets.sort_by(|a, b| {
        b.uniqueness_score
            .partial_cmp(&a.uniqueness_score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.start_pos.cmp(&b.start_pos))
    });
    subsets.truncate(params.max_subsets);
    subsets
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::ingest::bundled_reference_stats;
    use crate::model::ChemicalShift;
    use proptest::prelude::*;

    proptest! {
        /// Growing the cutoff can only grow the candidate set.
        #[test]
        fn candidate_sets_monotone_in_cutoff(
            ca in 20.0..70.0f64,
            cb in proptest::option::of(15.0..72.0f64),
            c1 in 0.0..30.0f64,
            c2 in 0.0..30.0f64,
        ) {
            let stats = bundled_reference_stats();
            let params = TypingParams::default();
            let spin = SpinSystem::new(
                "s",
                Some(ChemicalShift::new(ca).unwrap()),
                cb.map(|v| ChemicalShift::new(v).unwrap()),
                None,
                None,
            )
            .unwrap();
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let small: Vec<_> = candidate_types(&spin, &stats, lo, &params)
                .into_iter()
                .map(|t| t.residue)
                .collect();
            let large: Vec<_> = candidate_types(&spin, &stats, hi, &params)
                .into_iter()
                .map(|t| t.residue)
                .collect();
            for r in small {
                prop_assert!(large.contains(&r));
            }
        }

        /// Zero score happens exactly when every observed dimension sits on
        /// the type mean (up to the missing-Cβ penalty for absent Cβ).
        #[test]
        fn zero_score_iff_on_means(ca in 20.0..70.0f64, cb in 15.0..72.0f64) {
            let stats = bundled_reference_stats();
            let params = TypingParams::default();
            let spin = SpinSystem::new(
                "s",
                Some(ChemicalShift::new(ca).unwrap()),
                Some(ChemicalShift::new(cb).unwrap()),
                None,
                None,
            )
            .unwrap();
            for res in ResidueCode::ALL {
                let t = type_score(&spin, res, &stats, &params).unwrap();
                let stat = stats.get(res);
                let on_means = stat
                    .cb
                    .map(|s| ca == stat.ca.mean && cb == s.mean)
                    .unwrap_or(false);
                prop_assert_eq!(t.score == 0.0, on_means);
            }
        }
    }
}
