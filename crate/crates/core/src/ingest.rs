//! Parsing and serialization of every on-disk format: FASTA-like sequence
//! files, the spin-system table, reference statistics, assignment output,
//! and the ground-truth table written by the generator.
//!
//! All tables are tab-separated with a required header, "." as the missing
//! sentinel, UTF-8, LF or CRLF accepted on input and LF emitted. Numbers
//! are written with the shortest representation that parses back equal, so
//! serialize → parse is exact.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    Assignment, ChemicalShift, ModelError, ProteinSequence, ReferenceStats, ResidueCode,
    ResidueStat, ScoringConfig, ShiftStat, SpinSystem,
};

/// Carbon shifts outside this window are rejected on ingest: it is a
/// generous envelope around every physically observed backbone carbon
/// shift and catches unit mistakes (Hz vs ppm).
pub const CARBON_WINDOW: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Everything `assign` needs: the sequence, the observed spin systems, and
/// the reference statistics. Extra spins beyond the sequence length are
/// allowed (spectroscopy artifacts happen).
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub sequence: ProteinSequence,
    pub spins: Vec<SpinSystem>,
    pub stats: ReferenceStats,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

/// Parse a FASTA-like sequence: optional ">" header lines, residue letters
/// on the remaining lines, case-insensitive, whitespace ignored.
pub fn parse_sequence(text: &str) -> Result<ProteinSequence, ParseError> {
    let mut residues = Vec::new();
    for (line_no, line) in lines(text) {
        if line.starts_with('>') {
            continue;
        }
        for (col, c) in line.chars().enumerate() {
            if c.is_whitespace() {
                continue;
            }
            match ResidueCode::from_letter(c) {
                Some(r) => residues.push(r),
                None => {
                    return Err(ParseError::new(
                        line_no,
                        format!("column {}: unknown residue letter '{c}'", col + 1),
                    ))
                }
            }
        }
    }
    if residues.is_empty() {
        return Err(ParseError::new(0, "empty sequence"));
    }
    ProteinSequence::new(residues).map_err(|e| ParseError::new(0, e.to_string()))
}

/// FASTA-like writer, 60 residues per line.
pub fn write_sequence(seq: &ProteinSequence, header: &str) -> String {
    let mut out = format!(">{header}\n");
    for chunk in seq.residues().chunks(60) {
        for r in chunk {
            out.push(r.letter());
        }
        out.push('\n');
    }
    out
}

fn parse_shift_cell(
    cell: &str,
    line_no: usize,
    column: &str,
) -> Result<Option<ChemicalShift>, ParseError> {
    if cell == "." {
        return Ok(None);
    }
    let value: f64 = cell.parse().map_err(|_| {
        ParseError::new(
            line_no,
            format!("{column}: expected a number or '.', got '{cell}'"),
        )
    })?;
    if !value.is_finite() {
        return Err(ParseError::new(
            line_no,
            format!("{column}: shift must be finite, got '{cell}'"),
        ));
    }
    if value < CARBON_WINDOW.0 || value > CARBON_WINDOW.1 {
        return Err(ParseError::new(
            line_no,
            format!(
                "{column}: carbon shift {value} ppm outside sanity window [{}, {}]",
                CARBON_WINDOW.0, CARBON_WINDOW.1
            ),
        ));
    }
    Ok(Some(ChemicalShift::new(value).unwrap()))
}

const SPIN_COLUMNS: [&str; 5] = ["id", "ca_i", "cb_i", "ca_prev", "cb_prev"];

/// Parse the spin-system table. The first five columns are fixed; any
/// further columns are preserved verbatim as passthrough on each spin.
pub fn parse_spin_table(text: &str) -> Result<Vec<SpinSystem>, ParseError> {
    let mut rows = lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = rows
        .next()
        .ok_or_else(|| ParseError::new(0, "missing header"))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() < SPIN_COLUMNS.len() || fields[..5] != SPIN_COLUMNS {
        return Err(ParseError::new(
            header_line,
            format!(
                "expected header starting with '{}', got '{header}'",
                SPIN_COLUMNS.join("\t")
            ),
        ));
    }
    let extra_names: Vec<String> = fields[5..].iter().map(|s| s.to_string()).collect();

    let mut spins = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (line_no, line) in rows {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != fields.len() {
            return Err(ParseError::new(
                line_no,
                format!("expected {} columns, got {}", fields.len(), cells.len()),
            ));
        }
        let id = cells[0].to_string();
        if id.is_empty() || id == "." {
            return Err(ParseError::new(line_no, "empty spin id"));
        }
        if !seen.insert(id.clone()) {
            return Err(ParseError::new(
                line_no,
                format!("duplicate spin id '{id}'"),
            ));
        }
        let ca_i = parse_shift_cell(cells[1], line_no, "ca_i")?;
        let cb_i = parse_shift_cell(cells[2], line_no, "cb_i")?;
        let ca_prev = parse_shift_cell(cells[3], line_no, "ca_prev")?;
        let cb_prev = parse_shift_cell(cells[4], line_no, "cb_prev")?;
        let mut spin = SpinSystem::new(id, ca_i, cb_i, ca_prev, cb_prev).map_err(|e| match e {
            ModelError::EmptySpinSystem(id) => {
                ParseError::new(line_no, format!("spin '{id}' has no observable shifts"))
            }
            other => ParseError::new(line_no, other.to_string()),
        })?;
        spin.extra = extra_names
            .iter()
            .cloned()
            .zip(cells[5..].iter().map(|s| s.to_string()))
            .collect();
        spins.push(spin);
    }
    Ok(spins)
}

fn shift_cell(shift: Option<ChemicalShift>) -> String {
    match shift {
        Some(s) => format!("{}", s.ppm()),
        None => ".".to_string(),
    }
}

/// Serialize spin systems in the table format accepted by
/// [`parse_spin_table`]. Passthrough columns use the first spin's names.
pub fn write_spin_table(spins: &[SpinSystem]) -> String {
    let mut header: Vec<String> = SPIN_COLUMNS.iter().map(|s| s.to_string()).collect();
    if let Some(first) = spins.first() {
        header.extend(first.extra.iter().map(|(name, _)| name.clone()));
    }
    let mut out = header.join("\t");
    out.push('\n');
    for spin in spins {
        let mut row = vec![
            spin.id.clone(),
            shift_cell(spin.ca_i),
            shift_cell(spin.cb_i),
            shift_cell(spin.ca_prev),
            shift_cell(spin.cb_prev),
        ];
        row.extend(spin.extra.iter().map(|(_, v)| v.clone()));
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

const STATS_HEADER: &str = "res\tca_mean\tca_sd\tcb_mean\tcb_sd";

/// Parse the per-residue reference statistics table: exactly one row per
/// residue code, glycine's Cβ columns as ".".
pub fn load_reference_stats(text: &str) -> Result<ReferenceStats, ParseError> {
    let mut rows = lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = rows
        .next()
        .ok_or_else(|| ParseError::new(0, "missing header"))?;
    if header != STATS_HEADER {
        return Err(ParseError::new(
            header_line,
            format!("expected header '{STATS_HEADER}', got '{header}'"),
        ));
    }

    let parse_num = |cell: &str, line_no: usize, what: &str| -> Result<Option<f64>, ParseError> {
        if cell == "." {
            return Ok(None);
        }
        cell.parse::<f64>().map(Some).map_err(|_| {
            ParseError::new(line_no, format!("{what}: expected a number, got '{cell}'"))
        })
    };

    let mut entries: BTreeMap<ResidueCode, ResidueStat> = BTreeMap::new();
    for (line_no, line) in rows {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 5 {
            return Err(ParseError::new(
                line_no,
                format!("expected 5 columns, got {}", cells.len()),
            ));
        }
        let mut chars = cells[0].chars();
        let res = match (
            chars.next().and_then(ResidueCode::from_letter),
            chars.next(),
        ) {
            (Some(r), None) => r,
            _ => {
                return Err(ParseError::new(
                    line_no,
                    format!("unknown residue code '{}'", cells[0]),
                ))
            }
        };
        if entries.contains_key(&res) {
            return Err(ParseError::new(line_no, format!("duplicate residue {res}")));
        }
        let ca_mean = parse_num(cells[1], line_no, "ca_mean")?
            .ok_or_else(|| ParseError::new(line_no, "ca_mean may not be '.'"))?;
        let ca_sd = parse_num(cells[2], line_no, "ca_sd")?
            .ok_or_else(|| ParseError::new(line_no, "ca_sd may not be '.'"))?;
        let cb_mean = parse_num(cells[3], line_no, "cb_mean")?;
        let cb_sd = parse_num(cells[4], line_no, "cb_sd")?;
        let cb = match (cb_mean, cb_sd) {
            (Some(mean), Some(sd)) => Some(ShiftStat { mean, sd }),
            (None, None) => None,
            _ => {
                return Err(ParseError::new(
                    line_no,
                    "cb_mean and cb_sd must both be numbers or both '.'",
                ))
            }
        };
        entries.insert(
            res,
            ResidueStat {
                ca: ShiftStat {
                    mean: ca_mean,
                    sd: ca_sd,
                },
                cb,
            },
        );
    }
    ReferenceStats::new(entries).map_err(|e| ParseError::new(0, e.to_string()))
}

/// Serialize reference statistics in the format accepted by
/// [`load_reference_stats`], one row per residue in canonical order.
pub fn write_reference_stats(stats: &ReferenceStats) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for res in ResidueCode::ALL {
        let stat = stats.get(res);
        let (cb_mean, cb_sd) = match stat.cb {
            Some(cb) => (format!("{}", cb.mean), format!("{}", cb.sd)),
            None => (".".to_string(), ".".to_string()),
        };
        out.push_str(&format!(
            "{res}\t{}\t{}\t{cb_mean}\t{cb_sd}\n",
            stat.ca.mean, stat.ca.sd
        ));
    }
    out
}

/// The reference statistics shipped with the artifact
/// (`data/reference_stats.tsv`), compiled in so the library works without
/// a data directory.
pub fn bundled_reference_stats() -> ReferenceStats {
    load_reference_stats(include_str!("../../../data/reference_stats.tsv"))
        .expect("bundled reference statistics are valid")
}

/// Serialize an assignment as one row per sequence position (1-based in
/// the file), with "." for unassigned positions. `link_error_to_next`
/// holds the raw link error between a position's spin and the next
/// position's spin when both are assigned, else ".". Byte-deterministic
/// for identical inputs.
pub fn write_assignment(
    a: &Assignment,
    seq: &ProteinSequence,
    spins: &[SpinSystem],
    cfg: &ScoringConfig,
) -> String {
    let by_id: BTreeMap<&str, &SpinSystem> = spins.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = String::from("pos\tres\tspin_id\tlink_error_to_next\n");
    for pos in 0..seq.len() {
        let id_cell = a.mapping.get(&pos).cloned().unwrap_or_else(|| ".".into());
        let link_cell = match (a.mapping.get(&pos), a.mapping.get(&(pos + 1))) {
            (Some(here), Some(next)) => {
                match (by_id.get(here.as_str()), by_id.get(next.as_str())) {
                    (Some(sa), Some(sb)) => {
                        format!("{}", crate::linking::link_error(*sa, *sb, cfg).value)
                    }
                    _ => ".".to_string(),
                }
            }
            _ => ".".to_string(),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            pos + 1,
            seq.residue(pos),
            id_cell,
            link_cell
        ));
    }
    out
}

/// Read back the position → spin-id mapping from an assignment file
/// written by [`write_assignment`]. Positions return to 0-based.
pub fn parse_assignment(text: &str) -> Result<BTreeMap<usize, String>, ParseError> {
    let mut rows = lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = rows
        .next()
        .ok_or_else(|| ParseError::new(0, "missing header"))?;
    if header != "pos\tres\tspin_id\tlink_error_to_next" {
        return Err(ParseError::new(
            header_line,
            "unrecognized assignment header",
        ));
    }
    let mut mapping = BTreeMap::new();
    for (line_no, line) in rows {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(ParseError::new(
                line_no,
                format!("expected 4 columns, got {}", cells.len()),
            ));
        }
        let pos: usize = cells[0]
            .parse()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| ParseError::new(line_no, format!("bad position '{}'", cells[0])))?;
        if cells[2] != "." && mapping.insert(pos - 1, cells[2].to_string()).is_some() {
            return Err(ParseError::new(
                line_no,
                format!("duplicate position {pos}"),
            ));
        }
    }
    Ok(mapping)
}

/// Serialize a ground-truth mapping (`pos` 1-based, `spin_id`).
pub fn write_truth(mapping: &BTreeMap<usize, String>) -> String {
    let mut out = String::from("pos\tspin_id\n");
    for (pos, id) in mapping {
        out.push_str(&format!("{}\t{}\n", pos + 1, id));
    }
    out
}

/// Read back a ground-truth mapping written by [`write_truth`].
pub fn parse_truth(text: &str) -> Result<BTreeMap<usize, String>, ParseError> {
    let mut rows = lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (header_line, header) = rows
        .next()
        .ok_or_else(|| ParseError::new(0, "missing header"))?;
    if header != "pos\tspin_id" {
        return Err(ParseError::new(header_line, "unrecognized truth header"));
    }
    let mut mapping = BTreeMap::new();
    for (line_no, line) in rows {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 2 {
            return Err(ParseError::new(
                line_no,
                format!("expected 2 columns, got {}", cells.len()),
            ));
        }
        let pos: usize = cells[0]
            .parse()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| ParseError::new(line_no, format!("bad position '{}'", cells[0])))?;
        if mapping.insert(pos - 1, cells[1].to_string()).is_some() {
            return Err(ParseError::new(
                line_no,
                format!("duplicate position {pos}"),
            ));
        }
    }
    Ok(mapping)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_shift() -> impl Strategy<Value = Option<ChemicalShift>> {
        proptest::option::of((0.0..100.0f64).prop_map(|v| ChemicalShift::new(v).unwrap()))
    }

    fn arb_table() -> impl Strategy<Value = Vec<SpinSystem>> {
        proptest::collection::vec((arb_shift(), arb_shift(), arb_shift(), arb_shift()), 0..12)
            .prop_map(|rows| {
                rows.into_iter()
                    .enumerate()
                    .filter_map(|(i, (ca, cb, cap, cbp))| {
                        SpinSystem::new(format!("s{i:03}"), ca, cb, cap, cbp).ok()
                    })
                    .collect()
            })
    }

    proptest! {
        /// Serialize → parse is the identity on spin tables.
        #[test]
        fn spin_table_round_trip(spins in arb_table()) {
            let text = write_spin_table(&spins);
            let parsed = parse_spin_table(&text).unwrap();
            prop_assert_eq!(parsed, spins);
        }

        /// Serialize → parse is the identity on sequences.
        #[test]
        fn sequence_round_trip(letters in proptest::collection::vec(0usize..20, 2..80)) {
            let residues: Vec<ResidueCode> =
                letters.iter().map(|&i| ResidueCode::ALL[i]).collect();
            let seq = ProteinSequence::new(residues).unwrap();
            let parsed = parse_sequence(&write_sequence(&seq, "t")).unwrap();
            prop_assert_eq!(parsed, seq);
        }

        /// Serialize → parse is the identity on reference statistics.
        #[test]
        fn stats_round_trip(
            means in proptest::collection::vec(10.0..80.0f64, 20),
            sds in proptest::collection::vec(0.1..8.0f64, 20),
        ) {
            let mut entries = std::collections::BTreeMap::new();
            for (i, res) in ResidueCode::ALL.into_iter().enumerate() {
                entries.insert(res, ResidueStat {
                    ca: ShiftStat { mean: means[i], sd: sds[i] },
                    cb: res.has_beta_carbon().then(|| ShiftStat {
                        mean: means[i] / 2.0,
                        sd: sds[i] / 2.0,
                    }),
                });
            }
            let stats = ReferenceStats::new(entries).unwrap();
            let parsed = load_reference_stats(&write_reference_stats(&stats)).unwrap();
            prop_assert_eq!(parsed, stats);
        }
    }
}
