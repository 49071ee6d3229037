//! Automated sequential assignment of protein backbone NMR data.
//!
//! Given a protein sequence and a table of spin systems (intra-residue and
//! preceding-residue Cα/Cβ chemical shifts from HNCACB/CBCA(CO)NH-style
//! experiments), this crate maps each spin system to a sequence position in
//! three steps:
//!
//! 1. **Anchor detection** ([`typing`]) — scan the sequence for short
//!    stretches of residues whose shift statistics make them easy to
//!    identify.
//! 2. **Anchor matching** ([`linking`]) — match those stretches to chains
//!    of sequentially linked spin systems under a rising tolerance
//!    schedule, collapsing each match into a pseudoresidue pinned to its
//!    position.
//! 3. **Assembly** ([`search`]) — order pseudoresidues and remaining spin
//!    systems into a chain by multi-start greedy search (or A*, or an
//!    exhaustive oracle for verification), then expand into a
//!    per-position assignment.
//!
//! [`synth`] generates benchmark datasets with planted ground truth and
//! evaluates predictions against it; [`ingest`] handles all file formats;
//! [`pipeline`] wires the steps together.

pub mod ingest;
pub mod linking;
pub mod model;
pub mod pipeline;
pub mod search;
pub mod synth;
pub mod typing;

pub use ingest::DatasetBundle;
pub use model::{
    Assignment, ChemicalShift, ProteinSequence, Pseudoresidue, ReferenceStats, ResidueCode,
    ScoringConfig, SpinSystem, ToleranceSchedule,
};
pub use pipeline::{run_assign, AssignOutcome, AssignParams, Strategy};
pub use typing::TypingParams;
