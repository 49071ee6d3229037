//! Command-line interface: `assign` runs the three-step pipeline on real
//! or generated data, `generate` writes synthetic datasets with planted
//! truth, `evaluate` scores an assignment against that truth.
//!
//! Exit codes are a stable contract: 0 success, 2 unreadable or malformed
//! input, 3 infeasible anchors, 1 anything else. Stdout carries only data;
//! diagnostics go to stderr. Every run writes a `run_metadata.json`
//! sufficient to reproduce it exactly, with no timestamps, so identical
//! invocations produce byte-identical output trees.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use backbone_assign::ingest;
use backbone_assign::model::{ScoringConfig, ToleranceSchedule};
use backbone_assign::pipeline::{run_assign, AssignParams, Strategy};
use backbone_assign::search::SearchError;
use backbone_assign::synth::{evaluate_assignment, generate_dataset, GeneratorConfig};
use backbone_assign::typing::TypingParams;
use backbone_assign::{Assignment, DatasetBundle};

/// Environment variable overriding the default reference-statistics path.
const STATS_ENV: &str = "BACKBONE_ASSIGN_STATS";
const DEFAULT_STATS_PATH: &str = "data/reference_stats.tsv";

#[derive(Parser)]
#[command(
    name = "backbone-assign",
    version,
    about = "Automated sequential assignment of protein backbone NMR data",
    after_help = "Default tunables: cutoff 6.0, min-uniqueness 0.3, max-subset-len 6, \
                  max-subsets 32, schedule 0.1/0.05/0.2 ppm, sigma-link 0.2 ppm, \
                  break penalty 10.0, unplaced penalty 12.0. Stats resolution: --stats flag, then \
                  $BACKBONE_ASSIGN_STATS, then ./data/reference_stats.tsv, then the \
                  built-in copy of the shipped table."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign spin systems to sequence positions.
    Assign(AssignArgs),
    /// Generate a synthetic spin-system dataset with known ground truth.
    Generate(GenerateArgs),
    /// Score an assignment against a ground-truth table.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Greedy,
    Astar,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::Greedy => Strategy::Greedy,
            StrategyArg::Astar => Strategy::Astar,
        }
    }
}

#[derive(Args, Debug)]
struct ScoringArgs {
    /// Link-noise scale in ppm for σ-normalized link errors.
    #[arg(long, default_value_t = 0.2)]
    sigma_link: f64,
    /// Cost of an adjacent pair with no usable link.
    #[arg(long, default_value_t = 10.0)]
    break_penalty: f64,
    /// Cost per chain item left out of the assembly.
    #[arg(long, default_value_t = 12.0)]
    unplaced_penalty: f64,
}

impl ScoringArgs {
    fn to_config(&self) -> ScoringConfig {
        ScoringConfig {
            sigma_link: self.sigma_link,
            break_penalty: self.break_penalty,
            unplaced_penalty: self.unplaced_penalty,
        }
    }
}

#[derive(Args, Debug)]
struct AssignArgs {
    /// FASTA-like protein sequence file.
    #[arg(long)]
    sequence: PathBuf,
    /// Spin-system table (TSV).
    #[arg(long)]
    spins: PathBuf,
    /// Reference statistics table (TSV); see stats resolution in --help.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Assembly strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
    strategy: StrategyArg,
    /// First anchor-matching tolerance in ppm.
    #[arg(long, default_value_t = 0.1)]
    schedule_start: f64,
    /// Tolerance increment in ppm.
    #[arg(long, default_value_t = 0.05)]
    schedule_step: f64,
    /// Final tolerance in ppm (schedule clamps here).
    #[arg(long, default_value_t = 0.2)]
    schedule_max: f64,
    /// Maximum type score admitted into a candidate set.
    #[arg(long, default_value_t = 6.0)]
    cutoff: f64,
    /// Minimum residue uniqueness for anchor membership.
    #[arg(long, default_value_t = 0.3)]
    min_uniqueness: f64,
    /// Maximum anchor subset length.
    #[arg(long, default_value_t = 6)]
    max_subset_len: usize,
    /// Maximum number of anchor subsets.
    #[arg(long, default_value_t = 32)]
    max_subsets: usize,
    /// Score penalty for a missing Cβ under a non-glycine hypothesis.
    #[arg(long, default_value_t = 1.0)]
    missing_cb_penalty: f64,
    /// Uniqueness bonus for the categorical Cβ presence/absence split.
    #[arg(long, default_value_t = 3.0)]
    glycine_bonus: f64,
    /// Let proline positions join anchor subsets (they are excluded by
    /// default because proline yields no observable spin system).
    #[arg(long, default_value_t = false)]
    allow_proline_anchors: bool,
    /// Worker threads for the multi-start greedy search.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    scoring: ScoringArgs,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// FASTA-like protein sequence file.
    #[arg(long)]
    sequence: PathBuf,
    /// Reference statistics table (TSV); see stats resolution in --help.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    /// Measurement noise σ in ppm.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Per-field dropout probability.
    #[arg(long, default_value_t = 0.0)]
    missing_prob: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also suppress the i−1 evidence of residues following a proline.
    #[arg(long, default_value_t = false)]
    strict_proline: bool,
    /// Raw-ppm gate for the collision-freedom certificate.
    #[arg(long, default_value_t = 0.2)]
    collision_gate: f64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Assignment table written by `assign`.
    #[arg(long)]
    assignment: PathBuf,
    /// Ground-truth table written by `generate`.
    #[arg(long)]
    truth: PathBuf,
    /// Spin-system table the assignment refers to.
    #[arg(long)]
    spins: PathBuf,
    /// FASTA-like protein sequence file.
    #[arg(long)]
    sequence: PathBuf,
    /// Output directory (created if absent).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
}

enum CliError {
    /// Unreadable or malformed input: exit 2.
    Parse(String),
    /// Anchors cannot coexist on the sequence frame: exit 3.
    InfeasibleAnchors(String),
    /// Anything else: exit 1.
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::InfeasibleAnchors(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::InfeasibleAnchors(m) | CliError::Other(m) => m,
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> CliError {
        match e {
            SearchError::InfeasibleAnchors(_) => CliError::InfeasibleAnchors(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_file<T>(
    path: &Path,
    parse: impl FnOnce(&str) -> Result<T, ingest::ParseError>,
) -> Result<T, CliError> {
    let text = read_input(path)?;
    parse(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Resolve the reference statistics: explicit flag, then the environment
/// override, then the conventional data path, then the built-in copy.
fn resolve_stats(
    flag: &Option<PathBuf>,
) -> Result<(backbone_assign::ReferenceStats, String), CliError> {
    if let Some(path) = flag {
        return Ok((
            parse_file(path, ingest::load_reference_stats)?,
            path.display().to_string(),
        ));
    }
    if let Ok(path) = std::env::var(STATS_ENV) {
        let path = PathBuf::from(path);
        return Ok((
            parse_file(&path, ingest::load_reference_stats)?,
            path.display().to_string(),
        ));
    }
    let default = Path::new(DEFAULT_STATS_PATH);
    if default.exists() {
        return Ok((
            parse_file(default, ingest::load_reference_stats)?,
            default.display().to_string(),
        ));
    }
    Ok((ingest::bundled_reference_stats(), "builtin".to_string()))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Other(e.to_string()))
}

#[derive(Serialize)]
struct RunMetadata {
    command: &'static str,
    inputs: BTreeMap<&'static str, String>,
    stats_source: Option<String>,
    params: serde_json::Value,
    outputs: Vec<&'static str>,
}

fn cmd_assign(args: &AssignArgs) -> Result<(), CliError> {
    let sequence = parse_file(&args.sequence, ingest::parse_sequence)?;
    let spins = parse_file(&args.spins, ingest::parse_spin_table)?;
    let (stats, stats_source) = resolve_stats(&args.stats)?;

    let schedule =
        ToleranceSchedule::new(args.schedule_start, args.schedule_step, args.schedule_max)
            .map_err(|e| CliError::Parse(e.to_string()))?;
    let params = AssignParams {
        typing: TypingParams {
            cutoff: args.cutoff,
            min_uniqueness: args.min_uniqueness,
            max_len: args.max_subset_len,
            max_subsets: args.max_subsets,
            missing_cb_penalty: args.missing_cb_penalty,
            glycine_bonus: args.glycine_bonus,
            exclude_proline: !args.allow_proline_anchors,
        },
        schedule,
        scoring: args.scoring.to_config(),
        strategy: args.strategy.into(),
        threads: args.threads.max(1),
    };

    let bundle = DatasetBundle {
        sequence,
        spins,
        stats,
    };
    let outcome = run_assign(&bundle, &params)?;

    let assignment_tsv = ingest::write_assignment(
        &outcome.assignment,
        &bundle.sequence,
        &bundle.spins,
        &params.scoring,
    );
    write_output(&args.out, "assignment.tsv", &assignment_tsv)?;
    write_output(&args.out, "report.json", &to_json(&outcome.report)?)?;

    let metadata = RunMetadata {
        command: "assign",
        inputs: BTreeMap::from([
            ("sequence", args.sequence.display().to_string()),
            ("spins", args.spins.display().to_string()),
        ]),
        stats_source: Some(stats_source),
        params: serde_json::json!({
            "strategy": outcome.report.strategy,
            "cutoff": args.cutoff,
            "min_uniqueness": args.min_uniqueness,
            "max_subset_len": args.max_subset_len,
            "max_subsets": args.max_subsets,
            "missing_cb_penalty": args.missing_cb_penalty,
            "glycine_bonus": args.glycine_bonus,
            "allow_proline_anchors": args.allow_proline_anchors,
            "schedule_start": args.schedule_start,
            "schedule_step": args.schedule_step,
            "schedule_max": args.schedule_max,
            "sigma_link": args.scoring.sigma_link,
            "break_penalty": args.scoring.break_penalty,
            "unplaced_penalty": args.scoring.unplaced_penalty,
            "threads": args.threads,
        }),
        outputs: vec!["assignment.tsv", "report.json", "run_metadata.json"],
    };
    write_output(&args.out, "run_metadata.json", &to_json(&metadata)?)?;

    println!("positions_assigned\t{}", outcome.report.positions_assigned);
    println!("subsets_found\t{}", outcome.report.subsets_found);
    println!("subsets_matched\t{}", outcome.report.matched.len());
    println!("subsets_unmatched\t{}", outcome.report.unmatched.len());
    println!("assembly_error\t{}", outcome.report.assembly_error);
    println!("assignment_error\t{}", outcome.report.assignment_error);
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let sequence = parse_file(&args.sequence, ingest::parse_sequence)?;
    let (stats, stats_source) = resolve_stats(&args.stats)?;

    let cfg = GeneratorConfig {
        noise_sigma: args.noise_sigma,
        missing_prob: args.missing_prob,
        seed: args.seed,
        strict_proline: args.strict_proline,
        collision_gate: args.collision_gate,
    };
    let (spins, truth) = generate_dataset(&sequence, &stats, &cfg);

    write_output(&args.out, "spins.tsv", &ingest::write_spin_table(&spins))?;
    write_output(&args.out, "truth.tsv", &ingest::write_truth(&truth.mapping))?;

    #[derive(Serialize)]
    struct ConfigEcho<'a> {
        #[serde(flatten)]
        config: &'a GeneratorConfig,
        collision_free: bool,
        n_spins: usize,
    }
    let echo = ConfigEcho {
        config: &truth.config,
        collision_free: truth.collision_free,
        n_spins: spins.len(),
    };
    write_output(&args.out, "generator_config.json", &to_json(&echo)?)?;

    let metadata = RunMetadata {
        command: "generate",
        inputs: BTreeMap::from([("sequence", args.sequence.display().to_string())]),
        stats_source: Some(stats_source),
        params: serde_json::json!({
            "noise_sigma": args.noise_sigma,
            "missing_prob": args.missing_prob,
            "seed": args.seed,
            "strict_proline": args.strict_proline,
            "collision_gate": args.collision_gate,
        }),
        outputs: vec![
            "spins.tsv",
            "truth.tsv",
            "generator_config.json",
            "run_metadata.json",
        ],
    };
    write_output(&args.out, "run_metadata.json", &to_json(&metadata)?)?;

    println!("n_spins\t{}", spins.len());
    println!("collision_free\t{}", truth.collision_free);
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let sequence = parse_file(&args.sequence, ingest::parse_sequence)?;
    let spins = parse_file(&args.spins, ingest::parse_spin_table)?;
    let mapping = parse_file(&args.assignment, ingest::parse_assignment)?;
    let truth_mapping = parse_file(&args.truth, ingest::parse_truth)?;

    let scoring = args.scoring.to_config();

    // Rebuild the predicted assignment from the file, recomputing its
    // chain error from the spin data rather than trusting any stored sum.
    let mut pred = Assignment {
        mapping,
        total_error: 0.0,
        unassigned: Default::default(),
    };
    let assigned: std::collections::BTreeSet<&String> = pred.mapping.values().collect();
    pred.unassigned = spins
        .iter()
        .map(|s| s.id.clone())
        .filter(|id| !assigned.contains(id))
        .collect();
    let positions: Vec<usize> = pred.mapping.keys().copied().collect();
    let by_id: BTreeMap<&str, &backbone_assign::SpinSystem> =
        spins.iter().map(|s| (s.id.as_str(), s)).collect();
    for pair in positions.windows(2) {
        let (pa, pb) = (pair[0], pair[1]);
        let (Some(sa), Some(sb)) = (
            by_id.get(pred.mapping[&pa].as_str()),
            by_id.get(pred.mapping[&pb].as_str()),
        ) else {
            return Err(CliError::Parse(format!(
                "{}: assignment references spins missing from {}",
                args.assignment.display(),
                args.spins.display()
            )));
        };
        let err = backbone_assign::linking::link_error(*sa, *sb, &scoring);
        pred.total_error += if pb == pa + 1 {
            backbone_assign::linking::pair_cost(&err, &scoring)
        } else {
            scoring.break_penalty
        };
    }

    let truth = backbone_assign::synth::GroundTruth {
        mapping: truth_mapping,
        config: GeneratorConfig::default(),
        collision_free: false,
    };
    let report = evaluate_assignment(&pred, &truth, &spins, &sequence, &scoring)
        .map_err(|e| CliError::Parse(e.to_string()))?;

    write_output(&args.out, "evaluation.json", &to_json(&report)?)?;
    let metadata = RunMetadata {
        command: "evaluate",
        inputs: BTreeMap::from([
            ("assignment", args.assignment.display().to_string()),
            ("truth", args.truth.display().to_string()),
            ("spins", args.spins.display().to_string()),
            ("sequence", args.sequence.display().to_string()),
        ]),
        stats_source: None,
        params: serde_json::json!({
            "sigma_link": args.scoring.sigma_link,
            "break_penalty": args.scoring.break_penalty,
            "unplaced_penalty": args.scoring.unplaced_penalty,
        }),
        outputs: vec!["evaluation.json", "run_metadata.json"],
    };
    write_output(&args.out, "run_metadata.json", &to_json(&metadata)?)?;

    println!("n_positions\t{}", report.n_positions);
    println!("n_detectable\t{}", report.n_detectable);
    println!("n_assigned\t{}", report.n_assigned);
    println!("n_correct\t{}", report.n_correct);
    println!("accuracy\t{}", report.accuracy);
    println!("total_error_pred\t{}", report.total_error_pred);
    println!("total_error_truth\t{}", report.total_error_truth);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Assign(args) => cmd_assign(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
