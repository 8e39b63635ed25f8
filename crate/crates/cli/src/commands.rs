//! Subcommand implementations.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use mbseq::analysis::{gram_and_coherence, interferer_power, recovery_condition, to_db};
use mbseq::bases::dpss;
use mbseq::designer::{design_set, Provenance, SequenceSet};
use mbseq::oracle::exhaustive_pairset;
use serde_json::json;

use crate::config::{Baseline, CenterSpec, RunConfig};
use crate::experiments::{fmt_num, run_gain, run_sweep, trial_setup, GAIN_HEADER, SWEEP_HEADER};
use crate::manifest::{
    checksum_mismatches, read_manifest, scaling_note, unix_now, OutputDir, RunManifest,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "mbseq",
    version,
    about = "Design and evaluate multi-branch binary modulation sequences"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured number of trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design one sequence set and write it with a report.
    Design,
    /// Sweep R, alpha or L over repeated trials.
    Sweep,
    /// Mean modulation gain across the interferer band.
    Gain {
        /// Overrides gain.baseline from the config.
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
    },
    /// Slepian basis vectors and concentration eigenvalues.
    Dpss {
        #[arg(long)]
        n: usize,
        /// Half bandwidth in normalized frequency.
        #[arg(long)]
        w: f64,
        #[arg(long, default_value_t = 3)]
        d: usize,
    },
    /// Re-check the files and constraints of a previous run in --out.
    Verify,
    /// Regenerate the exhaustive-enumeration regression fixtures into --out.
    Fixtures,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum BaselineArg {
    Prbs,
    Hadamard,
    SingleFourier,
    SingleSlepian,
    MultiFourier,
    MultiSlepian,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Prbs => Baseline::Prbs,
            BaselineArg::Hadamard => Baseline::Hadamard,
            BaselineArg::SingleFourier => Baseline::SingleFourier,
            BaselineArg::SingleSlepian => Baseline::SingleSlepian,
            BaselineArg::MultiFourier => Baseline::MultiFourier,
            BaselineArg::MultiSlepian => Baseline::MultiSlepian,
        }
    }
}

/// Relative slack used when re-checking coherence constraints after the fact.
const VERIFY_RTOL: f64 = 1e-9;

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand needs --config".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn manifest(
    command: &str,
    config: serde_json::Value,
    seed: u64,
    details: serde_json::Value,
) -> RunManifest {
    RunManifest {
        tool: "mbseq".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config,
        seed,
        started_unix: unix_now(),
        finished_unix: 0,
        scaling_note: scaling_note(),
        files: Vec::new(),
        details,
    }
}

/// Runs the parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match &cli.command {
        Command::Design => cmd_design(cli),
        Command::Sweep => cmd_sweep(cli),
        Command::Gain { baseline } => cmd_gain(cli, baseline.map(Baseline::from)),
        Command::Dpss { n, w, d } => cmd_dpss(&cli.out, *n, *w, *d),
        Command::Verify => cmd_verify(&cli.out),
        Command::Fixtures => cmd_fixtures(&cli.out),
    }
}

/// Header `x1..xn` followed by one row per sequence.
fn set_csv(set: &SequenceSet) -> String {
    let header: Vec<String> = (1..=set.row_len()).map(|i| format!("x{i}")).collect();
    let mut text = header.join(",");
    text.push('\n');
    text.push_str(&set.to_csv());
    text
}

fn parse_set_csv(text: &str, target_rows: usize) -> Result<SequenceSet, CliError> {
    let body = text.split_once('\n').map_or("", |(_, rest)| rest);
    SequenceSet::from_csv(body, target_rows, Provenance::MbRsdpr)
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Interferer centre for a single design. `"random"` takes trial 0's draw, so a
/// rerun and `verify` see the same centre; an omitted `c` designs without one.
fn design_center(cfg: &RunConfig) -> Option<usize> {
    match cfg.c {
        Some(CenterSpec::Named(_)) => trial_setup(cfg, 0).center,
        _ => cfg.fixed_center(),
    }
}

/// Post-hoc metrics computed from the written set alone.
fn set_summary(cfg: &RunConfig, set: &SequenceSet) -> Result<serde_json::Value, CliError> {
    let design = cfg.design_config(design_center(cfg));
    let geometry = design
        .geometry()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let num = |e: mbseq::Error| CliError::Numerical(e.to_string());
    let coherence = gram_and_coherence(set, Some(&geometry.message))
        .map_err(num)?
        .coherence;
    let bound = design
        .coherence
        .magnitude_bound(cfg.alpha, cfg.base_len * cfg.oversampling);
    let power = interferer_power(set, &geometry.interferer).map_err(num)?;
    let kappa = recovery_condition(set, &geometry.message).map_err(num)?;
    Ok(json!({
        "rows": set.rows().len(),
        "center": design.center,
        "complete": set.is_complete(),
        "max_coherence": coherence,
        "coherence_bound": bound,
        "constraints_hold": coherence <= bound * (1.0 + VERIFY_RTOL),
        "interferer_power": fmt_num(power),
        "interferer_power_db": fmt_num(to_db(power)),
        "condition_number": fmt_num(kappa),
    }))
}

fn cmd_design(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let design = cfg.design_config(design_center(&cfg));
    log::info!(
        "designing N = {}, R = {}, alpha = {}, L = {}",
        design.base_len,
        design.oversampling,
        design.alpha.0,
        design.candidates
    );
    if let Some(c) = design.center {
        log::info!("interferer centre c = {c}");
    }
    let (set, report) = design_set(&design).map_err(|e| match e {
        mbseq::Error::Numerical(m) => CliError::Numerical(m),
        other => CliError::Config(other.to_string()),
    })?;
    for b in &report.branches {
        log::info!(
            "branch {}: sdp {:?} in {} iterations, {} of {} candidates feasible",
            b.branch,
            b.sdp_status,
            b.sdp_iterations,
            b.feasible_candidates,
            b.candidates_tried
        );
    }
    let summary = set_summary(&cfg, &set)?;
    let mut out = OutputDir::create(&cli.out)?;
    out.write("sequences.csv", set_csv(&set).as_bytes())?;
    let report_json = json!({ "design": report, "verification": summary });
    out.write(
        "report.json",
        (serde_json::to_string_pretty(&report_json).expect("report serializes") + "\n").as_bytes(),
    )?;
    let config_json = serde_json::to_value(&cfg).expect("config serializes");
    out.finish(manifest("design", config_json, design.seed, report_json))?;
    if !report.completed {
        return Err(CliError::Infeasible(format!(
            "branch {} found no feasible candidate; {} of {} rows written to {}",
            report.branches.len() - 1,
            set.rows().len(),
            design.base_len,
            cli.out.display()
        )));
    }
    if summary["constraints_hold"] != json!(true) {
        return Err(CliError::Numerical(
            "designed set violates its coherence constraints".into(),
        ));
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let rows = run_sweep(&cfg, cli.trials)?;
    let mut out = OutputDir::create(&cli.out)?;
    let records: Vec<Vec<String>> = rows.iter().map(|r| r.csv_record()).collect();
    out.write_csv("sweep.csv", &SWEEP_HEADER, &records)?;
    let trial_records: Vec<Vec<String>> = rows
        .iter()
        .flat_map(|r| {
            r.trials.iter().map(move |t| {
                vec![
                    fmt_num(r.value),
                    t.setup.trial.to_string(),
                    t.setup.seed.to_string(),
                    t.setup
                        .center
                        .map_or_else(|| "none".into(), |c| c.to_string()),
                    t.completed.to_string(),
                    fmt_num(t.interferer_power),
                    fmt_num(t.condition),
                ]
            })
        })
        .collect();
    out.write_csv(
        "trials.csv",
        &[
            "value",
            "trial",
            "seed",
            "center",
            "completed",
            "interferer_power",
            "condition",
        ],
        &trial_records,
    )?;
    let config_json = serde_json::to_value(&cfg).expect("config serializes");
    let details = json!({ "trials": rows.first().map_or(0, |r| r.trials.len()) });
    out.finish(manifest("sweep", config_json, cfg.seed(), details))?;
    Ok(())
}

fn cmd_gain(cli: &Cli, baseline: Option<Baseline>) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let result = run_gain(&cfg, baseline, cli.trials)?;
    let mut out = OutputDir::create(&cli.out)?;
    out.write_csv("gain.csv", &GAIN_HEADER, &result.csv_records())?;
    let config_json = serde_json::to_value(&cfg).expect("config serializes");
    let details = json!({
        "baseline": result.baseline.to_string(),
        "trials": result.trials,
        "usable": result.usable,
    });
    out.finish(manifest("gain", config_json, cfg.seed(), details))?;
    if !result.usable.iter().any(|u| *u) {
        return Err(CliError::Infeasible(
            "no trial produced a usable set".into(),
        ));
    }
    Ok(())
}

fn cmd_dpss(out_dir: &Path, n: usize, w: f64, d: usize) -> Result<(), CliError> {
    let basis = dpss(n, w, d).map_err(|e| CliError::Config(e.to_string()))?;
    let gram = basis.vectors.transpose() * &basis.vectors;
    let ortho_err = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut header = vec!["index".to_string()];
    header.extend((1..=d).map(|k| format!("g{k}")));
    let mut records: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let mut r = vec![i.to_string()];
            r.extend((0..d).map(|k| fmt_num(basis.vectors[(i, k)])));
            r
        })
        .collect();
    let mut lambda = vec!["lambda".to_string()];
    lambda.extend(basis.eigenvalues.iter().map(|&l| fmt_num(l)));
    records.push(lambda);
    let mut footer = vec!["orthonormality_error".to_string(), fmt_num(ortho_err)];
    footer.resize(d + 1, String::new());
    records.push(footer);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = OutputDir::create(out_dir)?;
    out.write_csv("dpss.csv", &header_refs, &records)?;
    let details = json!({ "eigenvalues": basis.eigenvalues, "orthonormality_error": ortho_err });
    out.finish(manifest(
        "dpss",
        json!({ "n": n, "W": w, "d": d }),
        0,
        details,
    ))?;
    Ok(())
}

fn cmd_verify(dir: &Path) -> Result<(), CliError> {
    let m = read_manifest(dir)?;
    let bad = checksum_mismatches(dir, &m);
    if !bad.is_empty() {
        return Err(CliError::Infeasible(format!(
            "checksum mismatch for {}",
            bad.join(", ")
        )));
    }
    if m.command == "design" {
        let cfg: RunConfig = serde_json::from_value(m.config.clone())
            .map_err(|e| CliError::Config(format!("manifest config: {e}")))?;
        cfg.validate()?;
        let path = dir.join("sequences.csv");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let set = parse_set_csv(&text, cfg.base_len)?;
        let summary = set_summary(&cfg, &set)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("summary serializes")
        );
        if summary["constraints_hold"] != json!(true) || summary["complete"] != json!(true) {
            return Err(CliError::Infeasible(
                "stored set is incomplete or violates its constraints".into(),
            ));
        }
    }
    println!("verified {} file(s) in {}", m.files.len(), dir.display());
    Ok(())
}

/// Fixture file names produced by the `fixtures` subcommand.
pub const PAIRSET_FIXTURE: &str = "pairset_n8_alpha0.4.csv";
pub const PAIRSET_GREEDY_FIXTURE: &str = "pairset_n8_alpha0.4_greedy.csv";

fn cmd_fixtures(dir: &Path) -> Result<(), CliError> {
    let stats = exhaustive_pairset(8, 0.4).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut out = OutputDir::create(dir)?;
    let hist: Vec<Vec<String>> = stats
        .histogram
        .iter()
        .enumerate()
        .map(|(v, c)| vec![v.to_string(), c.to_string()])
        .collect();
    out.write_csv(PAIRSET_FIXTURE, &["abs_inner_product", "pairs"], &hist)?;
    out.write_csv(
        PAIRSET_GREEDY_FIXTURE,
        &["n", "alpha", "greedy_count"],
        &[vec![
            "8".into(),
            "0.4".into(),
            stats.greedy_count.to_string(),
        ]],
    )?;
    out.finish(manifest(
        "fixtures",
        json!({ "n": 8, "alpha": 0.4 }),
        0,
        serde_json::Value::Null,
    ))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_csv_round_trip() {
        let set = mbseq::prbs_set(3, 2, 4).unwrap();
        let text = set_csv(&set);
        assert!(text.starts_with("x1,x2,x3,x4,x5,x6\n"));
        let back = parse_set_csv(&text, 3).unwrap();
        assert_eq!(back.matrix(), set.matrix());
    }

    #[test]
    fn cli_parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "mbseq",
            "design",
            "--config",
            "c.json",
            "--seed",
            "5",
            "--verbose",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Design));
        assert_eq!(cli.seed, Some(5));
        assert!(cli.verbose);
    }
}
