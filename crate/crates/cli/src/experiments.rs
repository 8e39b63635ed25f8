//! Repeated-trial experiments: parameter sweeps and modulation-gain profiles.
//!
//! Trial `t` draws its design seed and interferer centre from a stream keyed only by
//! `(seed, t)`, so every sweep point sees the same trial conditions.

use mbseq::analysis::{
    interferer_power, modulation_gain, recovery_condition, to_db, uniform_offsets,
    DEFAULT_GAIN_POINTS,
};
use mbseq::bases::band_geometry;
use mbseq::{
    design_set, design_single, hadamard_set, prbs_set, shifted_single_set, BasisKind, DesignConfig,
    Error, GridSpec, PowerBound, SequenceSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Baseline, CenterSpec, RunConfig, SweepParameter, DEFAULT_TRIALS};
use crate::CliError;

/// Display caps applied to sweep summaries.
pub const POWER_CAP_DB: f64 = 0.0;
pub const CONDITION_CAP: f64 = 20.0;

/// Seed and interferer centre for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSetup {
    pub trial: usize,
    pub seed: u64,
    pub center: Option<usize>,
}

/// Derives trial `t`'s setup. A random centre is uniform on `2..=N-1`.
pub fn trial_setup(cfg: &RunConfig, trial: usize) -> TrialSetup {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    rng.set_stream(trial as u64 + 1);
    let seed = rng.random::<u64>();
    let random_center = if cfg.base_len >= 3 {
        Some(rng.random_range(2..=cfg.base_len - 1))
    } else {
        None
    };
    let center = match cfg.c {
        Some(CenterSpec::Fixed(c)) => Some(c),
        Some(CenterSpec::Named(_)) | None => random_center,
    };
    TrialSetup {
        trial,
        seed,
        center,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub setup: TrialSetup,
    pub completed: bool,
    /// Linear units; `+∞` when the set is incomplete.
    pub interferer_power: f64,
    pub condition: f64,
}

fn to_cli(e: Error) -> CliError {
    match e {
        Error::Numerical(m) => CliError::Numerical(m),
        other => CliError::Config(other.to_string()),
    }
}

/// Designs one multi-branch set and scores it.
pub fn run_trial(design: &DesignConfig, setup: TrialSetup) -> Result<TrialMetrics, CliError> {
    let design = DesignConfig {
        seed: setup.seed,
        center: setup.center,
        ..design.clone()
    };
    let geometry = design.geometry().map_err(to_cli)?;
    let (set, report) = design_set(&design).map_err(to_cli)?;
    Ok(TrialMetrics {
        setup,
        completed: report.completed,
        interferer_power: interferer_power(&set, &geometry.interferer).map_err(to_cli)?,
        condition: recovery_condition(&set, &geometry.message).map_err(to_cli)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub trials: Vec<TrialMetrics>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

impl SweepRow {
    pub fn feasible_fraction(&self) -> f64 {
        self.trials.iter().filter(|t| t.completed).count() as f64 / self.trials.len() as f64
    }

    /// Mean interferer power over all trials in dB; `+∞` if any trial failed.
    pub fn power_db_raw(&self) -> f64 {
        to_db(mean(self.trials.iter().map(|t| t.interferer_power)))
    }

    pub fn condition_raw(&self) -> f64 {
        mean(self.trials.iter().map(|t| t.condition))
    }

    pub fn power_db_display(&self) -> f64 {
        self.power_db_raw().min(POWER_CAP_DB)
    }

    pub fn condition_display(&self) -> f64 {
        self.condition_raw().min(CONDITION_CAP)
    }

    /// Mean over completed trials only (linear mean, then dB); NaN when none completed.
    pub fn power_db_feasible(&self) -> f64 {
        to_db(mean(
            self.trials
                .iter()
                .filter(|t| t.completed)
                .map(|t| t.interferer_power),
        ))
    }

    pub fn condition_feasible(&self) -> f64 {
        mean(
            self.trials
                .iter()
                .filter(|t| t.completed)
                .map(|t| t.condition),
        )
    }

    /// `max - min` of the condition number over completed trials.
    pub fn condition_spread(&self) -> f64 {
        let ks: Vec<f64> = self
            .trials
            .iter()
            .filter(|t| t.completed)
            .map(|t| t.condition)
            .collect();
        if ks.is_empty() {
            return f64::NAN;
        }
        let max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ks.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub const SWEEP_HEADER: [&str; 10] = [
    "value",
    "trials",
    "feasible_fraction",
    "power_db_display",
    "condition_display",
    "power_db_raw",
    "condition_raw",
    "power_db_feasible",
    "condition_feasible",
    "condition_spread",
];

/// Formats a float for CSV; infinities become `inf` / `-inf`, NaN becomes `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

impl SweepRow {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            fmt_num(self.value),
            self.trials.len().to_string(),
            fmt_num(self.feasible_fraction()),
            fmt_num(self.power_db_display()),
            fmt_num(self.condition_display()),
            fmt_num(self.power_db_raw()),
            fmt_num(self.condition_raw()),
            fmt_num(self.power_db_feasible()),
            fmt_num(self.condition_feasible()),
            fmt_num(self.condition_spread()),
        ]
    }
}

fn as_count(value: f64, name: &str) -> Result<usize, CliError> {
    if value >= 1.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(CliError::Config(format!(
            "{name} values must be positive integers, got {value}"
        )))
    }
}

/// The design configuration for one sweep point.
pub fn point_config(
    cfg: &RunConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<DesignConfig, CliError> {
    let mut design = cfg.design_config(None);
    match parameter {
        SweepParameter::R => design.oversampling = as_count(value, "R")?,
        SweepParameter::L => design.candidates = as_count(value, "L")?,
        SweepParameter::Alpha => design.alpha.0 = value,
    }
    design.validate().map_err(to_cli)?;
    Ok(design)
}

/// Runs the configured sweep. `trials` overrides the config's trial count.
pub fn run_sweep(cfg: &RunConfig, trials: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep subcommand needs a \"sweep\" section".into()))?;
    let trials = trials.or(spec.trials).unwrap_or(DEFAULT_TRIALS);
    let setups: Vec<TrialSetup> = (0..trials).map(|t| trial_setup(cfg, t)).collect();
    spec.values
        .iter()
        .map(|&value| {
            let design = point_config(cfg, spec.parameter, value)?;
            log::info!("sweep {} = {value}: {trials} trials", spec.parameter);
            let results = setups
                .par_iter()
                .map(|&s| run_trial(&design, s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(SweepRow {
                value,
                trials: results,
            })
        })
        .collect()
}

/// Mean modulation gain of one baseline over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainResult {
    pub baseline: Baseline,
    pub offsets: Vec<f64>,
    /// Mean over usable trials, linear units.
    pub mean_gain: Vec<f64>,
    pub trials: Vec<TrialSetup>,
    /// Trials whose design produced a complete set.
    pub usable: Vec<bool>,
}

impl GainResult {
    pub fn mean_gain_db(&self) -> Vec<f64> {
        self.mean_gain.iter().map(|&g| to_db(g)).collect()
    }

    /// Gain in dB at the offset closest to `d`.
    pub fn gain_db_at(&self, d: f64) -> f64 {
        let i = self
            .offsets
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - d).abs().total_cmp(&(b.1 - d).abs()))
            .map(|(i, _)| i)
            .expect("profile has offsets");
        to_db(self.mean_gain[i])
    }
}

fn baseline_set(
    cfg: &RunConfig,
    baseline: Baseline,
    setup: TrialSetup,
) -> Result<Option<SequenceSet>, CliError> {
    let big_n = cfg.base_len;
    let grid = GridSpec::new(big_n, cfg.oversampling).map_err(to_cli)?;
    let center = setup.center.ok_or_else(|| {
        CliError::Config("gain profiles need an interferer centre (N >= 3)".into())
    })?;
    match baseline {
        Baseline::Prbs => Ok(Some(
            prbs_set(big_n, cfg.oversampling, setup.seed).map_err(to_cli)?,
        )),
        Baseline::Hadamard => {
            if cfg.oversampling != 1 || !big_n.is_power_of_two() {
                return Err(CliError::Config(format!(
                    "the hadamard baseline needs R = 1 and N a power of two, got N = {big_n}, R = {}",
                    cfg.oversampling
                )));
            }
            Ok(Some(hadamard_set(big_n).map_err(to_cli)?))
        }
        Baseline::SingleFourier | Baseline::SingleSlepian => {
            let kind = if baseline == Baseline::SingleFourier {
                BasisKind::Fourier
            } else {
                BasisKind::Slepian
            };
            let geo = band_geometry(grid, center, kind).map_err(to_cli)?;
            let (s, _) = design_single(
                &geo.message,
                &geo.interferer,
                PowerBound(cfg.single_alpha()),
                cfg.candidates(),
                setup.seed,
                &cfg.solver.unwrap_or_default(),
            )
            .map_err(to_cli)?;
            match s {
                Some(s) => Ok(Some(shifted_single_set(&s, big_n).map_err(to_cli)?)),
                None => Ok(None),
            }
        }
        Baseline::MultiFourier | Baseline::MultiSlepian => {
            let kind = if baseline == Baseline::MultiFourier {
                BasisKind::Fourier
            } else {
                BasisKind::Slepian
            };
            let design = DesignConfig {
                center: Some(center),
                basis: kind,
                seed: setup.seed,
                ..cfg.design_config(None)
            };
            let (set, report) = design_set(&design).map_err(to_cli)?;
            Ok(report.completed.then_some(set))
        }
    }
}

/// Mean modulation gain profile of `baseline` (or the config's `gain` section).
pub fn run_gain(
    cfg: &RunConfig,
    baseline: Option<Baseline>,
    trials: Option<usize>,
) -> Result<GainResult, CliError> {
    let section = cfg.gain.as_ref();
    let baseline = baseline
        .or(section.map(|g| g.baseline))
        .ok_or_else(|| CliError::Config("no baseline given; set gain.baseline".into()))?;
    let trials = trials
        .or(section.and_then(|g| g.trials))
        .unwrap_or(DEFAULT_TRIALS);
    let points = section
        .and_then(|g| g.points)
        .unwrap_or(DEFAULT_GAIN_POINTS);
    let offsets = uniform_offsets(points);
    if cfg.base_len < 3 {
        return Err(CliError::Config(
            "gain profiles need N >= 3 for an interferer band".into(),
        ));
    }
    let setups: Vec<TrialSetup> = (0..trials).map(|t| trial_setup(cfg, t)).collect();
    let profiles = setups
        .par_iter()
        .map(|&setup| {
            let set = baseline_set(cfg, baseline, setup)?;
            match set {
                None => Ok(None),
                Some(set) => {
                    let center = setup.center.expect("checked in baseline_set");
                    let set_grid = GridSpec::new(cfg.base_len, set.row_len() / cfg.base_len)
                        .map_err(to_cli)?;
                    let profile =
                        modulation_gain(&set, set_grid, center, &offsets).map_err(to_cli)?;
                    Ok(Some(profile.gains))
                }
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let usable: Vec<bool> = profiles.iter().map(Option::is_some).collect();
    let mean_gain = (0..offsets.len())
        .map(|i| mean(profiles.iter().flatten().map(|g| g[i])))
        .collect();
    Ok(GainResult {
        baseline,
        offsets,
        mean_gain,
        trials: setups,
        usable,
    })
}

pub const GAIN_HEADER: [&str; 4] = ["offset", "gain_db", "gain_linear", "trials_used"];

impl GainResult {
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let used = self.usable.iter().filter(|u| **u).count().to_string();
        self.offsets
            .iter()
            .zip(&self.mean_gain)
            .map(|(&d, &g)| vec![fmt_num(d), fmt_num(to_db(g)), fmt_num(g), used.clone()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json).unwrap()
    }

    #[test]
    fn trial_setups_are_deterministic_and_in_range() {
        let c = cfg(r#"{"N":15,"R":2,"alpha":0.4,"seed":3}"#);
        let a: Vec<_> = (0..20).map(|t| trial_setup(&c, t)).collect();
        let b: Vec<_> = (0..20).map(|t| trial_setup(&c, t)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| (2..=14).contains(&s.center.unwrap())));
        assert!(a.windows(2).all(|w| w[0].seed != w[1].seed));
        let fixed = cfg(r#"{"N":15,"R":2,"alpha":0.4,"c":9}"#);
        assert_eq!(trial_setup(&fixed, 4).center, Some(9));
    }

    #[test]
    fn summary_statistics() {
        let setup = TrialSetup {
            trial: 0,
            seed: 0,
            center: Some(2),
        };
        let t = |completed, p, k| TrialMetrics {
            setup,
            completed,
            interferer_power: p,
            condition: k,
        };
        let row = SweepRow {
            value: 2.0,
            trials: vec![
                t(true, 0.1, 2.0),
                t(true, 0.01, 4.0),
                t(false, f64::INFINITY, f64::INFINITY),
            ],
        };
        assert!((row.feasible_fraction() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(row.power_db_raw(), f64::INFINITY);
        assert_eq!(row.power_db_display(), 0.0);
        assert_eq!(row.condition_display(), 20.0);
        assert!((row.power_db_feasible() - to_db(0.055)).abs() < 1e-12);
        assert_eq!(row.condition_feasible(), 3.0);
        assert_eq!(row.condition_spread(), 2.0);
        assert_eq!(row.csv_record()[5], "inf");
    }

    #[test]
    fn sweep_point_overrides() {
        let c = cfg(r#"{"N":15,"R":2,"alpha":0.4,"L":10}"#);
        assert_eq!(
            point_config(&c, SweepParameter::R, 4.0)
                .unwrap()
                .oversampling,
            4
        );
        assert_eq!(
            point_config(&c, SweepParameter::L, 100.0)
                .unwrap()
                .candidates,
            100
        );
        assert!(point_config(&c, SweepParameter::R, 2.5).is_err());
        assert!(point_config(&c, SweepParameter::Alpha, 0.0).is_err());
    }

    #[test]
    fn prbs_gain_is_flat() {
        let c =
            cfg(r#"{"N":15,"R":4,"alpha":0.4,"gain":{"baseline":"prbs","trials":20,"points":11}}"#);
        let g = run_gain(&c, None, None).unwrap();
        assert_eq!(g.offsets.len(), 11);
        assert!(
            g.mean_gain_db().iter().all(|d| d.abs() < 1.5),
            "{:?}",
            g.mean_gain_db()
        );
    }

    #[test]
    fn hadamard_baseline_requires_power_of_two() {
        let c = cfg(r#"{"N":15,"R":1,"alpha":0.4}"#);
        assert!(matches!(
            run_gain(&c, Some(Baseline::Hadamard), Some(1)),
            Err(CliError::Config(_))
        ));
        let c = cfg(r#"{"N":8,"R":1,"alpha":0.4}"#);
        assert!(run_gain(&c, Some(Baseline::Hadamard), Some(2)).is_ok());
    }
}
