//! End-to-end design: the single-sequence algorithm, the multi-branch algorithm and
//! the baseline sequence sets used for comparison.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bases::{
    band_geometry, message_only_geometry, BandGeometry, BandSubspace, BasisKind, GridSpec,
};
use crate::error::{invalid, Result};
use crate::numerics::sym_eig;
use crate::rounding::{round, BinarySequence, CandidateEvaluator};
use crate::sdp::{
    build_branch_sdp, build_single_sdp, solve, CoherenceConvention, SolveStatus, SolverOptions,
};

/// Normalized coherence tolerance of the multi-branch design. Each pair of branches
/// must satisfy `|<F_P^H s_i, F_P^H s_j>|^2 <= alpha * RN`, or the unsquared form
/// when the configuration asks for it.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoherenceTolerance(pub f64);

/// Absolute bound on interferer-band energy `‖F_S^H s‖²` for single-sequence design.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerBound(pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    /// Number of branches, equal to the base sequence length `N`.
    pub base_len: usize,
    pub oversampling: usize,
    pub alpha: CoherenceTolerance,
    /// Randomized projections per branch.
    pub candidates: usize,
    /// 1-based interferer centre index; `None` designs against coherence alone.
    pub center: Option<usize>,
    pub basis: BasisKind,
    pub seed: u64,
    pub solver: SolverOptions,
    #[serde(default)]
    pub coherence: CoherenceConvention,
}

impl DesignConfig {
    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.base_len, self.oversampling)?;
        if !(self.alpha.0 > 0.0) || !self.alpha.0.is_finite() {
            return Err(invalid(format!(
                "alpha must be positive and finite, got {}",
                self.alpha.0
            )));
        }
        if self.candidates == 0 {
            return Err(invalid(
                "at least one randomized projection per branch is required",
            ));
        }
        if let Some(c) = self.center {
            if c < 2 || c + 1 > self.base_len {
                return Err(invalid(format!(
                    "interferer centre c = {c} must satisfy 2 <= c <= N - 1 = {}",
                    self.base_len.saturating_sub(1)
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.base_len, self.oversampling)
    }

    pub fn geometry(&self) -> Result<BandGeometry> {
        let grid = self.grid()?;
        match self.center {
            Some(c) => band_geometry(grid, c, self.basis),
            None => message_only_geometry(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MbRsdpr,
    Prbs,
    Hadamard,
    SingleShifted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::MbRsdpr => "mb_rsdpr",
            Provenance::Prbs => "prbs",
            Provenance::Hadamard => "hadamard",
            Provenance::SingleShifted => "single_shifted",
        })
    }
}

/// The stacked modulation operator `S`, one ±1 row per branch.
///
/// A set whose design aborted keeps the rows found so far, so `rows.len()` may be
/// smaller than `target_rows`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    rows: Vec<BinarySequence>,
    target_rows: usize,
    provenance: Provenance,
}

impl SequenceSet {
    pub fn new(
        rows: Vec<BinarySequence>,
        target_rows: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if rows.len() > target_rows {
            return Err(invalid(format!(
                "{} rows exceed the target of {target_rows}",
                rows.len()
            )));
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(invalid(
                    "all rows of a sequence set must have the same length",
                ));
            }
        }
        Ok(Self {
            rows,
            target_rows,
            provenance,
        })
    }

    /// A complete set from explicit rows.
    pub fn complete(rows: Vec<BinarySequence>, provenance: Provenance) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("a sequence set needs at least one row"));
        }
        Self::new(rows, n, provenance)
    }

    pub fn rows(&self) -> &[BinarySequence] {
        &self.rows
    }

    pub fn target_rows(&self) -> usize {
        self.target_rows
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.target_rows
    }

    /// Row length `RN`; zero for a set without rows.
    pub fn row_len(&self) -> usize {
        self.rows.first().map_or(0, BinarySequence::len)
    }

    /// `S` as a real matrix (rows found so far).
    pub fn matrix(&self) -> DMatrix<f64> {
        let cols = self.row_len();
        DMatrix::from_fn(self.rows.len(), cols, |i, j| {
            f64::from(self.rows[i].entries()[j])
        })
    }

    /// One line per row, entries `1` / `-1` separated by commas, LF terminated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let line: Vec<String> = row.entries().iter().map(|e| e.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`SequenceSet::to_csv`]. Blank lines are skipped.
    pub fn from_csv(text: &str, target_rows: usize, provenance: Provenance) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(no, line)| {
                let entries = line
                    .split(',')
                    .map(|t| match t.trim() {
                        "1" => Ok(1),
                        "-1" => Ok(-1),
                        other => Err(invalid(format!(
                            "line {}: entry {other:?} is not 1 or -1",
                            no + 1
                        ))),
                    })
                    .collect::<Result<Vec<i8>>>()?;
                BinarySequence::new(entries)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, target_rows, provenance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    /// 0-based branch index.
    pub branch: usize,
    pub sdp_status: SolveStatus,
    /// Relaxation optimum: a lower bound for the binary objective when minimizing,
    /// an upper bound when maximizing.
    pub sdp_objective: f64,
    pub sdp_iterations: usize,
    /// Objective of the selected candidate, if any candidate was feasible.
    pub selected_objective: Option<f64>,
    /// Constraint values of the selected candidate against its priors.
    pub constraint_values: Vec<f64>,
    pub feasible: bool,
    pub candidates_tried: usize,
    pub feasible_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub branches: Vec<BranchReport>,
    pub completed: bool,
    pub seed: u64,
    pub wall_time_secs: f64,
}

/// Relaxes, solves and rounds one design step.
fn design_step(
    problem: crate::sdp::SdpProblem,
    evaluator: &CandidateEvaluator,
    candidates: usize,
    seed: u64,
    branch: usize,
    solver: &SolverOptions,
) -> Result<(Option<BinarySequence>, BranchReport)> {
    let solution = solve(&problem, solver)?;
    let mut report = BranchReport {
        branch,
        sdp_status: solution.status,
        sdp_objective: solution.objective,
        sdp_iterations: solution.iterations,
        selected_objective: None,
        constraint_values: Vec::new(),
        feasible: false,
        candidates_tried: 0,
        feasible_candidates: 0,
    };
    if solution.status == SolveStatus::Infeasible {
        return Ok((None, report));
    }
    let eig = sym_eig(&solution.matrix)?;
    let outcome = round(&eig, evaluator, candidates, seed, branch)?;
    report.candidates_tried = outcome.tried;
    report.feasible_candidates = outcome.feasible;
    match outcome.best {
        Some(best) => {
            report.selected_objective = Some(best.objective);
            report.constraint_values = best.constraints;
            report.feasible = true;
            Ok((Some(best.sequence.with_branch(branch)), report))
        }
        None => Ok((None, report)),
    }
}

/// Single-sequence design: maximize message-band energy subject to interferer-band
/// energy at most `alpha`, using `candidates` randomized projections.
pub fn design_single(
    message: &BandSubspace,
    interferer: &BandSubspace,
    alpha: PowerBound,
    candidates: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<(Option<BinarySequence>, BranchReport)> {
    if candidates == 0 {
        return Err(invalid("at least one randomized projection is required"));
    }
    let problem = build_single_sdp(message, interferer, alpha.0)?;
    let evaluator = CandidateEvaluator::single(message, interferer, alpha.0)?;
    design_step(problem, &evaluator, candidates, seed, 0, solver)
}

/// Multi-branch design. Branch `k` minimizes interferer energy subject to coherence
/// with branches `0..k`. The first branch without a feasible candidate aborts the
/// run; the returned set then holds the rows found so far.
pub fn design_set(config: &DesignConfig) -> Result<(SequenceSet, DesignReport)> {
    config.validate()?;
    let start = Instant::now();
    let grid = config.grid()?;
    let geometry = config.geometry()?;
    let mut rows: Vec<BinarySequence> = Vec::with_capacity(config.base_len);
    let mut branches = Vec::with_capacity(config.base_len);
    for k in 0..config.base_len {
        let problem = build_branch_sdp(
            &geometry.message,
            &geometry.interferer,
            &rows,
            config.alpha.0,
            config.coherence,
            grid,
        )?;
        let evaluator = CandidateEvaluator::branch(
            &geometry.message,
            &geometry.interferer,
            &rows,
            config.alpha.0,
            config.coherence,
            grid,
        )?;
        let (selected, report) = design_step(
            problem,
            &evaluator,
            config.candidates,
            config.seed,
            k,
            &config.solver,
        )?;
        branches.push(report);
        match selected {
            Some(s) => rows.push(s),
            None => break,
        }
    }
    let completed = rows.len() == config.base_len;
    let set = SequenceSet::new(rows, config.base_len, Provenance::MbRsdpr)?;
    let report = DesignReport {
        branches,
        completed,
        seed: config.seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((set, report))
}

/// `N` rows of i.i.d. uniform ±1 entries of length `RN`.
pub fn prbs_set(base_len: usize, oversampling: usize, seed: u64) -> Result<SequenceSet> {
    let grid = GridSpec::new(base_len, oversampling)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..base_len)
        .map(|_| {
            let entries = (0..grid.len())
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            BinarySequence::new(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    SequenceSet::complete(rows, Provenance::Prbs)
}

/// Sylvester–Hadamard matrix of order `n`, which must be a power of two.
pub fn hadamard_set(n: usize) -> Result<SequenceSet> {
    if n < 2 || !n.is_power_of_two() {
        return Err(invalid(format!(
            "Hadamard sets are binary only for power-of-two sizes, got {n}"
        )));
    }
    let mut h = vec![vec![1i8]];
    while h.len() < n {
        let mut next = Vec::with_capacity(2 * h.len());
        for row in &h {
            next.push(row.iter().chain(row.iter()).copied().collect::<Vec<_>>());
        }
        for row in &h {
            next.push(
                row.iter()
                    .copied()
                    .chain(row.iter().map(|&e| -e))
                    .collect::<Vec<_>>(),
            );
        }
        h = next;
    }
    let rows = h
        .into_iter()
        .map(BinarySequence::new)
        .collect::<Result<Vec<_>>>()?;
    SequenceSet::complete(rows, Provenance::Hadamard)
}

/// Row `k` (0-based) is `s` circularly shifted right by `k`.
pub fn shifted_single_set(s: &BinarySequence, rows: usize) -> Result<SequenceSet> {
    if rows == 0 || rows > s.len() {
        return Err(invalid(format!(
            "cannot form {rows} distinct shifts of a length-{} sequence",
            s.len()
        )));
    }
    SequenceSet::complete(
        (0..rows).map(|k| s.rotated(k)).collect(),
        Provenance::SingleShifted,
    )
}
