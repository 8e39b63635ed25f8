//! Lifted semidefinite relaxations of the binary sequence design problems.
//!
//! Every problem has the form
//!
//! ```text
//!   optimise   tr(C T)
//!   subject to tr(B_i T) <= b_i,   diag(T) = 1,   T PSD
//! ```
//!
//! where `T` stands in for `s s^T`. All matrices are real: for a real sequence the
//! complex Gram matrices only contribute their real (symmetric) parts.

mod admm;

pub use admm::{solve, SolverOptions};

use serde::{Deserialize, Serialize};

use crate::bases::{BandSubspace, GridSpec};
use crate::error::{dim_mismatch, invalid, Result};
use crate::numerics::RealSymMatrix;
use crate::rounding::BinarySequence;

/// How the coherence tolerance `alpha` limits `|<F_P^H s_i, F_P^H s>|` between
/// branches of length `RN`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceConvention {
    /// `|<F_P^H s_i, F_P^H s>|^2 <= alpha RN`.
    #[default]
    Squared,
    /// `|<F_P^H s_i, F_P^H s>| <= alpha RN`.
    Unsquared,
}

impl CoherenceConvention {
    /// Largest admissible `|<F_P^H s_i, F_P^H s>|` for sequences of length `len`.
    pub fn magnitude_bound(self, alpha: f64, len: usize) -> f64 {
        let scaled = alpha * len as f64;
        match self {
            CoherenceConvention::Squared => scaled.sqrt(),
            CoherenceConvention::Unsquared => scaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// `tr(matrix * T) <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub matrix: RealSymMatrix,
    pub bound: f64,
}

/// An SDP over `n x n` matrices with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub objective: RealSymMatrix,
    pub sense: Sense,
    pub inequalities: Vec<Inequality>,
}

impl SdpProblem {
    pub fn new(
        objective: RealSymMatrix,
        sense: Sense,
        inequalities: Vec<Inequality>,
    ) -> Result<Self> {
        let n = objective.dim();
        for (i, ineq) in inequalities.iter().enumerate() {
            if ineq.matrix.dim() != n {
                return Err(dim_mismatch(format!(
                    "constraint {i} is {}x{}, objective is {n}x{n}",
                    ineq.matrix.dim(),
                    ineq.matrix.dim()
                )));
            }
            if !ineq.bound.is_finite() {
                return Err(invalid(format!("constraint {i} has non-finite bound")));
            }
        }
        Ok(Self {
            objective,
            sense,
            inequalities,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// `tr(C T)`.
    pub fn objective_value(&self, t: &RealSymMatrix) -> f64 {
        self.objective.inner(t)
    }

    /// `tr(B_i T)` for every inequality.
    pub fn constraint_values(&self, t: &RealSymMatrix) -> Vec<f64> {
        self.inequalities
            .iter()
            .map(|c| c.matrix.inner(t))
            .collect()
    }

    /// Whether `T = s s^T` satisfies every inequality (the diagonal holds trivially).
    pub fn binary_feasible(&self, s: &[f64], tol: f64) -> bool {
        self.inequalities
            .iter()
            .all(|c| c.matrix.quadratic_form(s) <= c.bound + tol * c.bound.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Unit-diagonal PSD estimate of the optimal lifted variable.
    pub matrix: RealSymMatrix,
    /// `tr(C T)` in the problem's own units and sense.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

fn check_ambient(a: &BandSubspace, b: &BandSubspace) -> Result<()> {
    if a.ambient() != b.ambient() {
        return Err(dim_mismatch(format!(
            "message band has ambient dimension {}, interferer band {}",
            a.ambient(),
            b.ambient()
        )));
    }
    Ok(())
}

/// Single-sequence relaxation: maximise the message-band energy subject to an
/// absolute bound `alpha` on the interferer-band energy.
pub fn build_single_sdp(
    message: &BandSubspace,
    interferer: &BandSubspace,
    alpha: f64,
) -> Result<SdpProblem> {
    check_ambient(message, interferer)?;
    if !(alpha > 0.0) {
        return Err(invalid(format!(
            "interferer tolerance must be positive, got {alpha}"
        )));
    }
    SdpProblem::new(
        message.real_gram(),
        Sense::Maximize,
        vec![Inequality {
            matrix: interferer.real_gram(),
            bound: alpha,
        }],
    )
}

/// The real symmetric matrix `B` with `s^T B s = |<F^H prior, F^H s>|^2` for every
/// real `s`. With `u = F F^H prior` this is `Re(u u^H)`, of rank at most two.
pub fn coherence_matrix(message: &BandSubspace, prior: &[f64]) -> RealSymMatrix {
    let u = message.project_back_real(prior);
    let re: Vec<f64> = u.iter().map(|z| z.re).collect();
    let im: Vec<f64> = u.iter().map(|z| z.im).collect();
    RealSymMatrix::from_lower_fn(u.len(), |i, j| re[i] * re[j] + im[i] * im[j])
}

/// Branch relaxation: minimise interferer-band energy subject to the coherence
/// bound `|<F_P^H s_i, F_P^H s>| <= m` for every prior branch `s_i`, lifted as
/// `tr(B_i T) <= m^2` with `m` given by `convention`.
pub fn build_branch_sdp(
    message: &BandSubspace,
    interferer: &BandSubspace,
    prior: &[BinarySequence],
    alpha: f64,
    convention: CoherenceConvention,
    grid: GridSpec,
) -> Result<SdpProblem> {
    check_ambient(message, interferer)?;
    let n = grid.len();
    if message.ambient() != n {
        return Err(dim_mismatch(format!(
            "bands have ambient dimension {}, grid length is {n}",
            message.ambient()
        )));
    }
    if !(alpha > 0.0) {
        return Err(invalid(format!(
            "coherence tolerance must be positive, got {alpha}"
        )));
    }
    let bound = convention.magnitude_bound(alpha, n).powi(2);
    let inequalities = prior
        .iter()
        .map(|s| {
            if s.len() != n {
                return Err(dim_mismatch(format!(
                    "prior sequence has length {}, expected {n}",
                    s.len()
                )));
            }
            Ok(Inequality {
                matrix: coherence_matrix(message, &s.to_f64()),
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SdpProblem::new(interferer.real_gram(), Sense::Minimize, inequalities)
}
