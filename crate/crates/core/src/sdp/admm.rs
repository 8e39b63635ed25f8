//! Over-relaxed ADMM for unit-diagonal SDPs with a handful of inequalities.
//!
//! Slack variables `z >= 0` turn the inequalities into equalities, so the problem
//! becomes: find `x = (X, z)` in the affine set `{diag X = 1, tr(B_i X) + z_i = b_i}`
//! and in the cone `PSD x R_+^m`, minimising `tr(C X)`. ADMM alternates an exact
//! projection onto the affine set (a small `m x m` Cholesky solve) with a projection
//! onto the cone (a full eigendecomposition). The successive differences of the
//! scaled dual variable converge to a Farkas certificate when the problem is
//! infeasible, which is checked periodically.
//!
//! Objective and constraint rows are normalised to unit Frobenius norm before the
//! iteration starts; reported values are in the caller's units.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{SdpProblem, SdpSolution, Sense, SolveStatus};
use crate::error::{invalid, Error, Result};
use crate::numerics::{sym_eig, RealSymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative primal and dual residual target.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Initial penalty parameter; adapted during the run.
    pub initial_rho: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 100_000,
            relaxation: 1.5,
            initial_rho: 1.0,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("solver tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("solver needs at least one iteration"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(invalid("relaxation factor must lie in (0, 2)"));
        }
        if !(self.initial_rho > 0.0) {
            return Err(invalid("initial rho must be positive"));
        }
        Ok(())
    }
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_UPDATE_EVERY: usize = 10;
const CERT_START: usize = 200;
const CERT_EVERY: usize = 50;
const CERT_TOL: f64 = 1e-6;

/// Pair `(X, z)` of the lifted variable and the slack vector.
#[derive(Clone)]
struct Point {
    x: DMatrix<f64>,
    z: DVector<f64>,
}

impl Point {
    fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.z.norm_squared()).sqrt()
    }

    fn dist(&self, other: &Point) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.z - &other.z).norm_squared()).sqrt()
    }
}

/// Problem data after scaling and conversion to minimisation form.
struct Scaled {
    n: usize,
    cost: DMatrix<f64>,
    rows: Vec<DMatrix<f64>>,
    bounds: DVector<f64>,
    /// Column `i` holds `diag(B_i)`.
    diag: DMatrix<f64>,
    /// Cholesky factor of `G - D^T D + I` where `G_ij = <B_i, B_j>`.
    schur: Option<Cholesky<f64, Dyn>>,
}

impl Scaled {
    fn new(problem: &SdpProblem) -> std::result::Result<Self, ()> {
        let n = problem.dim();
        let c = problem.objective.as_matrix();
        let c_norm = c.norm();
        let cost_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let sign = match problem.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let cost = c * (sign / cost_scale);

        let mut rows = Vec::new();
        let mut bounds = Vec::new();
        for ineq in &problem.inequalities {
            let norm = ineq.matrix.frobenius_norm();
            if norm == 0.0 {
                if ineq.bound < 0.0 {
                    return Err(());
                }
                continue;
            }
            rows.push(ineq.matrix.as_matrix() / norm);
            bounds.push(ineq.bound / norm);
        }
        let m = rows.len();
        let diag = DMatrix::from_fn(n, m, |k, i| rows[i][(k, k)]);
        let schur = if m == 0 {
            None
        } else {
            let mut k = DMatrix::from_fn(m, m, |i, j| rows[i].dot(&rows[j]));
            k -= diag.transpose() * &diag;
            for i in 0..m {
                k[(i, i)] += 1.0;
            }
            Some(Cholesky::new(k).expect("G - D^T D + I is positive definite"))
        };
        Ok(Self {
            n,
            cost,
            rows,
            bounds: DVector::from_vec(bounds),
            diag,
            schur,
        })
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// Solves `A A^* y = r` for `r = (r_diag, r_ineq)`.
    fn solve_normal(
        &self,
        r_diag: &DVector<f64>,
        r_ineq: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        match &self.schur {
            None => (r_diag.clone(), DVector::zeros(0)),
            Some(chol) => {
                let mu = chol.solve(&(r_ineq - self.diag.transpose() * r_diag));
                let lambda = r_diag - &self.diag * &mu;
                (lambda, mu)
            }
        }
    }

    /// Euclidean projection onto `{diag X = 1, <B_i, X> + z_i = b_i}`.
    fn project_affine(&self, v: &Point) -> Point {
        let n = self.n;
        let diag_res = DVector::from_fn(n, |k, _| v.x[(k, k)] - 1.0);
        let ineq_res = DVector::from_fn(self.m(), |i, _| {
            self.rows[i].dot(&v.x) + v.z[i] - self.bounds[i]
        });
        let (lambda, mu) = self.solve_normal(&diag_res, &ineq_res);
        let mut x = v.x.clone();
        for (i, row) in self.rows.iter().enumerate() {
            add_scaled(&mut x, -mu[i], row);
        }
        for k in 0..n {
            x[(k, k)] -= lambda[k];
        }
        Point { x, z: &v.z - &mu }
    }

    /// Checks whether `-A^+ delta` is a Farkas certificate of infeasibility.
    fn certifies_infeasible(&self, delta: &Point) -> bool {
        let n = self.n;
        let a_diag = DVector::from_fn(n, |k, _| delta.x[(k, k)]);
        let a_ineq = DVector::from_fn(self.m(), |i, _| self.rows[i].dot(&delta.x) + delta.z[i]);
        let (yd, ym) = self.solve_normal(&a_diag, &a_ineq);
        let (yd, ym) = (-yd, -ym);

        let mut w = DMatrix::from_diagonal(&yd);
        for (i, row) in self.rows.iter().enumerate() {
            add_scaled(&mut w, ym[i], row);
        }
        let scale = (w.norm_squared() + ym.norm_squared()).sqrt();
        if !(scale > 0.0) || !scale.is_finite() {
            return false;
        }
        let by = yd.sum() + self.bounds.dot(&ym);
        // Any feasible point has tr X = n and 0 <= z_i <= b_i + n, so a certificate
        // violating the cone by at most CERT_TOL * scale is still conclusive when
        // b^T y is below this margin.
        let z_cap: f64 = self.bounds.iter().map(|b| b.max(0.0) + n as f64).sum();
        let margin = CERT_TOL * scale * (n as f64 + z_cap);
        if by >= -margin || ym.iter().any(|&v| v < -CERT_TOL * scale) {
            return false;
        }
        match sym_eig(&RealSymMatrix::symmetrized(w)) {
            Ok(eig) => eig.min_value() >= -CERT_TOL * scale,
            Err(_) => false,
        }
    }
}

/// `target += a * m`, elementwise.
fn add_scaled(target: &mut DMatrix<f64>, a: f64, m: &DMatrix<f64>) {
    for (t, v) in target.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *t += a * v;
    }
}

/// Euclidean projection onto the PSD cone.
fn project_psd(w: DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let sym = RealSymMatrix::symmetrized(w);
    let eig = match sym_eig(&sym) {
        Ok(eig) => eig,
        Err(_) => return DMatrix::from_element(n, n, f64::NAN),
    };
    let positive = eig.values.iter().filter(|&&l| l > 0.0).count();
    if positive == 0 {
        return DMatrix::zeros(n, n);
    }
    if positive <= n / 2 {
        let mut scaled = eig.vectors.columns(0, positive).into_owned();
        for k in 0..positive {
            scaled.column_mut(k).scale_mut(eig.values[k]);
        }
        let mut out = DMatrix::zeros(n, n);
        out.gemm(
            1.0,
            &scaled,
            &eig.vectors.columns(0, positive).transpose(),
            0.0,
        );
        out
    } else {
        let negative = n - positive;
        let mut out = sym.into_matrix();
        if negative > 0 {
            let vecs = eig.vectors.columns(positive, negative);
            let mut scaled = vecs.into_owned();
            for k in 0..negative {
                scaled.column_mut(k).scale_mut(eig.values[positive + k]);
            }
            out.gemm(-1.0, &scaled, &vecs.transpose(), 1.0);
        }
        out
    }
}

/// Rescales a PSD matrix to unit diagonal: `D^{-1/2} Y D^{-1/2}`.
fn unit_diagonal(y: &DMatrix<f64>) -> RealSymMatrix {
    let n = y.nrows();
    let d: Vec<f64> = (0..n)
        .map(|k| {
            let v = y[(k, k)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut t = RealSymMatrix::from_lower_fn(n, |i, j| y[(i, j)] * d[i] * d[j]).into_matrix();
    for k in 0..n {
        if y[(k, k)] > 0.0 {
            t[(k, k)] = 1.0;
        }
    }
    RealSymMatrix::symmetrized(t)
}

/// Solves the SDP. A run that exhausts `max_iterations` still returns its last
/// iterate, flagged with [`SolveStatus::MaxIterations`].
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    opts.validate()?;
    let n = problem.dim();
    let finish =
        |y: &DMatrix<f64>, prim: f64, dual: f64, iterations: usize, status: SolveStatus| {
            let matrix = unit_diagonal(y);
            SdpSolution {
                objective: problem.objective_value(&matrix),
                matrix,
                primal_residual: prim,
                dual_residual: dual,
                iterations,
                status,
            }
        };

    let data = match Scaled::new(problem) {
        Ok(data) => data,
        Err(()) => {
            let eye = DMatrix::identity(n, n);
            return Ok(finish(&eye, f64::INFINITY, 0.0, 0, SolveStatus::Infeasible));
        }
    };
    let m = data.m();
    let mut y = Point {
        x: DMatrix::identity(n, n),
        z: DVector::zeros(m),
    };
    let mut u = Point {
        x: DMatrix::zeros(n, n),
        z: DVector::zeros(m),
    };
    let mut rho = opts.initial_rho;
    let alpha = opts.relaxation;
    let mut prim = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for iter in 1..=opts.max_iterations {
        let v = Point {
            x: &y.x - &u.x - &data.cost * (1.0 / rho),
            z: &y.z - &u.z,
        };
        let x = data.project_affine(&v);
        let x_hat = Point {
            x: &x.x * alpha + &y.x * (1.0 - alpha),
            z: &x.z * alpha + &y.z * (1.0 - alpha),
        };
        let y_prev = std::mem::replace(
            &mut y,
            Point {
                x: project_psd(&x_hat.x + &u.x),
                z: (&x_hat.z + &u.z).map(|v| v.max(0.0)),
            },
        );
        if !y.x[(0, 0)].is_finite() {
            return Err(Error::Numerical(
                "SDP iteration produced non-finite values".into(),
            ));
        }
        let delta_u = Point {
            x: &x_hat.x - &y.x,
            z: &x_hat.z - &y.z,
        };
        u.x += &delta_u.x;
        u.z += &delta_u.z;

        prim = x.dist(&y) / y.norm().max(1.0);
        dual = rho * y.dist(&y_prev) / (rho * u.norm()).max(1.0);
        if prim <= opts.tolerance && dual <= opts.tolerance {
            return Ok(finish(&y.x, prim, dual, iter, SolveStatus::Optimal));
        }

        if m > 0
            && iter >= CERT_START
            && iter % CERT_EVERY == 0
            && data.certifies_infeasible(&delta_u)
        {
            return Ok(finish(&y.x, prim, dual, iter, SolveStatus::Infeasible));
        }

        if iter % RHO_UPDATE_EVERY == 0 && prim > 0.0 && dual > 0.0 {
            let ratio = (prim / dual).sqrt();
            if !(0.2..=5.0).contains(&ratio) {
                let new_rho = (rho * ratio).clamp(RHO_MIN, RHO_MAX);
                let s = rho / new_rho;
                u.x *= s;
                u.z *= s;
                rho = new_rho;
            }
        }
    }
    Ok(finish(
        &y.x,
        prim,
        dual,
        opts.max_iterations,
        SolveStatus::MaxIterations,
    ))
}
