//! Evaluation metrics for sequence sets.
//!
//! Metrics return true values. An incomplete set (a design that aborted) has
//! infinite interferer power and condition number; display caps are left to callers.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bases::{complex_exponential, BandSubspace, GridSpec};
use crate::designer::SequenceSet;
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::numerics::{
    condition_number, pseudoinverse_apply, svd, Complex64, ComplexMatrix, ComplexVector, RankMode,
    RealSymMatrix, DEFAULT_RANK_TOL,
};

/// Number of offsets in a default gain profile.
pub const DEFAULT_GAIN_POINTS: usize = 101;

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_row_len(set: &SequenceSet, band: &BandSubspace) -> Result<()> {
    if !set.rows().is_empty() && set.row_len() != band.ambient() {
        return Err(dim_mismatch(format!(
            "sequences have length {}, band has ambient dimension {}",
            set.row_len(),
            band.ambient()
        )));
    }
    Ok(())
}

/// `S F` as a complex matrix.
fn modulated(set: &SequenceSet, band: &BandSubspace) -> ComplexMatrix {
    set.matrix().map(|x| Complex64::new(x, 0.0)) * band.basis()
}

/// `‖S F_S‖_F² / RN` in linear units; `+∞` for an incomplete set.
pub fn interferer_power(set: &SequenceSet, interferer: &BandSubspace) -> Result<f64> {
    check_row_len(set, interferer)?;
    if !set.is_complete() {
        return Ok(f64::INFINITY);
    }
    let total: f64 = set
        .rows()
        .iter()
        .map(|r| interferer.energy(&r.to_f64()))
        .sum();
    Ok(total / interferer.ambient() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramSummary {
    pub gram: RealSymMatrix,
    /// Largest off-diagonal magnitude. For the message-projected Gram matrix this is
    /// the modulus of the complex entry, not of its real part.
    pub coherence: f64,
}

/// `Q = S S^T`, or with a message band, the real part of `(S F_P)(S F_P)^H`.
pub fn gram_and_coherence(
    set: &SequenceSet,
    message: Option<&BandSubspace>,
) -> Result<GramSummary> {
    let rows = set.rows().len();
    let (gram, coherence) = match message {
        None => {
            let s = set.matrix();
            let q = &s * s.transpose();
            let coh = off_diagonal_max(rows, |i, j| q[(i, j)].abs());
            (RealSymMatrix::new(q)?, coh)
        }
        Some(band) => {
            check_row_len(set, band)?;
            let m = modulated(set, band);
            let q = &m * m.adjoint();
            let coh = off_diagonal_max(rows, |i, j| q[(i, j)].norm());
            (RealSymMatrix::from_lower_fn(rows, |i, j| q[(i, j)].re), coh)
        }
    };
    Ok(GramSummary { gram, coherence })
}

fn off_diagonal_max(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            best = best.max(f(i, j));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GershgorinDisc {
    pub center: f64,
    pub radius: f64,
}

impl GershgorinDisc {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (x - self.center).abs() <= self.radius + slack
    }
}

pub fn gershgorin_discs(q: &RealSymMatrix) -> Vec<GershgorinDisc> {
    let m = q.as_matrix();
    (0..q.dim())
        .map(|i| GershgorinDisc {
            center: m[(i, i)],
            radius: (0..q.dim())
                .filter(|&j| j != i)
                .map(|j| m[(i, j)].abs())
                .sum(),
        })
        .collect()
}

/// Whether every value lies in the union of the discs, up to `slack`.
pub fn discs_contain(discs: &[GershgorinDisc], values: &[f64], slack: f64) -> bool {
    values
        .iter()
        .all(|&v| discs.iter().any(|d| d.contains(v, slack)))
}

/// Condition number of `S F_P` from its nonzero singular values. Returns `+∞` when
/// the set is incomplete or `S F_P` has numerical rank below `|P|`.
pub fn recovery_condition(set: &SequenceSet, message: &BandSubspace) -> Result<f64> {
    check_row_len(set, message)?;
    if !set.is_complete() || message.is_empty() {
        return Ok(f64::INFINITY);
    }
    let m = modulated(set, message);
    if m.nrows() < m.ncols() {
        return Ok(f64::INFINITY);
    }
    match condition_number(&m, DEFAULT_RANK_TOL, RankMode::Full) {
        Ok(k) => Ok(k),
        Err(Error::ZeroMatrix) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// `ĉ_P = (S F_P)^† y`.
pub fn recover_message(
    set: &SequenceSet,
    message: &BandSubspace,
    y: &ComplexVector,
    rank_tol: f64,
) -> Result<ComplexVector> {
    check_row_len(set, message)?;
    pseudoinverse_apply(&modulated(set, message), y, rank_tol)
}

/// `(‖M^† e‖ / ‖e‖) (‖M c‖ / ‖c‖)` with `M = S F_P`: the factor by which recovery
/// degrades the SNR for message coefficients `c` and observation error `e`.
pub fn snr_ratio(
    set: &SequenceSet,
    message: &BandSubspace,
    c: &ComplexVector,
    e: &ComplexVector,
) -> Result<f64> {
    check_row_len(set, message)?;
    let m = modulated(set, message);
    ratio_product(&m, c, e)
}

/// Square form `(‖S^{-1} e‖ / ‖e‖) (‖S x‖ / ‖x‖)` for an invertible square set.
pub fn snr_ratio_square(set: &SequenceSet, x: &[f64], e: &[f64]) -> Result<f64> {
    let s = set.matrix();
    if s.nrows() != s.ncols() {
        return Err(dim_mismatch(format!(
            "set is {}x{}, not square",
            s.nrows(),
            s.ncols()
        )));
    }
    let sc = s.map(|v| Complex64::new(v, 0.0));
    let dec = svd(&sc)?;
    if dec.numerical_rank(DEFAULT_RANK_TOL) < s.nrows() {
        return Err(invalid("sequence set is numerically singular"));
    }
    let to_c = |v: &[f64]| {
        ComplexVector::from_iterator(v.len(), v.iter().map(|&a| Complex64::new(a, 0.0)))
    };
    ratio_product(&sc, &to_c(x), &to_c(e))
}

fn ratio_product(m: &ComplexMatrix, c: &ComplexVector, e: &ComplexVector) -> Result<f64> {
    if c.len() != m.ncols() || e.len() != m.nrows() {
        return Err(dim_mismatch(format!(
            "operator is {}x{}, signal has length {}, error has length {}",
            m.nrows(),
            m.ncols(),
            c.len(),
            e.len()
        )));
    }
    let (cn, en) = (c.norm(), e.norm());
    if cn == 0.0 || en == 0.0 {
        return Err(invalid("signal and error vectors must be nonzero"));
    }
    let back = pseudoinverse_apply(m, e, DEFAULT_RANK_TOL)?;
    Ok((back.norm() / en) * ((m * c).norm() / cn))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainProfile {
    pub offsets: Vec<f64>,
    /// Linear power units.
    pub gains: Vec<f64>,
    pub center: usize,
    pub grid: GridSpec,
}

impl GainProfile {
    pub fn gains_db(&self) -> Vec<f64> {
        self.gains.iter().map(|&g| to_db(g)).collect()
    }
}

/// `count` evenly spaced offsets covering `[0, 1]`.
pub fn uniform_offsets(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|i| i as f64 / (count - 1) as f64).collect(),
    }
}

/// Power retained by a unit-norm tone at `f_c + d / RN` after modulation, per
/// branch: `‖S F(f_c + d/RN)‖² / N`. A flat-spectrum set has gain close to one.
pub fn modulation_gain(
    set: &SequenceSet,
    grid: GridSpec,
    center: usize,
    offsets: &[f64],
) -> Result<GainProfile> {
    if set.rows().is_empty() {
        return Err(invalid("cannot compute the gain of an empty set"));
    }
    let n = grid.len();
    if set.row_len() != n {
        return Err(dim_mismatch(format!(
            "sequences have length {}, grid length is {n}",
            set.row_len()
        )));
    }
    if center == 0 || center > n {
        return Err(invalid(format!("centre index {center} outside 1..={n}")));
    }
    if let Some(d) = offsets.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(invalid(format!("offset {d} outside [0, 1]")));
    }
    let s: DMatrix<Complex64> = set.matrix().map(|x| Complex64::new(x, 0.0));
    let rows = set.rows().len() as f64;
    let gains = offsets
        .iter()
        .map(|&d| {
            let tone = complex_exponential(grid.frequency(center) + d / n as f64, n);
            (&s * tone).norm_squared() / rows
        })
        .collect();
    Ok(GainProfile {
        offsets: offsets.to_vec(),
        gains,
        center,
        grid,
    })
}
