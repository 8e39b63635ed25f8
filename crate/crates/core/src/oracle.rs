//! Brute-force and slow reference computations used to validate the fast paths.
//!
//! Nothing here shares arithmetic with the production code beyond the input types.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bases::BandSubspace;
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::numerics::{Complex64, ComplexMatrix};
use crate::rounding::{BinarySequence, FEASIBILITY_RTOL};
use crate::sdp::{SdpProblem, Sense};

/// Largest length accepted by [`exhaustive_single`].
pub const MAX_SINGLE_LEN: usize = 20;
/// Largest length accepted by [`exhaustive_pairset`].
pub const MAX_PAIRSET_LEN: usize = 14;

/// `‖F^H s‖²` with plain scalar loops.
pub fn naive_quadratic_forms(s: &[f64], basis: &ComplexMatrix) -> f64 {
    let mut total = 0.0;
    for k in 0..basis.ncols() {
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..basis.nrows() {
            let z = basis[(i, k)];
            // conj(z) * s_i
            re += z.re * s[i];
            im -= z.im * s[i];
        }
        total += re * re + im * im;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    /// First optimal sequence in enumeration order, with a leading `+1`.
    pub best: Option<BinarySequence>,
    /// `-∞` when nothing is feasible.
    pub best_objective: f64,
    /// Feasible sequences among those enumerated.
    pub feasible_count: u64,
    /// `2^(n-1)`: `s` and `-s` share every objective, so only `s_0 = +1` is visited.
    pub enumerated: u64,
}

/// Global optimum of `max ‖F_P^H s‖²` subject to `‖F_S^H s‖² <= alpha` over all
/// `s ∈ {±1}^n`, visited in Gray-code order with incremental updates of the band
/// coefficients.
pub fn exhaustive_single(
    message: &BandSubspace,
    interferer: &BandSubspace,
    alpha: f64,
) -> Result<ExhaustiveResult> {
    let n = message.ambient();
    if interferer.ambient() != n {
        return Err(dim_mismatch(
            "message and interferer bands differ in length",
        ));
    }
    if n > MAX_SINGLE_LEN {
        return Err(Error::EnumerationTooLarge {
            n,
            cap: MAX_SINGLE_LEN,
        });
    }
    if n == 0 {
        return Err(invalid("cannot enumerate length-0 sequences"));
    }
    let p = message.basis();
    let q = interferer.basis();
    let mut s = vec![1.0f64; n];
    // Coefficients F^H s, kept up to date across single-entry flips.
    let coeffs = |basis: &ComplexMatrix, s: &[f64]| -> Vec<Complex64> {
        (0..basis.ncols())
            .map(|k| (0..n).map(|i| basis[(i, k)].conj() * s[i]).sum())
            .collect()
    };
    let mut cp = coeffs(p, &s);
    let mut cq = coeffs(q, &s);
    let energy = |c: &[Complex64]| c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let limit = alpha + FEASIBILITY_RTOL * alpha.abs();

    let total = 1u64 << (n - 1);
    let mut best: Option<Vec<f64>> = None;
    let mut best_objective = f64::NEG_INFINITY;
    let mut feasible_count = 0u64;
    for step in 0..total {
        if step > 0 {
            // Gray code: flip entry 1 + trailing_zeros(step); entry 0 stays +1.
            let j = 1 + step.trailing_zeros() as usize;
            let delta = -2.0 * s[j];
            s[j] = -s[j];
            for (k, c) in cp.iter_mut().enumerate() {
                *c += p[(j, k)].conj() * delta;
            }
            for (k, c) in cq.iter_mut().enumerate() {
                *c += q[(j, k)].conj() * delta;
            }
            if step % 4096 == 0 {
                cp = coeffs(p, &s);
                cq = coeffs(q, &s);
            }
        }
        if energy(&cq) <= limit {
            feasible_count += 1;
            let obj = energy(&cp);
            if obj > best_objective {
                best_objective = obj;
                best = Some(s.clone());
            }
        }
    }
    Ok(ExhaustiveResult {
        best: best.map(|b| BinarySequence::from_f64(&b)).transpose()?,
        best_objective,
        feasible_count,
        enumerated: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsetStats {
    pub n: usize,
    pub alpha: f64,
    /// `histogram[v]` counts unordered pairs of distinct sequences with `|s_i^T s_j| = v`.
    pub histogram: Vec<u64>,
    /// Size of a greedily built set whose pairs all satisfy `|s_i^T s_j| <= alpha n`.
    /// A lower bound on the true maximum, not the maximum itself.
    pub greedy_count: usize,
    pub greedy_set: Vec<BinarySequence>,
}

fn bits_to_sequence(bits: u32, n: usize) -> BinarySequence {
    let entries = (0..n)
        .map(|i| if bits >> i & 1 == 0 { 1 } else { -1 })
        .collect();
    BinarySequence::new(entries).expect("n >= 1")
}

/// Inner-product statistics over all `2^n` binary sequences.
pub fn exhaustive_pairset(n: usize, alpha: f64) -> Result<PairsetStats> {
    if n > MAX_PAIRSET_LEN {
        return Err(Error::EnumerationTooLarge {
            n,
            cap: MAX_PAIRSET_LEN,
        });
    }
    if n == 0 {
        return Err(invalid("cannot enumerate length-0 sequences"));
    }
    let count = 1u32 << n;
    let inner =
        |a: u32, b: u32| (n as i64 - 2 * i64::from((a ^ b).count_ones())).unsigned_abs() as usize;
    let mut histogram = vec![0u64; n + 1];
    for a in 0..count {
        for b in (a + 1)..count {
            histogram[inner(a, b)] += 1;
        }
    }
    let bound = alpha * n as f64;
    let mut chosen: Vec<u32> = Vec::new();
    for a in 0..count {
        if chosen.iter().all(|&b| inner(a, b) as f64 <= bound) {
            chosen.push(a);
        }
    }
    Ok(PairsetStats {
        n,
        alpha,
        histogram,
        greedy_count: chosen.len(),
        greedy_set: chosen.into_iter().map(|b| bits_to_sequence(b, n)).collect(),
    })
}

/// Iterations of the inner low-rank ascent per dual evaluation.
const INNER_ITERS: usize = 4000;

/// `max tr(M V V^T)` over `V` with unit-norm rows, by the shifted power iteration
/// `V <- rownormalize((M + σ I) V)`, which never decreases the objective.
fn maxcut_value(m: &DMatrix<f64>, v: &mut DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let shift: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let shifted = m + DMatrix::identity(n, n) * shift;
    let value = |v: &DMatrix<f64>| (m * v).dot(v);
    let mut last = value(v);
    for _ in 0..INNER_ITERS {
        let mut next = &shifted * &*v;
        for mut row in next.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        *v = next;
        let now = value(v);
        if (now - last).abs() <= 1e-15 * now.abs().max(1.0) {
            last = now;
            break;
        }
        last = now;
    }
    last
}

/// Slow reference optimum of a one-inequality unit-diagonal SDP (the single-sequence
/// relaxation). Minimizes the dual function `g(λ) = λ b + max tr((C - λ B) T)` over
/// `λ >= 0` by bisection on the sign of its subgradient `b - tr(B T_λ)`, evaluating
/// each inner maximum with a full-rank factorization `T = V V^T`.
pub fn reference_single_sdp(problem: &SdpProblem) -> Result<f64> {
    if problem.inequalities.len() != 1 {
        return Err(invalid(
            "the reference solver handles exactly one inequality",
        ));
    }
    let n = problem.dim();
    let sign = match problem.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let c = problem.objective.as_matrix() * sign;
    let b = problem.inequalities[0].matrix.as_matrix();
    let bound = problem.inequalities[0].bound;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    for mut row in v.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    // Returns (g(λ), subgradient).
    let mut dual = |lambda: f64| {
        let m = &c - b * lambda;
        let inner = maxcut_value(&m, &mut v);
        let used = (b * &v).dot(&v);
        (lambda * bound + inner, bound - used)
    };

    let (g0, d0) = dual(0.0);
    if d0 >= 0.0 {
        return Ok(sign * g0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    loop {
        let (_, d) = dual(hi);
        if d >= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(invalid(
                "reference solver could not bracket the multiplier; the SDP looks infeasible",
            ));
        }
    }
    let mut best = f64::INFINITY;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (g, d) = dual(mid);
        best = best.min(g);
        if d < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best = best.min(dual(lo).0).min(dual(hi).0);
    Ok(sign * best)
}
