//! Randomized rounding of a lifted SDP solution to binary sequences.
//!
//! A candidate is `sign(U Λ^{1/2} v)` for a standard normal `v`, where `U Λ U^T` is
//! the eigendecomposition of the relaxed matrix. Candidate `ℓ` of branch `k` draws
//! from its own ChaCha8 stream, keyed by `(seed, k, ℓ)`, so the pool does not depend
//! on evaluation order or on how work is spread across threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{BandSubspace, GridSpec};
use crate::error::{dim_mismatch, invalid, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, EigDecomposition};
use crate::sdp::CoherenceConvention;

/// Relative slack allowed when comparing a constraint value with its bound. It only
/// absorbs floating-point noise in the evaluation itself.
pub const FEASIBILITY_RTOL: f64 = 1e-12;

/// A ±1 sequence, optionally tagged with the branch that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinarySequence {
    entries: Vec<i8>,
    branch: Option<usize>,
}

impl BinarySequence {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("binary sequence must not be empty"));
        }
        if let Some(pos) = entries.iter().position(|&e| e != 1 && e != -1) {
            return Err(invalid(format!(
                "entry {pos} of a binary sequence is {}, expected +1 or -1",
                entries[pos]
            )));
        }
        Ok(Self {
            entries,
            branch: None,
        })
    }

    /// Builds a sequence from reals that must each be exactly ±1.
    pub fn from_f64(values: &[f64]) -> Result<Self> {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 1.0 {
                    Ok(1)
                } else if v == -1.0 {
                    Ok(-1)
                } else {
                    Err(invalid(format!("entry {i} is {v}, expected +1 or -1")))
                }
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(entries)
    }

    pub fn with_branch(mut self, branch: usize) -> Self {
        self.branch = Some(branch);
        self
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn branch(&self) -> Option<usize> {
        self.branch
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; present for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|&e| f64::from(e)).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|&e| -e).collect(),
            branch: self.branch,
        }
    }

    /// Circular shift to the right by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut entries = self.entries.clone();
        let n = entries.len();
        entries.rotate_right(k % n);
        Self {
            entries,
            branch: None,
        }
    }
}

/// Element-wise sign with `sign(0) = +1`.
///
/// NaN also maps to `+1`; the rounding path never produces one, but the function
/// stays total.
pub fn quantize(w: &[f64]) -> BinarySequence {
    let entries = w.iter().map(|&x| if x < 0.0 { -1 } else { 1 }).collect();
    BinarySequence {
        entries,
        branch: None,
    }
}

/// The RNG stream for candidate `index` of branch `branch`.
pub fn candidate_rng(seed: u64, branch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((branch as u64) << 40) | index as u64);
    rng
}

/// Precomputed factor `U Λ₊^{1/2}` for repeated Gaussian projections.
#[derive(Debug, Clone)]
pub struct Projector {
    /// Only the columns with positive eigenvalues; the rest contribute nothing.
    factor: DMatrix<f64>,
    dim: usize,
}

impl Projector {
    pub fn new(eig: &EigDecomposition) -> Self {
        let dim = eig.dim();
        // Eigenvalues are sorted in descending order, so the positive ones lead.
        let rank = eig.values.iter().take_while(|&&l| l > 0.0).count();
        let mut factor = eig.vectors.columns(0, rank).into_owned();
        for k in 0..rank {
            factor.column_mut(k).scale_mut(eig.values[k].sqrt());
        }
        Self { factor, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws `w = U Λ₊^{1/2} v` with `v` standard normal of full dimension.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let rank = self.factor.ncols();
        let w = &self.factor * DVector::from_column_slice(&v[..rank]);
        w.as_slice().to_vec()
    }
}

/// One Gaussian projection of the matrix described by `eig`.
pub fn random_projection<R: Rng + ?Sized>(eig: &EigDecomposition, rng: &mut R) -> Vec<f64> {
    Projector::new(eig).draw(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Branch design: smallest interferer-band energy wins.
    MinInterferer,
    /// Single-sequence design: largest message-band energy wins.
    MaxMessage,
}

impl SelectionMode {
    /// Whether objective `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            SelectionMode::MinInterferer => a < b,
            SelectionMode::MaxMessage => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub sequence: BinarySequence,
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
enum Constraints {
    /// `‖F_S^H s‖² <= bound`.
    BandEnergy { basis: ComplexMatrix, bound: f64 },
    /// `|u_i^H s| <= bound` with `u_i = F_P F_P^H s_i`.
    Coherence {
        vectors: Vec<ComplexVector>,
        bound: f64,
    },
}

/// Scores candidates for one design step. Construction does all the per-branch
/// precomputation so each evaluation costs `O(n)` per basis vector or prior.
#[derive(Debug, Clone)]
pub struct CandidateEvaluator {
    mode: SelectionMode,
    objective_basis: ComplexMatrix,
    constraints: Constraints,
    len: usize,
}

fn band_energy(basis: &ComplexMatrix, s: &[f64]) -> f64 {
    basis
        .column_iter()
        .map(|col| {
            let z = col
                .iter()
                .zip(s)
                .fold(nalgebra::Complex::new(0.0, 0.0), |acc, (c, &x)| {
                    acc + c.conj() * x
                });
            z.norm_sqr()
        })
        .sum()
}

impl CandidateEvaluator {
    /// Single-sequence mode: objective is message energy, constraint is interferer
    /// energy at most `alpha`.
    pub fn single(message: &BandSubspace, interferer: &BandSubspace, alpha: f64) -> Result<Self> {
        if message.ambient() != interferer.ambient() {
            return Err(dim_mismatch(
                "message and interferer bands differ in length",
            ));
        }
        if !(alpha > 0.0) {
            return Err(invalid(format!(
                "interferer tolerance must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            mode: SelectionMode::MaxMessage,
            objective_basis: message.basis().clone(),
            constraints: Constraints::BandEnergy {
                basis: interferer.basis().clone(),
                bound: alpha,
            },
            len: message.ambient(),
        })
    }

    /// Branch mode: objective is interferer energy, constraints are the coherence
    /// magnitudes with every prior, each bounded as `convention` prescribes.
    pub fn branch(
        message: &BandSubspace,
        interferer: &BandSubspace,
        prior: &[BinarySequence],
        alpha: f64,
        convention: CoherenceConvention,
        grid: GridSpec,
    ) -> Result<Self> {
        let n = grid.len();
        if message.ambient() != n || interferer.ambient() != n {
            return Err(dim_mismatch(format!("bands must have length {n}")));
        }
        if !(alpha > 0.0) {
            return Err(invalid(format!(
                "coherence tolerance must be positive, got {alpha}"
            )));
        }
        let vectors = prior
            .iter()
            .map(|s| {
                if s.len() != n {
                    return Err(dim_mismatch(format!(
                        "prior has length {}, expected {n}",
                        s.len()
                    )));
                }
                Ok(message.project_back_real(&s.to_f64()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mode: SelectionMode::MinInterferer,
            objective_basis: interferer.basis().clone(),
            constraints: Constraints::Coherence {
                vectors,
                bound: convention.magnitude_bound(alpha, n),
            },
            len: n,
        })
    }

    pub fn mode(&self) -> SelectionMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The bound every constraint value is compared with.
    pub fn bound(&self) -> f64 {
        match &self.constraints {
            Constraints::BandEnergy { bound, .. } | Constraints::Coherence { bound, .. } => *bound,
        }
    }

    pub fn evaluate(&self, sequence: BinarySequence) -> Result<CandidateRecord> {
        if sequence.len() != self.len {
            return Err(dim_mismatch(format!(
                "candidate has length {}, expected {}",
                sequence.len(),
                self.len
            )));
        }
        let s = sequence.to_f64();
        let objective = band_energy(&self.objective_basis, &s);
        let constraints: Vec<f64> = match &self.constraints {
            Constraints::BandEnergy { basis, .. } => vec![band_energy(basis, &s)],
            Constraints::Coherence { vectors, .. } => vectors
                .iter()
                .map(|u| {
                    u.iter()
                        .zip(&s)
                        .fold(nalgebra::Complex::new(0.0, 0.0), |acc, (c, &x)| {
                            acc + c.conj() * x
                        })
                        .norm()
                })
                .collect(),
        };
        let limit = self.bound() * (1.0 + FEASIBILITY_RTOL);
        let feasible = objective.is_finite() && constraints.iter().all(|&v| v <= limit);
        Ok(CandidateRecord {
            sequence,
            objective,
            constraints,
            feasible,
        })
    }
}

/// Convenience wrapper: branch mode when `prior` is `Some`, single mode otherwise.
pub fn evaluate_candidate(
    sequence: BinarySequence,
    message: &BandSubspace,
    interferer: &BandSubspace,
    prior: Option<&[BinarySequence]>,
    alpha: f64,
    convention: CoherenceConvention,
    grid: GridSpec,
) -> Result<CandidateRecord> {
    let evaluator = match prior {
        Some(prior) => {
            CandidateEvaluator::branch(message, interferer, prior, alpha, convention, grid)?
        }
        None => CandidateEvaluator::single(message, interferer, alpha)?,
    };
    evaluator.evaluate(sequence)
}

/// Best feasible candidate under `mode`; ties go to the earliest index.
pub fn select_best(
    candidates: &[CandidateRecord],
    mode: SelectionMode,
) -> Option<&CandidateRecord> {
    let mut best: Option<&CandidateRecord> = None;
    for c in candidates.iter().filter(|c| c.feasible) {
        if best.is_none_or(|b| mode.better(c.objective, b.objective)) {
            best = Some(c);
        }
    }
    best
}

/// Result of rounding one relaxed matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    pub best: Option<CandidateRecord>,
    /// Position of `best` in the candidate pool.
    pub best_index: Option<usize>,
    pub tried: usize,
    pub feasible: usize,
}

/// Draws the pool of `count` quantized candidates for `branch`, in index order.
pub fn candidate_pool(
    eig: &EigDecomposition,
    count: usize,
    seed: u64,
    branch: usize,
) -> Vec<BinarySequence> {
    let projector = Projector::new(eig);
    (0..count)
        .into_par_iter()
        .map(|l| quantize(&projector.draw(&mut candidate_rng(seed, branch, l))))
        .collect()
}

/// Generates, evaluates and selects among `count` candidates in parallel without
/// keeping the whole pool. Gives the same answer as [`select_best`] over
/// [`candidate_pool`] regardless of the thread count.
pub fn round(
    eig: &EigDecomposition,
    evaluator: &CandidateEvaluator,
    count: usize,
    seed: u64,
    branch: usize,
) -> Result<RoundingOutcome> {
    if eig.dim() != evaluator.len() {
        return Err(dim_mismatch(format!(
            "relaxed matrix is {0}x{0}, candidates have length {1}",
            eig.dim(),
            evaluator.len()
        )));
    }
    let projector = Projector::new(eig);
    let mode = evaluator.mode();

    type Best = Option<(usize, CandidateRecord)>;
    fn pick(a: Best, b: Best, mode: SelectionMode) -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => {
                let b_wins = mode.better(b.1.objective, a.1.objective)
                    || (b.1.objective == a.1.objective && b.0 < a.0);
                Some(if b_wins { b } else { a })
            }
        }
    }

    let (best, feasible) = (0..count)
        .into_par_iter()
        .map(|l| {
            let s = quantize(&projector.draw(&mut candidate_rng(seed, branch, l)));
            let record = evaluator
                .evaluate(s)
                .expect("candidate length checked above");
            if record.feasible {
                (Some((l, record)), 1usize)
            } else {
                (None, 0)
            }
        })
        .reduce(|| (None, 0), |a, b| (pick(a.0, b.0, mode), a.1 + b.1));

    Ok(RoundingOutcome {
        best_index: best.as_ref().map(|b| b.0),
        best: best.map(|b| b.1),
        tried: count,
        feasible,
    })
}
