//! Complex exponentials, Fourier and Slepian band subspaces.
//!
//! Frequencies are normalised to `[0, 1)` and band indices are 1-based on the
//! oversampled grid of length `n = R * N`, so index `m` corresponds to the on-grid
//! frequency `(m - 1) / n`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{sym_eig, Complex64, ComplexMatrix, ComplexVector, RealSymMatrix};

/// Sequence grid: `base_len` branches/base length `N`, oversampling `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base_len: usize,
    pub oversampling: usize,
}

impl GridSpec {
    pub fn new(base_len: usize, oversampling: usize) -> Result<Self> {
        if base_len < 2 {
            return Err(invalid(format!(
                "base length N must be >= 2, got {base_len}"
            )));
        }
        if oversampling < 1 {
            return Err(invalid("oversampling R must be >= 1"));
        }
        Ok(Self {
            base_len,
            oversampling,
        })
    }

    /// Sequence length `R * N`.
    pub fn len(&self) -> usize {
        self.base_len * self.oversampling
    }

    /// Always false: construction rejects empty grids.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// On-grid frequency of 1-based index `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        (m as f64 - 1.0) / self.len() as f64
    }
}

/// Which basis represents the interferer band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Fourier,
    Slepian,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisKind::Fourier => f.write_str("fourier"),
            BasisKind::Slepian => f.write_str("slepian"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BandDescriptor {
    /// On-grid DFT columns, 1-based indices.
    Fourier { indices: Vec<usize> },
    /// Slepian basis modulated to the on-grid centre `center`.
    Slepian {
        center: usize,
        params: SlepianParams,
    },
    /// No columns.
    Empty,
}

/// Half bandwidth `W` and number of retained Slepian elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlepianParams {
    pub half_bandwidth: f64,
    pub count: usize,
}

impl SlepianParams {
    pub fn new(half_bandwidth: f64, count: usize) -> Result<Self> {
        if !(half_bandwidth > 0.0 && half_bandwidth < 0.5) {
            return Err(invalid(format!(
                "half bandwidth must lie in (0, 0.5), got {half_bandwidth}"
            )));
        }
        if count == 0 {
            return Err(invalid("Slepian element count must be >= 1"));
        }
        Ok(Self {
            half_bandwidth,
            count,
        })
    }
}

/// Complex `n x d` matrix whose columns span a frequency band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSubspace {
    basis: ComplexMatrix,
    descriptor: BandDescriptor,
    grid: GridSpec,
}

impl BandSubspace {
    /// A subspace with no columns: every energy and projection is zero.
    pub fn empty(grid: GridSpec) -> Self {
        Self {
            basis: ComplexMatrix::zeros(grid.len(), 0),
            descriptor: BandDescriptor::Empty,
            grid,
        }
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn descriptor(&self) -> &BandDescriptor {
        &self.descriptor
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Ambient dimension `n`.
    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of basis columns.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Coefficients `F^H s` of a real sequence.
    pub fn project_real(&self, s: &[f64]) -> ComplexVector {
        assert_eq!(
            s.len(),
            self.ambient(),
            "sequence length vs ambient dimension"
        );
        ComplexVector::from_fn(self.dim(), |k, _| {
            let col = self.basis.column(k);
            let mut acc = Complex64::new(0.0, 0.0);
            for (f, &x) in col.iter().zip(s) {
                acc += f.conj() * x;
            }
            acc
        })
    }

    /// `F F^H s` for a real sequence.
    pub fn project_back_real(&self, s: &[f64]) -> ComplexVector {
        &self.basis * self.project_real(s)
    }

    /// Band energy `||F^H s||^2` of a real sequence.
    pub fn energy(&self, s: &[f64]) -> f64 {
        self.project_real(s).norm_squared()
    }

    /// `||F^H x||^2` for a complex vector, e.g. a complex exponential.
    pub fn captured_energy(&self, x: &ComplexVector) -> f64 {
        self.basis.ad_mul(x).norm_squared()
    }

    /// The real symmetric matrix `Re(F F^H)`; for real `s`,
    /// `s^T Re(F F^H) s = ||F^H s||^2` exactly.
    pub fn real_gram(&self) -> RealSymMatrix {
        RealSymMatrix::symmetrized(self.hermitian_projector().map(|z| z.re))
    }

    /// The Hermitian matrix `F F^H`.
    pub fn hermitian_projector(&self) -> ComplexMatrix {
        self.basis.clone() * self.basis.adjoint()
    }
}

/// `e^{j 2 pi f k} / sqrt(n)` for `k = 0..n`. `f` is reduced modulo 1.
pub fn complex_exponential(f: f64, n: usize) -> ComplexVector {
    let f = f.rem_euclid(1.0);
    let scale = 1.0 / (n as f64).sqrt();
    ComplexVector::from_fn(n, |k, _| {
        Complex64::from_polar(scale, 2.0 * PI * f * k as f64)
    })
}

/// DFT columns `F((m - 1) / n)` for the given 1-based indices.
pub fn fourier_band(indices: &[usize], grid: GridSpec) -> Result<BandSubspace> {
    let n = grid.len();
    if indices.is_empty() {
        return Err(invalid("Fourier band needs at least one index"));
    }
    let mut seen = vec![false; n + 1];
    for &m in indices {
        if m == 0 || m > n {
            return Err(invalid(format!("band index {m} outside 1..={n}")));
        }
        if seen[m] {
            return Err(invalid(format!("duplicate band index {m}")));
        }
        seen[m] = true;
    }
    let mut basis = ComplexMatrix::zeros(n, indices.len());
    for (col, &m) in indices.iter().enumerate() {
        basis.set_column(col, &complex_exponential(grid.frequency(m), n));
    }
    Ok(BandSubspace {
        basis,
        descriptor: BandDescriptor::Fourier {
            indices: indices.to_vec(),
        },
        grid,
    })
}

/// Leading Slepian (DPSS) vectors and their concentration eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Dpss {
    /// `n x d`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// Fraction of each column's energy inside `[-W, W]`, descending.
    pub eigenvalues: Vec<f64>,
}

/// The prolate matrix `B[k, l] = sin(2 pi W (k - l)) / (pi (k - l))`, diagonal `2W`.
pub fn prolate_matrix(n: usize, half_bandwidth: f64) -> RealSymMatrix {
    RealSymMatrix::from_lower_fn(n, |k, l| {
        if k == l {
            2.0 * half_bandwidth
        } else {
            let d = (k - l) as f64;
            (2.0 * PI * half_bandwidth * d).sin() / (PI * d)
        }
    })
}

/// The `count` leading eigenvectors of the prolate matrix, each signed so that
/// its first nonzero entry is positive.
pub fn dpss(n: usize, half_bandwidth: f64, count: usize) -> Result<Dpss> {
    let params = SlepianParams::new(half_bandwidth, count)?;
    if count > n {
        return Err(invalid(format!(
            "cannot take {count} Slepian vectors of length {n}"
        )));
    }
    let eig = sym_eig(&prolate_matrix(n, params.half_bandwidth))?;
    Ok(Dpss {
        vectors: eig.vectors.columns(0, count).into_owned(),
        eigenvalues: eig.values[..count].to_vec(),
    })
}

/// Slepian vectors modulated to the on-grid centre frequency of index `center`:
/// column `k` is `sqrt(n) F(f_c) .* g_k`.
pub fn slepian_band(center: usize, grid: GridSpec, params: SlepianParams) -> Result<BandSubspace> {
    let n = grid.len();
    if center == 0 || center > n {
        return Err(invalid(format!("centre index {center} outside 1..={n}")));
    }
    let slepian = dpss(n, params.half_bandwidth, params.count)?;
    let carrier = complex_exponential(grid.frequency(center), n);
    let root_n = (n as f64).sqrt();
    let basis = ComplexMatrix::from_fn(n, params.count, |i, k| {
        carrier[i] * (root_n * slepian.vectors[(i, k)])
    });
    Ok(BandSubspace {
        basis,
        descriptor: BandDescriptor::Slepian { center, params },
        grid,
    })
}

/// Number of Slepian elements used for an interferer band of half width `1 / RN`.
pub const INTERFERER_SLEPIAN_COUNT: usize = 3;

/// Message and interferer subspaces of one design problem.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGeometry {
    pub grid: GridSpec,
    /// 1-based centre index of the interferer band, if any.
    pub center: Option<usize>,
    pub kind: BasisKind,
    pub message_indices: Vec<usize>,
    pub interferer_indices: Vec<usize>,
    pub message: BandSubspace,
    pub interferer: BandSubspace,
}

/// Interferer band `{c-1, c, c+1}` and message band `{1..N} \ {c-1, c, c+1}` on the
/// oversampled grid. The interferer is represented by the three DFT columns or by
/// three Slepian elements of half bandwidth `1 / RN` modulated to `f_c`; the message
/// band always uses DFT columns.
pub fn band_geometry(grid: GridSpec, center: usize, kind: BasisKind) -> Result<BandGeometry> {
    let big_n = grid.base_len;
    if big_n < 3 || center < 2 || center > big_n - 1 {
        return Err(invalid(format!(
            "interferer centre c = {center} must satisfy 2 <= c <= N - 1 = {}",
            big_n.saturating_sub(1)
        )));
    }
    let interferer_indices = vec![center - 1, center, center + 1];
    let message_indices: Vec<usize> = (1..=big_n)
        .filter(|m| !interferer_indices.contains(m))
        .collect();
    let interferer = match kind {
        BasisKind::Fourier => fourier_band(&interferer_indices, grid)?,
        BasisKind::Slepian => {
            let params = SlepianParams::new(1.0 / grid.len() as f64, INTERFERER_SLEPIAN_COUNT)?;
            slepian_band(center, grid, params)?
        }
    };
    let message = if message_indices.is_empty() {
        BandSubspace::empty(grid)
    } else {
        fourier_band(&message_indices, grid)?
    };
    Ok(BandGeometry {
        grid,
        center: Some(center),
        kind,
        message_indices,
        interferer_indices,
        message,
        interferer,
    })
}

/// Geometry without an interferer: the message band is all of `{1..N}` and the
/// design reduces to the coherence constraints alone.
pub fn message_only_geometry(grid: GridSpec) -> Result<BandGeometry> {
    let message_indices: Vec<usize> = (1..=grid.base_len).collect();
    Ok(BandGeometry {
        grid,
        center: None,
        kind: BasisKind::Fourier,
        message: fourier_band(&message_indices, grid)?,
        message_indices,
        interferer_indices: Vec::new(),
        interferer: BandSubspace::empty(grid),
    })
}
