//! Shared fixtures for the criterion benchmarks under `benches/`.

use mbseq::bases::band_geometry;
use mbseq::{prbs_set, BandGeometry, BasisKind, BinarySequence, GridSpec};

/// Geometry for `N` branches at oversampling `R` with the interferer centred mid-band.
pub fn geometry(base_len: usize, oversampling: usize, kind: BasisKind) -> BandGeometry {
    let grid = GridSpec::new(base_len, oversampling).expect("valid grid");
    band_geometry(grid, base_len / 2 + 1, kind).expect("valid centre")
}

/// `count` pseudorandom prior branches of the right length.
pub fn priors(base_len: usize, oversampling: usize, count: usize) -> Vec<BinarySequence> {
    prbs_set(base_len, oversampling, 11)
        .expect("valid grid")
        .rows()[..count]
        .to_vec()
}
