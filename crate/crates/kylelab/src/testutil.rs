//! Shared model fixtures for unit tests.

use crate::model::{build_signal_model, DistributionSpec, NoiseIntensity, SignalModel, StateGrid};

/// Two disjoint interior unit-height blocks of total length 1 each, on a
/// grid with power-of-two spacing: exactly orthonormal in L2, so the
/// information intensity matrix is exactly the identity at sigma = 1.
pub fn orthonormal_block_model() -> SignalModel {
    let n = 4097;
    let grid = StateGrid::new(-1.0, 3.0, n).unwrap(); // dx = 2^-10
    let dx = grid.dx();
    let block = (1.0 / dx).round() as usize; // 1024 nodes
    let mut v1 = vec![0.0; n];
    let mut v2 = vec![0.0; n];
    for k in 0..block {
        v1[256 + k] = 1.0;
        v2[2304 + k] = 1.0;
    }
    build_signal_model(
        grid,
        &[
            DistributionSpec::Tabulated { values: v1 },
            DistributionSpec::Tabulated { values: v2 },
        ],
        &[0.5, 0.5],
        NoiseIntensity::Constant(1.0),
    )
    .unwrap()
}

/// Mean-information model: two normals with shifted means, equal variance.
pub fn mean_model() -> SignalModel {
    let grid = StateGrid::new(-7.0, 8.0, 1601).unwrap();
    build_signal_model(
        grid,
        &[
            DistributionSpec::Normal { mu: 1.0, sigma: 1.0 },
            DistributionSpec::Normal { mu: 0.0, sigma: 1.0 },
        ],
        &[0.5, 0.5],
        NoiseIntensity::Constant(1.0),
    )
    .unwrap()
}

/// Volatility-information model: two normals with a common mean and
/// sigma_high > sigma_low. Signal 1 is the high-volatility signal.
pub fn vol_model(mean: f64, sigma_high: f64, sigma_low: f64) -> SignalModel {
    let grid = StateGrid::new(mean - 6.0 * sigma_high, mean + 6.0 * sigma_high, 1601).unwrap();
    build_signal_model(
        grid,
        &[
            DistributionSpec::Normal { mu: mean, sigma: sigma_high },
            DistributionSpec::Normal { mu: mean, sigma: sigma_low },
        ],
        &[0.5, 0.5],
        NoiseIntensity::Constant(1.0),
    )
    .unwrap()
}

/// Skewness-information model: mirrored skew-normals about `center`, equal
/// mean and variance, opposite skew. Signal 1 is right-skewed.
pub fn skew_model(center: f64, omega: f64, shape: f64) -> SignalModel {
    let delta = shape / (1.0 + shape * shape).sqrt();
    let offset = omega * delta * (2.0 / std::f64::consts::PI).sqrt();
    let xi_right = center - offset;
    let xi_left = center + offset;
    let span = 8.0 * omega;
    let grid = StateGrid::new(center - span, center + span, 1601).unwrap();
    build_signal_model(
        grid,
        &[
            DistributionSpec::SkewNormal { xi: xi_right, omega, alpha: shape },
            DistributionSpec::SkewNormal { xi: xi_left, omega, alpha: -shape },
        ],
        &[0.5, 0.5],
        NoiseIntensity::Constant(1.0),
    )
    .unwrap()
}
