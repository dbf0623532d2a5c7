//! State grid, payoff distribution families, and the signal model.
//!
//! A signal model is the primitive every other module consumes: a uniform
//! grid over the terminal states `[x_lo, x_hi]`, one payoff density
//! `eta(., s_i)` per signal sampled on that grid, a prior over signals, and
//! the noise trading intensity `sigma`.
//!
//! Unbounded supports are truncated to the grid and renormalized; with the
//! default 6-scale-unit margin the discarded tail mass is below 1e-8.

use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

/// Uniform grid of `n >= 3` strictly increasing state points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl StateGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidGrid(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need n >= 3, got {n}")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid spacing `(hi - lo) / (n - 1)`.
    #[inline]
    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    #[inline]
    pub fn point(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    /// Index of the grid node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.dx()).round();
        (k.max(0.0) as usize).min(self.n - 1)
    }

    /// Composite trapezoid quadrature of nodal values.
    pub fn trapezoid(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let inner: f64 = f[1..self.n - 1].iter().sum();
        self.dx() * (0.5 * f[0] + inner + 0.5 * f[self.n - 1])
    }

    /// Left-endpoint Riemann sum over the `n - 1` grid cells.
    ///
    /// This is the discretization used for all pathwise (order-flow)
    /// integrals, matching the Riemann-sum construction of the posterior.
    pub fn left_riemann(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        self.dx() * f[..self.n - 1].iter().sum::<f64>()
    }

    /// Linear interpolation of nodal values at `x` (clamped to the grid).
    pub fn interp(&self, f: &[f64], x: f64) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let t = ((x - self.lo) / self.dx()).clamp(0.0, (self.n - 1) as f64);
        let k = (t.floor() as usize).min(self.n - 2);
        let w = t - k as f64;
        f[k] * (1.0 - w) + f[k + 1] * w
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Payoff distribution family for one signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    Normal {
        mu: f64,
        sigma: f64,
    },
    SkewNormal {
        xi: f64,
        omega: f64,
        alpha: f64,
    },
    Tabulated {
        values: Vec<f64>,
    },
    /// Point masses assigned to the nearest (interior) grid cell, stored as
    /// `(state, mass)` pairs. Used for exact discrete-state cross-checks.
    DiscreteAtoms {
        atoms: Vec<(f64, f64)>,
    },
}

impl DistributionSpec {
    /// `(location, scale)` used by the default grid rule; `None` for
    /// grid-native kinds.
    fn location_scale(&self) -> Option<(f64, f64)> {
        match *self {
            DistributionSpec::Normal { mu, sigma } => Some((mu, sigma)),
            DistributionSpec::SkewNormal { xi, omega, .. } => Some((xi, omega)),
            _ => None,
        }
    }

    fn validate(&self, grid: &StateGrid) -> Result<()> {
        match self {
            DistributionSpec::Normal { sigma, .. } if *sigma <= 0.0 => Err(
                Error::InvalidDistribution(format!("normal sigma must be > 0, got {sigma}")),
            ),
            DistributionSpec::SkewNormal { omega, .. } if *omega <= 0.0 => Err(
                Error::InvalidDistribution(format!("skew-normal omega must be > 0, got {omega}")),
            ),
            DistributionSpec::Tabulated { values } => {
                if values.len() != grid.n {
                    return Err(Error::InvalidDistribution(format!(
                        "tabulated length {} does not match grid n {}",
                        values.len(),
                        grid.n
                    )));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidDistribution(
                        "tabulated values must be finite and nonnegative".into(),
                    ));
                }
                Ok(())
            }
            DistributionSpec::DiscreteAtoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidDistribution("no atoms given".into()));
                }
                if atoms.iter().any(|(_, m)| !m.is_finite() || *m < 0.0) {
                    return Err(Error::InvalidDistribution(
                        "atom masses must be finite and nonnegative".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Sample the (unnormalized) density on the grid nodes.
    fn sample(&self, grid: &StateGrid) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let dx = grid.dx();
        match self {
            DistributionSpec::Normal { mu, sigma } => Ok((0..grid.n)
                .map(|k| normal_pdf(grid.point(k), *mu, *sigma))
                .collect()),
            DistributionSpec::SkewNormal { xi, omega, alpha } => Ok((0..grid.n)
                .map(|k| skew_normal_pdf(grid.point(k), *xi, *omega, *alpha))
                .collect()),
            DistributionSpec::Tabulated { values } => Ok(values.clone()),
            DistributionSpec::DiscreteAtoms { atoms } => {
                let mut f = vec![0.0; grid.n];
                for &(x, m) in atoms {
                    if x < grid.lo || x > grid.hi {
                        return Err(Error::InvalidDistribution(format!(
                            "atom state {x} outside grid [{}, {}]",
                            grid.lo, grid.hi
                        )));
                    }
                    let k = grid.nearest(x);
                    if k == 0 || k == grid.n - 1 {
                        return Err(Error::InvalidDistribution(format!(
                            "atom state {x} maps to a boundary grid cell"
                        )));
                    }
                    f[k] += m / dx;
                }
                Ok(f)
            }
        }
    }
}

/// Standard normal density at `(x - mu) / sigma`, as a density in `x`.
pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Skew-normal density `2/omega * phi(z) * Phi(alpha z)`, `z = (x - xi)/omega`.
pub fn skew_normal_pdf(x: f64, xi: f64, omega: f64, alpha: f64) -> f64 {
    let z = (x - xi) / omega;
    2.0 / omega * normal_pdf(z, 0.0, 1.0) * normal_cdf(alpha * z)
}

/// Noise trading intensity: constant across markets, or one value per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseIntensity {
    Constant(f64),
    PerState(Vec<f64>),
}

impl NoiseIntensity {
    pub fn is_constant(&self) -> bool {
        matches!(self, NoiseIntensity::Constant(_))
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        match self {
            NoiseIntensity::Constant(s) => *s,
            NoiseIntensity::PerState(v) => v[k],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            NoiseIntensity::Constant(s) if *s > 0.0 && s.is_finite() => Ok(()),
            NoiseIntensity::Constant(s) => Err(Error::InvalidModel(format!(
                "noise sigma must be positive and finite, got {s}"
            ))),
            NoiseIntensity::PerState(v) => {
                if v.len() != n {
                    return Err(Error::InvalidModel(format!(
                        "per-state sigma length {} does not match grid n {n}",
                        v.len()
                    )));
                }
                if v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(Error::InvalidModel(
                        "per-state sigma must be positive and finite".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// The payoff densities, prior, and noise intensity defining one market.
///
/// Immutable after construction; `densities[i][k]` is `eta(x_k, s_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalModel {
    pub grid: StateGrid,
    pub densities: Vec<Vec<f64>>,
    pub prior: Vec<f64>,
    pub noise: NoiseIntensity,
    /// Trapezoid mass of each stored density. All 1.0 for freshly built
    /// models; differs from 1.0 after `reweight_to_uniform_prior`.
    pub masses: Vec<f64>,
    /// Factor each raw sampled density was multiplied by during
    /// normalization.
    pub renormalization: Vec<f64>,
}

impl SignalModel {
    pub fn signal_count(&self) -> usize {
        self.densities.len()
    }

    pub fn density(&self, i: usize) -> &[f64] {
        &self.densities[i]
    }

    /// Check the construction invariants, with unit masses required only
    /// when `require_unit_mass` (suspended after prior reweighting).
    pub fn validate(&self, require_unit_mass: bool) -> Result<()> {
        if self.densities.is_empty() {
            return Err(Error::InvalidModel("no signals".into()));
        }
        self.noise.validate(self.grid.n)?;
        let prior_sum: f64 = self.prior.iter().sum();
        if self.prior.len() != self.densities.len() || (prior_sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "prior must have length {} and sum to 1, got sum {prior_sum}",
                self.densities.len()
            )));
        }
        for (i, d) in self.densities.iter().enumerate() {
            if d.len() != self.grid.n {
                return Err(Error::InvalidModel(format!(
                    "density {i} has length {} but grid has {} points",
                    d.len(),
                    self.grid.n
                )));
            }
            if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidModel(format!(
                    "density {i} has negative or non-finite values"
                )));
            }
            if require_unit_mass {
                let mass = self.grid.trapezoid(d);
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(Error::InvalidModel(format!(
                        "density {i} has trapezoid mass {mass}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Default grid for parametric specs: `[min loc - 6 max scale,
/// max loc + 6 max scale]` with 1601 points (odd, so the center is a node).
pub const DEFAULT_GRID_POINTS: usize = 1601;

pub fn default_grid(specs: &[DistributionSpec]) -> Result<StateGrid> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for s in specs {
        let (loc, sc) = s.location_scale().ok_or_else(|| {
            Error::InvalidGrid("default grid needs parametric (normal/skew-normal) specs".into())
        })?;
        lo = lo.min(loc);
        hi = hi.max(loc);
        scale = scale.max(sc);
    }
    StateGrid::new(lo - 6.0 * scale, hi + 6.0 * scale, DEFAULT_GRID_POINTS)
}

/// Sample the specs on the grid, renormalize each density to unit trapezoid
/// mass, and assemble the model.
pub fn build_signal_model(
    grid: StateGrid,
    specs: &[DistributionSpec],
    prior: &[f64],
    noise: NoiseIntensity,
) -> Result<SignalModel> {
    if specs.is_empty() {
        return Err(Error::InvalidModel("need at least one signal spec".into()));
    }
    if prior.len() != specs.len() {
        return Err(Error::InvalidModel(format!(
            "prior length {} does not match {} specs",
            prior.len(),
            specs.len()
        )));
    }
    if prior.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidModel("prior weights must be nonnegative".into()));
    }
    let wsum: f64 = prior.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::InvalidModel("prior weights sum to zero".into()));
    }
    noise.validate(grid.n)?;

    let mut densities = Vec::with_capacity(specs.len());
    let mut renorm = Vec::with_capacity(specs.len());
    for spec in specs {
        let raw = spec.sample(&grid)?;
        let mass = grid.trapezoid(&raw);
        if !(mass > 0.0) {
            return Err(Error::InvalidDistribution(
                "density has zero mass on the grid".into(),
            ));
        }
        renorm.push(1.0 / mass);
        densities.push(raw.iter().map(|v| v / mass).collect());
    }

    let model = SignalModel {
        grid,
        masses: vec![1.0; densities.len()],
        densities,
        prior: prior.iter().map(|w| w / wsum).collect(),
        noise,
        renormalization: renorm,
    };
    model.validate(true)?;
    Ok(model)
}

/// Prior expected payoff `K0 = sum_i pi0(i) * integral x eta(x, s_i) dx`.
pub fn prior_mean(model: &SignalModel) -> f64 {
    let xs = model.grid.points();
    model
        .prior
        .iter()
        .zip(&model.densities)
        .map(|(w, d)| {
            let xf: Vec<f64> = xs.iter().zip(d).map(|(x, f)| x * f).collect();
            w * model.grid.trapezoid(&xf)
        })
        .sum()
}

/// Fold a general prior into the payoffs: returns the equivalent model with
/// uniform prior and densities scaled by `pi0(s_i) / (1/I)`.
///
/// The scaled "densities" no longer integrate to one; the new masses are
/// recorded in `masses` and the unit-mass invariant is suspended on the
/// output.
pub fn reweight_to_uniform_prior(model: &SignalModel) -> Result<SignalModel> {
    let count = model.signal_count();
    if model.prior.iter().any(|w| *w <= 0.0) {
        return Err(Error::InvalidModel(
            "reweighting needs strictly positive prior weights".into(),
        ));
    }
    let mut out = model.clone();
    for (i, scale) in model.prior.iter().map(|w| w * count as f64).enumerate() {
        for v in &mut out.densities[i] {
            *v *= scale;
        }
        out.masses[i] = model.masses[i] * scale;
        out.renormalization[i] = model.renormalization[i] * scale;
    }
    out.prior = vec![1.0 / count as f64; count];
    Ok(out)
}

/// On-disk model description (`{"grid": .., "signals": .., "prior": ..,
/// "noise_sigma": ..}`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub grid: Option<GridFile>,
    pub signals: Vec<DistributionSpec>,
    pub prior: Option<Vec<f64>>,
    pub noise_sigma: NoiseIntensity,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridFile {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl ModelFile {
    pub fn from_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<SignalModel> {
        let grid = match self.grid {
            Some(g) => StateGrid::new(g.lo, g.hi, g.n)?,
            None => default_grid(&self.signals)?,
        };
        let prior = match &self.prior {
            Some(p) => p.clone(),
            None => vec![1.0 / self.signals.len() as f64; self.signals.len()],
        };
        build_signal_model(grid, &self.signals, &prior, self.noise_sigma.clone())
    }
}
