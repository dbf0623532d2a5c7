//! Equilibrium informed demand and its options decomposition.
//!
//! Conditional on signal `i` the insider's portfolio is built in three
//! steps: form the long-short allocation `Q e_i` over payoff distributions,
//! adjust for information intensity with `L^-1`, and scale by the
//! endogenous constant:
//!
//! ```text
//! W*(., s_i) = sum_j beta_j^(i) eta(., s_j),   beta^(i) = alpha* L^-1 Q e_i.
//! ```
//!
//! Any state-contingent portfolio is equivalently cash + futures +
//! out-of-the-money options via the static replication
//!
//! ```text
//! W(x) = W(K0) + W'(K0)(x - K0)
//!        + int_{lo}^{K0} W''(K) (K - x)+ dK + int_{K0}^{hi} W''(K) (x - K)+ dK,
//! ```
//!
//! discretized with central differences on the uniform strike grid.

use nalgebra::DMatrix;

use crate::equilibrium::{projection_q, EquilibriumSolution};
use crate::error::{Error, Result};
use crate::intensity::IntensityMatrix;
use crate::model::{SignalModel, StateGrid};

/// Shares of each state security, sampled on the state grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioOnGrid {
    pub weights: Vec<f64>,
}

impl PortfolioOnGrid {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    pub fn zeros(n: usize) -> Self {
        Self { weights: vec![0.0; n] }
    }
}

impl From<Vec<f64>> for PortfolioOnGrid {
    fn from(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

/// Demand coefficients; column `i` holds `beta^(i)`.
#[derive(Debug, Clone)]
pub struct DemandMatrix {
    pub beta: DMatrix<f64>,
}

/// Cash/futures/option-density coordinates of a portfolio around the pivot
/// strike `k0`: out-of-the-money puts below, calls above.
#[derive(Debug, Clone)]
pub struct OptionDecomposition {
    pub cash: f64,
    pub futures: f64,
    /// `W''(K)` per strike node.
    pub option_density: Vec<f64>,
    pub k0: f64,
}

impl OptionDecomposition {
    /// Option side quoted at strike `k`: puts below the pivot, calls above.
    pub fn side(&self, k: f64) -> OptionSide {
        if k < self.k0 {
            OptionSide::Put
        } else {
            OptionSide::Call
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionSide {
    Put,
    Call,
}

impl std::fmt::Display for OptionSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptionSide::Put => write!(f, "put"),
            OptionSide::Call => write!(f, "call"),
        }
    }
}

/// Construct the equilibrium informed demand for every signal.
///
/// Rank-deficient intensity uses the pseudoinverse and returns the
/// minimum-norm coefficients; the portfolio payoff is unique even when the
/// allocation across densities is not.
pub fn informed_demand(
    model: &SignalModel,
    eq: &EquilibriumSolution,
    intensity: &IntensityMatrix,
) -> Result<(DemandMatrix, Vec<PortfolioOnGrid>)> {
    let count = model.signal_count();
    if eq.signal_count != count || intensity.dim() != count {
        return Err(Error::DimensionMismatch(format!(
            "model has {count} signals, equilibrium {}, intensity {}",
            eq.signal_count,
            intensity.dim()
        )));
    }
    let q = projection_q(count)?;
    let beta = eq.alpha_star * &intensity.pinv * q;
    let portfolios = (0..count)
        .map(|i| {
            let mut w = vec![0.0; model.grid.n];
            for j in 0..count {
                let b = beta[(j, i)];
                for (wk, dk) in w.iter_mut().zip(&model.densities[j]) {
                    *wk += b * dk;
                }
            }
            PortfolioOnGrid::new(w)
        })
        .collect();
    Ok((DemandMatrix { beta }, portfolios))
}

fn first_derivative(grid: &StateGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let dx = grid.dx();
    let mut d = vec![0.0; n];
    d[0] = (f[1] - f[0]) / dx;
    d[n - 1] = (f[n - 1] - f[n - 2]) / dx;
    for k in 1..n - 1 {
        d[k] = (f[k + 1] - f[k - 1]) / (2.0 * dx);
    }
    d
}

fn second_derivative(grid: &StateGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let dx2 = grid.dx() * grid.dx();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / dx2;
    }
    // one-sided stencils at the boundary strikes; these are truncation
    // artifacts and are excluded from round-trip error metrics
    d[0] = (f[2] - 2.0 * f[1] + f[0]) / dx2;
    d[n - 1] = (f[n - 1] - 2.0 * f[n - 2] + f[n - 3]) / dx2;
    d
}

/// Decompose a portfolio into cash, futures, and an option density around
/// the pivot strike `k0` (linearly interpolated when off-node).
pub fn breeden_litzenberger(
    grid: &StateGrid,
    portfolio: &PortfolioOnGrid,
    k0: f64,
) -> Result<OptionDecomposition> {
    let f = &portfolio.weights;
    if f.len() != grid.n {
        return Err(Error::DimensionMismatch(format!(
            "portfolio has {} weights, grid {} points",
            f.len(),
            grid.n
        )));
    }
    if !grid.contains_interior(k0) {
        return Err(Error::PivotOutsideGrid { k0, lo: grid.lo, hi: grid.hi });
    }
    let second = second_derivative(grid, f);
    if second.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidModel(
            "portfolio has NaN second differences".into(),
        ));
    }
    Ok(OptionDecomposition {
        cash: grid.interp(f, k0),
        futures: grid.interp(&first_derivative(grid, f), k0),
        option_density: second,
        k0,
    })
}

/// Integral of `g` over `[grid.lo, c]` by trapezoid, with the partial cell
/// containing `c` closed by linear interpolation.
fn trapezoid_below(grid: &StateGrid, g: &[f64], c: f64) -> f64 {
    let dx = grid.dx();
    let t = ((c - grid.lo) / dx).clamp(0.0, (grid.n - 1) as f64);
    let m = (t.floor() as usize).min(grid.n - 2);
    let frac = t - m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        acc += 0.5 * (g[k] + g[k + 1]) * dx;
    }
    let gc = g[m] * (1.0 - frac) + g[m + 1] * frac;
    acc + 0.5 * (g[m] + gc) * frac * dx
}

/// Rebuild the portfolio from its decomposition: cash + futures exposure +
/// strike integrals of the option density against put payoffs below the
/// pivot and call payoffs above.
pub fn reconstruct(dec: &OptionDecomposition, grid: &StateGrid) -> PortfolioOnGrid {
    let n = grid.n;
    let strikes = grid.points();
    let mut out = vec![0.0; n];
    let mut put_leg = vec![0.0; n];
    let mut call_leg = vec![0.0; n];
    for (j, x) in strikes.iter().enumerate() {
        for (k, kk) in strikes.iter().enumerate() {
            put_leg[k] = dec.option_density[k] * (kk - x).max(0.0);
            call_leg[k] = dec.option_density[k] * (x - kk).max(0.0);
        }
        let puts = trapezoid_below(grid, &put_leg, dec.k0);
        let calls = grid.trapezoid(&call_leg) - trapezoid_below(grid, &call_leg, dec.k0);
        out[j] = dec.cash + dec.futures * (x - dec.k0) + puts + calls;
    }
    PortfolioOnGrid::new(out)
}

/// Inner products of a portfolio with every payoff density,
/// `integral W(x) eta(x, s_i) dx`.
///
/// Demand orthogonal to all of them earns zero payoff under every signal.
pub fn payoff_orthogonality_check(portfolio: &PortfolioOnGrid, model: &SignalModel) -> Vec<f64> {
    let mut prod = vec![0.0; model.grid.n];
    model
        .densities
        .iter()
        .map(|d| {
            for ((p, w), e) in prod.iter_mut().zip(&portfolio.weights).zip(d) {
                *p = w * e;
            }
            model.grid.trapezoid(&prod)
        })
        .collect()
}
