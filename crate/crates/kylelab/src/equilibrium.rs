//! The canonical pseudo-trading game and its endogenous constant.
//!
//! Whitening demand coordinates by the information intensity matrix reduces
//! the trading game to a symmetric finite game: conditional on signal `i`
//! the insider submits `alpha * Q e_i` where `Q = I - (1/I) ones`, noise is
//! standard normal per pseudo-market, and the market maker's posterior is a
//! softmax of Gaussian overlap statistics. The equilibrium scale `alpha*`
//! solves `Phi(alpha) = 0` with
//!
//! ```text
//! Phi(alpha) = E[(1 - alpha^2 p_1)(1 - p_1)],
//! p_1 = e^{alpha^2 + Z_1} / (e^{alpha^2 + Z_1} + sum_{j>1} e^{Z_j}),
//! Z ~ N(0, alpha^2 Q).
//! ```
//!
//! `Phi` is estimated by Monte Carlo with common random numbers (the same
//! substreamed standard-normal draws rescaled by `alpha`), which makes the
//! estimate a deterministic continuous function of `alpha` for a fixed seed
//! and root finding by bisection well-posed. Everything here depends only
//! on the number of signals, never on the payoff densities.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mc::{fill_standard_normal, parallel_draws, McConfig, MergeAcc, VecMeanVar};

/// Solved canonical equilibrium for one signal count.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    /// Root of the seed-fixed `Phi`.
    pub alpha_star: f64,
    pub signal_count: usize,
    /// `Phi` estimate at `alpha_star`.
    pub phi_residual: f64,
    /// Standard error of that estimate.
    pub phi_se: f64,
    /// Bisection bracket that produced the root.
    pub bracket: (f64, f64),
    pub mc: McConfig,
    /// Information efficiency `E[q_i^(i)]` at `alpha_star`.
    pub efficiency: f64,
    pub efficiency_se: f64,
}

/// Monte Carlo estimate of the insider first-order condition at the
/// equilibrium ansatz.
#[derive(Debug, Clone)]
pub struct FocResidual {
    pub vector: Vec<f64>,
    pub norm: f64,
    /// Root-sum-square of the coordinate standard errors.
    pub combined_se: f64,
}

/// One point of the information-efficiency / log-likelihood-ratio curve.
#[derive(Debug, Clone)]
pub struct LlrPoint {
    pub signal_count: usize,
    pub alpha_star: f64,
    pub efficiency: f64,
    pub efficiency_se: f64,
    /// `log( E[q_i^(i)] / ((I-1) E[q_-i^(i)]) )` with `-i` a fixed `j != i`.
    pub llr: f64,
    /// `e^llr / (e^llr + 1)`; converges to the canonical lower bound `rho`.
    pub rho_implied: f64,
}

/// `Q = I - (1/I) * ones`: diagonal `1 - 1/I`, off-diagonal `-1/I`.
pub fn projection_q(signal_count: usize) -> Result<DMatrix<f64>> {
    if signal_count < 2 {
        return Err(Error::TooFewSignals(signal_count));
    }
    let inv = 1.0 / signal_count as f64;
    Ok(DMatrix::from_fn(signal_count, signal_count, |i, j| {
        if i == j {
            1.0 - inv
        } else {
            -inv
        }
    }))
}

/// The symmetric canonical game: signal count plus its projection matrix.
#[derive(Debug, Clone)]
pub struct CanonicalGame {
    pub signal_count: usize,
    pub q: DMatrix<f64>,
}

impl CanonicalGame {
    pub fn new(signal_count: usize) -> Result<Self> {
        Ok(Self { signal_count, q: projection_q(signal_count)? })
    }
}

/// Apply `Q` in place: subtract the coordinate mean.
#[inline]
fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Softmax with max subtraction; exact normalization.
#[inline]
fn softmax(logw: &mut [f64]) {
    let max = logw.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut sum = 0.0;
    for x in logw.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in logw.iter_mut() {
        *x /= sum;
    }
}

/// Turn standard-normal draws `x` into the canonical posterior conditional
/// on the first signal: softmax of `alpha Q x + alpha^2 e_0`, written into
/// `buf`.
#[inline]
fn posterior_obs_first(alpha: f64, x: &[f64], buf: &mut [f64]) {
    buf.copy_from_slice(x);
    for v in buf.iter_mut() {
        *v *= alpha;
    }
    center(buf);
    buf[0] += alpha * alpha;
    softmax(buf);
}

/// One draw of the market maker's equilibrium posterior conditional on the
/// insider observing `observed`, at portfolio scale `alpha`.
///
/// The draw for signal `i` is the observed-first draw with coordinates `0`
/// and `i` swapped, so permuting the observed signal permutes the sample
/// coordinate-wise for the same rng state.
pub fn sample_canonical_posterior<R: Rng + ?Sized>(
    alpha: f64,
    signal_count: usize,
    observed: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    assert!(observed < signal_count, "observed signal out of range");
    let x: Vec<f64> = (0..signal_count)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let mut q = vec![0.0; signal_count];
    posterior_obs_first(alpha, &x, &mut q);
    q.swap(0, observed);
    q
}

struct PayloadAcc {
    stat: VecMeanVar,
    x: Vec<f64>,
    p: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl MergeAcc for PayloadAcc {
    fn merge_acc(mut self, other: Self) -> Self {
        self.stat = self.stat.merge(other.stat);
        self
    }
}

/// Average a per-posterior payload over the canonical law at `alpha`,
/// conditional on the first signal. One substream per draw; antithetic
/// pairs are averaged before entering the accumulator so the standard
/// error reflects independent terms.
fn mc_over_posteriors<G>(
    alpha: f64,
    signal_count: usize,
    mc: &McConfig,
    payload_dim: usize,
    payload: G,
) -> VecMeanVar
where
    G: Fn(&[f64], &mut [f64]) + Sync,
{
    let acc = parallel_draws(
        mc.seed,
        mc.n_draws,
        || PayloadAcc {
            stat: VecMeanVar::new(payload_dim),
            x: vec![0.0; signal_count],
            p: vec![0.0; signal_count],
            first: vec![0.0; payload_dim],
            second: vec![0.0; payload_dim],
        },
        |s, rng, _| {
            fill_standard_normal(rng, &mut s.x);
            posterior_obs_first(alpha, &s.x, &mut s.p);
            payload(&s.p, &mut s.first);
            if mc.antithetic {
                for v in s.x.iter_mut() {
                    *v = -*v;
                }
                posterior_obs_first(alpha, &s.x, &mut s.p);
                payload(&s.p, &mut s.second);
                for (a, b) in s.first.iter_mut().zip(&s.second) {
                    *a = 0.5 * *a + 0.5 * *b;
                }
            }
            s.stat.push(&s.first);
        },
    );
    acc.stat
}

/// Per-draw integrand of the equilibrium equation, in the factored form
/// `(1 - alpha^2 p_1)(1 - p_1)`.
#[inline]
fn phi_term(alpha: f64, p1: f64) -> f64 {
    (1.0 - alpha * alpha * p1) * (1.0 - p1)
}

/// Monte Carlo estimate of `Phi(alpha)` and its standard error.
///
/// Deterministic for a fixed `McConfig`: the same draws are rescaled by
/// `alpha` (common random numbers), and antithetic pairs are averaged
/// before accumulation. For very large `alpha` the true magnitude sits
/// below the smallest positive f64; the estimate then returns a zero whose
/// IEEE sign still records the side it approached from.
pub fn phi(alpha: f64, signal_count: usize, mc: &McConfig) -> (f64, f64) {
    assert!(alpha >= 0.0, "alpha must be nonnegative");
    assert!(signal_count >= 2, "need at least two signals");
    let stat = mc_over_posteriors(alpha, signal_count, mc, 1, |p, out| {
        out[0] = phi_term(alpha, p[0]);
    });
    (stat.mean()[0], stat.se()[0])
}

/// True when the estimate lies on the negative side of zero, counting an
/// IEEE `-0.0` (an underflowed negative) as negative.
pub fn is_negative_side(x: f64) -> bool {
    x < 0.0 || (x == 0.0 && x.is_sign_negative())
}

/// Mean and standard error of `(q_obs, q_off)` under the canonical
/// posterior law, with `off` the fixed signal after the observed one.
pub fn posterior_moments(alpha: f64, signal_count: usize, mc: &McConfig) -> ObservedOffMoments {
    let stat = mc_over_posteriors(alpha, signal_count, mc, 2, |p, out| {
        out[0] = p[0];
        out[1] = p[1];
    });
    let mean = stat.mean();
    let se = stat.se();
    ObservedOffMoments { observed: mean[0], observed_se: se[0], off: mean[1], off_se: se[1] }
}

#[derive(Debug, Clone, Copy)]
pub struct ObservedOffMoments {
    /// `E[q_i^(i)]` — the information efficiency at this `alpha`.
    pub observed: f64,
    pub observed_se: f64,
    /// `E[q_j^(i)]` for one fixed `j != i`.
    pub off: f64,
    pub off_se: f64,
}

const BRACKET_LIMIT: f64 = 1024.0;

/// Find `alpha* > 0` with `Phi(alpha*) = 0` for the seed-fixed `Phi`.
///
/// Expands the upper bracket from 1 by doubling until `Phi` turns negative,
/// then bisects to `tol` on `alpha`. Fails if no sign change appears by
/// `alpha = 2^10`, which signals a broken Monte Carlo configuration.
pub fn solve_alpha_star(signal_count: usize, mc: &McConfig, tol: f64) -> Result<EquilibriumSolution> {
    if signal_count < 2 {
        return Err(Error::TooFewSignals(signal_count));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let phi_at = |a: f64| phi(a, signal_count, mc).0;

    let mut lo = 0.0;
    let mut hi = 1.0;
    while !is_negative_side(phi_at(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::BracketNotFound(hi));
        }
    }
    let bracket = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_negative_side(phi_at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_star = 0.5 * (lo + hi);
    let (phi_residual, phi_se) = phi(alpha_star, signal_count, mc);
    let moments = posterior_moments(alpha_star, signal_count, mc);
    Ok(EquilibriumSolution {
        alpha_star,
        signal_count,
        phi_residual,
        phi_se,
        bracket,
        mc: *mc,
        efficiency: moments.observed,
        efficiency_se: moments.observed_se,
    })
}

/// Default tolerance on `alpha` for the equilibrium root.
pub const DEFAULT_ALPHA_TOL: f64 = 1e-4;

/// `E[q_i^(i)]` at the solved `alpha*(I)`, with standard error.
pub fn information_efficiency(signal_count: usize, mc: &McConfig) -> Result<(f64, f64)> {
    let sol = solve_alpha_star(signal_count, mc, DEFAULT_ALPHA_TOL)?;
    Ok((sol.efficiency, sol.efficiency_se))
}

/// Efficiency and posterior log-likelihood-ratio curve over signal counts.
pub fn log_likelihood_ratio_curve(
    signal_counts: &[usize],
    mc: &McConfig,
    tol: f64,
) -> Result<Vec<LlrPoint>> {
    signal_counts
        .iter()
        .map(|&count| {
            let sol = solve_alpha_star(count, mc, tol)?;
            let m = posterior_moments(sol.alpha_star, count, mc);
            let llr = (m.observed / ((count - 1) as f64 * m.off)).ln();
            Ok(LlrPoint {
                signal_count: count,
                alpha_star: sol.alpha_star,
                efficiency: m.observed,
                efficiency_se: m.observed_se,
                llr,
                rho_implied: llr.exp() / (llr.exp() + 1.0),
            })
        })
        .collect()
}

/// Monte Carlo estimate of the canonical-game first-order condition
/// `e_i - E[p] - D E[diag(p) - p p^T] d` at `d = alpha Q e_i` under belief
/// `D = alpha Q`, conditional on the first signal.
pub fn foc_residual(alpha: f64, signal_count: usize, mc: &McConfig) -> FocResidual {
    assert!(alpha >= 0.0);
    let a2 = alpha * alpha;
    let inv = 1.0 / signal_count as f64;
    let stat = mc_over_posteriors(alpha, signal_count, mc, signal_count, |p, t| {
        // u = Q e_0; v = (diag(p) - p p^T) u; term = e_0 - p - a^2 Q v
        let pu: f64 = p[0] * (1.0 - inv) + p[1..].iter().map(|pj| pj * (-inv)).sum::<f64>();
        for (j, tj) in t.iter_mut().enumerate() {
            let u = if j == 0 { 1.0 - inv } else { -inv };
            *tj = p[j] * u - p[j] * pu;
        }
        center(t); // apply Q to v
        for (j, tj) in t.iter_mut().enumerate() {
            let e = if j == 0 { 1.0 } else { 0.0 };
            *tj = e - p[j] - a2 * *tj;
        }
    });
    let vector = stat.mean();
    let se = stat.se();
    FocResidual {
        norm: vector.iter().map(|v| v * v).sum::<f64>().sqrt(),
        combined_se: se.iter().map(|s| s * s).sum::<f64>().sqrt(),
        vector,
    }
}
