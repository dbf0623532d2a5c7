//! Numerical laboratory for strategic informed trading across a complete
//! menu of state-contingent (Arrow-Debreu) securities.
//!
//! An insider observes which of `I` payoff distributions governs the
//! terminal state of the world and trades AD securities against noise flow;
//! a competitive market maker filters the combined order flow, updates his
//! prior over the signals, and quotes zero-profit state prices. The crate
//! computes the resulting equilibrium end to end:
//!
//! - [`model`] — state grid, payoff distribution families, signal model
//! - [`intensity`] — information intensity matrix (Gram, PSD root, pinv)
//! - [`equilibrium`] — the canonical-game constant `alpha*`, posterior
//!   sampling, information efficiency
//! - [`demand`] — informed demand portfolios and the cash/futures/options
//!   decomposition
//! - [`market`] — order-flow simulation, market-maker posterior, pricing
//!   kernel, price impact
//! - [`smile`] — option pricing off the kernel and the insider
//!   implied-volatility smile
//! - [`toy`] — closed-form three-state/two-signal model used as an analytic
//!   oracle for the general engine
//!
//! The `kylelab` binary exposes all of it as CLI subcommands producing CSV
//! tables and SVG charts.

pub mod demand;
pub mod equilibrium;
pub mod intensity;
pub mod market;
pub mod mc;
pub mod model;
pub mod output;
pub mod smile;
pub mod toy;

mod error;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
