//! Elements of the Hilbert space, extended reals, and certified series.

mod coeff;
mod ext;
pub mod series;

pub use coeff::{CoeffSeq, PowerTail, SubsequenceIter, SubsequenceTail, Tail, SUBSEQUENCE_RULE};
pub use ext::ExtReal;
pub use series::{SeriesConfig, SeriesVerdict};

use crate::error::Result;
use crate::spectra::SpectrumModel;
use series::SpecExpr;

/// `sum_i x_i^2`, certified.
pub fn norm_sq(x: &CoeffSeq, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    series::sum_weighted(x, &SpecExpr::constant(1.0), cfg)
}

/// `sum_i x_i^2 / s_i`, the squared norm in the Cameron–Martin space of `s`.
/// `+inf` when the series diverges.
pub fn weighted_norm_sq(x: &CoeffSeq, s: &SpectrumModel, cfg: &SeriesConfig) -> Result<ExtReal> {
    Ok(series::sum_weighted(x, &SpecExpr::eigen(s).recip(), cfg)?.value())
}
