//! The normalization constant `c(y)` of the Bayes update, well-posedness
//! classification, and construction of data with `c(y) = 0`.
//!
//! With per-mode prior variance `p_i`, noise variance `r_i` and innovation
//! `d = y - m^f`,
//!
//! ```text
//! log c(y) = -1/2 sum_i log(1 + p_i / r_i) - 1/2 sum_i d_i^2 / (r_i + p_i)
//! ```
//!
//! and `c(y) > 0` exactly when both series converge.

use serde::Serialize;

use crate::assimilate::AssimilationProblem;
use crate::elements::series::{self, SpecExpr};
use crate::elements::{weighted_norm_sq, CoeffSeq, ExtReal, SeriesConfig, SeriesVerdict, SubsequenceTail, Tail};
use crate::error::{Error, Result};
use crate::spectra::{self, RatioLimit, SpectrumModel};

/// Certified `log c(y)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogConstant {
    /// Midpoint of the enclosure, or `-inf`.
    pub value: ExtReal,
    /// Width of the enclosure around a finite value.
    pub bracket_width: f64,
    pub certificates: Vec<String>,
}

impl LogConstant {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn upper(&self) -> f64 {
        match self.value {
            ExtReal::Finite(v) => (v + self.bracket_width / 2.0).min(0.0),
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        match self.value {
            ExtReal::Finite(v) => v - self.bracket_width / 2.0,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// `log c` for one prior/noise pair and many data vectors. The data-free
/// series is classified once.
#[derive(Debug, Clone)]
pub struct NormalizationSeries {
    log_det: SeriesVerdict,
    weight: SpecExpr,
    cfg: SeriesConfig,
}

impl NormalizationSeries {
    pub fn new(prior: &SpectrumModel, noise: &SpectrumModel, cfg: &SeriesConfig) -> Result<Self> {
        let ratio = SpecExpr::eigen(prior) / SpecExpr::eigen(noise);
        let log_det = series::sum_spectral(&ratio.log1p(), 1, cfg)?;
        let weight = (SpecExpr::eigen(noise) + SpecExpr::eigen(prior)).recip();
        Ok(Self { log_det, weight, cfg: *cfg })
    }

    /// `sum_i log(1 + p_i / r_i)`
    pub fn log_det(&self) -> &SeriesVerdict {
        &self.log_det
    }

    /// `log c` for the innovation `d = y - m^f`.
    pub fn evaluate(&self, innovation: &CoeffSeq) -> Result<LogConstant> {
        if let SeriesVerdict::Diverges { witness } = &self.log_det {
            return Ok(LogConstant {
                value: ExtReal::NegInfinity,
                bracket_width: 0.0,
                certificates: vec![format!("sum log(1 + p_i/r_i) diverges: {witness}")],
            });
        }
        let misfit = series::sum_weighted(innovation, &self.weight, &self.cfg)?;
        let mut certificates = vec![match &self.log_det {
            SeriesVerdict::Converges { value, bracket_width } => {
                format!("sum log(1 + p_i/r_i) converges to {value:?} (bracket {bracket_width:e})")
            }
            SeriesVerdict::Diverges { .. } => unreachable!("handled above"),
        }];
        Ok(match misfit {
            SeriesVerdict::Diverges { witness } => {
                certificates.push(format!("sum (y_i - m_i)^2/(r_i + p_i) diverges: {witness}"));
                LogConstant { value: ExtReal::NegInfinity, bracket_width: 0.0, certificates }
            }
            SeriesVerdict::Converges { value, bracket_width } => {
                certificates.push(format!(
                    "sum (y_i - m_i)^2/(r_i + p_i) converges to {value:?} (bracket {bracket_width:e})"
                ));
                match self.log_det.clone().plus(SeriesVerdict::converges(value, bracket_width)) {
                    SeriesVerdict::Converges { value, bracket_width } => LogConstant {
                        value: ExtReal::Finite((-0.5 * value).min(0.0)),
                        bracket_width: 0.5 * bracket_width,
                        certificates,
                    },
                    SeriesVerdict::Diverges { .. } => unreachable!("sum of convergent series"),
                }
            }
        })
    }

    pub fn evaluate_problem(&self, prob: &AssimilationProblem) -> Result<LogConstant> {
        self.evaluate(&prob.innovation()?)
    }
}

pub fn log_norm_constant(prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<LogConstant> {
    NormalizationSeries::new(&prob.prior_spectrum, &prob.noise_spectrum, cfg)?.evaluate_problem(prob)
}

/// `log c` of the problem restricted to modes `1..=n`.
pub fn truncated_log_constant(prob: &AssimilationProblem, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation must keep at least one mode".to_string()));
    }
    let len = usize::try_from(n).map_err(|_| Error::InvalidArgument(format!("truncation {n} is too large")))?;
    let ratio = (SpecExpr::eigen(&prob.prior_spectrum) / SpecExpr::eigen(&prob.noise_spectrum)).log1p();
    let weight = (SpecExpr::eigen(&prob.noise_spectrum) + SpecExpr::eigen(&prob.prior_spectrum)).recip();
    let y = prob.data.dense(len);
    let m = prob.prior_mean.dense(len);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 1..=n {
        let d = y[(i - 1) as usize] - m[(i - 1) as usize];
        let mut term = ratio.eval(i);
        if d != 0.0 {
            term += d * d * weight.eval(i);
        }
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
    }
    Ok(-0.5 * (sum + comp))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellPosednessReport {
    pub prior_trace_class: bool,
    pub noise_lower_bound: f64,
    /// `c(y) > 0` for every `y` in the space.
    pub well_posed_all_y: bool,
    /// The data with `c(y) = 0` are dense.
    pub bad_set_dense: bool,
    /// Prior and noise laws are equivalent Gaussian measures.
    pub measures_equivalent: bool,
    pub certificates: Vec<String>,
}

pub fn classify_problem(
    prior: &SpectrumModel,
    noise: &SpectrumModel,
    prior_mean: &CoeffSeq,
    cfg: &SeriesConfig,
) -> Result<WellPosednessReport> {
    let mut certificates = Vec::new();
    match spectra::trace(prior, cfg)? {
        SeriesVerdict::Diverges { witness } => {
            return Err(Error::PriorNotTraceClass(format!("sum of prior eigenvalues diverges: {witness}")))
        }
        SeriesVerdict::Converges { value, .. } => {
            certificates.push(format!("prior trace = {value:?} < inf"));
        }
    }
    let lb = spectra::lower_bound(noise);
    let well_posed = lb > 0.0;
    certificates.push(if well_posed {
        format!("noise spectrum bounded below by {lb:?} > 0: c(y) > 0 for all y")
    } else {
        "noise eigenvalues accumulate at 0: data with c(y) = 0 are dense".to_string()
    });

    let deviation = (SpecExpr::eigen(prior) / SpecExpr::eigen(noise)).deviation_sq();
    let fh = series::sum_spectral(&deviation, 1, cfg)?;
    let shift = weighted_norm_sq(prior_mean, noise, cfg)?;
    match &fh {
        SeriesVerdict::Converges { value, .. } => {
            certificates.push(format!("sum (p_i/r_i - 1)^2 converges to {value:?}"))
        }
        SeriesVerdict::Diverges { witness } => certificates.push(format!("sum (p_i/r_i - 1)^2 diverges: {witness}")),
    }
    certificates.push(match shift {
        ExtReal::Finite(v) => format!("prior mean in the noise Cameron-Martin space, |m|^2_R^-1 = {v:?}"),
        _ => "prior mean outside the noise Cameron-Martin space".to_string(),
    });
    let equivalent = fh.is_convergent() && shift.is_finite();

    Ok(WellPosednessReport {
        prior_trace_class: true,
        noise_lower_bound: lb,
        well_posed_all_y: well_posed,
        bad_set_dense: !well_posed,
        measures_equivalent: equivalent,
        certificates,
    })
}

/// Fewest subsequence modes materialized by [`construct_bad_data`].
pub const MIN_BAD_MODES: u32 = 64;
/// Most subsequence modes materialized by [`construct_bad_data`].
pub const MAX_BAD_MODES: u32 = 4096;
const DIVERGENCE_EVIDENCE: f64 = 50.0;

/// Data `ž` within `delta` of `z` with `c(ž) = 0`.
///
/// `ž = z + sqrt(r_i)` on the indices `i_k`, the smallest index past
/// `i_{k-1}` (starting after the support of `z`) with `r_{i_k} <= delta^2 / 2^k`.
/// The returned sequence carries the rule, so the full infinite
/// subsequence is represented exactly; the first modes are materialized in
/// its explicit support.
pub fn construct_bad_data(
    noise: &SpectrumModel,
    prior: &SpectrumModel,
    z: &CoeffSeq,
    delta: f64,
    cfg: &SeriesConfig,
) -> Result<CoeffSeq> {
    let lb = spectra::lower_bound(noise);
    if lb > 0.0 {
        return Err(Error::LowerBoundPositive(lb));
    }
    if let SeriesVerdict::Diverges { witness } = spectra::trace(prior, cfg)? {
        return Err(Error::PriorNotTraceClass(format!("sum of prior eigenvalues diverges: {witness}")));
    }
    if z.has_tail() {
        return Err(Error::InvalidArgument("the center z must have finite support".to_string()));
    }
    let tail = SubsequenceTail::new(noise.clone(), delta, z.last_support_index())?;

    let give_up_at = match spectra::ratio_limit(prior, noise) {
        RatioLimit::Infinite => MIN_BAD_MODES,
        _ => MAX_BAD_MODES,
    };
    let mut evidence = 0.0;
    let mut count = 0u32;
    for (k, i) in tail.indices() {
        let (p, r) = (prior.ln_eigenvalue(i), noise.ln_eigenvalue(i));
        evidence += 1.0 / (1.0 + (p - r).exp());
        count = k;
        if k >= give_up_at || (k >= MIN_BAD_MODES && evidence >= DIVERGENCE_EVIDENCE) {
            break;
        }
    }
    let mut support = z.support().to_vec();
    let tail = tail.materialize_first(count, &mut support);
    CoeffSeq::new(support, Some(Tail::Subsequence(tail)))
}
