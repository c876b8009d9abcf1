//! Covariance operators represented by their eigenvalues in one shared
//! orthonormal eigenbasis.
//!
//! Every covariance in this crate commutes with every other, so a covariance
//! is nothing but a positive sequence `s_1, s_2, ...`. The sequences come
//! from a closed family of decay laws (power, geometric, constant) with an
//! optional explicit prefix, which keeps every convergence question about
//! them decidable.

use serde::{Deserialize, Serialize};

use crate::elements::series::{self, Monomial, SeriesConfig, SeriesVerdict, SpecExpr};
use crate::error::{Error, Result};

/// Largest mode index the toolkit will materialize (every index up to it is
/// exactly representable as an `f64`).
pub const MAX_INDEX: u64 = 1 << 53;

/// Decay law of the eigenvalues past the prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `scale * i^(-exponent)`
    PowerLaw { scale: f64, exponent: f64 },
    /// `scale * ratio^i`
    Exponential { scale: f64, ratio: f64 },
    /// `level`
    Constant { level: f64 },
}

impl Family {
    /// The family law as an exact monomial `A * i^p * exp(rate * i)`.
    pub fn monomial(&self) -> Monomial {
        match *self {
            Family::PowerLaw { scale, exponent } => Monomial::new(scale, -exponent, 0.0),
            Family::Exponential { scale, ratio } => Monomial::new(scale, 0.0, ratio.ln()),
            Family::Constant { level } => Monomial::constant(level),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidSpectrum(format!("{name} must be a positive finite number, got {v}")))
            }
        };
        match *self {
            Family::PowerLaw { scale, exponent } => {
                positive("scale", scale)?;
                if !(exponent.is_finite() && exponent >= 0.0) {
                    return Err(Error::InvalidSpectrum(format!(
                        "power-law exponent must be finite and >= 0, got {exponent}"
                    )));
                }
                Ok(())
            }
            Family::Exponential { scale, ratio } => {
                positive("scale", scale)?;
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidSpectrum(format!(
                        "exponential ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                Ok(())
            }
            Family::Constant { level } => positive("level", level),
        }
    }
}

/// Eigenvalue sequence of a strictly positive covariance operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpectrumRepr", into = "SpectrumRepr")]
pub struct SpectrumModel {
    family: Family,
    prefix: Vec<f64>,
}

impl SpectrumModel {
    pub fn new(family: Family, prefix: Vec<f64>) -> Result<Self> {
        family.validate()?;
        if let Some(bad) = prefix.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidSpectrum(format!(
                "prefix eigenvalues must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { family, prefix })
    }

    pub fn power_law(scale: f64, exponent: f64) -> Result<Self> {
        Self::new(Family::PowerLaw { scale, exponent }, Vec::new())
    }

    pub fn exponential(scale: f64, ratio: f64) -> Result<Self> {
        Self::new(Family::Exponential { scale, ratio }, Vec::new())
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::new(Family::Constant { level }, Vec::new())
    }

    pub fn with_prefix(self, prefix: Vec<f64>) -> Result<Self> {
        Self::new(self.family, prefix)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// First index governed by the family law.
    pub fn settled_index(&self) -> u64 {
        self.prefix.len() as u64 + 1
    }

    /// Eigenvalue at mode `i` (1-based).
    pub fn eigenvalue(&self, i: u64) -> f64 {
        assert!(i >= 1, "modes are indexed from 1");
        match self.prefix.get((i - 1) as usize) {
            Some(&v) => v,
            None => self.family_value(i),
        }
    }

    /// Natural log of the eigenvalue; stays finite where the eigenvalue
    /// itself would underflow.
    pub fn ln_eigenvalue(&self, i: u64) -> f64 {
        assert!(i >= 1, "modes are indexed from 1");
        match self.prefix.get((i - 1) as usize) {
            Some(&v) => v.ln(),
            None => self.family.monomial().ln_eval(i as f64),
        }
    }

    /// Eigenvalue at `i` given `ln_i = ln(i)`.
    pub(crate) fn eigenvalue_with_ln(&self, i: u64, ln_i: f64) -> f64 {
        match self.prefix.get((i - 1) as usize) {
            Some(&v) => v,
            None => match self.family {
                Family::PowerLaw { scale, exponent } => scale * (-exponent * ln_i).exp(),
                Family::Exponential { scale, ratio } => scale * (ratio.ln() * i as f64).exp(),
                Family::Constant { level } => level,
            },
        }
    }

    fn family_value(&self, i: u64) -> f64 {
        let x = i as f64;
        match self.family {
            Family::PowerLaw { scale, exponent } => scale * x.powf(-exponent),
            Family::Exponential { scale, ratio } => scale * ratio.powf(x),
            Family::Constant { level } => level,
        }
    }

    /// Whether the eigenvalues accumulate at zero.
    fn decays(&self) -> bool {
        match self.family {
            Family::PowerLaw { exponent, .. } => exponent > 0.0,
            Family::Exponential { .. } => true,
            Family::Constant { .. } => false,
        }
    }

    /// Smallest index `i > after` with `s_i <= threshold`, if one exists at
    /// or below [`MAX_INDEX`].
    pub fn next_at_or_below(&self, after: u64, threshold: f64) -> Option<u64> {
        let m = self.prefix.len() as u64;
        for i in (after + 1)..=m {
            if self.eigenvalue(i) <= threshold {
                return Some(i);
            }
        }
        let lo = after.max(m) + 1;
        if lo > MAX_INDEX || threshold <= 0.0 {
            return None;
        }
        if !self.decays() {
            return (self.family_value(lo) <= threshold).then_some(lo);
        }
        // Family values are nonincreasing past the prefix: solve the
        // inequality in closed form, then settle the rounding by probing.
        let root = match self.family {
            Family::PowerLaw { scale, exponent } => ((scale / threshold).ln() / exponent).exp(),
            Family::Exponential { scale, ratio } => (scale / threshold).ln() / (1.0 / ratio).ln(),
            Family::Constant { .. } => unreachable!(),
        };
        if root.is_nan() || root > MAX_INDEX as f64 {
            return None;
        }
        let mut i = (root.ceil() as u64).max(lo);
        while i > lo && self.family_value(i - 1) <= threshold {
            i -= 1;
        }
        while self.family_value(i) > threshold {
            i += 1;
            if i > MAX_INDEX {
                return None;
            }
        }
        Some(i)
    }
}

/// Eigenvalue at mode `i`.
pub fn eigenvalue(s: &SpectrumModel, i: u64) -> f64 {
    s.eigenvalue(i)
}

/// Trace of the operator, `sum_i s_i`.
///
/// Geometric and constant laws are summed in closed form; power laws with
/// exponent above one go through the certified series engine (partial sum
/// plus integral tail bracket).
pub fn trace(s: &SpectrumModel, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    let prefix_sum: f64 = s.prefix.iter().sum();
    let m = s.prefix.len() as f64;
    let rounding = s.prefix.len() as f64 * f64::EPSILON * prefix_sum;
    match s.family {
        Family::Constant { level } => Ok(SeriesVerdict::diverges(format!(
            "eigenvalues are constant ({level}); terms do not vanish"
        ))),
        Family::Exponential { scale, ratio } => {
            // sum_{i > m} C q^i = C q^(m+1) / (1 - q)
            let tail = scale * ratio.powf(m + 1.0) / (1.0 - ratio);
            let value = prefix_sum + tail;
            Ok(SeriesVerdict::converges(value, rounding + 4.0 * f64::EPSILON * value))
        }
        Family::PowerLaw { exponent, .. } if exponent <= 1.0 => Ok(SeriesVerdict::diverges(format!(
            "power-law eigenvalues i^-{exponent} with exponent <= 1 (p-series)"
        ))),
        Family::PowerLaw { .. } => series::sum_spectral(&SpecExpr::eigen(s), 1, cfg),
    }
}

/// Infimum of the eigenvalues, i.e. the best constant in `<Su, u> >= a |u|^2`.
pub fn lower_bound(s: &SpectrumModel) -> f64 {
    let tail_inf = if s.decays() {
        0.0
    } else {
        match s.family {
            Family::PowerLaw { scale, .. } => scale,
            Family::Constant { level } => level,
            Family::Exponential { .. } => unreachable!(),
        }
    };
    s.prefix.iter().copied().fold(tail_inf, f64::min)
}

/// Limit of `p_i / r_i` as `i -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RatioLimit {
    Zero,
    PositiveFinite(f64),
    Infinite,
}

/// Classifies `lim p_i / r_i` from the two decay laws; prefixes are
/// irrelevant.
pub fn ratio_limit(p: &SpectrumModel, r: &SpectrumModel) -> RatioLimit {
    let ratio = p.family.monomial().div(&r.family.monomial());
    if ratio.vanishes() {
        RatioLimit::Zero
    } else if ratio.is_constant() {
        RatioLimit::PositiveFinite(ratio.coef)
    } else {
        RatioLimit::Infinite
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FamilyTag {
    Power,
    Exp,
    Const,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumRepr {
    family: FamilyTag,
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    prefix: Vec<f64>,
}

impl TryFrom<SpectrumRepr> for SpectrumModel {
    type Error = Error;

    fn try_from(r: SpectrumRepr) -> Result<Self> {
        let missing = |field: &str, tag: &str| {
            Error::InvalidSpectrum(format!("family \"{tag}\" requires field \"{field}\""))
        };
        let unexpected = |field: &str, tag: &str| {
            Error::InvalidSpectrum(format!("family \"{tag}\" does not take field \"{field}\""))
        };
        let family = match r.family {
            FamilyTag::Power => {
                if r.ratio.is_some() {
                    return Err(unexpected("ratio", "power"));
                }
                Family::PowerLaw {
                    scale: r.scale,
                    exponent: r.exponent.ok_or_else(|| missing("exponent", "power"))?,
                }
            }
            FamilyTag::Exp => {
                if r.exponent.is_some() {
                    return Err(unexpected("exponent", "exp"));
                }
                Family::Exponential {
                    scale: r.scale,
                    ratio: r.ratio.ok_or_else(|| missing("ratio", "exp"))?,
                }
            }
            FamilyTag::Const => {
                if r.exponent.is_some() {
                    return Err(unexpected("exponent", "const"));
                }
                if r.ratio.is_some() {
                    return Err(unexpected("ratio", "const"));
                }
                Family::Constant { level: r.scale }
            }
        };
        SpectrumModel::new(family, r.prefix)
    }
}

impl From<SpectrumModel> for SpectrumRepr {
    fn from(s: SpectrumModel) -> Self {
        let (family, scale, exponent, ratio) = match s.family {
            Family::PowerLaw { scale, exponent } => (FamilyTag::Power, scale, Some(exponent), None),
            Family::Exponential { scale, ratio } => (FamilyTag::Exp, scale, None, Some(ratio)),
            Family::Constant { level } => (FamilyTag::Const, level, None, None),
        };
        SpectrumRepr { family, scale, exponent, ratio, prefix: s.prefix }
    }
}
