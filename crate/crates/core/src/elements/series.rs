//! Symbolic convergence classification of nonnegative series with certified
//! values.
//!
//! Every series this crate needs has terms built from the eigenvalue laws in
//! [`crate::spectra`] and the coefficient tails in [`super::coeff`]. Past a
//! finite index such a term is pinned between two constant multiples of a
//! single monomial `A * i^p * exp(rate * i)`, so convergence is decided from
//! `(p, rate)` alone and never from floating-point partial sums. Convergent
//! series additionally get a value: an explicit partial sum plus a bracket
//! for the remainder, built from integral or geometric bounds on the
//! monomial.

use std::cmp::Ordering;
use std::fmt;
use std::ops;

use serde::{Deserialize, Serialize};

use super::coeff::{CoeffSeq, SubsequenceTail, Tail};
use crate::error::{Error, Result};
use crate::spectra::{Family, SpectrumModel, MAX_INDEX};

/// Default number of explicitly summed terms before the tail bracket takes
/// over.
pub const DEFAULT_TAIL_CUTOFF: u64 = 100_000;

const BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesConfig {
    /// Maximum number of terms summed explicitly; summation stops earlier
    /// once the remainder bracket is below rounding level.
    pub tail_cutoff: u64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self { tail_cutoff: DEFAULT_TAIL_CUTOFF }
    }
}

/// Outcome of classifying a nonnegative series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SeriesVerdict {
    /// The sum lies in `[value - w/2, value + w/2]`, `w = bracket_width`.
    Converges { value: f64, bracket_width: f64 },
    /// `witness` names the rule that fired.
    Diverges { witness: String },
}

impl SeriesVerdict {
    pub fn converges(value: f64, bracket_width: f64) -> Self {
        debug_assert!(bracket_width >= 0.0);
        SeriesVerdict::Converges { value, bracket_width }
    }

    pub fn diverges(witness: impl Into<String>) -> Self {
        SeriesVerdict::Diverges { witness: witness.into() }
    }

    pub fn is_convergent(&self) -> bool {
        matches!(self, SeriesVerdict::Converges { .. })
    }

    /// Midpoint of the bracket, or `+inf` for a divergent series.
    pub fn value(&self) -> super::ExtReal {
        match *self {
            SeriesVerdict::Converges { value, .. } => super::ExtReal::Finite(value),
            SeriesVerdict::Diverges { .. } => super::ExtReal::PosInfinity,
        }
    }

    pub fn bracket_width(&self) -> f64 {
        match *self {
            SeriesVerdict::Converges { bracket_width, .. } => bracket_width,
            SeriesVerdict::Diverges { .. } => 0.0,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            SeriesVerdict::Converges { value, bracket_width } => value + bracket_width / 2.0,
            SeriesVerdict::Diverges { .. } => f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            SeriesVerdict::Converges { value, bracket_width } => value - bracket_width / 2.0,
            SeriesVerdict::Diverges { .. } => f64::INFINITY,
        }
    }

    pub fn witness(&self) -> Option<&str> {
        match self {
            SeriesVerdict::Diverges { witness } => Some(witness),
            SeriesVerdict::Converges { .. } => None,
        }
    }

    /// Sum of two series; divergence wins.
    pub fn plus(self, other: SeriesVerdict) -> SeriesVerdict {
        match (self, other) {
            (
                SeriesVerdict::Converges { value: a, bracket_width: wa },
                SeriesVerdict::Converges { value: b, bracket_width: wb },
            ) => SeriesVerdict::converges(a + b, wa + wb + f64::EPSILON * (a + b).abs()),
            (d @ SeriesVerdict::Diverges { .. }, _) | (_, d @ SeriesVerdict::Diverges { .. }) => d,
        }
    }
}

/// `coef * i^power * exp(rate * i)`, `coef >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub power: f64,
    pub rate: f64,
}

impl Monomial {
    pub const ZERO: Monomial = Monomial { coef: 0.0, power: 0.0, rate: 0.0 };

    pub fn new(coef: f64, power: f64, rate: f64) -> Self {
        Self { coef, power, rate }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coef == 0.0
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let mut v = self.coef.ln() + self.rate * x;
        if self.power != 0.0 {
            v += self.power * x.ln();
        }
        v
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        Monomial::new(self.coef * o.coef, self.power + o.power, self.rate + o.rate)
    }

    pub fn div(&self, o: &Monomial) -> Monomial {
        Monomial::new(self.coef / o.coef, self.power - o.power, self.rate - o.rate)
    }

    /// Compares asymptotic growth, ignoring the coefficient.
    pub fn growth_cmp(&self, o: &Monomial) -> Ordering {
        self.rate
            .partial_cmp(&o.rate)
            .unwrap_or(Ordering::Equal)
            .then(self.power.partial_cmp(&o.power).unwrap_or(Ordering::Equal))
    }

    pub fn is_constant(&self) -> bool {
        !self.is_zero() && self.power == 0.0 && self.rate == 0.0
    }

    pub fn vanishes(&self) -> bool {
        self.is_zero() || self.rate < 0.0 || (self.rate == 0.0 && self.power < 0.0)
    }

    pub fn summable(&self) -> bool {
        self.is_zero() || self.rate < 0.0 || (self.rate == 0.0 && self.power < -1.0)
    }

    /// `sup` over `x >= t`.
    pub fn sup_from(&self, t: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else if self.rate > 0.0 || (self.rate == 0.0 && self.power > 0.0) {
            f64::INFINITY
        } else if self.rate == 0.0 || self.power <= 0.0 {
            self.eval(t)
        } else {
            self.eval(t.max(-self.power / self.rate))
        }
    }

    /// Bracket `[lo, hi]` for `sum_{i > n} m(i)`, or `None` when the
    /// monomial is not summable or not yet monotone past `n`.
    pub fn tail_bracket(&self, n: u64) -> Option<(f64, f64)> {
        if self.is_zero() {
            return Some((0.0, 0.0));
        }
        let next = (n + 1) as f64;
        if self.rate == 0.0 {
            if self.power >= -1.0 {
                return None;
            }
            // Decreasing terms: int_{n+1}^inf <= tail <= int_n^inf.
            let q = -self.power - 1.0;
            let lo = (self.coef.ln() - q * next.ln()).exp() / q;
            let hi = if n == 0 {
                self.coef + self.coef / q
            } else {
                (self.coef.ln() - q * (n as f64).ln()).exp() / q
            };
            return Some((lo, hi));
        }
        if self.rate > 0.0 {
            return None;
        }
        let first = self.eval(next);
        let one_minus_q = -self.rate.exp_m1();
        if self.power == 0.0 {
            let s = first / one_minus_q;
            return Some((s, s));
        }
        if self.power < 0.0 {
            return Some((first, first / one_minus_q));
        }
        if next < -self.power / self.rate {
            return None;
        }
        let rho = (self.rate + self.power * ((n + 2) as f64 / next).ln()).exp();
        (rho < 1.0).then(|| (first, first / (1.0 - rho)))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        write!(f, "{}", fmt_num(self.coef))?;
        if self.power != 0.0 {
            write!(f, "*i^{}", fmt_num(self.power))?;
        }
        if self.rate != 0.0 {
            write!(f, "*exp({}*i)", fmt_num(self.rate))?;
        }
        Ok(())
    }
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

/// Two-sided relative envelope of a positive sequence past some index.
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    /// `lo * lead(i) <= f(i) <= hi * lead(i)` for every `i` past the index.
    Bounded { lead: Monomial, lo: f64, hi: f64 },
    /// The terms are bounded away from zero.
    NonVanishing { witness: String },
}

impl Envelope {
    fn exact(lead: Monomial) -> Self {
        Envelope::Bounded { lead, lo: 1.0, hi: 1.0 }
    }
}

/// Positive sequence built from eigenvalue laws and elementary operations.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecExpr {
    Eigen(SpectrumModel),
    Mono(Monomial),
    Add(Box<SpecExpr>, Box<SpecExpr>),
    Mul(Box<SpecExpr>, Box<SpecExpr>),
    Div(Box<SpecExpr>, Box<SpecExpr>),
    /// `log(1 + f)`
    Log1p(Box<SpecExpr>),
    /// `(f - 1)^2`
    DeviationSq(Box<SpecExpr>),
}

impl SpecExpr {
    pub fn eigen(s: &SpectrumModel) -> Self {
        SpecExpr::Eigen(s.clone())
    }

    pub fn constant(c: f64) -> Self {
        SpecExpr::Mono(Monomial::constant(c))
    }

    /// `c * i^power`
    pub fn power(c: f64, power: f64) -> Self {
        SpecExpr::Mono(Monomial::new(c, power, 0.0))
    }

    pub fn recip(self) -> Self {
        SpecExpr::constant(1.0) / self
    }

    pub fn log1p(self) -> Self {
        SpecExpr::Log1p(Box::new(self))
    }

    pub fn deviation_sq(self) -> Self {
        SpecExpr::DeviationSq(Box::new(self))
    }

    /// First index from which every eigenvalue law in the expression holds.
    pub fn settled_index(&self) -> u64 {
        match self {
            SpecExpr::Eigen(s) => s.settled_index(),
            SpecExpr::Mono(_) => 1,
            SpecExpr::Add(a, b) | SpecExpr::Mul(a, b) | SpecExpr::Div(a, b) => {
                a.settled_index().max(b.settled_index())
            }
            SpecExpr::Log1p(a) | SpecExpr::DeviationSq(a) => a.settled_index(),
        }
    }

    /// Natural log of the term at index `i`.
    pub fn ln_eval(&self, i: u64) -> f64 {
        match self {
            SpecExpr::Eigen(s) => s.ln_eigenvalue(i),
            SpecExpr::Mono(m) => m.ln_eval(i as f64),
            SpecExpr::Add(a, b) => ln_add_exp(a.ln_eval(i), b.ln_eval(i)),
            SpecExpr::Mul(a, b) => a.ln_eval(i) + b.ln_eval(i),
            SpecExpr::Div(a, b) => a.ln_eval(i) - b.ln_eval(i),
            SpecExpr::Log1p(a) => ln_log1p_exp(a.ln_eval(i)),
            SpecExpr::DeviationSq(a) => {
                let x = a.ln_eval(i);
                if x > 700.0 {
                    2.0 * x
                } else {
                    2.0 * x.exp_m1().abs().ln()
                }
            }
        }
    }

    pub fn eval(&self, i: u64) -> f64 {
        let x = i as f64;
        match self.eval_linear(i, x, x.ln()) {
            Some(v) => v,
            None => self.ln_eval(i).exp(),
        }
    }

    /// Direct evaluation; `None` once any intermediate leaves the normal
    /// range, where the log-domain path takes over.
    fn eval_linear(&self, i: u64, x: f64, ln_x: f64) -> Option<f64> {
        let v = match self {
            SpecExpr::Eigen(s) => s.eigenvalue_with_ln(i, ln_x),
            SpecExpr::Mono(m) => m.coef * (m.power * ln_x + m.rate * x).exp(),
            SpecExpr::Add(a, b) => a.eval_linear(i, x, ln_x)? + b.eval_linear(i, x, ln_x)?,
            SpecExpr::Mul(a, b) => a.eval_linear(i, x, ln_x)? * b.eval_linear(i, x, ln_x)?,
            SpecExpr::Div(a, b) => a.eval_linear(i, x, ln_x)? / b.eval_linear(i, x, ln_x)?,
            SpecExpr::Log1p(a) => a.eval_linear(i, x, ln_x)?.ln_1p(),
            SpecExpr::DeviationSq(a) => {
                let d = a.eval_linear(i, x, ln_x)? - 1.0;
                d * d
            }
        };
        v.is_normal().then_some(v)
    }

    /// Envelope valid for all indices `>= from`; `from` must be at least
    /// [`Self::settled_index`].
    pub fn envelope(&self, from: u64) -> Result<Envelope> {
        debug_assert!(from >= self.settled_index());
        let t = from as f64;
        Ok(match self {
            SpecExpr::Eigen(s) => Envelope::exact(s.family().monomial()),
            SpecExpr::Mono(m) => Envelope::exact(*m),
            SpecExpr::Add(a, b) => match (a.envelope(from)?, b.envelope(from)?) {
                (nv @ Envelope::NonVanishing { .. }, _) | (_, nv @ Envelope::NonVanishing { .. }) => nv,
                (
                    Envelope::Bounded { lead: la, lo: loa, hi: hia },
                    Envelope::Bounded { lead: lb, lo: lob, hi: hib },
                ) => {
                    if lb.is_zero() || (!la.is_zero() && la.growth_cmp(&lb) == Ordering::Greater) {
                        dominated_sum(la, loa, hia, lb, hib, t)
                    } else if la.is_zero() || lb.growth_cmp(&la) == Ordering::Greater {
                        dominated_sum(lb, lob, hib, la, hia, t)
                    } else {
                        Envelope::Bounded {
                            lead: Monomial::new(la.coef + lb.coef, la.power, la.rate),
                            lo: loa.min(lob),
                            hi: hia.max(hib),
                        }
                    }
                }
            },
            SpecExpr::Mul(a, b) => match (a.envelope(from)?, b.envelope(from)?) {
                (
                    Envelope::Bounded { lead: la, lo: loa, hi: hia },
                    Envelope::Bounded { lead: lb, lo: lob, hi: hib },
                ) => Envelope::Bounded { lead: la.mul(&lb), lo: loa * lob, hi: hia * hib },
                _ => return Err(unsupported("product with a non-vanishing factor")),
            },
            SpecExpr::Div(a, b) => match (a.envelope(from)?, b.envelope(from)?) {
                (
                    Envelope::Bounded { lead: la, lo: loa, hi: hia },
                    Envelope::Bounded { lead: lb, lo: lob, hi: hib },
                ) => {
                    if lb.is_zero() || lob <= 0.0 {
                        return Err(unsupported("quotient with a denominator that may vanish"));
                    }
                    Envelope::Bounded { lead: la.div(&lb), lo: loa / hib, hi: hia / lob }
                }
                (Envelope::NonVanishing { witness }, Envelope::Bounded { lead, .. })
                    if lead.vanishes() || lead.is_constant() =>
                {
                    Envelope::NonVanishing { witness }
                }
                _ => return Err(unsupported("quotient of non-vanishing sequences")),
            },
            SpecExpr::Log1p(a) => match a.envelope(from)? {
                nv @ Envelope::NonVanishing { .. } => nv,
                Envelope::Bounded { lead, lo, hi } => {
                    if lead.is_zero() {
                        Envelope::exact(Monomial::ZERO)
                    } else if lead.vanishes() {
                        // u - u^2/2 <= log(1 + u) <= u
                        let u_max = hi * lead.sup_from(t);
                        Envelope::Bounded { lead, lo: lo * (1.0 - u_max / 2.0).max(0.0), hi }
                    } else if lead.is_constant() {
                        let c = lead.coef;
                        let mid = c.ln_1p();
                        Envelope::Bounded {
                            lead: Monomial::constant(mid),
                            lo: (lo * c).ln_1p() / mid,
                            hi: (hi * c).ln_1p() / mid,
                        }
                    } else {
                        Envelope::NonVanishing { witness: format!("log(1 + u) with u ~ {lead} unbounded") }
                    }
                }
            },
            SpecExpr::DeviationSq(a) => match a.envelope(from)? {
                Envelope::NonVanishing { .. } => {
                    return Err(unsupported("deviation of a non-vanishing sequence"));
                }
                Envelope::Bounded { lead, lo, hi } => {
                    if lead.is_zero() {
                        Envelope::exact(Monomial::constant(1.0))
                    } else if lead.vanishes() {
                        let u_max = hi * lead.sup_from(t);
                        let lo = if u_max < 1.0 { (1.0 - u_max).powi(2) } else { 0.0 };
                        Envelope::Bounded { lead: Monomial::constant(1.0), lo, hi: 1.0 }
                    } else if lead.is_constant() {
                        let c = lead.coef;
                        if lo == 1.0 && hi == 1.0 {
                            if c == 1.0 {
                                Envelope::exact(Monomial::ZERO)
                            } else {
                                Envelope::exact(Monomial::constant((c - 1.0).powi(2)))
                            }
                        } else if c * lo > 1.0 || c * hi < 1.0 {
                            let (x, y) = ((c * lo - 1.0).powi(2), (c * hi - 1.0).powi(2));
                            Envelope::Bounded { lead: Monomial::constant(1.0), lo: x.min(y), hi: x.max(y) }
                        } else {
                            return Err(unsupported("deviation from 1 of a sequence with inexact limit 1"));
                        }
                    } else {
                        Envelope::NonVanishing { witness: format!("ratio ~ {lead} grows without bound") }
                    }
                }
            },
        })
    }
}

fn dominated_sum(lead: Monomial, lo: f64, hi: f64, minor: Monomial, minor_hi: f64, t: f64) -> Envelope {
    let spill = if minor.is_zero() { 0.0 } else { minor.div(&lead).sup_from(t) };
    Envelope::Bounded { lead, lo, hi: hi + minor_hi * spill }
}

impl ops::Add for SpecExpr {
    type Output = SpecExpr;
    fn add(self, rhs: SpecExpr) -> SpecExpr {
        SpecExpr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for SpecExpr {
    type Output = SpecExpr;
    fn mul(self, rhs: SpecExpr) -> SpecExpr {
        SpecExpr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for SpecExpr {
    type Output = SpecExpr;
    fn div(self, rhs: SpecExpr) -> SpecExpr {
        SpecExpr::Div(Box::new(self), Box::new(rhs))
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(log(1 + e^x))`
fn ln_log1p_exp(x: f64) -> f64 {
    if x < -36.0 {
        x
    } else if x > 36.0 {
        (x + (-x).exp().ln_1p()).ln()
    } else {
        x.exp().ln_1p().ln()
    }
}

fn unsupported(what: &str) -> Error {
    Error::Unsupported(what.to_string())
}

/// Compensated summation of nonnegative terms.
#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    carry: f64,
    count: u64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }

    /// One ulp per accumulated term.
    fn rounding(&self) -> f64 {
        self.count as f64 * f64::EPSILON * self.total().abs()
    }
}

fn divergence_witness(lead: &Monomial) -> String {
    if !lead.vanishes() {
        format!("terms do not vanish (term test): terms ~ {lead}")
    } else {
        format!(
            "terms ~ {lead}: limit comparison with the divergent p-series sum i^{}",
            fmt_num(lead.power)
        )
    }
}

/// Certified sum of `expr(i)` over `i >= start`.
pub fn sum_spectral(expr: &SpecExpr, start: u64, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    assert!(start >= 1, "modes are indexed from 1");
    let settle = expr.settled_index().max(start);
    let probe = expr.envelope(settle.saturating_add(cfg.tail_cutoff))?;
    let (lead, lo) = match probe {
        Envelope::NonVanishing { witness } => return Ok(SeriesVerdict::diverges(witness)),
        Envelope::Bounded { lead, lo, .. } => (lead, lo),
    };
    if !lead.summable() {
        if lo <= 0.0 {
            return Err(unsupported("divergent leading term without a positive lower envelope"));
        }
        return Ok(SeriesVerdict::diverges(divergence_witness(&lead)));
    }

    let cap = (start - 1 + cfg.tail_cutoff).max(settle - 1);
    let hard_cap = cap.saturating_mul(64).max(cap.saturating_add(1 << 24)).min(MAX_INDEX);
    let mut acc = Accumulator::default();
    let mut n = start - 1;
    while n < settle - 1 {
        n += 1;
        acc.push(expr.eval(n));
    }
    loop {
        if let Some((tail_lo, tail_hi)) = tail_bounds(expr, n)? {
            let partial = acc.total();
            let width = (tail_hi - tail_lo) + acc.rounding() + 4.0 * f64::EPSILON * tail_hi;
            if n >= cap || width <= 4.0 * f64::EPSILON * (partial + tail_hi) {
                return Ok(SeriesVerdict::converges(partial + (tail_lo + tail_hi) / 2.0, width));
            }
        } else if n >= hard_cap {
            return Err(unsupported("terms are not monotone within the summation window"));
        }
        let end = n + BLOCK;
        while n < end {
            n += 1;
            acc.push(expr.eval(n));
        }
    }
}

fn tail_bounds(expr: &SpecExpr, n: u64) -> Result<Option<(f64, f64)>> {
    match expr.envelope(n + 1)? {
        Envelope::Bounded { lead, lo, hi } => {
            Ok(lead.tail_bracket(n).map(|(l, u)| (lo.max(0.0) * l, hi * u)))
        }
        Envelope::NonVanishing { .. } => Ok(None),
    }
}

/// Certified sum of `x_i^2 * weight(i)` over all modes.
pub fn sum_weighted(x: &CoeffSeq, weight: &SpecExpr, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    let mut acc = Accumulator::default();
    for &(i, v) in x.support() {
        if v != 0.0 {
            acc.push(v * v * weight.eval(i));
        }
    }
    let head = SeriesVerdict::converges(acc.total(), acc.rounding());
    let tail = match x.tail() {
        None => return Ok(head),
        Some(Tail::Power(t)) => {
            let term = SpecExpr::power(t.scale * t.scale, -2.0 * t.exponent) * weight.clone();
            sum_spectral(&term, t.start, cfg)?
        }
        Some(Tail::Subsequence(t)) => sum_subsequence(t, weight, cfg)?,
    };
    Ok(head.plus(tail))
}

/// Certified sum of `x_{i_k}^2 * weight(i_k)` over the not yet materialized
/// part of an adversarial subsequence, where `x_{i_k}^2 = scale^2 * r_{i_k}`.
fn sum_subsequence(tail: &SubsequenceTail, weight: &SpecExpr, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    let r = tail.spectrum();
    let term = SpecExpr::constant(tail.scale() * tail.scale()) * SpecExpr::eigen(r) * weight.clone();
    let from = term.settled_index().max(tail.after() + 1);
    let probe_at = from.saturating_add(cfg.tail_cutoff);
    let (lead, lo) = match term.envelope(probe_at)? {
        Envelope::NonVanishing { witness } => {
            return Ok(SeriesVerdict::diverges(format!("along the adversarial subsequence: {witness}")));
        }
        Envelope::Bounded { lead, lo, .. } => (lead, lo),
    };
    if !lead.vanishes() {
        if lo <= 0.0 {
            return Err(unsupported("non-vanishing subsequence terms without a positive lower envelope"));
        }
        return Ok(SeriesVerdict::diverges(format!(
            "terms along the adversarial subsequence do not vanish: terms ~ {lead}"
        )));
    }

    let mut acc = Accumulator::default();
    // x_{i_k}^2 = scale^2 r_{i_k} <= scale^2 delta^2 2^-k, so a bounded weight
    // leaves a geometric remainder in k.
    if let Envelope::Bounded { lead: wl, hi: wh, .. } = weight.envelope(from)? {
        let w_sup = wh * wl.sup_from(from as f64);
        if w_sup.is_finite() {
            let c = tail.scale() * tail.scale() * tail.delta() * tail.delta() * w_sup;
            let remainder = |k: u32| 2.0 * c * 0.5f64.powi(k.min(1100) as i32);
            let mut rem = 0.0;
            for (k, i) in tail.indices() {
                if i >= from && remainder(k) <= 4.0 * f64::EPSILON * acc.total().max(f64::MIN_POSITIVE) {
                    rem = remainder(k);
                    break;
                }
                acc.push(term.eval(i));
            }
            return Ok(SeriesVerdict::converges(acc.total() + rem / 2.0, rem + acc.rounding()));
        }
    }
    if lead.summable() {
        // The subsequence is strictly increasing, so its remainder is
        // dominated by the full remainder of the same positive sequence.
        let window_end = probe_at.max(from);
        let mut covered = tail.after();
        for (_, i) in tail.indices() {
            if i > window_end {
                covered = i - 1;
                break;
            }
            acc.push(term.eval(i));
            covered = i;
        }
        let covered = covered.max(from - 1);
        let upper = match term.envelope(covered + 1)? {
            Envelope::Bounded { lead, hi, .. } => lead
                .tail_bracket(covered)
                .map(|(_, u)| hi * u)
                .ok_or_else(|| unsupported("subsequence remainder not yet monotone"))?,
            Envelope::NonVanishing { .. } => unreachable!("summable lead"),
        };
        let width = upper + acc.rounding();
        return Ok(SeriesVerdict::converges(acc.total() + upper / 2.0, width));
    }

    // Vanishing but not summable over all indices: lead ~ A i^p, -1 <= p < 0.
    match r.family() {
        Family::PowerLaw { scale, exponent } if exponent > 0.0 => {
            let hi = match term.envelope(from)? {
                Envelope::Bounded { hi, .. } => hi,
                Envelope::NonVanishing { .. } => unreachable!("vanishing lead"),
            };
            // r_{i_k} <= delta^2 2^-k forces i_k >= L_k = (C 2^k / delta^2)^(1/a),
            // so term_k <= hi * A * L_k^p decays geometrically in k.
            let ln_l = |k: u32| (scale.ln() + k as f64 * std::f64::consts::LN_2 - 2.0 * tail.delta().ln()) / exponent;
            let ratio = (lead.power / exponent * std::f64::consts::LN_2).exp();
            let remainder = |k: u32| hi * lead.coef * (lead.power * ln_l(k)).exp() / (1.0 - ratio);
            let mut rem = 0.0;
            for (k, i) in tail.indices() {
                if i >= from && remainder(k) <= 4.0 * f64::EPSILON * acc.total().max(f64::MIN_POSITIVE) {
                    rem = remainder(k);
                    break;
                }
                acc.push(term.eval(i));
            }
            Ok(SeriesVerdict::converges(acc.total() + rem / 2.0, rem + acc.rounding()))
        }
        Family::Exponential { .. } => Ok(SeriesVerdict::diverges(format!(
            "adversarial subsequence indices grow at most linearly in k for a geometric spectrum; \
             terms ~ {lead} with exponent >= -1 give a divergent p-series in k"
        ))),
        _ => Err(unsupported("adversarial subsequence over a spectrum bounded away from zero")),
    }
}

/// Symbolic description of a nonnegative term sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum TermModel {
    /// `expr(i)` for `i >= start`.
    Spectral { expr: SpecExpr, start: u64 },
    /// `x_i^2 * weight(i)` for all `i`.
    Weighted { coeffs: CoeffSeq, weight: SpecExpr },
}

/// Decides convergence of `sum_i term(i)` and certifies its value.
pub fn classify_series(term: &TermModel, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    match term {
        TermModel::Spectral { expr, start } => sum_spectral(expr, *start, cfg),
        TermModel::Weighted { coeffs, weight } => sum_weighted(coeffs, weight, cfg),
    }
}
