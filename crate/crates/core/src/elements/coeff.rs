//! Hilbert-space elements as Fourier coefficients in the shared eigenbasis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::SpectrumModel;

/// Name of the construction rule recorded in serialized adversarial data.
pub const SUBSEQUENCE_RULE: &str = "corollary-5";

/// Longest stretch of a power tail that arithmetic may materialize into the
/// explicit support.
const MAX_MATERIALIZE: u64 = 1_000_000;

/// `scale * i^(-exponent)` for every `i >= start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTail {
    pub scale: f64,
    pub exponent: f64,
    pub start: u64,
}

impl PowerTail {
    pub fn value(&self, i: u64) -> f64 {
        self.scale * (i as f64).powf(-self.exponent)
    }
}

/// Coefficients `scale * sqrt(r_{i_k})` on the index subsequence
/// `i_k = min { i > i_{k-1} : r_i <= delta^2 / 2^k }`, for `k >= next_k`
/// and with `i_{next_k - 1} = after`. Zero off the subsequence.
///
/// `origin` is the starting point `i_0` of the whole construction, kept so
/// that the materialized indices `k < next_k` can be replayed.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsequenceTail {
    spectrum: SpectrumModel,
    delta: f64,
    origin: u64,
    next_k: u32,
    after: u64,
    scale: f64,
}

impl SubsequenceTail {
    /// The full subsequence starting after `origin`, nothing materialized.
    pub fn new(spectrum: SpectrumModel, delta: f64, origin: u64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive and finite, got {delta}")));
        }
        Ok(Self { spectrum, delta, origin, next_k: 1, after: origin, scale: 1.0 })
    }

    pub fn spectrum(&self) -> &SpectrumModel {
        &self.spectrum
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn origin(&self) -> u64 {
        self.origin
    }

    pub fn next_k(&self) -> u32 {
        self.next_k
    }

    /// Last subsequence index already moved into the explicit support.
    pub fn after(&self) -> u64 {
        self.after
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn threshold(delta: f64, k: u32) -> f64 {
        delta * delta * 0.5f64.powi(k.min(i32::MAX as u32) as i32)
    }

    /// Remaining `(k, i_k)` pairs, up to the last representable index.
    pub fn indices(&self) -> SubsequenceIter<'_> {
        SubsequenceIter { spectrum: &self.spectrum, delta: self.delta, k: self.next_k, prev: self.after }
    }

    /// Every `(k, i_k)` from `k = 1`, including the materialized ones.
    pub fn all_indices(&self) -> SubsequenceIter<'_> {
        SubsequenceIter { spectrum: &self.spectrum, delta: self.delta, k: 1, prev: self.origin }
    }

    pub fn coefficient(&self, i: u64) -> f64 {
        self.scale * self.spectrum.eigenvalue(i).sqrt()
    }

    fn same_rule(&self, o: &SubsequenceTail) -> bool {
        self.spectrum == o.spectrum && self.delta == o.delta && self.origin == o.origin
    }

    /// Moves every subsequence entry with index `<= limit` into `support`.
    fn materialize_until(&mut self, limit: u64, support: &mut Vec<(u64, f64)>) {
        let mut taken = Vec::new();
        for (k, i) in self.indices() {
            if i > limit {
                break;
            }
            taken.push((k, i));
        }
        for (k, i) in taken {
            support.push((i, self.coefficient(i)));
            self.next_k = k + 1;
            self.after = i;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubsequenceIter<'a> {
    spectrum: &'a SpectrumModel,
    delta: f64,
    k: u32,
    prev: u64,
}

impl Iterator for SubsequenceIter<'_> {
    type Item = (u32, u64);

    fn next(&mut self) -> Option<(u32, u64)> {
        let thr = SubsequenceTail::threshold(self.delta, self.k);
        let i = self.spectrum.next_at_or_below(self.prev, thr)?;
        let item = (self.k, i);
        self.k = self.k.checked_add(1)?;
        self.prev = i;
        Some(item)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    Power(PowerTail),
    Subsequence(SubsequenceTail),
}

/// An element of the Hilbert space: explicit coefficients on finitely many
/// modes plus an optional analytic tail.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "CoeffRepr", into = "CoeffRepr")]
pub struct CoeffSeq {
    support: Vec<(u64, f64)>,
    tail: Option<Tail>,
}

impl CoeffSeq {
    pub fn new(support: Vec<(u64, f64)>, tail: Option<Tail>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidCoefficients(m));
        let mut prev = 0u64;
        for &(i, v) in &support {
            if i <= prev {
                return bad(format!("support indices must be >= 1 and strictly increasing (at index {i})"));
            }
            if !v.is_finite() {
                return bad(format!("coefficient at index {i} is not finite"));
            }
            prev = i;
        }
        match &tail {
            Some(Tail::Power(t)) => {
                if !(t.scale.is_finite() && t.scale != 0.0) {
                    return bad(format!("tail scale must be finite and nonzero, got {}", t.scale));
                }
                if !(t.exponent.is_finite() && t.exponent > 0.5) {
                    return bad(format!(
                        "tail exponent must exceed 1/2 for a square-summable sequence, got {}",
                        t.exponent
                    ));
                }
                if t.start <= prev {
                    return bad(format!("tail start {} must exceed the last support index {prev}", t.start));
                }
            }
            Some(Tail::Subsequence(t)) => {
                if !(t.scale.is_finite() && t.scale != 0.0) {
                    return bad(format!("subsequence scale must be finite and nonzero, got {}", t.scale));
                }
                if let Some((_, next)) = t.indices().next() {
                    if next <= prev {
                        return bad(format!("subsequence index {next} collides with the explicit support"));
                    }
                }
            }
            None => {}
        }
        Ok(Self { support, tail })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Finitely supported element from `(index, value)` pairs.
    pub fn sparse(support: Vec<(u64, f64)>) -> Result<Self> {
        Self::new(support, None)
    }

    /// `value * e_i`
    pub fn basis(i: u64, value: f64) -> Result<Self> {
        Self::sparse(vec![(i, value)])
    }

    /// `scale * i^(-exponent)` for `i >= start`, zero before.
    pub fn power_tail(scale: f64, exponent: f64, start: u64) -> Result<Self> {
        Self::new(Vec::new(), Some(Tail::Power(PowerTail { scale, exponent, start })))
    }

    pub fn support(&self) -> &[(u64, f64)] {
        &self.support
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }

    pub fn last_support_index(&self) -> u64 {
        self.support.last().map_or(0, |&(i, _)| i)
    }

    /// Coefficient at mode `i`.
    pub fn value_at(&self, i: u64) -> f64 {
        if let Ok(pos) = self.support.binary_search_by_key(&i, |&(j, _)| j) {
            return self.support[pos].1;
        }
        match &self.tail {
            Some(Tail::Power(t)) if i >= t.start => t.value(i),
            Some(Tail::Subsequence(t)) if i > t.after => {
                match t.indices().map(|(_, j)| j).find(|&j| j >= i) {
                    Some(j) if j == i => t.coefficient(i),
                    _ => 0.0,
                }
            }
            _ => 0.0,
        }
    }

    /// Coefficients of modes `1..=n` as a dense vector.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let n64 = n as u64;
        match &self.tail {
            Some(Tail::Power(t)) => {
                for i in t.start..=n64 {
                    out[(i - 1) as usize] = t.value(i);
                }
            }
            Some(Tail::Subsequence(t)) => {
                for (_, i) in t.indices().take_while(|&(_, i)| i <= n64) {
                    out[(i - 1) as usize] = t.coefficient(i);
                }
            }
            None => {}
        }
        for &(i, v) in self.support.iter().take_while(|(i, _)| *i <= n64) {
            out[(i - 1) as usize] = v;
        }
        out
    }

    /// `t * self`
    pub fn scaled(&self, t: f64) -> CoeffSeq {
        if t == 0.0 {
            return CoeffSeq::zero();
        }
        let support = self.support.iter().map(|&(i, v)| (i, t * v)).collect();
        let tail = self.tail.clone().map(|tail| match tail {
            Tail::Power(p) => Tail::Power(PowerTail { scale: t * p.scale, ..p }),
            Tail::Subsequence(mut s) => {
                s.scale *= t;
                Tail::Subsequence(s)
            }
        });
        CoeffSeq { support, tail }
    }

    /// `self + other`, exact within the representable universe.
    ///
    /// Two power tails must share the exponent; two subsequence tails must
    /// follow the same rule. Everything else is a [`Error::TailMismatch`].
    pub fn add(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        let mut a = self.clone();
        let mut b = other.clone();
        let target = a.last_support_index().max(b.last_support_index());
        let tail = match (a.tail.take(), b.tail.take()) {
            (None, None) => None,
            (Some(t), None) => Some(a.materialize_tail(t, target)?),
            (None, Some(t)) => Some(b.materialize_tail(t, target)?),
            (Some(Tail::Power(p)), Some(Tail::Power(q))) => {
                if p.exponent != q.exponent {
                    return Err(Error::TailMismatch(format!(
                        "power tails with exponents {} and {} do not combine",
                        p.exponent, q.exponent
                    )));
                }
                let target = target.max(p.start.max(q.start) - 1);
                let p = a.materialize_tail(Tail::Power(p), target)?;
                let q = b.materialize_tail(Tail::Power(q), target)?;
                match (p, q) {
                    (Tail::Power(p), Tail::Power(q)) => {
                        let scale = p.scale + q.scale;
                        (scale != 0.0).then_some(Tail::Power(PowerTail { scale, ..p }))
                    }
                    _ => unreachable!(),
                }
            }
            (Some(Tail::Subsequence(s)), Some(Tail::Subsequence(t))) if s.same_rule(&t) => {
                let target = target.max(s.after).max(t.after);
                let s = a.materialize_tail(Tail::Subsequence(s), target)?;
                let t = b.materialize_tail(Tail::Subsequence(t), target)?;
                match (s, t) {
                    (Tail::Subsequence(s), Tail::Subsequence(t)) if s.next_k == t.next_k && s.after == t.after => {
                        let scale = s.scale + t.scale;
                        (scale != 0.0).then_some(Tail::Subsequence(SubsequenceTail { scale, ..s }))
                    }
                    _ => {
                        return Err(Error::TailMismatch(
                            "adversarial subsequences are out of step".to_string(),
                        ))
                    }
                }
            }
            _ => {
                return Err(Error::TailMismatch(
                    "a power tail and an adversarial subsequence do not combine".to_string(),
                ))
            }
        };
        let support = merge_support(&a.support, &b.support);
        CoeffSeq::new(support, tail)
    }

    /// `self - other`
    pub fn sub(&self, other: &CoeffSeq) -> Result<CoeffSeq> {
        self.add(&other.scaled(-1.0))
    }

    /// Moves the part of `tail` at indices `<= limit` into the support and
    /// returns what is left.
    fn materialize_tail(&mut self, tail: Tail, limit: u64) -> Result<Tail> {
        match tail {
            Tail::Power(p) => {
                if limit < p.start {
                    return Ok(Tail::Power(p));
                }
                if limit - p.start >= MAX_MATERIALIZE {
                    return Err(Error::TailMismatch(format!(
                        "aligning a power tail starting at {} with index {limit} needs too many explicit modes",
                        p.start
                    )));
                }
                self.support.extend((p.start..=limit).map(|i| (i, p.value(i))));
                Ok(Tail::Power(PowerTail { start: limit + 1, ..p }))
            }
            Tail::Subsequence(mut s) => {
                s.materialize_until(limit, &mut self.support);
                Ok(Tail::Subsequence(s))
            }
        }
    }
}

fn merge_support(a: &[(u64, f64)], b: &[(u64, f64)]) -> Vec<(u64, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut x, mut y) = (a.iter().peekable(), b.iter().peekable());
    loop {
        let next = match (x.peek(), y.peek()) {
            (Some(&&(i, u)), Some(&&(j, v))) => {
                if i == j {
                    x.next();
                    y.next();
                    (i, u + v)
                } else if i < j {
                    x.next();
                    (i, u)
                } else {
                    y.next();
                    (j, v)
                }
            }
            (Some(&&p), None) => {
                x.next();
                p
            }
            (None, Some(&&p)) => {
                y.next();
                p
            }
            (None, None) => break,
        };
        if next.1 != 0.0 {
            out.push(next);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffRepr {
    support: Vec<(u64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<PowerTail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    construction: Option<ConstructionRepr>,
}

/// Serialized adversarial subsequence: the materialized indices plus the
/// rule that extends them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstructionRepr {
    rule: String,
    delta: f64,
    indices: Vec<u64>,
    noise_spectrum: SpectrumModel,
    #[serde(default)]
    origin: u64,
    #[serde(default = "unit_scale")]
    scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl TryFrom<CoeffRepr> for CoeffSeq {
    type Error = Error;

    fn try_from(r: CoeffRepr) -> Result<Self> {
        let tail = match (r.tail, r.construction) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidCoefficients(
                    "a sequence carries either a power tail or a construction, not both".to_string(),
                ))
            }
            (Some(p), None) => Some(Tail::Power(p)),
            (None, Some(c)) => {
                if c.rule != SUBSEQUENCE_RULE {
                    return Err(Error::InvalidCoefficients(format!("unknown construction rule \"{}\"", c.rule)));
                }
                let mut t = SubsequenceTail::new(c.noise_spectrum, c.delta, c.origin)?;
                t.scale = c.scale;
                let replay: Vec<u64> = t.all_indices().take(c.indices.len()).map(|(_, i)| i).collect();
                if replay != c.indices {
                    return Err(Error::InvalidCoefficients(
                        "construction indices do not follow the recorded rule".to_string(),
                    ));
                }
                t.next_k = c.indices.len() as u32 + 1;
                t.after = c.indices.last().copied().unwrap_or(c.origin);
                Some(Tail::Subsequence(t))
            }
            (None, None) => None,
        };
        CoeffSeq::new(r.support, tail)
    }
}

impl From<CoeffSeq> for CoeffRepr {
    fn from(x: CoeffSeq) -> Self {
        let (tail, construction) = match x.tail {
            None => (None, None),
            Some(Tail::Power(p)) => (Some(p), None),
            Some(Tail::Subsequence(t)) => {
                let indices = t.all_indices().take((t.next_k - 1) as usize).map(|(_, i)| i).collect();
                (
                    None,
                    Some(ConstructionRepr {
                        rule: SUBSEQUENCE_RULE.to_string(),
                        delta: t.delta,
                        indices,
                        noise_spectrum: t.spectrum,
                        origin: t.origin,
                        scale: t.scale,
                    }),
                )
            }
        };
        CoeffRepr { support: x.support, tail, construction }
    }
}

impl SubsequenceTail {
    /// Materializes the first `count` entries (k = 1..=count) into `support`
    /// and returns the tail that continues after them.
    pub(crate) fn materialize_first(mut self, count: u32, support: &mut Vec<(u64, f64)>) -> Self {
        let taken: Vec<(u32, u64)> = self.indices().take(count as usize).collect();
        for (k, i) in taken {
            support.push((i, self.coefficient(i)));
            self.next_k = k + 1;
            self.after = i;
        }
        self
    }
}
