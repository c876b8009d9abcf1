//! 3DVAR, Kalman and Bayes updates when every operator is diagonal in the
//! shared eigenbasis and the whole state is observed.

use serde::{Deserialize, Serialize};

use crate::elements::series::{self, SpecExpr};
use crate::elements::{weighted_norm_sq, CoeffSeq, ExtReal, SeriesConfig, SeriesVerdict};
use crate::error::{Error, Result};
use crate::spectra::SpectrumModel;
use crate::wellposed::{self, LogConstant};

/// Forecast `N(prior_mean, prior_spectrum)` observed as `data = x + noise`,
/// `noise ~ N(0, noise_spectrum)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssimilationProblem {
    pub prior_mean: CoeffSeq,
    pub prior_spectrum: SpectrumModel,
    pub noise_spectrum: SpectrumModel,
    pub data: CoeffSeq,
}

impl AssimilationProblem {
    pub fn new(prior_mean: CoeffSeq, prior_spectrum: SpectrumModel, noise_spectrum: SpectrumModel, data: CoeffSeq) -> Self {
        Self { prior_mean, prior_spectrum, noise_spectrum, data }
    }

    /// Zero prior mean.
    pub fn centered(prior_spectrum: SpectrumModel, noise_spectrum: SpectrumModel, data: CoeffSeq) -> Self {
        Self::new(CoeffSeq::zero(), prior_spectrum, noise_spectrum, data)
    }

    pub fn with_data(&self, data: CoeffSeq) -> Self {
        Self { data, ..self.clone() }
    }

    /// `y - m^f`
    pub fn innovation(&self) -> Result<CoeffSeq> {
        self.data.sub(&self.prior_mean)
    }
}

/// `|x - x^f|^2_{B^-1} + |y - x|^2_{R^-1}` with `B` the prior spectrum.
pub fn three_dvar_cost(x: &CoeffSeq, prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<ExtReal> {
    let background = x.sub(&prob.prior_mean)?;
    let misfit = prob.data.sub(x)?;
    Ok(weighted_norm_sq(&background, &prob.prior_spectrum, cfg)? + weighted_norm_sq(&misfit, &prob.noise_spectrum, cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible,
    Infeasible { certificate: String },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// `sum_i (y_i - x^f_i)^2 / (b_i + r_i)`, the minimal 3DVAR cost.
fn residual_series(prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<SeriesVerdict> {
    let weight = (SpecExpr::eigen(&prob.prior_spectrum) + SpecExpr::eigen(&prob.noise_spectrum)).recip();
    series::sum_weighted(&prob.innovation()?, &weight, cfg)
}

/// The cost is finite somewhere iff its minimum is finite.
pub fn three_dvar_feasible(prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<Feasibility> {
    Ok(match residual_series(prob, cfg)? {
        SeriesVerdict::Converges { .. } => Feasibility::Feasible,
        SeriesVerdict::Diverges { witness } => Feasibility::Infeasible {
            certificate: format!("sum (y_i - x^f_i)^2 / (b_i + r_i) diverges: {witness}"),
        },
    })
}

/// Per-mode minimizer `(r x^f + b y) / (b + r)` of the 3DVAR cost.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeDvarArgmin {
    problem: AssimilationProblem,
}

impl ThreeDvarArgmin {
    pub fn value_at(&self, i: u64) -> f64 {
        let p = &self.problem;
        let (b, r) = scaled_pair(&p.prior_spectrum, &p.noise_spectrum, i);
        (r * p.prior_mean.value_at(i) + b * p.data.value_at(i)) / (b + r)
    }

    /// Values on the union of the explicit supports of `x^f` and `y`.
    pub fn materialized(&self) -> Vec<(u64, f64)> {
        support_union(&self.problem.prior_mean, &self.problem.data)
            .into_iter()
            .map(|i| (i, self.value_at(i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeDvarMinimum {
    pub argmin: ThreeDvarArgmin,
    /// Certified minimal cost.
    pub cost: SeriesVerdict,
}

pub fn three_dvar_minimize(prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<ThreeDvarMinimum> {
    match residual_series(prob, cfg)? {
        cost @ SeriesVerdict::Converges { .. } => {
            Ok(ThreeDvarMinimum { argmin: ThreeDvarArgmin { problem: prob.clone() }, cost })
        }
        SeriesVerdict::Diverges { witness } => {
            Err(Error::InfeasibleProblem(format!("3DVAR cost is infinite everywhere: {witness}")))
        }
    }
}

/// `p / (p + r)`
pub fn kalman_gain_mode(p: f64, r: f64) -> f64 {
    debug_assert!(p > 0.0 && r > 0.0);
    p / (p + r)
}

/// Per-mode Gaussian measure: the prior, optionally updated by data.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSpec {
    prior_mean: CoeffSeq,
    prior_spectrum: SpectrumModel,
    update: Option<(SpectrumModel, CoeffSeq)>,
}

impl PosteriorSpec {
    pub fn prior(prior_mean: CoeffSeq, prior_spectrum: SpectrumModel) -> Self {
        Self { prior_mean, prior_spectrum, update: None }
    }

    pub fn updated(prob: &AssimilationProblem) -> Self {
        Self {
            prior_mean: prob.prior_mean.clone(),
            prior_spectrum: prob.prior_spectrum.clone(),
            update: Some((prob.noise_spectrum.clone(), prob.data.clone())),
        }
    }

    pub fn is_prior(&self) -> bool {
        self.update.is_none()
    }

    /// Kalman gain at mode `i`; zero when no data was assimilated.
    pub fn gain(&self, i: u64) -> f64 {
        match &self.update {
            Some((r, _)) => {
                let (p, r) = scaled_pair(&self.prior_spectrum, r, i);
                kalman_gain_mode(p, r)
            }
            None => 0.0,
        }
    }

    /// `m^a_i = m^f_i + k_i (y_i - m^f_i)`
    pub fn mean(&self, i: u64) -> f64 {
        let m = self.prior_mean.value_at(i);
        match &self.update {
            Some((_, y)) => m + self.gain(i) * (y.value_at(i) - m),
            None => m,
        }
    }

    /// `p^a_i = (1/p_i + 1/r_i)^-1`
    pub fn variance(&self, i: u64) -> f64 {
        let p = self.prior_spectrum.eigenvalue(i);
        match &self.update {
            Some((r, _)) => {
                let r_i = r.eigenvalue(i);
                if p.is_normal() && r_i.is_normal() {
                    p * r_i / (p + r_i)
                } else {
                    let (lp, lr) = (self.prior_spectrum.ln_eigenvalue(i), r.ln_eigenvalue(i));
                    (lp + lr - lp.max(lr) - (-(lp - lr).abs()).exp().ln_1p()).exp()
                }
            }
            None => p,
        }
    }

    /// Modes carried explicitly by the prior mean or the data.
    pub fn support(&self) -> Vec<u64> {
        match &self.update {
            Some((_, y)) => support_union(&self.prior_mean, y),
            None => self.prior_mean.support().iter().map(|&(i, _)| i).collect(),
        }
    }

    /// `(i, mean, variance)` on [`Self::support`].
    pub fn materialized(&self) -> Vec<(u64, f64, f64)> {
        self.support().into_iter().map(|i| (i, self.mean(i), self.variance(i))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorResult {
    WellPosed { spec: PosteriorSpec, log_c: LogConstant },
    /// `c(y) = 0`: the data are ignored and the analysis is the prior.
    IllPosed { certificate: String, fallback: PosteriorSpec },
}

impl PosteriorResult {
    pub fn is_well_posed(&self) -> bool {
        matches!(self, PosteriorResult::WellPosed { .. })
    }

    /// The analysis measure, the prior when ill posed.
    pub fn analysis(&self) -> &PosteriorSpec {
        match self {
            PosteriorResult::WellPosed { spec, .. } => spec,
            PosteriorResult::IllPosed { fallback, .. } => fallback,
        }
    }
}

pub fn posterior(prob: &AssimilationProblem, cfg: &SeriesConfig) -> Result<PosteriorResult> {
    let log_c = wellposed::log_norm_constant(prob, cfg)?;
    Ok(if log_c.value.is_finite() {
        PosteriorResult::WellPosed { spec: PosteriorSpec::updated(prob), log_c }
    } else {
        PosteriorResult::IllPosed {
            certificate: log_c.certificates.join("; "),
            fallback: PosteriorSpec::prior(prob.prior_mean.clone(), prob.prior_spectrum.clone()),
        }
    })
}

/// `(a_i, b_i)` rescaled by a common factor when either underflows.
fn scaled_pair(a: &SpectrumModel, b: &SpectrumModel, i: u64) -> (f64, f64) {
    let (x, y) = (a.eigenvalue(i), b.eigenvalue(i));
    if x.is_normal() && y.is_normal() {
        return (x, y);
    }
    let (lx, ly) = (a.ln_eigenvalue(i), b.ln_eigenvalue(i));
    let top = lx.max(ly);
    ((lx - top).exp(), (ly - top).exp())
}

fn support_union(a: &CoeffSeq, b: &CoeffSeq) -> Vec<u64> {
    let mut out: Vec<u64> = a.support().iter().chain(b.support()).map(|&(i, _)| i).collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> SeriesConfig {
        SeriesConfig::default()
    }

    fn pl(c: f64, a: f64) -> SpectrumModel {
        SpectrumModel::power_law(c, a).unwrap()
    }

    fn one() -> SpectrumModel {
        SpectrumModel::constant(1.0).unwrap()
    }

    fn e1(v: f64) -> CoeffSeq {
        CoeffSeq::basis(1, v).unwrap()
    }

    #[test]
    fn cost_examples() {
        let zero = AssimilationProblem::centered(pl(1.0, 2.0), one(), CoeffSeq::zero());
        assert_eq!(three_dvar_cost(&CoeffSeq::zero(), &zero, &cfg()).unwrap(), ExtReal::Finite(0.0));

        let p = AssimilationProblem::centered(one(), one(), e1(2.0));
        assert_eq!(three_dvar_cost(&e1(1.0), &p, &cfg()).unwrap(), ExtReal::Finite(2.0));
    }

    #[test]
    fn example_one_cost_is_identically_infinite() {
        let y = CoeffSeq::power_tail(1.0, 1.0, 1).unwrap();
        let p = AssimilationProblem::centered(pl(1.0, 2.0), pl(1.0, 2.0), y);
        for x in [CoeffSeq::zero(), e1(3.0), CoeffSeq::power_tail(1.0, 1.0, 1).unwrap(), CoeffSeq::power_tail(-2.0, 1.0, 5).unwrap()] {
            assert_eq!(three_dvar_cost(&x, &p, &cfg()).unwrap(), ExtReal::PosInfinity);
        }
        let f = three_dvar_feasible(&p, &cfg()).unwrap();
        assert!(!f.is_feasible());
        assert!(matches!(three_dvar_minimize(&p, &cfg()), Err(Error::InfeasibleProblem(_))));
    }

    #[test]
    fn mismatched_tails_surface() {
        let y = CoeffSeq::power_tail(1.0, 1.0, 1).unwrap();
        let x = CoeffSeq::power_tail(1.0, 2.0, 1).unwrap();
        let p = AssimilationProblem::centered(one(), one(), y);
        assert!(matches!(three_dvar_cost(&x, &p, &cfg()), Err(Error::TailMismatch(_))));
    }

    #[test]
    fn feasibility_examples() {
        let y = CoeffSeq::power_tail(1.0, 1.0, 1).unwrap();
        for b in [pl(1.0, 2.0), pl(1.0, 0.0), SpectrumModel::exponential(1.0, 0.5).unwrap()] {
            let p = AssimilationProblem::centered(b, one(), y.clone());
            assert!(three_dvar_feasible(&p, &cfg()).unwrap().is_feasible());
        }
        let p = AssimilationProblem::new(y.clone(), pl(1.0, 2.0), pl(1.0, 2.0), y);
        assert!(three_dvar_feasible(&p, &cfg()).unwrap().is_feasible());
    }

    #[test]
    fn minimize_examples() {
        let p = AssimilationProblem::centered(one(), one(), e1(2.0));
        let m = three_dvar_minimize(&p, &cfg()).unwrap();
        assert_eq!(m.argmin.value_at(1), 1.0);
        assert_eq!(m.cost.value(), ExtReal::Finite(2.0));

        let p = AssimilationProblem::new(e1(0.7), pl(1.0, 2.0), one(), e1(0.7));
        let m = three_dvar_minimize(&p, &cfg()).unwrap();
        assert_eq!(m.argmin.value_at(1), 0.7);
        assert_eq!(m.cost.value(), ExtReal::Finite(0.0));

        let p = AssimilationProblem::centered(one(), SpectrumModel::constant(1e6).unwrap(), e1(1.0));
        let x = three_dvar_minimize(&p, &cfg()).unwrap().argmin.value_at(1);
        assert!((x - 1.0 / (1.0 + 1e6)).abs() < 1e-18);
        assert!((x - 9.99999e-7).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        assert_eq!(kalman_gain_mode(1.0, 1.0), 0.5);
        assert!((kalman_gain_mode(1.0, 1e9) - 1e-9).abs() < 1e-17);
        assert!((kalman_gain_mode(1e9, 1.0) - (1.0 - 1e-9)).abs() < 1e-15);
    }

    #[test]
    fn posterior_examples() {
        let eq = AssimilationProblem::centered(pl(1.0, 2.0), pl(1.0, 2.0), e1(1.0));
        match posterior(&eq, &cfg()).unwrap() {
            PosteriorResult::IllPosed { fallback, certificate } => {
                assert!(fallback.is_prior());
                assert!(!certificate.is_empty());
                assert_eq!(fallback.mean(1), 0.0);
                assert_eq!(fallback.variance(3), 1.0 / 9.0);
            }
            other => panic!("{other:?}"),
        }

        let wp = AssimilationProblem::centered(pl(1.0, 2.0), one(), CoeffSeq::zero());
        match posterior(&wp, &cfg()).unwrap() {
            PosteriorResult::WellPosed { log_c, .. } => {
                let oracle = -0.5 * (std::f64::consts::PI.sinh() / std::f64::consts::PI).ln();
                assert!((log_c.value.finite().unwrap() - oracle).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }

        let single = AssimilationProblem::centered(SpectrumModel::constant(1.0).unwrap().with_prefix(vec![1.0]).unwrap(), one(), e1(2.0));
        let spec = PosteriorSpec::updated(&single);
        assert_eq!(spec.mean(1), 1.0);
        assert_eq!(spec.variance(1), 0.5);
        assert_eq!(spec.materialized(), vec![(1, 1.0, 0.5)]);
    }

    #[test]
    fn underflowing_eigenvalues_stay_finite() {
        let p = SpectrumModel::exponential(1.0, 0.05).unwrap();
        let r = SpectrumModel::exponential(1.0, 0.1).unwrap();
        let prob = AssimilationProblem::centered(p, r, CoeffSeq::basis(1000, 1.0).unwrap());
        let spec = PosteriorSpec::updated(&prob);
        let k = spec.gain(1000);
        assert!(k.is_finite() && k > 0.0 && k < 1e-100);
        assert!(spec.mean(1000).is_finite());
        assert_eq!(spec.variance(1000), 0.0);
        let argmin = ThreeDvarArgmin { problem: prob };
        assert!((argmin.value_at(1000) - spec.mean(1000)).abs() < 1e-300);
        assert_eq!(argmin.value_at(2000), 0.0);
    }

    fn arb_spectrum() -> impl Strategy<Value = SpectrumModel> {
        prop_oneof![
            (0.1f64..10.0, 0.0f64..4.0).prop_map(|(c, a)| pl(c, a)),
            (0.1f64..10.0, 0.2f64..0.95).prop_map(|(c, q)| SpectrumModel::exponential(c, q).unwrap()),
            (0.1f64..10.0).prop_map(|c| SpectrumModel::constant(c).unwrap()),
        ]
    }

    fn arb_sparse() -> impl Strategy<Value = CoeffSeq> {
        prop::collection::btree_map(1u64..60, -5.0f64..5.0, 0..8)
            .prop_map(|m| CoeffSeq::sparse(m.into_iter().collect()).unwrap())
    }

    fn rel_close(a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(scale)
    }

    proptest! {
        #[test]
        fn three_dvar_and_bayes_agree(p in arb_spectrum(), r in arb_spectrum(), m in arb_sparse(), y in arb_sparse()) {
            let prob = AssimilationProblem::new(m, p, r, y);
            let min = three_dvar_minimize(&prob, &cfg()).unwrap();
            let post = PosteriorSpec::updated(&prob);
            for (i, x) in min.argmin.materialized() {
                let scale = prob.prior_mean.value_at(i).abs().max(prob.data.value_at(i).abs());
                prop_assert!(rel_close(x, post.mean(i), scale), "mode {i}: {x} vs {}", post.mean(i));
            }
        }

        #[test]
        fn precisions_add(p in 1e-6f64..1e6, r in 1e-6f64..1e6) {
            let prob = AssimilationProblem::centered(
                SpectrumModel::constant(p).unwrap(), SpectrumModel::constant(r).unwrap(), CoeffSeq::zero());
            let pa = PosteriorSpec::updated(&prob).variance(1);
            let lhs = 1.0 / pa;
            let rhs = 1.0 / p + 1.0 / r;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }

        #[test]
        fn mean_is_a_convex_combination(p in arb_spectrum(), r in arb_spectrum(), m in arb_sparse(), y in arb_sparse()) {
            let prob = AssimilationProblem::new(m, p, r, y);
            let post = PosteriorSpec::updated(&prob);
            for i in post.support() {
                let k = post.gain(i);
                prop_assert!(k > 0.0 && k < 1.0 || k == 1.0 || k == 0.0);
                let (a, b) = (prob.prior_mean.value_at(i), prob.data.value_at(i));
                let ma = post.mean(i);
                prop_assert!(ma >= a.min(b) - 1e-12 * a.abs().max(b.abs()));
                prop_assert!(ma <= a.max(b) + 1e-12 * a.abs().max(b.abs()));
            }
        }

        #[test]
        fn more_noise_means_less_gain(p in 0.01f64..100.0, r in 0.01f64..100.0, bump in 1.01f64..10.0, m in -5.0f64..5.0, y in -5.0f64..5.0) {
            prop_assume!((y - m).abs() > 1e-6);
            let k1 = kalman_gain_mode(p, r);
            let k2 = kalman_gain_mode(p, r * bump);
            prop_assert!(k2 < k1);
            let (m1, m2) = (m + k1 * (y - m), m + k2 * (y - m));
            prop_assert!((m2 - m).abs() < (m1 - m).abs());
        }
    }
}
