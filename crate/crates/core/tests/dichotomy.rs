use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spectral_da_core::*;

fn cfg() -> SeriesConfig {
    SeriesConfig::default()
}

fn random_data(rng: &mut StdRng) -> CoeffSeq {
    let mut support = Vec::new();
    let mut i = 0u64;
    for _ in 0..rng.random_range(0..8) {
        i += rng.random_range(1..30);
        support.push((i, rng.random_range(-3.0..3.0)));
    }
    let tail = rng.random_bool(0.3).then(|| {
        Tail::Power(PowerTail { scale: rng.random_range(0.1..2.0), exponent: rng.random_range(0.55..3.0), start: i + 1 })
    });
    CoeffSeq::new(support, tail).unwrap()
}

fn priors() -> Vec<SpectrumModel> {
    vec![
        SpectrumModel::power_law(1.0, 2.0).unwrap(),
        SpectrumModel::power_law(1.0, 4.0).unwrap(),
        SpectrumModel::exponential(1.0, 0.5).unwrap(),
    ]
}

#[test]
fn noise_bounded_below_never_loses_the_posterior() {
    let mut rng = StdRng::seed_from_u64(42);
    for trial in 0..300 {
        let prior = match trial % 3 {
            0 => SpectrumModel::power_law(rng.random_range(0.1..5.0), rng.random_range(1.1..5.0)).unwrap(),
            1 => SpectrumModel::exponential(rng.random_range(0.1..5.0), rng.random_range(0.05..0.95)).unwrap(),
            _ => SpectrumModel::power_law(1.0, 2.0).unwrap().with_prefix(vec![rng.random_range(0.1..10.0)]).unwrap(),
        };
        let noise = SpectrumModel::constant(rng.random_range(0.01..100.0)).unwrap();
        let prob = AssimilationProblem::new(random_data(&mut rng), prior, noise, random_data(&mut rng));
        match prob.innovation() {
            Ok(_) => assert!(posterior(&prob, &cfg()).unwrap().is_well_posed(), "{prob:?}"),
            Err(Error::TailMismatch(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn vanishing_noise_admits_bad_data() {
    let mut rng = StdRng::seed_from_u64(7);
    for prior in priors() {
        for noise in [SpectrumModel::power_law(1.0, 1.0).unwrap(), SpectrumModel::exponential(2.0, 0.7).unwrap()] {
            let z = CoeffSeq::sparse(vec![(1, rng.random_range(-1.0..1.0)), (4, 0.5)]).unwrap();
            let bad = construct_bad_data(&noise, &prior, &z, 0.3, &cfg()).unwrap();
            let prob = AssimilationProblem::centered(prior.clone(), noise.clone(), bad);
            let c = log_norm_constant(&prob, &cfg()).unwrap();
            assert_eq!(c.value, ExtReal::NegInfinity, "{prior:?} {noise:?}");
            match posterior(&prob, &cfg()).unwrap() {
                PosteriorResult::IllPosed { fallback, .. } => {
                    assert!(fallback.is_prior());
                    assert_eq!(fallback.variance(3), prior.eigenvalue(3));
                }
                other => panic!("{other:?}"),
            }
            for n in [1, 10, 1000] {
                assert!(truncated_log_constant(&prob, n).unwrap().is_finite());
            }
        }
    }
}

#[test]
fn report_flags_are_exclusive_and_exhaustive() {
    let noises = [
        SpectrumModel::constant(0.5).unwrap(),
        SpectrumModel::power_law(1.0, 0.0).unwrap(),
        SpectrumModel::power_law(1.0, 2.0).unwrap(),
        SpectrumModel::exponential(1.0, 0.3).unwrap(),
        SpectrumModel::constant(3.0).unwrap().with_prefix(vec![0.01]).unwrap(),
    ];
    for prior in priors() {
        for noise in &noises {
            let r = classify_problem(&prior, noise, &CoeffSeq::zero(), &cfg()).unwrap();
            assert_ne!(r.well_posed_all_y, r.bad_set_dense);
            assert_eq!(r.well_posed_all_y, r.noise_lower_bound > 0.0);
            assert_eq!(r.noise_lower_bound, lower_bound(noise));
        }
    }
}

#[test]
fn feasibility_is_implied_by_a_bounded_below_spectrum() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..200 {
        let b = SpectrumModel::power_law(1.0, rng.random_range(0.5..4.0)).unwrap();
        let r = SpectrumModel::constant(rng.random_range(0.1..10.0)).unwrap();
        let (x, y) = (random_data(&mut rng), random_data(&mut rng));
        for prob in [AssimilationProblem::new(x.clone(), b.clone(), r.clone(), y.clone()), AssimilationProblem::new(x, r.clone(), b.clone(), y)] {
            match three_dvar_feasible(&prob, &cfg()) {
                Ok(f) => assert!(f.is_feasible()),
                Err(Error::TailMismatch(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn posterior_and_minimizer_share_the_mean() {
    let mut rng = StdRng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 300 {
        let prior = priors()[rng.random_range(0..3)].clone();
        let noise = SpectrumModel::power_law(rng.random_range(0.1..3.0), rng.random_range(0.0..3.0)).unwrap();
        let m = CoeffSeq::sparse(vec![(rng.random_range(1..20), rng.random_range(-2.0..2.0))]).unwrap();
        let y = CoeffSeq::sparse(vec![(rng.random_range(1..20), rng.random_range(-2.0..2.0))]).unwrap();
        let prob = AssimilationProblem::new(m, prior, noise, y);
        let Ok(min) = three_dvar_minimize(&prob, &cfg()) else { continue };
        let spec = PosteriorSpec::updated(&prob);
        for (i, x) in min.argmin.materialized() {
            let scale = prob.prior_mean.value_at(i).abs().max(prob.data.value_at(i).abs());
            assert!((x - spec.mean(i)).abs() <= 1e-12 * scale);
        }
        checked += 1;
    }
}
