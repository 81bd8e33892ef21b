use ise_core::analysis::{decrease_in_performance, rm_anova};
use ise_core::model::{
    fit_grid, fit_sigmoid, predict_dp, simulate_cohort, CohortSpec, DpObservation, ModelError,
    SigmoidParams,
};
use proptest::prelude::*;

fn samples(params: &SigmoidParams, stis: &[f64]) -> Vec<DpObservation> {
    stis.iter()
        .map(|&s| DpObservation::new(s, predict_dp(s, params)).unwrap())
        .collect()
}

const STIS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[test]
fn prediction_examples() {
    let p = SigmoidParams::default();
    assert_eq!(predict_dp(p.midpoint, &p), p.dp_max / 2.0);
    assert!((predict_dp(1.0, &p) - 7.0).abs() <= 0.5);
    let steep = SigmoidParams::new(5.0, 0.5, 12.0).unwrap();
    assert!(predict_dp(0.0, &steep) <= steep.dp_max / 100.0);
    assert!(predict_dp(0.7, &p) >= 0.95 * p.dp_max);
}

#[test]
fn invalid_params_rejected() {
    assert!(SigmoidParams::new(-1.0, 0.5, 3.0).is_err());
    assert!(SigmoidParams::new(1.0, 0.0, 3.0).is_err());
    assert!(SigmoidParams::new(1.0, 1.0, 3.0).is_err());
    assert!(SigmoidParams::new(1.0, 0.5, 0.0).is_err());
    assert!(DpObservation::new(1.1, 0.0).is_err());
    assert!(DpObservation::new(0.5, f64::NAN).is_err());
}

#[test]
fn fit_recovers_generating_params() {
    let truth = SigmoidParams::default();
    let fit = fit_sigmoid(&samples(&truth, &STIS)).unwrap();
    let p = fit.params;
    for (got, want) in [
        (p.dp_max, truth.dp_max),
        (p.midpoint, truth.midpoint),
        (p.slope, truth.slope),
    ] {
        assert!((got - want).abs() <= 0.05 * want, "{got} vs {want}");
    }
    assert!(!fit.degenerate);
}

fn residual_oracle(obs: &[DpObservation], p: &SigmoidParams) -> f64 {
    obs.iter()
        .map(|o| {
            let pred = p.dp_max / (1.0 + (-p.slope * (o.sti - p.midpoint)).exp());
            (o.dp - pred).powi(2)
        })
        .sum()
}

#[test]
fn fit_beats_every_grid_point() {
    let obs: Vec<DpObservation> = [
        (0.1, 0.4),
        (0.25, 1.9),
        (0.45, 2.8),
        (0.6, 6.6),
        (0.75, 6.1),
        (0.9, 7.9),
    ]
    .iter()
    .map(|&(s, d)| DpObservation::new(s, d).unwrap())
    .collect();
    let fit = fit_sigmoid(&obs).unwrap();
    assert!((residual_oracle(&obs, &fit.params) - fit.residual).abs() < 1e-9);
    for (m, s) in fit_grid() {
        // least-squares dp_max for this shape, clamped at zero
        let shape: Vec<f64> = obs
            .iter()
            .map(|o| 1.0 / (1.0 + (-s * (o.sti - m)).exp()))
            .collect();
        let num: f64 = obs.iter().zip(&shape).map(|(o, x)| o.dp * x).sum();
        let den: f64 = shape.iter().map(|x| x * x).sum();
        let dp_max = (num / den).max(0.0);
        let r = residual_oracle(
            &obs,
            &SigmoidParams {
                dp_max,
                midpoint: m,
                slope: s,
            },
        );
        assert!(fit.residual <= r + 1e-12);
    }
    let again = fit_sigmoid(&obs).unwrap();
    assert_eq!(again, fit);
}

#[test]
fn refit_is_idempotent() {
    let obs: Vec<DpObservation> = [
        (0.2, 1.0),
        (0.35, 1.5),
        (0.5, 4.4),
        (0.65, 5.0),
        (0.8, 7.5),
        (0.95, 6.8),
    ]
    .iter()
    .map(|&(s, d)| DpObservation::new(s, d).unwrap())
    .collect();
    let first = fit_sigmoid(&obs).unwrap().params;
    let second = fit_sigmoid(&samples(&first, &[0.2, 0.35, 0.5, 0.65, 0.8, 0.95]))
        .unwrap()
        .params;
    assert!((first.dp_max - second.dp_max).abs() <= 1e-6 * first.dp_max);
    assert!((first.midpoint - second.midpoint).abs() <= 1e-6);
    assert!((first.slope - second.slope).abs() <= 1e-6 * first.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn fit_scale_equivariance(
        noise in prop::collection::vec(-1.0f64..1.0, 5),
        c in 0.1f64..20.0,
    ) {
        let base = samples(&SigmoidParams::default(), &STIS);
        let obs: Vec<DpObservation> = base.iter().zip(&noise)
            .map(|(o, n)| DpObservation::new(o.sti, o.dp + n).unwrap()).collect();
        let scaled: Vec<DpObservation> = obs.iter()
            .map(|o| DpObservation::new(o.sti, o.dp * c).unwrap()).collect();
        let a = fit_sigmoid(&obs).unwrap().params;
        let b = fit_sigmoid(&scaled).unwrap().params;
        prop_assert!((b.dp_max - c * a.dp_max).abs() <= 1e-6 * c * a.dp_max);
        prop_assert!((b.midpoint - a.midpoint).abs() <= 1e-6);
        prop_assert!((b.slope - a.slope).abs() <= 1e-6 * a.slope);
    }

    #[test]
    fn prediction_monotone(
        dp_max in 0.0f64..50.0, midpoint in 0.01f64..0.99, slope in 0.1f64..80.0,
    ) {
        let p = SigmoidParams::new(dp_max, midpoint, slope).unwrap();
        let mut prev = predict_dp(0.0, &p);
        for i in 1..=1000 {
            let v = predict_dp(i as f64 / 1000.0, &p);
            prop_assert!(v >= prev);
            prev = v;
        }
        if slope * (0.7 - midpoint) >= 3.0 {
            prop_assert!(predict_dp(0.7, &p) >= 0.95 * dp_max);
        }
    }
}

#[test]
fn degenerate_and_insufficient_data() {
    let zeros: Vec<DpObservation> = STIS
        .iter()
        .map(|&s| DpObservation::new(s, 0.0).unwrap())
        .collect();
    let fit = fit_sigmoid(&zeros).unwrap();
    assert!(fit.degenerate);
    assert!(fit.params.dp_max.abs() < 1e-12);

    let two = &zeros[..2];
    let err = fit_sigmoid(two).unwrap_err();
    assert!(matches!(err, ModelError::InsufficientData(_)));
    assert!(err.to_string().contains("insufficient data"));
    let same_sti = vec![DpObservation::new(0.5, 1.0).unwrap(); 4];
    assert!(matches!(
        fit_sigmoid(&same_sti),
        Err(ModelError::InsufficientData(_))
    ));
}

#[test]
fn noiseless_cohort_reproduces_curve() {
    let params = SigmoidParams::default();
    let spec = CohortSpec {
        subject_sd: 0.0,
        trial_sd: 0.0,
        ..CohortSpec::moderate_noise(3)
    };
    let m = simulate_cohort(&spec, &params).unwrap();
    let dp = decrease_in_performance(&m, "silence").unwrap().to_percent();
    for row in &dp.values {
        for (v, &s) in row.iter().zip(&spec.condition_stis) {
            assert!((v.unwrap() - predict_dp(s, &params)).abs() < 1e-9);
        }
    }
}

#[test]
fn cohort_is_deterministic() {
    let spec = CohortSpec::moderate_noise(17);
    let a = simulate_cohort(&spec, &SigmoidParams::default()).unwrap();
    let b = simulate_cohort(&spec, &SigmoidParams::default()).unwrap();
    assert_eq!(a, b);
    let c = simulate_cohort(&CohortSpec::moderate_noise(18), &SigmoidParams::default()).unwrap();
    assert_ne!(a, c);
    assert_eq!(a.subjects().len(), 55);
    assert_eq!(a.conditions().len(), 5);
}

#[test]
fn cohort_spec_validation() {
    let mut s = CohortSpec::moderate_noise(1);
    s.n_subjects = 1;
    assert!(s.validate().is_err());
    let mut s = CohortSpec::moderate_noise(1);
    s.condition_stis.push(1.5);
    assert!(s.validate().is_err());
    let mut s = CohortSpec::moderate_noise(1);
    s.trial_sd = -1.0;
    assert!(s.validate().is_err());
}

#[test]
fn plateau_mean_difference_monte_carlo() {
    // Expected difference of means is predict(0.9) - predict(0.75); simulated
    // cohorts should scatter around it with sd trial_sd * sqrt(2 / n).
    let params = SigmoidParams::default();
    let expected = predict_dp(0.9, &params) - predict_dp(0.75, &params);
    let mut diffs = Vec::new();
    for seed in 0..200 {
        let m = simulate_cohort(&CohortSpec::moderate_noise(seed), &params).unwrap();
        let dp = decrease_in_performance(&m, "silence").unwrap().to_percent();
        let means = dp.condition_means();
        diffs.push(means[3].unwrap() - means[2].unwrap());
        if seed < 20 {
            assert!(rm_anova(&dp).unwrap().p < 0.05);
        }
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let se = 3.0 * (2.0f64 / 55.0).sqrt() / (diffs.len() as f64).sqrt();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
    assert!(mean.abs() <= 1.5);
}

#[test]
fn observations_csv() {
    let obs = DpObservation::read_csv("sti,dp\n0.25,1.5\n0.9, 7\n".as_bytes()).unwrap();
    assert_eq!(obs.len(), 2);
    assert!(DpObservation::read_csv("x,y\n1,2\n".as_bytes()).is_err());
    assert!(DpObservation::read_csv("sti,dp\n2,1\n".as_bytes()).is_err());
}
