use condks::{
    exact_cdf, power_estimate, run_replicates, Family, MixtureComponent, NormalLocation, Scenario,
    ZetaSampler,
};

fn mixture() -> ZetaSampler {
    ZetaSampler::GaussianMixture(vec![
        MixtureComponent {
            weight: 0.3,
            mean: 1.0,
            sd: 0.2,
        },
        MixtureComponent {
            weight: 0.7,
            mean: 5.0,
            sd: 0.5,
        },
    ])
}

#[test]
fn null_statistics_follow_the_exact_law() {
    let scenario = Scenario {
        zeta_sampler: mixture(),
        null_family: Family::ExponentialRate,
        data_family: Family::ExponentialRate,
        n: 20,
        replicates: 10_000,
        seed: 11,
    };
    let mut stats = run_replicates(&scenario).unwrap();
    stats.sort_by(f64::total_cmp);
    let m = stats.len() as f64;
    let sup = stats
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = exact_cdf(20, s).unwrap();
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(sup < 0.02, "sup = {sup}");
}

#[test]
fn calibrated_rejection_rate_is_near_alpha() {
    let family = Family::NormalLocation(NormalLocation::new(2.0).unwrap());
    let scenario = Scenario {
        zeta_sampler: ZetaSampler::Uniform {
            low: -10.0,
            high: 10.0,
        },
        null_family: family.clone(),
        data_family: family,
        n: 60,
        replicates: 10_000,
        seed: 12,
    };
    let est = power_estimate(&scenario, 0.05).unwrap();
    // the exact test is conservative only through the discreteness of D_n
    let se = (0.05f64 * 0.95 / 10_000.0).sqrt();
    assert!((est.rate - 0.05).abs() < 3.0 * se, "rate = {}", est.rate);
}

#[test]
fn power_grows_with_the_misspecification() {
    let null = Family::NormalLocation(NormalLocation::new(1.0).unwrap());
    let rates: Vec<f64> = [1.2, 1.5, 2.0]
        .iter()
        .map(|&sigma| {
            let scenario = Scenario {
                zeta_sampler: ZetaSampler::PointMass(0.0),
                null_family: null.clone(),
                data_family: Family::NormalLocation(NormalLocation::new(sigma).unwrap()),
                n: 80,
                replicates: 2_000,
                seed: 13,
            };
            power_estimate(&scenario, 0.05).unwrap().rate
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[0] < w[1]), "{rates:?}");
}
