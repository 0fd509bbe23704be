use mdf_erlang::sim::{estimate_blocking, simulate_delay, simulate_tolerance, Policy, SimConfig};
use mdf_erlang::{
    compound_poisson_pmf, default_j_max, delay_stationary, delay_transition, emlm_blocking,
    stationary_pmf, DelayChainParams, MdfParams, RateMode, RequirementDistribution, DEFAULT_TOL,
};

fn unit_arrivals(stay_prob: f64) -> MdfParams {
    MdfParams {
        lambda_per_user: 0.01,
        population: 100,
        slot: 1.0,
        stay_prob,
        requirement: RequirementDistribution::point(1).unwrap(),
    }
}

#[test]
fn delay_simulation_matches_chain() {
    // Near-zero stays: the per-slot demand is Poisson(1) in unit packets.
    let params = unit_arrivals(1e-9);
    let increment = compound_poisson_pmf(1.0, &params.requirement, DEFAULT_TOL).unwrap();
    let chain = DelayChainParams {
        increment,
        capacity: 3,
        alpha: 1.0,
    };
    let tol = 1e-12;
    let pi = delay_stationary(&chain, tol, 100_000).unwrap();
    assert!(delay_transition(&pi, &chain).total_variation(&pi) < 2.0 * tol + 1e-10);

    let config = SimConfig::new(params, Policy::Delay { alpha: 1.0 }, 3, 250_000, 3, 4);
    let result = simulate_delay(&config).unwrap();
    assert!(!result.unstable);
    let tv = result.empirical_pmf.total_variation(&pi);
    assert!(tv <= 0.02, "total variation {tv}");
}

#[test]
fn overloaded_delay_simulation_is_flagged() {
    let config = SimConfig::new(
        unit_arrivals(1e-9),
        Policy::Delay { alpha: 1.0 },
        1,
        50_000,
        3,
        2,
    );
    assert!(simulate_delay(&config).unwrap().unstable);
}

#[test]
fn tolerance_simulation_agrees_with_both_analytic_laws() {
    let req = RequirementDistribution::new(vec![1, 2, 4], vec![0.5, 0.3, 0.2]).unwrap();
    let params = MdfParams::from_service_rate(0.05, 40, 1.0, 0.05, req).unwrap();
    let capacity = 7;
    let config = SimConfig::new(
        params.clone(),
        Policy::Tolerance { alpha: 1.0 },
        capacity,
        400_000,
        9,
        8,
    );
    let runs: Vec<_> = (0..2)
        .map(|i| {
            simulate_tolerance(&SimConfig {
                seed: 9 + i,
                ..config.clone()
            })
            .unwrap()
        })
        .collect();
    let pooled = estimate_blocking(&runs);

    let emlm = params.to_emlm(capacity, 1.0).unwrap();
    let b_emlm = emlm_blocking(&emlm, default_j_max(&emlm).unwrap()).unwrap();
    let s = stationary_pmf(&params, RateMode::Consistent, DEFAULT_TOL).unwrap();
    let b_mdf = mdf_erlang::tail_prob(&s, capacity as f64);
    for r in &runs {
        let band = 4.0 * r.std_error + 1e-3;
        assert!(
            (r.blocking_estimate - b_mdf).abs() <= band,
            "{} vs {b_mdf}",
            r.blocking_estimate
        );
    }
    // The two analytic laws differ by the slot discretization only.
    assert!((b_emlm - b_mdf).abs() < 0.02);
    assert!(pooled.mean > 0.0 && pooled.mean < 1.0);
}
