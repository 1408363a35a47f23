use echostate::capacity::{capacity_spectrum, CapacityOptions};
use echostate::certification::certify_contraction;
use echostate::fmp::{empirical_fmp_check, pullback_convergence, PullbackConfig};
use echostate::lyapunov::{lyapunov_spectrum_scalar, LyapunovConfig};
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn uniform(len: usize, seed: u64) -> Vec<f64> {
    generate(&SignalSpec::uniform(-1.0, 1.0, len, seed)).unwrap()
}

fn column(u: &[f64]) -> Vec<Vec<f64>> {
    u.iter().map(|v| vec![*v]).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn stronger_input_does_not_raise_linear_memory() {
    let u = uniform(8_000, 3);
    let mc = |scale: f64| {
        median(
            (0..5)
                .map(|seed| {
                    let spec = TopologySpec::new(
                        TopologyKind::RandomSparse { density: 0.2 },
                        50,
                        seed,
                        ScaleTarget::SpectralRadius(0.9),
                    );
                    let res = ReservoirDesign::new(spec, Activation::Tanh)
                        .input_scaling(scale)
                        .build()
                        .unwrap();
                    capacity_spectrum(&res, &u, None, &CapacityOptions::default())
                        .unwrap()
                        .total
                })
                .collect(),
        )
    };
    let (weak, strong) = (mc(0.1), mc(2.0));
    assert!(
        strong <= weak,
        "MC {weak} at scale 0.1, {strong} at scale 2.0"
    );
}

#[test]
fn pullback_stays_under_geometric_envelope() {
    for (i, act) in Activation::TABLE.into_iter().enumerate() {
        let sigma = 0.85 / act.lipschitz_constant();
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 0.3 },
            20,
            i as u64,
            ScaleTarget::SpectralNorm(sigma),
        );
        let res = ReservoirDesign::new(spec, act)
            .input_scaling(0.5)
            .bias_scaling(0.2)
            .build()
            .unwrap();
        let cert = certify_contraction(&res).unwrap();
        assert!(cert.passes);
        let rep = pullback_convergence(
            &res,
            &column(&uniform(300, i as u64)),
            &PullbackConfig {
                ensemble_size: 24,
                init_box_radius: 2.0,
                seed: 9,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!(rep.exact_pairs);
        let d0 = rep.diameters[0];
        for (t, d) in rep.diameters.iter().enumerate() {
            assert!(
                *d <= d0 * cert.contraction_factor.powi(t as i32) + 1e-9,
                "{act:?} t = {t}: {d}"
            );
        }
        assert!(rep.singleton);
    }
}

#[test]
fn fmp_check_holds_with_leak() {
    let spec = TopologySpec::new(
        TopologyKind::RandomSparse { density: 0.3 },
        20,
        4,
        ScaleTarget::SpectralNorm(0.9),
    );
    let res = ReservoirDesign::new(spec, Activation::Tanh)
        .leak_rate(0.2)
        .input_scaling(0.5)
        .build()
        .unwrap();
    assert!(certify_contraction(&res).unwrap().passes);
    for p in 0..50u64 {
        let r = empirical_fmp_check(
            &res,
            &column(&uniform(300, 2 * p)),
            &column(&uniform(300, 2 * p + 1)),
            0.99,
            300,
        )
        .unwrap();
        assert!(r.holds, "pair {p}: {} > {}", r.lhs, r.rhs);
    }
}

#[test]
fn exponents_do_not_depend_on_reorth_interval() {
    let u = uniform(8_000, 5);
    for (seed, rho) in [(1u64, 0.7), (2, 1.1), (3, 1.6)] {
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 1.0 },
            30,
            seed,
            ScaleTarget::SpectralRadius(rho),
        );
        let res = ReservoirDesign::new(spec, Activation::Tanh)
            .input_scaling(0.5)
            .build()
            .unwrap();
        let run = |interval: usize| {
            lyapunov_spectrum_scalar(
                &res,
                &u,
                &LyapunovConfig {
                    k: Some(4),
                    reorth_interval: interval,
                    washout: 1_000,
                    seed,
                },
            )
            .unwrap()
            .exponents
        };
        let base = run(1);
        for interval in [5, 10] {
            for (a, b) in base.iter().zip(run(interval)) {
                assert!(
                    (a - b).abs() <= 0.01,
                    "rho {rho}, interval {interval}: {a} vs {b}"
                );
            }
        }
    }
}
