//! Fading memory: state distance against the weighted input distance, and
//! the diameter of a pulled-back ensemble.
//!
//!     cargo run --release --example fading_memory

use echostate::fmp::{empirical_fmp_check, pullback_convergence, PullbackConfig};
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn column(u: Vec<f64>) -> Vec<Vec<f64>> {
    u.into_iter().map(|v| vec![v]).collect()
}

fn main() -> echostate::Result<()> {
    let spec = TopologySpec::new(
        TopologyKind::RandomSparse { density: 0.3 },
        30,
        5,
        ScaleTarget::SpectralNorm(0.8),
    );
    let res = ReservoirDesign::new(spec, Activation::Tanh)
        .input_scaling(0.5)
        .build()?;

    let u = column(generate(&SignalSpec::uniform(-1.0, 1.0, 200, 1))?);
    // v flips the sign of u over steps 150..170; the difference fades.
    let mut v = u.clone();
    for x in &mut v[150..170] {
        x[0] = -x[0];
    }
    for lambda in [0.85, 0.9, 0.95] {
        let r = empirical_fmp_check(&res, &u, &v, lambda, 200)?;
        println!(
            "lambda {lambda}: |x_T - y_T| = {:.3e}  bound {:.3e}  anchored bound {:.3e}  holds {}",
            r.lhs, r.rhs, r.anchored_rhs, r.holds
        );
    }

    let pull = pullback_convergence(
        &res,
        &u,
        &PullbackConfig {
            ensemble_size: 16,
            init_box_radius: 1.0,
            seed: 2,
            tol: 1e-9,
        },
    )?;
    for t in [0, 10, 50, 100, 200] {
        println!("pullback diameter at t = {t:3}: {:.3e}", pull.diameters[t]);
    }
    Ok(())
}
