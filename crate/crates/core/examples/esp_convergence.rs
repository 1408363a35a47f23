//! Two trajectories from different initial states under one input merge
//! when the reservoir contracts, and may not when it does not.
//!
//!     cargo run --release --example esp_convergence

use echostate::certification::{certify_contraction, empirical_esp_test, EspTestConfig};
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let u: Vec<Vec<f64>> = generate(&SignalSpec::uniform(-1.0, 1.0, 2000, 7))?
        .into_iter()
        .map(|v| vec![v])
        .collect();
    let cfg = EspTestConfig {
        pairs: 10,
        seed: 11,
        horizon: 2000,
        tol: 1e-6,
    };
    for sigma in [0.5, 0.9, 1.2, 2.0] {
        let spec = TopologySpec::new(
            TopologyKind::Orthogonal,
            50,
            3,
            ScaleTarget::SpectralNorm(sigma),
        );
        let res = ReservoirDesign::new(spec, Activation::Tanh)
            .input_scaling(0.1)
            .build()?;
        let cert = certify_contraction(&res)?;
        let rep = empirical_esp_test(&res, &u, &cfg)?;
        println!(
            "sigma_max {sigma:.1}: certified {:5}  converged {:5}  final distance {:.3e}  rate {}",
            cert.passes,
            rep.converged,
            rep.final_distance,
            rep.fitted_rate.map_or("-".into(), |r| format!(
                "{r:.4} (log factor {:.4})",
                cert.contraction_factor.ln()
            ))
        );
    }
    Ok(())
}
