//! Contraction certificates for a few standard configurations, and the
//! state bound for a ReLU reservoir.
//!
//!     cargo run --example certify

use echostate::certification::{certify_contraction, relu_state_bound};
use echostate::numerics::spectral_norm;
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn design(kind: TopologyKind, act: Activation, sigma: f64) -> ReservoirDesign {
    let spec = TopologySpec::new(kind, 50, 1, ScaleTarget::SpectralNorm(sigma));
    ReservoirDesign::new(spec, act)
}

fn main() -> echostate::Result<()> {
    let sparse = TopologyKind::RandomSparse { density: 0.2 };
    let cases = [
        (
            "sigmoid, sigma_max 3.5",
            design(sparse, Activation::LogisticSigmoid, 3.5),
        ),
        (
            "tanh, sigma_max 1.2",
            design(TopologyKind::Orthogonal, Activation::Tanh, 1.2),
        ),
        (
            "tanh, sigma_max 1.5, leak 0.5",
            design(sparse, Activation::Tanh, 1.5).leak_rate(0.5),
        ),
        (
            "softsign, sigma_max 0.9",
            design(sparse, Activation::Softsign, 0.9),
        ),
    ];
    for (label, d) in cases {
        let cert = certify_contraction(&d.build()?)?;
        println!(
            "{label:32} factor {:.4}  rho {:.4}  {}",
            cert.contraction_factor,
            cert.spectral_radius,
            if cert.passes {
                "certified"
            } else {
                "not certified"
            }
        );
        if cert.radius_rule_only() {
            println!("{:32} (spectral radius rule holds, norm test does not)", "");
        }
    }

    // ReLU: the state norm stays under (|x0| - m/(1-g)) g^t + m/(1-g).
    let res = design(sparse, Activation::Relu, 0.8)
        .bias_scaling(0.1)
        .build()?;
    let gamma = spectral_norm(res.w())?;
    let b_norm = res.bias().iter().map(|b| b * b).sum::<f64>().sqrt();
    let m_b = spectral_norm(res.w_in())? * 1.0 + b_norm;
    let u = generate(&SignalSpec::uniform(-1.0, 1.0, 200, 3))?;
    let x0 = vec![2.0; res.n()];
    let x0_norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let traj = res.drive_scalar(&x0, &u, 0)?;
    let mut slack = f64::INFINITY;
    for (t, x) in traj.states.iter().enumerate() {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        slack = slack.min(relu_state_bound(gamma, m_b, x0_norm, t as u64)? - norm);
    }
    println!("relu bound minus state norm, smallest over 200 steps: {slack:.3e}");
    Ok(())
}
