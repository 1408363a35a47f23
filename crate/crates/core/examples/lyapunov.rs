//! Conditional Lyapunov spectra: a linear reservoir against log|eig(W)|,
//! then tanh reservoirs on both sides of the edge of chaos.
//!
//!     cargo run --release --example lyapunov

use echostate::lyapunov::{kaplan_yorke, ks_entropy, lyapunov_spectrum_scalar, LyapunovConfig};
use echostate::numerics::spectral_radius;
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let u = generate(&SignalSpec::uniform(-1.0, 1.0, 6_000, 4))?;
    let dense = TopologyKind::RandomSparse { density: 1.0 };
    let cfg = LyapunovConfig {
        k: Some(5),
        reorth_interval: 1,
        washout: 1000,
        seed: 1,
    };

    let spec = TopologySpec::new(dense, 20, 3, ScaleTarget::SpectralRadius(0.8));
    let linear = ReservoirDesign::new(spec, Activation::Identity).build()?;
    let ly = lyapunov_spectrum_scalar(&linear, &u, &cfg)?;
    println!(
        "identity: lambda_max {:.5}, log rho(W) {:.5}",
        ly.max_exponent(),
        spectral_radius(linear.w())?.ln()
    );

    for rho in [0.8, 1.2, 1.6, 2.0] {
        let spec = TopologySpec::new(dense, 100, 3, ScaleTarget::SpectralRadius(rho));
        let res = ReservoirDesign::new(spec, Activation::Tanh)
            .input_scaling(0.5)
            .build()?;
        let ly = lyapunov_spectrum_scalar(&res, &u, &cfg)?;
        println!(
            "tanh rho {rho}: lambda_max {:+.4}  d_KY {}  h_KS {:.4}",
            ly.max_exponent(),
            kaplan_yorke(&ly).map_or("-".into(), |d| format!("{d:.2}")),
            ks_entropy(&ly)
        );
    }
    Ok(())
}
