//! Information processing capacity split by polynomial degree. An odd
//! activation with no bias has nothing at even degrees.
//!
//!     cargo run --release --example ipc

use echostate::capacity::{ipc, CapacityOptions};
use echostate::reservoir::Activation;
use echostate::signals::SignalSpec;
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let signal = SignalSpec::uniform(-1.0, 1.0, 10_000, 9);
    let spec = TopologySpec::new(
        TopologyKind::RandomSparse { density: 0.2 },
        40,
        2,
        ScaleTarget::SpectralRadius(0.9),
    );
    for bias in [0.0, 0.3] {
        let res = ReservoirDesign::new(spec, Activation::Tanh)
            .input_scaling(0.5)
            .bias_scaling(bias)
            .build()?;
        let rep = ipc(&res, &signal, 3, 8, &CapacityOptions::default())?;
        println!(
            "bias scale {bias}: total {:.3} of n = 40, by degree {:?}",
            rep.total_ipc,
            rep.total_by_degree
                .iter()
                .map(|v| format!("{v:.3}"))
                .collect::<Vec<_>>()
        );
        if let Some(c) = rep.get(&[1, 2], &[1, 1]) {
            println!("  u(t-1) u(t-2): {c:.4}");
        }
    }
    Ok(())
}
