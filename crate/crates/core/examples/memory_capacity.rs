//! Linear memory capacity spectra: a linear cycle, which reaches the bound,
//! and a sparse tanh reservoir.
//!
//!     cargo run --release --example memory_capacity

use echostate::capacity::{capacity_spectrum, CapacityOptions};
use echostate::reservoir::Activation;
use echostate::signals::{generate, SignalSpec};
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let u = generate(&SignalSpec::uniform(-1.0, 1.0, 10_000, 42))?;
    let opts = CapacityOptions::default();

    let cycle = TopologySpec::new(
        TopologyKind::Cycle { ring_weight: 0.9 },
        30,
        1,
        ScaleTarget::None,
    );
    let linear = ReservoirDesign::new(cycle, Activation::Identity).build()?;
    let s = capacity_spectrum(&linear, &u, Some(60), &opts)?;
    println!("linear cycle, n = 30: MC = {:.3}", s.total);

    let sparse = TopologySpec::new(
        TopologyKind::RandomSparse { density: 0.1 },
        100,
        1,
        ScaleTarget::SpectralRadius(0.9),
    );
    let tanh = ReservoirDesign::new(sparse, Activation::Tanh)
        .input_scaling(0.1)
        .build()?;
    let s = capacity_spectrum(&tanh, &u, None, &opts)?;
    println!(
        "tanh sparse, n = 100: MC = {:.3} (threshold {:.4})",
        s.total, s.threshold
    );
    for tau in [1, 2, 5, 10, 20, 40, 80] {
        println!("  C({tau:2}) = {:.4}", s.get(tau).unwrap());
    }
    Ok(())
}
