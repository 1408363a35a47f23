//! Ridge readout on NARMA-10, with held-out error per reservoir size.
//!
//!     cargo run --release --example narma_readout

use echostate::numerics::Matrix;
use echostate::readout::{evaluate, train_readout};
use echostate::reservoir::Activation;
use echostate::signals::narma_series;
use echostate::topology::{ReservoirDesign, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let s = narma_series(6_000, 10, 21, 20)?;
    let washout = 200;
    let split = 4_000;
    for n in [25, 50, 100, 200] {
        let spec = TopologySpec::new(
            TopologyKind::RandomSparse { density: 1.0 },
            n,
            5,
            ScaleTarget::SpectralRadius(0.9),
        );
        let res = ReservoirDesign::new(spec, Activation::Tanh)
            .input_scaling(0.5)
            .bias_scaling(0.2)
            .build()?;
        let states = res.harvest_scalar(&s.input, washout)?;
        let y = &s.target[washout..];
        let rows = |a: usize, b: usize| {
            Matrix::from_row_major(b - a, n, states.as_slice()[a * n..b * n].to_vec())
        };
        let train = train_readout(&rows(0, split)?, &Matrix::column(&y[..split]), None)?;
        let test = evaluate(
            &train.readout,
            &rows(split, y.len())?,
            &Matrix::column(&y[split..]),
        )?;
        println!(
            "n = {n:3}: held-out nmse {:.4}  (ridge mu {:.2e})",
            test.nmse[0].unwrap_or(f64::NAN),
            train.mu
        );
    }
    Ok(())
}
