//! Recurrent matrices from each topology, rescaled to a target radius.
//!
//!     cargo run --example topologies

use echostate::numerics::{spectral_norm, spectral_radius};
use echostate::topology::{build, ScaleTarget, TopologyKind, TopologySpec};

fn main() -> echostate::Result<()> {
    let kinds = [
        TopologyKind::RandomSparse { density: 0.1 },
        TopologyKind::Cycle { ring_weight: 1.0 },
        TopologyKind::SmallWorld {
            neighbors: 4,
            rewire_prob: 0.1,
        },
        TopologyKind::Orthogonal,
    ];
    for kind in kinds {
        let built = build(&TopologySpec::new(
            kind,
            100,
            8,
            ScaleTarget::SpectralRadius(0.9),
        ))?;
        let w = &built.matrix;
        println!(
            "{kind:?}: nonzeros {}, rho {:.4}, sigma_max {:.4}",
            w.count_nonzero(),
            spectral_radius(w)?,
            spectral_norm(w)?
        );
        for warning in &built.warnings {
            println!("  warning: {warning}");
        }
    }
    Ok(())
}
