//! Runs the batch commands from an in-memory config and prints what they
//! wrote. Same as `echostate <command> <file>` on the command line.
//!
//!     cargo run --release --example run_config

use echostate::cli::{run, Command, ExperimentConfig};

const CONFIG: &str = r#"
seed = 3

[reservoir]
n = 40
activation = { kind = "tanh" }
topology = { kind = "random_sparse", density = 0.25 }
scale = { kind = "spectral_norm", value = 0.9 }
input_scaling = 0.5

[signal]
kind = "uniform_iid"
length = 3000

[capacity]
washout = 200
"#;

fn main() -> echostate::Result<()> {
    let mut cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    let dir = std::env::temp_dir().join("echostate-run-config");
    cfg.out_dir = Some(dir.clone());
    for cmd in [
        Command::Certify,
        Command::EspTest,
        Command::Capacity,
        Command::Lyapunov,
    ] {
        let out = run(cmd, &cfg)?;
        println!("{} (exit {}): {}", cmd.name(), out.exit_code, out.summary);
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
