//! Echo state networks with contraction certificates, fading-memory checks,
//! memory and information-processing capacity, and Lyapunov spectra.
//!
//! The typical flow is: describe a reservoir with [`topology::ReservoirDesign`],
//! certify it with [`certification::certify_contraction`], drive it with a
//! signal from [`signals`], then measure it with [`capacity`] or
//! [`lyapunov`].

pub mod capacity;
pub mod certification;
pub mod cli;
pub mod error;
pub mod fmp;
pub mod lyapunov;
pub mod numerics;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod signals;
pub mod topology;

pub use error::{Error, Result};
pub use numerics::Matrix;
pub use reservoir::{Activation, Reservoir};
