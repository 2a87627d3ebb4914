//! Lindblad dynamics of clusters of hydrogen-bonded water dimers, each
//! modelled as a λ-type three-level unit coupled to a hydrogen-bond
//! phonon mode and a proton-displacement phonon mode.
//!
//! The pipeline: [`model::Config`] → [`system::OpenSystem`] (basis,
//! block partition, Hamiltonian blocks, jump tables) → [`dynamics`]
//! (time series, steady states) → [`analysis`] and [`report`].
//! [`darkstates`] computes exact integer dark-state bases.
//!
//! ```
//! use hbqed::{steady_state, Config, Coupling, OpenSystem};
//!
//! let mut config = Config::new(1, Coupling::Incoherent);
//! config.evolve.t_max = 10_000.0;
//! let system = OpenSystem::build(&config).unwrap();
//! let p = steady_state(&system, &config.rates, &config.evolve).unwrap().distribution;
//! assert!((p[1] - 0.5).abs() < 1e-4);
//! ```

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod darkstates;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod operators;
pub mod report;
pub mod system;

pub use dynamics::{evolve, steady_state, BlockDensityMatrix, Stepper, TimeSeries};
pub use error::{Error, Result};
pub use model::{Config, Coupling, Mode, RateConfig};
pub use system::OpenSystem;
