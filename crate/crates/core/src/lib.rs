//! Simulation of the NEMO model of brain computation (areas of excitatory
//! neurons, random connectomes, k-cap selection and multiplicative Hebbian
//! plasticity) and of a language organ that learns nouns, verbs and their
//! grounded meanings from two-word sentences.
//!
//! Layout:
//! * [`network`], [`connectome`], [`cap`], [`lazy`]: the dynamical system.
//! * [`assembly`]: projection, overlap and frozen readouts.
//! * [`language`]: toy lexicon, organ construction, acquisition criteria.
//! * [`experiment`]: training trials, sweeps and summary statistics.

pub mod assembly;
pub mod cap;
pub mod connectome;
pub mod error;
pub mod experiment;
pub mod language;
pub mod lazy;
pub mod network;
pub mod params;
pub mod rng;
pub mod snapshot;

pub use assembly::{overlap, project, projection_setup, readout, ConvergenceTrace};
pub use cap::k_cap;
pub use connectome::Connectome;
pub use error::{NemoError, Result};
pub use network::{
    synaptic_inputs, Activity, AreaId, Assembly, ClampMap, FiringState, Network, NetworkBuilder,
    StepPlan,
};
pub use params::{AreaParams, Backend};
