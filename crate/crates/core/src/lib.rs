//! Time-constrained erasure correction for UAV data collection over LoRa.
//!
//! EDs woken by a UAV's wake-up calls push `beta` source messages to it
//! within a hovering window of `N_s` slots, adding random linear fountain
//! coding or message replication on top of random access. The crate holds
//! the GF(256) codec, the channel and capture model, a Monte Carlo session
//! simulator, the closed-form delivery model, the energy budget, and the
//! command-line experiment runner.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod fountain;
pub mod gf256;
pub mod protocol;
pub mod simulator;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use protocol::SchemeKind;
