//! Files, configuration, runs and benchmark harnesses around
//! [`crowdsim_core`].

pub mod bench;
pub mod config;
pub mod experiments;
pub mod netfile;
pub mod runner;
