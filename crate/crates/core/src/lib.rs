#![no_std]
extern crate alloc;

pub mod agents;
pub mod belief;
pub mod gamma;
pub mod geom;
pub mod math;
pub mod planner;
pub mod roadnet;
pub mod sim;
pub mod ttc;
