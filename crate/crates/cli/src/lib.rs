//! Command-line front end for the steering and joint-measurability engine.

pub mod commands;
pub mod demo;
pub mod error;
pub mod fixtures;
pub mod json;
pub mod report;
pub mod scenario;
