//! Command-line front end and the Neumann diffusion scenario.

pub mod acceptance;
pub mod cli;
pub mod scenario;
