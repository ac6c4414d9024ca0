pub mod analysis;
pub mod cli;
pub mod config;
pub mod energies;
pub mod error;
pub mod grid_oracle;
pub mod optimize;
pub mod propagator;
pub mod real;
pub mod reports;
pub mod series;
