//! Configuration, file formats, sweeps and verification suites for the
//! chemotaxis-haptotaxis simulator in `chemohapto-core`.

pub mod config;
pub mod initial;
pub mod io;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::RunConfig;
pub use run::{Prepared, Report};
