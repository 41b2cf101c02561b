pub mod analysis;
pub mod angular;
pub mod beam;
pub mod cis;
pub mod error;
pub mod grid;
pub mod interp;
pub mod pes;
pub mod potential;
pub mod propagator;
pub mod pulse;
pub mod quad;
pub mod siegert;
pub mod special;
pub mod system;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
