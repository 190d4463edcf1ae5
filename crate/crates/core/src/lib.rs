pub mod error;
pub mod exact;
pub mod hamiltonians;
pub mod matrix;
pub mod metric;
pub mod spectral;
mod sturm;
pub mod symbols;

pub use error::{EpnError, Result};
