//! Cardinality-constrained portfolio selection as a QUBO, solved by a
//! warm-started XY-mixer QAOA simulator with zero-noise extrapolation and
//! compared against classical baselines.

pub mod classical;
pub mod data;
pub mod error;
pub mod ising;
pub mod matrix;
pub mod qaoa;
pub mod qubo;
pub mod shots;
pub mod stats;
pub mod zne;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `(0..len).map(f)`, run across threads when the `parallel` feature is on.
/// Output order always follows the index.
pub(crate) fn par_map<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}
