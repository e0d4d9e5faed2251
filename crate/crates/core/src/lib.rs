//! Distributional statistics of integers without small and large prime
//! factors.
//!
//! The crate pairs exact, sieve-based counting of `[y', y]`-smooth numbers
//! with the saddle-point estimates that predict those counts, and layers the
//! standard diagnostic experiments on top: weighted indicators and their
//! W-tricked versions, equidistribution in short intervals and arithmetic
//! progressions, smooth Weyl sums with major-arc detection, strong-recurrence
//! censuses, polynomial phase correlations on the torus, and counts of smooth
//! solutions to linear systems against the predicted product of local
//! densities.
//!
//! Heavy loops are data-parallel over sieve segments; disable the default
//! `parallel` feature for a single-threaded build. Results are identical
//! either way because partial results merge in a fixed order.

pub mod chars;
pub mod equid;
pub mod error;
pub mod linsys;
pub mod phase;
pub mod weights;
pub mod weyl;
pub mod exec;
mod kahan;
pub mod polyphase;
pub mod rat;
pub mod recurrence;
pub mod saddle;
pub mod sieve;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use sieve::SmoothWindow;
