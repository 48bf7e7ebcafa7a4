//! Lossless causal compression of periodic vector-valued signals.
//!
//! A signal `x` in `R^n` is mixed with a periodic signal `c` into the scalar
//! stream `y(t) = <c(t), x(t)>`. Whether `x` can be recovered from `y` comes
//! down to non-resonance between the periods (or frequencies, or cycle
//! lengths) involved; this crate decides it and performs the recovery.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod formats;
pub mod linalg;
pub mod number_theory;
pub mod reconstruction;
pub mod scalar;
pub mod shutter;
pub mod signal;

pub use error::{Error, Result};
pub use scalar::{Scalar, ValueKind};
pub use signal::{
    compress, odd_index_mixer, switch_mixer, CompressedStream, MixingSignal, PeriodicVectorSignal,
};
