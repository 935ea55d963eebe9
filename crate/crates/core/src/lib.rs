//! Strain engineering of silicon-vacancy (SiV) centers in diamond nanobeams
//! coated with a stressed thin film.
//!
//! The crate covers the chain from film stress to beam strain, from strain to
//! the ground-state splitting of each emitter, from splitting to an operating
//! temperature, and the spectral analysis used to measure splittings.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod mechanics;
pub mod model;
pub mod population;
pub mod report;
pub mod rng;
pub mod roots;
pub mod spectra;
pub mod stats;
pub mod tensor;
pub mod thermal;

pub use error::{Error, Result};
pub use model::{DefectOrientation, EgCouplings, SivParameters};
pub use tensor::{Frame, StrainTensor};
