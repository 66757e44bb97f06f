//! Schauder frames on Banach spaces, computed exactly on finite truncations.
//!
//! * [`spaces`]: sequence spaces, dyadic `L_p[0,1]` and amalgam `(L_p, ℓ^q)`
//!   with their norms and duality pairings.
//! * [`frames`]: the frame abstraction, expansions, besselian sums, sampled
//!   frame constants and the shrinking / bounded-completeness probes.
//! * [`catalog`]: the canonical `ℓ^1` frame, the normalized Haar frame and
//!   the translated amalgam frame, addressable by label.
//! * [`verify`]: experiment suites producing reproducible reports.
//! * [`cli`]: the `framekit` command line.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod frames;
pub mod spaces;
pub mod verify;

pub use error::{FrameError, Result};
