//! Concrete evolutionary systems: closed-form model systems on sequence and
//! frequency spaces, a periodically forced scalar equation, and a Fourier
//! Galerkin truncation of the forced 3-D Navier-Stokes equations.

pub mod branch2;
pub mod bump;
pub mod forced;
pub mod heat;
pub mod line;
pub mod nse;
pub mod registry;
pub mod single;

use ges_core::{Error, Result};

pub(crate) fn usage_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
