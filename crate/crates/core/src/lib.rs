//! Numerical tools for locating the breakup of invariant tori in
//! Hamiltonian systems with two and three degrees of freedom.

pub mod birkhoff;
pub mod conjugation;
pub mod error;
pub mod freq;
pub mod ft;
mod ode;
pub mod scan;
pub mod renorm;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frequencies.md")]
    mod frequencies {}
    #[doc = include_str!("../../../book/src/fourier-taylor.md")]
    mod fourier_taylor {}
    #[doc = include_str!("../../../book/src/renormalization.md")]
    mod renormalization {}
    #[doc = include_str!("../../../book/src/conjugation.md")]
    mod conjugation {}
    #[doc = include_str!("../../../book/src/rotation-numbers.md")]
    mod rotation_numbers {}
    #[doc = include_str!("../../../book/src/scanning.md")]
    mod scanning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
}
