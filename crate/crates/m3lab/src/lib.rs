//! Numerical laboratory for the M-I / M-II / M-III spin equations in 2+1
//! dimensions, their NLS-type partners and the Lax and frame machinery that
//! ties them together.

pub mod cli;
pub mod config;
pub mod equivalence;
pub mod error;
pub mod fields;
pub mod frames;
pub mod hirota;
pub mod init;
pub mod invariants;
pub mod io;
pub mod lax;
pub mod nls_dynamics;
pub mod spin_dynamics;

pub use error::{Error, Result};
pub use fields::{ComplexField, DerivScheme, Field, Grid2, ScalarField, Scheme, VectorField3};

/// Chapters of the accompanying book, compiled here so that their examples
/// run as doc-tests.
pub mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod chapter0 {}
    #[doc = include_str!("../../../book/src/fields.md")]
    pub mod chapter1 {}
    #[doc = include_str!("../../../book/src/spin.md")]
    pub mod chapter2 {}
    #[doc = include_str!("../../../book/src/nls.md")]
    pub mod chapter3 {}
    #[doc = include_str!("../../../book/src/frames.md")]
    pub mod chapter4 {}
    #[doc = include_str!("../../../book/src/equivalence.md")]
    pub mod chapter5 {}
    #[doc = include_str!("../../../book/src/lax.md")]
    pub mod chapter6 {}
    #[doc = include_str!("../../../book/src/hirota.md")]
    pub mod chapter7 {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod chapter8 {}
}
