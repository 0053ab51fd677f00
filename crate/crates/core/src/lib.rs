//! Counting lattice points of arithmetic groups in growing families of
//! domains, and checking the counts against Haar volumes.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`]: exact group elements of `SL_n(Z)` and `SL_2(Z[1/p])`.
//! * [`gauges`]: size functionals `|g|` whose sublevel sets are the domains.
//! * [`enumerate`]: exact enumeration of `Gamma ∩ {|g| <= t}`.
//! * [`haar`]: volumes of the same domains, growth fits, and admissibility
//!   and balancedness checks.
//! * [`spectral`]: the Harish-Chandra function of `SL_2(R)` and the error
//!   exponents derived from spectral decay.
//! * [`ergodic`]: lattice averages on the torus and on congruence quotients.
//!
//! ```
//! use latcount::enumerate::{count_series, Group, DEFAULT_BUDGET};
//! use latcount::gauges::Gauge;
//!
//! let series = count_series(Group::Sl2Z, &Gauge::frobenius(), &[2f64.sqrt(), 2.0], DEFAULT_BUDGET)?;
//! assert_eq!(series.counts(), vec![4, 20]);
//! # Ok::<(), latcount::Error>(())
//! ```

pub mod arith;
pub mod enumerate;
pub mod ergodic;
mod error;
pub mod format;
pub mod gauges;
pub mod haar;
pub mod quad;
pub mod spectral;

pub use arith::{GroupElement, ResidueClass};
pub use error::{Error, ErrorCategory, Result};
pub use gauges::{BinaryForm, Gauge, Scale};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/elements.md")]
    struct Elements;
    #[doc = include_str!("../../../book/src/gauges.md")]
    struct Gauges;
    #[doc = include_str!("../../../book/src/counting.md")]
    struct Counting;
    #[doc = include_str!("../../../book/src/volumes.md")]
    struct Volumes;
    #[doc = include_str!("../../../book/src/spectral.md")]
    struct Spectral;
    #[doc = include_str!("../../../book/src/equidistribution.md")]
    struct Equidistribution;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
