//! Life-cycle assessment of quantum and classical computers compared over
//! equal operating time.
//!
//! The pipeline is: a [`lci::InventorySystem`] built from processes and
//! flows; system builders in [`quantum`] and [`hpc`] that turn hardware
//! parameters into demand per life-cycle phase; characterization in
//! [`impact`]; and time evaluation in [`scenario`].

pub mod dataset;
pub mod error;
pub mod hpc;
pub mod impact;
pub mod lci;
pub mod model;
pub mod quantum;
pub mod report;
pub mod scenario;

pub use error::{LcaError, Result};

// Book chapters double as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/inventory.md")]
    mod inventory {}
    #[doc = include_str!("../../../book/src/characterization.md")]
    mod characterization {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/hpc.md")]
    mod hpc {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
}
