//! Power diagrams that separate clustered data with maximum margin.
//!
//! The fixed-site programs are linear and solved by the bundled simplex in
//! [`lp`]; [`algorithms`] builds outlier detection and threshold search on
//! top of them, and [`free_sites`] treats the sites as variables.

pub mod algorithms;
pub mod error;
pub mod eval;
pub mod formulations;
pub mod free_sites;
pub mod geometry;
pub mod io;
pub mod lp;

pub use error::{Error, Result};
pub use geometry::{Dataset, PowerDiagram, SiteSet, SoftSolution, Variant};
