//! Szegő projections and Hardy-space experiments on quotient domains of the
//! polydisc and the ball: pullback boundary densities of proper holomorphic
//! covering maps, boundary Szegő projections, the admissibility problem
//! |g*|² = w, the quotient transformation formula and Muckenhoupt A_p scans.

pub mod admissibility;
pub mod boundary_geometry;
pub mod cli;
pub mod error;
pub mod numeric;
pub mod quotient_maps;
pub mod quotient_szego;
pub mod regularity_lab;
pub mod szego_core;

pub use error::{LabError, Result};
pub use numeric::C64;
