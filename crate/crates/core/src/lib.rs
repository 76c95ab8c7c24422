//! Meshless Stokes solver built from a divergence-free moving-least-squares
//! velocity reconstruction and a staggered MLS pressure discretization, with
//! monolithic coupling to rigid suspended colloids.

pub mod assembly;
pub mod basis;
pub mod colloid;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod linsolve;
pub mod output;
pub mod pointcloud;
pub mod scenarios;
pub mod stencils;

pub use colloid::{ColloidState, Shape, Vec2};
pub use error::{Error, Result};
