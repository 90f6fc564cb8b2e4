//! Monte Carlo laboratory for Brownian motion generated by the Laplace–Beltrami
//! operator `Delta` (heat equation `dp/dt = Delta p`, no factor 1/2) on
//! negatively curved model spaces and on the modular surface.
//!
//! Layers, bottom to top:
//! - [`geometry`]: hyperboloid model of H^d(-a^2), half-plane chart, Busemann
//!   functions, Gromov products, visual distances.
//! - [`models`]: constant curvature and rotationally symmetric warped surfaces
//!   in polar coordinates.
//! - [`heat`]: closed-form heat kernels, Green and Martin kernels, model constants.
//! - [`sampler`]: path simulation (exact half-plane, polar split-step, ambient hyperboloid).
//! - [`modular`]: PSL(2,Z) reduction, mixing diagnostics, geodesic flow.
//! - [`stats`]: estimators, Kolmogorov–Smirnov tests, identity dashboard.
//! - [`config`], [`runner`], [`acceptance`]: experiment orchestration behind the CLI.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod geometry;
pub mod heat;
pub mod models;
pub mod modular;
pub mod quad;
pub mod rng;
pub mod runner;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
