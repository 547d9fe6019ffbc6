//! Numerical toolkit for critical points of the Brezis–Nirenberg functional on
//! geodesic balls of hyperbolic space, reduced to a weighted Euclidean problem
//! on a ball inside the unit ball.

pub mod bubbles;
pub mod error;
pub mod flow;
pub mod functional;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod minimax;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
pub use geometry::{
    conformal_factor, hyperbolic_energy, transform_u_to_v, transform_v_to_u, ModelParams,
};
pub use grid::{
    build_axisym_grid, build_radial_grid, h1_inner, h1_norm, integrate, laplacian_apply,
    laplacian_solve, AxisymGrid, Field, Grading, Grid, NodePoint, RadialGrid, Weight,
};
