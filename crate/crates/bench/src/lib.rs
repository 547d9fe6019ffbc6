//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use critflow::{
    build_axisym_grid, build_radial_grid, AxisymGrid, Field, Grading, ModelParams, RadialGrid,
};

pub fn radial(n: usize) -> Arc<RadialGrid> {
    build_radial_grid(ModelParams::new(4, 0.5).unwrap(), n, Grading::Uniform).unwrap()
}

pub fn axisym(n: usize, n_theta: usize) -> Arc<AxisymGrid> {
    build_axisym_grid(
        ModelParams::new(4, 0.5).unwrap(),
        n,
        Grading::Uniform,
        n_theta,
    )
    .unwrap()
}

/// Smooth field vanishing on the boundary.
pub fn profile(grid: impl Into<critflow::Grid>) -> Field {
    Field::from_fn(grid, |x| {
        (0.25 - x.r * x.r) * (1.0 + x.r) * (-x.r * x.r / 0.02).exp()
    })
}
