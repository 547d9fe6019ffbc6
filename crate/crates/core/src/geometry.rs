//! Poincaré ball quantities and the conformal change of unknowns between the
//! hyperbolic field `u` and the Euclidean field `v = ϱ^{(N-2)/2} u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Dimension and Euclidean radius of the origin-centred domain ball `B(0, R_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams", into = "RawModelParams")]
pub struct ModelParams {
    dimension: usize,
    ball_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModelParams {
    dimension: usize,
    ball_radius: f64,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.dimension, raw.ball_radius)
    }
}

impl From<ModelParams> for RawModelParams {
    fn from(p: ModelParams) -> Self {
        RawModelParams {
            dimension: p.dimension,
            ball_radius: p.ball_radius,
        }
    }
}

impl ModelParams {
    pub fn new(dimension: usize, ball_radius: f64) -> Result<Self> {
        if dimension < 3 {
            return Err(Error::Config(format!(
                "dimension must be >= 3, got {dimension}"
            )));
        }
        if !(ball_radius > 0.0) {
            return Err(Error::Config(format!(
                "ball_radius must be > 0, got {ball_radius}"
            )));
        }
        if ball_radius >= 1.0 {
            return Err(Error::Config(format!(
                "ball_radius must be < 1, got {ball_radius}"
            )));
        }
        Ok(Self {
            dimension,
            ball_radius,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    /// λ₀ = N(N−2)/4.
    pub fn spectral_shift(&self) -> f64 {
        let n = self.dimension as f64;
        n * (n - 2.0) / 4.0
    }

    /// 2* = 2N/(N−2).
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dimension as f64;
        2.0 * n / (n - 2.0)
    }

    /// Solvers built on the bubble estimates need N ≥ 4.
    pub fn require_solver_dimension(&self) -> Result<()> {
        if self.dimension < 4 {
            return Err(Error::Domain(format!(
                "this solver path requires N >= 4, got N = {}",
                self.dimension
            )));
        }
        Ok(())
    }

    /// ϱ on the domain; rejects radii outside `[0, R_e]`.
    pub fn conformal_factor(&self, r: f64) -> Result<f64> {
        if r > self.ball_radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "r = {r} lies outside the domain radius {}",
                self.ball_radius
            )));
        }
        conformal_factor(r)
    }
}

/// ϱ(r) = 2/(1 − r²), the Poincaré ball conformal factor.
pub fn conformal_factor(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!(
            "conformal factor needs 0 <= r < 1, got {r}"
        )));
    }
    Ok(rho(r))
}

#[inline]
pub(crate) fn rho(r: f64) -> f64 {
    2.0 / (1.0 - r * r)
}

#[inline]
pub(crate) fn rho_sq(r: f64) -> f64 {
    let q = rho(r);
    q * q
}

fn conformal_power(grid: &Grid) -> f64 {
    (grid.params().dimension() as f64 - 2.0) / 2.0
}

/// `v = ϱ^{(N−2)/2} u`, node by node.
pub fn transform_u_to_v(u: &Field) -> Field {
    let a = conformal_power(u.grid());
    let grid = u.grid();
    u.map_indexed(|k, x| rho(grid.node_radius(k)).powf(a) * x)
}

/// `u = ϱ^{−(N−2)/2} v`, node by node.
pub fn transform_v_to_u(v: &Field) -> Field {
    let a = conformal_power(v.grid());
    let grid = v.grid();
    v.map_indexed(|k, x| x / rho(grid.node_radius(k)).powf(a))
}

/// Hyperbolic Dirichlet energy `∫ |∇u|² ϱ^{N−2} dx`, with `ϱ^{N−2}` taken at
/// the cell faces.
pub fn hyperbolic_energy(u: &Field) -> f64 {
    let a = 2.0 * conformal_power(u.grid());
    u.grid()
        .weighted_dirichlet(u.values(), u.mode(), &|r| rho(r).powf(a))
}
