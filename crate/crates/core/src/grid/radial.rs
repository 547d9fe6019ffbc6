use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::linalg::SymTridiag;
use crate::quadrature::sphere_area;

/// Node distribution along the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Spacing at the outer boundary half the spacing at the origin.
    BoundaryRefined,
    /// `r = R sinh(β s)/sinh β`: uniform near the origin, geometric further out,
    /// so concentrated profiles see a scale-independent relative resolution.
    OriginRefined {
        stretch: f64,
    },
}

impl Grading {
    fn map(&self, s: f64) -> f64 {
        match *self {
            Grading::Uniform => s,
            Grading::BoundaryRefined => 1.5 * s - 0.5 * s * s,
            Grading::OriginRefined { stretch } => (stretch * s).sinh() / stretch.sinh(),
        }
    }
}

/// Cell-centred finite-volume grid on `[0, R_e]` for radial profiles in ℝ^N.
///
/// Node `i < n-1` owns the cell `[faces[i], faces[i+1]]`, faces sit halfway
/// between nodes, the first face is the origin and the last node is the
/// Dirichlet boundary `r = R_e` (owning the half cell `[faces[n-1], R_e]`).
#[derive(Debug)]
pub struct RadialGrid {
    params: ModelParams,
    grading: Grading,
    nodes: Vec<f64>,
    faces: Vec<f64>,
    /// ∫_cell r^{N-1} dr
    cell_moment: Vec<f64>,
    /// face^{N-1} / (r_{i+1} - r_i), between nodes i and i+1
    face_moment: Vec<f64>,
    /// ∫_cell r^{N-3} dr
    angular_moment: Vec<f64>,
    sphere_area: f64,
    weights: Vec<f64>,
}

/// Builds a radial grid with `n` nodes (the last one on the boundary).
pub fn build_radial_grid(
    params: ModelParams,
    n: usize,
    grading: Grading,
) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(params, n, grading).map(Arc::new)
}

impl RadialGrid {
    pub fn new(params: ModelParams, n: usize, grading: Grading) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!(
                "radial grid needs at least 16 nodes, got {n}"
            )));
        }
        if let Grading::OriginRefined { stretch } = grading {
            if !(stretch > 0.0 && stretch <= 40.0) {
                return Err(Error::Config(format!(
                    "origin_refined stretch must lie in (0, 40], got {stretch}"
                )));
            }
        }
        let radius = params.ball_radius();
        let dim = params.dimension() as i32;
        let denom = n as f64 - 0.5;
        let mut nodes: Vec<f64> = (0..n)
            .map(|i| radius * grading.map((i as f64 + 0.5) / denom))
            .collect();
        nodes[n - 1] = radius;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !(nodes[0] > 0.0) {
            return Err(Error::Config(
                "grading produced non-increasing radial nodes".into(),
            ));
        }
        let mut faces = vec![0.0; n + 1];
        for i in 1..n {
            faces[i] = 0.5 * (nodes[i - 1] + nodes[i]);
        }
        faces[n] = radius;
        let nf = dim as f64;
        let cell_moment: Vec<f64> = (0..n)
            .map(|i| (faces[i + 1].powi(dim) - faces[i].powi(dim)) / nf)
            .collect();
        let face_moment: Vec<f64> = (0..n - 1)
            .map(|i| faces[i + 1].powi(dim - 1) / (nodes[i + 1] - nodes[i]))
            .collect();
        let angular_moment: Vec<f64> = (0..n)
            .map(|i| (faces[i + 1].powi(dim - 2) - faces[i].powi(dim - 2)) / (nf - 2.0))
            .collect();
        // M-matrix check: positive couplings and positive cell measures.
        if face_moment.iter().any(|&a| !(a > 0.0) || !a.is_finite())
            || cell_moment.iter().any(|&v| !(v > 0.0))
        {
            return Err(Error::Config(
                "grading breaks the M-matrix structure of the stencil".into(),
            ));
        }
        let sphere_area = sphere_area(params.dimension() - 1);
        let weights = cell_moment.iter().map(|m| sphere_area * m).collect();
        Ok(Self {
            params,
            grading,
            nodes,
            faces,
            cell_moment,
            face_moment,
            angular_moment,
            sphere_area,
            weights,
        })
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Quadrature weights `ω_{N-1} ∫_cell r^{N-1} dr`, boundary node included.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn cell_moment(&self) -> &[f64] {
        &self.cell_moment
    }

    pub(crate) fn face_moment(&self) -> &[f64] {
        &self.face_moment
    }

    pub(crate) fn angular_moment(&self) -> &[f64] {
        &self.angular_moment
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    /// ℓ(ℓ + N − 2), the spherical-harmonic eigenvalue of mode ℓ.
    pub fn mode_eigenvalue(&self, mode: usize) -> f64 {
        let l = mode as f64;
        l * (l + self.params.dimension() as f64 - 2.0)
    }

    /// Spacing of the grid cell straddling radius `r`.
    pub fn local_spacing(&self, r: f64) -> f64 {
        let i = self.nodes.partition_point(|&x| x <= r);
        let i = i.clamp(1, self.nodes.len() - 1);
        self.nodes[i] - self.nodes[i - 1]
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(self.nodes[0], f64::min)
    }

    /// Stiffness matrix of `-Δ` in mode `ℓ` on the interior nodes, scaled by `scale`
    /// instead of the sphere area (the axisymmetric grid reuses it).
    pub(crate) fn scaled_stiffness(&self, kappa: f64, scale: f64) -> SymTridiag {
        let m = self.len() - 1;
        let fm = &self.face_moment;
        let diag = (0..m)
            .map(|i| {
                scale
                    * ((if i > 0 { fm[i - 1] } else { 0.0 })
                        + fm[i]
                        + kappa * self.angular_moment[i])
            })
            .collect();
        let off = (0..m - 1).map(|i| -scale * fm[i]).collect();
        SymTridiag::new(diag, off)
    }

    pub(crate) fn stiffness(&self, mode: usize) -> SymTridiag {
        self.scaled_stiffness(self.mode_eigenvalue(mode), self.sphere_area)
    }

    pub(crate) fn stiffness_apply(&self, values: &[f64], mode: usize) -> Vec<f64> {
        let n = self.len();
        let kappa = self.mode_eigenvalue(mode);
        let fm = &self.face_moment;
        let mut out = vec![0.0; n];
        for i in 0..n - 1 {
            let mut s =
                fm[i] * (values[i] - values[i + 1]) + kappa * self.angular_moment[i] * values[i];
            if i > 0 {
                s += fm[i - 1] * (values[i] - values[i - 1]);
            }
            out[i] = self.sphere_area * s;
        }
        out
    }

    pub(crate) fn stiffness_solve(&self, rhs: &[f64], mode: usize) -> Result<Vec<f64>> {
        let n = self.len();
        let mut x = self.stiffness(mode).solve(&rhs[..n - 1])?;
        x.push(0.0);
        Ok(x)
    }

    pub(crate) fn weighted_dirichlet(
        &self,
        values: &[f64],
        mode: usize,
        weight: &dyn Fn(f64) -> f64,
    ) -> f64 {
        let n = self.len();
        let kappa = self.mode_eigenvalue(mode);
        let mut s = 0.0;
        for i in 0..n - 1 {
            let d = values[i + 1] - values[i];
            s += self.face_moment[i] * weight(self.faces[i + 1]) * d * d;
            if kappa != 0.0 {
                s += kappa * self.angular_moment[i] * weight(self.nodes[i]) * values[i] * values[i];
            }
        }
        self.sphere_area * s
    }
}
