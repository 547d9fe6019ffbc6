use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::radial::{Grading, RadialGrid};
use crate::error::{Error, Result};
use crate::geometry::ModelParams;
use crate::quadrature::{gauss_legendre, sphere_area};

/// Polar grid for fields invariant under rotations fixing the `x_N` axis.
///
/// A point is described by its distance `ρ` to the origin and its polar
/// angle `θ ∈ [0, π]` from the positive axis. The `ρ` direction reuses a
/// [`RadialGrid`]; `θ` is split into `m` uniform cells with nodes at the cell
/// centres, so neither pole carries a node. Node `(i, j)` has flat index
/// `i·m + j` and sits at `(z, s) = (ρ_i cos θ_j, ρ_i sin θ_j)`.
#[derive(Debug)]
pub struct AxisymGrid {
    radial: Arc<RadialGrid>,
    n_theta: usize,
    theta: Vec<f64>,
    /// ∫_cell sin^{N-2} θ dθ
    theta_weight: Vec<f64>,
    /// sin^{N-2}(face) / Δθ between θ-nodes j and j+1
    theta_face: Vec<f64>,
    /// |S^{N-2}|
    polar_area: f64,
    weights: Vec<f64>,
    /// Generalized eigenbasis of the angular operator: `K_θ Φ = Θ Φ Λ`, `Φᵀ Θ Φ = I`.
    basis: DMatrix<f64>,
    basis_t: DMatrix<f64>,
    angular_eigs: Vec<f64>,
}

pub fn build_axisym_grid(
    params: ModelParams,
    n_radial: usize,
    grading: Grading,
    n_theta: usize,
) -> Result<Arc<AxisymGrid>> {
    let radial = RadialGrid::new(params, n_radial, grading)?;
    AxisymGrid::new(Arc::new(radial), n_theta).map(Arc::new)
}

impl AxisymGrid {
    pub fn new(radial: Arc<RadialGrid>, n_theta: usize) -> Result<Self> {
        if n_theta < 8 {
            return Err(Error::Config(format!(
                "axisymmetric grid needs at least 8 angular cells, got {n_theta}"
            )));
        }
        let dim = radial.params().dimension();
        let p = (dim - 2) as i32;
        let h = std::f64::consts::PI / n_theta as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| (j as f64 + 0.5) * h).collect();
        let (gx, gw) = gauss_legendre(8);
        let theta_weight: Vec<f64> = (0..n_theta)
            .map(|j| {
                let a = j as f64 * h;
                gx.iter()
                    .zip(&gw)
                    .map(|(x, w)| 0.5 * h * w * (a + 0.5 * h * (x + 1.0)).sin().powi(p))
                    .sum()
            })
            .collect();
        let theta_face: Vec<f64> = (1..n_theta)
            .map(|j| (j as f64 * h).sin().powi(p) / h)
            .collect();
        let polar_area = sphere_area(dim - 2);
        let n_r = radial.len();
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for cm in radial.cell_moment() {
            for tw in &theta_weight {
                weights.push(polar_area * cm * tw);
            }
        }

        let inv_sqrt: Vec<f64> = theta_weight.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut sym = DMatrix::<f64>::zeros(n_theta, n_theta);
        for j in 0..n_theta {
            let left = if j > 0 { theta_face[j - 1] } else { 0.0 };
            let right = if j + 1 < n_theta { theta_face[j] } else { 0.0 };
            sym[(j, j)] = (left + right) * inv_sqrt[j] * inv_sqrt[j];
            if j + 1 < n_theta {
                let o = -theta_face[j] * inv_sqrt[j] * inv_sqrt[j + 1];
                sym[(j, j + 1)] = o;
                sym[(j + 1, j)] = o;
            }
        }
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n_theta).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut basis = DMatrix::<f64>::zeros(n_theta, n_theta);
        let mut angular_eigs = Vec::with_capacity(n_theta);
        for (k, &src) in order.iter().enumerate() {
            angular_eigs.push(eig.eigenvalues[src].max(0.0));
            for j in 0..n_theta {
                basis[(j, k)] = inv_sqrt[j] * eig.eigenvectors[(j, src)];
            }
        }
        let basis_t = basis.transpose();
        Ok(Self {
            radial,
            n_theta,
            theta,
            theta_weight,
            theta_face,
            polar_area,
            weights,
            basis,
            basis_t,
            angular_eigs,
        })
    }

    pub fn params(&self) -> ModelParams {
        self.radial.params()
    }

    pub fn radial(&self) -> &Arc<RadialGrid> {
        &self.radial
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_radial(&self) -> usize {
        self.radial.len()
    }

    pub fn len(&self) -> usize {
        self.radial.len() * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Eigenvalues of the discrete angular operator; the exact values are ℓ(ℓ+N−2).
    pub fn angular_eigenvalues(&self) -> &[f64] {
        &self.angular_eigs
    }

    pub fn node_polar(&self, k: usize) -> (f64, f64) {
        (
            self.radial.nodes()[k / self.n_theta],
            self.theta[k % self.n_theta],
        )
    }

    pub(crate) fn stiffness_apply(&self, values: &[f64]) -> Vec<f64> {
        let m = self.n_theta;
        let n = self.radial.len();
        let fm = self.radial.face_moment();
        let am = self.radial.angular_moment();
        let b = &self.theta_face;
        let mut out = vec![0.0; n * m];
        for i in 0..n - 1 {
            for j in 0..m {
                let f = values[i * m + j];
                let mut rad = fm[i] * (f - values[(i + 1) * m + j]);
                if i > 0 {
                    rad += fm[i - 1] * (f - values[(i - 1) * m + j]);
                }
                let mut ang = 0.0;
                if j > 0 {
                    ang += b[j - 1] * (f - values[i * m + j - 1]);
                }
                if j + 1 < m {
                    ang += b[j] * (f - values[i * m + j + 1]);
                }
                out[i * m + j] = self.polar_area * (self.theta_weight[j] * rad + am[i] * ang);
            }
        }
        out
    }

    /// Solves the Dirichlet stiffness system by diagonalizing the angular part.
    pub(crate) fn stiffness_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.n_theta;
        let n = self.radial.len();
        // Row-major (n × m) data read column-major is the transpose (m × n).
        let bt = DMatrix::from_column_slice(m, n, rhs);
        let bhat = &self.basis_t * bt;
        let mut ghat = DMatrix::<f64>::zeros(m, n);
        for k in 0..m {
            let t = self
                .radial
                .scaled_stiffness(self.angular_eigs[k], self.polar_area);
            let row: Vec<f64> = (0..n - 1).map(|i| bhat[(k, i)]).collect();
            let sol = t.solve(&row)?;
            for (i, x) in sol.into_iter().enumerate() {
                ghat[(k, i)] = x;
            }
        }
        let ft = &self.basis * ghat;
        let mut out = ft.as_slice().to_vec();
        for x in &mut out[(n - 1) * m..] {
            *x = 0.0;
        }
        Ok(out)
    }

    pub(crate) fn weighted_dirichlet(&self, values: &[f64], weight: &dyn Fn(f64) -> f64) -> f64 {
        let m = self.n_theta;
        let n = self.radial.len();
        let fm = self.radial.face_moment();
        let am = self.radial.angular_moment();
        let faces = self.radial.faces();
        let nodes = self.radial.nodes();
        let mut s = 0.0;
        for i in 0..n - 1 {
            let (wf, wn) = (weight(faces[i + 1]), weight(nodes[i]));
            for j in 0..m {
                let k = i * m + j;
                let d = values[k + m] - values[k];
                s += self.theta_weight[j] * fm[i] * wf * d * d;
                if j + 1 < m {
                    let d = values[k + 1] - values[k];
                    s += am[i] * self.theta_face[j] * wn * d * d;
                }
            }
        }
        self.polar_area * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_spectrum_approximates_harmonics() {
        let p = ModelParams::new(4, 0.5).unwrap();
        let g = build_axisym_grid(p, 32, Grading::Uniform, 128).unwrap();
        let ev = g.angular_eigenvalues();
        for (l, &e) in ev.iter().take(4).enumerate() {
            let exact = (l * (l + 2)) as f64;
            assert!(
                (e - exact).abs() < 2e-3 * (1.0 + exact),
                "l = {l}: {e} vs {exact}"
            );
        }
    }

    #[test]
    fn weights_sum_to_ball_volume() {
        let p = ModelParams::new(5, 0.7).unwrap();
        let g = build_axisym_grid(p, 40, Grading::BoundaryRefined, 32).unwrap();
        let vol: f64 = g.weights().iter().sum();
        let exact = crate::quadrature::ball_volume(5, 0.7);
        assert!((vol - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn solve_inverts_apply() {
        let p = ModelParams::new(4, 0.6).unwrap();
        let g = build_axisym_grid(p, 24, Grading::Uniform, 16).unwrap();
        let m = g.n_theta();
        let n = g.n_radial();
        let f: Vec<f64> = (0..n * m)
            .map(|k| {
                if k / m == n - 1 {
                    0.0
                } else {
                    ((k % 13) as f64 - 6.0) * 0.1 + (k as f64 * 0.01).sin()
                }
            })
            .collect();
        let b = g.stiffness_apply(&f);
        let x = g.stiffness_solve(&b).unwrap();
        for (a, b) in f.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
