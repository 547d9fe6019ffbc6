//! Weighted Dirichlet eigenproblem `-Δe = μ ϱ² e` on the ball, solved per
//! angular mode, and the shifted spectrum `λ = μ + λ₀`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::rho_sq;
use crate::grid::{h1_norm, integrate, Field, Grid, RadialGrid, Weight};
use crate::linalg::SymTridiag;

/// Default relative tolerance for deciding that λ sits on an eigenvalue.
pub const EIGENVALUE_TOL: f64 = 1e-8;

/// Eigenpairs of all requested modes, merged and sorted by eigenvalue.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub mus: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// H-orthonormal eigenfields, one representative per (mode, index).
    pub eigenfields: Vec<Field>,
    pub modes: Vec<usize>,
    /// Dimension of the spherical harmonics of each entry's mode.
    pub degeneracies: Vec<usize>,
    pub spectral_shift: f64,
    /// Below this value every eigenvalue of the discrete operator is listed.
    coverage: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.mus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mus.is_empty()
    }

    /// λ₁, the bottom of the shifted spectrum.
    pub fn lambda1(&self) -> f64 {
        self.lambdas[0]
    }

    /// Shifted eigenvalues repeated according to their degeneracy.
    pub fn lambdas_with_multiplicity(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .zip(&self.degeneracies)
            .flat_map(|(&l, &d)| std::iter::repeat_n(l, d))
            .collect()
    }

    /// `i`-th shifted eigenvalue counted with multiplicity, 1-based as λ₁, λ₂, …
    pub fn lambda_counted(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(Error::Range("eigenvalues are indexed from 1".into()));
        }
        let mut seen = 0;
        for (l, d) in self.lambdas.iter().zip(&self.degeneracies) {
            seen += d;
            if seen >= i {
                if *l >= self.coverage {
                    break;
                }
                return Ok(*l);
            }
        }
        Err(Error::Range(format!(
            "λ_{i} lies beyond the computed part of the spectrum"
        )))
    }

    /// Shifted eigenvalues below this bound are guaranteed to be complete.
    pub fn coverage_limit(&self) -> f64 {
        self.coverage
    }
}

/// Degeneracy of the spherical harmonics of degree ℓ on S^{N−1}.
pub fn harmonic_dimension(dimension: usize, mode: usize) -> usize {
    binomial(mode + dimension - 1, dimension - 1)
        - if mode >= 2 {
            binomial(mode + dimension - 3, dimension - 1)
        } else {
            0
        }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn mass_diagonal(grid: &RadialGrid) -> Vec<f64> {
    let n = grid.len() - 1;
    (0..n)
        .map(|i| grid.weights()[i] * rho_sq(grid.nodes()[i]))
        .collect()
}

/// Lowest `k` weighted eigenpairs of one angular mode.
fn mode_eigs(grid: &Arc<RadialGrid>, mode: usize, k: usize) -> Result<Vec<(f64, Field)>> {
    let a = grid.stiffness(mode);
    let d = mass_diagonal(grid);
    let s: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let n = d.len();
    let t = SymTridiag::new(
        (0..n).map(|i| a.diag[i] * s[i] * s[i]).collect(),
        (0..n - 1).map(|i| a.off[i] * s[i] * s[i + 1]).collect(),
    );
    let pairs = t.lowest_eigenpairs(k)?;
    pairs
        .into_iter()
        .map(|(mu, y)| {
            if !(mu > 0.0) {
                return Err(Error::Numerical(format!(
                    "non-positive weighted eigenvalue {mu} in mode {mode}"
                )));
            }
            let norm = mu.sqrt();
            let mut values: Vec<f64> = y.iter().zip(&s).map(|(y, s)| y * s / norm).collect();
            // Sign convention: positive mean, so the ground state is positive.
            if values.iter().sum::<f64>() < 0.0 {
                values.iter_mut().for_each(|x| *x = -*x);
            }
            values.push(0.0);
            Ok((
                mu,
                Field::from_values(Grid::Radial(Arc::clone(grid)), mode, values)?,
            ))
        })
        .collect()
}

/// Weighted eigenpairs for modes `0..=l_max`, `k_per_mode` per mode.
pub fn weighted_eigs(
    grid: &Arc<RadialGrid>,
    l_max: usize,
    k_per_mode: usize,
) -> Result<SpectrumResult> {
    if k_per_mode == 0 {
        return Err(Error::Config("k_per_mode must be at least 1".into()));
    }
    if k_per_mode >= grid.len() - 1 {
        return Err(Error::Config(format!(
            "k_per_mode = {k_per_mode} exceeds the {} interior nodes",
            grid.len() - 1
        )));
    }
    let params = grid.params();
    let lambda0 = params.spectral_shift();
    let per_mode: Vec<Vec<(f64, Field)>> = (0..=l_max)
        .into_par_iter()
        .map(|l| mode_eigs(grid, l, k_per_mode))
        .collect::<Result<_>>()?;

    // Modes above l_max start above the first eigenvalue of mode l_max, and each
    // mode is complete up to its last computed eigenvalue.
    let mut coverage = per_mode[l_max][0].0;
    for m in &per_mode {
        coverage = coverage.min(m.last().unwrap().0);
    }

    let mut entries: Vec<(f64, usize, Field)> = per_mode
        .into_iter()
        .enumerate()
        .flat_map(|(l, pairs)| pairs.into_iter().map(move |(mu, f)| (mu, l, f)))
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = SpectrumResult {
        mus: Vec::with_capacity(entries.len()),
        lambdas: Vec::with_capacity(entries.len()),
        eigenfields: Vec::with_capacity(entries.len()),
        modes: Vec::with_capacity(entries.len()),
        degeneracies: Vec::with_capacity(entries.len()),
        spectral_shift: lambda0,
        coverage: coverage + lambda0,
    };
    for (mu, l, f) in entries {
        out.mus.push(mu);
        out.lambdas.push(mu + lambda0);
        out.modes.push(l);
        out.degeneracies
            .push(harmonic_dimension(params.dimension(), l));
        out.eigenfields.push(f);
    }
    Ok(out)
}

/// `‖v‖² / |ϱ v|₂²`.
pub fn rayleigh_quotient(v: &Field) -> Result<f64> {
    let den = integrate(v, Weight::Rho2, 2.0);
    if !(den > 0.0) {
        return Err(Error::Domain("Rayleigh quotient of the zero field".into()));
    }
    Ok(h1_norm(v).powi(2) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectralPosition {
    /// Number of shifted eigenvalues strictly below λ, counted with multiplicity,
    /// excluding an eigenvalue that λ coincides with.
    pub n: usize,
    pub at_eigenvalue: bool,
    /// Total multiplicity of the eigenvalue λ sits on (0 otherwise).
    pub multiplicity: usize,
}

pub fn spectral_position(lambda: f64, spec: &SpectrumResult) -> Result<SpectralPosition> {
    spectral_position_with_tol(lambda, spec, EIGENVALUE_TOL)
}

/// Locates λ in the shifted spectrum; `tol` is relative.
pub fn spectral_position_with_tol(
    lambda: f64,
    spec: &SpectrumResult,
    tol: f64,
) -> Result<SpectralPosition> {
    if !(lambda > spec.spectral_shift) {
        return Err(Error::Domain(format!(
            "λ = {lambda} must exceed λ₀ = {}",
            spec.spectral_shift
        )));
    }
    let near = |l: f64| (l - lambda).abs() <= tol * lambda.abs().max(l.abs());
    let limit = spec.coverage;
    if lambda >= limit && !near(limit) {
        return Err(Error::Range(format!(
            "λ = {lambda} is not bracketed by the computed spectrum (complete below {limit}); raise l_max or k_per_mode"
        )));
    }
    let mut n = 0;
    let mut multiplicity = 0;
    for (&l, &d) in spec.lambdas.iter().zip(&spec.degeneracies) {
        if near(l) {
            multiplicity += d;
        } else if l < lambda {
            n += d;
        }
    }
    Ok(SpectralPosition {
        n,
        at_eigenvalue: multiplicity > 0,
        multiplicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::grid::{build_radial_grid, h1_inner, laplacian_apply, Grading};

    fn grid(n_dim: usize, r: f64, n: usize) -> Arc<RadialGrid> {
        build_radial_grid(ModelParams::new(n_dim, r).unwrap(), n, Grading::Uniform).unwrap()
    }

    #[test]
    fn harmonic_dimensions() {
        // N = 3: 2ℓ + 1
        for l in 0..6 {
            assert_eq!(harmonic_dimension(3, l), 2 * l + 1);
        }
        // N = 4: (ℓ + 1)²
        for l in 0..6 {
            assert_eq!(harmonic_dimension(4, l), (l + 1) * (l + 1));
        }
        assert_eq!(harmonic_dimension(5, 1), 5);
        assert_eq!(harmonic_dimension(5, 2), 14);
    }

    #[test]
    fn shift_and_positivity() {
        let g = grid(4, 0.5, 200);
        let s = weighted_eigs(&g, 2, 3).unwrap();
        assert_eq!(s.modes[0], 0);
        for (l, m) in s.lambdas.iter().zip(&s.mus) {
            assert_eq!(l - m, 2.0);
            assert!(*l > 2.0);
        }
        let e1 = &s.eigenfields[0];
        assert!(e1.values()[..g.len() - 1].iter().all(|&x| x > 0.0));
        assert!(s.mus.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn orthonormal_and_residual() {
        let g = grid(5, 0.6, 160);
        let s = weighted_eigs(&g, 2, 4).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let ip = h1_inner(&s.eigenfields[i], &s.eigenfields[j]).unwrap();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8, "({i},{j}) {ip}");
            }
            let e = &s.eigenfields[i];
            let le = laplacian_apply(e);
            let res: f64 = le
                .values()
                .iter()
                .zip(e.values())
                .enumerate()
                .map(|(k, (a, b))| (a - s.mus[i] * rho_sq(g.nodes()[k]) * b).abs())
                .fold(0.0, f64::max);
            assert!(res < 1e-6 * s.mus[i] * e.sup_norm(), "residual {res}");
        }
    }

    #[test]
    fn small_ball_matches_bessel_limit() {
        let g = grid(4, 0.05, 400);
        let s = weighted_eigs(&g, 0, 1).unwrap();
        let j11: f64 = 3.831_705_970_207_512;
        let approx = j11 * j11 / (4.0 * 0.05 * 0.05);
        assert!((s.mus[0] - approx).abs() < 0.02 * approx);
    }

    #[test]
    fn rayleigh_quotient_properties() {
        let g = grid(4, 0.5, 200);
        let s = weighted_eigs(&g, 0, 1).unwrap();
        let e1 = &s.eigenfields[0];
        assert!((rayleigh_quotient(e1).unwrap() - s.mus[0]).abs() < 1e-9 * s.mus[0]);
        assert!((rayleigh_quotient(&e1.scaled(-3.0)).unwrap() - s.mus[0]).abs() < 1e-9 * s.mus[0]);
        let bump = Field::from_fn(&g, |x| (0.25 - x.r * x.r).powi(2) * (1.0 + 3.0 * x.r));
        assert!(rayleigh_quotient(&bump).unwrap() >= s.mus[0] * (1.0 - 1e-12));
        assert!(rayleigh_quotient(&Field::zeros(&g, 0)).is_err());
    }

    #[test]
    fn positions() {
        let g = grid(4, 0.5, 200);
        let s = weighted_eigs(&g, 3, 3).unwrap();
        let l1 = s.lambdas[0];
        let l2 = s.lambdas[1];
        let p = spectral_position(0.5 * (2.0 + l1), &s).unwrap();
        assert_eq!((p.n, p.at_eigenvalue), (0, false));
        let p = spectral_position(0.5 * (l1 + l2), &s).unwrap();
        assert_eq!(p.n, 1);
        for d in [1e-12, -1e-12] {
            let p = spectral_position(l1 + d, &s).unwrap();
            assert!(p.at_eigenvalue);
            assert_eq!(p.multiplicity, 1);
            assert_eq!(p.n, 0);
        }
        // λ₂ is the ℓ = 1 eigenvalue with degeneracy N = 4.
        assert_eq!(s.modes[1], 1);
        let p = spectral_position(l2, &s).unwrap();
        assert_eq!((p.n, p.multiplicity), (1, 4));
        assert!(matches!(spectral_position(2.0, &s), Err(Error::Domain(_))));
        assert!(matches!(spectral_position(1e9, &s), Err(Error::Range(_))));
    }
}
