//! The energy `I(v) = ½‖v‖² − ½(λ−λ₀)|ϱv|₂² − (1/2*)|v|_{2*}^{2*}`, its
//! gradient `v − K₀(v) − K*(v)`, the Nehari retraction and cone-distance bounds.

use serde::{Deserialize, Serialize};

use crate::bubbles::sobolev_constant;
use crate::error::{Error, Result};
use crate::geometry::{rho_sq, ModelParams};
use crate::grid::{h1_norm, integrate, stiffness_solve_loads, Field, Weight};

/// The integrals making up `I(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// ‖v‖²
    pub grad_sq: f64,
    /// |ϱ v|₂²
    pub weighted_l2: f64,
    /// |v|_{2*}^{2*}
    pub crit_mass: f64,
    /// Q(v) = ‖v‖² − (λ−λ₀)|ϱ v|₂²
    pub q_form: f64,
    pub energy: f64,
}

pub(crate) fn check_lambda(params: ModelParams, lambda: f64) -> Result<f64> {
    let shift = params.spectral_shift();
    if !(lambda > shift) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "λ = {lambda} must exceed λ₀ = {shift}"
        )));
    }
    Ok(lambda - shift)
}

pub fn energy(v: &Field, lambda: f64) -> Result<EnergyBreakdown> {
    let params = v.params();
    let gap = check_lambda(params, lambda)?;
    let p = params.critical_exponent();
    let grad_sq = h1_norm(v).powi(2);
    let weighted_l2 = integrate(v, Weight::Rho2, 2.0);
    let crit_mass = integrate(v, Weight::One, p);
    let q_form = grad_sq - gap * weighted_l2;
    Ok(EnergyBreakdown {
        grad_sq,
        weighted_l2,
        crit_mass,
        q_form,
        energy: 0.5 * q_form - crit_mass / p,
    })
}

/// Solves `-Δw = (λ−λ₀) ϱ² v`.
pub fn k0(v: &Field, lambda: f64) -> Result<Field> {
    let gap = check_lambda(v.params(), lambda)?;
    let grid = v.grid();
    let loads: Vec<f64> = v
        .values()
        .iter()
        .zip(grid.weights())
        .enumerate()
        .map(|(k, (x, w))| gap * w * rho_sq(grid.node_radius(k)) * x)
        .collect();
    stiffness_solve_loads(grid, v.mode(), &loads)
}

/// Solves `-Δw = |v|^{2*−2} v`.
pub fn kstar(v: &Field) -> Result<Field> {
    let grid = v.grid();
    let p = v.params().critical_exponent();
    let loads: Vec<f64> = v
        .values()
        .iter()
        .zip(grid.weights())
        .map(|(x, w)| w * x.abs().powf(p - 2.0) * x)
        .collect();
    stiffness_solve_loads(grid, v.mode(), &loads)
}

/// `K₀(v) + K*(v)`, with a single solve.
pub fn k_total(v: &Field, lambda: f64) -> Result<Field> {
    let gap = check_lambda(v.params(), lambda)?;
    let grid = v.grid();
    let p = v.params().critical_exponent();
    let loads: Vec<f64> = v
        .values()
        .iter()
        .zip(grid.weights())
        .enumerate()
        .map(|(k, (x, w))| w * (gap * rho_sq(grid.node_radius(k)) + x.abs().powf(p - 2.0)) * x)
        .collect();
    stiffness_solve_loads(grid, v.mode(), &loads)
}

/// The H-gradient `v − K₀(v) − K*(v)`.
pub fn gradient(v: &Field, lambda: f64) -> Result<Field> {
    v.sub(&k_total(v, lambda)?)
}

/// `Q(v) − |v|_{2*}^{2*} = ⟨∇I(v), v⟩`.
pub fn nehari_residual(v: &Field, lambda: f64) -> Result<f64> {
    let e = energy(v, lambda)?;
    Ok(e.q_form - e.crit_mass)
}

/// The scaling `t*` with `t*·v` on the Nehari manifold.
pub fn nehari_factor(v: &Field, lambda: f64) -> Result<f64> {
    let e = energy(v, lambda)?;
    if e.crit_mass == 0.0 {
        return Err(Error::Domain("cannot retract the zero field".into()));
    }
    if !(e.q_form > 0.0) {
        return Err(Error::Precondition(format!(
            "quadratic form Q = {:.6e} is not positive, the ray never meets the Nehari manifold",
            e.q_form
        )));
    }
    let p = v.params().critical_exponent();
    Ok((e.q_form / e.crit_mass).powf(1.0 / (p - 2.0)))
}

pub fn nehari_retract(v: &Field, lambda: f64) -> Result<Field> {
    Ok(v.scaled(nehari_factor(v, lambda)?))
}

/// `I` at the retraction of `v`, which is the maximum of `t ↦ I(tv)`:
/// `(1/N)(Q(v)/|v|_{2*}²)^{N/2}`.
pub fn retracted_energy(v: &Field, lambda: f64) -> Result<f64> {
    let e = energy(v, lambda)?;
    if e.crit_mass == 0.0 {
        return Err(Error::Domain("cannot retract the zero field".into()));
    }
    if !(e.q_form > 0.0) {
        return Err(Error::Precondition(format!(
            "quadratic form Q = {:.6e} is not positive",
            e.q_form
        )));
    }
    let params = v.params();
    let n = params.dimension() as f64;
    let norm_sq = e.crit_mass.powf(2.0 / params.critical_exponent());
    Ok((e.q_form / norm_sq).powf(n / 2.0) / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeSide {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "minusP")]
    MinusP,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeBounds {
    /// Bounds on the distance to the nearer cone.
    pub lower: f64,
    pub upper: f64,
    pub side: ConeSide,
    /// `S^{1/2}|v⁻|_{2*} ≤ dist(v, P) ≤ ‖v⁻‖`
    pub to_p: (f64, f64),
    /// `S^{1/2}|v⁺|_{2*} ≤ dist(v, −P) ≤ ‖v⁺‖`
    pub to_minus_p: (f64, f64),
}

/// Two-sided bounds on the H-distance from `v` to the cones `P` and `−P`.
pub fn cone_distance_bounds(v: &Field) -> Result<ConeBounds> {
    let params = v.params();
    let p = params.critical_exponent();
    let sqrt_s = sobolev_constant(params.dimension())?.sqrt();
    let side_bounds = |part: &Field| -> (f64, f64) {
        (
            sqrt_s * integrate(part, Weight::One, p).powf(1.0 / p),
            h1_norm(part),
        )
    };
    let to_p = side_bounds(&v.negative_part());
    let to_minus_p = side_bounds(&v.positive_part());
    let (side, (lower, upper)) = if to_p.1 <= to_minus_p.1 {
        (ConeSide::P, to_p)
    } else {
        (ConeSide::MinusP, to_minus_p)
    };
    Ok(ConeBounds {
        lower,
        upper,
        side,
        to_p,
        to_minus_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_radial_grid, h1_inner, Grading, RadialGrid};
    use crate::spectrum::weighted_eigs;
    use std::sync::Arc;

    fn setup() -> (Arc<RadialGrid>, f64, f64) {
        let p = ModelParams::new(4, 0.5).unwrap();
        let g = build_radial_grid(p, 200, Grading::Uniform).unwrap();
        let s = weighted_eigs(&g, 0, 2).unwrap();
        (g, s.lambdas[0], 2.0)
    }

    fn bump(g: &Arc<RadialGrid>) -> Field {
        Field::from_fn(g, |x| 40.0 * (0.25 - x.r * x.r).powi(2) * (1.0 + 2.0 * x.r))
    }

    #[test]
    fn breakdown_is_consistent() {
        let (g, l1, l0) = setup();
        let lambda = 0.5 * (l0 + l1);
        let z = energy(&Field::zeros(&g, 0), lambda).unwrap();
        assert_eq!(
            (z.grad_sq, z.weighted_l2, z.crit_mass, z.energy),
            (0.0, 0.0, 0.0, 0.0)
        );
        let e = energy(&bump(&g), lambda).unwrap();
        assert!((e.energy - (0.5 * e.q_form - e.crit_mass / 4.0)).abs() < 1e-14 * e.grad_sq);
        assert!(energy(&bump(&g).scaled(50.0), lambda).unwrap().energy < 0.0);
        assert!(matches!(energy(&bump(&g), 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn k0_diagonal_on_eigenfields() {
        let p = ModelParams::new(5, 0.6).unwrap();
        let g = build_radial_grid(p, 160, Grading::Uniform).unwrap();
        let s = weighted_eigs(&g, 1, 3).unwrap();
        let lambda = s.lambdas[0] - 0.3 * s.mus[0];
        for (i, e) in s.eigenfields.iter().enumerate() {
            let ratio = (lambda - s.spectral_shift) / s.mus[i];
            let k = k0(e, lambda).unwrap();
            let d = k.lin_comb(1.0, e, -ratio).unwrap();
            assert!(h1_norm(&d) < 1e-9, "{}", h1_norm(&d));
        }
        let e1 = &s.eigenfields[0];
        let q = energy(e1, lambda).unwrap().q_form;
        assert!((q - (1.0 - (lambda - s.spectral_shift) / s.mus[0])).abs() < 1e-9);
    }

    #[test]
    fn solves_preserve_sign() {
        let (g, l1, l0) = setup();
        let v = bump(&g);
        assert!(k0(&v, 0.5 * (l0 + l1))
            .unwrap()
            .values()
            .iter()
            .all(|&x| x >= 0.0));
        assert!(kstar(&v).unwrap().values().iter().all(|&x| x >= 0.0));
        assert!(kstar(&Field::zeros(&g, 0)).unwrap().is_zero());
        assert!(gradient(&Field::zeros(&g, 0), 0.5 * (l0 + l1))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn gradient_matches_central_difference() {
        let (g, l1, l0) = setup();
        let lambda = 0.3 * l0 + 0.7 * l1;
        let v = bump(&g);
        let w = Field::from_fn(&g, |x| (9.0 * x.r).sin() * (0.5 - x.r));
        let gv = gradient(&v, lambda).unwrap();
        let exact = h1_inner(&gv, &w).unwrap();
        let fd = |eps: f64| {
            let a = energy(&v.lin_comb(1.0, &w, eps).unwrap(), lambda)
                .unwrap()
                .energy;
            let b = energy(&v.lin_comb(1.0, &w, -eps).unwrap(), lambda)
                .unwrap()
                .energy;
            (a - b) / (2.0 * eps)
        };
        let e1 = (fd(1e-2) - exact).abs();
        let e2 = (fd(5e-3) - exact).abs();
        assert!(e2 < 1e-6 * exact.abs().max(1.0));
        assert!((e1 / e2).log2() > 1.9);
    }

    #[test]
    fn retraction_properties() {
        let (g, l1, l0) = setup();
        let lambda = 0.5 * (l0 + l1);
        let v = bump(&g);
        let r = nehari_retract(&v, lambda).unwrap();
        let e = energy(&r, lambda).unwrap();
        assert!(nehari_residual(&r, lambda).unwrap().abs() < 1e-10 * e.grad_sq);
        assert!((e.energy - e.crit_mass / 4.0).abs() < 1e-10 * e.energy);
        assert!((retracted_energy(&v, lambda).unwrap() - e.energy).abs() < 1e-10 * e.energy);
        assert!((nehari_factor(&r, lambda).unwrap() - 1.0).abs() < 1e-12);
        let r3 = nehari_retract(&v.scaled(3.7), lambda).unwrap();
        let d = r3.sub(&r).unwrap();
        assert!(h1_norm(&d) < 1e-10 * h1_norm(&r));
        // Doubling a Nehari element: 4Q − 2^{2*} crit_mass < 0.
        assert!(nehari_residual(&r.scaled(2.0), lambda).unwrap() < 0.0);
        assert!(matches!(
            nehari_retract(&Field::zeros(&g, 0), lambda),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            nehari_retract(&v, l1 + 50.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cone_bounds() {
        let (g, _, _) = setup();
        let v = bump(&g);
        let b = cone_distance_bounds(&v).unwrap();
        assert_eq!(b.side, ConeSide::P);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        let m = cone_distance_bounds(&v.scaled(-1.0)).unwrap();
        assert_eq!(m.side, ConeSide::MinusP);
        assert!(m.to_p.0 <= m.to_p.1);
        assert!((m.to_p.1 - h1_norm(&v)).abs() < 1e-12 * h1_norm(&v));
    }
}
