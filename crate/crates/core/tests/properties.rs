use std::sync::Arc;

use critflow::functional::{
    energy, gradient, nehari_factor, nehari_residual, nehari_retract, retracted_energy,
};
use critflow::spectrum::{spectral_position, weighted_eigs, SpectrumResult};
use critflow::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn grid() -> &'static Arc<RadialGrid> {
    static G: OnceLock<Arc<RadialGrid>> = OnceLock::new();
    G.get_or_init(|| {
        build_radial_grid(ModelParams::new(4, 0.5).unwrap(), 96, Grading::Uniform).unwrap()
    })
}

fn spectrum() -> &'static SpectrumResult {
    static S: OnceLock<SpectrumResult> = OnceLock::new();
    S.get_or_init(|| weighted_eigs(grid(), 2, 3).unwrap())
}

fn lambda_mid() -> f64 {
    let s = spectrum();
    0.5 * (s.spectral_shift + s.lambda1())
}

/// `(R² − r²) Σ a_k r^{2k}`, smooth and zero on the boundary.
fn field(coeffs: &[f64]) -> Field {
    Field::from_fn(grid(), |x| {
        let r2 = x.r * x.r;
        (0.25 - r2) * coeffs.iter().rev().fold(0.0, |acc, a| acc * r2 + a)
    })
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 4)
}

fn nonzero_coeffs() -> impl Strategy<Value = Vec<f64>> {
    coeffs().prop_filter("nonzero field", |c| c.iter().any(|a| a.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inner_product_is_symmetric_and_bilinear(a in coeffs(), b in coeffs(), c in coeffs(), s in -3.0..3.0f64) {
        let (f, g, h) = (field(&a), field(&b), field(&c));
        let fg = h1_inner(&f, &g).unwrap();
        prop_assert!((fg - h1_inner(&g, &f).unwrap()).abs() <= 1e-12 * (1.0 + fg.abs()));
        let lhs = h1_inner(&f.lin_comb(s, &g, 1.0).unwrap(), &h).unwrap();
        let rhs = s * h1_inner(&f, &h).unwrap() + h1_inner(&g, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!(h1_inner(&f, &f).unwrap() >= 0.0);
    }

    #[test]
    fn solve_inverts_laplacian(a in nonzero_coeffs()) {
        let f = field(&a);
        let back = laplacian_solve(&laplacian_apply(&f)).unwrap();
        prop_assert!(back.sub(&f).unwrap().sup_norm() <= 1e-9 * f.sup_norm());
    }

    #[test]
    fn retraction_is_scale_invariant(a in nonzero_coeffs(), t in 0.01..100.0f64) {
        let lambda = lambda_mid();
        let f = field(&a);
        let r1 = nehari_retract(&f, lambda).unwrap();
        let r2 = nehari_retract(&f.scaled(t), lambda).unwrap();
        prop_assert!(r1.sub(&r2).unwrap().sup_norm() <= 1e-10 * r1.sup_norm());
        let norm_sq = h1_norm(&r1).powi(2);
        prop_assert!(nehari_residual(&r1, lambda).unwrap().abs() <= 1e-10 * norm_sq);
        prop_assert!((nehari_factor(&r1, lambda).unwrap() - 1.0).abs() <= 1e-10);
        let e = energy(&r1, lambda).unwrap();
        prop_assert!((retracted_energy(&f, lambda).unwrap() - e.energy).abs() <= 1e-9 * e.energy);
        prop_assert!((e.energy - e.crit_mass / 4.0).abs() <= 1e-9 * e.energy);
    }

    #[test]
    fn energy_is_even_and_gradient_odd(a in coeffs()) {
        let lambda = lambda_mid();
        let f = field(&a);
        let neg = f.scaled(-1.0);
        prop_assert_eq!(energy(&f, lambda).unwrap().energy, energy(&neg, lambda).unwrap().energy);
        let g = gradient(&f, lambda).unwrap();
        let gn = gradient(&neg, lambda).unwrap();
        let flipped = g.scaled(-1.0);
        prop_assert_eq!(flipped.values(), gn.values());
    }

    #[test]
    fn retracted_energy_bounds_the_ray(a in nonzero_coeffs(), t in 0.05..5.0f64) {
        let lambda = lambda_mid();
        let f = field(&a);
        let top = retracted_energy(&f, lambda).unwrap();
        prop_assert!(energy(&f.scaled(t), lambda).unwrap().energy <= top * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_count_is_monotone(x in 2.001..60.0f64, dx in 0.0..20.0f64) {
        let s = spectrum();
        prop_assume!(x + dx < s.coverage_limit());
        let lo = spectral_position(x, s).unwrap();
        let hi = spectral_position(x + dx, s).unwrap();
        prop_assert!(lo.n <= hi.n);
    }

    #[test]
    fn csv_round_trip_is_exact(a in coeffs()) {
        let f = field(&a);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = Field::read_csv(grid(), 0, buf.as_slice()).unwrap();
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
        }
    }
}
