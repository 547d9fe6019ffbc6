//! The acceptance suite. Every criterion is computed from scratch with fixed
//! parameters and compared against independent oracles where one exists.

use std::sync::Arc;

use critflow::bubbles::{
    bubble_asymptotics, energy_quantum, instanton_norms, sobolev_constant, CutoffParams,
};
use critflow::flow::{flow_step_with, run_flow, FlowClassification, FlowConfig, Integrator};
use critflow::functional::{energy, gradient, k0, nehari_retract, retracted_energy};
use critflow::minimax::{
    build_joined_surface, build_sphere_surface, energy_quantum_probe, euclidean_bound,
    ground_state, surface_levels, verify_thresholds, JoinedOptions, SphereOptions,
};
use critflow::spectrum::weighted_eigs;
use critflow::{
    build_axisym_grid, build_radial_grid, h1_inner, h1_norm, hyperbolic_energy, integrate,
    transform_u_to_v, Field, Grading, ModelParams, RadialGrid, Weight,
};
use rand::Rng;
use serde::Serialize;

use crate::random::{rng, smooth_bump};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// The quantity compared with the threshold.
    pub measured: f64,
    pub threshold: f64,
    /// Signed distance to failure; positive when passing.
    pub margin: f64,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {:<28} measured {:.6e} threshold {:.6e} margin {:+.3e}  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.threshold,
            self.margin,
            self.detail
        )
    }
}

type Outcome = Result<CriterionResult, critflow::Error>;

pub const NAMES: [&str; 12] = [
    "conformal identity",
    "spectral shift",
    "K0 contraction",
    "gradient correctness",
    "dissipation identity",
    "Nehari machinery",
    "instanton identities",
    "bubble asymptotics",
    "ground state",
    "nonexistence trend",
    "sphere and joined surfaces",
    "synthetic energy quantum",
];

/// Runs criterion `id` (1-based). Errors inside a criterion count as failures.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let outcome = match id {
        1 => conformal_identity(seed),
        2 => spectral_shift(),
        3 => k0_contraction(seed),
        4 => gradient_correctness(seed),
        5 => dissipation_identity(seed),
        6 => nehari_machinery(seed),
        7 => instanton_identities(),
        8 => bubble_asymptotics_criterion(),
        9 => ground_state_criterion(),
        10 => nonexistence_trend(seed),
        11 => surfaces(),
        12 => synthetic_quantum(),
        _ => Err(critflow::Error::Config(format!(
            "no acceptance criterion {id}"
        ))),
    };
    outcome.unwrap_or_else(|e| CriterionResult {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        pass: false,
        measured: f64::NAN,
        threshold: f64::NAN,
        margin: f64::NAN,
        detail: format!("error: {e}"),
    })
}

pub fn run_all(ids: &[u8], seed: u64) -> Vec<CriterionResult> {
    ids.iter().map(|&id| run_criterion(id, seed)).collect()
}

fn result(
    id: u8,
    pass: bool,
    measured: f64,
    threshold: f64,
    margin: f64,
    detail: String,
) -> Outcome {
    Ok(CriterionResult {
        id,
        name: NAMES[id as usize - 1],
        pass,
        measured,
        threshold,
        margin,
        detail,
    })
}

fn radial(dim: usize, radius: f64, n: usize) -> Result<Arc<RadialGrid>, critflow::Error> {
    build_radial_grid(ModelParams::new(dim, radius)?, n, Grading::Uniform)
}

/// The two model cases used throughout.
const CASES: [(usize, f64); 2] = [(4, 0.5), (5, 0.6)];

fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::INFINITY, f64::min)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// `|H(u) − (‖v‖² + λ₀|ϱv|²)| / H(u)` for `v = ϱ^{(N−2)/2}u`.
fn conformal_defect(u: &Field) -> f64 {
    let v = transform_u_to_v(u);
    let h = hyperbolic_energy(u);
    let rhs = h1_norm(&v).powi(2) + u.params().spectral_shift() * integrate(&v, Weight::Rho2, 2.0);
    (h - rhs).abs() / h
}

fn conformal_identity(seed: u64) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut orders = Vec::new();
    for (dim, radius) in CASES {
        let fine = radial(dim, radius, 512)?;
        let coarse: Vec<_> = [64, 128, 256]
            .iter()
            .map(|&n| radial(dim, radius, n))
            .collect::<Result<_, _>>()?;
        let mut r = rng(seed ^ dim as u64);
        for _ in 0..20 {
            // Same smooth profile on every grid.
            let state = r.clone();
            worst = worst.max(conformal_defect(&smooth_bump(&fine, &mut r, true)));
            let defects: Vec<f64> = coarse
                .iter()
                .map(|g| conformal_defect(&smooth_bump(g, &mut state.clone(), true)))
                .collect();
            for w in defects.windows(2) {
                orders.push((w[0] / w[1]).log2());
            }
        }
    }
    let order = min(orders.iter().copied());
    let pass = worst < 1e-6 && order >= 1.5;
    result(
        1,
        pass,
        worst,
        1e-6,
        (1e-6 - worst).min(order - 1.5),
        format!("max relative defect at n = 512 over 40 fields; min self-convergence order {order:.3} (need >= 1.5)"),
    )
}

/// First zero of the Bessel function J₁.
const J11: f64 = 3.831_705_970_207_512;

fn spectral_shift() -> Outcome {
    let p = ModelParams::new(4, 0.5)?;
    let g = build_radial_grid(p, 512, Grading::Uniform)?;
    let s = weighted_eigs(&g, 2, 4)?;
    let shift_err = max(s
        .lambdas
        .iter()
        .zip(&s.mus)
        .map(|(l, m)| (l - m - p.spectral_shift()).abs() / l));
    let positive = s.mus.iter().all(|&m| m > 0.0) && s.lambda1() > s.spectral_shift;
    let small = build_radial_grid(ModelParams::new(4, 0.05)?, 512, Grading::Uniform)?;
    let mu1 = weighted_eigs(&small, 0, 1)?.mus[0];
    let oracle = J11 * J11 / (4.0 * 0.05 * 0.05);
    let rel = (mu1 - oracle).abs() / oracle;
    let pass = shift_err <= 1e-14 && positive && rel < 0.02;
    result(
        2,
        pass,
        rel,
        0.02,
        0.02 - rel,
        format!(
            "small-ball μ₁ = {mu1:.4} vs Bessel {oracle:.4}; max |λ−μ−λ₀|/λ = {shift_err:.1e}; μ > 0 and λ₁ > λ₀: {positive}"
        ),
    )
}

fn k0_contraction(seed: u64) -> Outcome {
    let p = ModelParams::new(4, 0.5)?;
    let g = build_radial_grid(p, 512, Grading::Uniform)?;
    let s = weighted_eigs(&g, 2, 1)?;
    let lambda = 0.5 * (s.spectral_shift + s.lambda1());
    let bound = (lambda - s.spectral_shift) / (s.lambda1() - s.spectral_shift);
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mode = i % 3;
        let v = smooth_bump(&g, &mut r, false).with_mode(mode)?;
        let phi = smooth_bump(&g, &mut r, false).with_mode(mode)?;
        let num = h1_norm(&k0(&v, lambda)?.sub(&k0(&phi, lambda)?)?);
        worst = worst.max(num / h1_norm(&v.sub(&phi)?));
    }
    let limit = bound * (1.0 + 1e-6);
    result(
        3,
        worst <= limit,
        worst,
        limit,
        limit - worst,
        "max ‖K₀v − K₀φ‖/‖v − φ‖ over 100 pairs in modes 0..2 vs (λ−λ₀)/(λ₁−λ₀)".into(),
    )
}

fn gradient_correctness(seed: u64) -> Outcome {
    let mut orders = Vec::new();
    let mut worst_rel: f64 = 0.0;
    for (dim, radius) in CASES {
        let g = radial(dim, radius, 256)?;
        let s = weighted_eigs(&g, 0, 1)?;
        let lambda = 0.5 * (s.spectral_shift + s.lambda1());
        let mut r = rng(seed.wrapping_add(dim as u64));
        for _ in 0..10 {
            let v = smooth_bump(&g, &mut r, false);
            let w = smooth_bump(&g, &mut r, false);
            let exact = h1_inner(&gradient(&v, lambda)?, &w)?;
            let central = |h: f64| -> Result<f64, critflow::Error> {
                let plus = energy(&v.lin_comb(1.0, &w, h)?, lambda)?.energy;
                let minus = energy(&v.lin_comb(1.0, &w, -h)?, lambda)?.energy;
                Ok((plus - minus) / (2.0 * h))
            };
            let e1 = (central(0.04)? - exact).abs();
            let e2 = (central(0.02)? - exact).abs();
            orders.push((e1 / e2).log2());
            worst_rel = worst_rel.max(e2 / exact.abs().max(1e-300));
        }
    }
    let order = min(orders.iter().copied());
    result(
        4,
        order >= 1.9,
        order,
        1.9,
        order - 1.9,
        format!("min Richardson order over 20 pairs (h = 0.04, 0.02); max relative error at h = 0.02: {worst_rel:.2e}"),
    )
}

fn dissipation_identity(seed: u64) -> Outcome {
    let p = ModelParams::new(4, 0.5)?;
    let g = build_radial_grid(p, 256, Grading::Uniform)?;
    let s = weighted_eigs(&g, 0, 1)?;
    let lambda = 0.5 * (s.spectral_shift + s.lambda1());
    let v0 = smooth_bump(&g, &mut rng(seed), false).scaled(3.0);
    let mut medians = Vec::new();
    for h in [1e-2, 1e-3] {
        let mut v = v0.clone();
        let mut rel = Vec::new();
        for _ in 0..50 {
            let e0 = energy(&v, lambda)?.energy;
            let gsq = h1_norm(&gradient(&v, lambda)?).powi(2);
            let next = flow_step_with(&v, lambda, h, Integrator::ExplicitEuler)?;
            let e1 = energy(&next, lambda)?.energy;
            rel.push(((e0 - e1) / h - gsq).abs() / gsq);
            v = next;
        }
        medians.push((h, median(rel)));
    }
    let order = (medians[0].1 / medians[1].1).log10();
    let worst_ratio = max(medians.iter().map(|(h, m)| m / (5.0 * h)));
    let pass = worst_ratio <= 1.0 && order >= 0.9;
    result(
        5,
        pass,
        worst_ratio,
        1.0,
        (1.0 - worst_ratio).min(order - 0.9),
        format!(
            "median |ΔE/h − ‖∇I‖²|/‖∇I‖²: {:.3e} (h = 1e-2), {:.3e} (h = 1e-3); measured = max median/(5h); order {order:.3}",
            medians[0].1, medians[1].1
        ),
    )
}

/// Golden-section maximisation of `f` on `[a, b]`, independent of the library's.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs() {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn nehari_machinery(seed: u64) -> Outcome {
    let p = ModelParams::new(4, 0.5)?;
    let g = build_radial_grid(p, 256, Grading::Uniform)?;
    let s = weighted_eigs(&g, 0, 1)?;
    let lambda = 0.5 * (s.spectral_shift + s.lambda1());
    let n = p.dimension() as f64;
    let mut r = rng(seed);
    let (mut fixed, mut scale, mut ray, mut on) = (0f64, 0f64, 0f64, 0f64);
    for _ in 0..50 {
        let v = smooth_bump(&g, &mut r, false);
        let rv = nehari_retract(&v, lambda)?;
        let norm = h1_norm(&rv);
        fixed = fixed.max(h1_norm(&nehari_retract(&rv, lambda)?.sub(&rv)?) / norm);
        let t = r.random_range(0.1..10.0);
        scale = scale.max(h1_norm(&nehari_retract(&v.scaled(t), lambda)?.sub(&rv)?) / norm);
        let top = retracted_energy(&v, lambda)?;
        let t_star = h1_norm(&rv) / h1_norm(&v);
        let best = golden_max(
            |t| {
                energy(&v.scaled(t), lambda)
                    .map(|e| e.energy)
                    .unwrap_or(f64::NAN)
            },
            0.0,
            3.0 * t_star,
        );
        ray = ray.max((top - best).abs() / top);
        let e = energy(&rv, lambda)?;
        on = on.max((e.energy - e.crit_mass / n).abs() / e.energy);
    }
    let pass = fixed <= 1e-10 && scale <= 1e-10 && ray <= 1e-8 && on <= 1e-8;
    let measured = max([fixed / 1e-10, scale / 1e-10, ray / 1e-8, on / 1e-8]);
    result(
        6,
        pass,
        measured,
        1.0,
        1.0 - measured,
        format!(
            "50 fields: fixed point {fixed:.1e}, scale invariance {scale:.1e} (tol 1e-10); ray max {ray:.1e}, I = |v|^2*/N {on:.1e} (tol 1e-8); measured = worst error/tolerance"
        ),
    )
}

/// `Γ(k/2)` in closed form.
fn gamma_half_oracle(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        // Γ(m + ½) = (2m)! √π / (4^m m!)
        let m = (k - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 0..m {
            v *= i as f64 + 0.5;
        }
        v
    }
}

/// Talenti's closed form `S = πN(N−2) (Γ(N/2)/Γ(N))^{2/N}`.
fn talenti(dim: usize) -> f64 {
    let n = dim as f64;
    std::f64::consts::PI
        * n
        * (n - 2.0)
        * (gamma_half_oracle(dim) / gamma_half_oracle(2 * dim)).powf(2.0 / n)
}

fn instanton_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for dim in [4usize, 5] {
        let norms = instanton_norms(dim)?;
        let target = talenti(dim).powf(dim as f64 / 2.0);
        let errs = [
            (norms.grad_sq - target).abs() / target,
            (norms.crit_mass - target).abs() / target,
            (norms.grad_sq - norms.crit_mass).abs() / target,
        ];
        worst = worst.max(max(errs));
        parts.push(format!(
            "N = {dim}: ‖U‖² = {:.8}, |U|^2* = {:.8}, S^(N/2) = {target:.8}",
            norms.grad_sq, norms.crit_mass
        ));
    }
    result(7, worst < 1e-3, worst, 1e-3, 1e-3 - worst, parts.join("; "))
}

/// ε-sweeps over half a decade, chosen where the grid resolves the bubble
/// and the O(ε²) signal dominates the discretisation bias.
fn sweep(dim: usize) -> Vec<f64> {
    let top = if dim == 4 { 0.005 } else { 0.01 };
    (0..6)
        .map(|k| top * 10f64.powf(-0.5 * k as f64 / 5.0))
        .collect()
}

fn bubble_asymptotics_criterion() -> Outcome {
    let mut worst_spread: f64 = 0.0;
    let mut all_below = true;
    let mut all_positive = true;
    let mut parts = Vec::new();
    for (dim, radius) in CASES {
        let p = ModelParams::new(dim, radius)?;
        let g = build_radial_grid(p, 2048, Grading::OriginRefined { stretch: 10.0 })?;
        let s = weighted_eigs(&g, 0, 1)?;
        let lambda = s.spectral_shift + 0.5 * (s.lambda1() - s.spectral_shift);
        let cut = CutoffParams::bump(0.9 * radius)?;
        let rows = bubble_asymptotics(&sweep(dim), lambda, &cut, &(&g).into())?;
        let sc = sobolev_constant(dim)?;
        all_below &= rows.iter().all(|r| r.quotient < sc);
        all_positive &= rows.iter().all(|r| r.scaled_slope > 0.0);
        let slopes: Vec<f64> = rows.iter().map(|r| r.scaled_slope).collect();
        let spread = max(slopes.iter().copied()) / min(slopes.iter().copied());
        let literal: Vec<f64> = rows.iter().map(|r| r.literal_slope).collect();
        let literal_spread = max(literal.iter().copied()) / min(literal.iter().copied());
        worst_spread = worst_spread.max(spread);
        parts.push(format!(
            "N = {dim}: ε ∈ [{:.2e}, {:.2e}], slope {:.2}..{:.2} (spread {spread:.3}), literal-ε spread {literal_spread:.2}",
            rows.last().unwrap().epsilon,
            rows[0].epsilon,
            min(slopes.iter().copied()),
            max(slopes.iter().copied())
        ));
    }
    let pass = all_below && all_positive && worst_spread <= 1.2;
    result(
        8,
        pass,
        worst_spread,
        1.2,
        1.2 - worst_spread,
        format!(
            "max/min of (S − Q)/δ, δ = ε² (N = 5) and δ|ln δ| (N = 4); Q < S: {all_below}; {}",
            parts.join("; ")
        ),
    )
}

fn ground_state_cfg() -> FlowConfig {
    FlowConfig {
        step: 1.0,
        max_steps: 20000,
        nehari_projection: true,
        ..FlowConfig::default()
    }
}

fn ground_state_criterion() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (dim, radius) in CASES {
        let g = radial(dim, radius, 512)?;
        let s = weighted_eigs(&g, 0, 1)?;
        let quantum = energy_quantum(dim)?;
        let bound = euclidean_bound(dim)?;
        for frac in [0.25, 0.5, 0.75] {
            let lambda = s.spectral_shift + frac * (s.lambda1() - s.spectral_shift);
            let gs = ground_state(&g, lambda, &ground_state_cfg())?;
            let grad_sq = energy(&gs.field, lambda)?.grad_sq;
            let residual = gs.trace.final_grad_norm();
            let definite = gs.field.values().iter().all(|&x| x >= 0.0);
            pass &=
                residual < 1e-6 && definite && gs.c0 > 0.0 && gs.c0 < quantum && grad_sq < bound;
            worst = worst.max(gs.c0 / quantum);
            parts.push(format!(
                "N={dim} {:.0}%: c₀ = {:.4}, ‖v‖² = {grad_sq:.2}, residual {residual:.1e}",
                frac * 100.0,
                gs.c0
            ));
        }
    }
    result(
        9,
        pass,
        worst,
        1.0,
        1.0 - worst,
        format!("measured = max c₀/((1/N)S^(N/2)); {}", parts.join("; ")),
    )
}

fn nonexistence_trend(seed: u64) -> Outcome {
    let p = ModelParams::new(4, 0.5)?;
    let g = build_radial_grid(p, 256, Grading::Uniform)?;
    let s = weighted_eigs(&g, 0, 1)?;
    let lambda = 1.01 * s.lambda1();
    let cfg = FlowConfig {
        step: 1.0,
        max_steps: 20000,
        ..FlowConfig::default()
    };
    let mut r = rng(seed);
    let mut found = 0usize;
    let mut outcomes = Vec::new();
    let mut best_residual = f64::INFINITY;
    for _ in 0..10 {
        let v0 = smooth_bump(&g, &mut r, true).scaled(0.05);
        let trace = run_flow(&v0, lambda, &cfg)?;
        let positive = trace.terminal.values().iter().all(|&x| x >= 0.0);
        let residual = min(trace.grad_norms.iter().copied());
        best_residual = best_residual.min(residual);
        if trace.classification == FlowClassification::ConvergedCritical
            && positive
            && !trace.terminal.is_zero()
        {
            found += 1;
        }
        let label = match trace.classification {
            FlowClassification::ConvergedCritical => "converged",
            FlowClassification::CollapsedToZero => "collapsed",
            FlowClassification::BelowEnergyFloor => "blow-up",
            FlowClassification::LeftNehariRegion => "left Nehari region",
            FlowClassification::BubblingSuspected => "bubbling",
            FlowClassification::BudgetExhausted => "budget",
        };
        outcomes.push(if positive {
            label.to_string()
        } else {
            format!("{label} (left cone)")
        });
    }
    outcomes.sort();
    outcomes.dedup_by(|a, b| a == b);
    result(
        10,
        found == 0,
        found as f64,
        0.0,
        0.0 - found as f64,
        format!(
            "λ = 1.01λ₁, 10 positive starts; positive critical points found: {found}; outcomes: {}; smallest residual seen {best_residual:.2e}",
            outcomes.join(", ")
        ),
    )
}

fn surfaces() -> Outcome {
    let p = ModelParams::new(5, 0.6)?;
    let g = build_axisym_grid(p, 768, Grading::OriginRefined { stretch: 8.0 }, 256)?;
    let s = weighted_eigs(g.radial(), 1, 2)?;
    let lambda = s.spectral_shift + 0.9 * (s.lambda1() - s.spectral_shift);
    let sphere = build_sphere_surface(
        &g,
        lambda,
        &SphereOptions {
            n_t: 9,
            ..SphereOptions::default()
        },
    )?;
    let levels = surface_levels(&sphere.samples)?;
    let report = verify_thresholds(&sphere.samples, &levels)?;
    let disjoint = sphere.samples.iter().all(|x| x.overlap == 0.0);
    let odd = sphere.oddness_error == 0.0;
    let sphere_pass = report.min_margin_1 > 0.0 && odd && disjoint;

    let lambda2 = s.lambdas_with_multiplicity()[1];
    let lambda_j = s.lambda1() + 0.5 * (lambda2 - s.lambda1());
    let joined = build_joined_surface(&g, lambda_j, &s, &JoinedOptions::default())?;
    let jl = surface_levels(&joined.samples)?;
    let jr = verify_thresholds(&joined.samples, &jl)?;
    let eig_only = max(joined
        .samples
        .iter()
        .filter(|x| x.parameter.scale == 0.0)
        .map(|x| x.total));
    let joined_pass = jr.margin_2 > 0.0 && eig_only <= 1e-12 * jl.threshold_1;

    let margin = report.min_margin_1.min(jr.margin_2);
    result(
        11,
        sphere_pass && joined_pass,
        report.min_margin_1,
        0.0,
        margin,
        format!(
            "N = 5, R = 0.6, 768×256 grid. Sphere (λ at 90% of (λ₀,λ₁), r₀ = {:.2e}): min margin to (1/N)S^(N/2) = {:.4} (threshold {:.4}), I(v₁) = {:.4}, max truncation {:.4}, oddness {:.1e}, disjoint {disjoint}, seam {:.1e}, resolved {}. Joined (λ midway in (λ₁,λ₂), r₀ = {:.3e}): sup = {:.4} vs (2/N)S^(N/2) = {:.4} (margin {:.4}), eigenspace-only max {eig_only:.2e}, decoupling error {:.1e}",
            sphere.r0,
            report.min_margin_1,
            levels.threshold_1,
            sphere.shrunk_energy,
            sphere.truncated_max,
            sphere.oddness_error,
            sphere.seam_gap,
            report.all_resolved,
            joined.r0,
            jr.surface_sup,
            jl.threshold_2,
            jr.margin_2,
            joined.decoupling_error
        ),
    )
}

fn synthetic_quantum() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (dim, radius) in CASES {
        let p = ModelParams::new(dim, radius)?;
        let g = build_radial_grid(p, 2048, Grading::OriginRefined { stretch: 10.0 })?;
        let s = weighted_eigs(&g, 0, 1)?;
        let lambda = s.spectral_shift + 0.5 * (s.lambda1() - s.spectral_shift);
        let gs = ground_state(&g, lambda, &ground_state_cfg())?;
        let eps: Vec<f64> = (0..10).map(|k| 0.02 * 0.5f64.powi(k)).collect();
        let rows: Vec<_> =
            energy_quantum_probe(&gs.field, lambda, &eps, &CutoffParams::bump(0.9 * radius)?)?
                .into_iter()
                .filter(|r| r.resolved)
                .collect();
        let last = rows
            .last()
            .ok_or_else(|| critflow::Error::Resolution("no resolved ε".into()))?;
        let tail = &rows[rows.len().saturating_sub(4)..];
        let decreasing = tail
            .windows(2)
            .all(|w| w[1].relative_error <= w[0].relative_error);
        pass &= decreasing && last.relative_error < 0.05;
        worst = worst.max(last.relative_error);
        parts.push(format!(
            "N = {dim}: ε = {:.2e} gives excess {:.4} vs {:.4} (rel {:.2e}), overlap correction {:.3e}; error decreasing over last 4: {decreasing}",
            last.epsilon,
            last.excess,
            energy_quantum(dim)?,
            last.relative_error,
            last.interaction
        ));
    }
    result(12, pass, worst, 0.05, 0.05 - worst, parts.join("; "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn talenti_oracle_values() {
        // S₃ = 3(π/2)^{4/3}
        assert!((talenti(3) - 3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0)).abs() < 1e-12);
        assert!((gamma_half_oracle(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert_eq!(gamma_half_oracle(8), 6.0);
    }

    #[test]
    fn golden_section_finds_parabola_top() {
        let top = golden_max(|t| 3.0 - (t - 1.3).powi(2), 0.0, 4.0);
        assert!((top - 3.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_criterion_fails_cleanly() {
        let r = run_criterion(13, 0);
        assert!(!r.pass && r.detail.contains("no acceptance criterion"));
    }

    #[test]
    fn sweeps_span_half_a_decade() {
        for dim in [4, 5] {
            let s = sweep(dim);
            assert!((s[0] / s[s.len() - 1] - 10f64.sqrt()).abs() < 1e-12);
        }
    }
}
