//! Ground state on the Nehari manifold, sampled test surfaces for the minimax
//! levels, and their threshold checks against one and two energy quanta.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bubbles::{
    capacity_minimizer, energy_quantum, instanton_profile, sobolev_constant, truncated_bubble,
    BubbleParams, CutoffParams, CutoffProfile, Sign,
};
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowClassification, FlowConfig, FlowTrace};
use crate::functional::{
    check_lambda, cone_distance_bounds, energy, nehari_residual, nehari_retract,
};
use crate::grid::{h1_inner, h1_norm, lift_radial, AxisymGrid, Field, Grid};
use crate::spectrum::{weighted_eigs, SpectrumResult};

/// Relative Nehari membership tolerance `|⟨∇I(v), v⟩| < tol·‖v‖²`.
pub const NEHARI_TOL: f64 = 1e-8;
/// Allowed mismatch between stored and recomputed thresholds.
pub const THRESHOLD_TOL: f64 = 1e-6;

/// Bubble widths, as fractions of the domain radius, tried in turn by [`ground_state`].
const RESTART_WIDTHS: [f64; 4] = [0.1, 0.2, 0.05, 0.3];

/// `((1/N)S^{N/2}, (2/N)S^{N/2})`, recomputed from the Sobolev constant.
pub fn thresholds(dimension: usize) -> Result<(f64, f64)> {
    let q = energy_quantum(dimension)?;
    Ok((q, 2.0 * q))
}

/// `2 S^{N/2}`, the bound on `∫|∇v|²` for critical points below two quanta.
pub fn euclidean_bound(dimension: usize) -> Result<f64> {
    Ok(2.0 * sobolev_constant(dimension)?.powf(dimension as f64 / 2.0))
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: Field,
    pub c0: f64,
    pub trace: FlowTrace,
    /// Number of restarts used before convergence.
    pub restarts: usize,
}

/// Positive ground state for `λ₀ < λ < λ₁`, see [`ground_state_signed`].
pub fn ground_state(grid: impl Into<Grid>, lambda: f64, cfg: &FlowConfig) -> Result<GroundState> {
    ground_state_signed(grid, lambda, cfg, Sign::Plus)
}

/// Runs the Nehari-projected flow from a retracted truncated bubble of the given
/// sign, restarting from wider and narrower bubbles until it converges to a
/// sign-definite critical point with `0 < c₀ < (1/N)S^{N/2}`.
pub fn ground_state_signed(
    grid: impl Into<Grid>,
    lambda: f64,
    cfg: &FlowConfig,
    sign: Sign,
) -> Result<GroundState> {
    let grid = grid.into();
    let params = grid.params();
    check_lambda(params, lambda)?;
    let lambda1 = weighted_eigs(grid.radial(), 0, 1)?.lambda1();
    if lambda >= lambda1 {
        return Err(Error::Domain(format!(
            "ground state needs λ < λ₁ = {lambda1}, got {lambda}"
        )));
    }
    let (quantum, _) = thresholds(params.dimension())?;
    let radius = params.ball_radius();
    let cut = CutoffParams::bump(0.9 * radius)?;
    let flow_cfg = FlowConfig {
        nehari_projection: true,
        ..cfg.clone()
    };
    let mut outcomes = Vec::new();
    for (restart, width) in RESTART_WIDTHS.iter().enumerate() {
        let bubble = BubbleParams::new(width * radius, 0.0, sign)?;
        let v0 = nehari_retract(&truncated_bubble(&bubble, &cut, &grid)?, lambda)?;
        let trace = run_flow(&v0, lambda, &flow_cfg)?;
        let c0 = trace.final_energy();
        let v = &trace.terminal;
        let definite = v.values().iter().all(|&x| sign.factor() * x >= 0.0);
        if trace.classification == FlowClassification::ConvergedCritical
            && definite
            && c0 > 0.0
            && c0 < quantum
        {
            return Ok(GroundState {
                field: trace.terminal.clone(),
                c0,
                trace,
                restarts: restart,
            });
        }
        outcomes.push(format!(
            "ε = {:.3}R: {:?}, energy {c0:.6e}, residual {:.3e}, sign-definite {definite}",
            width,
            trace.classification,
            trace.final_grad_norm()
        ));
    }
    Err(Error::Search(format!(
        "ground-state flow failed on every restart: {}",
        outcomes.join("; ")
    )))
}

/// Position of a sample on the test surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceParameter {
    /// Interpolation variable in `[0, 1]`.
    pub t: f64,
    /// Direction `±e_N` of the bubble axis.
    pub axis_sign: i8,
    /// `+1` on the upper hemisphere, `−1` on the antipodal copy.
    pub hemisphere: i8,
    /// Radial extension factor of the bubble part.
    pub scale: f64,
    /// Coefficient of the truncated first eigenfunction (joined surface only).
    pub xi: f64,
}

impl SurfaceParameter {
    pub fn antipode(&self) -> Self {
        Self {
            axis_sign: -self.axis_sign,
            hemisphere: -self.hemisphere,
            xi: -self.xi,
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceSample {
    pub parameter: SurfaceParameter,
    pub field: Field,
    pub energy_plus: f64,
    pub energy_minus: f64,
    pub total: f64,
    pub on_nehari_plus: bool,
    pub on_nehari_minus: bool,
    /// Node-wise `Σ|A_k B_k|` of the two constructed pieces.
    pub overlap: f64,
    /// `|I(A + B) − I(A) − I(B)|` for the two pieces.
    pub decoupling_error: f64,
    /// Every bubble piece passes the ε-resolution guard.
    pub resolved: bool,
}

/// Geometry of the sphere surface inside `B(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereOptions {
    /// Bubble support radius `r`; default `R/3`.
    pub r: Option<f64>,
    /// Bubble width; default `r/8`.
    pub epsilon: Option<f64>,
    /// Radius of the capacity hole; default chosen by halving.
    pub r0: Option<f64>,
    /// Outer radius of the capacity minimizer; default `r`.
    pub capacity_outer: Option<f64>,
    /// Number of values of `t` in `[0, 1]`.
    pub n_t: usize,
    /// Radius of the ball holding the surface; default the whole domain.
    pub ball: Option<f64>,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            r: None,
            epsilon: None,
            r0: None,
            capacity_outer: None,
            n_t: 17,
            ball: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereSurface {
    pub samples: Vec<SurfaceSample>,
    pub r: f64,
    pub epsilon: f64,
    pub r0: f64,
    /// `I(v₁)`, the shrunken bubble at the origin.
    pub shrunk_energy: f64,
    /// Largest `I(R((1−ψ)v₀(·+z)))` over the sampled shifts.
    pub truncated_max: f64,
    /// `max|H(½⁻) − H(½⁺)|` over both axis directions.
    pub seam_gap: f64,
    /// `max|H(p) + H(−p)|` over the sampled antipodal pairs.
    pub oddness_error: f64,
}

/// Builds the pieces of the sphere surface on one axisymmetric grid.
struct SphereBuilder {
    grid: Grid,
    lambda: f64,
    dim: usize,
    r: f64,
    epsilon: f64,
    cut: CutoffParams,
    one_minus_psi: Field,
}

impl SphereBuilder {
    /// Unit-free profile `φU_ε` rescaled to support radius `rho` and centred at `c` on the axis.
    fn shape(&self, rho: f64, c: f64) -> Field {
        let scale = self.r / rho;
        Field::from_fn(&self.grid, |x| {
            let d = x.dist_to_axis_point(c) * scale;
            self.cut.smooth_value(d) * instanton_profile(self.dim, self.epsilon, d)
        })
    }

    fn retract(&self, f: &Field) -> Result<Field> {
        nehari_retract(f, self.lambda)
    }

    /// `R(v₀(r·/ρ)(· − c))`, a shrunken bubble centred at `c`.
    fn moving(&self, rho: f64, c: f64) -> Result<Field> {
        self.retract(&self.shape(rho, c))
    }

    /// `R((1−ψ_{r₀}) v₀(· − c))`.
    fn truncated(&self, c: f64) -> Result<Field> {
        self.retract(&self.shape(self.r, c).mul(&self.one_minus_psi)?)
    }

    fn resolved(&self, rho: f64, c: f64) -> bool {
        let eps = self.epsilon * rho / self.r;
        self.grid.local_spacing(c.abs() + eps) <= 0.25 * eps
            && self.angular_spacing(c.abs()) <= 0.25 * eps
    }

    fn angular_spacing(&self, c: f64) -> f64 {
        match &self.grid {
            Grid::Axisym(g) => c * std::f64::consts::PI / g.n_theta() as f64,
            Grid::Radial(_) => 0.0,
        }
    }

    /// The two pieces `(A, B)` with `H = A − B` on the upper hemisphere, axis `+e_N`.
    fn pieces(&self, t: f64, r0: f64, upper_branch: bool) -> Result<(Field, Field, bool)> {
        let r = self.r;
        if upper_branch {
            let s = 2.0 - 2.0 * t;
            let rho = (1.0 - s) * r + s * r0;
            let c = 2.0 * r * (2.0 * t - 1.0);
            let a = self.moving(rho, c)?;
            let b = self.moving(r, -2.0 * r)?;
            Ok((a, b, self.resolved(rho, c) && self.resolved(r, -2.0 * r)))
        } else {
            let a = self.moving(r0, 0.0)?;
            let c = -4.0 * r * t;
            let b = self.truncated(c)?;
            Ok((a, b, self.resolved(r0, 0.0) && self.resolved(r, c)))
        }
    }

    fn sample(&self, t: f64, r0: f64, axis_sign: i8, hemisphere: i8) -> Result<SurfaceSample> {
        let (a, b, resolved) = self.pieces(t, r0, t >= 0.5)?;
        let upper = a.sub(&b)?;
        // Reflection through the origin: the grid is symmetric in z.
        let flip = axis_sign as f64 * hemisphere as f64;
        let oriented = if flip < 0.0 { reflect(&upper)? } else { upper };
        let field = if hemisphere < 0 {
            oriented.scaled(-1.0)
        } else {
            oriented
        };
        let overlap = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x * y).abs())
            .sum();
        let ea = energy(&a, self.lambda)?.energy;
        let eb = energy(&b, self.lambda)?.energy;
        let total = energy(&field, self.lambda)?.energy;
        let plus = field.positive_part();
        let minus = field.negative_part();
        let parameter = SurfaceParameter {
            t,
            axis_sign,
            hemisphere,
            scale: 1.0,
            xi: 0.0,
        };
        Ok(SurfaceSample {
            parameter,
            energy_plus: energy(&plus, self.lambda)?.energy,
            energy_minus: energy(&minus, self.lambda)?.energy,
            on_nehari_plus: on_nehari(&plus, self.lambda)?,
            on_nehari_minus: on_nehari(&minus, self.lambda)?,
            total,
            overlap,
            decoupling_error: (total - ea - eb).abs(),
            resolved,
            field,
        })
    }
}

fn on_nehari(v: &Field, lambda: f64) -> Result<bool> {
    let norm_sq = h1_norm(v).powi(2);
    Ok(norm_sq > 0.0 && nehari_residual(v, lambda)?.abs() < NEHARI_TOL * norm_sq)
}

/// `x ↦ f(−x)` on an axisymmetric grid.
fn reflect(f: &Field) -> Result<Field> {
    let Grid::Axisym(g) = f.grid() else {
        return Err(Error::Precondition(
            "reflection needs an axisymmetric grid".into(),
        ));
    };
    let m = g.n_theta();
    let mut values = vec![0.0; f.len()];
    for (k, x) in values.iter_mut().enumerate() {
        let (i, j) = (k / m, k % m);
        *x = f.values()[i * m + (m - 1 - j)];
    }
    Field::from_values(f.grid(), 0, values)
}

fn axisym_grid(grid: &Arc<AxisymGrid>) -> Grid {
    Grid::from(grid)
}

/// Samples the odd map `H` on `t ∈ [0, 1]`, both axis directions and both
/// hemispheres. For `t ≥ ½` it is a shrinking bubble at `2r(2t−1)θ` minus a
/// fixed bubble at `−2rθ`; for `t ≤ ½` the shrunken bubble `v₁` at the origin
/// minus `(1−ψ_{r₀})v₀(·+4rtθ)`. Every piece is retracted onto the Nehari manifold.
pub fn build_sphere_surface(
    grid: &Arc<AxisymGrid>,
    lambda: f64,
    opts: &SphereOptions,
) -> Result<SphereSurface> {
    let g = axisym_grid(grid);
    let params = g.params();
    check_lambda(params, lambda)?;
    if opts.n_t < 2 {
        return Err(Error::Config("the sphere surface needs n_t >= 2".into()));
    }
    let big_r = opts.ball.unwrap_or(params.ball_radius());
    let r = opts.r.unwrap_or(big_r / 3.0);
    if !(r > 0.0) || 3.0 * r > big_r * (1.0 + 1e-12) || big_r > params.ball_radius() * (1.0 + 1e-12)
    {
        return Err(Error::Precondition(format!(
            "bubble supports of radius {r} at offset ±2r leave the ball of radius {big_r}"
        )));
    }
    let epsilon = opts.epsilon.unwrap_or(r / 8.0);
    if !(epsilon > 0.0 && epsilon < r) {
        return Err(Error::Config(format!(
            "bubble width {epsilon} must lie in (0, r)"
        )));
    }
    let cap_outer = opts.capacity_outer.unwrap_or(r);
    let cut = CutoffParams::bump(r)?;
    let (quantum, _) = thresholds(params.dimension())?;
    let make = |r0: f64| -> Result<SphereBuilder> {
        let psi = capacity_minimizer(
            &CutoffParams::new(cap_outer, r0, CutoffProfile::Capacity)?,
            &g,
        )?;
        Ok(SphereBuilder {
            grid: g.clone(),
            lambda,
            dim: params.dimension(),
            r,
            epsilon,
            cut,
            one_minus_psi: psi.map_indexed(|_, x| 1.0 - x),
        })
    };
    let shifts: Vec<f64> = (0..=8).map(|k| -2.0 * r * k as f64 / 8.0).collect();
    let truncated_max = |b: &SphereBuilder| -> Result<f64> {
        let energies: Result<Vec<f64>> = shifts
            .par_iter()
            .map(|&c| b.truncated(c).and_then(|f| Ok(energy(&f, lambda)?.energy)))
            .collect();
        Ok(energies?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    };
    // The largest hole radius whose truncations all stay below one quantum.
    let (builder, r0, trunc_max) = match opts.r0 {
        Some(r0) => {
            let b = make(r0)?;
            let m = truncated_max(&b)?;
            (b, r0, m)
        }
        None => {
            let mut r0 = 0.5 * r;
            loop {
                let b = make(r0)?;
                let m = truncated_max(&b)?;
                if m < quantum || 0.5 * r0 < 4.0 * g.local_spacing(0.0) {
                    break (b, r0, m);
                }
                r0 *= 0.5;
            }
        }
    };
    let ts: Vec<f64> = (0..opts.n_t)
        .map(|i| i as f64 / (opts.n_t - 1) as f64)
        .collect();
    let mut params_list = Vec::new();
    for &t in &ts {
        for axis_sign in [1i8, -1] {
            for hemisphere in [1i8, -1] {
                params_list.push((t, axis_sign, hemisphere));
            }
        }
    }
    let samples: Result<Vec<SurfaceSample>> = params_list
        .par_iter()
        .map(|&(t, a, h)| builder.sample(t, r0, a, h))
        .collect();
    let samples = samples?;

    let seam_gap = {
        let (a1, b1, _) = builder.pieces(0.5, r0, true)?;
        let (a0, b0, _) = builder.pieces(0.5, r0, false)?;
        a1.sub(&b1)?.sub(&a0.sub(&b0)?)?.sup_norm()
    };
    let mut oddness_error: f64 = 0.0;
    for s in &samples {
        let anti = s.parameter.antipode();
        if let Some(o) = samples.iter().find(|o| o.parameter == anti) {
            oddness_error = oddness_error.max(s.field.add(&o.field)?.sup_norm());
        }
    }
    let shrunk_energy = energy(&builder.moving(r0, 0.0)?, lambda)?.energy;
    Ok(SphereSurface {
        samples,
        r,
        epsilon,
        r0,
        shrunk_energy,
        truncated_max: trunc_max,
        seam_gap,
        oddness_error,
    })
}

/// Geometry of the joined surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JoinedOptions {
    /// Radius of the hole cut out of the eigenfunction; default chosen by halving.
    pub r0: Option<f64>,
    /// Required fraction of `Q(e₁)/‖e₁‖²` kept by the truncated eigenfunction.
    pub q_margin: f64,
    /// Number of values of `ξ₁` in `[−ξ_max, ξ_max]`.
    pub n_xi: usize,
    pub xi_max: f64,
    /// Radial extension factors of the bubble part.
    pub scales: [f64; 4],
    /// Sphere surface placed inside `B(0, r₀)`.
    pub sphere: SphereOptions,
}

impl Default for JoinedOptions {
    fn default() -> Self {
        Self {
            r0: None,
            q_margin: 0.9,
            n_xi: 5,
            xi_max: 2.0,
            scales: [0.0, 0.5, 1.0, 1.5],
            sphere: SphereOptions {
                n_t: 5,
                ..SphereOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct JoinedSurface {
    pub samples: Vec<SurfaceSample>,
    pub r0: f64,
    /// `Q(e₁)/‖e₁‖²`.
    pub q_ratio_full: f64,
    /// `Q((1−ψ)e₁)/‖(1−ψ)e₁‖²`.
    pub q_ratio_truncated: f64,
    /// The inner sphere surface.
    pub sphere: SphereSurface,
    /// Largest `|I(H₀ + H⁰) − I(H₀) − I(H⁰)|`.
    pub decoupling_error: f64,
}

/// Samples `H₀(ξ₁) + sH⁰(θ)` for `λ₁ < λ < λ₂`: `H₀ = ξ₁(1−ψ_{r₀})e₁` vanishes on
/// `B(0, r₀)` and `H⁰` is the sphere surface built inside that ball.
pub fn build_joined_surface(
    grid: &Arc<AxisymGrid>,
    lambda: f64,
    spec: &SpectrumResult,
    opts: &JoinedOptions,
) -> Result<JoinedSurface> {
    let g = axisym_grid(grid);
    let params = g.params();
    check_lambda(params, lambda)?;
    let radial_e1 = &spec.eigenfields[0];
    if !Arc::ptr_eq(radial_e1.grid().radial(), grid.radial()) {
        return Err(Error::Structural(
            "spectrum was computed on a different radial grid".into(),
        ));
    }
    let lambda1 = spec.lambda1();
    let lambda2 = spec
        .lambdas_with_multiplicity()
        .get(1)
        .copied()
        .unwrap_or(f64::INFINITY);
    if !(lambda > lambda1 && lambda < lambda2) {
        return Err(Error::Domain(format!(
            "the joined surface with one eigenfunction needs λ₁ = {lambda1} < λ < λ₂ = {lambda2}, got {lambda}"
        )));
    }
    if opts.n_xi < 2 || !(opts.q_margin > 0.0 && opts.q_margin <= 1.0) {
        return Err(Error::Config(
            "joined surface needs n_xi >= 2 and q_margin in (0, 1]".into(),
        ));
    }
    let e1 = lift_radial(radial_e1, grid)?;
    let q_ratio = |f: &Field| -> Result<f64> {
        let e = energy(f, lambda)?;
        Ok(e.q_form / e.grad_sq)
    };
    let q_full = q_ratio(&e1)?;
    let radius = params.ball_radius();
    let truncate = |r0: f64| -> Result<Field> {
        let psi = capacity_minimizer(&CutoffParams::new(radius, r0, CutoffProfile::Capacity)?, &g)?;
        e1.mul(&psi.map_indexed(|_, x| 1.0 - x))
    };
    let (r0, h0_unit, q_trunc) = match opts.r0 {
        Some(r0) => {
            let f = truncate(r0)?;
            let q = q_ratio(&f)?;
            if !(q <= opts.q_margin * q_full) {
                return Err(Error::Precondition(format!(
                    "r₀ = {r0} is too large: truncated Q/‖·‖² = {q:.4e} exceeds {:.4e}; choose a smaller r₀",
                    opts.q_margin * q_full
                )));
            }
            (r0, f, q)
        }
        None => {
            let mut r0 = 0.25 * radius;
            loop {
                let f = truncate(r0)?;
                let q = q_ratio(&f)?;
                if q <= opts.q_margin * q_full {
                    break (r0, f, q);
                }
                r0 *= 0.5;
                if r0 < 4.0 * g.local_spacing(0.0) {
                    return Err(Error::Resolution(format!(
                        "no resolvable r₀ keeps Q < 0 on the truncated eigenfunction (last ratio {q:.4e})"
                    )));
                }
            }
        }
    };
    let h0_unit = h0_unit.scaled(1.0 / h1_norm(&h0_unit));
    let sphere_opts = SphereOptions {
        ball: Some(r0),
        ..opts.sphere
    };
    let sphere = build_sphere_surface(grid, lambda, &sphere_opts)?;

    let xis: Vec<f64> = (0..opts.n_xi)
        .map(|i| opts.xi_max * (2.0 * i as f64 / (opts.n_xi - 1) as f64 - 1.0))
        .collect();
    let mut jobs = Vec::new();
    for (si, s) in sphere.samples.iter().enumerate() {
        for &scale in &opts.scales {
            for &xi in &xis {
                jobs.push((si, scale, xi, s.parameter));
            }
        }
    }
    let samples: Result<Vec<SurfaceSample>> = jobs
        .par_iter()
        .map(|&(si, scale, xi, p)| {
            let inner = sphere.samples[si].field.scaled(scale);
            let outer = h0_unit.scaled(xi);
            let field = outer.add(&inner)?;
            let e_out = energy(&outer, lambda)?.energy;
            let e_in = energy(&inner, lambda)?.energy;
            let total = energy(&field, lambda)?.energy;
            let overlap = outer
                .values()
                .iter()
                .zip(inner.values())
                .map(|(x, y)| (x * y).abs())
                .sum();
            let plus = field.positive_part();
            let minus = field.negative_part();
            Ok(SurfaceSample {
                parameter: SurfaceParameter { scale, xi, ..p },
                energy_plus: energy(&plus, lambda)?.energy,
                energy_minus: energy(&minus, lambda)?.energy,
                on_nehari_plus: on_nehari(&plus, lambda)?,
                on_nehari_minus: on_nehari(&minus, lambda)?,
                total,
                overlap,
                decoupling_error: (total - e_out - e_in).abs(),
                resolved: sphere.samples[si].resolved,
                field,
            })
        })
        .collect();
    let samples = samples?;
    let decoupling_error = samples
        .iter()
        .map(|s| s.decoupling_error)
        .fold(0.0, f64::max);
    Ok(JoinedSurface {
        samples,
        r0,
        q_ratio_full: q_full,
        q_ratio_truncated: q_trunc,
        sphere,
        decoupling_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelEstimate {
    /// Smallest sign-definite critical value found, if any.
    pub c0: Option<f64>,
    pub surface_sup: f64,
    pub threshold_1: f64,
    pub threshold_2: f64,
    pub solution_energies: Vec<f64>,
    /// Whether each harvested solution changes sign.
    pub sign_changing: Vec<bool>,
    /// `∫|∇v|²` of each harvested solution.
    pub grad_sq: Vec<f64>,
}

impl LevelEstimate {
    /// Fails when the stored thresholds drift from the recomputed ones.
    pub fn check_thresholds(&self, dimension: usize) -> Result<()> {
        let (t1, t2) = thresholds(dimension)?;
        let drift = ((self.threshold_1 - t1).abs() / t1).max((self.threshold_2 - t2).abs() / t2);
        if drift > THRESHOLD_TOL {
            return Err(Error::Numerical(format!(
                "stored thresholds drift from recomputed values by {drift:.3e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub surface_sup: f64,
    /// `threshold_2 − surface_sup`.
    pub margin_2: f64,
    /// `threshold_1 − max(I(H⁺), I(H⁻))` per sample.
    pub margins_1: Vec<f64>,
    pub min_margin_1: f64,
    pub all_on_nehari: bool,
    pub all_resolved: bool,
    pub pass: bool,
}

/// Compares sampled energies with one and two quanta.
pub fn verify_thresholds(
    samples: &[SurfaceSample],
    levels: &LevelEstimate,
) -> Result<ThresholdReport> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Precondition("no surface samples".into()))?;
    levels.check_thresholds(first.field.params().dimension())?;
    let surface_sup = samples
        .iter()
        .map(|s| s.total)
        .fold(f64::NEG_INFINITY, f64::max);
    let margins_1: Vec<f64> = samples
        .iter()
        .map(|s| levels.threshold_1 - s.energy_plus.max(s.energy_minus))
        .collect();
    let min_margin_1 = margins_1.iter().copied().fold(f64::INFINITY, f64::min);
    let margin_2 = levels.threshold_2 - surface_sup;
    let all_on_nehari = samples
        .iter()
        .all(|s| s.on_nehari_plus && s.on_nehari_minus);
    let all_resolved = samples.iter().all(|s| s.resolved);
    Ok(ThresholdReport {
        surface_sup,
        margin_2,
        margins_1,
        min_margin_1,
        all_on_nehari,
        all_resolved,
        pass: margin_2 > 0.0 && min_margin_1 > 0.0,
    })
}

/// Level bookkeeping for a set of samples before any flow is run.
pub fn surface_levels(samples: &[SurfaceSample]) -> Result<LevelEstimate> {
    let first = samples
        .first()
        .ok_or_else(|| Error::Precondition("no surface samples".into()))?;
    let (threshold_1, threshold_2) = thresholds(first.field.params().dimension())?;
    Ok(LevelEstimate {
        c0: None,
        surface_sup: samples
            .iter()
            .map(|s| s.total)
            .fold(f64::NEG_INFINITY, f64::max),
        threshold_1,
        threshold_2,
        solution_energies: Vec::new(),
        sign_changing: Vec::new(),
        grad_sq: Vec::new(),
    })
}

/// Runs the flow from the `top_k` highest-energy samples and from the dominant
/// sign part of each, and collects the converged critical values.
pub fn refine_from_surface(
    samples: &[SurfaceSample],
    lambda: f64,
    cfg: &FlowConfig,
    top_k: usize,
) -> Result<LevelEstimate> {
    let mut levels = surface_levels(samples)?;
    let dim = samples[0].field.params().dimension();
    let bound = euclidean_bound(dim)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].total.total_cmp(&samples[a].total));
    let mut starts = Vec::new();
    for &i in order.iter().take(top_k) {
        let s = &samples[i];
        starts.push(s.field.clone());
        let part = if s.energy_plus >= s.energy_minus {
            s.field.positive_part()
        } else {
            s.field.negative_part()
        };
        if !part.is_zero() {
            starts.push(part);
        }
    }
    let traces: Result<Vec<FlowTrace>> = starts
        .par_iter()
        .map(|v0| run_flow(v0, lambda, cfg))
        .collect();
    for trace in traces? {
        if trace.classification != FlowClassification::ConvergedCritical {
            continue;
        }
        let v = &trace.terminal;
        let e = energy(v, lambda)?;
        if e.grad_sq >= bound {
            return Err(Error::Numerical(format!(
                "harvested solution violates ∫|∇v|² < 2S^(N/2): {:.6e} >= {bound:.6e}",
                e.grad_sq
            )));
        }
        let cone = cone_distance_bounds(v)?;
        let changes_sign = cone.to_p.1 > 0.0 && cone.to_minus_p.1 > 0.0;
        if !changes_sign {
            levels.c0 = Some(levels.c0.map_or(e.energy, |c: f64| c.min(e.energy)));
        }
        levels.solution_energies.push(e.energy);
        levels.sign_changing.push(changes_sign);
        levels.grad_sq.push(e.grad_sq);
    }
    Ok(levels)
}

/// One row of the energy-quantum probe `I(v* + φU_ε) − I(v*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumRow {
    pub epsilon: f64,
    /// `I(v* + φU_ε) − I(v*)`.
    pub excess: f64,
    /// `I(φU_ε)` on its own.
    pub single: f64,
    /// `excess − single`, the overlap correction.
    pub interaction: f64,
    /// `|excess − (1/N)S^{N/2}| / ((1/N)S^{N/2})`.
    pub relative_error: f64,
    pub resolved: bool,
}

/// Energy added by superposing a truncated instanton at the origin on `v_star`.
pub fn energy_quantum_probe(
    v_star: &Field,
    lambda: f64,
    epsilons: &[f64],
    cut: &CutoffParams,
) -> Result<Vec<QuantumRow>> {
    let grid = v_star.grid();
    let params = grid.params();
    let (quantum, _) = thresholds(params.dimension())?;
    let base = energy(v_star, lambda)?.energy;
    epsilons
        .par_iter()
        .map(|&epsilon| {
            let bubble = truncated_bubble(&BubbleParams::at_origin(epsilon)?, cut, grid)?;
            let excess = energy(&v_star.add(&bubble)?, lambda)?.energy - base;
            let single = energy(&bubble, lambda)?.energy;
            Ok(QuantumRow {
                epsilon,
                excess,
                single,
                interaction: excess - single,
                relative_error: (excess - quantum).abs() / quantum,
                resolved: crate::bubbles::check_resolution(grid, epsilon, 0.0).is_ok(),
            })
        })
        .collect()
}

/// H-inner product of a field with its reflection, used to test parity.
pub fn reflection_overlap(v: &Field) -> Result<f64> {
    h1_inner(v, &reflect(v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::grid::{build_axisym_grid, build_radial_grid, Grading};

    fn gs_setup(n: usize) -> (Arc<crate::grid::RadialGrid>, f64) {
        let p = ModelParams::new(4, 0.5).unwrap();
        let g = build_radial_grid(p, n, Grading::Uniform).unwrap();
        let s = weighted_eigs(&g, 0, 1).unwrap();
        (g, s.spectral_shift + 0.5 * s.mus[0])
    }

    fn gs_cfg() -> FlowConfig {
        FlowConfig {
            step: 1.0,
            max_steps: 2000,
            ..FlowConfig::default()
        }
    }

    #[test]
    fn ground_state_is_positive_and_below_quantum() {
        let (g, lambda) = gs_setup(256);
        let gs = ground_state(&g, lambda, &gs_cfg()).unwrap();
        assert!(gs.c0 > 0.0 && gs.c0 < energy_quantum(4).unwrap());
        assert!(gs.field.values().iter().all(|&x| x >= 0.0));
        assert!(gs.trace.final_grad_norm() < 1e-6);
        assert!(energy(&gs.field, lambda).unwrap().grad_sq < euclidean_bound(4).unwrap());
    }

    #[test]
    fn ground_state_is_odd() {
        let (g, lambda) = gs_setup(128);
        let plus = ground_state(&g, lambda, &gs_cfg()).unwrap();
        let minus = ground_state_signed(&g, lambda, &gs_cfg(), Sign::Minus).unwrap();
        assert_eq!(plus.c0, minus.c0);
        assert!(plus.field.add(&minus.field).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn ground_state_rejects_lambda_above_first_eigenvalue() {
        let (g, _) = gs_setup(128);
        let l1 = weighted_eigs(&g, 0, 1).unwrap().lambda1();
        assert!(matches!(
            ground_state(&g, l1 * 1.01, &gs_cfg()),
            Err(Error::Domain(_))
        ));
    }

    fn sphere_grid() -> (Arc<AxisymGrid>, f64) {
        let p = ModelParams::new(5, 0.6).unwrap();
        let g = build_axisym_grid(p, 160, Grading::Uniform, 48).unwrap();
        let s = weighted_eigs(g.radial(), 0, 1).unwrap();
        (g, s.spectral_shift + 0.5 * s.mus[0])
    }

    #[test]
    fn sphere_surface_structure() {
        let (g, lambda) = sphere_grid();
        let opts = SphereOptions {
            n_t: 5,
            r0: Some(0.05),
            ..SphereOptions::default()
        };
        let s = build_sphere_surface(&g, lambda, &opts).unwrap();
        assert_eq!(s.samples.len(), 20);
        assert_eq!(s.oddness_error, 0.0);
        assert!(s.seam_gap == 0.0, "{}", s.seam_gap);
        for x in &s.samples {
            assert_eq!(x.overlap, 0.0);
            assert!(x.on_nehari_plus && x.on_nehari_minus);
            let prod: f64 = x
                .field
                .positive_part()
                .values()
                .iter()
                .zip(x.field.negative_part().values())
                .map(|(a, b)| a * b)
                .sum();
            assert_eq!(prod, 0.0);
        }
        let bad = SphereOptions {
            r: Some(0.25),
            ..opts
        };
        assert!(matches!(
            build_sphere_surface(&g, lambda, &bad),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn reflection_is_an_involution() {
        let (g, _) = sphere_grid();
        let f = Field::from_fn(&g, |x| (x.z + 0.1 * x.s) * (0.36 - x.r * x.r));
        let back = reflect(&reflect(&f).unwrap()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(reflection_overlap(&f).unwrap() < 0.0);
    }

    #[test]
    fn level_provenance_is_checked() {
        let (g, lambda) = sphere_grid();
        let opts = SphereOptions {
            n_t: 2,
            r0: Some(0.05),
            ..SphereOptions::default()
        };
        let s = build_sphere_surface(&g, lambda, &opts).unwrap();
        let mut levels = surface_levels(&s.samples).unwrap();
        assert!(verify_thresholds(&s.samples, &levels).is_ok());
        levels.threshold_1 *= 1.0 + 1e-5;
        assert!(matches!(
            verify_thresholds(&s.samples, &levels),
            Err(Error::Numerical(_))
        ));
        assert!(verify_thresholds(&[], &levels).is_err());
    }
}
