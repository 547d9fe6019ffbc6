//! Aubin–Talenti instantons, cutoffs, capacity minimizers, the Sobolev
//! constant and the Rayleigh quotient of truncated bubbles.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{check_lambda, energy};
use crate::geometry::ModelParams;
use crate::grid::{
    h1_inner, h1_norm, integrate, AxisymGrid, Field, Grading, Grid, RadialGrid, Weight,
};
use crate::linalg::SymTridiag;
use crate::quadrature::{self, sphere_area};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Concentration scale and position (on the symmetry axis) of a bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub epsilon: f64,
    /// Signed position on the `x_N` axis; 0 is the origin.
    pub center_offset: f64,
    pub sign: Sign,
}

impl BubbleParams {
    pub fn new(epsilon: f64, center_offset: f64, sign: Sign) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "bubble epsilon must be > 0, got {epsilon}"
            )));
        }
        if !center_offset.is_finite() {
            return Err(Error::Config("bubble offset must be finite".into()));
        }
        Ok(Self {
            epsilon,
            center_offset,
            sign,
        })
    }

    pub fn at_origin(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0, Sign::Plus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// 1 on the inner ball, quintic smoothstep down to 0 at the outer radius.
    SmoothBump,
    /// Discrete capacity minimizer of the inner ball relative to the outer one.
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub profile: CutoffProfile,
}

impl CutoffParams {
    pub fn new(outer_radius: f64, inner_radius: f64, profile: CutoffProfile) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius && outer_radius.is_finite()) {
            return Err(Error::Precondition(format!(
                "cutoff radii need 0 < r0 < r, got r0 = {inner_radius}, r = {outer_radius}"
            )));
        }
        Ok(Self {
            outer_radius,
            inner_radius,
            profile,
        })
    }

    /// Smooth bump with flat part on the inner half.
    pub fn bump(outer_radius: f64) -> Result<Self> {
        Self::new(outer_radius, 0.5 * outer_radius, CutoffProfile::SmoothBump)
    }

    /// Value of the smooth bump at distance `d` from its centre.
    pub fn smooth_value(&self, d: f64) -> f64 {
        if d <= self.inner_radius {
            1.0
        } else if d >= self.outer_radius {
            0.0
        } else {
            let s = (self.outer_radius - d) / (self.outer_radius - self.inner_radius);
            s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }
}

/// `[N(N−2)]^{(N−2)/4} (ε/(ε² + d²))^{(N−2)/2}` at distance `d` from the centre.
pub fn instanton_profile(dimension: usize, epsilon: f64, d: f64) -> f64 {
    let n = dimension as f64;
    (n * (n - 2.0)).powf((n - 2.0) / 4.0)
        * (epsilon / (epsilon * epsilon + d * d)).powf((n - 2.0) / 2.0)
}

fn center_distance(grid: &Grid, offset: f64) -> Result<impl Fn(crate::grid::NodePoint) -> f64> {
    if !grid.is_axisym() && offset != 0.0 {
        return Err(Error::Precondition(
            "off-centre bubbles need an axisymmetric grid".into(),
        ));
    }
    Ok(move |x: crate::grid::NodePoint| x.dist_to_axis_point(offset))
}

/// The instanton sampled on the grid (zero on the boundary nodes).
pub fn instanton(params: &BubbleParams, grid: impl Into<Grid>) -> Result<Field> {
    let grid = grid.into();
    let dim = grid.params().dimension();
    let dist = center_distance(&grid, params.center_offset)?;
    let s = params.sign.factor();
    let eps = params.epsilon;
    Ok(Field::from_fn(&grid, |x| {
        s * instanton_profile(dim, eps, dist(x))
    }))
}

/// `‖U_{1,0}‖²` and `|U_{1,0}|_{2*}^{2*}` on ℝ^N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstantonNorms {
    pub grad_sq: f64,
    pub crit_mass: f64,
}

/// Truncation radius, in units of ε, of the quadrature grid for the instanton norms.
const NORM_CUTOFF: f64 = 40.0;
const NORM_GRID: usize = 4096;

/// Finite-volume integrals of `U_ε` over `B(0, R)` with `R = NORM_CUTOFF·ε`,
/// using the same stencil and quadrature as every field in the toolkit.
fn instanton_norms_on_grid(dim: usize, n: usize) -> Result<InstantonNorms> {
    let radius = 0.9;
    let eps = radius / NORM_CUTOFF;
    let grid = RadialGrid::new(
        ModelParams::new(dim, radius)?,
        n,
        Grading::OriginRefined { stretch: 4.0 },
    )?;
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| instanton_profile(dim, eps, r))
        .collect();
    let grad_sq = grid.weighted_dirichlet(&values, 0, &|_| 1.0);
    let p = 2.0 * dim as f64 / (dim as f64 - 2.0);
    let crit_mass = values
        .iter()
        .zip(grid.weights())
        .map(|(u, w)| w * u.powf(p))
        .sum();
    Ok(InstantonNorms { grad_sq, crit_mass })
}

/// Contributions of `r > NORM_CUTOFF` (in units of ε = 1), integrated in `t = R/r`.
fn instanton_tails(dim: usize) -> InstantonNorms {
    let n = dim as f64;
    let p = 2.0 * n / (n - 2.0);
    let c = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
    let area = sphere_area(dim - 1);
    let big_r = NORM_CUTOFF;
    let grad = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let r = big_r / t;
        let du = c * (n - 2.0) * r * (1.0 + r * r).powf(-n / 2.0);
        du * du * r.powf(n - 1.0) * big_r / (t * t)
    };
    let mass = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let r = big_r / t;
        (c * (1.0 + r * r).powf(-(n - 2.0) / 2.0)).powf(p) * r.powf(n - 1.0) * big_r / (t * t)
    };
    InstantonNorms {
        grad_sq: area * quadrature::integrate(grad, 0.0, 1.0, 16, 12),
        crit_mass: area * quadrature::integrate(mass, 0.0, 1.0, 16, 12),
    }
}

fn compute_instanton_norms(dim: usize) -> Result<InstantonNorms> {
    let coarse = instanton_norms_on_grid(dim, NORM_GRID)?;
    let fine = instanton_norms_on_grid(dim, 2 * NORM_GRID)?;
    let tail = instanton_tails(dim);
    // Second-order Richardson extrapolation of the truncated integrals.
    let extrapolate = |a: f64, b: f64| (4.0 * b - a) / 3.0;
    Ok(InstantonNorms {
        grad_sq: extrapolate(coarse.grad_sq, fine.grad_sq) + tail.grad_sq,
        crit_mass: extrapolate(coarse.crit_mass, fine.crit_mass) + tail.crit_mass,
    })
}

static NORM_CACHE: Mutex<BTreeMap<usize, InstantonNorms>> = Mutex::new(BTreeMap::new());

/// Tail-corrected norms of the unit instanton on ℝ^N (cached per dimension).
pub fn instanton_norms(dimension: usize) -> Result<InstantonNorms> {
    if dimension < 3 {
        return Err(Error::Domain(format!(
            "the Sobolev constant needs N >= 3, got {dimension}"
        )));
    }
    if let Some(v) = NORM_CACHE
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .get(&dimension)
    {
        return Ok(*v);
    }
    let norms = compute_instanton_norms(dimension)?;
    NORM_CACHE
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(dimension, norms);
    Ok(norms)
}

/// Best Sobolev constant `S = ‖U‖² / |U|_{2*}²`, from the instanton quadrature.
pub fn sobolev_constant(dimension: usize) -> Result<f64> {
    let m = instanton_norms(dimension)?;
    let p = 2.0 * dimension as f64 / (dimension as f64 - 2.0);
    Ok(m.grad_sq / m.crit_mass.powf(2.0 / p))
}

/// The energy carried by one bubble, `(1/N) S^{N/2}`.
pub fn energy_quantum(dimension: usize) -> Result<f64> {
    let n = dimension as f64;
    Ok(sobolev_constant(dimension)?.powf(n / 2.0) / n)
}

/// Discretely harmonic ψ with ψ = 1 on `B(0, r0)` and ψ = 0 outside `B(0, r)`.
pub fn capacity_minimizer(cut: &CutoffParams, grid: impl Into<Grid>) -> Result<Field> {
    let grid = grid.into();
    let radial = grid.radial();
    if cut.outer_radius > radial.params().ball_radius() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "capacity annulus radius {} exceeds the domain radius",
            cut.outer_radius
        )));
    }
    let nodes = radial.nodes();
    let first = nodes.partition_point(|&r| r <= cut.inner_radius);
    let end = nodes.partition_point(|&r| r < cut.outer_radius);
    if first == 0 || end <= first {
        return Err(Error::Precondition(format!(
            "no grid nodes resolve the annulus {} < r < {}",
            cut.inner_radius, cut.outer_radius
        )));
    }
    let a = radial.stiffness(0);
    let sub = SymTridiag::new(a.diag[first..end].to_vec(), a.off[first..end - 1].to_vec());
    let mut rhs = vec![0.0; end - first];
    rhs[0] = -a.off[first - 1];
    let inner = sub.solve(&rhs)?;
    let mut values = vec![0.0; nodes.len()];
    values[..first].iter_mut().for_each(|x| *x = 1.0);
    values[first..end].copy_from_slice(&inner);
    let psi = Field::from_values(Grid::Radial(Arc::clone(radial)), 0, values)?;
    match &grid {
        Grid::Radial(_) => Ok(psi),
        Grid::Axisym(g) => crate::grid::lift_radial(&psi, g),
    }
}

/// The cutoff profile of `cut`, centred at the origin.
pub fn cutoff_field(cut: &CutoffParams, grid: impl Into<Grid>) -> Result<Field> {
    let grid = grid.into();
    match cut.profile {
        CutoffProfile::SmoothBump => Ok(Field::from_fn(&grid, |x| cut.smooth_value(x.r))),
        CutoffProfile::Capacity => capacity_minimizer(cut, grid),
    }
}

/// `φ U_{ε,y}` with φ the cutoff centred at the bubble centre `y`.
pub fn truncated_bubble(
    params: &BubbleParams,
    cut: &CutoffParams,
    grid: impl Into<Grid>,
) -> Result<Field> {
    let grid = grid.into();
    let reach = params.center_offset.abs() + cut.outer_radius;
    let radius = grid.params().ball_radius();
    if reach > radius * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "bubble support B({}, {}) leaves the domain of radius {radius}",
            params.center_offset, cut.outer_radius
        )));
    }
    let dim = grid.params().dimension();
    let dist = center_distance(&grid, params.center_offset)?;
    let s = params.sign.factor();
    let eps = params.epsilon;
    match cut.profile {
        CutoffProfile::SmoothBump => Ok(Field::from_fn(&grid, |x| {
            let d = dist(x);
            s * cut.smooth_value(d) * instanton_profile(dim, eps, d)
        })),
        CutoffProfile::Capacity => {
            if params.center_offset != 0.0 {
                return Err(Error::Precondition(
                    "capacity cutoffs are centred at the origin".into(),
                ));
            }
            let psi = capacity_minimizer(cut, &grid)?;
            psi.mul(&instanton(params, &grid)?)
        }
    }
}

/// Refuses concentration scales the grid cannot resolve: the radial spacing at
/// distance ε from the bubble centre must not exceed ε/4.
pub fn check_resolution(grid: &Grid, epsilon: f64, center: f64) -> Result<()> {
    let h = grid.local_spacing(epsilon + center.abs());
    if h > 0.25 * epsilon {
        return Err(Error::Resolution(format!(
            "ε = {epsilon:.3e} is under-resolved (local spacing {h:.3e} > ε/4); refine the grid or use an origin-refined grading"
        )));
    }
    Ok(())
}

/// `(‖φ_ε‖² − (λ−λ₀)|ϱφ_ε|₂²) / |φ_ε|_{2*}²` for the truncated bubble at the origin.
pub fn bubble_rayleigh(
    epsilon: f64,
    lambda: f64,
    cut: &CutoffParams,
    grid: impl Into<Grid>,
) -> Result<f64> {
    let grid = grid.into();
    check_lambda(grid.params(), lambda)?;
    check_resolution(&grid, epsilon, 0.0)?;
    let phi = truncated_bubble(&BubbleParams::at_origin(epsilon)?, cut, &grid)?;
    let e = energy(&phi, lambda)?;
    Ok(e.q_form / e.crit_mass.powf(2.0 / grid.params().critical_exponent()))
}

/// One row of an ε-sweep of the truncated-bubble quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub epsilon: f64,
    pub quotient: f64,
    pub s_minus_quotient: f64,
    /// `(S − quotient)/δ` (N ≥ 5) or `(S − quotient)/(δ|ln δ|)` (N = 4) with `δ = ε²`,
    /// the parameter in which the classical expansion is linear.
    pub scaled_slope: f64,
    /// `(S − quotient)/ε` or `(S − quotient)/(ε|ln ε|)` taken literally in ε.
    pub literal_slope: f64,
}

pub fn slope_normalizer(dimension: usize, x: f64) -> f64 {
    if dimension == 4 {
        x * x.ln().abs()
    } else {
        x
    }
}

pub fn bubble_asymptotics(
    epsilons: &[f64],
    lambda: f64,
    cut: &CutoffParams,
    grid: &Grid,
) -> Result<Vec<AsymptoticRow>> {
    let dim = grid.params().dimension();
    grid.params().require_solver_dimension()?;
    let s = sobolev_constant(dim)?;
    epsilons
        .iter()
        .map(|&eps| {
            let q = bubble_rayleigh(eps, lambda, cut, grid)?;
            let gap = s - q;
            Ok(AsymptoticRow {
                epsilon: eps,
                quotient: q,
                s_minus_quotient: gap,
                scaled_slope: gap / slope_normalizer(dim, eps * eps),
                literal_slope: gap / slope_normalizer(dim, eps),
            })
        })
        .collect()
}

/// Least-squares fit of a field by a single instanton.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BubbleFit {
    /// `min ‖v − (±U_{ε,y})‖`, or +∞ when the fit failed.
    pub dist: f64,
    pub eps_hat: f64,
    pub offset_hat: f64,
    pub diagnostic: Option<String>,
}

/// H-distance from `v` to the bubble manifold `±{U_{ε,y}}` (`y` on the axis).
pub fn distance_to_bubble_manifold(v: &Field, sign: Sign) -> Result<BubbleFit> {
    if v.is_zero() {
        return Err(Error::Domain("bubble fit of the zero field".into()));
    }
    let grid = v.grid().clone();
    let radius = grid.params().ball_radius();
    let v_sq = h1_norm(v).powi(2);
    let objective = |eps: f64, y: f64| -> f64 {
        let b = BubbleParams {
            epsilon: eps,
            center_offset: y,
            sign,
        };
        match instanton(&b, &grid).and_then(|u| Ok((h1_inner(v, &u)?, h1_norm(&u).powi(2)))) {
            Ok((c, uu)) => (v_sq - 2.0 * c + uu).max(0.0),
            Err(_) => f64::INFINITY,
        }
    };
    let eps_lo = (2.0 * grid.radial().min_spacing()).max(1e-8 * radius);
    let eps_hi = 2.0 * radius;
    let offsets: Vec<f64> = if grid.is_axisym() {
        (-8..=8).map(|i| 0.1 * radius * i as f64).collect()
    } else {
        vec![0.0]
    };
    let n_eps = 48;
    let log_lo = eps_lo.ln();
    let log_step = (eps_hi.ln() - log_lo) / (n_eps - 1) as f64;
    let mut best = (f64::INFINITY, eps_lo, 0.0);
    for i in 0..n_eps {
        let eps = (log_lo + i as f64 * log_step).exp();
        for &y in &offsets {
            let f = objective(eps, y);
            if f < best.0 {
                best = (f, eps, y);
            }
        }
    }
    if !best.0.is_finite() {
        return Ok(BubbleFit {
            dist: f64::INFINITY,
            eps_hat: f64::NAN,
            offset_hat: f64::NAN,
            diagnostic: Some("no admissible instanton on the scan lattice".into()),
        });
    }
    // Alternating golden-section refinement in log ε and offset.
    let (mut f_best, mut eps, mut y) = best;
    let mut log_width = log_step;
    let mut y_width = if grid.is_axisym() { 0.1 * radius } else { 0.0 };
    for _ in 0..6 {
        let le = golden_min(
            |t| objective(t.exp(), y),
            eps.ln() - log_width,
            eps.ln() + log_width,
            40,
        );
        eps = le.exp();
        if y_width > 0.0 {
            y = golden_min(|t| objective(eps, t), y - y_width, y + y_width, 40);
        }
        f_best = objective(eps, y);
        log_width *= 0.5;
        y_width *= 0.5;
    }
    Ok(BubbleFit {
        dist: f_best.sqrt(),
        eps_hat: eps,
        offset_hat: y,
        diagnostic: None,
    })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Axisymmetric grid whose radial part is `radial`.
pub fn axisym_over(radial: &Arc<RadialGrid>, n_theta: usize) -> Result<Arc<AxisymGrid>> {
    AxisymGrid::new(Arc::clone(radial), n_theta).map(Arc::new)
}

/// `(1/N)|U|_{2*}^{2*}` of a sampled field, the energy a Nehari element of this shape carries.
pub fn crit_mass_energy(v: &Field) -> f64 {
    let params = v.params();
    integrate(v, Weight::One, params.critical_exponent()) / params.dimension() as f64
}
