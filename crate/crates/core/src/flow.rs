//! Discrete negative gradient flow `∂v/∂t = −v + K(v)` with dissipation
//! bookkeeping, cone monitoring and limit classification.

use serde::{Deserialize, Serialize};

use crate::bubbles::{distance_to_bubble_manifold, energy_quantum, BubbleFit, Sign};
use crate::error::{Error, Result};
use crate::functional::{cone_distance_bounds, energy, gradient, k_total, nehari_factor};
use crate::grid::{h1_inner, h1_norm, Field};
use crate::spectrum::SpectrumResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// `v ← e^{−h} v + (1 − e^{−h}) K(v)`, exact for the linear part.
    ExpEuler,
    /// `v ← v − h ∇I(v)`.
    ExplicitEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub step: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub zero_tol: f64,
    pub energy_floor: f64,
    /// Width of the monitored tubes around ±P.
    pub alpha: f64,
    /// Sublevel monitoring threshold; diagnostics only.
    pub d_lambda: f64,
    pub integrator: Integrator,
    /// Rescale onto the Nehari manifold after every step. Fixed points are still
    /// exactly the critical points, and mountain-pass levels become minima.
    pub nehari_projection: bool,
    /// Concentration growth factor that arms the bubbling test.
    pub bubbling_growth: f64,
    /// Steps without gradient progress that count as a stall.
    pub stall_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 0.5,
            max_steps: 5000,
            grad_tol: 1e-6,
            zero_tol: 1e-3,
            energy_floor: -1e6,
            alpha: 0.1,
            d_lambda: 0.0,
            integrator: Integrator::ExpEuler,
            nehari_projection: false,
            bubbling_growth: 10.0,
            stall_steps: 100,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!(
                "flow step must be > 0, got {}",
                self.step
            )));
        }
        if !(self.grad_tol > 0.0) || !(self.zero_tol > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::Config(
                "flow tolerances and alpha must be > 0".into(),
            ));
        }
        if !(self.d_lambda >= 0.0) {
            return Err(Error::Config("d_lambda must be >= 0".into()));
        }
        if !(self.bubbling_growth > 1.0) || self.stall_steps == 0 {
            return Err(Error::Config(
                "bubbling_growth must exceed 1 and stall_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClassification {
    ConvergedCritical,
    CollapsedToZero,
    BubblingSuspected,
    BudgetExhausted,
    /// Energy dropped below `energy_floor` (finite-time blow-up of the continuous flow).
    BelowEnergyFloor,
    /// With Nehari projection: the quadratic form turned non-positive, so the
    /// iterate could not be rescaled onto the manifold.
    LeftNehariRegion,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub cone_lower: Vec<f64>,
    pub cone_upper: Vec<f64>,
    /// `sup|v| / ‖v‖`.
    pub concentration: Vec<f64>,
    pub terminal: Field,
    pub classification: FlowClassification,
    pub bubble_fit: Option<BubbleFit>,
}

impl FlowTrace {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }

    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norms.last().unwrap()
    }

    /// Writes `t,energy,grad_norm,cone_lower,cone_upper,concentration` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,energy,grad_norm,cone_lower,cone_upper,concentration")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                self.times[i],
                self.energies[i],
                self.grad_norms[i],
                self.cone_lower[i],
                self.cone_upper[i],
                self.concentration[i]
            )?;
        }
        Ok(())
    }
}

/// One exponential-Euler step.
pub fn flow_step(v: &Field, lambda: f64, h: f64) -> Result<Field> {
    flow_step_with(v, lambda, h, Integrator::ExpEuler)
}

pub fn flow_step_with(v: &Field, lambda: f64, h: f64, integrator: Integrator) -> Result<Field> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("flow step must be > 0, got {h}")));
    }
    match integrator {
        Integrator::ExpEuler => {
            let decay = (-h).exp();
            v.lin_comb(decay, &k_total(v, lambda)?, -(-h).exp_m1())
        }
        Integrator::ExplicitEuler => v.lin_comb(1.0, &gradient(v, lambda)?, -h),
    }
}

/// Effective step along `−∇I` for the chosen integrator.
fn gradient_step(cfg: &FlowConfig) -> f64 {
    match cfg.integrator {
        Integrator::ExpEuler => -(-cfg.step).exp_m1(),
        Integrator::ExplicitEuler => cfg.step,
    }
}

fn concentration(v: &Field) -> f64 {
    let n = h1_norm(v);
    if n > 0.0 {
        v.sup_norm() / n
    } else {
        0.0
    }
}

/// Runs the flow from `v0`; see [`run_flow_with_limit_basis`].
pub fn run_flow(v0: &Field, lambda: f64, cfg: &FlowConfig) -> Result<FlowTrace> {
    run_flow_with_limit_basis(v0, lambda, cfg, &[])
}

/// Runs the flow. When bubbling is suspected the weak limit is estimated by the
/// H-projection of the iterate onto `limit_basis` (assumed H-orthonormal), and
/// the remainder is compared with the bubble manifold.
pub fn run_flow_with_limit_basis(
    v0: &Field,
    lambda: f64,
    cfg: &FlowConfig,
    limit_basis: &[Field],
) -> Result<FlowTrace> {
    cfg.validate()?;
    let tau = gradient_step(cfg);
    let mut v = if cfg.nehari_projection {
        v0.scaled(nehari_factor(v0, lambda)?)
    } else {
        v0.clone()
    };
    let mut trace = FlowTrace {
        times: Vec::new(),
        energies: Vec::new(),
        grad_norms: Vec::new(),
        cone_lower: Vec::new(),
        cone_upper: Vec::new(),
        concentration: Vec::new(),
        terminal: v.clone(),
        classification: FlowClassification::BudgetExhausted,
        bubble_fit: None,
    };
    let mut best_grad = f64::INFINITY;
    let mut last_progress = 0usize;
    let mut last_fit: Option<f64> = None;
    for step in 0..=cfg.max_steps {
        let e = energy(&v, lambda)?;
        let g = gradient(&v, lambda)?;
        let gn = h1_norm(&g);
        let cone = cone_distance_bounds(&v)?;
        let conc = concentration(&v);
        trace.times.push(step as f64 * cfg.step);
        trace.energies.push(e.energy);
        trace.grad_norms.push(gn);
        trace.cone_lower.push(cone.lower);
        trace.cone_upper.push(cone.upper);
        trace.concentration.push(conc);

        let norm = e.grad_sq.sqrt();
        if norm < cfg.zero_tol {
            trace.classification = FlowClassification::CollapsedToZero;
            break;
        }
        if gn < cfg.grad_tol {
            trace.classification = FlowClassification::ConvergedCritical;
            break;
        }
        if e.energy < cfg.energy_floor || !e.energy.is_finite() {
            trace.classification = FlowClassification::BelowEnergyFloor;
            break;
        }
        if gn < 0.99 * best_grad {
            best_grad = gn;
            last_progress = step;
        }
        let c0 = trace.concentration[0];
        let stalled = step - last_progress > cfg.stall_steps;
        if stalled
            && c0 > 0.0
            && conc > cfg.bubbling_growth * c0
            && (step - last_progress) % cfg.stall_steps == 1
        {
            let mut rest = v.clone();
            for b in limit_basis {
                if b.mode() == v.mode() {
                    rest = rest.lin_comb(1.0, b, -h1_inner(&v, b)?)?;
                }
            }
            let sign = if cone.side == crate::functional::ConeSide::P {
                Sign::Plus
            } else {
                Sign::Minus
            };
            let fit = distance_to_bubble_manifold(&rest, sign)?;
            let rel = fit.dist / h1_norm(&rest).max(f64::MIN_POSITIVE);
            let shrinking = last_fit.is_some_and(|prev| rel < prev);
            last_fit = Some(rel);
            trace.bubble_fit = Some(fit);
            if shrinking {
                trace.classification = FlowClassification::BubblingSuspected;
                break;
            }
        }
        if step == cfg.max_steps {
            break;
        }
        let next = v.lin_comb(1.0, &g, -tau)?;
        v = if cfg.nehari_projection {
            match nehari_factor(&next, lambda) {
                Ok(t) => next.scaled(t),
                Err(Error::Precondition(_)) | Err(Error::Domain(_)) => {
                    trace.terminal = next;
                    trace.classification = FlowClassification::LeftNehariRegion;
                    return Ok(trace);
                }
                Err(e) => return Err(e),
            }
        } else {
            next
        };
    }
    trace.terminal = v;
    Ok(trace)
}

/// Outcome of [`cone_invariance_probe`].
#[derive(Debug, Clone, Serialize)]
pub struct ConeProbeReport {
    pub alpha: f64,
    pub initial_upper: f64,
    pub max_upper: f64,
    /// `max_upper ≤ α(1 + slack)`.
    pub stayed_in_tube: bool,
    /// Upper bound non-increasing step to step, within `slack`.
    pub non_increasing: bool,
    pub classification: FlowClassification,
}

/// Relative slack allowed for discrete invariance of the cone tube.
pub const CONE_SLACK: f64 = 1e-9;

/// Runs the flow from a field inside the α-tube around P (or −P) and tracks
/// the upper bound on the distance to that cone.
pub fn cone_invariance_probe(
    v0: &Field,
    lambda: f64,
    spectrum: &SpectrumResult,
    cfg: &FlowConfig,
) -> Result<ConeProbeReport> {
    let l1 = spectrum.lambda1();
    if !(lambda < l1) {
        return Err(Error::Domain(format!(
            "cone invariance needs λ < λ₁ = {l1}, got {lambda}"
        )));
    }
    let b = cone_distance_bounds(v0)?;
    if b.upper > cfg.alpha {
        return Err(Error::Precondition(format!(
            "initial field is not in the α-tube: upper bound {} > α = {}",
            b.upper, cfg.alpha
        )));
    }
    let side = b.side;
    let trace = run_flow(v0, lambda, cfg)?;
    // Follow the cone the probe started next to, not whichever is nearer later.
    let mut uppers = Vec::with_capacity(trace.times.len());
    let mut v = if cfg.nehari_projection {
        v0.scaled(nehari_factor(v0, lambda)?)
    } else {
        v0.clone()
    };
    let tau = gradient_step(cfg);
    for _ in 0..trace.times.len() {
        let c = cone_distance_bounds(&v)?;
        uppers.push(if side == crate::functional::ConeSide::P {
            c.to_p.1
        } else {
            c.to_minus_p.1
        });
        v = v.lin_comb(1.0, &gradient(&v, lambda)?, -tau)?;
        if cfg.nehari_projection {
            match nehari_factor(&v, lambda) {
                Ok(t) => v = v.scaled(t),
                Err(_) => break,
            }
        }
    }
    let max_upper = uppers.iter().cloned().fold(0.0, f64::max);
    let scale = cfg.alpha.max(f64::MIN_POSITIVE);
    let non_increasing = uppers.windows(2).all(|w| w[1] <= w[0] + CONE_SLACK * scale);
    Ok(ConeProbeReport {
        alpha: cfg.alpha,
        initial_upper: uppers[0],
        max_upper,
        stayed_in_tube: max_upper <= cfg.alpha * (1.0 + CONE_SLACK),
        non_increasing,
        classification: trace.classification,
    })
}

/// Palais–Smale style summary of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct PsReport {
    /// Cone lower bounds stayed ≥ α/2 along the whole run.
    pub sign_changing: bool,
    pub min_cone_lower: f64,
    /// Mean energy over the last 10% of the run.
    pub plateau_energy: f64,
    /// `(1/N) S^{N/2}`.
    pub quantum: f64,
    /// Plateau energy in units of the quantum.
    pub plateau_in_quanta: f64,
    /// Plateau strictly below one quantum.
    pub below_quantum: bool,
    pub collapsed: bool,
}

pub fn ps_diagnostics(trace: &FlowTrace, alpha: f64) -> Result<PsReport> {
    let dim = trace.terminal.params().dimension();
    let quantum = energy_quantum(dim)?;
    let min_cone_lower = trace
        .cone_lower
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let tail = (trace.energies.len() / 10).max(1);
    let plateau_energy = trace.energies[trace.energies.len() - tail..]
        .iter()
        .sum::<f64>()
        / tail as f64;
    Ok(PsReport {
        sign_changing: min_cone_lower >= 0.5 * alpha,
        min_cone_lower,
        plateau_energy,
        quantum,
        plateau_in_quanta: plateau_energy / quantum,
        below_quantum: plateau_energy < quantum,
        collapsed: trace.classification == FlowClassification::CollapsedToZero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use crate::grid::{build_radial_grid, Grading, RadialGrid};
    use crate::spectrum::weighted_eigs;
    use std::sync::Arc;

    fn setup() -> (Arc<RadialGrid>, SpectrumResult) {
        let p = ModelParams::new(4, 0.5).unwrap();
        let g = build_radial_grid(p, 200, Grading::Uniform).unwrap();
        let s = weighted_eigs(&g, 1, 2).unwrap();
        (g, s)
    }

    #[test]
    fn small_data_decays_below_lambda1() {
        let (_, s) = setup();
        let lambda = 2.0 + 0.5 * s.mus[0];
        let v = s.eigenfields[0].scaled(1e-3);
        let w = flow_step(&v, lambda, 0.5).unwrap();
        assert!(h1_norm(&w) < h1_norm(&v));
        let cfg = FlowConfig {
            step: 1.0,
            max_steps: 2000,
            ..FlowConfig::default()
        };
        let t = run_flow(&v, lambda, &cfg).unwrap();
        assert_eq!(t.classification, FlowClassification::CollapsedToZero);
    }

    #[test]
    fn step_consistency_with_gradient() {
        let (g, s) = setup();
        let lambda = 2.0 + 0.5 * s.mus[0];
        let v = Field::from_fn(&g, |x| 30.0 * (0.25 - x.r * x.r));
        let grad = gradient(&v, lambda).unwrap();
        for integ in [Integrator::ExpEuler, Integrator::ExplicitEuler] {
            let h = 1e-6;
            let w = flow_step_with(&v, lambda, h, integ).unwrap();
            let d = w
                .lin_comb(1.0 / h, &v, -1.0 / h)
                .unwrap()
                .add(&grad)
                .unwrap();
            assert!(h1_norm(&d) < 1e-4 * h1_norm(&grad));
        }
    }

    #[test]
    fn oddness_is_exact() {
        let (g, s) = setup();
        let lambda = 2.0 + 0.5 * s.mus[0];
        let v = Field::from_fn(&g, |x| 30.0 * (0.25 - x.r * x.r) * (1.0 - 3.0 * x.r));
        let cfg = FlowConfig {
            max_steps: 20,
            ..FlowConfig::default()
        };
        let a = run_flow(&v, lambda, &cfg).unwrap();
        let b = run_flow(&v.scaled(-1.0), lambda, &cfg).unwrap();
        assert_eq!(a.energies, b.energies);
        for (x, y) in a.terminal.values().iter().zip(b.terminal.values()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn positive_data_stays_in_cone() {
        let (g, s) = setup();
        let lambda = 2.0 + 0.5 * s.mus[0];
        let v = Field::from_fn(&g, |x| 10.0 * (0.25 - x.r * x.r));
        let cfg = FlowConfig {
            max_steps: 30,
            ..FlowConfig::default()
        };
        let r = cone_invariance_probe(&v, lambda, &s, &cfg).unwrap();
        assert_eq!(r.max_upper, 0.0);
        assert!(r.stayed_in_tube);
        assert!(matches!(
            cone_invariance_probe(&v, s.lambda1() + 0.1, &s, &cfg),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let (g, s) = setup();
        let v = Field::from_fn(&g, |x| 0.25 - x.r * x.r);
        let cfg = FlowConfig {
            step: 0.0,
            ..FlowConfig::default()
        };
        assert!(matches!(
            run_flow(&v, s.lambda1() - 0.1, &cfg),
            Err(Error::Config(_))
        ));
    }
}
