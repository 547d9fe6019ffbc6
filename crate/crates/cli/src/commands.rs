//! One function per subcommand. Each writes CSV files and a JSON summary into
//! the output directory and returns the summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use critflow::bubbles::{
    bubble_asymptotics, sobolev_constant, truncated_bubble, BubbleParams, CutoffParams,
};
use critflow::flow::{ps_diagnostics, run_flow};
use critflow::functional::{energy, nehari_retract};
use critflow::minimax::{
    build_joined_surface, build_sphere_surface, euclidean_bound, ground_state, refine_from_surface,
    surface_levels, thresholds, verify_thresholds, JoinedOptions, SphereOptions, SurfaceSample,
};
use critflow::spectrum::{spectral_position, weighted_eigs, SpectrumResult};
use critflow::{build_axisym_grid, build_radial_grid, AxisymGrid, Field, RadialGrid};
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{self, CriterionResult};
use crate::config::{RunConfig, SurfaceKind};
use crate::error::CliError;
use crate::random::{rng, smooth_bump};
use crate::VERSION;

/// Starting field for `flow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FlowStart {
    /// Nehari-retracted truncated bubble at the origin.
    Bubble,
    /// Seeded random smooth field.
    Random,
    /// Seeded random smooth positive field.
    RandomPositive,
}

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: RunConfig, out: Option<PathBuf>) -> Result<Self, CliError> {
        let out = out.unwrap_or_else(|| cfg.output_dir.clone());
        fs::create_dir_all(&out)?;
        Ok(Self { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    /// Writes `<command>.json` with the config echo, version and thresholds.
    fn summary(&self, command: &str, body: Value) -> Result<Value, CliError> {
        let (threshold_1, threshold_2) = thresholds(self.cfg.model.dimension())?;
        let doc = json!({
            "command": command,
            "version": VERSION,
            "config": self.cfg,
            "threshold_1": threshold_1,
            "threshold_2": threshold_2,
            "result": body,
        });
        let mut w = self.create(&format!("{}.json", command.replace('-', "_")))?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(doc)
    }

    fn radial_grid(&self) -> Result<Arc<RadialGrid>, CliError> {
        Ok(build_radial_grid(
            self.cfg.model,
            self.cfg.grid.n,
            self.cfg.grid.grading,
        )?)
    }

    fn spectrum(&self, grid: &Arc<RadialGrid>) -> Result<SpectrumResult, CliError> {
        let k = self.cfg.grid.k_per_mode.max(self.cfg.lambda.max_index());
        Ok(weighted_eigs(grid, self.cfg.grid.l_max, k)?)
    }

    fn lambda(&self, spec: &SpectrumResult) -> Result<f64, CliError> {
        self.cfg.lambda.resolve(spec)
    }
}

fn write_field(path: &Path, f: &Field) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    f.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_eigs(ctx: &Context) -> Result<Value, CliError> {
    let g = ctx.radial_grid()?;
    let s = ctx.spectrum(&g)?;
    let mut w = ctx.create("eigs.csv")?;
    writeln!(w, "index,mode,k,degeneracy,mu,lambda")?;
    let mut per_mode = vec![0usize; ctx.cfg.grid.l_max + 1];
    for i in 0..s.len() {
        let mode = s.modes[i];
        per_mode[mode] += 1;
        writeln!(
            w,
            "{},{},{},{},{:.15e},{:.15e}",
            i + 1,
            mode,
            per_mode[mode],
            s.degeneracies[i],
            s.mus[i],
            s.lambdas[i]
        )?;
    }
    w.flush()?;
    ctx.summary(
        "eigs",
        json!({
            "spectral_shift": s.spectral_shift,
            "lambda_1": s.lambda1(),
            "coverage_limit": s.coverage_limit(),
            "count": s.len(),
            "modes": (0..=ctx.cfg.grid.l_max).collect::<Vec<_>>(),
        }),
    )
}

pub fn cmd_ground_state(ctx: &Context) -> Result<Value, CliError> {
    let g = ctx.radial_grid()?;
    let s = ctx.spectrum(&g)?;
    let lambda = ctx.lambda(&s)?;
    let gs = ground_state(&g, lambda, &ctx.cfg.flow)?;
    write_field(&ctx.path("ground_state_field.csv"), &gs.field)?;
    let mut w = ctx.create("ground_state_trace.csv")?;
    gs.trace.write_csv(&mut w)?;
    w.flush()?;
    let e = energy(&gs.field, lambda)?;
    ctx.summary(
        "ground-state",
        json!({
            "lambda": lambda,
            "lambda_position": spectral_position(lambda, &s)?,
            "c0": gs.c0,
            "classification": gs.trace.classification,
            "steps": gs.trace.times.len() - 1,
            "restarts": gs.restarts,
            "grad_norm": gs.trace.final_grad_norm(),
            "grad_sq": e.grad_sq,
            "euclidean_bound": euclidean_bound(ctx.cfg.model.dimension())?,
        }),
    )
}

pub fn cmd_flow(ctx: &Context, from: FlowStart) -> Result<Value, CliError> {
    let g = ctx.radial_grid()?;
    let s = ctx.spectrum(&g)?;
    let lambda = ctx.lambda(&s)?;
    let radius = ctx.cfg.model.ball_radius();
    let v0 = match from {
        FlowStart::Bubble => {
            let cut = CutoffParams::bump(ctx.cfg.bubbles.cutoff_outer * radius)?;
            let b = BubbleParams::at_origin(ctx.cfg.bubbles.start_epsilon * radius)?;
            nehari_retract(&truncated_bubble(&b, &cut, &g)?, lambda)?
        }
        FlowStart::Random => smooth_bump(&g, &mut rng(ctx.cfg.seed), false),
        FlowStart::RandomPositive => smooth_bump(&g, &mut rng(ctx.cfg.seed), true),
    };
    let trace = run_flow(&v0, lambda, &ctx.cfg.flow)?;
    let mut w = ctx.create("flow_trace.csv")?;
    trace.write_csv(&mut w)?;
    w.flush()?;
    write_field(&ctx.path("flow_terminal.csv"), &trace.terminal)?;
    ctx.summary(
        "flow",
        json!({
            "lambda": lambda,
            "from": format!("{from:?}").to_lowercase(),
            "classification": trace.classification,
            "steps": trace.times.len() - 1,
            "final_energy": trace.final_energy(),
            "final_grad_norm": trace.final_grad_norm(),
            "bubble_fit": trace.bubble_fit,
            "ps": ps_diagnostics(&trace, ctx.cfg.flow.alpha)?,
        }),
    )
}

pub fn cmd_bubble_asymptotics(ctx: &Context) -> Result<Value, CliError> {
    let b = &ctx.cfg.bubbles;
    let g = build_radial_grid(ctx.cfg.model, b.n, b.grading)?;
    let s = weighted_eigs(&g, 0, ctx.cfg.lambda.max_index().max(1))?;
    let lambda = ctx.lambda(&s)?;
    let cut = CutoffParams::bump(b.cutoff_outer * ctx.cfg.model.ball_radius())?;
    let rows = bubble_asymptotics(&b.epsilon_list, lambda, &cut, &(&g).into())?;
    let mut w = ctx.create("bubble_asymptotics.csv")?;
    writeln!(
        w,
        "epsilon,quotient,s_minus_quotient,scaled_slope,literal_slope"
    )?;
    for r in &rows {
        writeln!(
            w,
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
            r.epsilon, r.quotient, r.s_minus_quotient, r.scaled_slope, r.literal_slope
        )?;
    }
    w.flush()?;
    let slopes: Vec<f64> = rows.iter().map(|r| r.scaled_slope).collect();
    let spread = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    ctx.summary(
        "bubble-asymptotics",
        json!({
            "lambda": lambda,
            "sobolev_constant": sobolev_constant(ctx.cfg.model.dimension())?,
            "rows": rows,
            "scaled_slope_spread": spread,
        }),
    )
}

#[derive(Serialize)]
struct SurfaceExtras {
    r0: f64,
    shrunk_energy: Option<f64>,
    truncated_max: Option<f64>,
    seam_gap: Option<f64>,
    oddness_error: Option<f64>,
    decoupling_error: Option<f64>,
    q_ratio_full: Option<f64>,
    q_ratio_truncated: Option<f64>,
}

fn write_surface_csv(
    ctx: &Context,
    samples: &[SurfaceSample],
    t1: f64,
    t2: f64,
) -> Result<(), CliError> {
    let mut w = ctx.create("surface.csv")?;
    writeln!(
        w,
        "t,sign,energy_plus,energy_minus,total,margin_1,margin_2,hemisphere,scale,xi"
    )?;
    for s in samples {
        let p = s.parameter;
        writeln!(
            w,
            "{:.15e},{},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{},{:.15e},{:.15e}",
            p.t,
            p.axis_sign,
            s.energy_plus,
            s.energy_minus,
            s.total,
            t1 - s.energy_plus.max(s.energy_minus),
            t2 - s.total,
            p.hemisphere,
            p.scale,
            p.xi
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_surface(ctx: &Context) -> Result<Value, CliError> {
    let sc = &ctx.cfg.surface;
    let g: Arc<AxisymGrid> = build_axisym_grid(ctx.cfg.model, sc.n_radial, sc.grading, sc.n_theta)?;
    let k = ctx
        .cfg
        .grid
        .k_per_mode
        .max(ctx.cfg.lambda.max_index())
        .max(2);
    let s = weighted_eigs(g.radial(), ctx.cfg.grid.l_max.max(1), k)?;
    let lambda = ctx.lambda(&s)?;
    let (samples, extras) = match sc.kind {
        SurfaceKind::Sphere => {
            let sphere = build_sphere_surface(
                &g,
                lambda,
                &SphereOptions {
                    n_t: sc.n_t,
                    ..SphereOptions::default()
                },
            )?;
            let extras = SurfaceExtras {
                r0: sphere.r0,
                shrunk_energy: Some(sphere.shrunk_energy),
                truncated_max: Some(sphere.truncated_max),
                seam_gap: Some(sphere.seam_gap),
                oddness_error: Some(sphere.oddness_error),
                decoupling_error: None,
                q_ratio_full: None,
                q_ratio_truncated: None,
            };
            (sphere.samples, extras)
        }
        SurfaceKind::Joined => {
            let opts = JoinedOptions {
                sphere: SphereOptions {
                    n_t: sc.n_t,
                    ..JoinedOptions::default().sphere
                },
                ..JoinedOptions::default()
            };
            let joined = build_joined_surface(&g, lambda, &s, &opts)?;
            let extras = SurfaceExtras {
                r0: joined.r0,
                shrunk_energy: Some(joined.sphere.shrunk_energy),
                truncated_max: Some(joined.sphere.truncated_max),
                seam_gap: Some(joined.sphere.seam_gap),
                oddness_error: Some(joined.sphere.oddness_error),
                decoupling_error: Some(joined.decoupling_error),
                q_ratio_full: Some(joined.q_ratio_full),
                q_ratio_truncated: Some(joined.q_ratio_truncated),
            };
            (joined.samples, extras)
        }
    };
    let levels = if sc.top_k > 0 {
        let cfg = critflow::flow::FlowConfig {
            nehari_projection: true,
            ..ctx.cfg.flow.clone()
        };
        refine_from_surface(&samples, lambda, &cfg, sc.top_k)?
    } else {
        surface_levels(&samples)?
    };
    let report = verify_thresholds(&samples, &levels)?;
    write_surface_csv(ctx, &samples, levels.threshold_1, levels.threshold_2)?;
    ctx.summary(
        "surface",
        json!({
            "lambda": lambda,
            "kind": sc.kind,
            "samples": samples.len(),
            "level_estimate": levels,
            "surface_sup": report.surface_sup,
            "margin_2": report.margin_2,
            "min_margin_1": report.min_margin_1,
            "all_on_nehari": report.all_on_nehari,
            "all_resolved": report.all_resolved,
            "pass": report.pass,
            "construction": extras,
        }),
    )
}

/// Runs the acceptance criteria in `ids`; the summary lists every one.
pub fn cmd_verify(
    ctx: &Context,
    ids: &[u8],
    on_result: impl Fn(&CriterionResult),
) -> Result<(Value, bool), CliError> {
    let mut results = Vec::new();
    for &id in ids {
        let r = acceptance::run_criterion(id, ctx.cfg.seed);
        on_result(&r);
        results.push(r);
    }
    let mut w = ctx.create("verify.csv")?;
    writeln!(w, "id,name,pass,measured,threshold,margin")?;
    for r in &results {
        writeln!(
            w,
            "{},{},{},{:.15e},{:.15e},{:.15e}",
            r.id, r.name, r.pass, r.measured, r.threshold, r.margin
        )?;
    }
    w.flush()?;
    let all = results.iter().all(|r| r.pass);
    let doc = ctx.summary("verify", json!({ "all_pass": all, "criteria": results }))?;
    Ok((doc, all))
}
