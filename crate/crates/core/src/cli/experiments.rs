//! Experiment drivers behind the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use super::config::{Example, RunConfig};
use super::output::{line, sample, write_columns, write_vtk_file};
use crate::analysis::{
    l2_error, measure_errors, ConvergenceRow, ConvergenceTable, ErrorMeasure, ErrorTriple, ExactFields,
};
use crate::error::{Error, Result};
use crate::exact::Manufactured;
use crate::forms::DgContext;
use crate::mesh::{Mesh, Point, Rectangle};
use crate::solver::{
    backward_euler_run, steady_picard, InitialCondition, PicardConfig, ProblemData, SteadyData, SteadySolution,
    StepDiagnostics, TimeLoopConfig, Trajectory,
};
use crate::space::BrokenField;

/// Number of samples along each centerline.
pub const CENTERLINE_POINTS: usize = 101;

pub fn context(cfg: &RunConfig, n: usize) -> Result<DgContext> {
    let mesh = Arc::new(Mesh::uniform(n, Rectangle::UNIT_SQUARE)?);
    DgContext::new(mesh, cfg.velocity_degree, cfg.pressure_degree)
}

fn manufactured(cfg: &RunConfig) -> Result<Manufactured> {
    match cfg.example {
        Example::Manufactured(m) => Ok(m),
        Example::Cavity => Err(Error::Config("a manufactured example is required".into())),
    }
}

/// Metadata file: the configuration echo followed by `#` comment lines, so
/// the whole file parses back as the configuration of the run.
fn write_metadata(cfg: &RunConfig, dir: &Path, notes: &str) -> Result<()> {
    let mut s = cfg.to_text();
    for l in notes.lines() {
        let _ = writeln!(s, "# {l}");
    }
    fs::write(dir.join("metadata.txt"), s)?;
    Ok(())
}

fn step_log(steps: &[StepDiagnostics]) -> String {
    let mut s = String::from("step time relative_residual iterations factorized divergence_residual velocity_l2\n");
    for d in steps {
        let _ = writeln!(
            s,
            "{} {:.10e} {:.3e} {} {} {:.3e} {:.10e}",
            d.step,
            d.time,
            d.solver.relative_residual,
            d.solver.iterations,
            d.solver.factorized as u8,
            d.divergence_residual,
            d.velocity_l2
        );
    }
    s
}

/// One time-dependent manufactured-solution run to `final_time`.
pub fn manufactured_run(cfg: &RunConfig, ctx: &DgContext, n: usize) -> Result<(Trajectory, ErrorTriple)> {
    let ex = manufactured(cfg)?;
    let mu = cfg.mu;
    let dt = cfg.dt.dt(n);
    let mut tl = TimeLoopConfig::new(dt, cfg.final_time, cfg.forms()?);
    tl.initial_projection = cfg.initial_projection;
    tl.snapshot_times = cfg.snapshots.clone();
    let u0 = move |x: Point| ex.velocity(x, 0.0);
    let f = move |x: Point, t: f64| ex.forcing(mu, x, t);
    let data = ProblemData {
        forcing: Some(&f),
        boundary: None,
    };
    let run = backward_euler_run(ctx, &tl, InitialCondition::Function(&u0), data)?;
    let t = cfg.final_time;
    let u = move |x: Point| ex.velocity(x, t);
    let g = move |x: Point| ex.velocity_grad(x, t);
    let p = move |x: Point| ex.pressure(x, t);
    let exact = ExactFields {
        velocity: &u,
        velocity_grad: &g,
        pressure: &p,
    };
    let errors = measure_errors(
        cfg.error_measure,
        &run.velocity,
        &run.pressure,
        exact,
        cfg.sigma,
        1.0 / n as f64,
        dt,
    )?;
    Ok((run, errors))
}

/// Sweeps the mesh list; a failed row is recorded and the sweep continues.
/// Writes `convergence.csv` and `metadata.txt` to the output directory.
pub fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    manufactured(cfg)?;
    fs::create_dir_all(&cfg.output)?;
    let mut table = ConvergenceTable::default();
    let mut notes = String::new();
    for &n in &cfg.meshes {
        let start = Instant::now();
        let outcome = context(cfg, n).and_then(|ctx| manufactured_run(cfg, &ctx, n));
        let dt = cfg.dt.dt(n);
        match &outcome {
            Ok((run, _)) => {
                let max_res = run.steps.iter().map(|s| s.solver.relative_residual).fold(0.0, f64::max);
                let max_div = run.steps.iter().map(|s| s.divergence_residual).fold(0.0, f64::max);
                let facts = run.steps.iter().filter(|s| s.solver.factorized).count();
                let _ = writeln!(
                    notes,
                    "n = {n}: {} steps, {facts} factorizations, max residual {max_res:.3e}, max divergence {max_div:.3e}, {:.2} s",
                    run.steps.len(),
                    start.elapsed().as_secs_f64()
                );
            }
            Err(e) => {
                let _ = writeln!(notes, "n = {n}: failed: {e}");
            }
        }
        table.push(ConvergenceRow {
            n,
            h: 1.0 / n as f64,
            dt,
            outcome: outcome.map(|(_, e)| e).map_err(|e| e.to_string()),
        });
    }
    fs::write(cfg.output.join("convergence.csv"), table.to_csv())?;
    let _ = write!(notes, "errors measured as: {}\n{}", cfg.error_measure, table.render());
    write_metadata(cfg, &cfg.output, &notes)?;
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct SingleReport {
    pub errors: ErrorTriple,
    pub trajectory: Trajectory,
}

/// One run on one mesh; VTK dumps at the snapshot times and at the end.
pub fn run_single(cfg: &RunConfig) -> Result<SingleReport> {
    cfg.validate()?;
    let n = cfg.meshes[0];
    let ctx = context(cfg, n)?;
    fs::create_dir_all(&cfg.output)?;
    let (run, errors) = manufactured_run(cfg, &ctx, n)?;
    for (i, s) in run.snapshots.iter().enumerate() {
        let path = cfg.output.join(format!("snapshot_{i:03}.vtk"));
        write_vtk_file(&path, &format!("t = {}", s.time), &s.velocity, &s.pressure)?;
    }
    write_vtk_file(
        &cfg.output.join("final.vtk"),
        &format!("t = {}", cfg.final_time),
        &run.velocity,
        &run.pressure,
    )?;
    let notes = format!(
        "errors ({}): energy {:.6e} l2 {:.6e} pressure {:.6e}\n{}",
        cfg.error_measure,
        errors.energy,
        errors.l2,
        errors.pressure,
        step_log(&run.steps)
    );
    write_metadata(cfg, &cfg.output, &notes)?;
    Ok(SingleReport {
        errors,
        trajectory: run,
    })
}

fn lid(x: Point) -> [f64; 2] {
    if x[1] > 1.0 - 1e-12 {
        [1.0, 0.0]
    } else {
        [0.0, 0.0]
    }
}

fn picard(cfg: &RunConfig, ctx: &DgContext) -> Result<SteadySolution> {
    let pc = PicardConfig {
        forms: cfg.forms()?,
        tol: cfg.tolerance,
        max_iters: cfg.max_iters,
        convection: true,
    };
    let g = |x: Point| lid(x);
    steady_picard(
        ctx,
        &pc,
        SteadyData {
            forcing: None,
            boundary: Some(&g),
        },
    )
}

/// Samples along `x = 0.5` (u1) and `y = 0.5` (u2 and p).
#[derive(Debug, Clone, PartialEq)]
pub struct Centerlines {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub p: Vec<f64>,
}

impl Centerlines {
    pub fn sample(velocity: &BrokenField, pressure: &BrokenField) -> Self {
        let vertical = line([0.5, 0.0], [0.5, 1.0], CENTERLINE_POINTS);
        let horizontal = line([0.0, 0.5], [1.0, 0.5], CENTERLINE_POINTS);
        Centerlines {
            y: vertical.iter().map(|x| x[1]).collect(),
            x: horizontal.iter().map(|x| x[0]).collect(),
            u1: sample(velocity, &vertical, 0),
            u2: sample(velocity, &horizontal, 1),
            p: sample(pressure, &horizontal, 0),
        }
    }
}

fn col(c: Option<&Centerlines>, f: fn(&Centerlines) -> &[f64]) -> Option<&[f64]> {
    c.map(f)
}

fn write_centerlines(dir: &Path, unsteady: Option<&Centerlines>, steady: Option<&Centerlines>) -> Result<()> {
    let base = unsteady.or(steady).expect("at least one profile");
    write_columns(
        &dir.join("centerline_u1.csv"),
        &["y", "u1_unsteady", "u1_steady"],
        &base.y,
        &[col(unsteady, |c| &c.u1), col(steady, |c| &c.u1)],
    )?;
    write_columns(
        &dir.join("centerline_u2.csv"),
        &["x", "u2_unsteady", "u2_steady"],
        &base.x,
        &[col(unsteady, |c| &c.u2), col(steady, |c| &c.u2)],
    )?;
    write_columns(
        &dir.join("centerline_p.csv"),
        &["x", "p_unsteady", "p_steady"],
        &base.x,
        &[col(unsteady, |c| &c.p), col(steady, |c| &c.p)],
    )
}

#[derive(Debug, Clone)]
pub struct CavityReport {
    pub trajectory: Trajectory,
    pub unsteady: Centerlines,
    pub steady: Option<SteadySolution>,
    pub steady_profiles: Option<Centerlines>,
    /// `||U(T) - U_steady|| / ||U_steady||` in `L^2`.
    pub relative_gap: Option<f64>,
    /// Picard failure, reported as a warning.
    pub warning: Option<String>,
}

/// Time marching from rest to `final_time` plus the steady Picard solve.
pub fn run_cavity(cfg: &RunConfig) -> Result<CavityReport> {
    cfg.validate()?;
    let n = cfg.meshes[0];
    let ctx = context(cfg, n)?;
    fs::create_dir_all(&cfg.output)?;
    let mut tl = TimeLoopConfig::new(cfg.dt.dt(n), cfg.final_time, cfg.forms()?);
    tl.initial_projection = cfg.initial_projection;
    tl.snapshot_times = cfg.snapshots.clone();
    let zero = |_: Point| [0.0, 0.0];
    let g = |x: Point, _t: f64| lid(x);
    let run = backward_euler_run(
        &ctx,
        &tl,
        InitialCondition::Function(&zero),
        ProblemData {
            forcing: None,
            boundary: Some(&g),
        },
    )?;
    let unsteady = Centerlines::sample(&run.velocity, &run.pressure);

    let (steady, warning) = match picard(cfg, &ctx) {
        Ok(s) => (Some(s), None),
        Err(e @ (Error::NoConvergence { .. } | Error::Singular { .. } | Error::NonFiniteState { .. })) => {
            (None, Some(format!("steady Picard solve failed: {e}")))
        }
        Err(e) => return Err(e),
    };
    let steady_profiles = steady.as_ref().map(|s| Centerlines::sample(&s.velocity, &s.pressure));
    let relative_gap = steady.as_ref().map(|s| {
        let mut d = run.velocity.clone();
        for (a, b) in d.coeffs.iter_mut().zip(&s.velocity.coeffs) {
            *a -= b;
        }
        let zero = |_: Point| [0.0, 0.0];
        l2_error(&d, zero) / l2_error(&s.velocity, zero)
    });

    write_centerlines(&cfg.output, Some(&unsteady), steady_profiles.as_ref())?;
    for (i, s) in run.snapshots.iter().enumerate() {
        let path = cfg.output.join(format!("snapshot_{i:03}.vtk"));
        write_vtk_file(&path, &format!("t = {}", s.time), &s.velocity, &s.pressure)?;
    }
    write_vtk_file(
        &cfg.output.join("unsteady.vtk"),
        &format!("t = {}", cfg.final_time),
        &run.velocity,
        &run.pressure,
    )?;
    if let Some(s) = &steady {
        write_vtk_file(&cfg.output.join("steady.vtk"), "steady", &s.velocity, &s.pressure)?;
    }
    let mut notes = String::new();
    match (&steady, relative_gap) {
        (Some(s), Some(gap)) => {
            let _ = writeln!(
                notes,
                "picard iterations {}; relative L2 gap unsteady vs steady {gap:.6e}",
                s.iterations
            );
        }
        _ => {
            let _ = writeln!(notes, "{}", warning.as_deref().unwrap_or("no steady solution"));
        }
    }
    notes.push_str(&step_log(&run.steps));
    write_metadata(cfg, &cfg.output, &notes)?;
    Ok(CavityReport {
        trajectory: run,
        unsteady,
        steady,
        steady_profiles,
        relative_gap,
        warning,
    })
}

/// Steady Picard solve of the cavity only.
pub fn run_steady(cfg: &RunConfig) -> Result<(SteadySolution, Centerlines)> {
    cfg.validate()?;
    let ctx = context(cfg, cfg.meshes[0])?;
    fs::create_dir_all(&cfg.output)?;
    let s = picard(cfg, &ctx)?;
    let profiles = Centerlines::sample(&s.velocity, &s.pressure);
    write_centerlines(&cfg.output, None, Some(&profiles))?;
    write_vtk_file(&cfg.output.join("steady.vtk"), "steady", &s.velocity, &s.pressure)?;
    let mut notes = format!("picard iterations {}\niteration change\n", s.iterations);
    for (i, c) in s.changes.iter().enumerate() {
        let _ = writeln!(notes, "{} {c:.6e}", i + 1);
    }
    write_metadata(cfg, &cfg.output, &notes)?;
    Ok((s, profiles))
}

/// Both error measures of a finished run, for reports that show the two.
pub fn both_measures(cfg: &RunConfig, run: &Trajectory, n: usize) -> Result<[ErrorTriple; 2]> {
    let ex = manufactured(cfg)?;
    let t = cfg.final_time;
    let u = move |x: Point| ex.velocity(x, t);
    let g = move |x: Point| ex.velocity_grad(x, t);
    let p = move |x: Point| ex.pressure(x, t);
    let exact = ExactFields {
        velocity: &u,
        velocity_grad: &g,
        pressure: &p,
    };
    let dt = cfg.dt.dt(n);
    let h = 1.0 / n as f64;
    Ok([
        measure_errors(
            ErrorMeasure::Exact,
            &run.velocity,
            &run.pressure,
            exact,
            cfg.sigma,
            h,
            dt,
        )?,
        measure_errors(
            ErrorMeasure::Interpolant,
            &run.velocity,
            &run.pressure,
            exact,
            cfg.sigma,
            h,
            dt,
        )?,
    ])
}
