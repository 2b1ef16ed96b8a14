//! Semi-implicit backward Euler: convection is frozen at the previous step,
//! so every step is one linear saddle-point solve
//!
//! ```text
//! (U^n - U^{n-1})/dt + mu (A + J) U^n + C(U^{n-1}) U^n + B^T P^n = f^n + lift
//! B U^n = h^n
//! ```

use std::time::Instant;

use crate::error::{Error, Result};
use crate::forms::{
    assemble_continuity_lift, assemble_convection, assemble_diffusion, assemble_diffusion_lift, assemble_load,
    assemble_mass, assemble_penalty, assemble_pressure_coupling, assemble_pressure_mean, DgContext, FormConfig,
};
use crate::mesh::Point;
use crate::space::projection::project_ph;
use crate::space::{project_l2, BrokenField};
use crate::sparse::SparseOperator;

use super::{SaddleSolver, SaddleSystem, SolverReport};

/// Time-dependent data `(x, t) -> value`.
pub type SpaceTimeFn<'a> = &'a (dyn Fn(Point, f64) -> [f64; 2] + Sync);

#[derive(Clone, Copy)]
pub enum InitialCondition<'a> {
    /// Pointwise data, projected according to [`InitialProjection`].
    Function(&'a (dyn Fn(Point) -> [f64; 2] + Sync)),
    /// Coefficients used as given.
    Field(&'a BrokenField),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialProjection {
    /// `L^2` projection onto the weakly divergence-free subspace.
    #[default]
    Solenoidal,
    /// Element-wise `L^2` projection, not divergence free.
    Elementwise,
}

/// Right-hand side data. `None` means zero.
#[derive(Clone, Copy, Default)]
pub struct ProblemData<'a> {
    pub forcing: Option<SpaceTimeFn<'a>>,
    /// Dirichlet data, imposed weakly.
    pub boundary: Option<SpaceTimeFn<'a>>,
}

#[derive(Debug, Clone)]
pub struct TimeLoopConfig {
    pub dt: f64,
    pub final_time: f64,
    pub forms: FormConfig,
    pub initial_projection: InitialProjection,
    /// Disable to march the Stokes problem.
    pub convection: bool,
    /// Times at which the state is stored; matched to the nearest step.
    pub snapshot_times: Vec<f64>,
}

impl TimeLoopConfig {
    pub fn new(dt: f64, final_time: f64, forms: FormConfig) -> Self {
        TimeLoopConfig {
            dt,
            final_time,
            forms,
            initial_projection: InitialProjection::Solenoidal,
            convection: true,
            snapshot_times: Vec::new(),
        }
    }

    /// Number of steps `M = T / dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "time step must lie in (0, 1), got {}",
                self.dt
            )));
        }
        if !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "final time must be positive, got {}",
                self.final_time
            )));
        }
        let m = (self.final_time / self.dt).round();
        if (m * self.dt - self.final_time).abs() > 1e-12 * self.final_time.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "final time {} is not a multiple of the time step {}",
                self.final_time, self.dt
            )));
        }
        Ok(m as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub solver: SolverReport,
    /// `max_q |b(U^n, q) - h^n(q)|` over pressure basis functions.
    pub divergence_residual: f64,
    pub velocity_l2: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub velocity: BrokenField,
    pub pressure: BrokenField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub velocity: BrokenField,
    pub pressure: BrokenField,
    pub initial: BrokenField,
    pub steps: Vec<StepDiagnostics>,
    pub snapshots: Vec<Snapshot>,
    pub wall_time: std::time::Duration,
}

/// Operators that do not change between steps.
pub(crate) struct StaticOperators {
    pub mass: SparseOperator,
    pub viscous: SparseOperator,
    pub coupling: SparseOperator,
    pub mean: Vec<f64>,
    pub pressure_constant: Vec<f64>,
}

impl StaticOperators {
    pub fn new(ctx: &DgContext, cfg: &FormConfig) -> Self {
        let a = assemble_diffusion(ctx, cfg);
        let j = assemble_penalty(ctx, cfg);
        StaticOperators {
            mass: assemble_mass(ctx),
            viscous: SparseOperator::linear_combination(&[(cfg.mu, &a), (cfg.mu, &j)]),
            coupling: assemble_pressure_coupling(ctx),
            mean: assemble_pressure_mean(ctx),
            pressure_constant: ctx.pressure.constant([1.0, 0.0]),
        }
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn backward_euler_run(
    ctx: &DgContext,
    config: &TimeLoopConfig,
    initial: InitialCondition,
    data: ProblemData,
) -> Result<Trajectory> {
    let start = Instant::now();
    let steps = config.steps()?;
    let cfg = &config.forms;
    let ops = StaticOperators::new(ctx, cfg);

    let u0 = match initial {
        InitialCondition::Field(f) => f.clone(),
        InitialCondition::Function(f) => match config.initial_projection {
            InitialProjection::Solenoidal => project_ph(ctx, f)?.field,
            InitialProjection::Elementwise => project_l2(&ctx.velocity, f)?,
        },
    };
    let mut u = u0.clone();
    let mut p = BrokenField::zeros(ctx.pressure.clone());
    let mut solver = SaddleSolver::new();
    let mut diagnostics = Vec::with_capacity(steps);
    let mut snapshots = Vec::new();
    let snapshot_steps: Vec<(usize, f64)> = config
        .snapshot_times
        .iter()
        .map(|&t| (((t / config.dt).round() as usize).min(steps), t))
        .collect();
    for &(s, _) in &snapshot_steps {
        if s == 0 {
            snapshots.push(Snapshot {
                time: 0.0,
                velocity: u.clone(),
                pressure: p.clone(),
            });
        }
    }
    let inv_dt = 1.0 / config.dt;
    let nv = ctx.n_velocity();
    let np = ctx.n_pressure();

    for n in 1..=steps {
        let t = n as f64 * config.dt;
        let g_t = data.boundary.map(|g| move |x: Point| g(x, t));
        let g_dyn: Option<&dyn Fn(Point) -> [f64; 2]> = g_t.as_ref().map(|g| g as _);

        let mut rhs = match data.forcing {
            Some(f) => assemble_load(ctx, |x| f(x, t)),
            None => vec![0.0; nv],
        };
        let mu_prev = ops.mass.mul_vec(&u.coeffs);
        for (r, m) in rhs.iter_mut().zip(&mu_prev) {
            *r += inv_dt * m;
        }
        let continuity = match g_dyn {
            Some(g) => {
                let lift = assemble_diffusion_lift(ctx, cfg, g);
                for (r, l) in rhs.iter_mut().zip(&lift) {
                    *r += l;
                }
                assemble_continuity_lift(ctx, g)
            }
            None => vec![0.0; np],
        };
        let stiffness = if config.convection {
            let conv = assemble_convection(ctx, &u, g_dyn);
            for (r, l) in rhs.iter_mut().zip(&conv.load) {
                *r += l;
            }
            SparseOperator::linear_combination(&[(inv_dt, &ops.mass), (1.0, &ops.viscous), (1.0, &conv.matrix)])
        } else {
            SparseOperator::linear_combination(&[(inv_dt, &ops.mass), (1.0, &ops.viscous)])
        };

        let sol = solver.solve(&SaddleSystem {
            stiffness: &stiffness,
            coupling: &ops.coupling,
            mean: &ops.mean,
            pressure_constant: &ops.pressure_constant,
            momentum_rhs: &rhs,
            continuity_rhs: &continuity,
        })?;
        if sol.velocity.iter().chain(&sol.pressure).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { step: n, time: t });
        }
        let bu = ops.coupling.mul_vec(&sol.velocity);
        let divergence_residual = max_abs_diff(&bu, &continuity);
        u = BrokenField::from_coeffs(ctx.velocity.clone(), sol.velocity)?;
        p = BrokenField::from_coeffs(ctx.pressure.clone(), sol.pressure)?;
        diagnostics.push(StepDiagnostics {
            step: n,
            time: t,
            solver: sol.report,
            divergence_residual,
            velocity_l2: ops.mass.quadratic_form(&u.coeffs).max(0.0).sqrt(),
        });
        for &(s, _) in &snapshot_steps {
            if s == n {
                snapshots.push(Snapshot {
                    time: t,
                    velocity: u.clone(),
                    pressure: p.clone(),
                });
            }
        }
    }
    Ok(Trajectory {
        velocity: u,
        pressure: p,
        initial: u0,
        steps: diagnostics,
        snapshots,
        wall_time: start.elapsed(),
    })
}
