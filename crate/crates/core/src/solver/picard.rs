//! Steady Picard iteration: `U^m` solves the Oseen problem with convection
//! frozen at `U^{m-1}`, starting from `U^0 = 0`.

use crate::error::{Error, Result};
use crate::forms::{
    assemble_continuity_lift, assemble_convection, assemble_diffusion_lift, assemble_load, DgContext, FormConfig,
};
use crate::mesh::Point;
use crate::space::BrokenField;
use crate::sparse::SparseOperator;

use super::time::StaticOperators;
use super::{SaddleSolver, SaddleSystem, SolverReport};

pub type SteadyFn<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);

#[derive(Debug, Clone)]
pub struct PicardConfig {
    pub forms: FormConfig,
    /// Stop once `||U^m - U^{m-1}||_{L^2} <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub convection: bool,
}

#[derive(Clone, Copy, Default)]
pub struct SteadyData<'a> {
    pub forcing: Option<SteadyFn<'a>>,
    pub boundary: Option<SteadyFn<'a>>,
}

#[derive(Debug, Clone)]
pub struct SteadySolution {
    pub velocity: BrokenField,
    pub pressure: BrokenField,
    pub iterations: usize,
    /// `||U^m - U^{m-1}||_{L^2}` per iteration.
    pub changes: Vec<f64>,
    pub reports: Vec<SolverReport>,
}

pub fn steady_picard(ctx: &DgContext, config: &PicardConfig, data: SteadyData) -> Result<SteadySolution> {
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Picard tolerance must be positive, got {}",
            config.tol
        )));
    }
    let cfg = &config.forms;
    let ops = StaticOperators::new(ctx, cfg);
    let nv = ctx.n_velocity();
    let g = data.boundary.map(|g| g as &dyn Fn(Point) -> [f64; 2]);

    let mut base_rhs = match data.forcing {
        Some(f) => assemble_load(ctx, f),
        None => vec![0.0; nv],
    };
    let continuity = match g {
        Some(g) => {
            let lift = assemble_diffusion_lift(ctx, cfg, g);
            for (r, l) in base_rhs.iter_mut().zip(&lift) {
                *r += l;
            }
            assemble_continuity_lift(ctx, g)
        }
        None => vec![0.0; ctx.n_pressure()],
    };

    let mut u = BrokenField::zeros(ctx.velocity.clone());
    let mut solver = SaddleSolver::new();
    let mut changes = Vec::new();
    let mut reports = Vec::new();
    for m in 1..=config.max_iters {
        let mut rhs = base_rhs.clone();
        let stiffness = if config.convection {
            let conv = assemble_convection(ctx, &u, g);
            for (r, l) in rhs.iter_mut().zip(&conv.load) {
                *r += l;
            }
            SparseOperator::linear_combination(&[(1.0, &ops.viscous), (1.0, &conv.matrix)])
        } else {
            ops.viscous.clone()
        };
        let sol = solver.solve(&SaddleSystem {
            stiffness: &stiffness,
            coupling: &ops.coupling,
            mean: &ops.mean,
            pressure_constant: &ops.pressure_constant,
            momentum_rhs: &rhs,
            continuity_rhs: &continuity,
        })?;
        if sol.velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: m,
                time: f64::NAN,
            });
        }
        let diff: Vec<f64> = sol.velocity.iter().zip(&u.coeffs).map(|(a, b)| a - b).collect();
        let change = ops.mass.quadratic_form(&diff).max(0.0).sqrt();
        changes.push(change);
        reports.push(sol.report);
        u = BrokenField::from_coeffs(ctx.velocity.clone(), sol.velocity)?;
        if change <= config.tol {
            return Ok(SteadySolution {
                velocity: u,
                pressure: BrokenField::from_coeffs(ctx.pressure.clone(), sol.pressure)?,
                iterations: m,
                changes,
                reports,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: config.max_iters,
        last_change: changes.last().copied().unwrap_or(f64::NAN),
    })
}
