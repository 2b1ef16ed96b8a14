//! Projections onto the weakly divergence-free subspace `V_h`.
//!
//! Both are saddle-point problems: the velocity block is either the mass
//! matrix (`P_h`) or `mu (A + J)` (`S_h`), with the pressure-like multiplier
//! enforcing `b(w, q) = rhs(q)` for every `q` in `M_h`.

use crate::error::Result;
use crate::forms::{
    assemble_diffusion, assemble_load, assemble_mass, assemble_penalty, assemble_pressure_coupling,
    assemble_pressure_mean, exact_continuity_functional, exact_diffusion_functional, exact_pressure_functional,
    DgContext, FormConfig,
};
use crate::mesh::Point;
use crate::solver::{SaddleSolver, SaddleSystem, SolverReport};
use crate::space::BrokenField;
use crate::sparse::SparseOperator;

#[derive(Debug, Clone)]
pub struct Projected {
    pub field: BrokenField,
    /// Multiplier of the divergence constraint, a discrete pressure.
    pub multiplier: BrokenField,
    pub report: SolverReport,
}

fn solve(
    ctx: &DgContext,
    stiffness: &SparseOperator,
    momentum_rhs: &[f64],
    continuity_rhs: &[f64],
) -> Result<Projected> {
    let coupling = assemble_pressure_coupling(ctx);
    let mean = assemble_pressure_mean(ctx);
    let constant = ctx.pressure.constant([1.0, 0.0]);
    let sol = SaddleSolver::new().solve(&SaddleSystem {
        stiffness,
        coupling: &coupling,
        mean: &mean,
        pressure_constant: &constant,
        momentum_rhs,
        continuity_rhs,
    })?;
    Ok(Projected {
        field: BrokenField::from_coeffs(ctx.velocity.clone(), sol.velocity)?,
        multiplier: BrokenField::from_coeffs(ctx.pressure.clone(), sol.pressure)?,
        report: sol.report,
    })
}

/// `L^2` projection of a pointwise field onto `V_h`:
/// `(w, phi) + b(phi, l) = (u0, phi)`, `b(w, q) = 0`.
pub fn project_ph(ctx: &DgContext, u0: impl Fn(Point) -> [f64; 2]) -> Result<Projected> {
    let mass = assemble_mass(ctx);
    let rhs = assemble_load(ctx, u0);
    solve(ctx, &mass, &rhs, &vec![0.0; ctx.n_pressure()])
}

/// `L^2` projection of a discrete field onto `V_h`.
pub fn project_ph_field(ctx: &DgContext, v: &BrokenField) -> Result<Projected> {
    let mass = assemble_mass(ctx);
    let rhs = mass.mul_vec(&v.coeffs);
    solve(ctx, &mass, &rhs, &vec![0.0; ctx.n_pressure()])
}

/// Exact velocity data for [`project_sh`].
pub struct StokesData<'a> {
    pub u: &'a dyn Fn(Point) -> [f64; 2],
    pub grad_u: &'a dyn Fn(Point) -> [[f64; 2]; 2],
    pub div_u: &'a dyn Fn(Point) -> f64,
    pub p: &'a dyn Fn(Point) -> f64,
}

/// Modified Stokes projection:
/// `mu (a + J)(w, phi) + b(phi, l) = mu (a + J)(u, phi) + b(phi, p)` and
/// `b(w, q) = b(u, q)`. For `u` vanishing on the boundary and solenoidal the
/// constraint reduces to `b(w, q) = 0`.
pub fn project_sh(ctx: &DgContext, cfg: &FormConfig, data: &StokesData) -> Result<Projected> {
    let a = assemble_diffusion(ctx, cfg);
    let j = assemble_penalty(ctx, cfg);
    let k = SparseOperator::linear_combination(&[(cfg.mu, &a), (cfg.mu, &j)]);
    let mut rhs = exact_diffusion_functional(ctx, cfg, data.u, data.grad_u);
    let pres = exact_pressure_functional(ctx, data.p);
    for (r, b) in rhs.iter_mut().zip(&pres) {
        *r = cfg.mu * *r + b;
    }
    let cont = exact_continuity_functional(ctx, data.u, data.div_u);
    solve(ctx, &k, &rhs, &cont)
}
