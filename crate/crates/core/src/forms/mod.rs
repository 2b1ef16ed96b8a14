//! Assembly of the interior-penalty forms into sparse operators.
//!
//! Entry `(i, j)` of every bilinear operator is the form evaluated with the
//! trial function `phi_j` in the first slot and the test function `phi_i` in
//! the second. On boundary edges jumps and averages are the owner trace.
//!
//! * `a(w, v) = sum_T (grad w, grad v)_T - sum_e <{grad w} n_e, [v]>_e
//!   + eps sum_e <{grad v} n_e, [w]>_e`
//! * `J0(v, w) = sum_e sigma_e / |e| <[v], [w]>_e`
//! * `b(v, q) = -sum_T (q, div v)_T + sum_e <{q}, [v] . n_e>_e`
//!
//! The upwind convection operator lives in [`convection`].

mod context;
pub mod convection;

pub use context::{DgContext, EdgeTables, EdgeTrace, QuadTables};
pub use convection::{assemble_convection, ConvectionOperator};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::space::BrokenSpace;
use crate::sparse::{SparseOperator, TripletBuilder};

/// Interior penalty variant, the `eps` in `a(., .)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// `eps = -1`
    Sipg,
    /// `eps = +1`
    Nipg,
}

impl Symmetry {
    pub fn epsilon(self) -> f64 {
        match self {
            Symmetry::Sipg => -1.0,
            Symmetry::Nipg => 1.0,
        }
    }

    pub fn from_epsilon(eps: f64) -> Result<Self> {
        if eps == -1.0 {
            Ok(Symmetry::Sipg)
        } else if eps == 1.0 {
            Ok(Symmetry::Nipg)
        } else {
            Err(Error::InvalidArgument(format!("eps must be -1 or +1, got {eps}")))
        }
    }
}

/// Outcome of the discrete coercivity check of `a + J0` on a given mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityCheck {
    pub subdivisions: usize,
    /// Smallest `v^T (A + J) v / ||v||_eps^2` over the velocity space.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormConfig {
    pub symmetry: Symmetry,
    /// Global penalty `sigma_e`.
    pub sigma: f64,
    /// Optional per-edge override of `sigma`.
    pub edge_sigma: Option<Vec<f64>>,
    pub mu: f64,
    /// SIPG needs `sigma` large enough; the last check run is recorded here.
    pub coercivity: Option<CoercivityCheck>,
}

impl FormConfig {
    pub fn new(symmetry: Symmetry, sigma: f64, mu: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("penalty must be positive, got {sigma}")));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {mu}")));
        }
        Ok(FormConfig {
            symmetry,
            sigma,
            edge_sigma: None,
            mu,
            coercivity: None,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.symmetry.epsilon()
    }

    #[inline]
    pub fn sigma_e(&self, edge: usize) -> f64 {
        match &self.edge_sigma {
            Some(s) => s[edge],
            None => self.sigma,
        }
    }

    /// Runs [`coercivity_constant`] and stores the result.
    pub fn check_coercivity(&mut self, ctx: &DgContext) -> Result<CoercivityCheck> {
        let check = CoercivityCheck {
            subdivisions: ctx.mesh.subdivisions,
            constant: coercivity_constant(ctx, self)?,
        };
        self.coercivity = Some(check);
        Ok(check)
    }
}

/// Pushes an `n x n` scalar block into every velocity component.
pub(crate) fn push_block(b: &mut TripletBuilder, space: &BrokenSpace, row_elem: usize, col_elem: usize, block: &[f64]) {
    let n = space.local_dim();
    for c in 0..space.components() {
        let r0 = space.dof(row_elem, c, 0);
        let c0 = space.dof(col_elem, c, 0);
        for i in 0..n {
            for j in 0..n {
                b.push(r0 + i, c0 + j, block[i * n + j]);
            }
        }
    }
}

/// Sides of an edge: `(trace, jump sign)`, owner first.
pub(crate) fn sides(t: &EdgeTables) -> impl Iterator<Item = (&EdgeTrace, f64)> {
    std::iter::once((&t.owner, 1.0)).chain(t.neighbor.as_ref().map(|n| (n, -1.0)))
}

/// Physical gradients of the velocity basis at volume point `q` of `element`.
pub(crate) fn volume_grads(ctx: &DgContext, tables: &QuadTables, element: usize, q: usize) -> Vec<[f64; 2]> {
    let geo = &ctx.mesh.geometry[element];
    tables.vol_vel.grads[q].iter().map(|&g| geo.push_gradient(g)).collect()
}

pub fn assemble_mass(ctx: &DgContext) -> SparseOperator {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.op;
    let mut b = TripletBuilder::new(space.n_dofs(), space.n_dofs());
    let mut block = vec![0.0; n * n];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        block.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in t.volume.weights.iter().enumerate() {
            let phi = &t.vol_vel.values[q];
            let wq = w * geo.det.abs();
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] += wq * phi[i] * phi[j];
                }
            }
        }
        push_block(&mut b, space, e, e, &block);
    }
    b.build_with_symmetry(true)
}

/// Volume part of `a`: the broken `H^1` seminorm Gram matrix.
pub fn assemble_broken_gradient(ctx: &DgContext) -> SparseOperator {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.op;
    let mut b = TripletBuilder::new(space.n_dofs(), space.n_dofs());
    let mut block = vec![0.0; n * n];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        block.iter_mut().for_each(|v| *v = 0.0);
        for (q, &w) in t.volume.weights.iter().enumerate() {
            let g = volume_grads(ctx, t, e, q);
            let wq = w * geo.det.abs();
            for i in 0..n {
                for j in 0..n {
                    block[i * n + j] += wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        push_block(&mut b, space, e, e, &block);
    }
    b.build_with_symmetry(true)
}

/// Matrix of `a(., .)`; symmetric for SIPG.
pub fn assemble_diffusion(ctx: &DgContext, cfg: &FormConfig) -> SparseOperator {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let eps = cfg.epsilon();
    let t = &ctx.op;
    let volume = assemble_broken_gradient(ctx);
    let mut b = TripletBuilder::new(space.n_dofs(), space.n_dofs());
    for (i, j, v) in volume.triplets() {
        b.push(i, j, v);
    }
    let mut block = vec![0.0; n * n];
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        let alpha = if edge.is_boundary() { 1.0 } else { 0.5 };
        let nrm = edge.normal;
        let frame = &t.frames[e];
        for (si, sgn_i) in sides(tab) {
            for (sj, sgn_j) in sides(tab) {
                block.iter_mut().for_each(|v| *v = 0.0);
                for (q, pt) in frame.points.iter().enumerate() {
                    let w = pt.weight;
                    for i in 0..n {
                        let phi_i = si.vel[q][i];
                        let dn_i = si.vel_grad[q][i][0] * nrm[0] + si.vel_grad[q][i][1] * nrm[1];
                        for j in 0..n {
                            let phi_j = sj.vel[q][j];
                            let dn_j = sj.vel_grad[q][j][0] * nrm[0] + sj.vel_grad[q][j][1] * nrm[1];
                            block[i * n + j] += w * alpha * (-dn_j * sgn_i * phi_i + eps * dn_i * sgn_j * phi_j);
                        }
                    }
                }
                push_block(&mut b, space, si.element, sj.element, &block);
            }
        }
    }
    b.build_with_symmetry(cfg.symmetry == Symmetry::Sipg)
}

/// Matrix of the jump penalty `J0`.
pub fn assemble_penalty(ctx: &DgContext, cfg: &FormConfig) -> SparseOperator {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.op;
    let mut b = TripletBuilder::new(space.n_dofs(), space.n_dofs());
    let mut block = vec![0.0; n * n];
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        let scale = cfg.sigma_e(e) / edge.length;
        for (si, sgn_i) in sides(tab) {
            for (sj, sgn_j) in sides(tab) {
                block.iter_mut().for_each(|v| *v = 0.0);
                for (q, pt) in t.frames[e].points.iter().enumerate() {
                    let w = pt.weight * scale * sgn_i * sgn_j;
                    for i in 0..n {
                        for j in 0..n {
                            block[i * n + j] += w * si.vel[q][i] * sj.vel[q][j];
                        }
                    }
                }
                push_block(&mut b, space, si.element, sj.element, &block);
            }
        }
    }
    b.build_with_symmetry(true)
}

/// `B` with entry `(i, j) = b(phi_j, psi_i)`: pressure rows, velocity columns.
pub fn assemble_pressure_coupling(ctx: &DgContext) -> SparseOperator {
    let vel = &ctx.velocity;
    let pres = &ctx.pressure;
    let nv = vel.local_dim();
    let np = pres.local_dim();
    let t = &ctx.op;
    let mut b = TripletBuilder::new(pres.n_dofs(), vel.n_dofs());
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        let mut block = vec![[0.0; 2]; np * nv];
        for (q, &w) in t.volume.weights.iter().enumerate() {
            let g = volume_grads(ctx, t, e, q);
            let psi = &t.vol_pres.values[q];
            let wq = w * geo.det.abs();
            for i in 0..np {
                for j in 0..nv {
                    block[i * nv + j][0] -= wq * psi[i] * g[j][0];
                    block[i * nv + j][1] -= wq * psi[i] * g[j][1];
                }
            }
        }
        push_coupling(&mut b, ctx, e, e, &block);
    }
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        let alpha = if edge.is_boundary() { 1.0 } else { 0.5 };
        let nrm = edge.normal;
        for (si, _) in sides(tab) {
            for (sj, sgn_j) in sides(tab) {
                let mut block = vec![[0.0; 2]; np * nv];
                for (q, pt) in t.frames[e].points.iter().enumerate() {
                    let w = pt.weight * alpha * sgn_j;
                    for i in 0..np {
                        for j in 0..nv {
                            let v = w * si.pres[q][i] * sj.vel[q][j];
                            block[i * nv + j][0] += v * nrm[0];
                            block[i * nv + j][1] += v * nrm[1];
                        }
                    }
                }
                push_coupling(&mut b, ctx, si.element, sj.element, &block);
            }
        }
    }
    b.build()
}

fn push_coupling(b: &mut TripletBuilder, ctx: &DgContext, pe: usize, ve: usize, block: &[[f64; 2]]) {
    let nv = ctx.velocity.local_dim();
    let np = ctx.pressure.local_dim();
    for i in 0..np {
        let row = ctx.pressure.dof(pe, 0, i);
        for c in 0..2 {
            for j in 0..nv {
                b.push(row, ctx.velocity.dof(ve, c, j), block[i * nv + j][c]);
            }
        }
    }
}

/// Pressure-mean constraint vector `m_i = int psi_i`.
pub fn assemble_pressure_mean(ctx: &DgContext) -> Vec<f64> {
    let pres = &ctx.pressure;
    let t = &ctx.op;
    let mut m = vec![0.0; pres.n_dofs()];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        for (q, &w) in t.volume.weights.iter().enumerate() {
            for (i, psi) in t.vol_pres.values[q].iter().enumerate() {
                m[pres.dof(e, 0, i)] += w * geo.det.abs() * psi;
            }
        }
    }
    m
}

/// Load vector `(f, phi_i)`.
pub fn assemble_load(ctx: &DgContext, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.data;
    let mut rhs = vec![0.0; space.n_dofs()];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        for (q, (&xi, &w)) in t.volume.points.iter().zip(&t.volume.weights).enumerate() {
            let fx = f(geo.map(xi));
            let wq = w * geo.det.abs();
            for c in 0..2 {
                let base = space.dof(e, c, 0);
                for i in 0..n {
                    rhs[base + i] += wq * fx[c] * t.vol_vel.values[q][i];
                }
            }
        }
    }
    rhs
}

/// Weak Dirichlet data `g` entering the momentum and continuity equations.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletLift {
    /// Diffusion (consistency + penalty, scaled by `mu`) and convection
    /// inflow contributions to the momentum right-hand side.
    pub momentum: Vec<f64>,
    /// `int_{boundary} psi_i g . n`, right-hand side of `b(U, psi_i)`.
    pub continuity: Vec<f64>,
}

/// `mu (eps <grad phi_i n, g> + sigma_e/|e| <g, phi_i>)` over boundary edges.
pub fn assemble_diffusion_lift(ctx: &DgContext, cfg: &FormConfig, g: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let eps = cfg.epsilon();
    let t = &ctx.data;
    let mut rhs = vec![0.0; space.n_dofs()];
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        if !edge.is_boundary() {
            continue;
        }
        let nrm = edge.normal;
        let pen = cfg.sigma_e(e) / edge.length;
        let tr = &tab.owner;
        for (q, pt) in t.frames[e].points.iter().enumerate() {
            let gx = g(pt.x);
            for c in 0..2 {
                let base = space.dof(tr.element, c, 0);
                for i in 0..n {
                    let dn = tr.vel_grad[q][i][0] * nrm[0] + tr.vel_grad[q][i][1] * nrm[1];
                    rhs[base + i] += cfg.mu * pt.weight * gx[c] * (eps * dn + pen * tr.vel[q][i]);
                }
            }
        }
    }
    rhs
}

/// `int_{boundary} psi_i g . n`.
pub fn assemble_continuity_lift(ctx: &DgContext, g: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    let pres = &ctx.pressure;
    let t = &ctx.data;
    let mut rhs = vec![0.0; pres.n_dofs()];
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        if !edge.is_boundary() {
            continue;
        }
        let tr = &tab.owner;
        for (q, pt) in t.frames[e].points.iter().enumerate() {
            let gx = g(pt.x);
            let gn = gx[0] * edge.normal[0] + gx[1] * edge.normal[1];
            for (i, psi) in tr.pres[q].iter().enumerate() {
                rhs[pres.dof(tr.element, 0, i)] += pt.weight * gn * psi;
            }
        }
    }
    rhs
}

/// All contributions of the boundary data `g`, with the convection inflow
/// term evaluated for the advecting field `w`.
pub fn assemble_dirichlet_lift(
    ctx: &DgContext,
    cfg: &FormConfig,
    g: &dyn Fn(Point) -> [f64; 2],
    w: &crate::space::BrokenField,
) -> DirichletLift {
    let mut momentum = assemble_diffusion_lift(ctx, cfg, g);
    let conv = convection::assemble_convection(ctx, w, Some(g));
    for (m, l) in momentum.iter_mut().zip(&conv.load) {
        *m += l;
    }
    DirichletLift {
        momentum,
        continuity: assemble_continuity_lift(ctx, g),
    }
}

/// `(a + J0)(u, phi_i)` for a continuous field `u` with gradient `grad_u`
/// (`grad_u[c]` is the gradient of component `c`).
pub fn exact_diffusion_functional(
    ctx: &DgContext,
    cfg: &FormConfig,
    u: impl Fn(Point) -> [f64; 2],
    grad_u: impl Fn(Point) -> [[f64; 2]; 2],
) -> Vec<f64> {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.data;
    let mut rhs = vec![0.0; space.n_dofs()];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        for (q, (&xi, &w)) in t.volume.points.iter().zip(&t.volume.weights).enumerate() {
            let gu = grad_u(geo.map(xi));
            let g = volume_grads(ctx, t, e, q);
            let wq = w * geo.det.abs();
            for c in 0..2 {
                let base = space.dof(e, c, 0);
                for i in 0..n {
                    rhs[base + i] += wq * (gu[c][0] * g[i][0] + gu[c][1] * g[i][1]);
                }
            }
        }
    }
    // continuous u: [u] = 0 inside, trace of u on the boundary
    let boundary = assemble_diffusion_lift(ctx, &FormConfig { mu: 1.0, ..cfg.clone() }, &u);
    for (r, l) in rhs.iter_mut().zip(&boundary) {
        *r += l;
    }
    for (edge, (tab, frame)) in ctx.mesh.edges.iter().zip(t.edges.iter().zip(&t.frames)) {
        let nrm = edge.normal;
        for (q, pt) in frame.points.iter().enumerate() {
            let gu = grad_u(pt.x);
            for (side, sgn) in sides(tab) {
                for c in 0..2 {
                    let flux = gu[c][0] * nrm[0] + gu[c][1] * nrm[1];
                    let base = space.dof(side.element, c, 0);
                    for i in 0..n {
                        rhs[base + i] -= pt.weight * flux * sgn * side.vel[q][i];
                    }
                }
            }
        }
    }
    rhs
}

/// `b(phi_i, p)` for a continuous pressure `p`.
pub fn exact_pressure_functional(ctx: &DgContext, p: impl Fn(Point) -> f64) -> Vec<f64> {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.data;
    let mut rhs = vec![0.0; space.n_dofs()];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        for (q, (&xi, &w)) in t.volume.points.iter().zip(&t.volume.weights).enumerate() {
            let px = p(geo.map(xi));
            let g = volume_grads(ctx, t, e, q);
            let wq = w * geo.det.abs();
            for c in 0..2 {
                let base = space.dof(e, c, 0);
                for i in 0..n {
                    rhs[base + i] -= wq * px * g[i][c];
                }
            }
        }
    }
    for (edge, (tab, frame)) in ctx.mesh.edges.iter().zip(t.edges.iter().zip(&t.frames)) {
        for (q, pt) in frame.points.iter().enumerate() {
            let px = p(pt.x);
            for (side, sgn) in sides(tab) {
                for c in 0..2 {
                    let base = space.dof(side.element, c, 0);
                    for i in 0..n {
                        rhs[base + i] += pt.weight * px * sgn * side.vel[q][i] * edge.normal[c];
                    }
                }
            }
        }
    }
    rhs
}

/// `b(u, psi_i)` for a continuous velocity `u` with divergence `div_u`.
pub fn exact_continuity_functional(
    ctx: &DgContext,
    u: impl Fn(Point) -> [f64; 2],
    div_u: impl Fn(Point) -> f64,
) -> Vec<f64> {
    let pres = &ctx.pressure;
    let t = &ctx.data;
    let mut rhs = assemble_continuity_lift(ctx, u);
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        for (q, (&xi, &w)) in t.volume.points.iter().zip(&t.volume.weights).enumerate() {
            let d = div_u(geo.map(xi));
            for (i, psi) in t.vol_pres.values[q].iter().enumerate() {
                rhs[pres.dof(e, 0, i)] -= w * geo.det.abs() * d * psi;
            }
        }
    }
    rhs
}

/// Smallest generalized eigenvalue of `sym(A) + J` against the energy
/// norm matrix `G + J`. Dense; intended for small meshes.
pub fn coercivity_constant(ctx: &DgContext, cfg: &FormConfig) -> Result<f64> {
    let a = assemble_diffusion(ctx, cfg);
    let j = assemble_penalty(ctx, cfg);
    let g = assemble_broken_gradient(ctx);
    let s = {
        let d = (a.to_dense() + j.to_dense()).clone();
        (&d + d.transpose()) * 0.5
    };
    let e = g.to_dense() + j.to_dense();
    let chol = e
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("energy norm matrix is not definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("energy norm factor is singular".into()))?;
    let reduced: DMatrix<f64> = &l_inv * s * l_inv.transpose();
    let eig = SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests;
