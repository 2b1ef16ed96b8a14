//! Upwinded trilinear convection form
//!
//! ```text
//! c^w(u, z, theta) = sum_T [ (u . grad z, theta)_T
//!                            + <|{u} . n_T| (z_int - z_ext), theta_int>_{dT_-} ]
//!                  + 1/2 sum_T ((div u) z, theta)_T
//!                  - 1/2 sum_{e interior} <[u] . n_e, {z . theta}>_e
//! ```
//!
//! with the inflow set `dT_- = {x in dT : {w} . n_T < 0}` decided at each
//! edge quadrature point. On boundary edges `z_ext` is the Dirichlet data `g`
//! (zero for homogeneous problems); that part is returned as a load vector.
//!
//! The operator is always assembled with the first argument equal to the
//! upwinding field, `C(w) z = c^w(w, z, .)`.

use super::{push_block, volume_grads, DgContext};
use crate::mesh::Point;
use crate::space::BrokenField;
use crate::sparse::{SparseOperator, TripletBuilder};

#[derive(Debug, Clone)]
pub struct ConvectionOperator {
    pub matrix: SparseOperator,
    /// `<|w . n| g, phi_i>` over inflow boundary points; belongs on the
    /// right-hand side.
    pub load: Vec<f64>,
}

/// Trace of `w` on one side of an edge, per quadrature point.
fn side_values(w: &BrokenField, trace: &super::EdgeTrace) -> Vec<[f64; 2]> {
    let space = w.space();
    let n = space.local_dim();
    trace
        .vel
        .iter()
        .map(|phi| {
            let mut v = [0.0; 2];
            for (c, vc) in v.iter_mut().enumerate() {
                let base = space.dof(trace.element, c, 0);
                *vc = phi.iter().zip(&w.coeffs[base..base + n]).map(|(a, b)| a * b).sum();
            }
            v
        })
        .collect()
}

pub fn assemble_convection(
    ctx: &DgContext,
    w: &BrokenField,
    g: Option<&dyn Fn(Point) -> [f64; 2]>,
) -> ConvectionOperator {
    let space = &ctx.velocity;
    let n = space.local_dim();
    let t = &ctx.op;
    let mut b = TripletBuilder::new(space.n_dofs(), space.n_dofs());
    let mut load = vec![0.0; space.n_dofs()];

    let mut block = vec![0.0; n * n];
    for (e, geo) in ctx.mesh.geometry.iter().enumerate() {
        block.iter_mut().for_each(|v| *v = 0.0);
        for (q, &wq) in t.volume.weights.iter().enumerate() {
            let phi = &t.vol_vel.values[q];
            let grads = volume_grads(ctx, t, e, q);
            let mut wv = [0.0; 2];
            let mut div = 0.0;
            for c in 0..2 {
                let base = space.dof(e, c, 0);
                for i in 0..n {
                    let coef = w.coeffs[base + i];
                    wv[c] += coef * phi[i];
                    div += coef * grads[i][c];
                }
            }
            let scale = wq * geo.det.abs();
            for i in 0..n {
                for j in 0..n {
                    let adv = wv[0] * grads[j][0] + wv[1] * grads[j][1];
                    block[i * n + j] += scale * (adv + 0.5 * div * phi[j]) * phi[i];
                }
            }
        }
        push_block(&mut b, space, e, e, &block);
    }

    // Blocks are always emitted in full so the sparsity pattern does not
    // depend on the flow direction.
    let mut mm = vec![0.0; n * n];
    let mut mn = vec![0.0; n * n];
    let mut nn = vec![0.0; n * n];
    let mut nm = vec![0.0; n * n];
    for (e, (edge, tab)) in ctx.mesh.edges.iter().zip(&t.edges).enumerate() {
        let nrm = edge.normal;
        let frame = &t.frames[e];
        let wm = side_values(w, &tab.owner);
        match &tab.neighbor {
            None => {
                mm.iter_mut().for_each(|v| *v = 0.0);
                let tr = &tab.owner;
                for (q, pt) in frame.points.iter().enumerate() {
                    let beta = wm[q][0] * nrm[0] + wm[q][1] * nrm[1];
                    if beta >= 0.0 {
                        continue;
                    }
                    let s = -beta * pt.weight;
                    let phi = &tr.vel[q];
                    for i in 0..n {
                        for j in 0..n {
                            mm[i * n + j] += s * phi[j] * phi[i];
                        }
                    }
                    if let Some(g) = g {
                        let gx = g(pt.x);
                        for c in 0..2 {
                            let base = space.dof(tr.element, c, 0);
                            for i in 0..n {
                                load[base + i] += s * gx[c] * phi[i];
                            }
                        }
                    }
                }
                push_block(&mut b, space, tr.element, tr.element, &mm);
            }
            Some(nb) => {
                let wn = side_values(w, nb);
                let om = &tab.owner;
                for blk in [&mut mm, &mut mn, &mut nn, &mut nm] {
                    blk.iter_mut().for_each(|v| *v = 0.0);
                }
                for (q, pt) in frame.points.iter().enumerate() {
                    let avg = [0.5 * (wm[q][0] + wn[q][0]), 0.5 * (wm[q][1] + wn[q][1])];
                    let beta = avg[0] * nrm[0] + avg[1] * nrm[1];
                    let jump_n = (wm[q][0] - wn[q][0]) * nrm[0] + (wm[q][1] - wn[q][1]) * nrm[1];
                    let pm = &om.vel[q];
                    let pn = &nb.vel[q];
                    let wt = pt.weight;
                    let inflow_m = if beta < 0.0 { -beta } else { 0.0 };
                    let inflow_n = if beta > 0.0 { beta } else { 0.0 };
                    for i in 0..n {
                        for j in 0..n {
                            let k = i * n + j;
                            mm[k] += wt * (inflow_m - 0.25 * jump_n) * pm[j] * pm[i];
                            mn[k] -= wt * inflow_m * pn[j] * pm[i];
                            nn[k] += wt * (inflow_n - 0.25 * jump_n) * pn[j] * pn[i];
                            nm[k] -= wt * inflow_n * pm[j] * pn[i];
                        }
                    }
                }
                push_block(&mut b, space, om.element, om.element, &mm);
                push_block(&mut b, space, om.element, nb.element, &mn);
                push_block(&mut b, space, nb.element, nb.element, &nn);
                push_block(&mut b, space, nb.element, om.element, &nm);
            }
        }
    }
    ConvectionOperator {
        matrix: b.build(),
        load,
    }
}
