//! Dense reference evaluation of the discrete forms.
//!
//! Every form is evaluated for whole fields by pointwise quadrature, using
//! `BrokenField::eval`/`grad` and traces located by inverse mapping of
//! physical edge points. Nothing here shares code with the sparse assembly
//! in `forms`; the property suite and tests compare the two routes.

use nalgebra::DMatrix;
use std::sync::Arc;

use crate::error::Result;
use crate::mesh::{Mesh, Point};
use crate::space::quadrature::{edge_rule, triangle_rule, EdgeRule, QuadratureRule};
use crate::space::{BrokenField, BrokenSpace};

pub struct FormOracle {
    mesh: Arc<Mesh>,
    vol: QuadratureRule,
    edge: EdgeRule,
}

/// Values and gradients of a field on both sides of an edge point.
struct EdgeSample {
    x: Point,
    w: f64,
    normal: [f64; 2],
    interior: bool,
    vm: [f64; 2],
    vn: [f64; 2],
    gm: [[f64; 2]; 2],
    gn: [[f64; 2]; 2],
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl FormOracle {
    /// `edge_degree` must match the assembly rule when upwinding is compared,
    /// since the inflow set is decided pointwise.
    pub fn new(mesh: Arc<Mesh>, volume_degree: usize, edge_degree: usize) -> Result<Self> {
        Ok(FormOracle {
            mesh,
            vol: triangle_rule(volume_degree)?,
            edge: edge_rule(edge_degree)?,
        })
    }

    fn volume<F: FnMut(usize, Point, Point, f64)>(&self, mut f: F) {
        for (t, geo) in self.mesh.geometry.iter().enumerate() {
            for (&xi, &w) in self.vol.points.iter().zip(&self.vol.weights) {
                f(t, xi, geo.map(xi), w * geo.det.abs());
            }
        }
    }

    fn edges<F: FnMut(&dyn Fn(&BrokenField) -> EdgeSample)>(&self, mut f: F) {
        for edge in &self.mesh.edges {
            let a = self.mesh.vertices[edge.vertices[0]];
            let b = self.mesh.vertices[edge.vertices[1]];
            for (&s, &w) in self.edge.points.iter().zip(&self.edge.weights) {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let sample = |v: &BrokenField| {
                    let gm = &self.mesh.geometry[edge.owner];
                    let xm = gm.inverse_map(x);
                    let (vm, grm) = (v.eval(edge.owner, xm), v.grad(edge.owner, xm));
                    let (vn, grn) = match edge.neighbor {
                        Some(n) => {
                            let xn = self.mesh.geometry[n].inverse_map(x);
                            (v.eval(n, xn), v.grad(n, xn))
                        }
                        None => (vm, grm),
                    };
                    EdgeSample {
                        x,
                        w: w * edge.length,
                        normal: edge.normal,
                        interior: edge.neighbor.is_some(),
                        vm,
                        vn,
                        gm: grm,
                        gn: grn,
                    }
                };
                f(&sample);
            }
        }
    }

    pub fn mass(&self, v: &BrokenField, w: &BrokenField) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, _, dw| s += dw * dot(v.eval(t, xi), w.eval(t, xi)));
        s
    }

    pub fn broken_gradient(&self, w: &BrokenField, v: &BrokenField) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, _, dw| {
            let gw = w.grad(t, xi);
            let gv = v.grad(t, xi);
            s += dw * (dot(gw[0], gv[0]) + dot(gw[1], gv[1]));
        });
        s
    }

    pub fn diffusion(&self, eps: f64, w: &BrokenField, v: &BrokenField) -> f64 {
        let mut s = self.broken_gradient(w, v);
        self.edges(|sample| {
            let sw = sample(w);
            let sv = sample(v);
            let n = sw.normal;
            // [.] and {.} collapse to the owner trace on the boundary
            let jump = |a: [f64; 2], b: [f64; 2], interior| {
                if interior {
                    [a[0] - b[0], a[1] - b[1]]
                } else {
                    a
                }
            };
            let avg_flux = |gm: [[f64; 2]; 2], gn: [[f64; 2]; 2], interior| {
                let fm = [dot(gm[0], n), dot(gm[1], n)];
                let fn_ = [dot(gn[0], n), dot(gn[1], n)];
                if interior {
                    [0.5 * (fm[0] + fn_[0]), 0.5 * (fm[1] + fn_[1])]
                } else {
                    fm
                }
            };
            let jv = jump(sv.vm, sv.vn, sv.interior);
            let jw = jump(sw.vm, sw.vn, sw.interior);
            s -= sw.w * dot(avg_flux(sw.gm, sw.gn, sw.interior), jv);
            s += eps * sw.w * dot(avg_flux(sv.gm, sv.gn, sv.interior), jw);
        });
        s
    }

    pub fn penalty(&self, sigma: f64, v: &BrokenField, w: &BrokenField) -> f64 {
        let mut s = 0.0;
        let mesh = self.mesh.clone();
        let mut k = 0;
        let per_edge = self.edge.len();
        self.edges(|sample| {
            let len = mesh.edges[k / per_edge].length;
            k += 1;
            let sv = sample(v);
            let sw = sample(w);
            let (jv, jw) = if sv.interior {
                (
                    [sv.vm[0] - sv.vn[0], sv.vm[1] - sv.vn[1]],
                    [sw.vm[0] - sw.vn[0], sw.vm[1] - sw.vn[1]],
                )
            } else {
                (sv.vm, sw.vm)
            };
            s += sigma / len * sv.w * dot(jv, jw);
        });
        s
    }

    /// `b(v, q)`.
    pub fn coupling(&self, v: &BrokenField, q: &BrokenField) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, _, dw| {
            let g = v.grad(t, xi);
            s -= dw * q.eval(t, xi)[0] * (g[0][0] + g[1][1]);
        });
        self.edges(|sample| {
            let sv = sample(v);
            let sq = sample(q);
            let (avg_q, jv) = if sv.interior {
                (0.5 * (sq.vm[0] + sq.vn[0]), [sv.vm[0] - sv.vn[0], sv.vm[1] - sv.vn[1]])
            } else {
                (sq.vm[0], sv.vm)
            };
            s += sv.w * avg_q * dot(jv, sv.normal);
        });
        s
    }

    /// `c^w(u, z, theta)` with exterior boundary trace `g` (zero if `None`).
    pub fn convection(
        &self,
        w: &BrokenField,
        u: &BrokenField,
        z: &BrokenField,
        theta: &BrokenField,
        g: Option<&dyn Fn(Point) -> [f64; 2]>,
    ) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, _, dw| {
            let uv = u.eval(t, xi);
            let gz = z.grad(t, xi);
            let zv = z.eval(t, xi);
            let th = theta.eval(t, xi);
            let gu = u.grad(t, xi);
            let adv = [dot(uv, gz[0]), dot(uv, gz[1])];
            let div = gu[0][0] + gu[1][1];
            s += dw * (dot(adv, th) + 0.5 * div * dot(zv, th));
        });
        self.edges(|sample| {
            let sw = sample(w);
            let su = sample(u);
            let sz = sample(z);
            let st = sample(theta);
            let n = su.normal;
            if su.interior {
                let wavg = [0.5 * (sw.vm[0] + sw.vn[0]), 0.5 * (sw.vm[1] + sw.vn[1])];
                let uavg = [0.5 * (su.vm[0] + su.vn[0]), 0.5 * (su.vm[1] + su.vn[1])];
                let beta_w = dot(wavg, n);
                let beta_u = dot(uavg, n).abs();
                // owner sees n_T = n_e, neighbor sees -n_e
                if beta_w < 0.0 {
                    let dz = [sz.vm[0] - sz.vn[0], sz.vm[1] - sz.vn[1]];
                    s += su.w * beta_u * dot(dz, st.vm);
                } else if beta_w > 0.0 {
                    let dz = [sz.vn[0] - sz.vm[0], sz.vn[1] - sz.vm[1]];
                    s += su.w * beta_u * dot(dz, st.vn);
                }
                let ju = dot([su.vm[0] - su.vn[0], su.vm[1] - su.vn[1]], n);
                let avg_zt = 0.5 * (dot(sz.vm, st.vm) + dot(sz.vn, st.vn));
                s -= 0.5 * su.w * ju * avg_zt;
            } else if dot(sw.vm, n) < 0.0 {
                let ext = g.map(|g| g(su.x)).unwrap_or([0.0, 0.0]);
                let dz = [sz.vm[0] - ext[0], sz.vm[1] - ext[1]];
                s += su.w * dot(su.vm, n).abs() * dot(dz, st.vm);
            }
        });
        s
    }

    /// Right side of the integration-by-parts identity for `c^u(u, z, theta)`.
    pub fn convection_by_parts(&self, u: &BrokenField, z: &BrokenField, theta: &BrokenField) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, _, dw| {
            let uv = u.eval(t, xi);
            let gt = theta.grad(t, xi);
            let zv = z.eval(t, xi);
            let th = theta.eval(t, xi);
            let gu = u.grad(t, xi);
            let adv = [dot(uv, gt[0]), dot(uv, gt[1])];
            let div = gu[0][0] + gu[1][1];
            s -= dw * (dot(adv, zv) + 0.5 * div * dot(zv, th));
        });
        self.edges(|sample| {
            let su = sample(u);
            let sz = sample(z);
            let st = sample(theta);
            let n = su.normal;
            if su.interior {
                let ju = dot([su.vm[0] - su.vn[0], su.vm[1] - su.vn[1]], n);
                let avg_zt = 0.5 * (dot(sz.vm, st.vm) + dot(sz.vn, st.vn));
                s += 0.5 * su.w * ju * avg_zt;
                let beta = dot([0.5 * (su.vm[0] + su.vn[0]), 0.5 * (su.vm[1] + su.vn[1])], n);
                if beta < 0.0 {
                    // owner is on the inflow side: z_ext = z_n
                    let dth = [st.vm[0] - st.vn[0], st.vm[1] - st.vn[1]];
                    s -= su.w * beta.abs() * dot(sz.vn, dth);
                } else if beta > 0.0 {
                    let dth = [st.vn[0] - st.vm[0], st.vn[1] - st.vm[1]];
                    s -= su.w * beta * dot(sz.vm, dth);
                }
            } else {
                let beta = dot(su.vm, n);
                if beta > 0.0 {
                    s += su.w * beta * dot(sz.vm, st.vm);
                }
            }
        });
        s
    }

    /// `(f, v)`.
    pub fn load(&self, f: &dyn Fn(Point) -> [f64; 2], v: &BrokenField) -> f64 {
        let mut s = 0.0;
        self.volume(|t, xi, x, dw| s += dw * dot(f(x), v.eval(t, xi)));
        s
    }

    /// Boundary data functional `mu (eps <grad v n, g> + sigma/|e| <g, v>)
    /// + <|w . n| g, v>_{inflow}`.
    pub fn dirichlet_lift(
        &self,
        mu: f64,
        eps: f64,
        sigma: f64,
        w: &BrokenField,
        g: &dyn Fn(Point) -> [f64; 2],
        v: &BrokenField,
    ) -> f64 {
        let mut s = 0.0;
        let mesh = self.mesh.clone();
        let mut k = 0;
        let per_edge = self.edge.len();
        self.edges(|sample| {
            let e = k / per_edge;
            k += 1;
            let sv = sample(v);
            if sv.interior {
                return;
            }
            let sw = sample(w);
            let n = sv.normal;
            let gx = g(sv.x);
            let flux = [dot(sv.gm[0], n), dot(sv.gm[1], n)];
            s += mu * sv.w * (eps * dot(flux, gx) + sigma / mesh.edges[e].length * dot(gx, sv.vm));
            let beta = dot(sw.vm, n);
            if beta < 0.0 {
                s += sv.w * beta.abs() * dot(gx, sv.vm);
            }
        });
        s
    }

    /// Dense matrix with entry `(i, j) = form(e_j, e_i)` over unit coefficient
    /// fields of `col_space` (trial) and `row_space` (test).
    pub fn matrix(
        &self,
        row_space: &Arc<BrokenSpace>,
        col_space: &Arc<BrokenSpace>,
        form: impl Fn(&BrokenField, &BrokenField) -> f64,
    ) -> DMatrix<f64> {
        let rows: Vec<BrokenField> = (0..row_space.n_dofs()).map(|i| unit(row_space, i)).collect();
        let cols: Vec<BrokenField> = (0..col_space.n_dofs()).map(|j| unit(col_space, j)).collect();
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| form(&cols[j], &rows[i]))
    }

    /// Vector with entry `i = functional(e_i)`.
    pub fn vector(&self, space: &Arc<BrokenSpace>, functional: impl Fn(&BrokenField) -> f64) -> Vec<f64> {
        (0..space.n_dofs()).map(|i| functional(&unit(space, i))).collect()
    }
}

pub fn unit(space: &Arc<BrokenSpace>, i: usize) -> BrokenField {
    let mut f = BrokenField::zeros(space.clone());
    f.coeffs[i] = 1.0;
    f
}
