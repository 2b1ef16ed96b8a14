//! Broken polynomial spaces `X_h` (velocity) and `M_h` (pressure), discrete
//! fields on them, and projections.
//!
//! Degrees of freedom are fully discontinuous: element `t`, component `c`
//! and local basis function `i` map to `(t * components + c) * d_k + i`.

pub mod basis;
pub mod projection;
pub mod quadrature;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use basis::ReferenceBasis;
use quadrature::triangle_rule;

/// Volume rule degree used to integrate non-polynomial data.
pub const DATA_QUAD_DEGREE: usize = 10;

#[derive(Debug, Clone)]
pub struct BrokenSpace {
    mesh: Arc<Mesh>,
    basis: ReferenceBasis,
    components: usize,
}

impl BrokenSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, components: usize) -> Self {
        assert!(components >= 1);
        BrokenSpace {
            mesh,
            basis: ReferenceBasis::new(degree),
            components,
        }
    }

    /// Vector-valued space `(P_k)^2` per element.
    pub fn velocity(mesh: Arc<Mesh>, degree: usize) -> Self {
        Self::new(mesh, degree, 2)
    }

    /// Scalar space `P_k'` per element.
    pub fn pressure(mesh: Arc<Mesh>, degree: usize) -> Self {
        Self::new(mesh, degree, 1)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    /// `d_k = (k + 1)(k + 2) / 2`.
    pub fn local_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.local_dim() * self.mesh.n_elements()
    }

    #[inline]
    pub fn dof(&self, element: usize, component: usize, i: usize) -> usize {
        (element * self.components + component) * self.local_dim() + i
    }

    /// Coefficients of the constant function 1 in each component.
    pub fn constant(&self, value: [f64; 2]) -> Vec<f64> {
        // phi_0 = sqrt(2) on the reference element
        let c0 = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![0.0; self.n_dofs()];
        for t in 0..self.mesh.n_elements() {
            for c in 0..self.components {
                v[self.dof(t, c, 0)] = c0 * value[c];
            }
        }
        v
    }
}

/// Coefficient vector over a broken space.
#[derive(Debug, Clone)]
pub struct BrokenField {
    space: Arc<BrokenSpace>,
    pub coeffs: Vec<f64>,
}

impl BrokenField {
    pub fn zeros(space: Arc<BrokenSpace>) -> Self {
        let n = space.n_dofs();
        BrokenField {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<BrokenSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "coefficient length {} does not match {} dofs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        Ok(BrokenField { space, coeffs })
    }

    pub fn space(&self) -> &Arc<BrokenSpace> {
        &self.space
    }

    /// Values of all components at reference point `xi` of `element`.
    pub fn eval(&self, element: usize, xi: Point) -> [f64; 2] {
        let s = &self.space;
        let n = s.local_dim();
        let mut phi = vec![0.0; n];
        s.basis.eval(xi, &mut phi);
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate().take(s.components) {
            let base = s.dof(element, c, 0);
            *o = phi.iter().zip(&self.coeffs[base..base + n]).map(|(p, u)| p * u).sum();
        }
        out
    }

    /// Physical gradients: `grad[c]` is the gradient of component `c`.
    pub fn grad(&self, element: usize, xi: Point) -> [[f64; 2]; 2] {
        let s = &self.space;
        let n = s.local_dim();
        let mut g = vec![[0.0; 2]; n];
        s.basis.eval_grad(xi, &mut g);
        let geo = &s.mesh.geometry[element];
        let mut out = [[0.0; 2]; 2];
        for (c, o) in out.iter_mut().enumerate().take(s.components) {
            let base = s.dof(element, c, 0);
            let mut r = [0.0; 2];
            for (gi, u) in g.iter().zip(&self.coeffs[base..base + n]) {
                r[0] += gi[0] * u;
                r[1] += gi[1] * u;
            }
            *o = geo.push_gradient(r);
        }
        out
    }

    /// Value at a physical point, from the element returned by `Mesh::locate`.
    pub fn eval_at(&self, x: Point) -> Option<[f64; 2]> {
        let mesh = &self.space.mesh;
        let t = mesh.locate(x)?;
        Some(self.eval(t, mesh.geometry[t].inverse_map(x)))
    }

    pub fn scale(&mut self, s: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Element-wise `L^2` projection of a pointwise function onto `space`.
/// Only the first `space.components()` entries of `f` are used.
pub fn project_l2(space: &Arc<BrokenSpace>, f: impl Fn(Point) -> [f64; 2]) -> Result<BrokenField> {
    let degree = DATA_QUAD_DEGREE.max(2 * space.degree());
    let rule = triangle_rule(degree)?;
    let table = space.basis.tabulate(&rule.points);
    let n = space.local_dim();
    let mesh = space.mesh.clone();
    let mut field = BrokenField::zeros(space.clone());
    for (t, geo) in mesh.geometry.iter().enumerate() {
        let jac = geo.det.abs();
        let mass = DMatrix::from_fn(n, n, |i, j| {
            (0..rule.len())
                .map(|q| rule.weights[q] * table.values[q][i] * table.values[q][j])
                .sum::<f64>()
                * jac
        });
        let chol = mass.cholesky().ok_or(Error::SingularLocalMass { element: t })?;
        let mut rhs = vec![DVector::zeros(n); space.components];
        for (q, (&xi, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let fx = f(geo.map(xi));
            for (c, r) in rhs.iter_mut().enumerate() {
                for i in 0..n {
                    r[i] += w * jac * fx[c] * table.values[q][i];
                }
            }
        }
        for (c, r) in rhs.into_iter().enumerate() {
            let sol = chol.solve(&r);
            let base = space.dof(t, c, 0);
            field.coeffs[base..base + n].copy_from_slice(sol.as_slice());
        }
    }
    Ok(field)
}

/// Nodal interpolant: on each element the polynomial matching `f` at the
/// lattice points `(a/k, b/k)`, `a + b <= k`, of the reference triangle (the
/// centroid for `k = 0`). Only the first `space.components()` entries are used.
pub fn interpolate(space: &Arc<BrokenSpace>, f: impl Fn(Point) -> [f64; 2]) -> Result<BrokenField> {
    let k = space.degree();
    let nodes: Vec<Point> = if k == 0 {
        vec![[1.0 / 3.0, 1.0 / 3.0]]
    } else {
        (0..=k)
            .flat_map(|b| (0..=k - b).map(move |a| [a as f64 / k as f64, b as f64 / k as f64]))
            .collect()
    };
    let n = space.local_dim();
    let table = space.basis.tabulate(&nodes);
    let vandermonde = DMatrix::from_fn(n, n, |q, i| table.values[q][i]);
    let lu = vandermonde.lu();
    let mesh = space.mesh.clone();
    let mut field = BrokenField::zeros(space.clone());
    for (t, geo) in mesh.geometry.iter().enumerate() {
        let values: Vec<[f64; 2]> = nodes.iter().map(|&xi| f(geo.map(xi))).collect();
        for c in 0..space.components {
            let rhs = DVector::from_fn(n, |q, _| values[q][c]);
            let sol = lu.solve(&rhs).ok_or(Error::SingularLocalMass { element: t })?;
            let base = space.dof(t, c, 0);
            field.coeffs[base..base + n].copy_from_slice(sol.as_slice());
        }
    }
    Ok(field)
}

pub fn project_l2_scalar(space: &Arc<BrokenSpace>, f: impl Fn(Point) -> f64) -> Result<BrokenField> {
    project_l2(space, |x| [f(x), 0.0])
}
