//! Orthonormal polynomial bases on the reference triangle.
//!
//! Monomials centred at the centroid, `(xi - 1/3)^a (eta - 1/3)^b` with
//! `a + b <= k` ordered by total degree, are orthonormalized in `L^2` of the
//! reference triangle by a Cholesky factor of their Gram matrix, so
//! `phi = L^{-1} m`.

use nalgebra::DMatrix;

use crate::mesh::Point;
use crate::space::quadrature::triangle_rule;

const CENTROID: f64 = 1.0 / 3.0;

#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    /// Row i holds the monomial coefficients of basis function i.
    coeffs: DMatrix<f64>,
}

/// Basis values and reference gradients tabulated at a point set.
#[derive(Debug, Clone)]
pub struct BasisTable {
    /// `values[q][i]`
    pub values: Vec<Vec<f64>>,
    /// `grads[q][i]`, with respect to reference coordinates.
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Highest supported polynomial degree.
pub const MAX_DEGREE: usize = 8;
const MAX_DIM: usize = (MAX_DEGREE + 1) * (MAX_DEGREE + 2) / 2;

pub fn dimension(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree <= MAX_DEGREE, "polynomial degree {degree} > {MAX_DEGREE}");
        let mut exponents = Vec::with_capacity(dimension(degree));
        for d in 0..=degree as i32 {
            for b in 0..=d {
                exponents.push((d - b, b));
            }
        }
        let n = exponents.len();
        let rule = triangle_rule(2 * degree).expect("degree within quadrature range");
        let mono = |p: Point, a: i32, b: i32| (p[0] - CENTROID).powi(a) * (p[1] - CENTROID).powi(b);
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let (ei, ej) = (exponents[i], exponents[j]);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(&p, w)| w * mono(p, ei.0, ei.1) * mono(p, ej.0, ej.1))
                .sum()
        });
        let orthonormalize = |g: DMatrix<f64>| {
            g.cholesky()
                .expect("Gram matrix is positive definite")
                .l()
                .try_inverse()
                .expect("Cholesky factor is invertible")
        };
        // second pass removes the round-off of the ill-conditioned first one
        let first = orthonormalize(gram.clone());
        let residual = &first * &gram * first.transpose();
        let coeffs = orthonormalize((&residual + residual.transpose()) * 0.5) * first;
        ReferenceBasis {
            degree,
            exponents,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn eval(&self, p: Point, out: &mut [f64]) {
        let n = self.len();
        let p = [p[0] - CENTROID, p[1] - CENTROID];
        let mut mono = [0.0; MAX_DIM];
        for (m, &(a, b)) in mono.iter_mut().zip(&self.exponents) {
            *m = p[0].powi(a) * p[1].powi(b);
        }
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.coeffs[(i, j)] * mono[j];
            }
            *o = s;
        }
    }

    pub fn eval_grad(&self, p: Point, out: &mut [[f64; 2]]) {
        let n = self.len();
        let p = [p[0] - CENTROID, p[1] - CENTROID];
        let mut dx = [0.0; MAX_DIM];
        let mut dy = [0.0; MAX_DIM];
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            dx[j] = if a > 0 {
                a as f64 * p[0].powi(a - 1) * p[1].powi(b)
            } else {
                0.0
            };
            dy[j] = if b > 0 {
                b as f64 * p[0].powi(a) * p[1].powi(b - 1)
            } else {
                0.0
            };
        }
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut g = [0.0, 0.0];
            for j in 0..=i {
                g[0] += self.coeffs[(i, j)] * dx[j];
                g[1] += self.coeffs[(i, j)] * dy[j];
            }
            *o = g;
        }
    }

    pub fn tabulate(&self, points: &[Point]) -> BasisTable {
        let n = self.len();
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        for &p in points {
            let mut v = vec![0.0; n];
            let mut g = vec![[0.0; 2]; n];
            self.eval(p, &mut v);
            self.eval_grad(p, &mut g);
            values.push(v);
            grads.push(g);
        }
        BasisTable { values, grads }
    }
}
