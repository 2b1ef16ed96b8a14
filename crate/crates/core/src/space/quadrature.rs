//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and on the
//! unit interval used to parametrize edges.
//!
//! Degrees 0..=2 on the triangle use the classical centroid and three-point
//! interior rules. Higher degrees use the collapsed (conical product) Gauss
//! rule: Gauss-Legendre in both directions of the Duffy square with the
//! `(1 - u)` Jacobian folded into the weights.

use crate::error::{Error, Result};
use crate::mesh::Point;

pub const MAX_TRIANGLE_DEGREE: usize = 30;
pub const MAX_EDGE_DEGREE: usize = 41;

/// Quadrature rule on the reference triangle. Weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature rule on `[0, 1]`. Weights sum to 1.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Triangle rule exact for polynomials of total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedQuadrature {
            kind: "triangle",
            degree,
            max: MAX_TRIANGLE_DEGREE,
        });
    }
    let rule = match degree {
        0 | 1 => QuadratureRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            degree,
        },
        2 => QuadratureRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
            degree,
        },
        _ => collapsed_rule(degree),
    };
    Ok(rule)
}

fn collapsed_rule(degree: usize) -> QuadratureRule {
    // x^a y^b maps to u^a (1-u)^(b+1) v^b: degree + 1 in u, degree in v.
    let m = (degree + 3) / 2;
    let (nodes, weights) = gauss_legendre_unit(m);
    let mut points = Vec::with_capacity(m * m);
    let mut w = Vec::with_capacity(m * m);
    for (&u, &wu) in nodes.iter().zip(&weights) {
        for (&v, &wv) in nodes.iter().zip(&weights) {
            points.push([u, v * (1.0 - u)]);
            w.push(wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        points,
        weights: w,
        degree,
    }
}

/// Gauss-Legendre rule on `[0, 1]` exact to `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_EDGE_DEGREE {
        return Err(Error::UnsupportedQuadrature {
            kind: "edge",
            degree,
            max: MAX_EDGE_DEGREE,
        });
    }
    let n = degree / 2 + 1;
    let (points, weights) = gauss_legendre_unit(n);
    Ok(EdgeRule {
        points,
        weights,
        degree,
    })
}

/// `n`-point Gauss-Legendre nodes and weights mapped to `[0, 1]`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let points = x.iter().map(|&xi| 0.5 * (xi + 1.0)).collect();
    let weights = w.iter().map(|&wi| 0.5 * wi).collect();
    (points, weights)
}

/// `n`-point Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
