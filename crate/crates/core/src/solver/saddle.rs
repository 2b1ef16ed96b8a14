//! Sparse direct solution of the constrained saddle-point system
//!
//! ```text
//! [ K  B^T  0 ] [u]   [f]
//! [ B  0    m ] [p] = [h]
//! [ 0  m^T  0 ] [l]   [0]
//! ```
//!
//! The last row enforces `int p = 0`; `l` absorbs the incompatibility of `h`
//! with the constant pressure mode.

use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Relative residual requested from every solve.
pub const RTOL: f64 = 1e-10;

const MAX_REFINEMENT: usize = 4;

/// Krylov iterations allowed with a stale factorization before giving up on it.
const MAX_KRYLOV: usize = 40;

/// A stale factorization that needs more iterations than this is replaced
/// before the next solve.
const REFACTOR_AFTER: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct SaddleSystem<'a> {
    /// Velocity block `K`.
    pub stiffness: &'a SparseOperator,
    /// `B`, pressure rows and velocity columns.
    pub coupling: &'a SparseOperator,
    /// `m_i = int psi_i`.
    pub mean: &'a [f64],
    /// Coefficients of the constant pressure `1`, used to remove the mean
    /// left by round-off.
    pub pressure_constant: &'a [f64],
    pub momentum_rhs: &'a [f64],
    pub continuity_rhs: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    /// `||r|| / ||rhs||` recomputed from the original blocks.
    pub relative_residual: f64,
    /// Iterative refinement sweeps after a fresh factorization, or GMRES
    /// iterations preconditioned by a previous one.
    pub iterations: usize,
    /// A new numeric factorization was computed for this solve.
    pub factorized: bool,
    pub wall_time: Duration,
    pub singular: bool,
    /// The symbolic factorization of a previous solve was reused.
    pub reused_symbolic: bool,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Multiplier of the mean constraint.
    pub multiplier: f64,
    pub report: SolverReport,
}

struct Pattern {
    indices: Vec<(usize, usize)>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

/// Sparse LU solver for sequences of saddle systems with one pattern (the
/// time loop and Picard cases).
///
/// The symbolic factorization is kept while the pattern is unchanged. With
/// factor reuse on, the numeric LU of an earlier matrix preconditions GMRES
/// on the current one and is recomputed only when that stops converging fast.
/// Every solution is checked against the residual of the current blocks.
pub struct SaddleSolver {
    pattern: Option<Pattern>,
    factor: Option<Lu<usize, f64>>,
    /// Matrix values behind `factor`.
    factored_values: Vec<f64>,
    stale: bool,
    reuse_factor: bool,
}

impl Default for SaddleSolver {
    fn default() -> Self {
        SaddleSolver::new()
    }
}

impl SaddleSystem<'_> {
    fn validate(&self) -> Result<(usize, usize)> {
        let nv = self.stiffness.nrows();
        let np = self.coupling.nrows();
        if self.stiffness.ncols() != nv
            || self.coupling.ncols() != nv
            || self.mean.len() != np
            || self.pressure_constant.len() != np
            || self.momentum_rhs.len() != nv
            || self.continuity_rhs.len() != np
        {
            return Err(Error::InvalidArgument(format!(
                "inconsistent saddle blocks: K {}x{}, B {}x{}, m {}, rhs {}/{}",
                nv,
                self.stiffness.ncols(),
                np,
                self.coupling.ncols(),
                self.mean.len(),
                self.momentum_rhs.len(),
                self.continuity_rhs.len()
            )));
        }
        Ok((nv, np))
    }

    pub fn dim(&self) -> usize {
        self.stiffness.nrows() + self.coupling.nrows() + 1
    }

    /// Triplets of the full matrix in a fixed order.
    pub fn triplets(&self) -> (Vec<(usize, usize)>, Vec<f64>) {
        let nv = self.stiffness.nrows();
        let np = self.coupling.nrows();
        let cap = self.stiffness.nnz() + 2 * self.coupling.nnz() + 2 * np;
        let mut idx = Vec::with_capacity(cap);
        let mut val = Vec::with_capacity(cap);
        for (i, j, v) in self.stiffness.triplets() {
            idx.push((i, j));
            val.push(v);
        }
        for (i, j, v) in self.coupling.triplets() {
            idx.push((nv + i, j));
            val.push(v);
            idx.push((j, nv + i));
            val.push(v);
        }
        let last = nv + np;
        for (i, &m) in self.mean.iter().enumerate() {
            idx.push((nv + i, last));
            val.push(m);
            idx.push((last, nv + i));
            val.push(m);
        }
        (idx, val)
    }

    /// Full right-hand side `[f; h; 0]`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.dim());
        r.extend_from_slice(self.momentum_rhs);
        r.extend_from_slice(self.continuity_rhs);
        r.push(0.0);
        r
    }

    /// `A x` evaluated blockwise.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual_against(x, false);
        r.into_iter().map(|v| -v).collect()
    }

    /// `rhs - A x` evaluated blockwise.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.residual_against(x, true)
    }

    fn residual_against(&self, x: &[f64], with_rhs: bool) -> Vec<f64> {
        let nv = self.stiffness.nrows();
        let np = self.coupling.nrows();
        let (u, rest) = x.split_at(nv);
        let (p, l) = rest.split_at(np);
        let ku = self.stiffness.mul_vec(u);
        let btp = self.coupling.transpose_mul_vec(p);
        let bu = self.coupling.mul_vec(u);
        let mut r = Vec::with_capacity(x.len());
        for i in 0..nv {
            let f = if with_rhs { self.momentum_rhs[i] } else { 0.0 };
            r.push(f - ku[i] - btp[i]);
        }
        for i in 0..np {
            let h = if with_rhs { self.continuity_rhs[i] } else { 0.0 };
            r.push(h - bu[i] - self.mean[i] * l[0]);
        }
        r.push(-self.mean.iter().zip(p).map(|(m, q)| m * q).sum::<f64>());
        r
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve with iterative refinement; returns `(x, residual, sweeps)`.
fn refine(lu: &Lu<usize, f64>, system: &SaddleSystem, rhs: &[f64], rhs_norm: f64) -> (Vec<f64>, Vec<f64>, f64, usize) {
    let dim = rhs.len();
    let mut x = vec![0.0; dim];
    let mut r = rhs.to_vec();
    let mut res = 1.0;
    let mut iterations = 0;
    for sweep in 0..=MAX_REFINEMENT {
        let mut d = Mat::from_fn(dim, 1, |i, _| r[i]);
        lu.solve_in_place(d.as_mut());
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += d[(i, 0)];
        }
        r = system.residual(&x);
        let next = norm(&r) / rhs_norm;
        iterations = sweep;
        if !next.is_finite() {
            res = next;
            break;
        }
        let stalled = sweep > 0 && next > 0.5 * res;
        res = next;
        if res <= 1e-3 * RTOL || stalled {
            break;
        }
    }
    (x, r, res, iterations)
}

/// Right-preconditioned GMRES without restarts, started from zero, using a
/// stale factorization; `None` unless the relative residual reaches
/// `1e-2 * RTOL` within `MAX_KRYLOV` iterations.
fn gmres(lu: &Lu<usize, f64>, system: &SaddleSystem, rhs: &[f64], rhs_norm: f64) -> Option<(Vec<f64>, usize)> {
    let dim = rhs.len();
    let target = 1e-2 * RTOL * rhs_norm;
    let precondition = |v: &[f64]| {
        let mut m = Mat::from_fn(dim, 1, |i, _| v[i]);
        lu.solve_in_place(m.as_mut());
        (0..dim).map(|i| m[(i, 0)]).collect::<Vec<f64>>()
    };
    let mut basis: Vec<Vec<f64>> = vec![rhs.iter().map(|v| v / rhs_norm).collect()];
    // Hessenberg columns, reduced by Givens rotations as they arrive.
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![rhs_norm];
    for j in 0..MAX_KRYLOV {
        let mut w = system.apply(&precondition(&basis[j]));
        let mut col = Vec::with_capacity(j + 2);
        for v in &basis {
            let d: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= d * vi;
            }
            col.push(d);
        }
        let wn = norm(&w);
        col.push(wn);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, b) = (col[i], col[i + 1]);
            col[i] = c * a + s * b;
            col[i + 1] = -s * a + c * b;
        }
        let (a, b) = (col[j], col[j + 1]);
        let r = a.hypot(b);
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        let (c, s) = (a / r, b / r);
        col[j] = r;
        col[j + 1] = 0.0;
        rot.push((c, s));
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        if g[j + 1].abs() <= target || wn == 0.0 {
            let k = j + 1;
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let mut acc = g[i];
                for l in i + 1..k {
                    acc -= h[l][i] * y[l];
                }
                y[i] = acc / h[i][i];
            }
            let mut z = vec![0.0; dim];
            for (v, yi) in basis.iter().zip(&y) {
                for (zi, vi) in z.iter_mut().zip(v) {
                    *zi += yi * vi;
                }
            }
            return Some((precondition(&z), k));
        }
        basis.push(w.iter().map(|x| x / wn).collect());
    }
    None
}

impl SaddleSolver {
    pub fn new() -> Self {
        SaddleSolver {
            pattern: None,
            factor: None,
            factored_values: Vec::new(),
            stale: false,
            reuse_factor: true,
        }
    }

    /// Factorize every matrix afresh.
    pub fn direct() -> Self {
        SaddleSolver {
            reuse_factor: false,
            ..SaddleSolver::new()
        }
    }

    pub fn solve(&mut self, system: &SaddleSystem) -> Result<SaddleSolution> {
        let start = Instant::now();
        let (nv, np) = system.validate()?;
        let dim = system.dim();
        let (idx, val) = system.triplets();

        let reused = matches!(&self.pattern, Some(p) if p.indices == idx);
        if !reused {
            let pairs: Vec<Pair<usize, usize>> = idx.iter().map(|&(r, c)| Pair::new(r, c)).collect();
            let (symbolic, argsort) =
                SymbolicSparseColMat::try_new_from_indices(dim, dim, &pairs).map_err(|e| Error::Singular {
                    context: format!("sparsity pattern: {e:?}"),
                })?;
            let lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| Error::Singular {
                context: format!("symbolic factorization: {e:?}"),
            })?;
            self.pattern = Some(Pattern {
                indices: idx,
                symbolic,
                argsort,
                lu,
            });
            self.factor = None;
        }
        let pat = self.pattern.as_ref().unwrap();
        let mat =
            SparseColMat::new_from_argsort(pat.symbolic.clone(), &pat.argsort, &val).map_err(|e| Error::Singular {
                context: format!("matrix values: {e:?}"),
            })?;

        let rhs = system.rhs();
        let rhs_norm = norm(&rhs).max(f64::MIN_POSITIVE);
        let mut outcome = None;
        if let Some(lu) = self.factor.as_ref().filter(|_| self.factored_values == val) {
            let (x, r, res, sweeps) = refine(lu, system, &rhs, rhs_norm);
            outcome = Some((x, r, res, sweeps, false));
        } else if self.reuse_factor && !self.stale {
            if let Some(lu) = &self.factor {
                if let Some((x, its)) = gmres(lu, system, &rhs, rhs_norm) {
                    let r = system.residual(&x);
                    let res = norm(&r) / rhs_norm;
                    if res <= RTOL {
                        self.stale = its > REFACTOR_AFTER;
                        outcome = Some((x, r, res, its, false));
                    }
                }
            }
        }
        let (x, r, mut res, iterations, factorized) = match outcome {
            Some(o) => o,
            None => {
                let lu = Lu::try_new_with_symbolic(pat.lu.clone(), mat.as_ref()).map_err(|e| Error::Singular {
                    context: format!("numeric factorization of {dim}x{dim} saddle matrix: {e:?}"),
                })?;
                let (x, r, res, sweeps) = refine(&lu, system, &rhs, rhs_norm);
                self.factor = Some(lu);
                self.factored_values = val;
                self.stale = false;
                (x, r, res, sweeps, true)
            }
        };
        if rhs.iter().all(|&v| v == 0.0) {
            res = norm(&r);
        }

        let singular = !res.is_finite() || res > RTOL;
        if singular {
            return Err(Error::Singular {
                context: format!(
                    "saddle solve with {nv} velocity and {np} pressure unknowns reached relative residual {res:.3e}"
                ),
            });
        }
        let mut pressure = x[nv..nv + np].to_vec();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let area = dot(system.mean, system.pressure_constant);
        if area != 0.0 {
            let shift = dot(system.mean, &pressure) / area;
            for (p, c) in pressure.iter_mut().zip(system.pressure_constant) {
                *p -= shift * c;
            }
        }
        Ok(SaddleSolution {
            velocity: x[..nv].to_vec(),
            pressure,
            multiplier: x[nv + np],
            report: SolverReport {
                relative_residual: res,
                iterations,
                factorized,
                wall_time: start.elapsed(),
                singular,
                reused_symbolic: reused,
            },
        })
    }
}

/// One-off solve without pattern caching.
pub fn solve_saddle(system: &SaddleSystem) -> Result<SaddleSolution> {
    SaddleSolver::direct().solve(system)
}
