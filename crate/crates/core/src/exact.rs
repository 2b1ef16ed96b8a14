//! Manufactured solutions on the unit square with homogeneous boundary data.
//!
//! Both velocities are `e^t` times a steady solenoidal profile, so
//! `u_t = u`, and the forcing is `f = u_t - mu lap u + (u . grad) u + grad p`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manufactured {
    /// Stream function `e^t x^2 (x-1)^2 y^2 (y-1)^2`, `p = 2 e^t (x - y)`.
    Polynomial,
    /// `u = e^t (sin(2 pi y)(1 - cos(2 pi x)), sin(2 pi x)(cos(2 pi y) - 1))`,
    /// `p = 2 pi e^t (cos(2 pi y) - cos(2 pi x))`.
    Trigonometric,
}

// x^2 (x-1)^2 and its derivatives
fn a0(x: f64) -> f64 {
    x * x * (x - 1.0) * (x - 1.0)
}
fn a1(x: f64) -> f64 {
    2.0 * x * (x - 1.0) * (2.0 * x - 1.0)
}
fn a2(x: f64) -> f64 {
    12.0 * x * x - 12.0 * x + 2.0
}
fn a3(x: f64) -> f64 {
    24.0 * x - 12.0
}

const K: f64 = 2.0 * PI;

impl Manufactured {
    pub fn velocity(self, x: Point, t: f64) -> [f64; 2] {
        let et = t.exp();
        let [x, y] = x;
        match self {
            Manufactured::Polynomial => [et * a0(x) * a1(y), -et * a1(x) * a0(y)],
            Manufactured::Trigonometric => [
                et * (K * y).sin() * (1.0 - (K * x).cos()),
                et * (K * x).sin() * ((K * y).cos() - 1.0),
            ],
        }
    }

    /// `grad[c]` is the gradient of component `c`.
    pub fn velocity_grad(self, x: Point, t: f64) -> [[f64; 2]; 2] {
        let et = t.exp();
        let [x, y] = x;
        match self {
            Manufactured::Polynomial => [
                [et * a1(x) * a1(y), et * a0(x) * a2(y)],
                [-et * a2(x) * a0(y), -et * a1(x) * a1(y)],
            ],
            Manufactured::Trigonometric => {
                let (sx, cx) = (K * x).sin_cos();
                let (sy, cy) = (K * y).sin_cos();
                [
                    [et * K * sy * sx, et * K * cy * (1.0 - cx)],
                    [et * K * cx * (cy - 1.0), -et * K * sx * sy],
                ]
            }
        }
    }

    pub fn velocity_laplacian(self, x: Point, t: f64) -> [f64; 2] {
        let et = t.exp();
        let [x, y] = x;
        match self {
            Manufactured::Polynomial => [
                et * (a2(x) * a1(y) + a0(x) * a3(y)),
                -et * (a3(x) * a0(y) + a1(x) * a2(y)),
            ],
            Manufactured::Trigonometric => {
                let (sx, cx) = (K * x).sin_cos();
                let (sy, cy) = (K * y).sin_cos();
                [et * K * K * sy * (2.0 * cx - 1.0), et * K * K * sx * (1.0 - 2.0 * cy)]
            }
        }
    }

    pub fn velocity_dt(self, x: Point, t: f64) -> [f64; 2] {
        self.velocity(x, t)
    }

    pub fn divergence(self, x: Point, t: f64) -> f64 {
        let g = self.velocity_grad(x, t);
        g[0][0] + g[1][1]
    }

    pub fn pressure(self, x: Point, t: f64) -> f64 {
        let et = t.exp();
        let [x, y] = x;
        match self {
            Manufactured::Polynomial => 2.0 * et * (x - y),
            Manufactured::Trigonometric => et * K * ((K * y).cos() - (K * x).cos()),
        }
    }

    pub fn pressure_grad(self, x: Point, t: f64) -> [f64; 2] {
        let et = t.exp();
        let [x, y] = x;
        match self {
            Manufactured::Polynomial => [2.0 * et, -2.0 * et],
            Manufactured::Trigonometric => [et * K * K * (K * x).sin(), -et * K * K * (K * y).sin()],
        }
    }

    pub fn forcing(self, mu: f64, x: Point, t: f64) -> [f64; 2] {
        let u = self.velocity(x, t);
        let ut = self.velocity_dt(x, t);
        let g = self.velocity_grad(x, t);
        let lap = self.velocity_laplacian(x, t);
        let gp = self.pressure_grad(x, t);
        let mut f = [0.0; 2];
        for c in 0..2 {
            f[c] = ut[c] - mu * lap[c] + g[c][0] * u[0] + g[c][1] * u[1] + gp[c];
        }
        f
    }

    pub fn name(self) -> &'static str {
        match self {
            Manufactured::Polynomial => "ex1",
            Manufactured::Trigonometric => "ex2",
        }
    }
}

impl fmt::Display for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Manufactured {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ex1" => Ok(Manufactured::Polynomial),
            "ex2" => Ok(Manufactured::Trigonometric),
            _ => Err(Error::Config(format!("unknown manufactured solution `{s}`"))),
        }
    }
}
