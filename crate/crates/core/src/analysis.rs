//! Error norms against exact solutions and experimental orders of convergence.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::space::quadrature::{edge_rule, triangle_rule};
use crate::space::{interpolate, BrokenField, DATA_QUAD_DEGREE};

/// Square root of `sum_T int_T |grad(u - U)|^2 + sum_e sigma/|e| int_e |[u - U]|^2`
/// for a continuous `u` (so `[u - U] = -[U]` inside and `u - U` on the boundary).
pub fn broken_energy_error(
    field: &BrokenField,
    u: impl Fn(Point) -> [f64; 2],
    grad_u: impl Fn(Point) -> [[f64; 2]; 2],
    sigma: f64,
) -> f64 {
    let mesh = field.space().mesh().clone();
    let vol = triangle_rule(DATA_QUAD_DEGREE).expect("supported degree");
    let mut s = 0.0;
    for (t, geo) in mesh.geometry.iter().enumerate() {
        for (&xi, &w) in vol.points.iter().zip(&vol.weights) {
            let g = grad_u(geo.map(xi));
            let gh = field.grad(t, xi);
            let mut d = 0.0;
            for c in 0..2 {
                for k in 0..2 {
                    d += (g[c][k] - gh[c][k]).powi(2);
                }
            }
            s += w * geo.det.abs() * d;
        }
    }
    let rule = edge_rule(DATA_QUAD_DEGREE + 1).expect("supported degree");
    let frames = mesh.jump_average_frames(&rule);
    for (edge, frame) in mesh.edges.iter().zip(&frames) {
        let scale = sigma / edge.length;
        for p in &frame.points {
            let vm = field.eval(edge.owner, p.owner_ref);
            let jump = match (edge.neighbor, p.neighbor_ref) {
                (Some(n), Some(r)) => {
                    let vn = field.eval(n, r);
                    [vm[0] - vn[0], vm[1] - vn[1]]
                }
                _ => {
                    let ux = u(p.x);
                    [vm[0] - ux[0], vm[1] - ux[1]]
                }
            };
            s += scale * p.weight * (jump[0] * jump[0] + jump[1] * jump[1]);
        }
    }
    s.sqrt()
}

/// `||u - U||_{L^2}` over all components of the field's space.
pub fn l2_error(field: &BrokenField, u: impl Fn(Point) -> [f64; 2]) -> f64 {
    let comps = field.space().components();
    let mesh = field.space().mesh().clone();
    let vol = triangle_rule(DATA_QUAD_DEGREE).expect("supported degree");
    let mut s = 0.0;
    for (t, geo) in mesh.geometry.iter().enumerate() {
        for (&xi, &w) in vol.points.iter().zip(&vol.weights) {
            let ux = u(geo.map(xi));
            let uh = field.eval(t, xi);
            let d: f64 = (0..comps).map(|c| (ux[c] - uh[c]).powi(2)).sum();
            s += w * geo.det.abs() * d;
        }
    }
    s.sqrt()
}

/// Mean values `(discrete, exact)` of a scalar field and function.
fn means(field: &BrokenField, p: &impl Fn(Point) -> f64) -> (f64, f64) {
    let mesh = field.space().mesh().clone();
    let vol = triangle_rule(DATA_QUAD_DEGREE).expect("supported degree");
    let (mut ph, mut pe, mut area) = (0.0, 0.0, 0.0);
    for (t, geo) in mesh.geometry.iter().enumerate() {
        for (&xi, &w) in vol.points.iter().zip(&vol.weights) {
            let dw = w * geo.det.abs();
            ph += dw * field.eval(t, xi)[0];
            pe += dw * p(geo.map(xi));
            area += dw;
        }
    }
    (ph / area, pe / area)
}

/// `||p - P||_{L^2}` after removing the mean of each.
pub fn pressure_l2_error(field: &BrokenField, p: impl Fn(Point) -> f64) -> f64 {
    let (mh, me) = means(field, &p);
    let mut shifted = field.clone();
    let one = field.space().constant([1.0, 0.0]);
    for (c, o) in shifted.coeffs.iter_mut().zip(&one) {
        *c -= mh * o;
    }
    l2_error(&shifted, |x| [p(x) - me, 0.0])
}

/// `log2(e_{i-1} / e_i)` for consecutive errors under mesh halving.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "convergence rates need positive finite errors, got {bad}"
        )));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// How a discrete solution is compared with the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMeasure {
    /// Norms of `u - U` and `p - P` by high-order quadrature.
    #[default]
    Exact,
    /// Norms of `I u - U` and `I p - P`, with `I` the nodal interpolant into
    /// the discrete spaces. The energy entry is the broken gradient seminorm,
    /// without jump terms. This is what a code reports when it stores exact
    /// data as same-degree interpolants before differencing.
    Interpolant,
}

impl fmt::Display for ErrorMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMeasure::Exact => "exact",
            ErrorMeasure::Interpolant => "interpolant",
        })
    }
}

impl FromStr for ErrorMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ErrorMeasure::Exact),
            "interpolant" => Ok(ErrorMeasure::Interpolant),
            _ => Err(Error::Config(format!("unknown error measure `{s}`"))),
        }
    }
}

/// Exact velocity, its gradient and pressure at the comparison time.
#[derive(Clone, Copy)]
pub struct ExactFields<'a> {
    pub velocity: &'a dyn Fn(Point) -> [f64; 2],
    pub velocity_grad: &'a dyn Fn(Point) -> [[f64; 2]; 2],
    pub pressure: &'a dyn Fn(Point) -> f64,
}

fn difference(a: &BrokenField, b: &BrokenField) -> BrokenField {
    let mut d = a.clone();
    for (x, y) in d.coeffs.iter_mut().zip(&b.coeffs) {
        *x -= y;
    }
    d
}

/// Energy, velocity `L^2` and pressure errors of a discrete solution.
pub fn measure_errors(
    measure: ErrorMeasure,
    velocity: &BrokenField,
    pressure: &BrokenField,
    exact: ExactFields,
    sigma: f64,
    h: f64,
    dt: f64,
) -> Result<ErrorTriple> {
    let (energy, l2, p_err) = match measure {
        ErrorMeasure::Exact => (
            broken_energy_error(velocity, exact.velocity, exact.velocity_grad, sigma),
            l2_error(velocity, exact.velocity),
            pressure_l2_error(pressure, exact.pressure),
        ),
        ErrorMeasure::Interpolant => {
            let iu = interpolate(velocity.space(), exact.velocity)?;
            let ip = interpolate(pressure.space(), |x| [(exact.pressure)(x), 0.0])?;
            let du = difference(velocity, &iu);
            let dp = difference(pressure, &ip);
            let zero = |_: Point| [0.0; 2];
            (
                broken_energy_error(&du, zero, |_| [[0.0; 2]; 2], 0.0),
                l2_error(&du, zero),
                pressure_l2_error(&dp, |_| 0.0),
            )
        }
    };
    Ok(ErrorTriple {
        energy,
        l2,
        pressure: p_err,
        h,
        dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple {
    pub energy: f64,
    pub l2: f64,
    pub pressure: f64,
    /// Mesh parameter `1/n`.
    pub h: f64,
    pub dt: f64,
}

impl ErrorTriple {
    pub fn is_valid(&self) -> bool {
        [self.energy, self.l2, self.pressure]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    /// `Err` carries the failure message of a row that did not complete.
    pub outcome: std::result::Result<ErrorTriple, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub energy: Option<f64>,
    pub l2: Option<f64>,
    pub pressure: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

fn rate(prev: f64, cur: f64) -> Option<f64> {
    eoc(&[prev, cur]).ok().map(|r| r[0])
}

impl ConvergenceTable {
    pub fn push(&mut self, row: ConvergenceRow) {
        self.rows.push(row);
    }

    /// Rates against the previous row; absent for the first row, after a
    /// failed row, or when the mesh did not halve.
    pub fn rates(&self) -> Vec<Rates> {
        let mut out = vec![Rates::default(); self.rows.len()];
        for i in 1..self.rows.len() {
            let (prev, cur) = (&self.rows[i - 1], &self.rows[i]);
            if cur.n != 2 * prev.n {
                continue;
            }
            if let (Ok(a), Ok(b)) = (&prev.outcome, &cur.outcome) {
                out[i] = Rates {
                    energy: rate(a.energy, b.energy),
                    l2: rate(a.l2, b.l2),
                    pressure: rate(a.pressure, b.pressure),
                };
            }
        }
        out
    }

    pub fn last_rates(&self) -> Rates {
        self.rates().last().copied().unwrap_or_default()
    }

    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.is_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,energy_err,energy_rate,l2_err,l2_rate,p_err,p_rate\n");
        let fmt_rate = |r: Option<f64>| r.map(|v| format!("{v:.4}")).unwrap_or_default();
        for (row, r) in self.rows.iter().zip(self.rates()) {
            match &row.outcome {
                Ok(e) => {
                    let _ = writeln!(
                        s,
                        "{:.6e},{:.4e},{},{:.4e},{},{:.4e},{}",
                        row.h,
                        e.energy,
                        fmt_rate(r.energy),
                        e.l2,
                        fmt_rate(r.l2),
                        e.pressure,
                        fmt_rate(r.pressure)
                    );
                }
                Err(_) => {
                    let _ = writeln!(s, "{:.6e},failed,,failed,,failed,", row.h);
                }
            }
        }
        s
    }

    /// Human-readable table.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:>8} {:>12} {:>7} {:>12} {:>7} {:>12} {:>7}\n",
            "h", "energy", "rate", "L2", "rate", "pressure", "rate"
        );
        let fmt_rate = |r: Option<f64>| r.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        for (row, r) in self.rows.iter().zip(self.rates()) {
            match &row.outcome {
                Ok(e) => {
                    let _ = writeln!(
                        s,
                        "{:>8} {:>12.4e} {:>7} {:>12.4e} {:>7} {:>12.4e} {:>7}",
                        format!("1/{}", row.n),
                        e.energy,
                        fmt_rate(r.energy),
                        e.l2,
                        fmt_rate(r.l2),
                        e.pressure,
                        fmt_rate(r.pressure)
                    );
                }
                Err(msg) => {
                    let _ = writeln!(s, "{:>8} failed: {msg}", format!("1/{}", row.n));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Manufactured;
    use crate::mesh::{Mesh, Rectangle};
    use crate::space::{project_l2, project_l2_scalar, BrokenSpace};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn space(n: usize, k: usize, comps: usize) -> Arc<BrokenSpace> {
        let mesh = Arc::new(Mesh::uniform(n, Rectangle::UNIT_SQUARE).unwrap());
        Arc::new(BrokenSpace::new(mesh, k, comps))
    }

    #[test]
    fn eoc_reproduces_reference_rate() {
        // five-digit inputs reproduce a four-decimal rate only
        // reproduced to about 1e-4
        let r = eoc(&[6.3073e-3, 1.5131e-3]).unwrap();
        assert!((r[0] - 2.0594).abs() < 2e-4, "{}", r[0]);
        assert_eq!(eoc(&[1.0, 1.0]).unwrap(), vec![0.0]);
        assert_eq!(eoc(&[1.0, 0.5, 0.25]).unwrap(), vec![1.0, 1.0]);
        assert!(eoc(&[1.0, 0.0]).is_err());
        assert!(eoc(&[-1.0, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn eoc_inverts_power_law(c in 1e-6f64..1e3, alpha in 0.1f64..4.0) {
            let errs: Vec<f64> = (0..5).map(|i| c * 2f64.powf(-alpha * i as f64)).collect();
            for r in eoc(&errs).unwrap() {
                prop_assert!((r - alpha).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_affine_interpolant_has_zero_energy_error() {
        let s = space(4, 1, 2);
        let u = |x: Point| [1.0 + 2.0 * x[0] - x[1], 0.5 * x[1]];
        let g = |_: Point| [[2.0, -1.0], [0.0, 0.5]];
        let uh = project_l2(&s, u).unwrap();
        assert!(broken_energy_error(&uh, u, g, 10.0) < 1e-12);
        assert!(l2_error(&uh, u) < 1e-13);
    }

    #[test]
    fn zero_field_energy_is_seminorm_of_exact() {
        let s = space(4, 1, 2);
        let ex = Manufactured::Polynomial;
        let zero = BrokenField::zeros(s.clone());
        let e = broken_energy_error(&zero, |x| ex.velocity(x, 1.0), |x| ex.velocity_grad(x, 1.0), 10.0);
        // tensor Gauss oracle of int |grad u|^2; boundary trace vanishes
        let (nodes, weights) = crate::space::quadrature::gauss_legendre_unit(16);
        let mut s2 = 0.0;
        for (&x, &wx) in nodes.iter().zip(&weights) {
            for (&y, &wy) in nodes.iter().zip(&weights) {
                let g = ex.velocity_grad([x, y], 1.0);
                s2 += wx * wy * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
            }
        }
        assert!((e - s2.sqrt()).abs() < 1e-9 * e, "{e} {}", s2.sqrt());
    }

    #[test]
    fn trigonometric_pressure_norm() {
        let s = space(8, 0, 1);
        let ex = Manufactured::Trigonometric;
        let zero = BrokenField::zeros(s);
        let e = pressure_l2_error(&zero, |x| ex.pressure(x, 1.0));
        // ||cos 2 pi y - cos 2 pi x||^2 = 1/2 + 1/2
        let exact = std::f64::consts::E * 2.0 * PI;
        assert!((e - exact).abs() < 1e-6 * exact, "{e} {exact}");
    }

    #[test]
    fn projection_error_is_below_norm() {
        let s = space(4, 1, 2);
        let ex = Manufactured::Trigonometric;
        let u = |x: Point| ex.velocity(x, 0.5);
        let ph = project_l2(&s, u).unwrap();
        let e = l2_error(&ph, u);
        let norm = l2_error(&BrokenField::zeros(s), u);
        assert!(e > 0.0 && e < norm);
    }

    #[test]
    fn pressure_error_ignores_constants() {
        let s = space(4, 1, 1);
        let p = |x: Point| x[0] * x[1];
        let ph = project_l2_scalar(&s, |x| p(x) + 3.0).unwrap();
        let e0 = pressure_l2_error(&ph, p);
        let e1 = l2_error(&project_l2_scalar(&s, p).unwrap(), |x| [p(x), 0.0]);
        assert!((e0 - e1).abs() < 1e-12);
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive() {
        let s = space(3, 1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let zero_u = |_: Point| [0.0, 0.0];
        let zero_g = |_: Point| [[0.0; 2]; 2];
        for _ in 0..20 {
            let mut a = BrokenField::zeros(s.clone());
            let mut b = BrokenField::zeros(s.clone());
            a.coeffs.iter_mut().for_each(|c| *c = rng.random_range(-1.0..1.0));
            b.coeffs.iter_mut().for_each(|c| *c = rng.random_range(-1.0..1.0));
            let scale = rng.random_range(-3.0..3.0);
            let mut sa = a.clone();
            sa.scale(scale);
            let na = broken_energy_error(&a, zero_u, zero_g, 10.0);
            let nsa = broken_energy_error(&sa, zero_u, zero_g, 10.0);
            assert!((nsa - scale.abs() * na).abs() < 1e-12 * nsa.max(1e-300));
            let la = l2_error(&a, zero_u);
            assert!((l2_error(&sa, zero_u) - scale.abs() * la).abs() < 1e-12 * la);
            let mut sum = a.clone();
            for (x, y) in sum.coeffs.iter_mut().zip(&b.coeffs) {
                *x += y;
            }
            let nb = broken_energy_error(&b, zero_u, zero_g, 10.0);
            assert!(broken_energy_error(&sum, zero_u, zero_g, 10.0) <= na + nb + 1e-12);
            assert!(l2_error(&sum, zero_u) <= la + l2_error(&b, zero_u) + 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = ConvergenceTable::default();
        for (n, e) in [(4, 6.3073e-3), (8, 1.5131e-3)] {
            t.push(ConvergenceRow {
                n,
                h: 1.0 / n as f64,
                dt: 1.0 / (n * n) as f64,
                outcome: Ok(ErrorTriple {
                    energy: e,
                    l2: e,
                    pressure: e,
                    h: 1.0 / n as f64,
                    dt: 1.0 / (n * n) as f64,
                }),
            });
        }
        t.push(ConvergenceRow {
            n: 16,
            h: 1.0 / 16.0,
            dt: 1.0 / 256.0,
            outcome: Err("singular".into()),
        });
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "h,energy_err,energy_rate,l2_err,l2_rate,p_err,p_rate");
        assert!(lines[1].ends_with(",,6.3073e-3,,6.3073e-3,"));
        assert!(lines[2].contains(",2.0595,"));
        assert!(lines[3].contains("failed"));
        assert_eq!(t.last_rates(), Rates::default());
        assert!(!t.all_succeeded());
    }

    #[test]
    fn interpolant_measure_vanishes_on_interpolants() {
        let ex = Manufactured::Trigonometric;
        let u = move |x: Point| ex.velocity(x, 1.0);
        let g = move |x: Point| ex.velocity_grad(x, 1.0);
        let p = move |x: Point| ex.pressure(x, 1.0);
        let exact = ExactFields {
            velocity: &u,
            velocity_grad: &g,
            pressure: &p,
        };
        let v = space(6, 1, 2);
        let q = space(6, 0, 1);
        let iu = interpolate(&v, u).unwrap();
        let ip = interpolate(&q, |x| [p(x), 0.0]).unwrap();
        let e = measure_errors(ErrorMeasure::Interpolant, &iu, &ip, exact, 10.0, 1.0 / 6.0, 0.1).unwrap();
        assert!(e.energy < 1e-12 && e.l2 < 1e-12 && e.pressure < 1e-12, "{e:?}");
        let e = measure_errors(ErrorMeasure::Exact, &iu, &ip, exact, 10.0, 1.0 / 6.0, 0.1).unwrap();
        assert!(e.energy > 1e-2 && e.l2 > 1e-3 && e.pressure > 1e-2, "{e:?}");
        assert_eq!((e.h, e.dt), (1.0 / 6.0, 0.1));
        for m in [ErrorMeasure::Exact, ErrorMeasure::Interpolant] {
            assert_eq!(m.to_string().parse::<ErrorMeasure>().unwrap(), m);
        }
        assert!("nodal".parse::<ErrorMeasure>().is_err());
    }
}
