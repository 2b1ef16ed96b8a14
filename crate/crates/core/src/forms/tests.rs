use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::{Mesh, Rectangle};
use crate::oracle::FormOracle;
use crate::space::{project_l2, BrokenField};

fn ctx(n: usize, k: usize, kp: usize) -> DgContext {
    let mesh = Arc::new(Mesh::uniform(n, Rectangle::UNIT_SQUARE).unwrap());
    DgContext::new(mesh, k, kp).unwrap()
}

/// A 2 x 1 rectangle cut along its anti-diagonal.
fn two_triangles(k: usize, kp: usize) -> DgContext {
    let domain = Rectangle {
        x0: 0.0,
        x1: 2.0,
        y0: 0.0,
        y1: 1.0,
    };
    let mesh = Mesh::from_triangles(
        vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 3], [1, 2, 3]],
        domain,
        1,
    )
    .unwrap();
    DgContext::new(Arc::new(mesh), k, kp).unwrap()
}

fn random_field(ctx: &DgContext, rng: &mut ChaCha8Rng) -> BrokenField {
    let coeffs = (0..ctx.n_velocity()).map(|_| rng.random_range(-1.0..1.0)).collect();
    BrokenField::from_coeffs(ctx.velocity.clone(), coeffs).unwrap()
}

fn cfg(symmetry: Symmetry) -> FormConfig {
    FormConfig::new(symmetry, 10.0, 1.0).unwrap()
}

fn oracle(ctx: &DgContext) -> FormOracle {
    let k = ctx.velocity.degree().max(ctx.pressure.degree());
    FormOracle::new(ctx.mesh.clone(), 3 * k + 1, 3 * k + 2).unwrap()
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn sipg_is_symmetric() {
    for (k, n) in [(1, 4), (2, 2)] {
        let c = ctx(n, k, k - 1);
        let a = assemble_diffusion(&c, &cfg(Symmetry::Sipg));
        assert!(a.is_symmetric());
        assert!(a.max_asymmetry() < 1e-12 * a.max_abs());
    }
}

#[test]
fn nipg_energy_identity() {
    let c = ctx(4, 1, 0);
    let a = assemble_diffusion(&c, &cfg(Symmetry::Nipg));
    let g = assemble_broken_gradient(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let v = random_field(&c, &mut rng);
        let lhs = a.quadratic_form(&v.coeffs);
        let rhs = g.quadratic_form(&v.coeffs);
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
    }
}

#[test]
fn penalty_of_continuous_field_is_boundary_trace() {
    let c = ctx(4, 1, 0);
    let conf = cfg(Symmetry::Sipg);
    let j = assemble_penalty(&c, &conf);
    let v = project_l2(&c.velocity, |x| [2.0 * x[0] - x[1], x[1] + 0.5]).unwrap();
    let boundary: f64 = {
        let o = oracle(&c);
        o.penalty(conf.sigma, &v, &v)
    };
    let value = j.quadratic_form(&v.coeffs);
    assert!((value - boundary).abs() < 1e-12 * boundary);
    let rule = crate::space::quadrature::edge_rule(4).unwrap();
    let mut expected = 0.0;
    for e in c.mesh.edges.iter().filter(|e| e.is_boundary()) {
        let a = c.mesh.vertices[e.vertices[0]];
        let b = c.mesh.vertices[e.vertices[1]];
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let u = [2.0 * x[0] - x[1], x[1] + 0.5];
            expected += conf.sigma * w * (u[0] * u[0] + u[1] * u[1]);
        }
    }
    assert!((value - expected).abs() < 1e-10 * expected, "{value} {expected}");
}

#[test]
fn penalty_of_single_interior_jump() {
    // indicator of one element: every edge of it contributes sigma/|e| * |e|
    let c = ctx(2, 0, 0);
    let conf = cfg(Symmetry::Sipg);
    let j = assemble_penalty(&c, &conf);
    let t = 3;
    let mut v = BrokenField::zeros(c.velocity.clone());
    v.coeffs[c.velocity.dof(t, 0, 0)] = std::f64::consts::FRAC_1_SQRT_2;
    let edges = c.mesh.element_edges[t].len() as f64;
    assert!((j.quadratic_form(&v.coeffs) - conf.sigma * edges).abs() < 1e-12);
}

#[test]
fn coupling_annihilates_constant_pressure() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kp in [0, 1] {
        let c = ctx(3, 1, kp);
        let b = assemble_pressure_coupling(&c);
        let one = c.pressure.constant([1.0, 0.0]);
        for _ in 0..100 {
            let v = random_field(&c, &mut rng);
            let val = b.bilinear(&one, &v.coeffs);
            assert!(val.abs() < 1e-12, "{val}");
        }
    }
}

#[test]
fn coupling_of_solenoidal_linear_field() {
    // (x, -y) is divergence free but not zero on the boundary:
    // b(u, q) = int_boundary q u . n for piecewise constant q.
    let c = ctx(4, 1, 0);
    let b = assemble_pressure_coupling(&c);
    let u = project_l2(&c.velocity, |x| [x[0], -x[1]]).unwrap();
    let bu = b.mul_vec(&u.coeffs);
    let lift = assemble_continuity_lift(&c, |x| [x[0], -x[1]]);
    for (a, l) in bu.iter().zip(&lift) {
        assert!((a - l).abs() < 1e-12);
    }
    let exact = exact_continuity_functional(&c, |x| [x[0], -x[1]], |_| 0.0);
    for (a, l) in bu.iter().zip(&exact) {
        assert!((a - l).abs() < 1e-12);
    }
}

#[test]
fn convection_with_zero_advection_is_zero() {
    let c = ctx(3, 1, 0);
    let w = BrokenField::zeros(c.velocity.clone());
    let op = assemble_convection(&c, &w, None);
    assert_eq!(op.matrix.max_abs(), 0.0);
}

#[test]
fn convection_is_positive() {
    let c = ctx(3, 1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let w = random_field(&c, &mut rng);
        let op = assemble_convection(&c, &w, None);
        let q = op.matrix.quadratic_form(&w.coeffs);
        assert!(q >= -1e-12, "{q}");
        let z = random_field(&c, &mut rng);
        assert!(op.matrix.quadratic_form(&z.coeffs) >= -1e-12);
    }
}

#[test]
fn convection_integration_by_parts() {
    let c = ctx(3, 1, 0);
    let o = oracle(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let u = random_field(&c, &mut rng);
        let z = random_field(&c, &mut rng);
        let th = random_field(&c, &mut rng);
        let op = assemble_convection(&c, &u, None);
        let lhs = op.matrix.bilinear(&th.coeffs, &z.coeffs);
        let rhs = o.convection_by_parts(&u, &z, &th);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }
}

#[test]
fn mass_and_load_of_constants() {
    let c = ctx(4, 1, 0);
    let m = assemble_mass(&c);
    let one = c.velocity.constant([1.0, 0.0]);
    assert!((m.quadratic_form(&one) - 1.0).abs() < 1e-13);
    let load = assemble_load(&c, |_| [1.0, 0.0]);
    let fx: f64 = load.iter().zip(&one).map(|(a, b)| a * b).sum();
    let fy: f64 = load
        .iter()
        .zip(&c.velocity.constant([0.0, 1.0]))
        .map(|(a, b)| a * b)
        .sum();
    assert!((fx - 1.0).abs() < 1e-13 && fy.abs() < 1e-13);
    let mean = assemble_pressure_mean(&c);
    let pone = c.pressure.constant([1.0, 0.0]);
    let area: f64 = mean.iter().zip(&pone).map(|(a, b)| a * b).sum();
    assert!((area - 1.0).abs() < 1e-13);
}

#[test]
fn homogeneous_data_gives_zero_lifts() {
    let c = ctx(3, 1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let w = random_field(&c, &mut rng);
    let lift = assemble_dirichlet_lift(&c, &cfg(Symmetry::Sipg), &|_| [0.0, 0.0], &w);
    assert!(lift.momentum.iter().all(|&v| v == 0.0));
    assert!(lift.continuity.iter().all(|&v| v == 0.0));
}

#[test]
fn sipg_coercive_for_sigma_ten() {
    for n in [2, 4, 8] {
        let c = ctx(n, 1, 0);
        let mut conf = cfg(Symmetry::Sipg);
        let check = conf.check_coercivity(&c).unwrap();
        assert!(check.constant >= 0.05, "n={n}: {}", check.constant);
        assert_eq!(conf.coercivity, Some(check));
    }
    let c = ctx(2, 1, 0);
    let weak = FormConfig::new(Symmetry::Sipg, 0.1, 1.0).unwrap();
    assert!(coercivity_constant(&c, &weak).unwrap() < 0.0);
}

#[test]
fn config_validation() {
    assert!(FormConfig::new(Symmetry::Sipg, 0.0, 1.0).is_err());
    assert!(FormConfig::new(Symmetry::Sipg, 1.0, -1.0).is_err());
    assert_eq!(Symmetry::from_epsilon(1.0).unwrap(), Symmetry::Nipg);
    assert!(Symmetry::from_epsilon(0.0).is_err());
}

fn compare_with_oracle(c: &DgContext, seed: u64) {
    let o = oracle(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = &c.velocity;
    for sym in [Symmetry::Sipg, Symmetry::Nipg] {
        let conf = cfg(sym);
        let eps = conf.epsilon();
        let a = assemble_diffusion(c, &conf).to_dense();
        let ad = o.matrix(v, v, |w, t| o.diffusion(eps, w, t));
        assert!(max_diff(&a, &ad) < 1e-12 * ad.abs().max(), "{sym:?}");
    }
    let conf = cfg(Symmetry::Sipg);
    let j = assemble_penalty(c, &conf).to_dense();
    let jd = o.matrix(v, v, |w, t| o.penalty(conf.sigma, w, t));
    assert!(max_diff(&j, &jd) < 1e-12 * jd.abs().max());

    let m = assemble_mass(c).to_dense();
    let md = o.matrix(v, v, |w, t| o.mass(w, t));
    assert!(max_diff(&m, &md) < 1e-12 * md.abs().max());

    let b = assemble_pressure_coupling(c).to_dense();
    let bd = o.matrix(&c.pressure, v, |w, q| o.coupling(w, q));
    assert!(max_diff(&b, &bd) < 1e-12 * bd.abs().max());

    let w = random_field(c, &mut rng);
    let conv = assemble_convection(c, &w, None).matrix.to_dense();
    let cd = o.matrix(v, v, |z, t| o.convection(&w, &w, z, t, None));
    assert!(max_diff(&conv, &cd) < 1e-12 * cd.abs().max());

    let f = |x: Point| [x[0] * x[1], 1.0 - x[0]];
    let load = assemble_load(c, f);
    let ld = o.vector(v, |t| o.load(&f, t));
    for (a, b) in load.iter().zip(&ld) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn assembly_matches_oracle_on_two_triangles() {
    compare_with_oracle(&two_triangles(1, 0), 1);
    compare_with_oracle(&two_triangles(1, 1), 2);
    compare_with_oracle(&two_triangles(2, 1), 3);
}

#[test]
fn assembly_matches_oracle_on_coarse_square() {
    compare_with_oracle(&ctx(2, 1, 0), 4);
}

#[test]
fn lid_lift_matches_oracle() {
    let c = ctx(2, 1, 0);
    let o = FormOracle::new(c.mesh.clone(), 10, 11).unwrap();
    let conf = FormConfig::new(Symmetry::Sipg, 40.0, 0.01).unwrap();
    let lid = |x: Point| if x[1] > 1.0 - 1e-12 { [1.0, 0.0] } else { [0.0, 0.0] };
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let w = random_field(&c, &mut rng);
    let lift = assemble_dirichlet_lift(&c, &conf, &lid, &w);
    let parts = {
        let mut sum = assemble_diffusion_lift(&c, &conf, lid);
        let conv = assemble_convection(&c, &w, Some(&lid));
        for (s, l) in sum.iter_mut().zip(&conv.load) {
            *s += l;
        }
        sum
    };
    assert_eq!(lift.momentum, parts);
    let diffusion_only = o.vector(&c.velocity, |t| {
        o.dirichlet_lift(
            conf.mu,
            conf.epsilon(),
            conf.sigma,
            &BrokenField::zeros(c.velocity.clone()),
            &lid,
            t,
        )
    });
    let dl = assemble_diffusion_lift(&c, &conf, lid);
    for (a, b) in dl.iter().zip(&diffusion_only) {
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
    let op = oracle(&c);
    let conv = assemble_convection(&c, &w, Some(&lid)).load;
    let conv_oracle = op.vector(&c.velocity, |t| op.dirichlet_lift(1.0, 0.0, 0.0, &w, &lid, t));
    for (a, b) in conv.iter().zip(&conv_oracle) {
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
    // a top-boundary trace lid touches only top elements
    let cont = assemble_continuity_lift(&c, lid);
    assert!(cont.iter().all(|v| v.abs() < 1e-14));
}
