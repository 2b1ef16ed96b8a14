use std::sync::Arc;

use crate::error::Result;
use crate::mesh::{EdgeFrame, Mesh};
use crate::space::basis::BasisTable;
use crate::space::quadrature::{edge_rule, triangle_rule, EdgeRule, QuadratureRule};
use crate::space::{BrokenSpace, DATA_QUAD_DEGREE};

/// Basis traces on one side of an edge, per edge quadrature point.
#[derive(Debug, Clone)]
pub struct EdgeTrace {
    pub element: usize,
    /// `vel[q][i]`
    pub vel: Vec<Vec<f64>>,
    /// Physical gradients, `vel_grad[q][i]`.
    pub vel_grad: Vec<Vec<[f64; 2]>>,
    pub pres: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct EdgeTables {
    pub owner: EdgeTrace,
    pub neighbor: Option<EdgeTrace>,
}

/// Quadrature rules with basis functions tabulated on them.
#[derive(Debug, Clone)]
pub struct QuadTables {
    pub volume: QuadratureRule,
    pub vol_vel: BasisTable,
    pub vol_pres: BasisTable,
    pub edge: EdgeRule,
    pub frames: Vec<EdgeFrame>,
    pub edges: Vec<EdgeTables>,
}

impl QuadTables {
    fn new(
        mesh: &Mesh,
        velocity: &BrokenSpace,
        pressure: &BrokenSpace,
        volume_degree: usize,
        edge_degree: usize,
    ) -> Result<Self> {
        let volume = triangle_rule(volume_degree)?;
        let edge = edge_rule(edge_degree)?;
        let vol_vel = velocity.basis().tabulate(&volume.points);
        let vol_pres = pressure.basis().tabulate(&volume.points);
        let frames = mesh.jump_average_frames(&edge);
        let trace = |element: usize, refs: Vec<[f64; 2]>| {
            let tv = velocity.basis().tabulate(&refs);
            let tp = pressure.basis().tabulate(&refs);
            let geo = &mesh.geometry[element];
            let vel_grad = tv
                .grads
                .iter()
                .map(|gq| gq.iter().map(|&g| geo.push_gradient(g)).collect())
                .collect();
            EdgeTrace {
                element,
                vel: tv.values,
                vel_grad,
                pres: tp.values,
            }
        };
        let edges = mesh
            .edges
            .iter()
            .zip(&frames)
            .map(|(e, f)| EdgeTables {
                owner: trace(e.owner, f.points.iter().map(|p| p.owner_ref).collect()),
                neighbor: e
                    .neighbor
                    .map(|n| trace(n, f.points.iter().map(|p| p.neighbor_ref.unwrap()).collect())),
            })
            .collect();
        Ok(QuadTables {
            volume,
            vol_vel,
            vol_pres,
            edge,
            frames,
            edges,
        })
    }
}

/// Mesh, velocity/pressure spaces and the tabulated quadrature shared by
/// all assembly routines. Immutable after construction.
#[derive(Debug, Clone)]
pub struct DgContext {
    pub mesh: Arc<Mesh>,
    pub velocity: Arc<BrokenSpace>,
    pub pressure: Arc<BrokenSpace>,
    /// Rules exact for the operator integrands: volume `3k + 1`, edge `3k + 2`.
    pub op: QuadTables,
    /// Rules for non-polynomial data (loads, boundary data, exact fields).
    pub data: QuadTables,
}

impl DgContext {
    pub fn new(mesh: Arc<Mesh>, velocity_degree: usize, pressure_degree: usize) -> Result<Self> {
        let velocity = Arc::new(BrokenSpace::velocity(mesh.clone(), velocity_degree));
        let pressure = Arc::new(BrokenSpace::pressure(mesh.clone(), pressure_degree));
        let k = velocity_degree.max(pressure_degree);
        let op = QuadTables::new(&mesh, &velocity, &pressure, 3 * k + 1, 3 * k + 2)?;
        let data = QuadTables::new(
            &mesh,
            &velocity,
            &pressure,
            DATA_QUAD_DEGREE.max(3 * k + 1),
            (DATA_QUAD_DEGREE + 1).max(3 * k + 2),
        )?;
        Ok(DgContext {
            mesh,
            velocity,
            pressure,
            op,
            data,
        })
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn n_pressure(&self) -> usize {
        self.pressure.n_dofs()
    }
}
