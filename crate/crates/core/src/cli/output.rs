//! Field dumps and line samples.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::mesh::Point;
use crate::space::BrokenField;

/// Legacy-VTK dump with every element carrying its own three vertices, so
/// discontinuities stay visible. Velocity and pressure are point data
/// sampled at the element vertices.
pub fn write_vtk<W: Write>(
    mut w: W,
    title: &str,
    velocity: &BrokenField,
    pressure: &BrokenField,
) -> std::io::Result<()> {
    let mesh = velocity.space().mesh();
    let ne = mesh.n_elements();
    let corners: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * ne)?;
    for tri in &mesh.triangles {
        for &v in tri {
            let x = mesh.vertices[v];
            writeln!(w, "{:e} {:e} 0", x[0], x[1])?;
        }
    }
    writeln!(w, "CELLS {} {}", ne, 4 * ne)?;
    for t in 0..ne {
        writeln!(w, "3 {} {} {}", 3 * t, 3 * t + 1, 3 * t + 2)?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", 3 * ne)?;
    writeln!(w, "VECTORS velocity double")?;
    for t in 0..ne {
        for xi in corners {
            let u = velocity.eval(t, xi);
            writeln!(w, "{:e} {:e} 0", u[0], u[1])?;
        }
    }
    writeln!(w, "SCALARS pressure double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in 0..ne {
        for xi in corners {
            writeln!(w, "{:e}", pressure.eval(t, xi)[0])?;
        }
    }
    Ok(())
}

pub fn write_vtk_file(path: &Path, title: &str, velocity: &BrokenField, pressure: &BrokenField) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_vtk(&mut w, title, velocity, pressure)?;
    w.flush()?;
    Ok(())
}

/// `count` uniformly spaced points from `a` to `b`.
pub fn line(a: Point, b: Point, count: usize) -> Vec<Point> {
    (0..count)
        .map(|i| {
            let s = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
        })
        .collect()
}

/// Component `c` of `field` at each point, evaluated in the lowest-index
/// element containing it (the left or lower neighbour on a shared edge of
/// the structured mesh).
pub fn sample(field: &BrokenField, points: &[Point], c: usize) -> Vec<f64> {
    points
        .iter()
        .map(|&x| field.eval_at(x).map_or(f64::NAN, |v| v[c]))
        .collect()
}

/// CSV with one leading coordinate column; `None` columns are left empty.
pub fn write_columns(path: &Path, header: &[&str], coord: &[f64], columns: &[Option<&[f64]>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for (i, x) in coord.iter().enumerate() {
        s.push_str(&format!("{x:.6}"));
        for col in columns {
            s.push(',');
            if let Some(col) = col {
                s.push_str(&format!("{:.10e}", col[i]));
            }
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}
