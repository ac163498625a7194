//! Writers for fields and tables.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::real::Real;

/// Formats `x` with 12 significant digits in scientific notation.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.11e}")
}

/// `x` rounded to 12 significant digits, for JSON output.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig12(x).parse().unwrap_or(x)
}

/// Legacy ASCII VTK structured points at cell centers: `u` as scalars, `sigma` as vectors.
pub fn write_vtk<T: Real, W: Write>(out: &mut W, u: &ScalarField<T>, sigma: Option<&VectorField<T>>) -> Result<()> {
    let g = &u.grid;
    if let Some(s) = sigma {
        if s.grid != *g {
            return Err(Error::GridMismatch);
        }
    }
    let dims = [g.cells()[0], g.cells()[1], g.cells().get(2).copied().unwrap_or(1)];
    let c0 = g.center(0);
    let h = |a: usize| g.spacing().get(a).map_or(1.0, |x| x.as_f64());
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "phase field")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(out, "ORIGIN {} {} {}", sig12(c0[0].as_f64()), sig12(c0[1].as_f64()), sig12(c0[2].as_f64()))?;
    writeln!(out, "SPACING {} {} {}", sig12(h(0)), sig12(h(1)), sig12(h(2)))?;
    writeln!(out, "POINT_DATA {}", g.num_cells())?;
    writeln!(out, "SCALARS u double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for &x in &u.data {
        writeln!(out, "{}", sig12(x.as_f64()))?;
    }
    if let Some(s) = sigma {
        writeln!(out, "VECTORS sigma double")?;
        for c in 0..g.num_cells() {
            let v = s.cell_vector(c);
            writeln!(out, "{} {} {}", sig12(v[0].as_f64()), sig12(v[1].as_f64()), sig12(v[2].as_f64()))?;
        }
    }
    Ok(())
}

/// Flat CSV with one row per cell: index, center coordinates, `u`, cell-centered `sigma`.
pub fn write_field_csv<T: Real, W: Write>(out: &mut W, u: &ScalarField<T>, sigma: Option<&VectorField<T>>) -> Result<()> {
    let g = &u.grid;
    let n = g.dim();
    let axes = ["x", "y", "z"];
    let mut header = vec!["index".to_string()];
    header.extend(axes[..n].iter().map(|a| a.to_string()));
    header.push("u".into());
    if sigma.is_some() {
        header.extend(axes[..n].iter().map(|a| format!("sigma_{a}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for c in 0..g.num_cells() {
        let x = g.center(c);
        let mut row = vec![c.to_string()];
        row.extend(x[..n].iter().map(|v| sig12(v.as_f64())));
        row.push(sig12(u.data[c].as_f64()));
        if let Some(s) = sigma {
            let v = s.cell_vector(c);
            row.extend(v[..n].iter().map(|v| sig12(v.as_f64())));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
