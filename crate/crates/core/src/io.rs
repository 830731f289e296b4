//! Text formats: OBJ meshes of sampled tori and CSV tables.
//!
//! OBJ files carry the parameter grid in a `# grid n_u n_v period_u period_v`
//! comment so that a mesh reads back onto the same grid; faces are the
//! periodic grid quads. Numbers use the shortest round-trip representation.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{ParamGrid, ScalarField};
use crate::immersion::{Ambient, Immersion};
use crate::mobius::immersion_to_r3;

/// Writes `im` as an OBJ mesh; S³ immersions are stereographically projected.
pub fn write_obj(mut out: impl Write, im: &Immersion, comments: &[String]) -> Result<()> {
    let projected;
    let im = match im.ambient() {
        Ambient::R3 => im,
        Ambient::S3 => {
            projected = immersion_to_r3(im)?;
            &projected
        }
    };
    let g = im.grid();
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "# grid {} {} {} {}", g.n_u(), g.n_v(), g.period_u(), g.period_v())?;
    for k in 0..im.len() {
        let p = im.point(k);
        writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
    }
    let (nu, nv) = (g.n_u(), g.n_v());
    for i in 0..nu {
        for j in 0..nv {
            let a = g.index(i, j) + 1;
            let b = g.index((i + 1) % nu, j) + 1;
            let c = g.index((i + 1) % nu, (j + 1) % nv) + 1;
            let d = g.index(i, (j + 1) % nv) + 1;
            writeln!(out, "f {a} {b} {c} {d}")?;
        }
    }
    Ok(())
}

/// Reads a mesh written by [`write_obj`]. Without a grid comment the vertex
/// count must be a square and the periods default to `2π`.
pub fn read_obj(input: impl BufRead) -> Result<Immersion> {
    let mut grid: Option<ParamGrid> = None;
    let mut points = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("#") => {
                if parts.next() == Some("grid") {
                    let f: Vec<&str> = parts.collect();
                    if f.len() != 4 {
                        return Err(bad("grid comment needs 4 fields"));
                    }
                    let n_u = f[0].parse().map_err(|_| bad("bad n_u"))?;
                    let n_v = f[1].parse().map_err(|_| bad("bad n_v"))?;
                    let pu = f[2].parse().map_err(|_| bad("bad period_u"))?;
                    let pv = f[3].parse().map_err(|_| bad("bad period_v"))?;
                    grid = Some(ParamGrid::new(n_u, n_v, pu, pv)?);
                }
            }
            Some("v") => {
                let xs: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|_| bad("bad vertex coordinate")))
                    .collect::<Result<_>>()?;
                if xs.len() != 3 {
                    return Err(bad("vertex needs 3 coordinates"));
                }
                points.push([xs[0], xs[1], xs[2]]);
            }
            _ => {}
        }
    }
    let grid = match grid {
        Some(g) => g,
        None => {
            let n = (points.len() as f64).sqrt().round() as usize;
            if n * n != points.len() {
                return Err(Error::Parse("vertex count is not a square and no grid comment given".into()));
            }
            ParamGrid::torus(n)?
        }
    };
    if points.len() != grid.len() {
        return Err(Error::Parse(format!("{} vertices for a grid of {}", points.len(), grid.len())));
    }
    Immersion::from_points(grid, &points)
}

/// Writes `#` comment lines, then a CSV header and rows.
pub fn write_csv<I, R>(mut out: impl Write, comments: &[String], header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// `u, v, value` rows of a scalar field.
pub fn write_field_csv(out: impl Write, field: &ScalarField, comments: &[String]) -> Result<()> {
    let g = *field.grid();
    let rows = field.values().iter().enumerate().map(move |(k, x)| {
        let (u, v) = g.coords(k);
        [u.to_string(), v.to_string(), x.to_string()]
    });
    write_csv(out, comments, &["u", "v", "value"], rows)
}
