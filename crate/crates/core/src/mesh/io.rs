//! Plain-text mesh format.
//!
//! ```text
//! NV NT NB
//! x y                          (NV lines)
//! i j k                        (NT lines, 0-based, counterclockwise)
//! v0 v1 S                      (NB lines, straight segment)
//! v0 v1 A cx cy r th0 th1      (or circular arc)
//! ```
//!
//! Reals are written with 17 significant digits so that a read followed by a
//! write reproduces the file byte for byte.

use std::io::{BufRead, Write};

use nalgebra::Point2;

use super::{BoundaryElement, BoundaryGeometry, TriMesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", mesh.vertices().len(), mesh.triangles().len(), mesh.boundary().len())?;
    for v in mesh.vertices() {
        writeln!(w, "{:.16e} {:.16e}", v.x, v.y)?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in mesh.boundary() {
        match e.geometry {
            BoundaryGeometry::StraightSegment => writeln!(w, "{} {} S", e.v0, e.v1)?,
            BoundaryGeometry::CircularArc { center, radius, theta0, theta1 } => writeln!(
                w,
                "{} {} A {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                e.v0, e.v1, center.x, center.y, radius, theta0, theta1
            )?,
        }
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<TriMesh> {
    let mut lines = r.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s.split_whitespace().map(str::to_owned).collect())),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse { line: 0, message: format!("unexpected end of file, expected {what}") }),
        }
    };

    let (line, header) = next("header")?;
    let counts: Vec<usize> = parse_all(line, &header)?;
    let [nv, nt, nb] = counts[..] else {
        return Err(Error::Parse { line, message: "header must be `NV NT NB`".into() });
    };

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, f) = next("vertex")?;
        let xy: Vec<f64> = parse_all(line, &f)?;
        let [x, y] = xy[..] else {
            return Err(Error::Parse { line, message: "vertex line must be `x y`".into() });
        };
        vertices.push(Point2::new(x, y));
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, f) = next("triangle")?;
        let ijk: Vec<usize> = parse_all(line, &f)?;
        let [i, j, k] = ijk[..] else {
            return Err(Error::Parse { line, message: "triangle line must be `i j k`".into() });
        };
        triangles.push([i, j, k]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, f) = next("boundary element")?;
        if f.len() < 3 {
            return Err(Error::Parse { line, message: "boundary line must be `v0 v1 kind ...`".into() });
        }
        let ends: Vec<usize> = parse_all(line, &f[..2])?;
        let (v0, v1) = (ends[0], ends[1]);
        if v0 >= nv || v1 >= nv {
            return Err(Error::Parse { line, message: "boundary vertex index out of range".into() });
        }
        let el = match (f[2].as_str(), f.len()) {
            ("S", 3) => BoundaryElement {
                v0,
                v1,
                geometry: BoundaryGeometry::StraightSegment,
                length: (vertices[v1] - vertices[v0]).norm(),
            },
            ("A", 8) => {
                let p: Vec<f64> = parse_all(line, &f[3..])?;
                BoundaryElement {
                    v0,
                    v1,
                    geometry: BoundaryGeometry::CircularArc {
                        center: Point2::new(p[0], p[1]),
                        radius: p[2],
                        theta0: p[3],
                        theta1: p[4],
                    },
                    length: p[2] * (p[4] - p[3]),
                }
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    message: "boundary kind must be `S` or `A cx cy r th0 th1`".into(),
                })
            }
        };
        boundary.push(el);
    }
    TriMesh::new(vertices, triangles, boundary)
}

fn parse_all<T: std::str::FromStr>(line: usize, fields: &[String]) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|s| s.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse `{s}`") }))
        .collect()
}
