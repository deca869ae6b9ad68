//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! dim n_nodes n_elements n_boundary
//! x [y]                  (n_nodes lines)
//! v0 v1 [v2]             (n_elements lines, 0-based)
//! a b  | node            (n_boundary lines: edges in 2D, node indices in 1D)
//! ```
//!
//! Coordinates are written with the shortest representation that round-trips,
//! so save followed by load reproduces the mesh exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{signed_area, Mesh, Point};
use crate::error::{Error, Result};

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_mesh(mesh))?;
    Ok(())
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let dim = mesh.dim();
    let nb = if dim == 1 {
        mesh.boundary_nodes().len()
    } else {
        mesh.boundary_edges().len()
    };
    let mut s = String::new();
    let _ = writeln!(s, "{dim} {} {} {nb}", mesh.node_count(), mesh.element_count());
    for p in mesh.nodes() {
        match dim {
            1 => writeln!(s, "{:?}", p[0]),
            _ => writeln!(s, "{:?} {:?}", p[0], p[1]),
        }
        .unwrap();
    }
    for v in mesh.elements() {
        let line: Vec<String> = v.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    if dim == 1 {
        for b in mesh.boundary_nodes() {
            let _ = writeln!(s, "{b}");
        }
    } else {
        for [a, b] in mesh.boundary_edges() {
            let _ = writeln!(s, "{a} {b}");
        }
    }
    s
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, path)
}

/// Parse mesh text; `origin` is only used in error messages.
pub fn parse_mesh(text: &str, origin: impl AsRef<Path>) -> Result<Mesh> {
    let origin = origin.as_ref();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);

    let (hline, header) = lines
        .next()
        .ok_or_else(|| err(0, "empty mesh file".into()))?;
    let head: Vec<usize> = parse_fields(header, hline, origin)?;
    if head.len() != 4 {
        return Err(err(hline, format!("header needs 4 integers, found {}", head.len())));
    }
    let (dim, nn, ne, nb) = (head[0], head[1], head[2], head[3]);
    if dim != 1 && dim != 2 {
        return Err(err(hline, format!("dimension must be 1 or 2, got {dim}")));
    }
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of file while reading {what}")))
    };

    let mut nodes: Vec<Point> = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, l) = next("nodes")?;
        let c: Vec<f64> = parse_fields(l, ln, origin)?;
        if c.len() != dim {
            return Err(err(ln, format!("expected {dim} coordinates, found {}", c.len())));
        }
        nodes.push([c[0], if dim == 2 { c[1] } else { 0.0 }]);
    }

    let mut cells = Vec::with_capacity(ne * (dim + 1));
    for _ in 0..ne {
        let (ln, l) = next("elements")?;
        let v: Vec<usize> = parse_fields(l, ln, origin)?;
        if v.len() != dim + 1 {
            return Err(err(ln, format!("expected {} vertex indices, found {}", dim + 1, v.len())));
        }
        if let Some(&i) = v.iter().find(|&&i| i >= nn) {
            return Err(err(ln, format!("vertex index {i} out of range (nodes: {nn})")));
        }
        let measure = if dim == 1 {
            nodes[v[1]][0] - nodes[v[0]][0]
        } else {
            signed_area(nodes[v[0]], nodes[v[1]], nodes[v[2]])
        };
        if !(measure > 0.0) {
            return Err(err(ln, format!("element has non-positive signed measure {measure:e}")));
        }
        cells.extend(v);
    }

    let mut bnodes = Vec::new();
    let mut bedges = Vec::new();
    for _ in 0..nb {
        let (ln, l) = next("boundary")?;
        let v: Vec<usize> = parse_fields(l, ln, origin)?;
        if v.len() != dim {
            return Err(err(ln, format!("expected {dim} boundary indices, found {}", v.len())));
        }
        if let Some(&i) = v.iter().find(|&&i| i >= nn) {
            return Err(err(ln, format!("boundary index {i} out of range")));
        }
        if dim == 1 {
            bnodes.push(v[0]);
        } else {
            bedges.push([v[0], v[1]]);
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing data after boundary section".into()));
    }
    Mesh::new(dim, nodes, cells, bnodes, bedges).map_err(|e| err(hline, e.to_string()))
}

fn parse_fields<T: std::str::FromStr>(line: &str, ln: usize, origin: &Path) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::parse(origin, ln, format!("cannot parse '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_mesh, generate_interval_mesh, generate_square_mesh};

    #[test]
    fn square_round_trip() {
        let m = generate_square_mesh(2).unwrap();
        let back = parse_mesh(&write_mesh(&m), "mem").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn irrational_coordinates_round_trip_bit_exactly() {
        let m = generate_disk_mesh(1.0, 5).unwrap();
        let back = parse_mesh(&write_mesh(&m), "mem").unwrap();
        for (a, b) in m.nodes().iter().zip(back.nodes()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        let i = generate_interval_mesh(-1.0, 1.0, 7).unwrap();
        assert_eq!(parse_mesh(&write_mesh(&i), "mem").unwrap(), i);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# a 1D mesh\n\n1 3 2 2  # header\n0\n0.5\n1\n0 1\n1 2\n0\n2\n";
        let m = parse_mesh(text, "mem").unwrap();
        assert_eq!(m.element_count(), 2);
        assert_eq!(m.boundary_nodes(), &[0, 2]);
    }

    #[test]
    fn zero_area_triangle_reports_line() {
        let text = "2 3 1 0\n0 0\n1 0\n2 0\n0 1 2\n";
        let e = parse_mesh(text, "flat.mesh").unwrap_err();
        match e {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 5);
                assert!(msg.contains("non-positive"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_header_and_bad_index() {
        assert!(matches!(parse_mesh("2 3 x 0\n", "m"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_mesh("3 1 1 0\n", "m"), Err(Error::Parse { line: 1, .. })));
        let text = "1 2 1 2\n0\n1\n0 5\n0\n1\n";
        assert!(matches!(parse_mesh(text, "m"), Err(Error::Parse { line: 4, .. })));
        let truncated = "1 2 1 2\n0\n1\n0 1\n0\n";
        assert!(parse_mesh(truncated, "m").is_err());
    }
}
