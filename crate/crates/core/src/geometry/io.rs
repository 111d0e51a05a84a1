//! Minimal OBJ-style text meshes.
//!
//! ```text
//! # comment
//! v 0.25 0.0        vertex (1, 2 or 3 coordinates, all vertices alike)
//! p 1               interface point (1D), 1-based
//! l 1 2 3           polyline chain, expands to segments (1,2), (2,3)
//! f 1 2 3           triangle; larger polygons are fan-triangulated
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::InterfaceMesh;
use super::GeometryError;

fn index(tok: &str, line: usize) -> Result<usize, GeometryError> {
    // OBJ face tokens may carry texture/normal refs: "3/1/2".
    let head = tok.split('/').next().unwrap_or(tok);
    let i: usize = head.parse().map_err(|_| GeometryError::Parse {
        line,
        msg: format!("bad index `{tok}`"),
    })?;
    if i == 0 {
        return Err(GeometryError::Parse {
            line,
            msg: "indices are 1-based".into(),
        });
    }
    Ok(i - 1)
}

pub fn parse_mesh(text: &str) -> Result<InterfaceMesh, GeometryError> {
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut elements: Vec<Vec<usize>> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut elem_dim: Option<usize> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let tag = toks.next().unwrap_or("");
        let rest: Vec<&str> = toks.collect();
        let mut set_elem_dim = |d: usize| -> Result<(), GeometryError> {
            match elem_dim {
                Some(prev) if prev != d => Err(GeometryError::Parse {
                    line,
                    msg: "mixed element kinds".into(),
                }),
                _ => {
                    elem_dim = Some(d);
                    Ok(())
                }
            }
        };
        match tag {
            "v" => {
                let coords: Result<Vec<f64>, _> = rest.iter().map(|t| t.parse::<f64>()).collect();
                let coords = coords.map_err(|_| GeometryError::Parse {
                    line,
                    msg: "bad vertex coordinate".into(),
                })?;
                if coords.is_empty() || coords.len() > 3 {
                    return Err(GeometryError::Parse {
                        line,
                        msg: "vertex needs 1 to 3 coordinates".into(),
                    });
                }
                match dim {
                    Some(d) if d != coords.len() => {
                        return Err(GeometryError::Parse {
                            line,
                            msg: format!("vertex has {} coordinates, earlier ones {d}", coords.len()),
                        })
                    }
                    _ => dim = Some(coords.len()),
                }
                vertices.push(coords);
            }
            "p" => {
                set_elem_dim(1)?;
                for t in &rest {
                    elements.push(vec![index(t, line)?]);
                }
            }
            "l" => {
                set_elem_dim(2)?;
                let idx: Result<Vec<usize>, _> = rest.iter().map(|t| index(t, line)).collect();
                let idx = idx?;
                if idx.len() < 2 {
                    return Err(GeometryError::Parse {
                        line,
                        msg: "line record needs two indices".into(),
                    });
                }
                for w in idx.windows(2) {
                    elements.push(vec![w[0], w[1]]);
                }
            }
            "f" => {
                set_elem_dim(3)?;
                let idx: Result<Vec<usize>, _> = rest.iter().map(|t| index(t, line)).collect();
                let idx = idx?;
                if idx.len() < 3 {
                    return Err(GeometryError::Parse {
                        line,
                        msg: "face record needs three indices".into(),
                    });
                }
                for i in 1..idx.len() - 1 {
                    elements.push(vec![idx[0], idx[i], idx[i + 1]]);
                }
            }
            // other OBJ records (vn, vt, o, g, s, ...) are ignored
            _ => {}
        }
    }
    let dim = dim.ok_or(GeometryError::Parse {
        line: 0,
        msg: "no vertices".into(),
    })?;
    if let Some(ed) = elem_dim {
        if ed != dim {
            return Err(GeometryError::Parse {
                line: 0,
                msg: format!("{dim}D vertices with {ed}-index elements"),
            });
        }
    }
    InterfaceMesh::new(dim, vertices, elements)
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<InterfaceMesh, GeometryError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &InterfaceMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let coords: Vec<String> = v.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(out, "v {}", coords.join(" "));
    }
    let tag = match mesh.dim() {
        1 => "p",
        2 => "l",
        _ => "f",
    };
    for e in 0..mesh.element_count() {
        let idx: Vec<String> = mesh.element(e).iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(out, "{tag} {}", idx.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_chain_and_round_trip() {
        let mesh = parse_mesh("# crease\nv 0 0\nv 0.5 0.1\nv 1 0\nl 1 2 3\n").unwrap();
        assert_eq!(mesh.dim(), 2);
        assert_eq!(mesh.element_count(), 2);
        assert_eq!(mesh.element(1), &[1, 2]);
        assert_eq!(parse_mesh(&write_mesh(&mesh)).unwrap(), mesh);
    }

    #[test]
    fn obj_triangles_with_slashes_and_quads() {
        let mesh = parse_mesh("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n").unwrap();
        assert_eq!(mesh.dim(), 3);
        assert_eq!(mesh.element_count(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_mesh("v 0 0\nv 1 x\n") {
            Err(GeometryError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_mesh("v 0 0\nv 1 0\nl 1 3\n").is_err());
        assert!(parse_mesh("v 0 0\nv 0 0\nl 1 2\n").is_err());
    }
}
