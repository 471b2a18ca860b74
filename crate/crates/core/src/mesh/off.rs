//! ASCII OFF reading and writing, plus the JSON sidecar for analytic tags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AnalyticTag, MeshError, TriMesh};
use crate::multilinear::Vec3;

/// `<path>.json`, where the analytic tag of a generated mesh is stored.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Serializes to OFF text. Coordinates use the shortest round-trip float
/// representation, so parsing the output reproduces them bitwise.
pub fn write_off(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(64 * (mesh.num_vertices() + mesh.num_faces()));
    out.push_str("OFF\n");
    let _ = writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_faces());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    for [a, b, c] in mesh.faces() {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

/// Parses OFF text without validating the result.
pub fn parse_off(text: &str) -> Result<TriMesh, MeshError> {
    // Meaningful lines with their 1-based line numbers; comments and blanks skipped.
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    });

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header_rest = header
        .strip_prefix("OFF")
        .map(str::trim)
        .ok_or_else(|| parse_err(ln, format!("expected header `OFF`, found `{header}`")))?;
    let (ln, counts) = if header_rest.is_empty() {
        lines.next().ok_or_else(|| parse_err(ln, "missing counts line"))?
    } else {
        (ln, header_rest)
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad count `{t}`"))))
        .collect::<Result<_, _>>()?;
    if nums.len() < 2 {
        return Err(parse_err(ln, "counts line needs vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of file in vertex list"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(ln, format!("bad coordinate `{t}`"))))
            .collect::<Result<_, _>>()?;
        if c.len() != 3 {
            return Err(parse_err(ln, format!("expected 3 coordinates, found {}", c.len())));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "unexpected end of file in face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad index `{t}`"))))
            .collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() != 4 {
            return Err(parse_err(ln, "face lines must be triangles of the form `3 a b c`"));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after face list"));
    }
    Ok(TriMesh::new_unchecked(vertices, faces, None))
}

fn read_sidecar(path: &Path) -> Result<Option<AnalyticTag>, MeshError> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side)
        .map_err(|source| MeshError::Io { path: side.display().to_string(), source })?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|source| MeshError::Sidecar { path: side.display().to_string(), source })
}

/// Reads an OFF file (and its sidecar if present) and validates it.
pub fn load_off(path: &Path) -> Result<TriMesh, MeshError> {
    let mesh = load_off_unchecked(path)?;
    mesh.validate()?;
    Ok(mesh)
}

/// Reads an OFF file (and its sidecar if present) without validation.
pub fn load_off_unchecked(path: &Path) -> Result<TriMesh, MeshError> {
    let text = fs::read_to_string(path)
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
    let parsed = parse_off(&text)?;
    let tag = read_sidecar(path)?;
    Ok(TriMesh::new_unchecked(parsed.vertices, parsed.faces, tag))
}

/// Writes the OFF file and, for tagged meshes, the JSON sidecar.
pub fn save_off(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    fs::write(path, write_off(mesh))
        .map_err(|source| MeshError::Io { path: path.display().to_string(), source })?;
    if let Some(tag) = mesh.tag() {
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&tag)
            .map_err(|source| MeshError::Sidecar { path: side.display().to_string(), source })?;
        fs::write(&side, json + "\n")
            .map_err(|source| MeshError::Io { path: side.display().to_string(), source })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "OFF\n# tetrahedron\n4 4 6\n1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n\
                         3 0 1 2\n3 0 2 3\n3 0 3 1\n3 1 3 2\n";

    #[test]
    fn parses_minimal_tetrahedron() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_faces(), 4);
        m.validate().unwrap();
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = TETRA.replace("-1 1 -1", "-1 one -1");
        match parse_off(&bad) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
        let quad = TETRA.replace("3 1 3 2", "4 1 3 2 0");
        assert!(matches!(parse_off(&quad), Err(MeshError::Parse { line: 11, .. })));
        assert!(matches!(parse_off("PLY\n"), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn text_round_trip_is_bitwise() {
        let v = vec![
            Vec3::new(0.1, 1.0 / 3.0, -2.0f64.sqrt()),
            Vec3::new(1e-300, 5e300, std::f64::consts::PI),
            Vec3::new(-0.0, 7.0, 0.2 + 0.1),
        ];
        let m = TriMesh::new_unchecked(v, vec![[0, 1, 2]], None);
        let back = parse_off(&write_off(&m)).unwrap();
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
