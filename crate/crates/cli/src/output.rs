use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use zonoset::estimation::Estimate;
use zonoset::{ConZonotope, ZonoSet};

use crate::error::{CliError, CliResult};

/// Collects artifacts written under one directory.
pub struct OutDir {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(dir: &Path) -> CliResult<OutDir> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

/// CSV text whose first line is a `# zonoset <schema> v1` comment.
pub fn csv_table(schema: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut buf = format!("# zonoset {schema} v1\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}

/// Vertex cycle of a set in its first two coordinates; `None` for
/// one-dimensional or unbounded sets.
pub fn planar(set: &ZonoSet) -> CliResult<Option<Vec<DVector<f64>>>> {
    if set_dim(set) < 2 {
        return Ok(None);
    }
    let dims = [0, 1];
    Ok(Some(match set {
        ZonoSet::Interval(x) => zonoset::Zonotope::from_interval(x).project(&dims)?.vertices_2d()?,
        ZonoSet::Zonotope(z) => z.project(&dims)?.vertices_2d()?,
        ZonoSet::ConZonotope(z) => z.project(&dims)?.vertices_2d()?,
        ZonoSet::LineZonotope(z) => {
            let z = z.eliminate_lines();
            if z.nl() > 0 {
                return Ok(None);
            }
            z.to_conzonotope()?.project(&dims)?.vertices_2d()?
        }
        ZonoSet::HPolytope(h) if h.dim() == 2 => h.vertices_2d()?,
        _ => return Ok(None),
    }))
}

fn set_dim(set: &ZonoSet) -> usize {
    match set {
        ZonoSet::Interval(x) => x.dim(),
        ZonoSet::Strip(s) => s.dim(),
        ZonoSet::Zonotope(z) => z.dim(),
        ZonoSet::ConZonotope(z) => z.dim(),
        ZonoSet::LineZonotope(z) => z.dim(),
        ZonoSet::HPolytope(h) => h.dim(),
    }
}

pub fn planar_estimate(e: &Estimate) -> CliResult<Option<Vec<DVector<f64>>>> {
    planar(&e.to_zonoset())
}

/// Number of points farther than `tol` (∞-norm) from `z`. Planar sets are
/// screened by their vertex polygon first.
pub fn count_escapes(z: &ConZonotope, pts: &[DVector<f64>], tol: f64) -> CliResult<usize> {
    let poly = if z.dim() == 2 { Some(z.vertices_2d()?) } else { None };
    let in_polygon = |p: &DVector<f64>| match &poly {
        Some(v) => (0..v.len()).all(|i| {
            let (a, b) = (&v[i], &v[(i + 1) % v.len()]);
            let e = b - a;
            e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]) >= -tol * e.norm()
        }),
        None => false,
    };
    let mut escapes = 0;
    for p in pts {
        if in_polygon(p) || z.is_inside(p)? {
            continue;
        }
        let q = z.closest_point(p)?;
        if (q - p).amax() > tol {
            escapes += 1;
        }
    }
    Ok(escapes)
}

pub fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}
