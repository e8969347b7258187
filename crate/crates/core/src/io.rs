//! CSV, legacy VTK and manifest writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::postprocess::{FieldReport, RecoveredFields};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents`, creating parent directories, and returns its hash.
pub fn write_artifact(path: &Path, contents: &str) -> Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(contents.as_bytes()))
}

/// `x,sigma_yy,eps_yy,energy` along the crack line.
pub fn profile_csv(r: &FieldReport) -> String {
    let mut s = format!("# {}\nx,sigma_yy,eps_yy,energy\n", r.metadata);
    for i in 0..r.sample_x.len() {
        let _ = writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            r.sample_x[i], r.sigma_yy[i], r.eps_yy[i], r.energy[i]
        );
    }
    s
}

/// `x,u_y` along the crack face.
pub fn opening_csv(r: &FieldReport) -> String {
    let mut s = format!("# {}\nx,u_y\n", r.metadata);
    for (x, uy) in r.crack_x.iter().zip(&r.opening_uy) {
        let _ = writeln!(s, "{x:.12e},{uy:.12e}");
    }
    s
}

/// Legacy ASCII unstructured grid with nodal point data.
pub fn vtk_string(mesh: &QuadMesh, u: &[f64], fields: &RecoveredFields, title: &str) -> String {
    let nn = mesh.num_nodes();
    let ne = mesh.elements.len();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nn} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.12e} {:.12e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {ne} {}", 5 * ne);
    for el in &mesh.elements {
        let _ = writeln!(s, "4 {} {} {} {}", el[0], el[1], el[2], el[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("9\n");
    }
    let _ = writeln!(s, "POINT_DATA {nn}");
    let _ = writeln!(s, "VECTORS displacement double");
    for n in 0..nn {
        let _ = writeln!(s, "{:.12e} {:.12e} 0", u[2 * n], u[2 * n + 1]);
    }
    let mut scalar = |name: &str, f: &dyn Fn(usize) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for n in 0..nn {
            let _ = writeln!(s, "{:.12e}", f(n));
        }
    };
    scalar("sigma_xx", &|n| fields.stress[n].xx);
    scalar("sigma_yy", &|n| fields.stress[n].yy);
    scalar("sigma_xy", &|n| fields.stress[n].xy);
    scalar("eps_xx", &|n| fields.strain[n].xx);
    scalar("eps_yy", &|n| fields.strain[n].yy);
    scalar("eps_xy", &|n| fields.strain[n].xy);
    scalar("energy_density", &|n| fields.energy[n]);
    scalar("clamp_events", &|n| fields.clamp_events[n] as f64);
    s
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub status: String,
    pub sha256: String,
    /// Extra `key=value` pairs, written in order.
    pub params: Vec<(String, String)>,
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        let mut s = format!("path={} kind={} status={} sha256={}", self.path, self.kind, self.status, self.sha256);
        for (k, v) in &self.params {
            let _ = write!(s, " {k}={v}");
        }
        s
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut path = None;
        let mut kind = None;
        let mut status = None;
        let mut sha256 = None;
        let mut params = Vec::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("manifest token without '=': {tok}")))?;
            match k {
                "path" => path = Some(v.to_string()),
                "kind" => kind = Some(v.to_string()),
                "status" => status = Some(v.to_string()),
                "sha256" => sha256 = Some(v.to_string()),
                _ => params.push((k.to_string(), v.to_string())),
            }
        }
        let need = |v: Option<String>, name: &str| v.ok_or_else(|| Error::Config(format!("manifest line missing {name}")));
        Ok(ManifestEntry {
            path: need(path, "path")?,
            kind: need(kind, "kind")?,
            status: need(status, "status")?,
            sha256: need(sha256, "sha256")?,
            params,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut s = String::from("# crackfem manifest v1\n");
        for e in &self.entries {
            s.push_str(&e.to_line());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(ManifestEntry::parse_line)
            .collect::<Result<_>>()?;
        Ok(Manifest { entries })
    }

    /// Entries whose file on disk is missing or has a different hash.
    pub fn verify(&self, root: &Path) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| match fs::read(root.join(&e.path)) {
                Ok(bytes) => sha256_hex(&bytes) != e.sha256,
                Err(_) => true,
            })
            .map(|e| e.path.clone())
            .collect()
    }
}
