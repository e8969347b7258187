//! Benchmark runs, sweeps and the load comparison, with their artifacts.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::assembly::{LoadKind, LoadProfile};
use crate::config::{RunConfig, SweepPoint};
use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::io::{opening_csv, profile_csv, vtk_string, write_artifact, Manifest, ManifestEntry};
use crate::mesh::QuadMesh;
use crate::picard::{run_picard, PicardState, PicardStatus};
use crate::postprocess::{recover_fields, FieldReport, RecoveredFields, RunMetadata};

pub const MANIFEST: &str = "manifest.txt";

/// A converged (or settled) solve with its recovered fields.
#[derive(Debug, Clone)]
pub struct Solved {
    pub state: PicardState,
    pub fields: RecoveredFields,
    pub report: FieldReport,
}

/// Runs Picard and postprocessing for one material/load pair.
pub fn solve_point(cfg: &RunConfig, mesh: &QuadMesh, m: &MaterialModel, load: LoadProfile) -> Result<Solved> {
    let state = run_picard(mesh, m, load, &cfg.solver, &cfg.picard)?;
    let fields = recover_fields(mesh, m, &state.u)?;
    let metadata = RunMetadata {
        case: cfg.case.name().to_string(),
        alpha: m.alpha(),
        beta: m.beta(),
        sigma_t: load.sigma_t,
        fiber: m.fiber_axis(),
        load: load.kind,
        nx: mesh.nx,
        ny: mesh.ny,
    };
    let report = FieldReport::build(mesh, &fields, &state.u, metadata);
    Ok(Solved { state, fields, report })
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub point: SweepPoint,
    /// `Ok(status)` when Picard ran to completion.
    pub result: std::result::Result<PicardStatus, String>,
    pub history: Vec<f64>,
    pub report: Option<FieldReport>,
}

impl PointOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(self.result, Ok(s) if s.is_success())
    }

    pub fn status_name(&self) -> &'static str {
        match self.result {
            Ok(s) => s.name(),
            Err(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcomes: Vec<PointOutcome>,
    pub manifest: Manifest,
}

impl RunSummary {
    pub fn success(&self) -> bool {
        self.outcomes.iter().all(PointOutcome::succeeded)
    }

    pub fn describe(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let _ = write!(s, "{} {} iterations={}", o.point.signature(), o.status_name(), o.history.len());
            if let Some(r) = o.history.last() {
                let _ = write!(s, " residual={r:.3e}");
            }
            if let Some(rep) = &o.report {
                let _ = write!(s, " peak_sigma_yy={:.6e} peak_eps_yy={:.6e} peak_energy={:.6e}", rep.peak_sigma_yy(), rep.peak_eps_yy(), rep.peak_energy());
            }
            if let Err(e) = &o.result {
                let _ = write!(s, " error={e}");
            }
            s.push('\n');
        }
        s
    }
}

fn point_params(cfg: &RunConfig, p: &SweepPoint) -> Vec<(String, String)> {
    vec![
        ("case".into(), cfg.case.name().into()),
        ("alpha".into(), p.alpha.to_string()),
        ("beta".into(), p.beta.to_string()),
        ("sigma_T".into(), p.sigma_t.to_string()),
        ("fiber".into(), cfg.material.fiber_axis().name().into()),
        ("load".into(), cfg.load.kind.name().into()),
        ("nx".into(), cfg.mesh.nx.to_string()),
        ("ny".into(), cfg.mesh.ny.to_string()),
    ]
}

fn history_csv(history: &[f64], status: &str, metadata: &str) -> String {
    let mut s = format!("# {metadata}\n# status = {status}\niteration,residual_norm,clamp_events\n");
    for (i, r) in history.iter().enumerate() {
        let _ = writeln!(s, "{},{r:.6e},", i + 1);
    }
    s
}

fn run_point(cfg: &RunConfig, mesh: &QuadMesh, p: SweepPoint) -> Result<(PointOutcome, Vec<ManifestEntry>)> {
    let dir_rel = format!("{}/{}", cfg.case.name(), p.signature());
    let dir = cfg.output_dir.join(&dir_rel);
    let params = point_params(cfg, &p);
    let mut entries = Vec::new();
    let mut emit = |name: &str, kind: &str, status: &str, contents: String| -> Result<()> {
        let sha256 = write_artifact(&dir.join(name), &contents)?;
        entries.push(ManifestEntry {
            path: format!("{dir_rel}/{name}"),
            kind: kind.into(),
            status: status.into(),
            sha256,
            params: params.clone(),
        });
        Ok(())
    };
    let (m, load) = cfg.at(&p)?;
    match solve_point(cfg, mesh, &m, load) {
        Ok(solved) => {
            let status = solved.state.status.name();
            let meta = solved.report.metadata.to_string();
            emit("convergence.csv", "convergence", status, solved.state.convergence_csv(&meta))?;
            emit("profile.csv", "profile", status, profile_csv(&solved.report))?;
            emit("opening.csv", "opening", status, opening_csv(&solved.report))?;
            emit("fields.vtk", "vtk", status, vtk_string(mesh, &solved.state.u, &solved.fields, &meta))?;
            let outcome = PointOutcome {
                point: p,
                result: Ok(solved.state.status),
                history: solved.state.residual_norms(),
                report: Some(solved.report),
            };
            Ok((outcome, entries))
        }
        Err(e) => {
            let history = match &e {
                Error::Picard { history, .. } => history.clone(),
                _ => Vec::new(),
            };
            let meta = params.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ");
            emit("convergence.csv", "convergence", "failed", history_csv(&history, "failed", &meta))?;
            let outcome = PointOutcome { point: p, result: Err(e.to_string()), history, report: None };
            Ok((outcome, entries))
        }
    }
}

/// Runs every sweep point (in parallel), writes its artifacts under
/// `output_dir/case/signature/`, then the manifest.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let mesh = QuadMesh::from_geometry(&cfg.mesh)?;
    let points = cfg.sweep_points();
    let results: Vec<(PointOutcome, Vec<ManifestEntry>)> = points
        .par_iter()
        .map(|&p| run_point(cfg, &mesh, p))
        .collect::<Result<_>>()?;
    let mut manifest = Manifest::default();
    let mut outcomes = Vec::with_capacity(results.len());
    for (o, e) in results {
        outcomes.push(o);
        manifest.entries.extend(e);
    }
    write_artifact(&cfg.output_dir.join(MANIFEST), &manifest.render())?;
    Ok(RunSummary { outcomes, manifest })
}

/// Peak crack-line values of one load profile at one load level.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparePeak {
    pub sigma_t: f64,
    pub load: LoadKind,
    pub status: String,
    pub iterations: usize,
    pub peak_sigma_yy: f64,
    pub peak_eps_yy: f64,
    pub peak_energy: f64,
}

impl ComparePeak {
    pub fn succeeded(&self) -> bool {
        self.status == PicardStatus::ConvergedTol.name() || self.status == PicardStatus::Stagnated.name()
    }
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub peaks: Vec<ComparePeak>,
    pub manifest: Manifest,
}

impl CompareSummary {
    pub fn success(&self) -> bool {
        self.peaks.iter().all(ComparePeak::succeeded)
    }

    pub fn peak(&self, sigma_t: f64, load: LoadKind) -> Option<&ComparePeak> {
        self.peaks.iter().find(|p| p.sigma_t == sigma_t && p.load == load)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("sigma_t,load,status,iterations,peak_sigma_yy,peak_eps_yy,peak_energy\n");
        for p in &self.peaks {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.12e},{:.12e},{:.12e}",
                p.sigma_t,
                p.load.name(),
                p.status,
                p.iterations,
                p.peak_sigma_yy,
                p.peak_eps_yy,
                p.peak_energy
            );
        }
        s
    }
}

/// Solves every (σ_T, load) pair of `cfg.compare` with the configured
/// material and writes one side-by-side crack-line CSV per σ_T plus a
/// summary of peaks, under `output_dir/compare_<fiber>/`.
pub fn compare_loads(cfg: &RunConfig) -> Result<CompareSummary> {
    if cfg.compare.loads.is_empty() || cfg.compare.sigma_t.is_empty() {
        return Err(Error::Config("compare: load and sigma_t lists must not be empty".into()));
    }
    let mesh = QuadMesh::from_geometry(&cfg.mesh)?;
    let jobs: Vec<(f64, LoadKind)> = cfg
        .compare
        .sigma_t
        .iter()
        .flat_map(|&s| cfg.compare.loads.iter().map(move |&k| (s, k)))
        .collect();
    let solved: Vec<std::result::Result<Solved, String>> = jobs
        .par_iter()
        .map(|&(s, k)| solve_point(cfg, &mesh, &cfg.material, LoadProfile::new(k, s)).map_err(|e| e.to_string()))
        .collect();

    let rel_root = format!("compare_{}", cfg.material.fiber_axis().name());
    let root = cfg.output_dir.join(&rel_root);
    let mut manifest = Manifest::default();
    let mut peaks = Vec::new();
    let base_params = |s: f64| {
        vec![
            ("alpha".to_string(), cfg.material.alpha().to_string()),
            ("beta".to_string(), cfg.material.beta().to_string()),
            ("sigma_T".to_string(), s.to_string()),
            ("fiber".to_string(), cfg.material.fiber_axis().name().to_string()),
            ("nx".to_string(), cfg.mesh.nx.to_string()),
            ("ny".to_string(), cfg.mesh.ny.to_string()),
        ]
    };
    for &s in &cfg.compare.sigma_t {
        let group: Vec<(LoadKind, &std::result::Result<Solved, String>)> = jobs
            .iter()
            .zip(&solved)
            .filter(|((js, _), _)| *js == s)
            .map(|((_, k), r)| (*k, r))
            .collect();
        let mut header = String::from("x");
        for (k, _) in &group {
            let _ = write!(header, ",sigma_yy_{0},eps_yy_{0},energy_{0}", k.name());
        }
        let xs: Vec<f64> = mesh
            .bottom_nodes()
            .into_iter()
            .map(|n| mesh.nodes[n][0])
            .filter(|&x| x >= mesh.crack_length)
            .collect();
        let mut body = String::new();
        for (i, x) in xs.iter().enumerate() {
            let _ = write!(body, "{x:.12e}");
            for (_, r) in &group {
                match r {
                    Ok(sv) => {
                        let rep = &sv.report;
                        let _ = write!(body, ",{:.12e},{:.12e},{:.12e}", rep.sigma_yy[i], rep.eps_yy[i], rep.energy[i]);
                    }
                    Err(_) => body.push_str(",nan,nan,nan"),
                }
            }
            body.push('\n');
        }
        let mut statuses = Vec::new();
        for (k, r) in &group {
            let peak = match r {
                Ok(sv) => ComparePeak {
                    sigma_t: s,
                    load: *k,
                    status: sv.state.status.name().to_string(),
                    iterations: sv.state.iterations(),
                    peak_sigma_yy: sv.report.peak_sigma_yy(),
                    peak_eps_yy: sv.report.peak_eps_yy(),
                    peak_energy: sv.report.peak_energy(),
                },
                Err(_) => ComparePeak {
                    sigma_t: s,
                    load: *k,
                    status: "failed".into(),
                    iterations: 0,
                    peak_sigma_yy: f64::NAN,
                    peak_eps_yy: f64::NAN,
                    peak_energy: f64::NAN,
                },
            };
            statuses.push(format!("{}:{}", k.name(), peak.status));
            peaks.push(peak);
        }
        let meta = format!(
            "# case = compare, alpha = {}, beta = {}, sigma_T = {s}, fiber = {}, nx = {}, ny = {}, status = {}\n",
            cfg.material.alpha(),
            cfg.material.beta(),
            cfg.material.fiber_axis().name(),
            cfg.mesh.nx,
            cfg.mesh.ny,
            statuses.join(";")
        );
        let name = format!("sigma_{s}.csv");
        let contents = format!("{meta}{header}\n{body}");
        let sha256 = write_artifact(&root.join(&name), &contents)?;
        let all_ok = group.iter().all(|(_, r)| matches!(r, Ok(sv) if sv.state.status.is_success()));
        manifest.entries.push(ManifestEntry {
            path: format!("{rel_root}/{name}"),
            kind: "compare_profile".into(),
            status: if all_ok { "ok".into() } else { "incomplete".into() },
            sha256,
            params: base_params(s),
        });
    }
    let mut summary = CompareSummary { peaks, manifest };
    let sha256 = write_artifact(&root.join("summary.csv"), &summary.summary_csv())?;
    summary.manifest.entries.push(ManifestEntry {
        path: format!("{rel_root}/summary.csv"),
        kind: "compare_summary".into(),
        status: if summary.success() { "ok".into() } else { "incomplete".into() },
        sha256,
        params: vec![("fiber".into(), cfg.material.fiber_axis().name().into())],
    });
    write_artifact(&root.join(MANIFEST), &summary.manifest.render())?;
    Ok(summary)
}

/// Mesh statistics of the configured plate.
pub fn mesh_info(cfg: &RunConfig) -> Result<String> {
    Ok(QuadMesh::from_geometry(&cfg.mesh)?.summary())
}

/// Reads a manifest written by [`run`] or [`compare_loads`] and lists the
/// entries whose files are missing or changed.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Manifest::parse(&text)?.verify(dir))
}
