//! Run configuration: a TOML file restricted to dotted `section.key = value`
//! pairs, with environment overrides.
//!
//! ```toml
//! case = "case1a"
//! material.mu = 1.0
//! material.lambda = 1.0
//! material.gamma = 0.5
//! sweep.beta = [0.5, 1.0, 2.0]
//! ```
//!
//! An environment variable `CRACKFEM_MATERIAL__BETA=2` overrides
//! `material.beta`: strip the prefix, lowercase, and read `__` as `.`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::Value;

use crate::assembly::{LoadKind, LoadProfile};
use crate::constitutive::{FiberAxis, MaterialModel};
use crate::error::{Error, Result};
use crate::mesh::PlateGeometry;
use crate::picard::PicardConfig;
use crate::solver::SolverConfig;

pub const ENV_PREFIX: &str = "CRACKFEM_";

/// Default load levels of the load comparison.
pub const COMPARE_SIGMA_T: [f64; 3] = [0.001, 0.01, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    Case1a,
    Case1b,
    Case2a,
    Case2b,
    UniformX,
    UniformY,
    Custom,
}

impl CaseId {
    pub const ALL: [CaseId; 7] = [
        CaseId::Case1a,
        CaseId::Case1b,
        CaseId::Case2a,
        CaseId::Case2b,
        CaseId::UniformX,
        CaseId::UniformY,
        CaseId::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Case1a => "case1a",
            CaseId::Case1b => "case1b",
            CaseId::Case2a => "case2a",
            CaseId::Case2b => "case2b",
            CaseId::UniformX => "uniform_x",
            CaseId::UniformY => "uniform_y",
            CaseId::Custom => "custom",
        }
    }

    /// Fiber axis and load profile fixed by the case, if any.
    pub fn forced(self) -> Option<(FiberAxis, LoadKind)> {
        match self {
            CaseId::Case1a => Some((FiberAxis::X, LoadKind::Slope)),
            CaseId::Case1b => Some((FiberAxis::Y, LoadKind::Slope)),
            CaseId::Case2a => Some((FiberAxis::X, LoadKind::Sine)),
            CaseId::Case2b => Some((FiberAxis::Y, LoadKind::Sine)),
            CaseId::UniformX => Some((FiberAxis::X, LoadKind::Uniform)),
            CaseId::UniformY => Some((FiberAxis::Y, LoadKind::Uniform)),
            CaseId::Custom => None,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let k = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == k || c.name().replace('_', "") == k)
            .ok_or_else(|| format!("unknown case '{s}'"))
    }
}

/// Optional parameter lists; an empty list means "use the base value".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sweep {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma_t: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_t: f64,
}

impl SweepPoint {
    /// Directory name of the point, e.g. `a1_b0.5_s0.1`.
    pub fn signature(&self) -> String {
        format!("a{}_b{}_s{}", self.alpha, self.beta, self.sigma_t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    pub loads: Vec<LoadKind>,
    pub sigma_t: Vec<f64>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            loads: vec![LoadKind::Uniform, LoadKind::Slope, LoadKind::Sine],
            sigma_t: COMPARE_SIGMA_T.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseId,
    pub material: MaterialModel,
    pub load: LoadProfile,
    pub mesh: PlateGeometry,
    pub solver: SolverConfig,
    pub picard: PicardConfig,
    pub sweep: Sweep,
    pub compare: CompareSpec,
    pub output_dir: PathBuf,
    /// Keys whose configured value was replaced by the case definition.
    pub notes: Vec<String>,
}

impl RunConfig {
    /// Benchmark case with the default material, mesh and solver settings.
    pub fn for_case(case: CaseId) -> Self {
        let mut cfg = RunConfig {
            case,
            material: MaterialModel::default(),
            load: LoadProfile::new(LoadKind::Slope, 0.1),
            mesh: PlateGeometry::default(),
            solver: SolverConfig::default(),
            picard: PicardConfig::default(),
            sweep: Sweep::default(),
            compare: CompareSpec::default(),
            output_dir: PathBuf::from("output"),
            notes: Vec::new(),
        };
        if let Some((axis, kind)) = case.forced() {
            cfg.material = cfg.material.with_fiber_axis(axis).expect("default material is valid");
            cfg.load.kind = kind;
        }
        cfg
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with_env(&text, std::env::vars())
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_env(text, std::iter::empty())
    }

    /// Parses `text`, then applies `CRACKFEM_*` overrides from `env`.
    pub fn parse_with_env(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", &Value::Table(table), &mut flat)?;
        for (k, v) in env {
            if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
                let key = rest.to_ascii_lowercase().replace("__", ".");
                flat.insert(key, parse_env_value(&v));
            }
        }
        Fields { map: flat }.into_config()
    }

    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let or_base = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let alphas = or_base(&self.sweep.alpha, self.material.alpha());
        let betas = or_base(&self.sweep.beta, self.material.beta());
        let sigmas = or_base(&self.sweep.sigma_t, self.load.sigma_t);
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &beta in &betas {
                for &sigma_t in &sigmas {
                    out.push(SweepPoint { alpha, beta, sigma_t });
                }
            }
        }
        out
    }

    /// Material and load of one sweep point.
    pub fn at(&self, p: &SweepPoint) -> Result<(MaterialModel, LoadProfile)> {
        let m = self.material.with_alpha(p.alpha)?.with_beta(p.beta)?;
        Ok((m, LoadProfile::new(self.load.kind, p.sigma_t)))
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) -> Result<()> {
    match v {
        Value::Table(t) => {
            if prefix.matches('.').count() >= 1 {
                return Err(Error::Config(format!("{prefix}: nesting deeper than section.key")));
            }
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out)?;
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
    Ok(())
}

fn parse_env_value(s: &str) -> Value {
    format!("v = {s}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(s.to_string()))
}

/// Flat key map consumed field by field; anything left over is unknown.
struct Fields {
    map: BTreeMap<String, Value>,
}

fn bad(key: &str, msg: impl fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(f)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(other) => Err(bad(key, format!("expected a number, got {other}"))),
        }
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.num(key)?.ok_or_else(|| bad(key, "missing required field"))
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as usize)),
            Some(other) => Err(bad(key, format!("expected a non-negative integer, got {other}"))),
        }
    }

    fn text(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(bad(key, format!("expected a string, got {other}"))),
        }
    }

    fn parsed<T: FromStr<Err = String>>(&mut self, key: &str) -> Result<Option<T>> {
        self.text(key)?.map(|s| s.parse::<T>().map_err(|e| bad(key, e))).transpose()
    }

    fn list<T>(&mut self, key: &str, item: impl Fn(&Value) -> Option<T>) -> Result<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(a)) => {
                if a.is_empty() {
                    return Err(bad(key, "list must not be empty"));
                }
                a.iter()
                    .map(|v| item(v).ok_or_else(|| bad(key, format!("invalid list entry {v}"))))
                    .collect::<Result<Vec<T>>>()
                    .map(Some)
            }
            Some(other) => Err(bad(key, format!("expected a list, got {other}"))),
        }
    }

    fn num_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let item = |v: &Value| match v {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        };
        Ok(self.list(key, item)?.unwrap_or_default())
    }

    fn into_config(mut self) -> Result<RunConfig> {
        let case: CaseId = self.parsed("case")?.ok_or_else(|| bad("case", "missing required field"))?;
        let mut notes = Vec::new();

        let mu = self.required("material.mu")?;
        let lambda = self.required("material.lambda")?;
        let gamma = self.required("material.gamma")?;
        let mut fiber: FiberAxis = self.parsed("material.fiber_axis")?.unwrap_or(FiberAxis::X);
        let alpha = self.num_or("material.alpha", 1.0)?;
        let beta = self.num_or("material.beta", 1.0)?;

        let mut kind: LoadKind = self.parsed("load.kind")?.unwrap_or(LoadKind::Slope);
        let sigma_t = self.num_or("load.sigma_t", 0.1)?;
        if !sigma_t.is_finite() {
            return Err(bad("load.sigma_t", "must be finite"));
        }

        if let Some((axis, load)) = case.forced() {
            if axis != fiber {
                notes.push(format!("material.fiber_axis set to {} by {case}", axis.name()));
                fiber = axis;
            }
            if load != kind {
                notes.push(format!("load.kind set to {} by {case}", load.name()));
                kind = load;
            }
        }
        let material = MaterialModel::new(mu, lambda, gamma, fiber, alpha, beta).map_err(|e| bad("material", e))?;

        let d = PlateGeometry::default();
        let mesh = PlateGeometry {
            width: self.num_or("mesh.width", d.width)?,
            height: self.num_or("mesh.height", d.height)?,
            crack_length: self.num_or("mesh.crack_length", d.crack_length)?,
            nx: self.count("mesh.nx")?.unwrap_or(d.nx),
            ny: self.count("mesh.ny")?.unwrap_or(d.ny),
            grading: self.num_or("mesh.grading", d.grading)?,
        };

        let sd = SolverConfig::default();
        let solver = SolverConfig {
            method: self.parsed("solver.method")?.unwrap_or(sd.method),
            rel_tol: self.num_or("solver.rel_tol", sd.rel_tol)?,
            max_iter: self.count("solver.max_iter")?,
            preconditioner: self.parsed("solver.preconditioner")?.unwrap_or(sd.preconditioner),
        };
        solver.validate().map_err(|e| bad("solver", e))?;

        let pd = PicardConfig::default();
        let picard = PicardConfig {
            tol: self.num_or("picard.tol", pd.tol)?,
            max_iter: self.count("picard.max_iter")?.unwrap_or(pd.max_iter),
            stagnation_window: self.count("picard.stagnation_window")?.unwrap_or(pd.stagnation_window),
            stagnation_rel: self.num_or("picard.stagnation_rel", pd.stagnation_rel)?,
            relaxation: self.num_or("picard.relaxation", pd.relaxation)?,
        };
        picard.validate().map_err(|e| bad("picard", e))?;

        let sweep = Sweep {
            alpha: self.num_list("sweep.alpha")?,
            beta: self.num_list("sweep.beta")?,
            sigma_t: self.num_list("sweep.sigma_t")?,
        };

        let cd = CompareSpec::default();
        let loads = self
            .list("compare.loads", |v| v.as_str().and_then(|s| s.parse::<LoadKind>().ok()))?
            .unwrap_or(cd.loads);
        let compare_sigma = self.num_list("compare.sigma_t")?;
        let compare = CompareSpec {
            loads,
            sigma_t: if compare_sigma.is_empty() { cd.sigma_t } else { compare_sigma },
        };

        let output_dir = PathBuf::from(self.text("output_dir")?.unwrap_or_else(|| "output".into()));

        if let Some(key) = self.map.keys().next() {
            return Err(bad(key, "unknown key"));
        }

        let cfg = RunConfig {
            case,
            material,
            load: LoadProfile::new(kind, sigma_t),
            mesh,
            solver,
            picard,
            sweep,
            compare,
            output_dir,
            notes,
        };
        // every sweep point must give a valid material
        for p in cfg.sweep_points() {
            cfg.at(&p).map_err(|e| bad("sweep", e))?;
        }
        Ok(cfg)
    }
}
