//! Fixed-point (Picard) iteration for the strain-limiting problem.
//!
//! 1. Warm start from the linear-elastic solution (β = 0).
//! 2. Assemble with Ψ frozen at the previous iterate and solve.
//! 3. Evaluate the force imbalance `a(uⁿ; φ) − L(φ)`; stop on tolerance,
//!    stagnation, or the iteration cap.

use std::fmt::Write as _;

use crate::assembly::{LoadProfile, Problem};
use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::solver::{solve_detailed, SolverConfig};
use crate::sparse::norm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub stagnation_window: usize,
    pub stagnation_rel: f64,
    /// Under-relaxation factor ω in (0, 1]; 1 is the plain scheme.
    pub relaxation: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-6,
            max_iter: 10,
            stagnation_window: 3,
            stagnation_rel: 1e-3,
            relaxation: 1.0,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("picard.tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("picard.max_iter must be >= 1".into()));
        }
        if self.stagnation_window < 1 {
            return Err(Error::Config("picard.stagnation_window must be >= 1".into()));
        }
        if !(self.stagnation_rel >= 0.0) {
            return Err(Error::Config("picard.stagnation_rel must be >= 0".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Config(format!("picard.relaxation must be in (0, 1], got {}", self.relaxation)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PicardStatus {
    ConvergedTol,
    Stagnated,
    MaxIter,
}

impl PicardStatus {
    pub fn name(self) -> &'static str {
        match self {
            PicardStatus::ConvergedTol => "converged",
            PicardStatus::Stagnated => "stagnated",
            PicardStatus::MaxIter => "max_iter",
        }
    }

    /// Whether a run with this status counts as successful.
    pub fn is_success(self) -> bool {
        !matches!(self, PicardStatus::MaxIter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRecord {
    pub iteration: usize,
    pub norm: f64,
    pub clamp_events: usize,
}

#[derive(Debug, Clone)]
pub struct PicardState {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub history: Vec<ResidualRecord>,
    pub status: PicardStatus,
}

impl PicardState {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.norm)
    }

    pub fn residual_norms(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.norm).collect()
    }

    /// `iteration,residual_norm,clamp_events` rows.
    pub fn convergence_csv(&self, metadata: &str) -> String {
        let mut s = String::new();
        if !metadata.is_empty() {
            let _ = writeln!(s, "# {metadata}");
        }
        let _ = writeln!(s, "# status = {}", self.status.name());
        s.push_str("iteration,residual_norm,clamp_events\n");
        for r in &self.history {
            let _ = writeln!(s, "{},{:.6e},{}", r.iteration, r.norm, r.clamp_events);
        }
        s
    }
}

/// Linear-elastic solution used as the first iterate.
pub fn warm_start(problem: &Problem, solver: &SolverConfig) -> Result<Vec<f64>> {
    let linear = problem.with_material(problem.material.linearized());
    let sys = linear.assemble(None)?;
    Ok(solve_detailed(&sys, solver, None)?.x)
}

fn stagnated(history: &[ResidualRecord], cfg: &PicardConfig) -> bool {
    let w = cfg.stagnation_window;
    if history.len() < w + 1 {
        return false;
    }
    history[history.len() - w - 1..].windows(2).all(|p| {
        let (a, b) = (p[0].norm, p[1].norm);
        (b - a).abs() <= cfg.stagnation_rel * a
    })
}

/// One Picard step: solve with Ψ frozen at `prev`.
pub fn picard_step(problem: &Problem, solver: &SolverConfig, prev: &[f64]) -> Result<Vec<f64>> {
    let sys = problem.assemble(Some(prev))?;
    Ok(solve_detailed(&sys, solver, Some(prev))?.x)
}

pub fn run_picard_problem(problem: &Problem, solver: &SolverConfig, cfg: &PicardConfig) -> Result<PicardState> {
    cfg.validate()?;
    solver.validate()?;
    let u0 = warm_start(problem, solver)?;
    run_picard_from(problem, solver, cfg, u0)
}

/// Picard loop starting from a given first iterate.
pub fn run_picard_from(
    problem: &Problem,
    solver: &SolverConfig,
    cfg: &PicardConfig,
    u0: Vec<f64>,
) -> Result<PicardState> {
    let mut u = u0;
    let mut u_prev = u.clone();
    let mut history: Vec<ResidualRecord> = Vec::new();
    let fail = |iteration: usize, e: Error, history: &[ResidualRecord]| Error::Picard {
        iteration,
        source: Box::new(e),
        history: history.iter().map(|r| r.norm).collect(),
    };
    let mut status = PicardStatus::MaxIter;
    for n in 1..=cfg.max_iter {
        let mut next = picard_step(problem, solver, &u).map_err(|e| fail(n, e, &history))?;
        if cfg.relaxation < 1.0 {
            let w = cfg.relaxation;
            for (x, &old) in next.iter_mut().zip(&u) {
                *x = w * *x + (1.0 - w) * old;
            }
        }
        u_prev = std::mem::replace(&mut u, next);
        let (_, norm, clamp_events) = problem.residual(&u).map_err(|e| fail(n, e, &history))?;
        history.push(ResidualRecord { iteration: n, norm, clamp_events });
        if norm <= cfg.tol {
            status = PicardStatus::ConvergedTol;
            break;
        }
        if stagnated(&history, cfg) {
            status = PicardStatus::Stagnated;
            break;
        }
    }
    Ok(PicardState { u, u_prev, history, status })
}

/// Picard solve of the cracked-plate benchmark.
pub fn run_picard(
    mesh: &QuadMesh,
    m: &MaterialModel,
    load: LoadProfile,
    solver: &SolverConfig,
    cfg: &PicardConfig,
) -> Result<PicardState> {
    run_picard_problem(&Problem::benchmark(mesh, *m, load), solver, cfg)
}

/// Relative change of `u` produced by one more Picard step.
pub fn fixed_point_defect(problem: &Problem, solver: &SolverConfig, u: &[f64]) -> Result<f64> {
    let next = picard_step(problem, solver, u)?;
    let diff: Vec<f64> = next.iter().zip(u).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / norm2(u).max(f64::MIN_POSITIVE))
}
