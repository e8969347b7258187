//! Independent checks: manufactured solutions on the crack-free plate,
//! dense cross-checks of the sparse solver, and empirical constants of the
//! semilinear form.
//!
//! Everything here goes through public entry points only; nothing on the
//! solve path depends on this module.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{h1_norm, strain_at, Problem, SparseSystem};
use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::mesh::{build_plate_mesh, QuadMesh};
use crate::picard::{run_picard_problem, PicardConfig, PicardState};
use crate::quadrature::{map_point, physical_gradients, ElementQuadrature, GAUSS_2X2};
use crate::solver::{solve, SolverConfig};
use crate::tensor::{contract, sym_grad, SymTensor2};

/// Largest `β·s` a manufactured field may reach on the plate.
pub const MAX_BETA_S: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManufacturedKind {
    /// Translation plus infinitesimal rotation.
    Rigid,
    /// Constant strain.
    Affine,
    Bilinear,
    Poly2,
    TrigSmooth,
}

impl ManufacturedKind {
    pub fn name(self) -> &'static str {
        match self {
            ManufacturedKind::Rigid => "rigid",
            ManufacturedKind::Affine => "affine",
            ManufacturedKind::Bilinear => "bilinear",
            ManufacturedKind::Poly2 => "poly2",
            ManufacturedKind::TrigSmooth => "trig",
        }
    }
}

/// Value, gradient (`g[i][j] = ∂ⱼuᵢ`) and Hessian (`h[i][j][k] = ∂ⱼ∂ₖuᵢ`).
type Jet = ([f64; 2], [[f64; 2]; 2], [[[f64; 2]; 2]; 2]);

fn jet(kind: ManufacturedKind, p: [f64; 2]) -> Jet {
    use std::f64::consts::PI;
    let [x, y] = p;
    match kind {
        ManufacturedKind::Rigid => ([0.3 - 0.2 * y, -0.1 + 0.2 * x], [[0.0, -0.2], [0.2, 0.0]], [[[0.0; 2]; 2]; 2]),
        ManufacturedKind::Affine => (
            [0.1 + 0.8 * x + 0.3 * y, -0.2 + 0.1 * x - 0.5 * y],
            [[0.8, 0.3], [0.1, -0.5]],
            [[[0.0; 2]; 2]; 2],
        ),
        ManufacturedKind::Bilinear => (
            [0.3 + x + 0.5 * y + x * y, -0.2 + 0.4 * x - y + 0.7 * x * y],
            [[1.0 + y, 0.5 + x], [0.4 + 0.7 * y, -1.0 + 0.7 * x]],
            [[[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.7], [0.7, 0.0]]],
        ),
        ManufacturedKind::Poly2 => (
            [
                x * x + 0.5 * x * y - 0.3 * y * y,
                -0.4 * x * x + x * y + 0.6 * y * y,
            ],
            [[2.0 * x + 0.5 * y, 0.5 * x - 0.6 * y], [-0.8 * x + y, x + 1.2 * y]],
            [[[2.0, 0.5], [0.5, -0.6]], [[-0.8, 1.0], [1.0, 1.2]]],
        ),
        ManufacturedKind::TrigSmooth => {
            let (sx, cx) = (PI * x).sin_cos();
            let (sy2, cy2) = (0.5 * PI * y).sin_cos();
            let (sx2, cx2) = (0.5 * PI * x).sin_cos();
            let (sy, cy) = (PI * y).sin_cos();
            // u = (sin πx cos(πy/2), cos(πx/2) sin πy)
            let u = [sx * cy2, cx2 * sy];
            let g = [
                [PI * cx * cy2, -0.5 * PI * sx * sy2],
                [-0.5 * PI * sx2 * sy, PI * cx2 * cy],
            ];
            let h = [
                [
                    [-PI * PI * sx * cy2, -0.5 * PI * PI * cx * sy2],
                    [-0.5 * PI * PI * cx * sy2, -0.25 * PI * PI * sx * cy2],
                ],
                [
                    [-0.25 * PI * PI * cx2 * sy, -0.5 * PI * PI * sx2 * cy],
                    [-0.5 * PI * PI * sx2 * cy, -PI * PI * cx2 * sy],
                ],
            ];
            (u, g, h)
        }
    }
}

/// Exact field on the crack-free plate `[0, width] × [0, height]` together
/// with the body force that balances it for `material`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: ManufacturedKind,
    pub material: MaterialModel,
    pub amplitude: f64,
    pub width: f64,
    pub height: f64,
}

/// Ψ and dΨ/ds, evaluated here without the clamp.
fn psi_and_slope(alpha: f64, beta: f64, s: f64) -> (f64, f64) {
    if beta == 0.0 {
        return (1.0, 0.0);
    }
    let t = (beta * s).powf(alpha);
    let psi = (1.0 - t).powf(-1.0 / alpha);
    let slope = if s > 0.0 {
        (1.0 - t).powf(-1.0 / alpha - 1.0) * beta.powf(alpha) * s.powf(alpha - 1.0)
    } else {
        0.0
    };
    (psi, slope)
}

impl ManufacturedCase {
    pub fn displacement(&self, p: [f64; 2]) -> [f64; 2] {
        let (u, _, _) = jet(self.kind, p);
        [self.amplitude * u[0], self.amplitude * u[1]]
    }

    pub fn strain(&self, p: [f64; 2]) -> SymTensor2 {
        let (_, g, _) = jet(self.kind, p);
        self.amplitude * sym_grad(g)
    }

    /// `∂ₖε` for k = x, y.
    fn strain_derivatives(&self, p: [f64; 2]) -> [SymTensor2; 2] {
        let (_, _, h) = jet(self.kind, p);
        let a = self.amplitude;
        [0, 1].map(|k| {
            SymTensor2::new(a * h[0][0][k], a * h[1][1][k], 0.5 * a * (h[0][1][k] + h[1][0][k]))
        })
    }

    /// `s = ‖E½ε‖` of the exact field.
    pub fn energy_norm(&self, p: [f64; 2]) -> f64 {
        let e = self.strain(p);
        contract(&self.material.stiffness_apply(&e), &e).sqrt()
    }

    /// Stress of the exact field, through the public constitutive map.
    pub fn stress(&self, p: [f64; 2]) -> SymTensor2 {
        self.material.stress_from_strain(&self.strain(p)).0
    }

    /// `f = −div T(ε(u))` by the chain rule on the closed-form Hessian.
    pub fn body_force_analytic(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.material;
        let eps = self.strain(p);
        let e_eps = m.stiffness_apply(&eps);
        let s = contract(&e_eps, &eps).sqrt();
        let (psi, slope) = psi_and_slope(m.alpha(), m.beta(), s);
        let d = self.strain_derivatives(p);
        // ∂ₖT = Ψ'(s) ∂ₖs E[ε] + Ψ E[∂ₖε],  ∂ₖs = E[ε] : ∂ₖε / s
        let dt = d.map(|dk| {
            let ds = if s > 0.0 { contract(&e_eps, &dk) / s } else { 0.0 };
            (slope * ds) * e_eps + psi * m.stiffness_apply(&dk)
        });
        [-(dt[0].xx + dt[1].xy), -(dt[0].xy + dt[1].yy)]
    }

    /// `f = −div T(ε(u))` by Richardson-extrapolated central differences of
    /// the stress.
    pub fn body_force_numerical(&self, p: [f64; 2]) -> [f64; 2] {
        let dt = [0, 1].map(|k| {
            let central = |h: f64| {
                let mut a = p;
                let mut b = p;
                a[k] += h;
                b[k] -= h;
                (1.0 / (2.0 * h)) * (self.stress(a) - self.stress(b))
            };
            let h = 1e-2 * self.width.min(self.height);
            let (d1, d2, d3) = (central(h), central(0.5 * h), central(0.25 * h));
            let r1 = (1.0 / 3.0) * (4.0 * d2 - d1);
            let r2 = (1.0 / 3.0) * (4.0 * d3 - d2);
            (1.0 / 15.0) * (16.0 * r2 - r1)
        });
        [-(dt[0].xx + dt[1].xy), -(dt[0].xy + dt[1].yy)]
    }

    /// Body force used by the solve: numerical for the trigonometric field,
    /// closed form otherwise.
    pub fn body_force(&self, p: [f64; 2]) -> [f64; 2] {
        match self.kind {
            ManufacturedKind::TrigSmooth => self.body_force_numerical(p),
            _ => self.body_force_analytic(p),
        }
    }

    /// Largest `β·s` over a 101×101 grid of the plate.
    pub fn max_beta_s(&self) -> f64 {
        let n = 100;
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let p = [self.width * i as f64 / n as f64, self.height * j as f64 / n as f64];
                worst = worst.max(self.material.beta() * self.energy_norm(p));
            }
        }
        worst
    }

    pub fn mesh(&self, n: usize) -> Result<QuadMesh> {
        build_plate_mesh(self.width, self.height, 0.0, n, n, 1.0)
    }

    /// Full Dirichlet problem on an `n × n` mesh of the plate.
    pub fn problem<'a>(&self, mesh: &'a QuadMesh) -> Problem<'a> {
        let constraints = mesh
            .boundary_nodes()
            .into_iter()
            .flat_map(|n| {
                let u = self.displacement(mesh.nodes[n]);
                [(2 * n, u[0]), (2 * n + 1, u[1])]
            })
            .collect();
        let case = *self;
        let f: crate::assembly::BodyForce = Arc::new(move |p| case.body_force(p));
        let body = match self.kind {
            ManufacturedKind::Rigid => None,
            _ => Some(f),
        };
        Problem::new(mesh, self.material, None, body, constraints)
    }

    /// `(‖u_h − u‖_L2, |u_h − u|_H1)` with a 4×4 Gauss rule.
    pub fn errors(&self, mesh: &QuadMesh, uh: &[f64]) -> (f64, f64) {
        let quad = ElementQuadrature::tensor(4);
        let mut l2 = 0.0;
        let mut h1 = 0.0;
        for e in 0..mesh.elements.len() {
            let x = mesh.element_coords(e);
            let dofs = mesh.element_dofs(e);
            for p in 0..quad.len() {
                let (g, det) = physical_gradients(&x, &quad.ref_grads[p]);
                let w = quad.weights[p] * det;
                let xp = map_point(&x, &quad.shape[p]);
                let (u, gu, _) = jet(self.kind, xp);
                for c in 0..2 {
                    let mut val = 0.0;
                    let mut grad = [0.0; 2];
                    for a in 0..4 {
                        val += quad.shape[p][a] * uh[dofs[2 * a + c]];
                        grad[0] += g[a][0] * uh[dofs[2 * a + c]];
                        grad[1] += g[a][1] * uh[dofs[2 * a + c]];
                    }
                    l2 += w * (val - self.amplitude * u[c]).powi(2);
                    h1 += w * ((grad[0] - self.amplitude * gu[c][0]).powi(2)
                        + (grad[1] - self.amplitude * gu[c][1]).powi(2));
                }
            }
        }
        (l2.sqrt(), h1.sqrt())
    }

    /// Solves on an `n × n` mesh and returns `(mesh, state)`.
    pub fn solve(&self, n: usize, solver: &SolverConfig, picard: &PicardConfig) -> Result<(QuadMesh, PicardState)> {
        let mesh = self.mesh(n)?;
        let state = run_picard_problem(&self.problem(&mesh), solver, picard)?;
        Ok((mesh, state))
    }
}

/// Manufactured case on the unit square; rejects amplitudes with
/// `β·s ≥ MAX_BETA_S` anywhere on the plate.
pub fn build_manufactured(m: &MaterialModel, kind: ManufacturedKind, amplitude: f64) -> Result<ManufacturedCase> {
    build_manufactured_on(m, kind, amplitude, 1.0, 1.0)
}

pub fn build_manufactured_on(
    m: &MaterialModel,
    kind: ManufacturedKind,
    amplitude: f64,
    width: f64,
    height: f64,
) -> Result<ManufacturedCase> {
    if !(amplitude.is_finite() && width > 0.0 && height > 0.0) {
        return Err(Error::Manufactured(format!(
            "need finite amplitude and positive plate size, got amplitude {amplitude}, {width} x {height}"
        )));
    }
    let case = ManufacturedCase { kind, material: *m, amplitude, width, height };
    let bs = case.max_beta_s();
    if bs >= MAX_BETA_S {
        return Err(Error::Manufactured(format!(
            "max beta*s = {bs:.4} reaches the bound {MAX_BETA_S}; lower the amplitude"
        )));
    }
    Ok(case)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    pub h1_error: f64,
    pub l2_rate: Option<f64>,
    pub h1_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub case: ManufacturedCase,
    pub rows: Vec<StudyRow>,
}

impl StudyResult {
    /// `(L2 rate, H1 rate)` of the two finest meshes.
    pub fn finest_rates(&self) -> (f64, f64) {
        let r = self.rows.last().expect("study has rows");
        (r.l2_rate.unwrap_or(f64::NAN), r.h1_rate.unwrap_or(f64::NAN))
    }

    /// `case,n,h,l2_error,h1_error,l2_rate,h1_rate` rows.
    pub fn csv(&self, label: &str) -> String {
        let mut s = String::from("case,n,h,l2_error,h1_error,l2_rate,h1_rate\n");
        let rate = |r: Option<f64>| r.map_or(String::new(), |v| format!("{v:.4}"));
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{label},{},{:.6e},{:.6e},{:.6e},{},{}",
                r.n,
                r.h,
                r.l2_error,
                r.h1_error,
                rate(r.l2_rate),
                rate(r.h1_rate)
            );
        }
        s
    }
}

/// Errors and observed orders on `n × n` meshes; `sizes` must double at
/// every step and errors must decrease.
pub fn convergence_study(
    case: &ManufacturedCase,
    sizes: &[usize],
    solver: &SolverConfig,
    picard: &PicardConfig,
) -> Result<StudyResult> {
    if sizes.len() < 3 {
        return Err(Error::Study(format!("need at least 3 mesh sizes, got {}", sizes.len())));
    }
    if sizes.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::Study(format!("mesh sizes must double at each step: {sizes:?}")));
    }
    let mut rows: Vec<StudyRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (mesh, state) = case.solve(n, solver, picard)?;
        if !state.status.is_success() {
            return Err(Error::Study(format!(
                "picard did not settle on the {n}x{n} mesh (residual {:e})",
                state.final_residual()
            )));
        }
        let (l2, h1) = case.errors(&mesh, &state.u);
        let (l2_rate, h1_rate) = match rows.last() {
            Some(prev) => {
                if !(l2 < prev.l2_error && h1 < prev.h1_error) {
                    return Err(Error::Study(format!(
                        "error did not decrease from n = {} to n = {n}: L2 {:e} -> {l2:e}, H1 {:e} -> {h1:e}",
                        prev.n, prev.l2_error, prev.h1_error
                    )));
                }
                let ratio = prev.h / mesh.h;
                (Some((prev.l2_error / l2).ln() / ratio.ln()), Some((prev.h1_error / h1).ln() / ratio.ln()))
            }
            None => (None, None),
        };
        rows.push(StudyRow { n, h: mesh.h, l2_error: l2, h1_error: h1, l2_rate, h1_rate });
    }
    Ok(StudyResult { case: *case, rows })
}

/// Solves `sys` densely and with `solver`; returns
/// `max_i |x_i − x̂_i| / max_i |x̂_i|`.
///
/// A failed dense Cholesky factorization means the assembled matrix is not
/// symmetric positive definite.
pub fn dense_check(sys: &SparseSystem, solver: &SolverConfig) -> Result<f64> {
    let n = sys.dim();
    if n > 2000 {
        return Err(Error::Config(format!("dense check limited to 2000 dofs, system has {n}")));
    }
    let a = sys.matrix.to_dense();
    let asym = (&a - a.transpose()).amax();
    if asym > 1e-12 * a.amax() {
        return Err(Error::Breakdown(format!("dense check: matrix asymmetric by {asym:e}")));
    }
    if a.clone().cholesky().is_none() {
        return Err(Error::Breakdown("dense check: Cholesky factorization failed".into()));
    }
    let b = DVector::from_column_slice(&sys.rhs);
    let x_dense = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Breakdown("dense check: singular matrix".into()))?;
    let x = solve(sys, solver)?;
    let scale = x_dense.amax();
    let diff = x.iter().zip(x_dense.iter()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Empirical constants of the semilinear form over random triples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaEstimate {
    /// `max |a(u1;w) − a(u2;w)| / (‖u1−u2‖ ‖w‖)`.
    pub k1: f64,
    /// `min (a(u1;d) − a(u2;d)) / ‖d‖²` with `d = u1 − u2`.
    pub k2: f64,
    pub samples: usize,
}

fn max_beta_s_discrete(problem: &Problem, u: &[f64]) -> Result<f64> {
    let m = problem.material;
    let q = &*GAUSS_2X2;
    let mut worst: f64 = 0.0;
    for e in 0..problem.mesh.elements.len() {
        for p in 0..q.len() {
            let (eps, _) = strain_at(problem.mesh, e, &q.ref_grads[p], u)?;
            worst = worst.max(m.beta() * m.energy_seminorm(&eps));
        }
    }
    Ok(worst)
}

/// Random admissible field of the problem's constraint set with
/// `max β·s = target` (or unit scale when β = 0).
fn random_field(problem: &Problem, rng: &mut ChaCha8Rng, target: f64) -> Result<Vec<f64>> {
    let mask = problem.constrained_mask();
    let mut u: Vec<f64> = mask
        .iter()
        .map(|&c| if c { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect();
    let bs = max_beta_s_discrete(problem, &u)?;
    if bs > 0.0 {
        let scale = target / bs;
        u.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(u)
}

/// Gram matrix of the full H1 inner product over all dofs, 2×2 Gauss.
pub fn h1_gram(mesh: &QuadMesh) -> DMatrix<f64> {
    let n = mesh.num_dofs();
    let q = &*GAUSS_2X2;
    let mut g = DMatrix::zeros(n, n);
    for e in 0..mesh.elements.len() {
        let x = mesh.element_coords(e);
        let nodes = mesh.elements[e];
        for p in 0..q.len() {
            let (grad, det) = physical_gradients(&x, &q.ref_grads[p]);
            let w = q.weights[p] * det;
            for a in 0..4 {
                for b in 0..4 {
                    let v = w * (q.shape[p][a] * q.shape[p][b] + grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                    for c in 0..2 {
                        g[(2 * nodes[a] + c, 2 * nodes[b] + c)] += v;
                    }
                }
            }
        }
    }
    g
}

/// Estimates the Lipschitz and monotonicity constants of `a(·;·)` from
/// `samples` random pairs with homogeneous constraints.
///
/// For each pair the test function `w` of the Lipschitz quotient is the
/// maximizer over the discrete space, i.e. the quotient is the dual H1 norm
/// of `a(u1;·) − a(u2;·)`.
pub fn lemma_constants(problem: &Problem, samples: usize, seed: u64) -> Result<LemmaEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = problem.mesh;
    let free: Vec<usize> = problem
        .constrained_mask()
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| i)
        .collect();
    let gram = h1_gram(mesh).select_rows(&free).select_columns(&free);
    let gram = gram
        .cholesky()
        .ok_or_else(|| Error::Breakdown("H1 Gram matrix not positive definite".into()))?;
    let mut k1: f64 = 0.0;
    let mut k2 = f64::INFINITY;
    for _ in 0..samples {
        let t1 = rng.gen_range(0.05..MAX_BETA_S);
        let t2 = rng.gen_range(0.05..MAX_BETA_S);
        let u1 = random_field(problem, &mut rng, t1)?;
        let u2 = random_field(problem, &mut rng, t2)?;
        let d: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let (f1, _) = problem.internal_force(&u1)?;
        let (f2, _) = problem.internal_force(&u2)?;
        let r = DVector::from_iterator(free.len(), free.iter().map(|&i| f1[i] - f2[i]));
        let w = gram.solve(&r);
        let dual = r.dot(&w).sqrt();
        let nd = h1_norm(mesh, &d);
        let mono: f64 = d.iter().zip(f1.iter().zip(&f2)).map(|(di, (a, b))| di * (a - b)).sum::<f64>() / (nd * nd);
        k1 = k1.max(dual / nd);
        k2 = k2.min(mono);
    }
    Ok(LemmaEstimate { k1, k2, samples })
}
