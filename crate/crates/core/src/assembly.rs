//! Q1 element routines and global assembly.
//!
//! Each Picard step solves the linear system of the semilinear form with Ψ
//! frozen at the previous iterate:
//!
//! ```text
//! Σ_K ∫_K Ψ(‖E½ε(u_prev)‖) E[ε(u)] : ε(v) dx = ∫ f·v dx + ∫_Γ3 g·v ds
//! ```
//!
//! Ψ is evaluated per quadrature point, so every assembled matrix is
//! symmetric and, after constraint elimination, positive definite.

use std::sync::Arc;

use rayon::prelude::*;

use crate::constitutive::MaterialModel;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, QuadMesh};
use crate::quadrature::{gauss_legendre, map_point, physical_gradients, ElementQuadrature, GAUSS_2X2};
use crate::sparse::{norm2, CsrMatrix};
use crate::tensor::{contract, SymTensor2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadKind {
    Uniform,
    Slope,
    Sine,
    Parabolic,
}

impl LoadKind {
    pub const ALL: [LoadKind; 4] = [LoadKind::Uniform, LoadKind::Slope, LoadKind::Sine, LoadKind::Parabolic];

    pub fn name(self) -> &'static str {
        match self {
            LoadKind::Uniform => "uniform",
            LoadKind::Slope => "slope",
            LoadKind::Sine => "sine",
            LoadKind::Parabolic => "parabolic",
        }
    }
}

impl std::str::FromStr for LoadKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(LoadKind::Uniform),
            "slope" => Ok(LoadKind::Slope),
            "sine" | "sin" => Ok(LoadKind::Sine),
            "parabolic" => Ok(LoadKind::Parabolic),
            other => Err(format!("unknown load profile '{other}'")),
        }
    }
}

/// Vertical traction on the top edge Γ3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadProfile {
    pub kind: LoadKind,
    pub sigma_t: f64,
}

impl LoadProfile {
    pub fn new(kind: LoadKind, sigma_t: f64) -> Self {
        LoadProfile { kind, sigma_t }
    }

    /// Pointwise traction magnitude (acting in +y).
    pub fn traction(&self, x: f64, width: f64) -> f64 {
        let s = self.sigma_t;
        match self.kind {
            LoadKind::Uniform => s,
            LoadKind::Slope => s * (0.1 + 0.1 * x),
            LoadKind::Sine => s * (std::f64::consts::PI * x).sin() / 8.0,
            LoadKind::Parabolic => s * x * (width - x) / (width * width),
        }
    }
}

pub type BodyForce = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Global dof pattern with per-element scatter positions.
#[derive(Debug, Clone)]
pub struct DofPattern {
    template: CsrMatrix,
    slots: Vec<[usize; 64]>,
}

impl DofPattern {
    pub fn new(mesh: &QuadMesh) -> Self {
        let nn = mesh.num_nodes();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
        for el in &mesh.elements {
            for &a in el {
                adj[a].extend_from_slice(el);
            }
        }
        let mut rows = Vec::with_capacity(2 * nn);
        for nbrs in adj.iter_mut() {
            nbrs.sort_unstable();
            nbrs.dedup();
            let cols: Vec<usize> = nbrs.iter().flat_map(|&b| [2 * b, 2 * b + 1]).collect();
            rows.push(cols.clone());
            rows.push(cols);
        }
        let template = CsrMatrix::from_pattern(&rows);
        let slots = (0..mesh.elements.len())
            .map(|e| {
                let dofs = mesh.element_dofs(e);
                let mut s = [0usize; 64];
                for a in 0..8 {
                    for b in 0..8 {
                        s[8 * a + b] = template.position(dofs[a], dofs[b]).expect("element dof pair in pattern");
                    }
                }
                s
            })
            .collect();
        DofPattern { template, slots }
    }
}

/// Algebraic system of one linearized step.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Eliminated Dirichlet dofs and their prescribed values, sorted by dof.
    pub constraints: Vec<(usize, f64)>,
    /// Quadrature points at which Ψ had to be clamped.
    pub clamp_events: usize,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }
}

/// Strain basis of the 8 element dofs at one quadrature point.
fn strain_basis(grads: &[[f64; 2]; 4]) -> [SymTensor2; 8] {
    let mut b = [SymTensor2::ZERO; 8];
    for a in 0..4 {
        let [gx, gy] = grads[a];
        b[2 * a] = SymTensor2::new(gx, 0.0, 0.5 * gy);
        b[2 * a + 1] = SymTensor2::new(0.0, gy, 0.5 * gx);
    }
    b
}

fn element_strain(basis: &[SymTensor2; 8], ue: &[f64; 8]) -> SymTensor2 {
    let mut eps = SymTensor2::ZERO;
    for k in 0..8 {
        eps = eps + ue[k] * basis[k];
    }
    eps
}

fn gather(u: &[f64], dofs: &[usize; 8]) -> [f64; 8] {
    dofs.map(|d| u[d])
}

/// Strain of a dof vector at a reference point of element `e`.
pub fn strain_at(mesh: &QuadMesh, e: usize, ref_grads: &[[f64; 2]; 4], u: &[f64]) -> Result<(SymTensor2, f64)> {
    let x = mesh.element_coords(e);
    let (g, det) = physical_gradients(&x, ref_grads);
    if det <= 0.0 {
        return Err(Error::Jacobian { element: e, det });
    }
    let ue = gather(u, &mesh.element_dofs(e));
    Ok((element_strain(&strain_basis(&g), &ue), det))
}

/// 8×8 element matrix with Ψ frozen at `prev_u` (Ψ ≡ 1 when `None`),
/// plus the number of clamped quadrature points.
pub fn element_stiffness(
    mesh: &QuadMesh,
    elem: usize,
    m: &MaterialModel,
    prev_u: Option<&[f64]>,
) -> Result<([[f64; 8]; 8], usize)> {
    let x = mesh.element_coords(elem);
    let dofs = mesh.element_dofs(elem);
    let prev = prev_u.map(|u| gather(u, &dofs));
    let q = &*GAUSS_2X2;
    let mut k = [[0.0; 8]; 8];
    let mut clamps = 0;
    for p in 0..q.len() {
        let (g, det) = physical_gradients(&x, &q.ref_grads[p]);
        if det <= 0.0 {
            return Err(Error::Jacobian { element: elem, det });
        }
        let basis = strain_basis(&g);
        let psi = match &prev {
            Some(ue) if !m.is_linear() => {
                let (psi, clamped) = m.psi(m.energy_seminorm(&element_strain(&basis, ue)));
                clamps += clamped as usize;
                psi
            }
            _ => 1.0,
        };
        let scale = q.weights[p] * det * psi;
        let stress: [SymTensor2; 8] = basis.map(|b| m.stiffness_apply(&b));
        for a in 0..8 {
            for b in a..8 {
                k[a][b] += scale * contract(&stress[a], &basis[b]);
            }
        }
    }
    for a in 0..8 {
        for b in 0..a {
            k[a][b] = k[b][a];
        }
    }
    Ok((k, clamps))
}

/// A boundary value problem on a mesh: material, loads and Dirichlet data.
#[derive(Clone)]
pub struct Problem<'a> {
    pub mesh: &'a QuadMesh,
    pub material: MaterialModel,
    pub load: Option<LoadProfile>,
    pub body_force: Option<BodyForce>,
    pub constraints: Vec<(usize, f64)>,
    pattern: Arc<DofPattern>,
}

impl<'a> Problem<'a> {
    pub fn new(
        mesh: &'a QuadMesh,
        material: MaterialModel,
        load: Option<LoadProfile>,
        body_force: Option<BodyForce>,
        mut constraints: Vec<(usize, f64)>,
    ) -> Self {
        constraints.sort_by_key(|&(d, _)| d);
        constraints.dedup_by_key(|&mut (d, _)| d);
        Problem {
            mesh,
            material,
            load,
            body_force,
            constraints,
            pattern: Arc::new(DofPattern::new(mesh)),
        }
    }

    /// The cracked-plate half model: traction on Γ3, `u_x = 0` on Γ4,
    /// `u_y = 0` on Γ2, no body force.
    pub fn benchmark(mesh: &'a QuadMesh, material: MaterialModel, load: LoadProfile) -> Self {
        Self::new(mesh, material, Some(load), None, mesh.dirichlet_dofs())
    }

    /// Same mesh, loads and constraints with another material.
    pub fn with_material(&self, material: MaterialModel) -> Self {
        Problem { material, ..self.clone() }
    }

    pub fn num_dofs(&self) -> usize {
        self.mesh.num_dofs()
    }

    pub fn constrained_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_dofs()];
        for &(d, _) in &self.constraints {
            mask[d] = true;
        }
        mask
    }

    /// `L(φ_i)` for every dof, before constraint elimination.
    pub fn load_vector(&self) -> Vec<f64> {
        let mesh = self.mesh;
        let mut f = vec![0.0; self.num_dofs()];
        if let Some(load) = &self.load {
            let (pts, wts) = gauss_legendre(2);
            for edge in mesh.edges_with_tag(BoundaryTag::Top) {
                let [a, b] = mesh.edge_nodes(edge);
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                let half = 0.5 * mesh.edge_length(edge);
                for (t, w) in pts.iter().zip(&wts) {
                    let (na, nb) = (0.5 * (1.0 - t), 0.5 * (1.0 + t));
                    let xq = na * pa[0] + nb * pb[0];
                    let g = load.traction(xq, mesh.width);
                    f[2 * a + 1] += w * half * na * g;
                    f[2 * b + 1] += w * half * nb * g;
                }
            }
        }
        if let Some(bf) = &self.body_force {
            let q = &*GAUSS_2X2;
            for e in 0..mesh.elements.len() {
                let x = mesh.element_coords(e);
                let dofs = mesh.element_dofs(e);
                for p in 0..q.len() {
                    let (_, det) = physical_gradients(&x, &q.ref_grads[p]);
                    let fx = bf(map_point(&x, &q.shape[p]));
                    for a in 0..4 {
                        let s = q.weights[p] * det * q.shape[p][a];
                        f[dofs[2 * a]] += s * fx[0];
                        f[dofs[2 * a + 1]] += s * fx[1];
                    }
                }
            }
        }
        f
    }

    /// Linear system of one Picard step, constraints eliminated symmetrically.
    pub fn assemble(&self, prev_u: Option<&[f64]>) -> Result<SparseSystem> {
        let mesh = self.mesh;
        let m = &self.material;
        let locals: Vec<([[f64; 8]; 8], usize)> = (0..mesh.elements.len())
            .into_par_iter()
            .map(|e| element_stiffness(mesh, e, m, prev_u))
            .collect::<Result<_>>()?;

        let mut matrix = self.pattern.template.clone();
        let mut clamp_events = 0;
        for ((ke, c), slots) in locals.iter().zip(&self.pattern.slots) {
            clamp_events += c;
            for a in 0..8 {
                for b in 0..8 {
                    matrix.values[slots[8 * a + b]] += ke[a][b];
                }
            }
        }
        let mut rhs = self.load_vector();
        self.apply_constraints(&mut matrix, &mut rhs);
        Ok(SparseSystem {
            matrix,
            rhs,
            constraints: self.constraints.clone(),
            clamp_events,
        })
    }

    fn apply_constraints(&self, a: &mut CsrMatrix, b: &mut [f64]) {
        let n = a.n;
        let mut value = vec![None; n];
        for &(d, g) in &self.constraints {
            value[d] = Some(g);
        }
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if value[i].is_some() {
                    a.values[k] = if i == j { 1.0 } else { 0.0 };
                } else if let Some(g) = value[j] {
                    b[i] -= a.values[k] * g;
                    a.values[k] = 0.0;
                }
            }
        }
        for &(d, g) in &self.constraints {
            b[d] = g;
        }
    }

    /// Internal force `a(u; φ_i)` with the full nonlinear Ψ(u), and clamp count.
    pub fn internal_force(&self, u: &[f64]) -> Result<(Vec<f64>, usize)> {
        let mesh = self.mesh;
        let m = &self.material;
        let q = &*GAUSS_2X2;
        let locals: Vec<([f64; 8], usize)> = (0..mesh.elements.len())
            .into_par_iter()
            .map(|e| {
                let x = mesh.element_coords(e);
                let ue = gather(u, &mesh.element_dofs(e));
                let mut fe = [0.0; 8];
                let mut clamps = 0;
                for p in 0..q.len() {
                    let (g, det) = physical_gradients(&x, &q.ref_grads[p]);
                    if det <= 0.0 {
                        return Err(Error::Jacobian { element: e, det });
                    }
                    let basis = strain_basis(&g);
                    let (t, clamped) = m.stress_from_strain(&element_strain(&basis, &ue));
                    clamps += clamped as usize;
                    for k in 0..8 {
                        fe[k] += q.weights[p] * det * contract(&t, &basis[k]);
                    }
                }
                Ok((fe, clamps))
            })
            .collect::<Result<_>>()?;
        let mut f = vec![0.0; self.num_dofs()];
        let mut clamps = 0;
        for (e, (fe, c)) in locals.iter().enumerate() {
            clamps += c;
            for (k, d) in mesh.element_dofs(e).iter().enumerate() {
                f[*d] += fe[k];
            }
        }
        Ok((f, clamps))
    }

    /// `a(u; w)`.
    pub fn semilinear_form(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        let (f, _) = self.internal_force(u)?;
        Ok(f.iter().zip(w).map(|(a, b)| a * b).sum())
    }

    /// `r_i = a(u; φ_i) − L(φ_i)`, zero at constrained dofs; returns
    /// `(r, ‖r‖₂, clamp events)`.
    pub fn residual(&self, u: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
        let (mut r, clamps) = self.internal_force(u)?;
        for (ri, li) in r.iter_mut().zip(self.load_vector()) {
            *ri -= li;
        }
        for &(d, _) in &self.constraints {
            r[d] = 0.0;
        }
        let norm = norm2(&r);
        Ok((r, norm, clamps))
    }
}

/// Benchmark-BC system for the cracked plate.
pub fn assemble_system(
    mesh: &QuadMesh,
    m: &MaterialModel,
    load: LoadProfile,
    prev_u: Option<&[f64]>,
) -> Result<SparseSystem> {
    Problem::benchmark(mesh, *m, load).assemble(prev_u)
}

/// Benchmark-BC residual, see [`Problem::residual`].
pub fn nonlinear_residual(
    mesh: &QuadMesh,
    m: &MaterialModel,
    load: LoadProfile,
    u: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let (r, norm, _) = Problem::benchmark(mesh, *m, load).residual(u)?;
    Ok((r, norm))
}

/// `(‖u‖²_L2, |u|²_H1)` of a discrete field, integrated with `quad`.
pub fn l2_h1_squared(mesh: &QuadMesh, u: &[f64], quad: &ElementQuadrature) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.elements.len() {
        let x = mesh.element_coords(e);
        let ue = gather(u, &mesh.element_dofs(e));
        for p in 0..quad.len() {
            let (g, det) = physical_gradients(&x, &quad.ref_grads[p]);
            let w = quad.weights[p] * det;
            let mut val = [0.0; 2];
            let mut grad = [[0.0; 2]; 2];
            for a in 0..4 {
                for c in 0..2 {
                    val[c] += quad.shape[p][a] * ue[2 * a + c];
                    grad[c][0] += g[a][0] * ue[2 * a + c];
                    grad[c][1] += g[a][1] * ue[2 * a + c];
                }
            }
            l2 += w * (val[0] * val[0] + val[1] * val[1]);
            h1 += w * grad.iter().flatten().map(|v| v * v).sum::<f64>();
        }
    }
    (l2, h1)
}

/// Full H1 norm `sqrt(‖u‖²_L2 + |u|²_H1)` with the 2×2 rule.
pub fn h1_norm(mesh: &QuadMesh, u: &[f64]) -> f64 {
    let (l2, h1) = l2_h1_squared(mesh, u, &GAUSS_2X2);
    (l2 + h1).sqrt()
}
