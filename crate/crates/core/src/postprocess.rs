//! Field recovery and line sampling on a solved displacement.

use std::fmt;

use rayon::prelude::*;

use crate::assembly::{strain_at, LoadKind};
use crate::constitutive::{FiberAxis, MaterialModel};
use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::quadrature::{map_point, GAUSS_2X2};
use crate::tensor::SymTensor2;

/// Values at one 2×2 Gauss point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPointValue {
    pub element: usize,
    pub x: [f64; 2],
    pub weight: f64,
    pub strain: SymTensor2,
    pub stress: SymTensor2,
    pub energy: f64,
    pub clamped: bool,
}

/// Nodal stress, strain and energy density.
#[derive(Debug, Clone)]
pub struct RecoveredFields {
    pub strain: Vec<SymTensor2>,
    pub stress: Vec<SymTensor2>,
    pub energy: Vec<f64>,
    /// Clamped quadrature points in the elements around each node.
    pub clamp_events: Vec<usize>,
    pub quad_points: Vec<QuadPointValue>,
}

impl RecoveredFields {
    pub fn total_clamp_events(&self) -> usize {
        self.quad_points.iter().filter(|q| q.clamped).count()
    }
}

/// Quadrature-point fields of every element, in element order.
pub fn quadrature_fields(mesh: &QuadMesh, m: &MaterialModel, u: &[f64]) -> Result<Vec<QuadPointValue>> {
    if u.len() != mesh.num_dofs() {
        return Err(Error::Mesh(format!("dof vector has length {}, mesh has {} dofs", u.len(), mesh.num_dofs())));
    }
    let quad = &*GAUSS_2X2;
    let per_element: Vec<Vec<QuadPointValue>> = (0..mesh.elements.len())
        .into_par_iter()
        .map(|e| {
            let coords = mesh.element_coords(e);
            (0..quad.len())
                .map(|p| {
                    let (strain, det) = strain_at(mesh, e, &quad.ref_grads[p], u)?;
                    let (stress, clamped) = m.stress_from_strain(&strain);
                    Ok(QuadPointValue {
                        element: e,
                        x: map_point(&coords, &quad.shape[p]),
                        weight: quad.weights[p] * det,
                        strain,
                        stress,
                        energy: crate::tensor::contract(&stress, &strain),
                        clamped,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_element.into_iter().flatten().collect())
}

/// Gauss-point fields averaged to nodes, weighted by the quadrature volume
/// of each adjacent element.
pub fn recover_fields(mesh: &QuadMesh, m: &MaterialModel, u: &[f64]) -> Result<RecoveredFields> {
    let quad_points = quadrature_fields(mesh, m, u)?;
    let nn = mesh.num_nodes();
    let mut strain = vec![SymTensor2::ZERO; nn];
    let mut stress = vec![SymTensor2::ZERO; nn];
    let mut energy = vec![0.0; nn];
    let mut volume = vec![0.0; nn];
    let mut clamp_events = vec![0usize; nn];
    for q in &quad_points {
        for &n in &mesh.elements[q.element] {
            strain[n] = strain[n] + q.weight * q.strain;
            stress[n] = stress[n] + q.weight * q.stress;
            energy[n] += q.weight * q.energy;
            volume[n] += q.weight;
            clamp_events[n] += q.clamped as usize;
        }
    }
    for n in 0..nn {
        let inv = 1.0 / volume[n];
        strain[n] = inv * strain[n];
        stress[n] = inv * stress[n];
        energy[n] *= inv;
    }
    Ok(RecoveredFields { strain, stress, energy, clamp_events, quad_points })
}

/// Parameters identifying a run, written as a `#` header line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub case: String,
    pub alpha: f64,
    pub beta: f64,
    pub sigma_t: f64,
    pub fiber: FiberAxis,
    pub load: LoadKind,
    pub nx: usize,
    pub ny: usize,
}

impl fmt::Display for RunMetadata {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "case = {}, alpha = {}, beta = {}, sigma_T = {}, fiber = {}, load = {}, nx = {}, ny = {}",
            self.case,
            self.alpha,
            self.beta,
            self.sigma_t,
            self.fiber.name(),
            self.load.name(),
            self.nx,
            self.ny
        )
    }
}

/// Crack-line profile ahead of the tip and opening along the crack faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldReport {
    pub sample_x: Vec<f64>,
    pub sigma_yy: Vec<f64>,
    pub eps_yy: Vec<f64>,
    pub energy: Vec<f64>,
    pub crack_x: Vec<f64>,
    pub opening_uy: Vec<f64>,
    pub metadata: RunMetadata,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

impl FieldReport {
    pub fn build(mesh: &QuadMesh, fields: &RecoveredFields, u: &[f64], metadata: RunMetadata) -> Self {
        let p = crack_line_profile(mesh, fields);
        let (crack_x, opening_uy) = crack_opening_profile(mesh, u).into_iter().unzip();
        FieldReport {
            sample_x: p.x,
            sigma_yy: p.sigma_yy,
            eps_yy: p.eps_yy,
            energy: p.energy,
            crack_x,
            opening_uy,
            metadata,
        }
    }

    pub fn peak_sigma_yy(&self) -> f64 {
        max_of(&self.sigma_yy)
    }

    pub fn peak_eps_yy(&self) -> f64 {
        max_of(&self.eps_yy)
    }

    pub fn peak_energy(&self) -> f64 {
        max_of(&self.energy)
    }
}

/// Nodal samples along `y = 0` for `x ≥ crack_length`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineProfile {
    pub x: Vec<f64>,
    pub sigma_yy: Vec<f64>,
    pub eps_yy: Vec<f64>,
    pub energy: Vec<f64>,
}

pub fn crack_line_profile(mesh: &QuadMesh, fields: &RecoveredFields) -> LineProfile {
    let mut out = LineProfile::default();
    for n in mesh.bottom_nodes() {
        let x = mesh.nodes[n][0];
        if x >= mesh.crack_length {
            out.x.push(x);
            out.sigma_yy.push(fields.stress[n].yy);
            out.eps_yy.push(fields.strain[n].yy);
            out.energy.push(fields.energy[n]);
        }
    }
    out
}

/// `(x, u_y)` on the crack face from the mouth (x = 0) to the tip.
pub fn crack_opening_profile(mesh: &QuadMesh, u: &[f64]) -> Vec<(f64, f64)> {
    if mesh.crack_length == 0.0 {
        return Vec::new();
    }
    mesh.bottom_nodes()
        .into_iter()
        .filter(|&n| mesh.nodes[n][0] <= mesh.crack_length)
        .map(|n| (mesh.nodes[n][0], u[2 * n + 1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::LoadProfile;
    use crate::mesh::build_plate_mesh;
    use crate::picard::{run_picard, PicardConfig};
    use crate::solver::SolverConfig;
    use crate::tensor::frob_norm;

    #[test]
    fn zero_displacement_gives_zero_fields() {
        let mesh = build_plate_mesh(2.0, 1.0, 1.0, 6, 3, 2.0).unwrap();
        let f = recover_fields(&mesh, &MaterialModel::default(), &vec![0.0; mesh.num_dofs()]).unwrap();
        assert!(f.stress.iter().chain(&f.strain).all(|t| *t == SymTensor2::ZERO));
        assert!(f.energy.iter().all(|&e| e == 0.0));
        assert_eq!(f.total_clamp_events(), 0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let mesh = build_plate_mesh(2.0, 1.0, 1.0, 4, 2, 1.0).unwrap();
        assert!(recover_fields(&mesh, &MaterialModel::default(), &[0.0; 3]).is_err());
    }

    #[test]
    fn linear_strain_field_is_recovered_exactly() {
        // u = (0.01 x + 0.02 y, 0.03 y): constant strain on any mesh
        let mesh = build_plate_mesh(2.0, 1.0, 1.0, 8, 4, 3.0).unwrap();
        let mut u = vec![0.0; mesh.num_dofs()];
        for (n, p) in mesh.nodes.iter().enumerate() {
            u[2 * n] = 0.01 * p[0] + 0.02 * p[1];
            u[2 * n + 1] = 0.03 * p[1];
        }
        let m = MaterialModel::default().linearized();
        let f = recover_fields(&mesh, &m, &u).unwrap();
        let eps = SymTensor2::new(0.01, 0.03, 0.01);
        let sig = m.stiffness_apply(&eps);
        for n in 0..mesh.num_nodes() {
            assert!(frob_norm(&(f.strain[n] - eps)) < 1e-13);
            assert!(frob_norm(&(f.stress[n] - sig)) < 1e-13);
        }
    }

    #[test]
    fn profiles_start_at_tip_and_end_at_tip() {
        let mesh = build_plate_mesh(2.0, 1.0, 1.0, 16, 8, 3.0).unwrap();
        let m = MaterialModel::default();
        let load = LoadProfile::new(LoadKind::Slope, 0.1);
        let st = run_picard(&mesh, &m, load, &SolverConfig::default(), &PicardConfig::default()).unwrap();
        let f = recover_fields(&mesh, &m, &st.u).unwrap();
        let meta = RunMetadata {
            case: "test".into(),
            alpha: 1.0,
            beta: 1.0,
            sigma_t: 0.1,
            fiber: FiberAxis::X,
            load: LoadKind::Slope,
            nx: 16,
            ny: 8,
        };
        let r = FieldReport::build(&mesh, &f, &st.u, meta);
        assert_eq!(r.sample_x[0], 1.0);
        assert!(r.sample_x.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*r.sample_x.last().unwrap(), 2.0);
        assert_eq!(r.crack_x[0], 0.0);
        assert_eq!(*r.crack_x.last().unwrap(), 1.0);
        assert_eq!(*r.opening_uy.last().unwrap(), 0.0);
        assert!(r.opening_uy.iter().all(|&v| v >= -1e-12));
        assert!(r.energy.iter().all(|&v| v >= 0.0));
        assert_eq!(r.peak_sigma_yy(), r.sigma_yy[0]);
        assert!(r.metadata.to_string().starts_with("case = test, alpha = 1, beta = 1, sigma_T = 0.1"));
    }

    #[test]
    fn crack_free_plate_has_no_opening_profile() {
        let mesh = build_plate_mesh(1.0, 1.0, 0.0, 4, 4, 1.0).unwrap();
        assert!(crack_opening_profile(&mesh, &vec![0.0; mesh.num_dofs()]).is_empty());
    }
}
