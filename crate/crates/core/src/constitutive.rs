//! Transversely isotropic, strain-limiting elastic response.
//!
//! The linear part is `E[ε] = 2με + λ tr(ε) I + γ (ε:M) M` with the structural
//! tensor `M = e⊗e` along the fiber axis. The nonlinear law used by the solver
//! is the strain-to-stress form
//!
//! ```text
//! T(ε) = Ψ(‖E½ε‖) E[ε],   Ψ(s) = (1 − (βs)^α)^(−1/α)
//! ```
//!
//! whose inverse is the bounded stress-to-strain response
//! `F(T) = K[T] / (1 + β^α ‖K½T‖^α)^(1/α)`, `K = E⁻¹`.

use crate::error::{Error, Result};
use crate::tensor::{contract, SymTensor2, VoigtVec3};

/// Ψ is clamped so that `(βs)^α ≤ 1 − PSI_CLAMP_DELTA`.
pub const PSI_CLAMP_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberAxis {
    /// `M = e1⊗e1`, fibers parallel to the crack plane.
    X,
    /// `M = e2⊗e2`, fibers orthogonal to the crack plane.
    Y,
}

impl FiberAxis {
    pub fn name(self) -> &'static str {
        match self {
            FiberAxis::X => "x",
            FiberAxis::Y => "y",
        }
    }

    pub fn structural_tensor(self) -> SymTensor2 {
        match self {
            FiberAxis::X => SymTensor2::new(1.0, 0.0, 0.0),
            FiberAxis::Y => SymTensor2::new(0.0, 1.0, 0.0),
        }
    }
}

impl std::str::FromStr for FiberAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(FiberAxis::X),
            "y" => Ok(FiberAxis::Y),
            other => Err(format!("unknown fiber axis '{other}' (expected x or y)")),
        }
    }
}

/// 3×3 matrix acting on [`VoigtVec3`] (tensorial shear in and out).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoigtMatrix3(pub [[f64; 3]; 3]);

impl VoigtMatrix3 {
    pub fn apply(&self, v: VoigtVec3) -> VoigtVec3 {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (i, row) in m.iter().enumerate() {
            out[i] = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2];
        }
        VoigtVec3(out)
    }

    pub fn is_symmetric(&self) -> bool {
        let m = &self.0;
        m[0][1] == m[1][0] && m[0][2] == m[2][0] && m[1][2] == m[2][1]
    }
}

/// Linear moduli plus the two strain-limiting parameters.
///
/// Validated at construction; immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    mu: f64,
    lambda: f64,
    gamma: f64,
    fiber_axis: FiberAxis,
    alpha: f64,
    beta: f64,
    stiffness: VoigtMatrix3,
    compliance: VoigtMatrix3,
}

impl Default for MaterialModel {
    /// μ = 1, λ = 1, γ = 0.5, fibers along x, α = β = 1.
    fn default() -> Self {
        MaterialModel::new(1.0, 1.0, 0.5, FiberAxis::X, 1.0, 1.0).expect("default material is valid")
    }
}

impl MaterialModel {
    pub fn new(
        mu: f64,
        lambda: f64,
        gamma: f64,
        fiber_axis: FiberAxis,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let finite = [mu, lambda, gamma, alpha, beta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Material("parameters must be finite".into()));
        }
        if mu <= 0.0 {
            return Err(Error::Material(format!("mu must be > 0, got {mu}")));
        }
        if lambda <= 0.0 {
            return Err(Error::Material(format!("lambda must be > 0, got {lambda}")));
        }
        if alpha <= 0.0 {
            return Err(Error::Material(format!("alpha must be > 0, got {alpha}")));
        }
        if beta < 0.0 {
            return Err(Error::Material(format!("beta must be >= 0, got {beta}")));
        }

        // Along-fiber and transverse normal stiffness.
        let c_fiber = 2.0 * mu + lambda + gamma;
        let c_trans = 2.0 * mu + lambda;
        let det = c_fiber * c_trans - lambda * lambda;
        if c_fiber <= 0.0 || det <= 0.0 {
            return Err(Error::Material(format!(
                "elasticity tensor is not positive definite (mu={mu}, lambda={lambda}, gamma={gamma})"
            )));
        }
        let (c11, c22) = match fiber_axis {
            FiberAxis::X => (c_fiber, c_trans),
            FiberAxis::Y => (c_trans, c_fiber),
        };
        let stiffness = VoigtMatrix3([
            [c11, lambda, 0.0],
            [lambda, c22, 0.0],
            [0.0, 0.0, 2.0 * mu],
        ]);
        // Normal block inverts in closed form; shear decouples.
        let compliance = VoigtMatrix3([
            [c22 / det, -lambda / det, 0.0],
            [-lambda / det, c11 / det, 0.0],
            [0.0, 0.0, 0.5 / mu],
        ]);

        Ok(MaterialModel {
            mu,
            lambda,
            gamma,
            fiber_axis,
            alpha,
            beta,
            stiffness,
            compliance,
        })
    }

    /// Isotropic linear-elastic model (γ = 0, β = 0).
    pub fn linear_isotropic(mu: f64, lambda: f64) -> Result<Self> {
        Self::new(mu, lambda, 0.0, FiberAxis::X, 1.0, 0.0)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.mu, self.lambda, self.gamma, self.fiber_axis, self.alpha, beta)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.mu, self.lambda, self.gamma, self.fiber_axis, alpha, self.beta)
    }

    pub fn with_fiber_axis(&self, fiber_axis: FiberAxis) -> Result<Self> {
        Self::new(self.mu, self.lambda, self.gamma, fiber_axis, self.alpha, self.beta)
    }

    /// Same moduli with β = 0.
    pub fn linearized(&self) -> Self {
        self.with_beta(0.0).expect("beta = 0 is always valid")
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn fiber_axis(&self) -> FiberAxis {
        self.fiber_axis
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn is_linear(&self) -> bool {
        self.beta == 0.0
    }

    pub fn stiffness_matrix(&self) -> &VoigtMatrix3 {
        &self.stiffness
    }

    pub fn compliance_matrix(&self) -> &VoigtMatrix3 {
        &self.compliance
    }

    /// `E[ε]`.
    pub fn stiffness_apply(&self, eps: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_voigt(self.stiffness.apply(eps.to_voigt()))
    }

    /// `K[T]`.
    pub fn compliance_apply(&self, t: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_voigt(self.compliance.apply(t.to_voigt()))
    }

    /// `‖E½ε‖`, computed as `sqrt(ε : E[ε])`.
    pub fn energy_seminorm(&self, eps: &SymTensor2) -> f64 {
        contract(eps, &self.stiffness_apply(eps)).max(0.0).sqrt()
    }

    /// Ψ(s) and whether the argument had to be clamped.
    pub fn psi(&self, s: f64) -> (f64, bool) {
        if self.beta == 0.0 {
            return (1.0, false);
        }
        let limit = 1.0 - PSI_CLAMP_DELTA;
        let x = (self.beta * s).powf(self.alpha);
        let (x, clamped) = if x > limit { (limit, true) } else { (x, false) };
        ((1.0 - x).powf(-1.0 / self.alpha), clamped)
    }

    /// `T(ε) = Ψ(‖E½ε‖) E[ε]`; the flag reports a Ψ clamp.
    pub fn stress_from_strain(&self, eps: &SymTensor2) -> (SymTensor2, bool) {
        let e_eps = self.stiffness_apply(eps);
        let s = contract(eps, &e_eps).max(0.0).sqrt();
        let (psi, clamped) = self.psi(s);
        (psi * e_eps, clamped)
    }

    /// `F(T) = K[T] / (1 + β^α ‖K½T‖^α)^(1/α)`.
    pub fn strain_from_stress(&self, t: &SymTensor2) -> SymTensor2 {
        let k_t = self.compliance_apply(t);
        if self.beta == 0.0 {
            return k_t;
        }
        let w = contract(t, &k_t).max(0.0).sqrt();
        let denom = (1.0 + (self.beta * w).powf(self.alpha)).powf(1.0 / self.alpha);
        (1.0 / denom) * k_t
    }

    /// Strain energy density `T(ε) : ε`.
    pub fn energy_density(&self, eps: &SymTensor2) -> (f64, bool) {
        let (t, clamped) = self.stress_from_strain(eps);
        (contract(&t, eps), clamped)
    }

    /// Largest `‖ε‖` over admissible strains, i.e. the bound 1/β (infinite for β = 0).
    pub fn strain_limit(&self) -> f64 {
        if self.beta == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.beta
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::frob_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iso(mu: f64, lambda: f64, alpha: f64, beta: f64) -> MaterialModel {
        MaterialModel::new(mu, lambda, 0.0, FiberAxis::X, alpha, beta).unwrap()
    }

    fn close(a: &SymTensor2, b: &SymTensor2, tol: f64) -> bool {
        frob_norm(&(*a - *b)) <= tol * (1.0 + frob_norm(b))
    }

    #[test]
    fn stiffness_examples() {
        let m = iso(1.0, 1.0, 1.0, 0.0);
        assert_eq!(m.stiffness_apply(&SymTensor2::IDENTITY), SymTensor2::new(4.0, 4.0, 0.0));
        let m = MaterialModel::new(1.0, 1.0, 1.0, FiberAxis::X, 1.0, 0.0).unwrap();
        assert_eq!(m.stiffness_apply(&SymTensor2::IDENTITY), SymTensor2::new(5.0, 4.0, 0.0));
        let m = MaterialModel::new(1.0, 1.0, 1.0, FiberAxis::Y, 1.0, 0.0).unwrap();
        assert_eq!(m.stiffness_apply(&SymTensor2::IDENTITY), SymTensor2::new(4.0, 5.0, 0.0));
    }

    #[test]
    fn pure_shear_with_zero_lambda() {
        // λ must be positive for a valid model; the shear block does not see it.
        let m = MaterialModel::new(1.0, 1e-300, 0.0, FiberAxis::X, 1.0, 0.0).unwrap();
        let t = m.stiffness_apply(&SymTensor2::new(0.0, 0.0, 0.5));
        assert_eq!(t.xy, 1.0);
        assert!(t.xx.abs() < 1e-299 && t.yy.abs() < 1e-299);
        let e = m.compliance_apply(&SymTensor2::new(0.0, 0.0, 1.0));
        assert_eq!(e.xy, 0.5);
    }

    #[test]
    fn compliance_examples() {
        let m = MaterialModel::new(1.0, 1.0, 1.0, FiberAxis::X, 1.0, 0.0).unwrap();
        assert_eq!(m.compliance_apply(&SymTensor2::ZERO), SymTensor2::ZERO);
        let e = m.compliance_apply(&SymTensor2::new(5.0, 4.0, 0.0));
        assert!(close(&e, &SymTensor2::IDENTITY, 1e-14), "{e:?}");
    }

    #[test]
    fn compliance_inverts_stiffness_randomly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let mu = rng.gen_range(0.1..10.0);
            let lambda = rng.gen_range(0.1..10.0);
            let gamma = rng.gen_range(-mu..10.0);
            let axis = if rng.gen() { FiberAxis::X } else { FiberAxis::Y };
            let m = MaterialModel::new(mu, lambda, gamma, axis, 1.0, 0.0).unwrap();
            let t = SymTensor2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let back = m.stiffness_apply(&m.compliance_apply(&t));
            assert!(close(&back, &t, 1e-12));
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(MaterialModel::new(0.0, 1.0, 0.0, FiberAxis::X, 1.0, 1.0).is_err());
        assert!(MaterialModel::new(1.0, -1.0, 0.0, FiberAxis::X, 1.0, 1.0).is_err());
        assert!(MaterialModel::new(1.0, 1.0, 0.0, FiberAxis::X, 0.0, 1.0).is_err());
        assert!(MaterialModel::new(1.0, 1.0, 0.0, FiberAxis::X, 1.0, -0.1).is_err());
        // 2μ+λ+γ ≤ 0
        assert!(MaterialModel::new(1.0, 1.0, -3.0, FiberAxis::X, 1.0, 1.0).is_err());
        // (2μ+λ+γ)(2μ+λ) − λ² ≤ 0
        assert!(MaterialModel::new(1.0, 10.0, -11.5, FiberAxis::Y, 1.0, 1.0).is_err());
        assert!(MaterialModel::new(f64::NAN, 1.0, 0.0, FiberAxis::X, 1.0, 1.0).is_err());
    }

    #[test]
    fn voigt_matrices_are_symmetric() {
        let m = MaterialModel::default();
        assert!(m.stiffness_matrix().is_symmetric());
        assert!(m.compliance_matrix().is_symmetric());
    }

    #[test]
    fn energy_seminorm_examples() {
        let m = iso(1.0, 1.0, 1.0, 0.0);
        assert_eq!(m.energy_seminorm(&SymTensor2::ZERO), 0.0);
        assert_eq!(m.energy_seminorm(&SymTensor2::IDENTITY), 8f64.sqrt());
    }

    #[test]
    fn psi_examples() {
        let m = iso(1.0, 1.0, 3.0, 0.0);
        assert_eq!(m.psi(7.0), (1.0, false));
        let m = iso(1.0, 1.0, 1.0, 1.0);
        assert!((m.psi(0.5).0 - 2.0).abs() < 1e-15);
        let m = iso(1.0, 1.0, 2.0, 1.0);
        assert!((m.psi(0.6).0 - 1.25).abs() < 1e-15);
    }

    #[test]
    fn psi_clamps_beyond_limit() {
        let m = iso(1.0, 1.0, 1.0, 1.0);
        let (v, clamped) = m.psi(1.5);
        assert!(clamped);
        assert!(v.is_finite());
        assert!((v - 1.0 / PSI_CLAMP_DELTA).abs() / v < 1e-6);
        let (_, clamped) = m.psi(0.999);
        assert!(!clamped);
        // monotone across the clamp boundary
        assert!(m.psi(0.9999).0 <= m.psi(2.0).0);
    }

    #[test]
    fn stress_from_strain_examples() {
        let m = iso(1.0, 1.0, 1.0, 0.1);
        assert_eq!(m.stress_from_strain(&SymTensor2::ZERO).0, SymTensor2::ZERO);
        let (t, clamped) = m.stress_from_strain(&SymTensor2::IDENTITY);
        assert!(!clamped);
        // scalar oracle: Ψ = 1/(1 − 0.1·√8)
        let psi = 1.0 / (1.0 - 0.1 * 8f64.sqrt());
        // values from an independent scalar evaluation
        assert!((psi - 1.394_394_252_689_8).abs() < 1e-12);
        assert!((t.xx - 5.577_577_010_759_2).abs() < 1e-12 && (t.yy - t.xx).abs() < 1e-15 && t.xy == 0.0);
        assert!((t.xx - 4.0 * psi).abs() < 1e-13);
        let (w, _) = m.energy_density(&SymTensor2::IDENTITY);
        assert!((w - 8.0 * psi).abs() < 1e-12);
        assert!((w - 11.155_154_021_518_4).abs() < 1e-11);
    }

    #[test]
    fn linear_limit_matches_stiffness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MaterialModel::default().linearized();
        for _ in 0..100 {
            let e = SymTensor2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            assert_eq!(m.stress_from_strain(&e).0, m.stiffness_apply(&e));
            assert_eq!(m.strain_from_stress(&e), m.compliance_apply(&e));
            let (w, _) = m.energy_density(&e);
            assert!((w - m.energy_seminorm(&e).powi(2)).abs() < 1e-12 * (1.0 + w));
        }
    }

    #[test]
    fn zero_inputs() {
        let m = MaterialModel::default();
        assert_eq!(m.strain_from_stress(&SymTensor2::ZERO), SymTensor2::ZERO);
        assert_eq!(m.energy_density(&SymTensor2::ZERO).0, 0.0);
    }
}
