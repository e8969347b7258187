//! Symmetric 2×2 tensors and their Voigt view.
//!
//! Shear is stored once and always in tensorial form (`xy` is ε₁₂, not 2ε₁₂).
//! Every contraction therefore carries the factor 2 on the off-diagonal
//! term explicitly.

use std::ops::{Add, Mul, Neg, Sub};

/// Symmetric second-order tensor in two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

/// Voigt vector `(v11, v22, v12)` with tensorial shear.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoigtVec3(pub [f64; 3]);

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };
    pub const IDENTITY: SymTensor2 = SymTensor2 { xx: 1.0, yy: 1.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Full matrix form; exactly symmetric by construction.
    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn to_voigt(&self) -> VoigtVec3 {
        VoigtVec3([self.xx, self.yy, self.xy])
    }

    pub fn from_voigt(v: VoigtVec3) -> Self {
        Self::new(v.0[0], v.0[1], v.0[2])
    }

    /// Q · A · Qᵀ for a 2×2 matrix Q.
    pub fn transform(&self, q: [[f64; 2]; 2]) -> Self {
        let a = self.to_matrix();
        let mut qa = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                qa[i][j] = q[i][0] * a[0][j] + q[i][1] * a[1][j];
            }
        }
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = qa[i][0] * q[j][0] + qa[i][1] * q[j][1];
            }
        }
        Self::new(r[0][0], r[1][1], 0.5 * (r[0][1] + r[1][0]))
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.yy.is_finite() && self.xy.is_finite()
    }
}

/// `A : B = Σ aᵢⱼ bᵢⱼ`.
pub fn contract(a: &SymTensor2, b: &SymTensor2) -> f64 {
    a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy
}

/// Frobenius norm induced by [`contract`].
pub fn frob_norm(a: &SymTensor2) -> f64 {
    contract(a, a).sqrt()
}

/// Symmetric part of a displacement gradient, `grad_u[i][j] = ∂ⱼuᵢ`.
pub fn sym_grad(grad_u: [[f64; 2]; 2]) -> SymTensor2 {
    SymTensor2::new(
        grad_u[0][0],
        grad_u[1][1],
        0.5 * (grad_u[0][1] + grad_u[1][0]),
    )
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, o: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        SymTensor2::new(-self.xx, -self.yy, -self.xy)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, t: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self * t.xx, self * t.yy, self * t.xy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = SymTensor2;
    fn mul(self, s: f64) -> SymTensor2 {
        s * self
    }
}
