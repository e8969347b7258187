//! Linear solvers for the symmetric positive definite Picard systems.

use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Sparse Cholesky factorization.
    Direct,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preconditioner {
    None,
    Jacobi,
    IncompleteCholesky,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" | "cholesky" => Ok(Method::Direct),
            "cg" | "conjugate_gradient" | "conjugategradient" => Ok(Method::ConjugateGradient),
            other => Err(format!("unknown solver method '{other}'")),
        }
    }
}

impl std::str::FromStr for Preconditioner {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Preconditioner::None),
            "jacobi" => Ok(Preconditioner::Jacobi),
            "ic" | "ic0" | "incomplete_cholesky" | "incompletecholesky" => Ok(Preconditioner::IncompleteCholesky),
            other => Err(format!("unknown preconditioner '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub rel_tol: f64,
    /// `None` means `10 · dofs`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::ConjugateGradient,
            rel_tol: 1e-12,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        SolverConfig { method: Method::Direct, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("solver.rel_tol must be in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Config("solver.max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// CG iterations (0 for the direct method).
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖` at exit.
    pub relative_residual: f64,
}

pub fn solve(sys: &SparseSystem, cfg: &SolverConfig) -> Result<Vec<f64>> {
    solve_detailed(sys, cfg, None).map(|r| r.x)
}

/// Solve with an optional CG starting vector.
pub fn solve_detailed(sys: &SparseSystem, cfg: &SolverConfig, x0: Option<&[f64]>) -> Result<SolveReport> {
    cfg.validate()?;
    let mut report = match cfg.method {
        Method::Direct => cholesky_solve(&sys.matrix, &sys.rhs)?,
        Method::ConjugateGradient => {
            let max_iter = cfg.max_iter.unwrap_or(10 * sys.dim().max(1));
            conjugate_gradient(&sys.matrix, &sys.rhs, x0, cfg.rel_tol, max_iter, cfg.preconditioner)?
        }
    };
    for &(d, g) in &sys.constraints {
        report.x[d] = g;
    }
    Ok(report)
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| q - p).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

fn cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Result<SolveReport> {
    // A is symmetric, so its CSR arrays are also its CSC arrays.
    let csc = CscMatrix::try_from_csc_data(a.n, a.n, a.row_ptr.clone(), a.col_idx.clone(), a.values.clone())
        .map_err(|e| Error::Breakdown(format!("invalid sparse matrix: {e}")))?;
    let chol = CscCholesky::factor(&csc)
        .map_err(|e| Error::Breakdown(format!("cholesky factorization failed, matrix not SPD: {e:?}")))?;
    let x = chol.solve(&DVector::from_column_slice(b));
    let x: Vec<f64> = x.column(0).iter().copied().collect();
    let relative_residual = relative_residual(a, &x, b);
    Ok(SolveReport { x, iterations: 0, relative_residual })
}

/// IC(0) factor stored as lower-triangular rows.
struct IncompleteCholesky {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl IncompleteCholesky {
    fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        for i in 0..n {
            let (ri, re) = (row_ptr[i], row_ptr[i + 1]);
            if re == ri || col_idx[re - 1] != i {
                return Err(Error::Breakdown(format!("IC(0): missing diagonal in row {i}")));
            }
            for k in ri..re {
                let j = col_idx[k];
                // s = Σ_{m<j} L_im L_jm over the shared pattern
                let (rj, rje) = (row_ptr[j], row_ptr[j + 1]);
                let (mut p, mut q) = (ri, rj);
                let mut s = 0.0;
                while p < k && q < rje - 1 {
                    match col_idx[p].cmp(&col_idx[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s += values[p] * values[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                if j < i {
                    values[k] = (values[k] - s) / values[rje - 1];
                } else {
                    let d = values[k] - s;
                    if d <= 0.0 {
                        return Err(Error::Breakdown(format!("IC(0): non-positive pivot {d:e} in row {i}")));
                    }
                    values[k] = d.sqrt();
                }
            }
        }
        Ok(IncompleteCholesky { row_ptr, col_idx, values })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        for i in 0..n {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = r[i];
            for k in s..e - 1 {
                acc -= self.values[k] * z[self.col_idx[k]];
            }
            z[i] = acc / self.values[e - 1];
        }
        for i in (0..n).rev() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            z[i] /= self.values[e - 1];
            let zi = z[i];
            for k in s..e - 1 {
                z[self.col_idx[k]] -= self.values[k] * zi;
            }
        }
    }
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ic(IncompleteCholesky),
}

impl Precond {
    fn build(a: &CsrMatrix, kind: Preconditioner) -> Result<Self> {
        Ok(match kind {
            Preconditioner::None => Precond::Identity,
            Preconditioner::Jacobi => {
                let d = a.diagonal();
                if let Some(i) = d.iter().position(|&v| v <= 0.0) {
                    return Err(Error::Breakdown(format!("non-positive diagonal {:e} at row {i}", d[i])));
                }
                Precond::Jacobi(d.into_iter().map(|v| 1.0 / v).collect())
            }
            Preconditioner::IncompleteCholesky => Precond::Ic(IncompleteCholesky::factor(a)?),
        })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Identity => z.copy_from_slice(r),
            Precond::Jacobi(inv) => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv) {
                    *zi = ri * di;
                }
            }
            Precond::Ic(ic) => ic.apply(r, z),
        }
    }
}

/// Preconditioned conjugate gradients, stopping on `‖r‖ ≤ rel_tol · ‖b‖`.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
    preconditioner: Preconditioner,
) -> Result<SolveReport> {
    let n = a.n;
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok(SolveReport { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let pc = Precond::build(a, preconditioner)?;
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let target = rel_tol * nb;
    let mut rnorm = norm2(&r);
    let mut it = 0;
    while rnorm > target {
        if it >= max_iter {
            return Err(Error::NotConverged { iterations: it, residual: rnorm / nb });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!(
                "non-positive curvature pᵀAp = {pap:e} at iteration {it}: matrix is not SPD"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = norm2(&r);
        it += 1;
    }
    let relative_residual = relative_residual(a, &x, b);
    Ok(SolveReport { x, iterations: it, relative_residual })
}
