//! Bilinear shape functions, isoparametric map and Gauss rules.

use std::sync::LazyLock;

/// Reference node coordinates of the Q1 element, counterclockwise.
pub const REF_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

pub fn shape_values(xi: [f64; 2]) -> [f64; 4] {
    let mut n = [0.0; 4];
    for (a, r) in REF_NODES.iter().enumerate() {
        n[a] = 0.25 * (1.0 + r[0] * xi[0]) * (1.0 + r[1] * xi[1]);
    }
    n
}

/// `∂N_a/∂ξ`, `∂N_a/∂η`.
pub fn shape_ref_gradients(xi: [f64; 2]) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    for (a, r) in REF_NODES.iter().enumerate() {
        g[a][0] = 0.25 * r[0] * (1.0 + r[1] * xi[1]);
        g[a][1] = 0.25 * r[1] * (1.0 + r[0] * xi[0]);
    }
    g
}

/// Gauss–Legendre points and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let p = 1.0 / 3f64.sqrt();
            (vec![-p, p], vec![1.0, 1.0])
        }
        3 => {
            let p = (3.0f64 / 5.0).sqrt();
            (vec![-p, 0.0, p], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = 1.0 / 3.0 * (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt();
            let b = 1.0 / 3.0 * (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt();
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => panic!("gauss_legendre: unsupported order {n}"),
    }
}

/// Tensor-product rule with shape data tabulated at each point.
#[derive(Debug, Clone)]
pub struct ElementQuadrature {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub shape: Vec<[f64; 4]>,
    pub ref_grads: Vec<[[f64; 2]; 4]>,
}

impl ElementQuadrature {
    pub fn tensor(n: usize) -> Self {
        let (p, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([p[i], p[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        let shape = points.iter().map(|&x| shape_values(x)).collect();
        let ref_grads = points.iter().map(|&x| shape_ref_gradients(x)).collect();
        ElementQuadrature { points, weights, shape, ref_grads }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// 2×2 Gauss rule used for all volume integrals of the solver.
pub static GAUSS_2X2: LazyLock<ElementQuadrature> = LazyLock::new(|| ElementQuadrature::tensor(2));

#[derive(Debug, Clone, Copy)]
pub struct Jacobian {
    /// `j[i][k] = ∂x_i/∂ξ_k`.
    pub j: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
}

fn jacobian_from(x: &[[f64; 2]; 4], g: &[[f64; 2]; 4]) -> Jacobian {
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for i in 0..2 {
            for k in 0..2 {
                j[i][k] += x[a][i] * g[a][k];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    Jacobian { j, det, inv }
}

pub fn jacobian(x: &[[f64; 2]; 4], xi: [f64; 2]) -> Jacobian {
    jacobian_from(x, &shape_ref_gradients(xi))
}

/// Physical shape gradients `∂N_a/∂x_i` given reference gradients.
pub fn physical_gradients(x: &[[f64; 2]; 4], ref_grads: &[[f64; 2]; 4]) -> ([[f64; 2]; 4], f64) {
    let jac = jacobian_from(x, ref_grads);
    let mut g = [[0.0; 2]; 4];
    for a in 0..4 {
        // ∂N/∂x_i = Σ_k ∂N/∂ξ_k · ∂ξ_k/∂x_i
        for i in 0..2 {
            g[a][i] = ref_grads[a][0] * jac.inv[0][i] + ref_grads[a][1] * jac.inv[1][i];
        }
    }
    (g, jac.det)
}

/// Physical coordinates of a reference point.
pub fn map_point(x: &[[f64; 2]; 4], shape: &[f64; 4]) -> [f64; 2] {
    let mut p = [0.0; 2];
    for a in 0..4 {
        p[0] += shape[a] * x[a][0];
        p[1] += shape[a] * x[a][1];
    }
    p
}
