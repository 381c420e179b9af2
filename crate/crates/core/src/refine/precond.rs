use glam::DVec3;
use rayon::prelude::*;

use crate::mesh::MeshAdjacency;

const CG_TOLERANCE: f64 = 1e-10;
const CG_MAX_ITERATIONS: usize = 500;

/// The operator `I + lambda * L` with `L` the combinatorial graph Laplacian
/// `(L x)_i = deg(i) x_i - sum_{j ~ i} x_j`. Symmetric positive definite for
/// `lambda >= 0`.
#[derive(Debug, Clone)]
pub struct SmoothingOperator {
    lambda: f64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl SmoothingOperator {
    pub fn new(adjacency: &MeshAdjacency, lambda: f64) -> Self {
        let mut offsets = Vec::with_capacity(adjacency.neighbors.len() + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        for n in &adjacency.neighbors {
            cols.extend_from_slice(n);
            offsets.push(cols.len());
        }
        Self { lambda, offsets, cols }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diagonal(&self, i: usize) -> f64 {
        1.0 + self.lambda * (self.offsets[i + 1] - self.offsets[i]) as f64
    }

    pub fn apply(&self, x: &[DVec3]) -> Vec<DVec3> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let nb: DVec3 = self.cols[self.offsets[i]..self.offsets[i + 1]]
                    .iter()
                    .map(|&j| x[j as usize])
                    .sum();
                self.diagonal(i) * x[i] - self.lambda * nb
            })
            .collect()
    }

    /// Solves `(I + lambda L) x = b` by Jacobi-preconditioned conjugate
    /// gradients, independently per coordinate, starting from `guess`.
    pub fn solve(&self, b: &[DVec3], guess: &[DVec3]) -> Vec<DVec3> {
        if self.lambda == 0.0 {
            return b.to_vec();
        }
        let n = self.len();
        let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / self.diagonal(i)).collect();
        let dot = |a: &[DVec3], b: &[DVec3]| -> DVec3 { a.iter().zip(b).map(|(x, y)| *x * *y).sum() };
        let mut x = guess.to_vec();
        let ax = self.apply(&x);
        let mut r: Vec<DVec3> = b.iter().zip(&ax).map(|(b, a)| *b - *a).collect();
        let mut z: Vec<DVec3> = r.iter().zip(&inv_diag).map(|(r, d)| *r * *d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let threshold = CG_TOLERANCE * CG_TOLERANCE * dot(b, b).max(DVec3::splat(f64::MIN_POSITIVE));
        for _ in 0..CG_MAX_ITERATIONS {
            let rr = dot(&r, &r);
            if rr.cmple(threshold).all() {
                break;
            }
            let ap = self.apply(&p);
            let pap = dot(&p, &ap);
            // coordinates that already converged keep a zero step
            let alpha = DVec3::select(pap.cmpgt(DVec3::ZERO), rz / pap, DVec3::ZERO);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = DVec3::select(rz.cmpgt(DVec3::ZERO), rz_next / rz, DVec3::ZERO);
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        x
    }
}
