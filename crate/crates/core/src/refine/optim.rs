use glam::DVec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Per-vertex optimizer state. Adam keeps one second-moment scalar per vertex
/// (the squared gradient norm) so steps do not depend on the axis frame, and
/// one step counter per vertex so vertices inserted by remeshing start with
/// properly bias-corrected steps.
#[derive(Debug, Clone)]
pub struct VertexOptimizer {
    kind: OptimizerKind,
    m: Vec<DVec3>,
    v: Vec<f64>,
    t: Vec<u32>,
}

impl VertexOptimizer {
    pub fn new(kind: OptimizerKind, vertex_count: usize) -> Self {
        Self {
            kind,
            m: vec![DVec3::ZERO; vertex_count],
            v: vec![0.0; vertex_count],
            t: vec![0; vertex_count],
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn step(&mut self, positions: &mut [DVec3], gradient: &[DVec3], lr: f64) {
        debug_assert_eq!(positions.len(), self.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in positions.iter_mut().zip(gradient) {
                    *p -= lr * *g;
                }
            }
            OptimizerKind::Adam => {
                for i in 0..positions.len() {
                    let g = gradient[i];
                    self.t[i] += 1;
                    self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
                    self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g.length_squared();
                    let t = self.t[i] as i32;
                    let m_hat = self.m[i] / (1.0 - BETA1.powi(t));
                    let v_hat = self.v[i] / (1.0 - BETA2.powi(t));
                    positions[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
                }
            }
        }
    }

    /// Carries state over to a remeshed vertex set; vertices without a
    /// predecessor start fresh.
    pub fn remap(&mut self, provenance: &[Option<usize>], new_count: usize) {
        let mut m = vec![DVec3::ZERO; new_count];
        let mut v = vec![0.0; new_count];
        let mut t = vec![0; new_count];
        for (old, new) in provenance.iter().enumerate() {
            if let Some(n) = *new {
                m[n] = self.m[old];
                v[n] = self.v[old];
                t[n] = self.t[old];
            }
        }
        self.m = m;
        self.v = v;
        self.t = t;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let mut opt = VertexOptimizer::new(OptimizerKind::Adam, 1);
        let mut p = [DVec3::ZERO];
        let g = DVec3::new(3.0, -4.0, 0.0);
        opt.step(&mut p, &[g], 0.01);
        // the second moment is shared across coordinates, so the step keeps
        // the gradient's direction
        assert!((p[0] + 0.01 * g / 5.0).length() < 1e-9);
    }

    #[test]
    fn remap_keeps_survivors_and_resets_new_vertices() {
        let mut opt = VertexOptimizer::new(OptimizerKind::Adam, 2);
        let mut p = [DVec3::ZERO; 2];
        opt.step(&mut p, &[DVec3::ONE, DVec3::ONE], 0.1);
        opt.remap(&[None, Some(0)], 2);
        assert_eq!(opt.t, vec![1, 0]);
        assert!(opt.m[0].x > 0.0 && opt.m[1] == DVec3::ZERO);
    }

    #[test]
    fn sgd_follows_negative_gradient() {
        let mut opt = VertexOptimizer::new(OptimizerKind::Sgd, 1);
        let mut p = [DVec3::ONE];
        opt.step(&mut p, &[DVec3::new(1.0, 2.0, 3.0)], 0.5);
        assert_eq!(p[0], DVec3::new(0.5, 0.0, -0.5));
    }
}
