//! Iterative mesh refinement: gradient steps on the normal, silhouette and
//! Laplacian losses, interleaved with remeshing.

mod loss;
mod optim;
mod precond;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::metrics::{chamfer_distance, f_score, DEFAULT_SAMPLES, DEFAULT_TAU};
use crate::oracle::SupervisionSet;
use crate::remesh::{remesh_pass, require_closed_manifold, RemeshParams};

pub use loss::{evaluate, laplacian_loss, mask_loss, normal_loss, Evaluation, LossBreakdown, LossWeights, MASK_THRESHOLD};
pub use optim::{OptimizerKind, VertexOptimizer, BETA1, BETA2, EPSILON};
pub use precond::SmoothingOperator;

/// Target edge length per outer iteration: geometric decay from `start` to
/// `end` over the first `decay_iterations` iterations, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemeshSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_iterations: usize,
    pub split_factor: f64,
    pub collapse_factor: f64,
    pub smoothing_lambda: f64,
}

impl Default for RemeshSchedule {
    fn default() -> Self {
        let p = RemeshParams::default();
        Self {
            start: 0.08,
            end: 0.02,
            decay_iterations: 12,
            split_factor: p.split_factor,
            collapse_factor: p.collapse_factor,
            smoothing_lambda: p.smoothing_lambda,
        }
    }
}

impl RemeshSchedule {
    pub fn target_at(&self, iteration: usize) -> f64 {
        if self.decay_iterations <= 1 {
            return self.end;
        }
        let s = iteration.min(self.decay_iterations - 1) as f64 / (self.decay_iterations - 1) as f64;
        self.start * (self.end / self.start).powf(s)
    }

    pub fn params_at(&self, iteration: usize) -> RemeshParams {
        RemeshParams {
            target_edge_length: self.target_at(iteration),
            split_factor: self.split_factor,
            collapse_factor: self.collapse_factor,
            smoothing_lambda: self.smoothing_lambda,
            ..RemeshParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    pub iterations: usize,
    pub inner_steps: usize,
    pub lambda_mask: f64,
    pub lambda_lap: f64,
    pub step_size: f64,
    pub optimizer: OptimizerKind,
    /// Weight `lambda` of the `(I + lambda L)` reparameterization the
    /// optimizer steps in; 0 steps on raw vertex positions.
    pub smoothing_weight: f64,
    pub remesh: RemeshSchedule,
    /// Seeds the surface sampling of the per-iteration metric snapshots.
    pub seed: u64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            inner_steps: 10,
            lambda_mask: 1.0,
            lambda_lap: 0.5,
            step_size: 0.01,
            optimizer: OptimizerKind::Adam,
            smoothing_weight: 10.0,
            remesh: RemeshSchedule::default(),
            seed: 0,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.lambda_mask >= 0.0 && self.lambda_lap >= 0.0) {
            return bad(format!(
                "loss weights must be non-negative, got lambda_mask={} lambda_lap={}",
                self.lambda_mask, self.lambda_lap
            ));
        }
        if !(self.smoothing_weight >= 0.0 && self.smoothing_weight.is_finite()) {
            return bad(format!("smoothing_weight must be non-negative, got {}", self.smoothing_weight));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return bad(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.remesh.start > 0.0 && self.remesh.end > 0.0) {
            return bad("remesh schedule lengths must be positive".into());
        }
        self.remesh.params_at(0).validate()
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda_mask: self.lambda_mask,
            lambda_lap: self.lambda_lap,
        }
    }
}

/// One outer iteration. Losses are measured on the mesh entering the
/// iteration; sizes and metrics on the mesh leaving it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub loss: LossBreakdown,
    pub vertex_count: usize,
    pub face_count: usize,
    pub chamfer: Option<f64>,
    pub f_score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub mesh: TriangleMesh,
    pub trace: Vec<TraceRow>,
}

/// Optimizes `initial` towards `supervision`. When `reference` is given,
/// every trace row also records Chamfer distance and F-score against it.
pub fn refine(
    initial: &TriangleMesh,
    supervision: &SupervisionSet,
    config: &RefinementConfig,
    reference: Option<&TriangleMesh>,
) -> Result<RefineOutput> {
    config.validate()?;
    supervision.validate()?;
    require_closed_manifold(initial)?;
    let mut mesh = TriangleMesh::new(initial.vertices.clone(), initial.faces.clone());
    let mut opt = VertexOptimizer::new(config.optimizer, mesh.vertex_count());
    let mut trace = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let adj = mesh.adjacency();
        let op = SmoothingOperator::new(&adj, config.smoothing_weight);
        let mut u = op.apply(&mesh.vertices);
        let mut g_u = vec![glam::DVec3::ZERO; u.len()];
        let mut entering = None;
        for _ in 0..config.inner_steps.max(1) {
            let eval = evaluate(&mesh, &adj, supervision, config.weights())?;
            if entering.is_none() {
                entering = Some(eval.loss);
            }
            if config.inner_steps == 0 {
                break;
            }
            g_u = op.solve(&eval.gradient, &g_u);
            opt.step(&mut u, &g_u, config.step_size);
            mesh.vertices = op.solve(&u, &mesh.vertices);
        }
        let out = remesh_pass(&mesh, &config.remesh.params_at(iteration))?;
        opt.remap(&out.provenance, out.mesh.vertex_count());
        mesh = out.mesh;

        let (chamfer, fs) = match reference {
            Some(r) => (
                Some(chamfer_distance(&mesh, r, DEFAULT_SAMPLES, config.seed)?),
                Some(f_score(&mesh, r, DEFAULT_TAU, DEFAULT_SAMPLES, config.seed)?),
            ),
            None => (None, None),
        };
        log::info!(
            "iteration {iteration}: loss {:.6}, {} faces{}",
            entering.as_ref().map_or(f64::NAN, |l| l.l_total),
            mesh.face_count(),
            chamfer.map_or(String::new(), |c| format!(", chamfer {c:.5}"))
        );
        trace.push(TraceRow {
            iteration,
            loss: entering.expect("at least one evaluation per iteration"),
            vertex_count: mesh.vertex_count(),
            face_count: mesh.face_count(),
            chamfer,
            f_score: fs,
        });
    }
    Ok(RefineOutput { mesh, trace })
}

pub const TRACE_HEADER: &str = "iteration,l_normal,l_mask,l_lap,l_total,vertex_count,face_count,chamfer,f_score";

/// CSV with one row per outer iteration; metric cells are empty when no
/// reference was given.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.loss.l_normal,
            r.loss.l_mask,
            r.loss.l_lap,
            r.loss.l_total,
            r.vertex_count,
            r.face_count,
            opt(r.chamfer),
            opt(r.f_score)
        );
    }
    out
}
