use glam::DVec3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{MeshAdjacency, TriangleMesh};
use crate::oracle::SupervisionSet;
use crate::render::{backward_parts, rasterize_views, ViewMaps};

/// Pixels at or above this coverage count as inside a silhouette.
pub const MASK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_normal: f64,
    pub l_mask: f64,
    pub l_lap: f64,
    pub l_total: f64,
    pub per_view_normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_mask: f64,
    pub lambda_lap: f64,
}

fn check_views(rendered: &[ViewMaps], target: &SupervisionSet) -> Result<()> {
    if rendered.len() != target.targets.len() {
        return Err(Error::Mismatch(format!(
            "{} rendered views against {} targets",
            rendered.len(),
            target.targets.len()
        )));
    }
    for (k, (r, t)) in rendered.iter().zip(&target.targets).enumerate() {
        if (r.width, r.height) != (t.width, t.height) {
            return Err(Error::Mismatch(format!(
                "view {k}: rendered {}x{} but target {}x{}",
                r.width, r.height, t.width, t.height
            )));
        }
    }
    Ok(())
}

/// Normal loss and its gradient with respect to each rendered normal map.
///
/// Per view: mean of `|N - T|^2` over pixels covered at the center in the
/// render and with both masks at least [`MASK_THRESHOLD`] (target pixels
/// without a normal are skipped). Views are summed. Returns
/// `(total, per_view, d_normal)`.
pub fn normal_loss(rendered: &[ViewMaps], target: &SupervisionSet) -> Result<(f64, Vec<f64>, Vec<Vec<DVec3>>)> {
    check_views(rendered, target)?;
    let mut per_view = Vec::with_capacity(rendered.len());
    let mut grads = Vec::with_capacity(rendered.len());
    for (r, t) in rendered.iter().zip(&target.targets) {
        let overlap: Vec<usize> = (0..r.pixel_count())
            .filter(|&i| {
                r.covered(i) && r.mask[i] >= MASK_THRESHOLD && t.mask[i] >= MASK_THRESHOLD && t.normal[i] != DVec3::ZERO
            })
            .collect();
        let mut g = vec![DVec3::ZERO; r.pixel_count()];
        if overlap.is_empty() {
            per_view.push(0.0);
            grads.push(g);
            continue;
        }
        let inv = 1.0 / overlap.len() as f64;
        let mut sum = 0.0;
        for &i in &overlap {
            let d = r.normal[i] - t.normal[i];
            sum += d.length_squared();
            g[i] = 2.0 * inv * d;
        }
        per_view.push(sum * inv);
        grads.push(g);
    }
    Ok((per_view.iter().sum(), per_view, grads))
}

/// Mask loss: per view, mean of `(a - t)^2` over all pixels; views summed.
pub fn mask_loss(rendered: &[ViewMaps], target: &SupervisionSet) -> Result<(f64, Vec<Vec<f64>>)> {
    check_views(rendered, target)?;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(rendered.len());
    for (r, t) in rendered.iter().zip(&target.targets) {
        let inv = 1.0 / r.pixel_count().max(1) as f64;
        let mut sum = 0.0;
        let g = r
            .mask
            .iter()
            .zip(&t.mask)
            .map(|(a, b)| {
                let d = a - b;
                sum += d * d;
                2.0 * inv * d
            })
            .collect();
        total += sum * inv;
        grads.push(g);
    }
    Ok((total, grads))
}

/// Uniform Laplacian energy: mean over non-isolated vertices of
/// `|v - mean(neighbors)|^2`, with its exact gradient.
pub fn laplacian_loss(mesh: &TriangleMesh, adj: &MeshAdjacency) -> (f64, Vec<DVec3>) {
    let n_v = mesh.vertex_count();
    let mut delta = vec![DVec3::ZERO; n_v];
    let mut active = 0usize;
    for (v, nbrs) in adj.neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        active += 1;
        let c = nbrs.iter().map(|&w| mesh.vertices[w as usize]).sum::<DVec3>() / nbrs.len() as f64;
        delta[v] = mesh.vertices[v] - c;
    }
    let mut grad = vec![DVec3::ZERO; n_v];
    if active == 0 {
        return (0.0, grad);
    }
    let scale = 2.0 / active as f64;
    let mut energy = 0.0;
    for (v, nbrs) in adj.neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        energy += delta[v].length_squared();
        grad[v] += scale * delta[v];
        let share = scale * delta[v] / nbrs.len() as f64;
        for &w in nbrs {
            grad[w as usize] -= share;
        }
    }
    (energy / active as f64, grad)
}

/// Total loss, its per-vertex gradient, and the renders it was computed on.
pub struct Evaluation {
    pub loss: LossBreakdown,
    pub gradient: Vec<DVec3>,
    pub maps: Vec<ViewMaps>,
}

pub fn evaluate(
    mesh: &TriangleMesh,
    adj: &MeshAdjacency,
    supervision: &SupervisionSet,
    weights: LossWeights,
) -> Result<Evaluation> {
    let maps = rasterize_views(mesh, adj, &supervision.views);
    let (l_normal, per_view_normal, d_normal) = normal_loss(&maps, supervision)?;
    let (l_mask, d_mask) = mask_loss(&maps, supervision)?;
    let (l_lap, lap_grad) = laplacian_loss(mesh, adj);

    let per_view: Vec<Vec<DVec3>> = (0..maps.len())
        .into_par_iter()
        .map(|k| {
            let view = &supervision.views[k];
            let parts = backward_parts(mesh, view, &maps[k], &d_normal[k], &d_mask[k])?;
            Ok(parts
                .normal
                .iter()
                .zip(&parts.mask)
                .map(|(n, m)| *n + weights.lambda_mask * *m)
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut gradient: Vec<DVec3> = lap_grad.iter().map(|g| weights.lambda_lap * *g).collect();
    // fixed view order keeps the reduction deterministic
    for g in &per_view {
        for (acc, v) in gradient.iter_mut().zip(g) {
            *acc += *v;
        }
    }
    let l_total = l_normal + weights.lambda_mask * l_mask + weights.lambda_lap * l_lap;
    if !l_total.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("loss or gradient is not finite".into()));
    }
    Ok(Evaluation {
        loss: LossBreakdown {
            l_normal,
            l_mask,
            l_lap,
            l_total,
            per_view_normal,
        },
        gradient,
        maps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::oracle::{render_supervision, NoiseSpec, SupervisionView};
    use crate::render::{rasterize, CameraView};

    fn quad_setup() -> (TriangleMesh, SupervisionSet) {
        let quad = primitives::quad(0.6, 0.0);
        let view = CameraView::new(0.0, 90.0, 2.0, 40.0, 32);
        let set = render_supervision(&quad, &[view], &NoiseSpec::default()).unwrap();
        (quad, set)
    }

    #[test]
    fn identical_renders_give_zero() {
        let (quad, set) = quad_setup();
        let maps = vec![rasterize(&quad, &set.views[0])];
        assert_eq!(normal_loss(&maps, &set).unwrap().0, 0.0);
        assert_eq!(mask_loss(&maps, &set).unwrap().0, 0.0);
    }

    #[test]
    fn flipped_normals_cost_four() {
        let (quad, mut set) = quad_setup();
        let maps = vec![rasterize(&quad, &set.views[0])];
        for n in &mut set.targets[0].normal {
            *n = -*n;
        }
        let (l, per_view, g) = normal_loss(&maps, &set).unwrap();
        assert!((l - 4.0).abs() < 1e-12);
        assert_eq!(per_view.len(), 1);
        assert!(g[0].iter().any(|d| *d != DVec3::ZERO));
    }

    #[test]
    fn disjoint_masks_give_zero_normal_loss() {
        let (quad, mut set) = quad_setup();
        let maps = vec![rasterize(&quad, &set.views[0])];
        let t = &mut set.targets[0];
        for i in 0..t.mask.len() {
            t.mask[i] = if maps[0].mask[i] > 0.0 { 0.0 } else { 1.0 };
        }
        let (l, _, g) = normal_loss(&maps, &set).unwrap();
        assert_eq!(l, 0.0);
        assert!(g[0].iter().all(|d| *d == DVec3::ZERO));
    }

    #[test]
    fn empty_render_against_partial_target_costs_its_fraction() {
        let (_, mut set) = quad_setup();
        let n = set.targets[0].pixel_count();
        let mut empty = crate::render::ViewMaps::empty(32, 32);
        empty.mask = vec![0.0; n];
        let t = &mut set.targets[0];
        t.mask = (0..n).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let (l, _) = mask_loss(&[empty.clone()], &set).unwrap();
        assert!((l - 0.25).abs() < 1e-12);
        // complement of an all-zero render
        set.targets[0].mask = vec![1.0; n];
        assert!((mask_loss(&[empty], &set).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn view_count_mismatch_is_an_error() {
        let (quad, set) = quad_setup();
        let maps = vec![rasterize(&quad, &set.views[0]); 2];
        assert!(normal_loss(&maps, &set).is_err());
        let mut other = set.clone();
        other.targets[0] = SupervisionView {
            width: 8,
            height: 8,
            normal: vec![DVec3::ZERO; 64],
            mask: vec![0.0; 64],
            color: None,
        };
        assert!(mask_loss(&maps[..1], &other).is_err());
    }

    #[test]
    fn flat_grid_interior_has_no_laplacian_energy() {
        let grid = primitives::grid(6, 6, 1.0);
        let adj = grid.adjacency();
        let (_, g) = laplacian_loss(&grid, &adj);
        let boundary_free = (0..grid.vertex_count()).filter(|&v| {
            let p = grid.vertices[v];
            p.x.abs() < 0.49 && p.y.abs() < 0.49
        });
        for v in boundary_free {
            let nbrs = &adj.neighbors[v];
            let c = nbrs.iter().map(|&w| grid.vertices[w as usize]).sum::<DVec3>() / nbrs.len() as f64;
            assert!((grid.vertices[v] - c).length() < 1e-12);
        }
        assert!(g.iter().all(|d| d.z == 0.0));
    }

    #[test]
    fn smoothing_lowers_sphere_laplacian_energy() {
        let sphere = primitives::icosphere(2);
        let adj = sphere.adjacency();
        let (before, _) = laplacian_loss(&sphere, &adj);
        let smoothed = crate::mesh::laplacian_smooth(&sphere, 1, 0.5);
        let (after, _) = laplacian_loss(&smoothed, &adj);
        assert!(before > 0.0 && after < before);
    }
}
