//! Per-vertex texture fusion: each visible vertex takes its color from the
//! best-aligned view, seams between views are blended, and invisible regions
//! are filled by propagation from their visible neighbors.

use glam::{DVec2, DVec3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{compute_vertex_normals, MeshAdjacency, TriangleMesh};
use crate::oracle::{SupervisionSet, SupervisionView};
use crate::refine::MASK_THRESHOLD;
use crate::metrics::{image_report, ImageReport};
use crate::render::{rasterize, rasterize_views, CameraView};

/// Most views a visibility bitmask can hold.
pub const MAX_VIEWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureParams {
    /// Depth tolerance as a fraction of the mesh's largest bounding-box side.
    pub depth_epsilon: f64,
    pub seam_iterations: usize,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            depth_epsilon: 1e-3,
            seam_iterations: 3,
        }
    }
}

impl TextureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.depth_epsilon >= 0.0 && self.depth_epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "depth_epsilon must be non-negative, got {}",
                self.depth_epsilon
            )));
        }
        Ok(())
    }
}

/// Which views see each vertex and which one it takes its color from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexViewAssignment {
    pub view: Vec<Option<usize>>,
    /// Bit `i` set when the vertex is visible in view `i`.
    pub visible: Vec<u64>,
    /// Cosine between vertex normal and direction to the chosen camera;
    /// `-1` for vertices no view sees.
    pub score: Vec<f64>,
}

impl VertexViewAssignment {
    pub fn visible_count(&self) -> usize {
        self.view.iter().filter(|v| v.is_some()).count()
    }
}

fn check_view_count(n: usize) -> Result<()> {
    if n > MAX_VIEWS {
        return Err(Error::InvalidArgument(format!("at most {MAX_VIEWS} views are supported, got {n}")));
    }
    Ok(())
}

/// Largest finite depth among the pixel centers bilinearly surrounding `s`.
/// Taking the farthest of the four keeps a vertex from being hidden by its own
/// neighboring faces at grazing angles; a true occluder covers all four.
fn depth_near(depth: &[f64], width: usize, height: usize, s: DVec2) -> Option<f64> {
    let x0 = (s.x - 0.5).floor() as i64;
    let y0 = (s.y - 0.5).floor() as i64;
    let mut best: Option<f64> = None;
    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
        let (x, y) = (x0 + dx, y0 + dy);
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            continue;
        }
        let d = depth[y as usize * width + x as usize];
        if d.is_finite() {
            best = Some(best.map_or(d, |b| b.max(d)));
        }
    }
    best
}

/// Visibility bitmask per vertex. A vertex is visible in a view when it
/// projects inside the image, is no deeper than the depth map there plus
/// `epsilon`, and its normal faces the camera.
pub fn compute_visibility(
    mesh: &TriangleMesh,
    normals: &[DVec3],
    views: &[CameraView],
    depth_maps: &[Vec<f64>],
    epsilon: f64,
) -> Result<Vec<u64>> {
    check_view_count(views.len())?;
    if depth_maps.len() != views.len() || normals.len() != mesh.vertex_count() {
        return Err(Error::Mismatch(format!(
            "{} views, {} depth maps, {} normals for {} vertices",
            views.len(),
            depth_maps.len(),
            normals.len(),
            mesh.vertex_count()
        )));
    }
    for (v, d) in views.iter().zip(depth_maps) {
        if d.len() != v.width * v.height {
            return Err(Error::Mismatch(format!(
                "depth map has {} pixels, view is {}x{}",
                d.len(),
                v.width,
                v.height
            )));
        }
    }
    let projectors: Vec<_> = views.iter().map(|v| v.projector()).collect();
    Ok(mesh
        .vertices
        .par_iter()
        .zip(normals)
        .map(|(&p, &n)| {
            let mut bits = 0u64;
            for (i, (proj, depth)) in projectors.iter().zip(depth_maps).enumerate() {
                if n.dot(proj.eye - p) <= 0.0 {
                    continue;
                }
                let Some((s, z)) = proj.project(p) else { continue };
                if !proj.contains(s) {
                    continue;
                }
                if depth_near(depth, proj.width, proj.height, s).is_some_and(|d| z <= d + epsilon) {
                    bits |= 1 << i;
                }
            }
            bits
        })
        .collect())
}

/// Picks, for every vertex, the visible view whose camera direction best
/// aligns with the vertex normal; ties go to the lower view index.
pub fn assign_views(mesh: &TriangleMesh, normals: &[DVec3], views: &[CameraView], visible: Vec<u64>) -> VertexViewAssignment {
    let eyes: Vec<DVec3> = views.iter().map(|v| v.position()).collect();
    let (view, score) = mesh
        .vertices
        .par_iter()
        .zip(normals)
        .zip(&visible)
        .map(|((&p, &n), &bits)| {
            let n = n.normalize_or_zero();
            let mut best: Option<(usize, f64)> = None;
            for (i, eye) in eyes.iter().enumerate() {
                if bits & (1 << i) == 0 {
                    continue;
                }
                let s = n.dot((*eye - p).normalize_or_zero()).clamp(-1.0, 1.0);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            best.map_or((None, -1.0), |(i, s)| (Some(i), s))
        })
        .unzip();
    VertexViewAssignment { view, visible, score }
}

/// Bilinear sample at subpixel `s` (pixel centers at half-integers) over
/// the pixels the target mask marks as foreground, so silhouette vertices do
/// not pick up background. Falls back to the nearest pixel when none of the
/// four neighbors is foreground.
fn sample_color(t: &SupervisionView, color: &[DVec3], s: DVec2) -> DVec3 {
    let fx = s.x - 0.5;
    let fy = s.y - 0.5;
    let (x0, y0) = (fx.floor(), fy.floor());
    let (tx, ty) = (fx - x0, fy - y0);
    let mut acc = DVec3::ZERO;
    let mut wsum = 0.0;
    for (dx, dy, w) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let (x, y) = (x0 as i64 + dx, y0 as i64 + dy);
        if x < 0 || y < 0 || x >= t.width as i64 || y >= t.height as i64 || w == 0.0 {
            continue;
        }
        let i = y as usize * t.width + x as usize;
        if t.mask[i] >= MASK_THRESHOLD {
            acc += w * color[i];
            wsum += w;
        }
    }
    if wsum > 0.0 {
        return acc / wsum;
    }
    let x = (s.x.floor() as i64).clamp(0, t.width as i64 - 1) as usize;
    let y = (s.y.floor() as i64).clamp(0, t.height as i64 - 1) as usize;
    color[y * t.width + x]
}

fn color_images(supervision: &SupervisionSet) -> Result<Vec<&[DVec3]>> {
    supervision
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            t.color
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument(format!("supervision view {i} has no color image")))
        })
        .collect()
}

/// Colors sampled from each vertex's chosen view; `None` where unassigned.
pub fn assign_vertex_colors(
    mesh: &TriangleMesh,
    supervision: &SupervisionSet,
    assignment: &VertexViewAssignment,
) -> Result<Vec<Option<DVec3>>> {
    let images = color_images(supervision)?;
    let projectors: Vec<_> = supervision.views.iter().map(|v| v.projector()).collect();
    Ok(mesh
        .vertices
        .par_iter()
        .zip(&assignment.view)
        .map(|(&p, view)| {
            let i = (*view)?;
            let (s, _) = projectors[i].project(p)?;
            Some(sample_color(&supervision.targets[i], images[i], s).clamp(DVec3::ZERO, DVec3::ONE))
        })
        .collect())
}

/// `iterations` Jacobi steps of `c <- c/2 + mean(colored neighbors)/2` on
/// seam vertices, those with a neighbor assigned to a different view.
pub fn smooth_seams(
    adjacency: &MeshAdjacency,
    colors: &[Option<DVec3>],
    assignment: &VertexViewAssignment,
    iterations: usize,
) -> Vec<Option<DVec3>> {
    let seam: Vec<usize> = (0..colors.len())
        .filter(|&v| {
            assignment.view[v].is_some()
                && adjacency.neighbors[v]
                    .iter()
                    .any(|&w| assignment.view[w as usize] != assignment.view[v])
        })
        .collect();
    let mut cur = colors.to_vec();
    for _ in 0..iterations {
        let updates: Vec<(usize, DVec3)> = seam
            .par_iter()
            .filter_map(|&v| {
                let c = cur[v]?;
                let (sum, n) = adjacency.neighbors[v]
                    .iter()
                    .filter_map(|&w| cur[w as usize])
                    .fold((DVec3::ZERO, 0usize), |(s, n), c| (s + c, n + 1));
                (n > 0).then(|| (v, 0.5 * c + 0.5 * sum / n as f64))
            })
            .collect();
        for (v, c) in updates {
            cur[v] = Some(c);
        }
    }
    cur
}

/// Breadth-first propagation into uncolored vertices. Each layer takes the
/// mean of neighbors finalized in earlier layers, so the result does not
/// depend on visiting order.
pub fn fill_invisible(adjacency: &MeshAdjacency, colors: &[Option<DVec3>]) -> Result<Vec<DVec3>> {
    let n = colors.len();
    if adjacency.neighbors.len() != n {
        return Err(Error::Mismatch(format!(
            "{} colors for {} vertices",
            n,
            adjacency.neighbors.len()
        )));
    }
    let (comp, count) = adjacency.components();
    let mut seeded = vec![false; count];
    for (v, c) in colors.iter().enumerate() {
        if c.is_some() {
            seeded[comp[v]] = true;
        }
    }
    if let Some(component) = seeded.iter().position(|s| !s) {
        return Err(Error::InvisibleComponent {
            component,
            size: comp.iter().filter(|&&c| c == component).count(),
        });
    }

    let mut cur = colors.to_vec();
    let mut frontier: Vec<usize> = (0..n)
        .filter(|&v| cur[v].is_none() && adjacency.neighbors[v].iter().any(|&w| cur[w as usize].is_some()))
        .collect();
    while !frontier.is_empty() {
        let layer: Vec<DVec3> = frontier
            .iter()
            .map(|&v| {
                let (sum, k) = adjacency.neighbors[v]
                    .iter()
                    .filter_map(|&w| cur[w as usize])
                    .fold((DVec3::ZERO, 0usize), |(s, k), c| (s + c, k + 1));
                sum / k as f64
            })
            .collect();
        for (&v, c) in frontier.iter().zip(layer) {
            cur[v] = Some(c);
        }
        let mut next: Vec<usize> = frontier
            .iter()
            .flat_map(|&v| adjacency.neighbors[v].iter().map(|&w| w as usize))
            .filter(|&w| cur[w].is_none())
            .collect();
        next.sort_unstable();
        next.dedup();
        frontier = next;
    }
    Ok(cur.into_iter().map(|c| c.expect("every component is seeded")).collect())
}

#[derive(Debug, Clone)]
pub struct TextureOutput {
    pub mesh: TriangleMesh,
    pub assignment: VertexViewAssignment,
}

fn visibility_for(mesh: &TriangleMesh, supervision: &SupervisionSet, params: &TextureParams) -> Result<(Vec<DVec3>, Vec<u64>)> {
    params.validate()?;
    supervision.validate()?;
    check_view_count(supervision.views.len())?;
    let (lo, hi) = mesh
        .bounding_box()
        .ok_or_else(|| Error::InvalidMesh("cannot texture a mesh without vertices".into()))?;
    let epsilon = params.depth_epsilon * (hi - lo).max_element().max(f64::MIN_POSITIVE);
    let normals = compute_vertex_normals(mesh);
    let depth: Vec<Vec<f64>> = supervision
        .views
        .par_iter()
        .map(|v| rasterize(mesh, v).depth)
        .collect();
    let visible = compute_visibility(mesh, &normals, &supervision.views, &depth, epsilon)?;
    Ok((normals, visible))
}

/// Visibility, best-view assignment, seam smoothing and fill.
pub fn texture_pipeline(mesh: &TriangleMesh, supervision: &SupervisionSet, params: &TextureParams) -> Result<TextureOutput> {
    mesh.validate_indices()?;
    let (normals, visible) = visibility_for(mesh, supervision, params)?;
    let assignment = assign_views(mesh, &normals, &supervision.views, visible);
    if assignment.visible_count() == 0 {
        return Err(Error::InvalidArgument("no vertex is visible in any view".into()));
    }
    let adjacency = mesh.adjacency();
    let colors = assign_vertex_colors(mesh, supervision, &assignment)?;
    let colors = smooth_seams(&adjacency, &colors, &assignment, params.seam_iterations);
    let colors = fill_invisible(&adjacency, &colors)?;
    Ok(TextureOutput {
        mesh: mesh.clone().with_colors(colors),
        assignment,
    })
}

/// Baseline without fusion: every vertex takes the plain average of its
/// samples from all views whose image it projects into, with no visibility
/// or facing test. Vertices outside every image are filled as usual.
pub fn average_view_colors(mesh: &TriangleMesh, supervision: &SupervisionSet) -> Result<TriangleMesh> {
    mesh.validate_indices()?;
    supervision.validate()?;
    let images = color_images(supervision)?;
    let projectors: Vec<_> = supervision.views.iter().map(|v| v.projector()).collect();
    let colors: Vec<Option<DVec3>> = mesh
        .vertices
        .par_iter()
        .map(|&p| {
            let mut sum = DVec3::ZERO;
            let mut k = 0usize;
            for (i, proj) in projectors.iter().enumerate() {
                let t = &supervision.targets[i];
                if let Some((s, _)) = proj.project(p) {
                    if s.x >= 0.0 && s.y >= 0.0 && s.x <= t.width as f64 && s.y <= t.height as f64 {
                        sum += sample_color(t, images[i], s);
                        k += 1;
                    }
                }
            }
            (k > 0).then(|| (sum / k as f64).clamp(DVec3::ZERO, DVec3::ONE))
        })
        .collect();
    if colors.iter().all(Option::is_none) {
        return Err(Error::InvalidArgument("no vertex projects into any view".into()));
    }
    let colors = fill_invisible(&mesh.adjacency(), &colors)?;
    Ok(mesh.clone().with_colors(colors))
}

/// Renders the colored `mesh` from every supervision view and scores the
/// renders against the supervision color images.
pub fn rerender_report(mesh: &TriangleMesh, supervision: &SupervisionSet) -> Result<ImageReport> {
    if mesh.vertex_colors.is_none() {
        return Err(Error::InvalidArgument("mesh has no vertex colors to render".into()));
    }
    let targets = color_images(supervision)?;
    let adjacency = mesh.adjacency();
    let maps = rasterize_views(mesh, &adjacency, &supervision.views);
    let (w, h) = (supervision.views[0].width, supervision.views[0].height);
    if supervision.views.iter().any(|v| v.width != w || v.height != h) {
        return Err(Error::Mismatch("supervision views differ in size".into()));
    }
    let renders: Vec<Vec<DVec3>> = maps.into_iter().map(|m| m.color.unwrap_or_default()).collect();
    let targets: Vec<Vec<DVec3>> = targets.into_iter().map(<[DVec3]>::to_vec).collect();
    image_report(w, h, &renders, &targets)
}
