use crate::densify::DenseDepthMap;
use crate::geometry::TimedPointCloud;

/// Derivative along one axis from valid neighbors: central where both exist, one-sided
/// where only one does, `None` where neither does.
#[inline]
fn axis_gradient(center: f32, lo: Option<f32>, hi: Option<f32>) -> Option<f32> {
    match (lo, hi) {
        (Some(l), Some(h)) => Some((h - l) * 0.5),
        (None, Some(h)) => Some(h - center),
        (Some(l), None) => Some(center - l),
        (None, None) => None,
    }
}

/// Per-pixel `max(|∂D/∂x|, |∂D/∂y|)` over valid neighbors; `None` for invalid pixels and
/// pixels with no valid neighbor on either axis.
pub fn depth_gradient(dense: &DenseDepthMap, x: usize, y: usize) -> Option<f32> {
    if !dense.is_valid(x, y) {
        return None;
    }
    let (w, h) = dense.dims();
    let at = |xx: usize, yy: usize| dense.is_valid(xx, yy).then(|| dense.depth_at(xx, yy));
    let d = dense.depth_at(x, y);
    let gx = axis_gradient(
        d,
        (x > 0).then(|| at(x - 1, y)).flatten(),
        (x + 1 < w).then(|| at(x + 1, y)).flatten(),
    );
    let gy = axis_gradient(
        d,
        (y > 0).then(|| at(x, y - 1)).flatten(),
        (y + 1 < h).then(|| at(x, y + 1)).flatten(),
    );
    match (gx, gy) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(0.0).abs().max(b.unwrap_or(0.0).abs())),
    }
}

/// Invalidates valid pixels whose depth gradient exceeds `grad_thresh` (meters per pixel).
///
/// Gradients are evaluated on the input map; surviving depths are untouched.
pub fn contour_filter(dense: &DenseDepthMap, grad_thresh: f32) -> DenseDepthMap {
    let (w, h) = dense.dims();
    let mut out = dense.clone();
    for y in 0..h {
        for x in 0..w {
            if depth_gradient(dense, x, y).is_some_and(|g| g > grad_thresh) {
                out.invalidate(x, y);
            }
        }
    }
    out
}

/// Overlays per-viewpoint clouds in order; nothing is merged or deduplicated.
pub fn fuse_views(clouds: &[TimedPointCloud]) -> TimedPointCloud {
    TimedPointCloud::concat(clouds)
}
