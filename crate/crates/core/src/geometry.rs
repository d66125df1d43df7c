//! Pinhole camera, timed point clouds and the sparse depth raster they project into.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::densify::DenseDepthMap;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::raster::{check_dims, Raster};

/// Points at or in front of this camera-space depth (meters) are dropped on projection.
pub const Z_NEAR: f64 = 0.01;

/// Most LiDAR frames a single viewpoint merges.
pub const MAX_MERGED_FRAMES: usize = 3;

/// Pinhole camera with world-to-camera extrinsics.
///
/// Camera axes are x right, y down, z forward. A world point `p` maps to camera space as
/// `rotation * p + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    width: usize,
    height: usize,
}

impl CameraModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::Camera(format!("focal lengths must be positive, got {fx}, {fy}")));
        }
        if !(cx > 0.0 && cx < width as f64 && cy > 0.0 && cy < height as f64) {
            return Err(Error::Camera(format!(
                "principal point ({cx}, {cy}) outside the {width}x{height} raster"
            )));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if ortho.is_nan() || ortho >= 1e-6 || (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::Camera("rotation is not a proper orthonormal matrix".into()));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Camera("translation is not finite".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// Camera at `position` looking at `target`, with world `up` mapped to image-up.
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        position: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let forward = (target - position)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Camera("look_at target coincides with position".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Camera("look_at up vector is parallel to view direction".into()))?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * position.coords);
        Self::new(fx, fy, cx, cy, rotation, translation, width, height)
    }

    /// Same intrinsics and orientation, optical center moved by `offset` (world frame).
    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        let mut cam = self.clone();
        cam.translation -= self.rotation * offset;
        cam
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Optical center in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Camera right axis expressed in world coordinates.
    pub fn right_axis(&self) -> Vector3<f64> {
        self.rotation.row(0).transpose()
    }

    pub fn world_to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.rotation * p.coords + self.translation
    }

    pub fn camera_to_world(&self, pc: &Vector3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.transpose() * (pc - self.translation))
    }

    /// Continuous image coordinates of a camera-space point (no visibility checks).
    pub fn project_camera(&self, pc: &Vector3<f64>) -> (f64, f64) {
        (self.fx * pc.x / pc.z + self.cx, self.fy * pc.y / pc.z + self.cy)
    }

    /// Camera-space point at image coordinates `(u, v)` and camera depth `depth`.
    pub fn unproject_camera(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        )
    }

    /// World-frame ray through image coordinates `(u, v)`, scaled so that one unit of ray
    /// parameter equals one meter of camera depth.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Point3<f64>, Vector3<f64>) {
        let dir_cam = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        (self.center(), self.rotation.transpose() * dir_cam)
    }
}

/// 3D points tagged with optional color, source frame and sensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimedPointCloud {
    points: Vec<Point3<f64>>,
    colors: Option<Vec<[u8; 3]>>,
    frame_index: Vec<i32>,
    sensor_id: Vec<i32>,
}

impl TimedPointCloud {
    pub fn new(
        points: Vec<Point3<f64>>,
        colors: Option<Vec<[u8; 3]>>,
        frame_index: Vec<i32>,
        sensor_id: Vec<i32>,
    ) -> Result<Self> {
        let n = points.len();
        if frame_index.len() != n
            || sensor_id.len() != n
            || colors.as_ref().is_some_and(|c| c.len() != n)
        {
            return Err(Error::config("point cloud attribute lengths differ"));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(Error::config("point cloud contains non-finite coordinates"));
        }
        Ok(Self {
            points,
            colors,
            frame_index,
            sensor_id,
        })
    }

    /// Uncolored cloud with every point tagged by the same frame and sensor.
    pub fn from_points(points: Vec<Point3<f64>>, frame_index: i32, sensor_id: i32) -> Result<Self> {
        let n = points.len();
        Self::new(points, None, vec![frame_index; n], vec![sensor_id; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn frame_index(&self) -> &[i32] {
        &self.frame_index
    }

    pub fn sensor_id(&self) -> &[i32] {
        &self.sensor_id
    }

    pub fn max_frame_index(&self) -> Option<i32> {
        self.frame_index.iter().copied().max()
    }

    /// Overwrites every point's frame and sensor tags.
    pub fn with_tags(mut self, frame_index: i32, sensor_id: i32) -> Self {
        self.frame_index.fill(frame_index);
        self.sensor_id.fill(sensor_id);
        self
    }

    /// Appends `other`. Colors survive only when both sides carry them (or `self` is empty).
    pub fn extend(&mut self, other: &TimedPointCloud) {
        self.colors = match (self.colors.take(), other.colors.as_ref()) {
            (Some(mut mine), Some(theirs)) => {
                mine.extend_from_slice(theirs);
                Some(mine)
            }
            (None, Some(theirs)) if self.points.is_empty() => Some(theirs.clone()),
            _ => None,
        };
        self.points.extend_from_slice(&other.points);
        self.frame_index.extend_from_slice(&other.frame_index);
        self.sensor_id.extend_from_slice(&other.sensor_id);
    }

    /// Concatenates clouds in order.
    pub fn concat<'a>(clouds: impl IntoIterator<Item = &'a TimedPointCloud>) -> TimedPointCloud {
        let mut out = TimedPointCloud::default();
        for c in clouds {
            out.extend(c);
        }
        out
    }
}

/// Camera-aligned sparse depth raster.
///
/// Invalid pixels hold depth `0.0`; valid pixels hold a finite positive depth and the frame
/// index of the sample that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDepthMap {
    depth: Raster<f32>,
    mask: Raster<u8>,
    frame_index: Raster<i32>,
}

impl SparseDepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            depth: Raster::filled(width, height, 0.0),
            mask: Raster::filled(width, height, 0),
            frame_index: Raster::filled(width, height, 0),
        }
    }

    /// Builds a map from a depth raster where `0.0` (or any non-positive / non-finite value)
    /// marks a hole. All samples get `frame_index`.
    pub fn from_depth(depth: &Raster<f32>, frame_index: i32) -> Self {
        let (w, h) = depth.dims();
        let mut out = Self::empty(w, h);
        for y in 0..h {
            for x in 0..w {
                let d = *depth.get(x, y);
                if d.is_finite() && d > 0.0 {
                    out.set(x, y, d, frame_index);
                }
            }
        }
        out
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.depth.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.mask.get(x, y) != 0
    }

    #[inline]
    pub fn depth_at(&self, x: usize, y: usize) -> f32 {
        *self.depth.get(x, y)
    }

    #[inline]
    pub fn frame_at(&self, x: usize, y: usize) -> i32 {
        *self.frame_index.get(x, y)
    }

    /// Stores a sample. Non-finite or non-positive depths clear the pixel instead.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, depth: f32, frame_index: i32) {
        if depth.is_finite() && depth > 0.0 {
            *self.depth.get_mut(x, y) = depth;
            *self.mask.get_mut(x, y) = 1;
            *self.frame_index.get_mut(x, y) = frame_index;
        } else {
            self.clear(x, y);
        }
    }

    #[inline]
    pub fn clear(&mut self, x: usize, y: usize) {
        *self.depth.get_mut(x, y) = 0.0;
        *self.mask.get_mut(x, y) = 0;
        *self.frame_index.get_mut(x, y) = 0;
    }

    pub fn depth(&self) -> &Raster<f32> {
        &self.depth
    }

    pub fn mask(&self) -> &Raster<u8> {
        &self.mask
    }

    pub fn frame_index(&self) -> &Raster<i32> {
        &self.frame_index
    }

    pub fn valid_count(&self) -> usize {
        self.mask.as_slice().iter().filter(|&&m| m != 0).count()
    }

    /// `(x, y, depth, frame_index)` for each valid pixel in row-major order.
    pub fn samples(&self) -> impl Iterator<Item = (usize, usize, f32, i32)> + '_ {
        let w = self.width();
        self.mask
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0)
            .map(move |(i, _)| {
                (
                    i % w,
                    i / w,
                    self.depth.as_slice()[i],
                    self.frame_index.as_slice()[i],
                )
            })
    }

    pub fn max_frame_index(&self) -> Option<i32> {
        self.samples().map(|s| s.3).max()
    }
}

/// Z-buffered projection of a world-frame cloud into `cam`'s raster.
///
/// Each point with camera depth above [`Z_NEAR`] lands on the nearest integer pixel; when
/// several points share a pixel the nearest one wins and its frame index is kept. Points
/// behind the camera or off the raster are dropped.
pub fn project_points(cloud: &TimedPointCloud, cam: &CameraModel) -> SparseDepthMap {
    let (w, h) = cam.dims();
    let mut out = SparseDepthMap::empty(w, h);
    for (p, &frame) in cloud.points().iter().zip(cloud.frame_index()) {
        let pc = cam.world_to_camera(p);
        if pc.z.is_nan() || pc.z <= Z_NEAR {
            continue;
        }
        let (u, v) = cam.project_camera(&pc);
        let (u, v) = (u.round(), v.round());
        if !(u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64) {
            continue;
        }
        let (x, y) = (u as usize, v as usize);
        let z = pc.z as f32;
        if !out.is_valid(x, y) || z < out.depth_at(x, y) {
            out.set(x, y, z, frame);
        }
    }
    out
}

/// Concatenates up to three LiDAR frames from one viewpoint, keeping every tag.
pub fn merge_frames(frames: &[TimedPointCloud]) -> Result<TimedPointCloud> {
    if frames.len() > MAX_MERGED_FRAMES {
        return Err(Error::config(format!(
            "cannot merge {} frames, at most {MAX_MERGED_FRAMES} per viewpoint",
            frames.len()
        )));
    }
    let mut seen: Vec<i32> = Vec::new();
    for f in frames {
        let mut ids: Vec<i32> = f.frame_index().to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.iter().any(|id| seen.contains(id)) {
            return Err(Error::config("merged frames share a frame_index"));
        }
        seen.extend(ids);
    }
    Ok(TimedPointCloud::concat(frames))
}

/// Lifts every valid pixel of `dense` into a world-frame point colored by `rgb`.
///
/// Output points are tagged with frame 0 and sensor 0; callers retag with
/// [`TimedPointCloud::with_tags`].
pub fn unproject_depth(
    dense: &DenseDepthMap,
    rgb: &RgbImage,
    cam: &CameraModel,
) -> Result<TimedPointCloud> {
    check_dims("dense depth", dense.dims(), cam.dims())?;
    check_dims("rgb image", rgb.dims(), cam.dims())?;
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for y in 0..dense.height() {
        for x in 0..dense.width() {
            if !dense.is_valid(x, y) {
                continue;
            }
            let d = dense.depth_at(x, y) as f64;
            let pc = cam.unproject_camera(x as f64, y as f64, d);
            points.push(cam.camera_to_world(&pc));
            colors.push(rgb.get(x, y).map(|c| c.round().clamp(0.0, 255.0) as u8));
        }
    }
    let n = points.len();
    TimedPointCloud::new(points, Some(colors), vec![0; n], vec![0; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis_cam() -> CameraModel {
        CameraModel::new(
            100.0,
            100.0,
            320.0,
            240.0,
            Matrix3::identity(),
            Vector3::zeros(),
            640,
            480,
        )
        .unwrap()
    }

    #[test]
    fn on_axis_point_lands_on_principal_point() {
        let cloud = TimedPointCloud::from_points(vec![Point3::new(0.0, 0.0, 2.0)], 0, 0).unwrap();
        let map = project_points(&cloud, &axis_cam());
        assert!(map.is_valid(320, 240));
        assert_eq!(map.depth_at(320, 240), 2.0);
        assert_eq!(map.valid_count(), 1);
    }

    #[test]
    fn z_buffer_keeps_nearest_and_its_frame() {
        let cloud = TimedPointCloud::new(
            vec![Point3::new(0.0, 0.0, 3.0), Point3::new(0.0, 0.0, 2.0)],
            None,
            vec![4, 9],
            vec![0, 1],
        )
        .unwrap();
        let map = project_points(&cloud, &axis_cam());
        assert_eq!(map.depth_at(320, 240), 2.0);
        assert_eq!(map.frame_at(320, 240), 9);
    }

    #[test]
    fn drops_points_behind_near_plane_and_outside() {
        let cloud = TimedPointCloud::from_points(
            vec![
                Point3::new(0.0, 0.0, -1.0),
                Point3::new(0.0, 0.0, 0.005),
                Point3::new(100.0, 0.0, 1.0),
            ],
            0,
            0,
        )
        .unwrap();
        assert_eq!(project_points(&cloud, &axis_cam()).valid_count(), 0);
        assert_eq!(
            project_points(&TimedPointCloud::default(), &axis_cam()).valid_count(),
            0
        );
    }

    #[test]
    fn merge_checks_frame_count_and_uniqueness() {
        let f = |n: usize, idx: i32| {
            TimedPointCloud::from_points(vec![Point3::new(0.0, 0.0, 1.0); n], idx, 0).unwrap()
        };
        let merged = merge_frames(&[f(10, 7), f(20, 8), f(30, 9)]).unwrap();
        assert_eq!(merged.len(), 60);
        assert_eq!(merged.max_frame_index(), Some(9));
        assert_eq!(merge_frames(&[f(5, 1)]).unwrap(), f(5, 1));
        assert!(merge_frames(&[f(1, 1), f(1, 2), f(1, 3), f(1, 4)]).is_err());
        assert!(merge_frames(&[f(1, 1), f(1, 1)]).is_err());
    }

    #[test]
    fn camera_validation() {
        let bad_rot = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(CameraModel::new(100.0, 100.0, 10.0, 10.0, bad_rot, Vector3::zeros(), 20, 20).is_err());
        let flip = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(CameraModel::new(100.0, 100.0, 10.0, 10.0, flip, Vector3::zeros(), 20, 20).is_err());
        let id = Matrix3::identity();
        assert!(CameraModel::new(0.0, 100.0, 10.0, 10.0, id, Vector3::zeros(), 20, 20).is_err());
        assert!(CameraModel::new(100.0, 100.0, 25.0, 10.0, id, Vector3::zeros(), 20, 20).is_err());
    }

    #[test]
    fn look_at_points_forward_axis_at_target() {
        let cam = CameraModel::look_at(
            Point3::new(0.0, 1.0, -3.0),
            Point3::new(0.0, 1.0, 0.0),
            Vector3::y(),
            100.0,
            100.0,
            32.0,
            24.0,
            64,
            48,
        )
        .unwrap();
        let pc = cam.world_to_camera(&Point3::new(0.0, 1.0, 0.0));
        assert!((pc - Vector3::new(0.0, 0.0, 3.0)).norm() < 1e-12);
        // world up shows as image up (negative y)
        let above = cam.world_to_camera(&Point3::new(0.0, 2.0, 0.0));
        assert!(above.y < 0.0);
        assert!((cam.center() - Point3::new(0.0, 1.0, -3.0)).norm() < 1e-12);
    }
}
