use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scene::SceneSpec;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, TimedPointCloud};
use crate::image::RgbImage;
use crate::par;
use crate::raster::Raster;

/// LiDAR units per viewpoint; they fire round-robin, one per camera frame.
pub const LIDARS_PER_VIEW: usize = 3;

/// Everything one viewpoint captures at one camera tick.
#[derive(Clone, Debug)]
pub struct ViewFrame {
    pub camera: CameraModel,
    pub rgb: RgbImage,
    /// Camera frame one tick earlier, for motion detection.
    pub prev_rgb: RgbImage,
    /// Camera-space depth of the nearest surface; 0.0 where nothing is hit.
    pub gt_depth: Raster<f32>,
    /// The three most recent LiDAR scans, oldest first.
    pub lidar_frames: Vec<TimedPointCloud>,
}

#[derive(Clone, Debug)]
pub struct FrameBundle {
    pub t: f64,
    /// Camera tick number; the newest LiDAR scan carries this frame index.
    pub tick: i64,
    pub views: Vec<ViewFrame>,
}

/// Deterministic per-stream seed.
pub fn seed_for(base: u64, view: usize, frame: i64, salt: u64) -> u64 {
    // splitmix64 over the packed stream id
    let mut z = base
        ^ (view as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (frame as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ salt.wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn render_view(spec: &SceneSpec, cam: &CameraModel, t: f64) -> (RgbImage, Raster<f32>) {
    let prims = spec.primitives_at(t);
    let (w, h) = cam.dims();
    let mut color = vec![[0.0f32; 3]; w * h];
    let mut depth = vec![0.0f32; w * h];
    par::for_each_row2(&mut color, &mut depth, w, |y, crow, drow| {
        for x in 0..w {
            let (o, d) = cam.pixel_ray(x as f64, y as f64);
            if let Some(hit) = SceneSpec::cast(&prims, &o, &d) {
                crow[x] = hit.color;
                drow[x] = hit.depth as f32;
            }
        }
    });
    let rgb = RgbImage::new(Raster::from_vec(w, h, color).expect("dims")).expect("shaded colors are in range");
    (rgb, Raster::from_vec(w, h, depth).expect("dims"))
}

/// Pose of LiDAR unit `unit` of a viewpoint: the camera shifted along its right axis.
fn lidar_pose(spec: &SceneSpec, cam: &CameraModel, unit: usize) -> CameraModel {
    let shift = (unit as f64 - (LIDARS_PER_VIEW as f64 - 1.0) / 2.0) * spec.lidar_baseline;
    cam.translated(cam.right_axis() * shift)
}

/// One LiDAR scan: `n` rays through uniformly random sub-pixel positions of `sensor`'s
/// raster, keeping the hits. Misses are retried up to `4n` rays in total.
pub fn sample_sensor(
    spec: &SceneSpec,
    sensor: &CameraModel,
    t: f64,
    n: usize,
    seed: u64,
    frame_index: i32,
    sensor_id: i32,
) -> Result<TimedPointCloud> {
    let prims = spec.primitives_at(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = sensor.dims();
    let mut points = Vec::with_capacity(n);
    for _ in 0..4 * n {
        if points.len() == n {
            break;
        }
        let u = rng.random_range(-0.5..w as f64 - 0.5);
        let v = rng.random_range(-0.5..h as f64 - 0.5);
        let (o, d) = sensor.pixel_ray(u, v);
        if let Some(hit) = SceneSpec::cast(&prims, &o, &d) {
            points.push(hit.point);
        }
    }
    TimedPointCloud::from_points(points, frame_index, sensor_id)
}

/// Renders every camera at time `t` and scans each viewpoint's LiDAR units at the three
/// staggered times ending at `t`.
pub fn render_scene(spec: &SceneSpec, t: f64) -> Result<FrameBundle> {
    spec.validate()?;
    let tick = (t * spec.camera_rate_hz).round() as i64;
    let frame_dt = 1.0 / spec.camera_rate_hz;
    let scan_dt = 1.0 / (spec.lidar_rate_hz * LIDARS_PER_VIEW as f64);
    let views = par::map_indices(spec.cameras.len(), |v| -> Result<ViewFrame> {
        let cam = &spec.cameras[v];
        let (rgb, gt_depth) = render_view(spec, cam, t);
        let (prev_rgb, _) = render_view(spec, cam, t - frame_dt);
        let mut lidar_frames = Vec::with_capacity(LIDARS_PER_VIEW);
        for age in (0..LIDARS_PER_VIEW as i64).rev() {
            let frame = tick - age;
            let unit = frame.rem_euclid(LIDARS_PER_VIEW as i64) as usize;
            let sensor = lidar_pose(spec, cam, unit);
            lidar_frames.push(sample_sensor(
                spec,
                &sensor,
                t - age as f64 * scan_dt,
                spec.points_per_lidar_frame,
                seed_for(spec.rng_seed, v, frame, 1),
                frame as i32,
                (v * LIDARS_PER_VIEW + unit) as i32,
            )?);
        }
        Ok(ViewFrame {
            camera: cam.clone(),
            rgb,
            prev_rgb,
            gt_depth,
            lidar_frames,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(FrameBundle { t, tick, views })
}

/// Draws `n` distinct pixels uniformly from the valid ground-truth depth of `view` and lifts
/// them to world points tagged with the bundle's tick. Deterministic in `seed`.
pub fn sample_lidar(
    bundle: &FrameBundle,
    view: usize,
    n: usize,
    seed: u64,
) -> Result<TimedPointCloud> {
    let frame = bundle
        .views
        .get(view)
        .ok_or_else(|| Error::config(format!("bundle has no view {view}")))?;
    let (cam, gt) = (&frame.camera, &frame.gt_depth);
    let valid: Vec<usize> = gt
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, valid.len(), n.min(valid.len()));
    let w = gt.width();
    let points = picks
        .iter()
        .map(|k| {
            let i = valid[k];
            let (x, y) = (i % w, i / w);
            let d = gt.as_slice()[i] as f64;
            cam.camera_to_world(&cam.unproject_camera(x as f64, y as f64, d))
        })
        .collect();
    TimedPointCloud::from_points(points, bundle.tick as i32, view as i32)
}
