use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::CameraModel;

/// Analytic surface.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Infinite plane through `point` with normal `normal`.
    Plane {
        point: Point3<f64>,
        normal: Vector3<f64>,
    },
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
    /// Axis-aligned box.
    Box { min: Point3<f64>, max: Point3<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    /// Base color on the [0, 255] scale.
    pub albedo: [f32; 3],
    /// Cell size of an object-space checker texture in meters; `None` for a flat color.
    pub checker: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mover {
    pub primitive: Primitive,
    /// Linear velocity, m/s.
    pub velocity: Vector3<f64>,
}

/// Nearest intersection along a camera ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals camera depth for rays from [`CameraModel::pixel_ray`].
    pub depth: f64,
    pub point: Point3<f64>,
    pub color: [f32; 3],
}

const RAY_EPS: f64 = 1e-9;

/// Direction of the directional light used for shading (towards the light).
fn light_dir() -> Vector3<f64> {
    Vector3::new(0.3, 0.9, -0.45).normalize()
}

impl Shape {
    fn translated(&self, d: &Vector3<f64>) -> Shape {
        match self {
            Shape::Plane { point, normal } => Shape::Plane {
                point: point + d,
                normal: *normal,
            },
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: center + d,
                radius: *radius,
            },
            Shape::Box { min, max } => Shape::Box {
                min: min + d,
                max: max + d,
            },
        }
    }

    fn anchor(&self) -> Point3<f64> {
        match self {
            Shape::Plane { point, .. } => *point,
            Shape::Sphere { center, .. } => *center,
            Shape::Box { min, .. } => *min,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Plane { point, normal } => {
                normal.norm() > 1e-12 && point.iter().all(|v| v.is_finite())
            }
            Shape::Sphere { center, radius } => {
                *radius > 0.0 && radius.is_finite() && center.iter().all(|v| v.is_finite())
            }
            Shape::Box { min, max } => (0..3).all(|i| max[i] > min[i] && (max[i] - min[i]).is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Scene(format!("degenerate primitive {self:?}")))
        }
    }

    /// Smallest ray parameter `> RAY_EPS` and the outward surface normal there.
    fn intersect(&self, o: &Point3<f64>, d: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match self {
            Shape::Plane { point, normal } => {
                let n = normal.normalize();
                let denom = n.dot(d);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let s = n.dot(&(point - o)) / denom;
                (s > RAY_EPS).then_some((s, if denom < 0.0 { n } else { -n }))
            }
            Shape::Sphere { center, radius } => {
                let oc = o - center;
                let a = d.dot(d);
                let b = oc.dot(d);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let s = [(-b - sq) / a, (-b + sq) / a]
                    .into_iter()
                    .find(|&s| s > RAY_EPS)?;
                Some((s, ((o + d * s) - center) / *radius))
            }
            Shape::Box { min, max } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                let mut enter_axis = 0;
                let mut exit_axis = 0;
                for i in 0..3 {
                    if d[i].abs() < 1e-15 {
                        if o[i] < min[i] || o[i] > max[i] {
                            return None;
                        }
                        continue;
                    }
                    let (mut a, mut b) = ((min[i] - o[i]) / d[i], (max[i] - o[i]) / d[i]);
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                    }
                    if a > t0 {
                        t0 = a;
                        enter_axis = i;
                    }
                    if b < t1 {
                        t1 = b;
                        exit_axis = i;
                    }
                }
                if t0 > t1 {
                    return None;
                }
                let (s, axis) = if t0 > RAY_EPS {
                    (t0, enter_axis)
                } else if t1 > RAY_EPS {
                    (t1, exit_axis)
                } else {
                    return None;
                };
                let mut n = Vector3::zeros();
                n[axis] = if d[axis] > 0.0 { -1.0 } else { 1.0 };
                Some((s, n))
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        match self {
            Shape::Plane { point, normal } => normal.normalize().dot(&(p - point)).abs(),
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Shape::Box { min, max } => {
                let c = (min.coords + max.coords) * 0.5;
                let half = (max - min) * 0.5;
                let q = (p.coords - c).abs() - half;
                let outside = q.map(|v| v.max(0.0)).norm();
                let inside = q.max().min(0.0);
                (outside + inside).abs()
            }
        }
    }
}

impl Primitive {
    pub fn new(shape: Shape, albedo: [f32; 3]) -> Self {
        Self {
            shape,
            albedo,
            checker: None,
        }
    }

    pub fn with_checker(mut self, cell: f64) -> Self {
        self.checker = Some(cell);
        self
    }

    fn shade(&self, shape: &Shape, p: &Point3<f64>, n: &Vector3<f64>) -> [f32; 3] {
        let mut albedo = self.albedo;
        if let Some(cell) = self.checker {
            let local = p - shape.anchor();
            // nudge off the surface so faces aligned with cell boundaries do not alias
            let local = local - n * (cell * 1e-3);
            let parity = local.iter().map(|v| (v / cell).floor() as i64).sum::<i64>();
            if parity.rem_euclid(2) == 1 {
                albedo = albedo.map(|c| c * 0.5);
            }
        }
        let lambert = n.dot(&light_dir()).max(0.0) as f32;
        albedo.map(|c| (c * (0.45 + 0.55 * lambert)).clamp(0.0, 255.0))
    }
}

/// Synthetic capture rig and scene content.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub statics: Vec<Primitive>,
    pub movers: Vec<Mover>,
    pub cameras: Vec<CameraModel>,
    pub lidar_rate_hz: f64,
    pub camera_rate_hz: f64,
    /// Rays cast per LiDAR scan.
    pub points_per_lidar_frame: usize,
    /// Lateral spacing of a viewpoint's three LiDAR units along the camera's right axis.
    pub lidar_baseline: f64,
    pub rng_seed: u64,
}

/// Desk-scale raster.
pub const DEFAULT_WIDTH: usize = 640;
pub const DEFAULT_HEIGHT: usize = 360;
pub const DEFAULT_FOCAL: f64 = 460.0;

fn desk_camera(position: Point3<f64>, target: Point3<f64>) -> CameraModel {
    CameraModel::look_at(
        position,
        target,
        Vector3::y(),
        DEFAULT_FOCAL,
        DEFAULT_FOCAL,
        (DEFAULT_WIDTH as f64 - 1.0) / 2.0,
        (DEFAULT_HEIGHT as f64 - 1.0) / 2.0,
        DEFAULT_WIDTH,
        DEFAULT_HEIGHT,
    )
    .expect("desk camera parameters are valid")
}

/// `count` cameras evenly spaced on a horizontal circle, all looking at `target`.
pub fn ring_cameras(
    count: usize,
    radius: f64,
    height: f64,
    target: Point3<f64>,
    intrinsics: (usize, usize, f64),
) -> Result<Vec<CameraModel>> {
    let (w, h, f) = intrinsics;
    (0..count)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / count as f64;
            let pos = Point3::new(target.x + radius * a.sin(), height, target.z - radius * a.cos());
            CameraModel::look_at(
                pos,
                target,
                Vector3::y(),
                f,
                f,
                (w as f64 - 1.0) / 2.0,
                (h as f64 - 1.0) / 2.0,
                w,
                h,
            )
        })
        .collect()
}

fn plane(point: [f64; 3], normal: [f64; 3], albedo: [f32; 3]) -> Primitive {
    Primitive::new(
        Shape::Plane {
            point: point.into(),
            normal: normal.into(),
        },
        albedo,
    )
}

fn cube(min: [f64; 3], max: [f64; 3], albedo: [f32; 3]) -> Primitive {
    Primitive::new(
        Shape::Box {
            min: min.into(),
            max: max.into(),
        },
        albedo,
    )
}

impl SceneSpec {
    fn with_defaults(statics: Vec<Primitive>, movers: Vec<Mover>, cameras: Vec<CameraModel>) -> Self {
        Self {
            statics,
            movers,
            cameras,
            lidar_rate_hz: 10.0,
            camera_rate_hz: 30.0,
            points_per_lidar_frame: 3_334,
            lidar_baseline: 0.25,
            rng_seed: 1,
        }
    }

    /// Closed room with furniture, cameras on a ring of radius 2.5 m.
    pub fn room(views: usize) -> Self {
        let target = Point3::new(0.0, 0.8, 0.0);
        let cameras = ring_cameras(
            views.max(1),
            2.5,
            1.5,
            target,
            (DEFAULT_WIDTH, DEFAULT_HEIGHT, DEFAULT_FOCAL),
        )
        .expect("ring parameters are valid");
        let statics = vec![
            plane([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [170.0, 160.0, 140.0]).with_checker(0.5),
            plane([0.0, 3.0, 0.0], [0.0, -1.0, 0.0], [230.0, 230.0, 230.0]),
            plane([4.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [90.0, 140.0, 200.0]),
            plane([-4.0, 0.0, 0.0], [1.0, 0.0, 0.0], [200.0, 120.0, 90.0]),
            plane([0.0, 0.0, 4.0], [0.0, 0.0, -1.0], [120.0, 200.0, 120.0]),
            plane([0.0, 0.0, -4.0], [0.0, 0.0, 1.0], [210.0, 200.0, 110.0]),
            cube([-0.6, 0.0, -0.4], [0.6, 0.75, 0.4], [140.0, 90.0, 60.0]),
            Primitive::new(
                Shape::Sphere {
                    center: Point3::new(0.2, 1.0, 0.0),
                    radius: 0.25,
                },
                [220.0, 40.0, 40.0],
            ),
            cube([-1.6, 0.0, 0.8], [-1.1, 1.7, 1.2], [60.0, 60.0, 160.0]).with_checker(0.2),
        ];
        Self::with_defaults(statics, Vec::new(), cameras)
    }

    /// One camera facing a wall at 4 m with a textured box crossing the view at 2.5 m.
    /// The box moves 0.2 m per camera frame, so the oldest merged scan lags it by 0.4 m.
    pub fn moving_box() -> Self {
        let cam = desk_camera(Point3::new(0.0, 1.0, -4.0), Point3::new(0.0, 1.0, 0.0));
        let statics = vec![
            plane([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [150.0, 150.0, 150.0]),
            plane([0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [120.0, 170.0, 210.0]),
        ];
        let movers = vec![Mover {
            primitive: cube([-0.9, 0.2, -1.7], [-0.3, 1.8, -1.3], [230.0, 200.0, 60.0])
                .with_checker(0.22),
            velocity: Vector3::new(6.0, 0.0, 0.0),
        }];
        Self::with_defaults(statics, movers, vec![cam])
    }

    /// One camera facing a wall at 4 m with a box standing 2 m in front of it; the outer
    /// LiDAR units see wall behind the box.
    pub fn occlusion() -> Self {
        let cam = desk_camera(Point3::new(0.0, 1.0, -4.0), Point3::new(0.0, 1.0, 0.0));
        let statics = vec![
            plane([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [150.0, 150.0, 150.0]),
            plane([0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [120.0, 170.0, 210.0]),
            cube([-0.4, 0.3, -2.2], [0.4, 1.7, -1.8], [220.0, 90.0, 70.0]),
        ];
        let mut spec = Self::with_defaults(statics, Vec::new(), vec![cam]);
        spec.lidar_baseline = 0.4;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::Scene("at least one camera is required".into()));
        }
        if !(self.lidar_rate_hz > 0.0 && self.camera_rate_hz > 0.0) {
            return Err(Error::Scene("frame rates must be positive".into()));
        }
        if !(self.lidar_baseline >= 0.0 && self.lidar_baseline.is_finite()) {
            return Err(Error::Scene("lidar_baseline must be non-negative".into()));
        }
        for p in self.statics.iter().chain(self.movers.iter().map(|m| &m.primitive)) {
            p.shape.validate()?;
            if p.checker.is_some_and(|c| c.is_nan() || c <= 0.0) {
                return Err(Error::Scene("checker cell size must be positive".into()));
            }
        }
        Ok(())
    }

    /// Primitives with movers displaced to time `t`.
    pub fn primitives_at(&self, t: f64) -> Vec<Primitive> {
        let mut out = self.statics.clone();
        out.extend(self.movers.iter().map(|m| Primitive {
            shape: m.primitive.shape.translated(&(m.velocity * t)),
            ..m.primitive.clone()
        }));
        out
    }

    /// Nearest hit among `prims` along a ray.
    pub fn cast(prims: &[Primitive], o: &Point3<f64>, d: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<(f64, Vector3<f64>, &Primitive)> = None;
        for p in prims {
            if let Some((s, n)) = p.shape.intersect(o, d) {
                if best.as_ref().is_none_or(|b| s < b.0) {
                    best = Some((s, n, p));
                }
            }
        }
        best.map(|(s, n, p)| {
            let point = o + d * s;
            Hit {
                depth: s,
                point,
                color: p.shade(&p.shape, &point, &n),
            }
        })
    }

    /// Distance from `p` to the nearest surface at time `t`.
    pub fn surface_distance(&self, p: &Point3<f64>, t: f64) -> f64 {
        self.primitives_at(t)
            .iter()
            .map(|prim| prim.shape.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SceneFile =
            toml::from_str(text).map_err(|e| Error::Scene(format!("scene file: {e}")))?;
        file.into_spec()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default = "default_lidar_rate")]
    lidar_rate_hz: f64,
    #[serde(default = "default_camera_rate")]
    camera_rate_hz: f64,
    #[serde(default = "default_points")]
    points_per_lidar_frame: usize,
    #[serde(default = "default_baseline")]
    lidar_baseline: f64,
    #[serde(default = "default_seed")]
    rng_seed: u64,
    rig: Option<RigDef>,
    #[serde(default)]
    camera: Vec<CameraDef>,
    #[serde(default, rename = "static")]
    statics: Vec<PrimitiveDef>,
    #[serde(default)]
    mover: Vec<PrimitiveDef>,
}

fn default_lidar_rate() -> f64 {
    10.0
}
fn default_camera_rate() -> f64 {
    30.0
}
fn default_points() -> usize {
    3_334
}
fn default_baseline() -> f64 {
    0.25
}
fn default_seed() -> u64 {
    1
}
fn default_width() -> usize {
    DEFAULT_WIDTH
}
fn default_height() -> usize {
    DEFAULT_HEIGHT
}
fn default_focal() -> f64 {
    DEFAULT_FOCAL
}
fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RigDef {
    views: usize,
    radius: f64,
    #[serde(default = "default_rig_height")]
    mount_height: f64,
    target: [f64; 3],
    #[serde(default = "default_width")]
    width: usize,
    #[serde(default = "default_height")]
    height: usize,
    #[serde(default = "default_focal")]
    focal: f64,
}

fn default_rig_height() -> f64 {
    1.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDef {
    position: [f64; 3],
    look_at: [f64; 3],
    #[serde(default = "default_up")]
    up: [f64; 3],
    #[serde(default = "default_width")]
    width: usize,
    #[serde(default = "default_height")]
    height: usize,
    #[serde(default = "default_focal")]
    fx: f64,
    #[serde(default = "default_focal")]
    fy: f64,
    cx: Option<f64>,
    cy: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveDef {
    shape: String,
    point: Option<[f64; 3]>,
    normal: Option<[f64; 3]>,
    center: Option<[f64; 3]>,
    radius: Option<f64>,
    min: Option<[f64; 3]>,
    max: Option<[f64; 3]>,
    albedo: [f32; 3],
    checker: Option<f64>,
    velocity: Option<[f64; 3]>,
}

impl PrimitiveDef {
    fn into_primitive(self) -> Result<(Primitive, Option<Vector3<f64>>)> {
        let need = |v: Option<[f64; 3]>, what: &str| {
            v.map(Point3::from)
                .ok_or_else(|| Error::Scene(format!("{} needs `{what}`", self.shape)))
        };
        let shape = match self.shape.as_str() {
            "plane" => Shape::Plane {
                point: need(self.point, "point")?,
                normal: need(self.normal, "normal")?.coords,
            },
            "sphere" => Shape::Sphere {
                center: need(self.center, "center")?,
                radius: self
                    .radius
                    .ok_or_else(|| Error::Scene("sphere needs `radius`".into()))?,
            },
            "box" => Shape::Box {
                min: need(self.min, "min")?,
                max: need(self.max, "max")?,
            },
            other => return Err(Error::Scene(format!("unknown shape `{other}`"))),
        };
        if self.albedo.iter().any(|c| !(0.0..=255.0).contains(c)) {
            return Err(Error::Scene("albedo channels must lie in [0, 255]".into()));
        }
        Ok((
            Primitive {
                shape,
                albedo: self.albedo,
                checker: self.checker,
            },
            self.velocity.map(Vector3::from),
        ))
    }
}

impl SceneFile {
    fn into_spec(self) -> Result<SceneSpec> {
        let mut cameras = Vec::new();
        if let Some(rig) = self.rig {
            cameras.extend(ring_cameras(
                rig.views,
                rig.radius,
                rig.mount_height,
                rig.target.into(),
                (rig.width, rig.height, rig.focal),
            )?);
        }
        for c in self.camera {
            cameras.push(CameraModel::look_at(
                c.position.into(),
                c.look_at.into(),
                c.up.into(),
                c.fx,
                c.fy,
                c.cx.unwrap_or((c.width as f64 - 1.0) / 2.0),
                c.cy.unwrap_or((c.height as f64 - 1.0) / 2.0),
                c.width,
                c.height,
            )?);
        }
        let mut statics = Vec::new();
        for def in self.statics {
            let (p, v) = def.into_primitive()?;
            if v.is_some() {
                return Err(Error::Scene("static primitives cannot have a velocity".into()));
            }
            statics.push(p);
        }
        let mut movers = Vec::new();
        for def in self.mover {
            let (primitive, v) = def.into_primitive()?;
            let velocity = v.ok_or_else(|| Error::Scene("movers need `velocity`".into()))?;
            movers.push(Mover { primitive, velocity });
        }
        let spec = SceneSpec {
            statics,
            movers,
            cameras,
            lidar_rate_hz: self.lidar_rate_hz,
            camera_rate_hz: self.camera_rate_hz,
            points_per_lidar_frame: self.points_per_lidar_frame,
            lidar_baseline: self.lidar_baseline,
            rng_seed: self.rng_seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
