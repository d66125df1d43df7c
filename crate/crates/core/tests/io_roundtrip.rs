use std::io::Cursor;

use depthfill::io::{pfm, ply, ppm};
use depthfill::{Raster, RgbImage, TimedPointCloud};
use nalgebra::Point3;

#[test]
fn pfm_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.pfm");
    let img = Raster::from_fn(7, 5, |x, y| x as f32 * 0.25 - y as f32 * 1e-3 + 1e-7);
    pfm::write_path(&path, &img).unwrap();
    assert_eq!(pfm::read_path(&path).unwrap(), img);
}

#[test]
fn pfm_reads_big_endian_bottom_up() {
    // 2x2, rows stored bottom first
    let mut bytes = b"Pf\n2 2\n1.0\n".to_vec();
    for v in [3.0f32, 4.0, 1.0, 2.0] {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    let img = pfm::read(&mut Cursor::new(bytes)).unwrap();
    assert_eq!(img.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn pfm_rejects_truncated_and_color_files() {
    assert!(pfm::read(&mut Cursor::new(b"Pf\n2 2\n-1.0\n\0\0\0\0".to_vec())).is_err());
    assert!(pfm::read(&mut Cursor::new(b"PF\n1 1\n-1.0\n".to_vec())).is_err());
}

#[test]
fn ppm_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ppm");
    let img = RgbImage::from_fn(6, 4, |x, y| [x as f32 * 40.0, y as f32 * 60.0, 255.0]);
    ppm::write_path(&path, &img).unwrap();
    assert_eq!(ppm::read_path(&path).unwrap(), img);
}

#[test]
fn ppm_header_comments_are_skipped() {
    let mut bytes = b"P6\n# made by hand\n1 1\n255\n".to_vec();
    bytes.extend_from_slice(&[9, 8, 7]);
    assert_eq!(ppm::read(&mut Cursor::new(bytes)).unwrap().get(0, 0), [9.0, 8.0, 7.0]);
}

#[test]
fn ply_round_trip_keeps_tags_and_colors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ply");
    let cloud = TimedPointCloud::new(
        vec![Point3::new(0.1, -2.0, 3.5), Point3::new(1e-9, 4.0, 7.25)],
        Some(vec![[1, 2, 3], [250, 0, 9]]),
        vec![-1, 6],
        vec![0, 5],
    )
    .unwrap();
    ply::write_path(&path, &cloud).unwrap();
    assert_eq!(ply::read_path(&path).unwrap(), cloud);

    let bare = TimedPointCloud::from_points(vec![Point3::new(1.0, 2.0, 3.0)], 2, 1).unwrap();
    ply::write_path(&path, &bare).unwrap();
    let back = ply::read_path(&path).unwrap();
    assert_eq!(back, bare);
    assert!(back.colors().is_none());
}

#[test]
fn ply_reader_accepts_reordered_properties() {
    let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty int sensor_id\nproperty float z\n\
                property float y\nproperty float x\nproperty int frame_index\nelement face 0\n\
                property list uchar int vertex_indices\nend_header\n4 3 2 1 9\n";
    let cloud = ply::read(&mut Cursor::new(text.as_bytes())).unwrap();
    assert_eq!(cloud.points()[0], Point3::new(1.0, 2.0, 3.0));
    assert_eq!((cloud.frame_index()[0], cloud.sensor_id()[0]), (9, 4));
    let binary = "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n";
    assert!(ply::read(&mut Cursor::new(binary.as_bytes())).is_err());
}

#[test]
fn missing_file_reports_path() {
    let err = pfm::read_path(std::path::Path::new("/nonexistent/x.pfm")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/x.pfm"));
}
