//! ASCII PLY point clouds with `x y z`, optional `red green blue`, and the integer
//! properties `frame_index` and `sensor_id`.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::geometry::TimedPointCloud;

const FORMAT: &str = "PLY";

pub fn write<W: Write>(out: &mut W, cloud: &TimedPointCloud) -> Result<()> {
    writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", cloud.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    if cloud.colors().is_some() {
        writeln!(out, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    writeln!(out, "property int frame_index\nproperty int sensor_id\nend_header")?;
    for i in 0..cloud.len() {
        let p = cloud.points()[i];
        write!(out, "{} {} {}", p.x, p.y, p.z)?;
        if let Some(c) = cloud.colors() {
            write!(out, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
        }
        writeln!(out, " {} {}", cloud.frame_index()[i], cloud.sensor_id()[i])?;
    }
    out.flush()?;
    Ok(())
}

struct Element {
    name: String,
    count: usize,
    props: Vec<String>,
}

pub fn read<R: BufRead>(input: &mut R) -> Result<TimedPointCloud> {
    let mut lines = input.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::format(FORMAT, "unexpected end of file"))?
            .map_err(Error::from)
    };

    if next_line()?.trim() != "ply" {
        return Err(Error::format(FORMAT, "missing `ply` magic"));
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let line = next_line()?;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(Error::format(FORMAT, "only ascii PLY is supported"));
                }
            }
            Some("element") => {
                let name = tok.next().unwrap_or_default().to_string();
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::format(FORMAT, format!("bad element line `{line}`")))?;
                elements.push(Element {
                    name,
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let rest: Vec<&str> = tok.collect();
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::format(FORMAT, "property before element"))?;
                if rest.first() == Some(&"list") {
                    if el.name == "vertex" {
                        return Err(Error::format(FORMAT, "list properties on vertices"));
                    }
                    el.props.push(String::new());
                } else {
                    let name = rest
                        .get(1)
                        .ok_or_else(|| Error::format(FORMAT, format!("bad property `{line}`")))?;
                    el.props.push(name.to_string());
                }
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::format(FORMAT, format!("unknown header keyword `{other}`")))
            }
        }
    }

    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut frames = Vec::new();
    let mut sensors = Vec::new();
    let mut has_color = false;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                next_line()?;
            }
            continue;
        }
        let find = |n: &str| el.props.iter().position(|p| p == n);
        let (Some(ix), Some(iy), Some(iz)) = (find("x"), find("y"), find("z")) else {
            return Err(Error::format(FORMAT, "vertex element lacks x, y, z"));
        };
        let rgb = match (find("red"), find("green"), find("blue")) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        has_color = rgb.is_some();
        let (i_frame, i_sensor) = (find("frame_index"), find("sensor_id"));
        for _ in 0..el.count {
            let line = next_line()?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(FORMAT, format!("bad vertex line `{line}`")))?;
            if vals.len() < el.props.len() {
                return Err(Error::format(FORMAT, format!("short vertex line `{line}`")));
            }
            points.push(Point3::new(vals[ix], vals[iy], vals[iz]));
            if let Some(idx) = rgb {
                colors.push(idx.map(|i| vals[i].clamp(0.0, 255.0) as u8));
            }
            frames.push(i_frame.map_or(0, |i| vals[i] as i32));
            sensors.push(i_sensor.map_or(0, |i| vals[i] as i32));
        }
    }
    TimedPointCloud::new(points, has_color.then_some(colors), frames, sensors)
}

pub fn write_path(path: &Path, cloud: &TimedPointCloud) -> Result<()> {
    write(&mut super::create(path)?, cloud)
}

pub fn read_path(path: &Path) -> Result<TimedPointCloud> {
    read(&mut super::open(path)?)
}
