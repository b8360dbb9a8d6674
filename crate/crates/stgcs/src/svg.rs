//! Top-view figures.
//!
//! Regions are drawn as `<polygon>`s, each obstacle as a single `<path>`
//! (one subpath per drawn time), and the trajectory as one `<path>`.

use std::fmt::Write;

use stgcs_core::geometry::{extrude_obstacle, ConvexPolygon2D, HPolytope, Point};

use crate::output::{OutputError, SolutionFile};
use crate::scenario::ObstacleSpec;

const SIZE: f64 = 600.0;
const PAD: f64 = 20.0;
const PALETTE: [&str; 8] = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5"];

struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (PAD + (x - self.min[0]) * self.scale, self.height - PAD - (y - self.min[1]) * self.scale)
    }

    fn points(&self, pts: &[[f64; 2]]) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.px(p[0], p[1]);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.2},{y:.2}");
        }
        s
    }

    fn subpath(&self, pts: &[[f64; 2]], closed: bool) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.px(p[0], p[1]);
            let _ = write!(s, "{}{x:.2} {y:.2} ", if i == 0 { 'M' } else { 'L' });
        }
        if closed {
            s.push('Z');
        }
        s.trim_end().to_string()
    }
}

// xy outline of a region, optionally sliced at time `t` first
fn region_outline(h: &HPolytope, t: Option<f64>) -> Vec<[f64; 2]> {
    let sliced;
    let h = match (h.dim(), t) {
        (3, Some(t)) => match h.slice_last(t) {
            Some(s) => {
                sliced = s;
                &sliced
            }
            None => return Vec::new(),
        },
        _ => h,
    };
    let mut pts: Vec<[f64; 2]> = h.vertices().iter().map(|p| [p.x(), p.y()]).collect();
    hull_ccw(&mut pts);
    pts
}

fn hull_ccw(pts: &mut Vec<[f64; 2]>) {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    if pts.len() < 3 {
        return;
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    let forward: Vec<[f64; 2]> = pts.clone();
    let backward: Vec<[f64; 2]> = pts.iter().rev().copied().collect();
    for chain in [forward, backward] {
        let start = hull.len();
        for p in &chain {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 1e-12 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    *pts = hull;
}

fn obstacle_outlines(o: &ObstacleSpec, time: (f64, f64), at: Option<f64>) -> Vec<Vec<[f64; 2]>> {
    let end = o.vertices_end.clone().unwrap_or_else(|| o.vertices_start.clone());
    match at {
        None if o.is_static() => vec![o.vertices_start.clone()],
        None => vec![o.vertices_start.clone(), end],
        Some(t) => {
            let poly = |v: &[[f64; 2]]| ConvexPolygon2D::new(v.iter().map(|p| Point::xy(p[0], p[1])).collect());
            let (Ok(a), Ok(b)) = (poly(&o.vertices_start), poly(&end)) else { return Vec::new() };
            match extrude_obstacle(a, b, time.0, time.1).and_then(|s| s.cross_section(t.clamp(time.0, time.1))) {
                Ok(c) => vec![c.vertices().iter().map(|p| [p.x(), p.y()]).collect()],
                Err(_) => Vec::new(),
            }
        }
    }
}

/// SVG document for a solution. With `cross_section`, regions and obstacles
/// are shown at that time instead of over the whole horizon.
pub fn render(file: &SolutionFile, cross_section: Option<f64>) -> Result<String, OutputError> {
    let (lo, hi) = (file.bounds.min, file.bounds.max);
    let scale = (SIZE - 2.0 * PAD) / (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let width = 2.0 * PAD + (hi[0] - lo[0]) * scale;
    let height = 2.0 * PAD + (hi[1] - lo[1]) * scale;
    let frame = Frame { min: lo, scale, height };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{width:.2}" height="{height:.2}" fill="white"/>"#);
    let bounds = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1"/>"#, frame.points(&bounds));

    let _ = writeln!(s, r##"<g id="regions" fill-opacity="0.45" stroke="#555" stroke-width="0.5">"##);
    for (i, r) in file.graph.regions.iter().enumerate() {
        let Some(h) = r.to_polytope() else { continue };
        let outline = region_outline(&h, cross_section);
        if outline.len() >= 3 {
            let _ = writeln!(s, r#"<polygon points="{}" fill="{}"/>"#, frame.points(&outline), PALETTE[i % PALETTE.len()]);
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="obstacles" fill="black" fill-opacity="0.6" fill-rule="nonzero">"#);
    for o in &file.obstacles {
        let d: Vec<String> = obstacle_outlines(o, (file.time.start, file.time.end), cross_section)
            .iter()
            .map(|p| frame.subpath(p, true))
            .collect();
        let _ = writeln!(s, r#"<path d="{}"/>"#, d.join(" "));
    }
    let _ = writeln!(s, "</g>");

    let traj = file.trajectory()?;
    let n = 40 * traj.len();
    let pts: Vec<[f64; 2]> = (0..=n)
        .map(|k| {
            let r = traj.len() as f64 * k as f64 / n as f64;
            let p = traj.eval(r.min(traj.len() as f64))?;
            Ok([p.x(), p.y()])
        })
        .collect::<Result<_, OutputError>>()?;
    let _ = writeln!(
        s,
        r##"<path id="trajectory" d="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##,
        frame.subpath(&pts, false)
    );
    for (p, color) in [(traj.start(), "green"), (traj.end(), "red")] {
        let (x, y) = frame.px(p.x(), p.y());
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{color}"/>"#);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
