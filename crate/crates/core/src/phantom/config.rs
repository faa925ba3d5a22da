//! Line-oriented scene description.
//!
//! ```text
//! # comment
//! ellipse  cx cy a b phi amp
//! gauss    cx cy sigma amp
//! polyline amp x1 y1 x2 y2 x3 y3 ...
//! ```

use std::fmt::Write;

use super::{Ellipse, Gaussian, PhantomSpec, PolyCurve};
use crate::error::{Error, Result};
use crate::geom::Vec2;

pub(super) fn parse(text: &str, source: &str) -> Result<PhantomSpec> {
    let mut ellipses = Vec::new();
    let mut texture = Vec::new();
    let mut polys = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::Config { path: source.to_string(), line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().expect("non-empty line has a token");
        let nums =
            tokens.map(|t| t.parse::<f64>().map_err(|_| err(format!("'{t}' is not a number")))).collect::<Result<Vec<f64>>>()?;
        match keyword {
            "ellipse" => {
                if nums.len() != 6 {
                    return Err(err(format!("ellipse takes 6 numbers (cx cy a b phi amp), got {}", nums.len())));
                }
                let e = Ellipse::new(Vec2::new(nums[0], nums[1]), nums[2], nums[3], nums[4], nums[5])
                    .map_err(|e| err(e.to_string()))?;
                ellipses.push(e);
            }
            "gauss" => {
                if nums.len() != 4 {
                    return Err(err(format!("gauss takes 4 numbers (cx cy sigma amp), got {}", nums.len())));
                }
                let g = Gaussian::new(Vec2::new(nums[0], nums[1]), nums[2], nums[3]).map_err(|e| err(e.to_string()))?;
                texture.push(g);
            }
            "polyline" => {
                if nums.len() < 7 || nums.len() % 2 == 0 {
                    return Err(err("polyline takes an amplitude followed by at least three x y pairs".into()));
                }
                let verts = nums[1..].chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                polys.push(PolyCurve::new(verts, nums[0]).map_err(|e| err(e.to_string()))?);
            }
            other => return Err(err(format!("unknown keyword '{other}'"))),
        }
    }
    PhantomSpec::new(ellipses, texture, polys).map_err(|e| Error::Config {
        path: source.to_string(),
        line: 0,
        msg: e.to_string(),
    })
}

pub(super) fn render(spec: &PhantomSpec) -> String {
    let mut out = String::new();
    for e in spec.ellipses() {
        let _ = writeln!(out, "ellipse {} {} {} {} {} {}", e.center.x, e.center.y, e.a, e.b, e.phi, e.amplitude);
    }
    for g in spec.texture() {
        let _ = writeln!(out, "gauss {} {} {} {}", g.center.x, g.center.y, g.sigma, g.amplitude);
    }
    for p in spec.polycurves() {
        let _ = write!(out, "polyline {}", p.amplitude);
        for v in p.vertices() {
            let _ = write!(out, " {} {}", v.x, v.y);
        }
        out.push('\n');
    }
    out
}
