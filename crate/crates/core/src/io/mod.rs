//! File formats: k-space samples, surfel and curve tables, 16-bit edge
//! maps and SVG overlays.
//!
//! Every writer has a reader counterpart (except SVG) so that artifacts can
//! be checked in tests and reloaded by the command line tool.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::{ImageGrid, SpectralGrid};
use crate::segmentation::SegmentedCurve;
use crate::wavefront::{Polarity, Surfel};

const KSP_MAGIC: &str = "KSP1";

fn format_err(format: &'static str, msg: impl Into<String>) -> Error {
    Error::Format { format, msg: msg.into() }
}

/// Write k-space samples: a text header line `KSP1 m=<m>` followed by the
/// samples as little-endian `f64` pairs `(re, im)`, row-major over the
/// frequency index.
pub fn write_ksp<W: Write>(mut w: W, grid: &SpectralGrid) -> std::io::Result<()> {
    writeln!(w, "{KSP_MAGIC} m={}", grid.m())?;
    let mut buf = Vec::with_capacity(grid.samples().len() * 16);
    for z in grid.samples() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Read the format written by [`write_ksp`]. Trailing bytes are an error.
pub fn read_ksp<R: Read>(r: R) -> Result<SpectralGrid> {
    let mut r = BufReader::new(r);
    let mut header = Vec::new();
    r.read_until(b'\n', &mut header).map_err(|e| format_err("KSP1", e.to_string()))?;
    let header = String::from_utf8(header).map_err(|_| format_err("KSP1", "header is not UTF-8"))?;
    let mut parts = header.trim_end().split(' ');
    if parts.next() != Some(KSP_MAGIC) {
        return Err(format_err("KSP1", "missing KSP1 magic"));
    }
    let m: u32 = parts
        .next()
        .and_then(|p| p.strip_prefix("m="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err("KSP1", "header must read `KSP1 m=<int>`"))?;
    if parts.next().is_some() {
        return Err(format_err("KSP1", "unexpected fields in header"));
    }
    // Validate the exponent before allocating.
    SpectralGrid::new(m)?;
    let count = 1usize << (2 * m);
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| format_err("KSP1", e.to_string()))?;
    if body.len() != count * 16 {
        return Err(format_err("KSP1", format!("expected {} data bytes for m={m}, found {}", count * 16, body.len())));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let samples = body.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    SpectralGrid::from_samples(m, samples)
}

pub fn save_ksp(path: &Path, grid: &SpectralGrid) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_ksp(&mut w, grid).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_ksp(path: &Path) -> Result<SpectralGrid> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ksp(file)
}

/// Surfel table with header `x,y,theta,strength`; numbers carry 17
/// significant digits so they read back exactly.
pub fn surfels_csv(surfels: &[Surfel]) -> String {
    let mut out = String::from("x,y,theta,strength\n");
    for s in surfels {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.position.x, s.position.y, s.theta, s.strength);
    }
    out
}

/// Parse a surfel table. Polarity is not stored, so it reads back as
/// `Ambiguous`.
pub fn parse_surfels_csv(text: &str) -> Result<Vec<Surfel>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("x,y,theta,strength") {
        return Err(format_err("surfel CSV", "header must be `x,y,theta,strength`"));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format_err("surfel CSV", format!("line {}: {e}", i + 2)))?;
            if v.len() != 4 {
                return Err(format_err("surfel CSV", format!("line {}: expected 4 fields", i + 2)));
            }
            Ok(Surfel { position: Vec2::new(v[0], v[1]), theta: v[2], strength: v[3], polarity: Polarity::Ambiguous })
        })
        .collect()
}

/// Curve table `curve_id,seq,x,y` listing the dense points of each curve.
/// A closed curve ends with a repeat of its first point.
pub fn curves_csv(curves: &[SegmentedCurve]) -> String {
    let mut out = String::from("curve_id,seq,x,y\n");
    for (id, c) in curves.iter().enumerate() {
        for (seq, p) in c.dense.iter().enumerate() {
            let _ = writeln!(out, "{id},{seq},{:.16e},{:.16e}", p.x, p.y);
        }
    }
    out
}

/// Parse a curve table into one point list per curve id (ids must be
/// contiguous from zero and sequences increasing).
pub fn parse_curves_csv(text: &str) -> Result<Vec<Vec<Vec2>>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("curve_id,seq,x,y") {
        return Err(format_err("curve CSV", "header must be `curve_id,seq,x,y`"));
    }
    let mut out: Vec<Vec<Vec2>> = Vec::new();
    for (i, l) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |msg: &str| format_err("curve CSV", format!("line {}: {msg}", i + 2));
        let f: Vec<&str> = l.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let id: usize = f[0].parse().map_err(|_| bad("bad curve id"))?;
        let seq: usize = f[1].parse().map_err(|_| bad("bad sequence number"))?;
        let x: f64 = f[2].parse().map_err(|_| bad("bad x"))?;
        let y: f64 = f[3].parse().map_err(|_| bad("bad y"))?;
        if id == out.len() {
            out.push(Vec::new());
        } else if id + 1 != out.len() {
            return Err(bad("curve ids must be contiguous"));
        }
        let curve = out.last_mut().expect("pushed above");
        if seq != curve.len() {
            return Err(bad("sequence numbers must count up from 0"));
        }
        curve.push(Vec2::new(x, y));
    }
    Ok(out)
}

/// A 16-bit grey-level raster with the factor that maps grey levels back to
/// magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm16 {
    pub side: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
    /// Magnitude represented by one grey level.
    pub scale: f64,
}

/// Map the modulus of `image` linearly onto `0..=65535` (the largest
/// modulus becomes 65535). The top raster row is the largest `y`.
pub fn edge_map(image: &ImageGrid) -> Pgm16 {
    let n = image.side();
    let max = image.max_magnitude();
    let scale = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let mut pixels = Vec::with_capacity(n * n);
    for r in 0..n {
        let j = n - 1 - r;
        for i in 0..n {
            pixels.push((image.at(i, j).norm() / scale).round().min(65535.0) as u16);
        }
    }
    Pgm16 { side: n, pixels, scale }
}

impl Pgm16 {
    /// Binary P5 encoding with maxval 65535 (big-endian samples).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.side, self.side).into_bytes();
        for p in &self.pixels {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out
    }

    /// Sidecar text recording the grey-level scale.
    pub fn sidecar(&self) -> String {
        format!("scale {:.16e}\nmax {:.16e}\n", self.scale, self.scale * 65535.0)
    }

    /// Decode a P5 file with maxval 65535; `scale` is left at 1.
    pub fn from_bytes(bytes: &[u8]) -> Result<Pgm16> {
        let bad = |m: &str| format_err("PGM", m);
        // Header: magic, width, height, maxval, each followed by whitespace.
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?.to_string());
        }
        pos += 1;
        if fields[0] != "P5" || fields[3] != "65535" {
            return Err(bad("only 16-bit P5 is supported"));
        }
        let w: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
        let h: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
        if w != h || bytes.len() < pos || bytes.len() - pos != 2 * w * h {
            return Err(bad("expected a square image with 2 bytes per pixel"));
        }
        let pixels = bytes[pos..].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        Ok(Pgm16 { side: w, pixels, scale: 1.0 })
    }
}

/// Write `<path>` as a 16-bit PGM and `<path>.scale` as its sidecar.
pub fn save_edge_map(path: &Path, image: &ImageGrid) -> Result<()> {
    let pgm = edge_map(image);
    fs::write(path, pgm.to_bytes()).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, pgm.sidecar()).map_err(|e| Error::io(side, e))
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale");
    s.into()
}

/// SVG overlay of curves (and optionally surfels) on a grey backdrop. The
/// unit square is drawn `size` user units wide with `y` pointing up.
pub fn overlay_svg(backdrop: Option<&Pgm16>, curves: &[SegmentedCurve], surfels: &[Surfel], size: f64) -> String {
    let mut out = String::new();
    let _ =
        writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(out, r#"<rect width="{size}" height="{size}" fill="black"/>"#);
    if let Some(img) = backdrop {
        let cell = size / img.side as f64;
        let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
        for (k, &p) in img.pixels.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let (r, c) = (k / img.side, k % img.side);
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="white" fill-opacity="{:.4}"/>"#,
                c as f64 * cell,
                r as f64 * cell,
                p as f64 / 65535.0
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let map = |p: Vec2| (p.x * size, (1.0 - p.y) * size);
    for c in curves {
        let pts: Vec<String> = c
            .dense
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let colour = if c.closed { "red" } else { "orange" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="{:.3}"/>"#,
            pts.join(" "),
            size / 400.0
        );
    }
    for s in surfels {
        let (x, y) = map(s.position);
        let t = s.tangent() * (size / 128.0);
        let _ = writeln!(
            out,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="cyan" stroke-width="{:.3}"/>"#,
            x - t.x,
            y + t.y,
            x + t.x,
            y - t.y,
            size / 600.0
        );
    }
    out.push_str("</svg>\n");
    out
}
