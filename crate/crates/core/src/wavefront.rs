//! Surfel extraction from a single directional filter response.
//!
//! Pixels whose response modulus reaches a threshold are grouped by
//! single-linkage clustering; each cluster is collapsed onto its midline
//! along the filter direction, and the midline is resampled into surfels.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filters::{apply_directional_filter, FilterParams};
use crate::geom::{wrap_to, Vec2};
use crate::grid::{inverse_transform_with, Convention, ImageGrid, SpectralGrid};

/// Sign of the intensity change across an edge.
///
/// Thin lines and sub-pixel gaps between two regions of similar intensity
/// have no single orientation; they are `Ambiguous`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Intensity decreases along `+θ`.
    Falling,
    /// Intensity increases along `+θ`.
    Rising,
    Ambiguous,
}

impl Polarity {
    pub fn flipped(self) -> Polarity {
        match self {
            Polarity::Falling => Polarity::Rising,
            Polarity::Rising => Polarity::Falling,
            Polarity::Ambiguous => Polarity::Ambiguous,
        }
    }
}

/// A smooth, real reconstruction of the scene used to read the polarity of
/// an edge from the intensities on either side of it.
///
/// The phase of a directional filter response is no help here: at pixel
/// centres it rotates by a couple of radians per pixel of offset from the
/// edge, so it does not survive the half-pixel errors of the midline.
#[derive(Debug, Clone)]
pub struct PolarityProbe {
    image: ImageGrid,
    /// Distance of the two side samples from the surfel.
    reach: f64,
}

impl PolarityProbe {
    /// Low-pass the data with a Hann taper out to `k_max` and invert it.
    pub fn new(grid: &SpectralGrid, k_max: f64) -> Self {
        let k_max = k_max.min(grid.k_max());
        let tapered = grid.multiplied_by(|o| {
            let k = grid.frequency_at(o).norm();
            if k >= k_max {
                0.0
            } else {
                (0.5 * PI * k / k_max).cos().powi(2)
            }
        });
        let image = inverse_transform_with(&tapered, Convention::Calibrated);
        let reach = image.pixel();
        PolarityProbe { image, reach }
    }

    /// Bilinear interpolation of the real part, periodic in both axes.
    pub fn value(&self, x: Vec2) -> f64 {
        let n = self.image.side();
        let h = self.image.pixel();
        let (u, v) = (x.x / h - 0.5, x.y / h - 0.5);
        let (i0, j0) = (u.floor(), v.floor());
        let (fu, fv) = (u - i0, v - j0);
        let wrap = |k: f64| (k as i64).rem_euclid(n as i64) as usize;
        let g = |di: f64, dj: f64| self.image.at(wrap(i0 + di), wrap(j0 + dj)).re;
        (1.0 - fu) * (1.0 - fv) * g(0.0, 0.0)
            + fu * (1.0 - fv) * g(1.0, 0.0)
            + (1.0 - fu) * fv * g(0.0, 1.0)
            + fu * fv * g(1.0, 1.0)
    }

    /// Compare the intensity a couple of pixels to either side of `x` along
    /// `theta`. The edge is ambiguous when the two sides agree better than
    /// the centre agrees with their mean, as across a thin gap.
    pub fn polarity(&self, x: Vec2, theta: f64) -> Polarity {
        let d = Vec2::from_angle(theta) * self.reach;
        let (plus, minus, centre) = (self.value(x + d), self.value(x - d), self.value(x));
        let step = plus - minus;
        let dip = centre - 0.5 * (plus + minus);
        if step.abs() <= 2.0 * dip.abs() || step == 0.0 {
            Polarity::Ambiguous
        } else if step < 0.0 {
            Polarity::Falling
        } else {
            Polarity::Rising
        }
    }
}

/// A wavefront sample: a position and the unoriented edge normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Surfel {
    pub position: Vec2,
    /// Normal direction in `[0, π)`.
    pub theta: f64,
    /// Response modulus at the sample.
    pub strength: f64,
    pub polarity: Polarity,
}

impl Surfel {
    /// Build a surfel, wrapping the direction to `[0, π)` (the polarity
    /// flips when the direction is reversed) and clamping the position into
    /// the unit square.
    pub fn new(position: Vec2, theta: f64, strength: f64, polarity: Polarity) -> Surfel {
        let t = wrap_to(theta, 2.0 * PI);
        let (theta, polarity) = if t >= PI { (wrap_to(t - PI, PI), polarity.flipped()) } else { (t, polarity) };
        let position = Vec2::new(position.x.clamp(0.0, 1.0), position.y.clamp(0.0, 1.0));
        Surfel { position, theta, strength: strength.max(0.0), polarity }
    }

    /// Unit normal at angle `theta`.
    pub fn normal(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    /// Unit tangent (normal turned a quarter counterclockwise).
    pub fn tangent(&self) -> Vec2 {
        self.normal().perp()
    }

    /// Direction in which the intensity falls, if known.
    pub fn descent(&self) -> Option<Vec2> {
        match self.polarity {
            Polarity::Falling => Some(self.normal()),
            Polarity::Rising => Some(-self.normal()),
            Polarity::Ambiguous => None,
        }
    }
}

/// Pixel index `(i, j)`, `i` along x.
pub type Pixel = (usize, usize);

/// A connected group of above-threshold pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Members in lexicographic order.
    pub members: Vec<Pixel>,
    /// `(i_min, j_min, i_max, j_max)`.
    pub bbox: (usize, usize, usize, usize),
    pub theta: f64,
}

/// How the threshold of a response image is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// A fixed value.
    Absolute(f64),
    /// A fraction of the image's largest modulus.
    Fraction(f64),
    /// The larger of a theoretical value and a fraction of the maximum.
    Theory { value: f64, fraction: f64 },
}

impl Threshold {
    /// The numeric threshold for `image`; `None` for an all-zero image under
    /// a relative rule.
    pub fn resolve(&self, image: &ImageGrid) -> Option<f64> {
        let max = image.max_magnitude();
        let tau = match *self {
            Threshold::Absolute(t) => t,
            Threshold::Fraction(q) => q * max,
            Threshold::Theory { value, fraction } => value.max(fraction * max),
        };
        (tau > 0.0).then_some(tau)
    }
}

/// All pixels whose modulus is at least `tau`, in raster order (`i` outer).
pub fn threshold_set(image: &ImageGrid, tau: f64) -> Result<Vec<Pixel>> {
    if !(tau > 0.0) {
        return Err(Error::param(format!("threshold must be positive, got {tau}")));
    }
    let n = image.side();
    Ok((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| image.at(i, j).norm() >= tau).collect())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Keep the smaller index as root so roots are canonical.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage components: points closer than or at `radius` are joined.
///
/// Each component lists point indices in increasing order; components are
/// ordered by their smallest index.
pub fn single_linkage(points: &[Vec2], radius: f64) -> Vec<Vec<usize>> {
    if points.is_empty() {
        return Vec::new();
    }
    let cell = radius.max(f64::MIN_POSITIVE);
    let key = |p: Vec2| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (idx, &p) in points.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(idx);
    }
    let mut uf = UnionFind::new(points.len());
    let r2 = radius * radius;
    for (idx, &p) in points.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(cx + dx, cy + dy)) {
                    for &other in list {
                        if other > idx && (points[other] - p).norm_sq() <= r2 {
                            uf.union(idx, other);
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for idx in 0..points.len() {
        let root = uf.find(idx);
        groups.entry(root).or_default().push(idx);
    }
    // Roots are component minima, so BTreeMap order is the required order.
    groups.into_values().collect()
}

/// Cluster pixels of an `side × side` image with linkage `radius` (in
/// unit-square lengths). The input order is preserved inside clusters, so
/// raster-ordered input gives lexicographically ordered members.
pub fn cluster(pixels: &[Pixel], side: usize, radius: f64, theta: f64) -> Vec<Cluster> {
    let h = 1.0 / side as f64;
    let pts: Vec<Vec2> = pixels.iter().map(|&(i, j)| Vec2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)).collect();
    single_linkage(&pts, radius)
        .into_iter()
        .map(|idx| {
            let members: Vec<Pixel> = idx.iter().map(|&k| pixels[k]).collect();
            let bbox = members
                .iter()
                .fold((usize::MAX, usize::MAX, 0, 0), |b, &(i, j)| (b.0.min(i), b.1.min(j), b.2.max(i), b.3.max(j)));
            Cluster { members, bbox, theta }
        })
        .collect()
}

/// Midline runs of a point set: indices grouped by tangent bucket and split
/// where the normal coordinate jumps by more than `gap`.
fn midline_runs(points: &[Vec2], theta: f64, pitch: f64, gap: f64) -> Vec<(Vec2, Vec<usize>)> {
    let nrm = Vec2::from_angle(theta);
    let tan = nrm.perp();
    let mut buckets: BTreeMap<i64, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for (idx, &p) in points.iter().enumerate() {
        let (u, v) = (p.dot(tan), p.dot(nrm));
        buckets.entry((u / pitch).round() as i64).or_default().push((u, v, idx));
    }
    let mut out = Vec::new();
    for (_, mut entries) in buckets {
        entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
        let mut start = 0;
        for k in 1..=entries.len() {
            if k == entries.len() || entries[k].1 - entries[k - 1].1 > gap {
                let run = &entries[start..k];
                let u = run.iter().map(|e| e.0).sum::<f64>() / run.len() as f64;
                let v = 0.5 * (run[0].1 + run[run.len() - 1].1);
                out.push((tan * u + nrm * v, run.iter().map(|e| e.2).collect()));
                start = k;
            }
        }
    }
    out
}

/// Midline of a point set along the normal direction `theta`: one point per
/// tangent bucket of width `pitch` (and per run, where the normal
/// coordinate has a gap above `gap`), ordered by tangent coordinate.
pub fn midline(points: &[Vec2], theta: f64, pitch: f64, gap: f64) -> Vec<Vec2> {
    midline_runs(points, theta, pitch, gap).into_iter().map(|(p, _)| p).collect()
}

/// Keep a subsequence of an ordered polyline whose consecutive spacing does
/// not exceed `eps` unless the input itself has a larger gap there.
/// The first and last points are always kept.
pub fn subsample_indices(points: &[Vec2], eps: f64) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut keep = vec![0];
    for j in 1..points.len() {
        let last = points[*keep.last().expect("nonempty")];
        let is_last = j + 1 == points.len();
        if is_last || last.dist(points[j + 1]) > eps {
            keep.push(j);
        }
    }
    keep
}

/// Tuning of surfel extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub threshold: Threshold,
    /// Linkage radius (unit-square lengths).
    pub radius: f64,
    /// Maximum spacing of emitted surfels along a midline.
    pub eps: f64,
    pub convention: Convention,
}

impl ExtractOptions {
    /// Defaults for grid exponent `m`: 85% of the maximum response, 1.5-pixel
    /// linkage, one-pixel spacing, theorem-raw scaling.
    ///
    /// The high fraction is what keeps the normal direction accurate: along
    /// a curved edge the response falls off only slowly as the local normal
    /// turns away from `θ`, so a low threshold admits arcs well outside the
    /// filter's angular window.
    pub fn for_grid(m: u32) -> Self {
        let h = 1.0 / (1u64 << m) as f64;
        ExtractOptions { threshold: Threshold::Fraction(0.85), radius: 1.5 * h, eps: h, convention: Convention::TheoremRaw }
    }
}

/// Linkage radius from a theoretical resolution: at least 1.5 pixels and
/// at most 4 pixels.
pub fn linkage_radius(resolution: f64, m: u32) -> f64 {
    let h = 1.0 / (1u64 << m) as f64;
    let r = if resolution.is_finite() { resolution.max(1.5 * h) } else { 4.0 * h };
    r.min(4.0 * h)
}

/// Surfels from an already filtered image. Without a probe every surfel
/// is `Ambiguous`.
pub fn surfels_from_image(
    image: &ImageGrid,
    theta: f64,
    opts: &ExtractOptions,
    probe: Option<&PolarityProbe>,
) -> Result<Vec<Surfel>> {
    if !(opts.radius > 0.0) || !(opts.eps > 0.0) {
        return Err(Error::param("linkage radius and sample spacing must be positive"));
    }
    let Some(tau) = opts.threshold.resolve(image) else {
        return Ok(Vec::new());
    };
    let z = threshold_set(image, tau)?;
    let side = image.side();
    let h = image.pixel();
    let mut out = Vec::new();
    for c in cluster(&z, side, opts.radius, theta) {
        let pts: Vec<Vec2> = c.members.iter().map(|&(i, j)| image.center(i, j)).collect();
        let runs = midline_runs(&pts, theta, h, 2.0 * h);
        let mids: Vec<Vec2> = runs.iter().map(|r| r.0).collect();
        for k in subsample_indices(&mids, opts.eps) {
            let (pos, members) = &runs[k];
            let &peak = members
                .iter()
                .max_by(|&&a, &&b| {
                    let (pa, pb) = (c.members[a], c.members[b]);
                    image.at(pa.0, pa.1).norm().total_cmp(&image.at(pb.0, pb.1).norm())
                })
                .expect("runs are nonempty");
            let (pi, pj) = c.members[peak];
            let polarity = probe.map_or(Polarity::Ambiguous, |p| p.polarity(*pos, theta));
            out.push(Surfel::new(*pos, theta, image.at(pi, pj).norm(), polarity));
        }
    }
    Ok(out)
}

/// Filter `grid` in direction `theta` and extract surfels.
pub fn extract_surfels(grid: &SpectralGrid, theta: f64, params: &FilterParams, opts: &ExtractOptions) -> Result<Vec<Surfel>> {
    let image = apply_directional_filter(grid, theta, params, opts.convention)?;
    let probe = PolarityProbe::new(grid, params.k_max);
    surfels_from_image(&image, theta, opts, Some(&probe))
}
