//! From pooled surfels to closed curves.
//!
//! Surfels from every direction of the filter bank are pooled and merged,
//! linked into a polygonal figure in which each vertex has at most two
//! neighbours, and each cycle is smoothed by cubic Hermite interpolation
//! using the surfel tangents.
//!
//! The linking rule is a greedy, shortest-edge-first matching restricted to
//! *consistent* pairs: the chord must run roughly along both tangents, the
//! tangents must roughly agree, and when both surfels carry a polarity
//! their intensity-descent directions must agree. That last test is what
//! keeps two facing edges of neighbouring regions apart even when they are
//! closer than a pixel.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filters::{apply_directional_filter, FilterParams};
use crate::geom::{axial_diff, Vec2};
use crate::grid::SpectralGrid;
use crate::wavefront::{surfels_from_image, ExtractOptions, Polarity, PolarityProbe, Surfel};

/// Noise bounds on surfel data: position `ζ`, angle `ξ`, maximum sample
/// spacing `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBounds {
    pub zeta: f64,
    pub xi: f64,
    pub eps: f64,
}

impl NoiseBounds {
    pub fn new(zeta: f64, xi: f64, eps: f64) -> Result<Self> {
        if !(zeta >= 0.0 && xi >= 0.0 && eps > 0.0) || ![zeta, xi, eps].iter().all(|v| v.is_finite()) {
            return Err(Error::param("noise bounds need finite zeta, xi >= 0 and eps > 0"));
        }
        Ok(NoiseBounds { zeta, xi, eps })
    }

    /// Smallest curve separation for which linking is guaranteed:
    /// `4ζ + 4εξ + 2.1κ̄ε²`.
    pub fn separation_bound(&self, kappa_bar: f64) -> f64 {
        4.0 * self.zeta + 4.0 * self.eps * self.xi + 2.1 * kappa_bar * self.eps * self.eps
    }

    /// Minimum spacing between adjacent samples, `(1 + 2^{3/2})(2ξε + ζ)`.
    pub fn min_spacing(&self) -> f64 {
        (1.0 + 2.0 * SQRT_2) * (2.0 * self.xi * self.eps + self.zeta)
    }

    /// Check the separation and sampling conditions for a scene with
    /// separation `delta` and maximum curvature `kappa_bar`.
    pub fn check(&self, kappa_bar: f64, delta: f64) -> Result<()> {
        let sep = self.separation_bound(kappa_bar);
        if !(delta > sep) {
            return Err(Error::param(format!("curve separation {delta:.5} does not exceed the bound {sep:.5}")));
        }
        if kappa_bar > 0.0 && !(self.eps < 1.0 / (kappa_bar * SQRT_2)) {
            return Err(Error::param(format!(
                "sample spacing {} must be below 1/(κ̄√2) = {}",
                self.eps,
                1.0 / (kappa_bar * SQRT_2)
            )));
        }
        Ok(())
    }
}

/// Tuning of the linking step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOptions {
    pub bounds: NoiseBounds,
    /// Curvature bound used in the tangent-agreement test.
    pub kappa_bar: f64,
    /// The chord may deviate from each tangent line by at most
    /// `π/2 - chord_margin`.
    pub chord_margin: f64,
    /// Smallest vertex count of a cycle.
    pub min_cycle: usize,
    /// After ordinary linking, chain ends may be joined across gaps of up
    /// to `bridge · ε` (one missing stretch of surfels).
    pub bridge: f64,
}

impl LinkOptions {
    pub fn new(bounds: NoiseBounds, kappa_bar: f64) -> Self {
        LinkOptions { bounds, kappa_bar, chord_margin: PI / 6.0, min_cycle: 6, bridge: 2.0 }
    }

    fn max_tangent_gap(&self, len: f64) -> f64 {
        (2.0 * self.bounds.xi + self.kappa_bar * len).min(FRAC_PI_2)
    }
}

/// Merge surfels that lie within `radius` of a stronger surfel with a
/// direction less than `2·alpha` away and a compatible polarity. Each group
/// is replaced by its strength-weighted centroid with the weighted axial
/// mean direction; the strongest member fixes the polarity.
pub fn dedup(surfels: &[Surfel], radius: f64, alpha: f64) -> Vec<Surfel> {
    let mut order: Vec<usize> = (0..surfels.len()).collect();
    order.sort_by(|&a, &b| surfels[b].strength.total_cmp(&surfels[a].strength).then(a.cmp(&b)));
    let mut taken = vec![false; surfels.len()];
    let mut out = Vec::new();
    for (rank, &seed) in order.iter().enumerate() {
        if taken[seed] {
            continue;
        }
        taken[seed] = true;
        let s = surfels[seed];
        let mut group = vec![s];
        for &other in &order[rank + 1..] {
            let o = surfels[other];
            if !taken[other]
                && o.position.dist(s.position) <= radius
                && axial_diff(o.theta, s.theta) < 2.0 * alpha
                && polarity_compatible(&s, &o)
            {
                taken[other] = true;
                group.push(o);
            }
        }
        out.push(merge(&group));
    }
    out
}

fn merge(group: &[Surfel]) -> Surfel {
    let seed = group[0];
    if group.len() == 1 {
        return seed;
    }
    let w: f64 = group.iter().map(|s| s.strength.max(1e-300)).sum();
    let mut pos = Vec2::ZERO;
    let mut doubled = Vec2::ZERO;
    for s in group {
        let ws = s.strength.max(1e-300) / w;
        pos += s.position * ws;
        doubled += Vec2::from_angle(2.0 * s.theta) * ws;
    }
    // Express the mean direction on the seed's side so that the seed's
    // polarity still applies; `Surfel::new` re-wraps consistently.
    let mut theta = 0.5 * doubled.angle();
    if Vec2::from_angle(theta).dot(seed.normal()) < 0.0 {
        theta += PI;
    }
    let strength = group.iter().map(|s| s.strength).fold(0.0, f64::max);
    Surfel::new(pos, theta, strength, seed.polarity)
}

fn polarity_compatible(a: &Surfel, b: &Surfel) -> bool {
    match (a.descent(), b.descent()) {
        (Some(da), Some(db)) => da.dot(db) > 0.0,
        _ => true,
    }
}

/// Drop surfels closer than `spacing` to an already kept, stronger one
/// (strongest first).
pub fn thin(surfels: &[Surfel], spacing: f64) -> Vec<Surfel> {
    let mut order: Vec<usize> = (0..surfels.len()).collect();
    order.sort_by(|&a, &b| surfels[b].strength.total_cmp(&surfels[a].strength).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| surfels[k].position.dist(surfels[i].position) >= spacing) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| surfels[i]).collect()
}

/// Vertices (surfels), undirected edges and spurious flags.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalFigure {
    pub vertices: Vec<Surfel>,
    /// Edges `(a, b)` with `a < b`, in the order they were accepted.
    pub edges: Vec<(usize, usize)>,
    pub spurious: Vec<bool>,
}

/// A connected piece of a figure: vertices in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub closed: bool,
}

impl PolygonalFigure {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Chains and cycles. Chains start at their lower-index end; cycles are
    /// oriented counterclockwise and start at their lowest index. Isolated
    /// vertices are not reported.
    pub fn components(&self) -> Vec<Component> {
        let adj = self.adjacency();
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        // Chains first, from their endpoints.
        for start in 0..n {
            if seen[start] || adj[start].len() != 1 {
                continue;
            }
            let walk = walk_from(&adj, start, adj[start][0], &mut seen);
            out.push(Component { vertices: walk, closed: false });
        }
        for start in 0..n {
            if seen[start] || adj[start].is_empty() {
                continue;
            }
            let mut walk = walk_from(&adj, start, adj[start][0], &mut seen);
            let area: f64 = (0..walk.len())
                .map(|i| {
                    let p = self.vertices[walk[i]].position;
                    let q = self.vertices[walk[(i + 1) % walk.len()]].position;
                    p.cross(q)
                })
                .sum();
            if area < 0.0 {
                walk[1..].reverse();
            }
            out.push(Component { vertices: walk, closed: true });
        }
        out
    }
}

fn walk_from(adj: &[Vec<usize>], start: usize, next: usize, seen: &mut [bool]) -> Vec<usize> {
    let mut walk = vec![start];
    seen[start] = true;
    let (mut prev, mut cur) = (start, next);
    while !seen[cur] {
        seen[cur] = true;
        walk.push(cur);
        let step = adj[cur].iter().copied().find(|&x| x != prev && !seen[x]);
        match step {
            Some(n) => {
                prev = cur;
                cur = n;
            }
            None => break,
        }
    }
    walk
}

/// Whether surfels `a` and `b` may be adjacent samples of one curve.
pub fn consistent(a: &Surfel, b: &Surfel, opts: &LinkOptions) -> bool {
    consistent_within(a, b, opts, opts.bounds.eps)
}

fn consistent_within(a: &Surfel, b: &Surfel, opts: &LinkOptions, max_len: f64) -> bool {
    let d = b.position - a.position;
    let len = d.norm();
    if len == 0.0 || len > max_len {
        return false;
    }
    let chord = d.angle();
    let limit = FRAC_PI_2 - opts.chord_margin;
    axial_diff(chord, a.theta + FRAC_PI_2) < limit
        && axial_diff(chord, b.theta + FRAC_PI_2) < limit
        && axial_diff(a.theta, b.theta) < opts.max_tangent_gap(len.max(opts.bounds.eps))
        && polarity_compatible(a, b)
}

/// Link surfels into a figure of vertex degree at most two.
///
/// Consistent pairs are accepted shortest first while both ends have a free
/// slot and the new edge does not fold back sharply onto an existing one; an edge that
/// would close a cycle is accepted only if the cycle has at least
/// `min_cycle` vertices. Chain ends are then joined across gaps of up to
/// `bridge · ε` under the same rules. Vertices left without an edge are
/// flagged spurious.
pub fn polygonalize(surfels: &[Surfel], opts: &LinkOptions) -> PolygonalFigure {
    let n = surfels.len();
    let eps = opts.bounds.eps;
    // Bucket by ε-cells to find candidate pairs.
    let cell = |p: Vec2| ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    for (i, s) in surfels.iter().enumerate() {
        grid.entry(cell(s.position)).or_default().push(i);
    }
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, s) in surfels.iter().enumerate() {
        let (cx, cy) = cell(s.position);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &j in grid.get(&(cx + dx, cy + dy)).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if j > i && consistent(s, &surfels[j], opts) {
                        cands.push((s.position.dist(surfels[j].position), i, j));
                    }
                }
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut degree = vec![0usize; n];
    // The first neighbour of each vertex; the second edge may not turn back
    // within 60° of the first so that chains do not fold onto themselves.
    let mut first: Vec<Option<usize>> = vec![None; n];
    let p = |k: usize| surfels[k].position;
    let folds = |v: usize, w: usize, first: &[Option<usize>]| {
        first[v].is_some_and(|u| {
            let (a, b) = (p(w) - p(v), p(u) - p(v));
            a.dot(b) > 0.5 * a.norm() * b.norm()
        })
    };
    let mut edges = Vec::new();
    let mut accept = |i: usize, j: usize, degree: &mut [usize], first: &mut [Option<usize>]| {
        if degree[i] >= 2 || degree[j] >= 2 || folds(i, j, first) || folds(j, i, first) {
            return;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj {
            if size[ri] < opts.min_cycle {
                return;
            }
        } else {
            parent[rj] = ri;
            size[ri] += size[rj];
        }
        degree[i] += 1;
        degree[j] += 1;
        first[i].get_or_insert(j);
        first[j].get_or_insert(i);
        edges.push((i, j));
    };
    for &(_, i, j) in &cands {
        accept(i, j, &mut degree, &mut first);
    }
    // Bridge the remaining chain ends, again shortest first.
    let reach = opts.bridge * eps;
    let ends: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut bridges: Vec<(f64, usize, usize)> = Vec::new();
    for (a, &i) in ends.iter().enumerate() {
        for &j in &ends[a + 1..] {
            if consistent_within(&surfels[i], &surfels[j], opts, reach) {
                bridges.push((p(i).dist(p(j)), i, j));
            }
        }
    }
    bridges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in bridges {
        if degree[i] == 1 && degree[j] == 1 {
            accept(i, j, &mut degree, &mut first);
        }
    }
    PolygonalFigure { vertices: surfels.to_vec(), edges, spurious: degree.iter().map(|&d| d == 0).collect() }
}

/// One cubic Hermite piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitePiece {
    pub p0: Vec2,
    pub p1: Vec2,
    /// End tangents, already scaled by the chord length.
    pub m0: Vec2,
    pub m1: Vec2,
}

impl HermitePiece {
    /// Piece between `p0` and `p1` with unit tangents `t0`, `t1` scaled by
    /// the chord length. A zero-length chord is rejected.
    pub fn new(p0: Vec2, p1: Vec2, t0: Vec2, t1: Vec2) -> Result<Self> {
        let chord = p0.dist(p1);
        if !(chord > 1e-15) {
            return Err(Error::InvalidGeometry("Hermite piece with coincident end points".into()));
        }
        Ok(HermitePiece { p0, p1, m0: t0.normalized() * chord, m1: t1.normalized() * chord })
    }

    pub fn eval(&self, t: f64) -> Vec2 {
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        self.p0 * h00 + self.m0 * h10 + self.p1 * h01 + self.m1 * h11
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        let t2 = t * t;
        self.p0 * (6.0 * t2 - 6.0 * t)
            + self.m0 * (3.0 * t2 - 4.0 * t + 1.0)
            + self.p1 * (6.0 * t - 6.0 * t2)
            + self.m1 * (3.0 * t2 - 2.0 * t)
    }
}

/// A reconstructed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedCurve {
    /// Vertex positions in order; for closed curves the first is repeated
    /// at the end.
    pub vertices: Vec<Vec2>,
    pub pieces: Vec<HermitePiece>,
    /// Dense polyline through all pieces.
    pub dense: Vec<Vec2>,
    pub closed: bool,
}

impl SegmentedCurve {
    /// Interpolate an ordered vertex list through `points` and their unit
    /// tangent directions (signs are fixed here to follow the traversal).
    pub fn from_samples(points: &[Vec2], directions: &[Vec2], closed: bool, samples_per_edge: usize) -> Result<Self> {
        let n = points.len();
        if n < 2 || directions.len() != n {
            return Err(Error::param("a curve needs at least two samples with one direction each"));
        }
        let samples_per_edge = samples_per_edge.max(1);
        let oriented: Vec<Vec2> = (0..n)
            .map(|i| {
                let prev = if i > 0 {
                    points[i - 1]
                } else if closed {
                    points[n - 1]
                } else {
                    points[i]
                };
                let next = if i + 1 < n {
                    points[i + 1]
                } else if closed {
                    points[0]
                } else {
                    points[i]
                };
                let d = directions[i];
                if d.dot(next - prev) < 0.0 {
                    -d
                } else {
                    d
                }
            })
            .collect();
        let edge_count = if closed { n } else { n - 1 };
        let mut pieces = Vec::with_capacity(edge_count);
        for e in 0..edge_count {
            let f = (e + 1) % n;
            pieces.push(HermitePiece::new(points[e], points[f], oriented[e], oriented[f])?);
        }
        let mut dense = Vec::with_capacity(edge_count * samples_per_edge + 1);
        for p in &pieces {
            for s in 0..samples_per_edge {
                dense.push(p.eval(s as f64 / samples_per_edge as f64));
            }
        }
        dense.push(pieces.last().expect("at least one piece").eval(1.0));
        let mut vertices = points.to_vec();
        if closed {
            vertices.push(points[0]);
        }
        Ok(SegmentedCurve { vertices, pieces, dense, closed })
    }

    /// Distance from `x` to the dense polyline.
    pub fn distance_to(&self, x: Vec2) -> f64 {
        self.dense.windows(2).map(|w| segment_distance(x, w[0], w[1])).fold(f64::INFINITY, f64::min)
    }
}

/// Distance from `x` to the segment `[a, b]`.
pub fn segment_distance(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.norm_sq();
    if l2 == 0.0 {
        return x.dist(a);
    }
    let t = ((x - a).dot(d) / l2).clamp(0.0, 1.0);
    x.dist(a + d * t)
}

/// Interpolate every chain and cycle of a figure. Components with fewer
/// than two vertices are skipped.
pub fn hermite_interpolate(fig: &PolygonalFigure, samples_per_edge: usize) -> Result<Vec<SegmentedCurve>> {
    let mut out = Vec::new();
    for c in fig.components() {
        if c.vertices.len() < 2 || (c.closed && c.vertices.len() < 3) {
            continue;
        }
        let pts: Vec<Vec2> = c.vertices.iter().map(|&v| fig.vertices[v].position).collect();
        let dirs: Vec<Vec2> = c.vertices.iter().map(|&v| fig.vertices[v].tangent()).collect();
        out.push(SegmentedCurve::from_samples(&pts, &dirs, c.closed, samples_per_edge)?);
    }
    Ok(out)
}

/// Scene knowledge that sharpens the segmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConstants {
    pub kappa_low: f64,
    pub kappa_bar: f64,
    /// Theoretical resolution `𝔇` (may be infinite).
    pub resolution: f64,
}

/// Everything `segment` needs beyond the filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptions {
    pub extract: ExtractOptions,
    pub link: LinkOptions,
    /// Merge radius for pooled surfels.
    pub dedup_radius: f64,
    /// Enforced minimum spacing after merging (0 disables thinning).
    pub min_spacing: f64,
    /// Cycles and chains with fewer vertices are treated as spurious.
    pub min_component: usize,
    pub samples_per_edge: usize,
}

impl SegmentOptions {
    /// Parameters for grid exponent `m`.
    ///
    /// The position bound `ζ` is the resolution clamped to `[½, 1]` pixel;
    /// `ξ = α`; the linking radius is the arc-length bound
    /// `(2α + π/A)/κ̲` clamped to `[2, 3]` pixels (3 pixels without scene
    /// knowledge). The theoretical minimum spacing is generally several
    /// pixels, which would discard most samples, so thinning uses `ζ`
    /// instead. Surfels from neighbouring directions are merged within
    /// `1.25ζ`: at exactly `ζ`, copies of one edge sitting a pixel apart
    /// across the ridge survive and make the linker zigzag.
    pub fn for_grid(m: u32, params: &FilterParams, scene: Option<SceneConstants>) -> Result<Self> {
        let h = 1.0 / (1u64 << m) as f64;
        let resolution = scene.map(|s| s.resolution).unwrap_or(f64::INFINITY);
        let zeta = if resolution.is_finite() { resolution.clamp(0.5 * h, h) } else { h };
        let arc = scene
            .filter(|s| s.kappa_low > 0.0)
            .map(|s| (2.0 * params.alpha + PI / params.num_angles as f64) / s.kappa_low)
            .unwrap_or(f64::INFINITY);
        let eps = arc.clamp(2.0 * h, 3.0 * h);
        let kappa_bar = scene.map(|s| s.kappa_bar).filter(|k| *k > 0.0).unwrap_or(1.0 / (3.0 * h));
        let bounds = NoiseBounds::new(zeta, params.alpha, eps)?;
        let mut extract = ExtractOptions::for_grid(m);
        extract.radius = crate::wavefront::linkage_radius(resolution, m);
        Ok(SegmentOptions {
            extract,
            link: LinkOptions::new(bounds, kappa_bar),
            dedup_radius: 1.25 * zeta,
            min_spacing: zeta,
            min_component: 4,
            samples_per_edge: 8,
        })
    }
}

/// Output of [`segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    /// Surfels of every direction, in direction order.
    pub surfels: Vec<Surfel>,
    pub figure: PolygonalFigure,
    pub curves: Vec<SegmentedCurve>,
}

impl Segmentation {
    pub fn closed_curves(&self) -> impl Iterator<Item = &SegmentedCurve> {
        self.curves.iter().filter(|c| c.closed)
    }
}

/// Replace each ambiguous surfel by a falling and a rising copy.
///
/// An ambiguous response usually sits where two opposite edges are closer
/// than the filters can resolve; each of the two curves then needs its own
/// vertex there. Copies that belong to no curve end up isolated and are
/// flagged spurious by the linker.
pub fn split_ambiguous(surfels: Vec<Surfel>) -> Vec<Surfel> {
    let mut out = Vec::with_capacity(surfels.len());
    for s in surfels {
        if s.polarity == Polarity::Ambiguous {
            out.push(Surfel { polarity: Polarity::Falling, ..s });
            out.push(Surfel { polarity: Polarity::Rising, ..s });
        } else {
            out.push(s);
        }
    }
    out
}

/// Pool surfels from several directions, merge, thin and link them.
pub fn segment_surfels(surfels: Vec<Surfel>, alpha: f64, opts: &SegmentOptions) -> Result<Segmentation> {
    let merged = dedup(&surfels, opts.dedup_radius, alpha);
    let merged = if opts.min_spacing > 0.0 { thin(&merged, opts.min_spacing) } else { merged };
    let merged = split_ambiguous(merged);
    let mut figure = polygonalize(&merged, &opts.link);
    // Tiny components are noise: drop their edges and flag them.
    let small: BTreeSet<usize> =
        figure.components().into_iter().filter(|c| c.vertices.len() < opts.min_component).flat_map(|c| c.vertices).collect();
    if !small.is_empty() {
        figure.edges.retain(|(a, b)| !small.contains(a) && !small.contains(b));
        for v in small {
            figure.spurious[v] = true;
        }
    }
    let curves = hermite_interpolate(&figure, opts.samples_per_edge)?;
    Ok(Segmentation { surfels, figure, curves })
}

/// Run the filter bank on `grid`, extract surfels for every direction and
/// reconstruct curves.
pub fn segment(grid: &SpectralGrid, params: &FilterParams, opts: &SegmentOptions) -> Result<Segmentation> {
    let probe = PolarityProbe::new(grid, params.k_max);
    let per_angle: Vec<Vec<Surfel>> = params
        .angles()
        .into_par_iter()
        .map(|theta| {
            let image = apply_directional_filter(grid, theta, params, opts.extract.convention)?;
            surfels_from_image(&image, theta, &opts.extract, Some(&probe))
        })
        .collect::<Result<_>>()?;
    segment_surfels(per_angle.into_iter().flatten().collect(), params.alpha, opts)
}

/// Unoriented surfel built from an exact curve sample: position and outward
/// normal (descent along the normal for positive contrast).
pub fn surfel_from_normal(position: Vec2, normal: Vec2, polarity: Polarity) -> Surfel {
    Surfel::new(position, normal.angle(), 1.0, polarity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_surfels(c: Vec2, r: f64, n: usize, phase: f64, polarity: Polarity) -> Vec<Surfel> {
        (0..n)
            .map(|i| {
                let t = phase + 2.0 * PI * i as f64 / n as f64;
                surfel_from_normal(c + Vec2::from_angle(t) * r, Vec2::from_angle(t), polarity)
            })
            .collect()
    }

    fn link(eps: f64, kappa_bar: f64) -> LinkOptions {
        LinkOptions::new(NoiseBounds::new(0.001, 0.02, eps).unwrap(), kappa_bar)
    }

    #[test]
    fn circle_becomes_one_ordered_cycle() {
        let n = 60;
        let r = 0.3;
        let spacing = 2.0 * r * (PI / n as f64).sin();
        let s = circle_surfels(Vec2::new(0.5, 0.5), r, n, 0.1, Polarity::Ambiguous);
        let fig = polygonalize(&s, &link(1.2 * spacing, 1.0 / r));
        assert!((0..n).all(|v| fig.degree(v) == 2));
        let comps = fig.components();
        assert_eq!(comps.len(), 1);
        assert!(comps[0].closed);
        // Counterclockwise traversal visits the samples in parameter order.
        let order = &comps[0].vertices;
        for w in order.windows(2) {
            assert_eq!(w[1], (w[0] + 1) % n);
        }
    }

    #[test]
    fn concentric_circles_stay_apart() {
        let (r, n) = (0.3, 90);
        // ε must cover the outer circle's spacing too; δ depends on ε, so
        // fix ε from a generous outer radius first.
        let eps = 1.05 * 2.0 * (r + 0.05) * (PI / n as f64).sin();
        let bounds = NoiseBounds::new(0.001, 0.02, eps).unwrap();
        let kappa_bar = 1.0 / r;
        let delta = 3.0 * bounds.separation_bound(kappa_bar);
        assert!(delta < 0.05);
        let mut s = circle_surfels(Vec2::new(0.5, 0.5), r, n, 0.0, Polarity::Ambiguous);
        // Interleave the outer samples half a step out of phase.
        s.extend(circle_surfels(Vec2::new(0.5, 0.5), r + delta, n, PI / n as f64, Polarity::Ambiguous));
        assert!(bounds.check(kappa_bar, delta).is_ok());
        let fig = polygonalize(&s, &LinkOptions::new(bounds, kappa_bar));
        let comps = fig.components();
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.closed && c.vertices.len() == n));
        assert!(fig.edges.iter().all(|&(a, b)| (a < n) == (b < n)));
    }

    #[test]
    fn isolated_surfel_is_spurious() {
        let n = 40;
        let r = 0.25;
        let spacing = 2.0 * r * (PI / n as f64).sin();
        let mut s = circle_surfels(Vec2::new(0.5, 0.5), r, n, 0.0, Polarity::Ambiguous);
        let base = polygonalize(&s, &link(1.2 * spacing, 1.0 / r));
        // Just outside the circle, with its normal along the tangent there.
        s.push(Surfel::new(Vec2::new(0.5 + r + 0.5 * spacing, 0.5 + 0.2 * spacing), 0.5 * PI, 1.0, Polarity::Ambiguous));
        let fig = polygonalize(&s, &link(1.2 * spacing, 1.0 / r));
        assert!(fig.spurious[n]);
        assert_eq!(fig.edges, base.edges);
    }

    #[test]
    fn opposite_polarity_blocks_links() {
        // Two facing straight edges 0.4 units apart in x, closer than ε.
        let mut s = Vec::new();
        for i in 0..10 {
            let y = 0.4 + 0.01 * i as f64;
            s.push(Surfel::new(Vec2::new(0.5, y), 0.0, 1.0, Polarity::Falling));
            s.push(Surfel::new(Vec2::new(0.504, y + 0.005), 0.0, 1.0, Polarity::Rising));
        }
        let fig = polygonalize(&s, &link(0.015, 1.0));
        assert!(fig.edges.iter().all(|&(a, b)| a % 2 == b % 2));
        assert!((0..s.len()).all(|v| fig.degree(v) <= 2));
    }

    #[test]
    fn dedup_merges_close_similar_surfels() {
        let a = Surfel::new(Vec2::new(0.5, 0.5), 0.01, 2.0, Polarity::Falling);
        let b = Surfel::new(Vec2::new(0.502, 0.5), PI - 0.01, 1.0, Polarity::Rising);
        let c = Surfel::new(Vec2::new(0.501, 0.5), 1.2, 1.0, Polarity::Falling);
        let out = dedup(&[a, b, c], 0.01, 0.1);
        assert_eq!(out.len(), 2);
        let m = out[0];
        assert!((m.position.x - (0.5 * 2.0 + 0.502) / 3.0).abs() < 1e-12);
        assert!(crate::geom::axial_diff(m.theta, 0.0) < 0.01);
        // The descent direction of the stronger member survives the wrap.
        assert!(m.descent().unwrap().x > 0.99);
    }

    #[test]
    fn hermite_reproduces_lines() {
        let d = Vec2::new(0.6, 0.8);
        let p = HermitePiece::new(Vec2::new(0.1, 0.1), Vec2::new(0.1, 0.1) + d * 0.5, d, d).unwrap();
        for i in 0..=20 {
            let q = p.eval(i as f64 / 20.0) - Vec2::new(0.1, 0.1);
            assert!(q.cross(d).abs() < 1e-12);
        }
        assert!(HermitePiece::new(Vec2::new(0.2, 0.2), Vec2::new(0.2, 0.2), d, d).is_err());
    }

    fn circle_error(n: usize) -> f64 {
        let c = Vec2::new(0.5, 0.5);
        let r = 0.3;
        let pts: Vec<Vec2> = (0..n).map(|i| c + Vec2::from_angle(2.0 * PI * i as f64 / n as f64) * r).collect();
        let dirs: Vec<Vec2> = (0..n).map(|i| Vec2::from_angle(2.0 * PI * i as f64 / n as f64).perp()).collect();
        let curve = SegmentedCurve::from_samples(&pts, &dirs, true, 64).unwrap();
        curve.dense.iter().map(|p| (p.dist(c) - r).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn hermite_is_fourth_order_on_circles() {
        let (e16, e32) = (circle_error(16), circle_error(32));
        assert!(e16 <= (2.0 * PI / 16.0f64).powi(4) * 0.3);
        let ratio = e16 / e32;
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn separation_conditions() {
        let b = NoiseBounds::new(0.001, 0.01, 0.01).unwrap();
        assert!((b.separation_bound(10.0) - (0.004 + 0.0004 + 2.1 * 10.0 * 1e-4)).abs() < 1e-15);
        assert!(b.check(10.0, 0.01).is_ok());
        assert!(b.check(10.0, 0.005).is_err());
        assert!(b.check(100.0, 1.0).is_err());
        assert!((b.min_spacing() - (1.0 + 2.0 * SQRT_2) * (0.0002 + 0.001)).abs() < 1e-15);
    }

    #[test]
    fn zero_grid_segments_to_nothing() {
        let g = SpectralGrid::new(6).unwrap();
        let p = FilterParams::reference(6).unwrap();
        let opts = SegmentOptions::for_grid(6, &p, None).unwrap();
        let s = segment(&g, &p, &opts).unwrap();
        assert!(s.curves.is_empty() && s.surfels.is_empty());
    }

    #[test]
    fn ambiguous_surfels_are_split_by_polarity() {
        let s = vec![
            Surfel::new(Vec2::new(0.1, 0.1), 0.3, 2.0, Polarity::Ambiguous),
            Surfel::new(Vec2::new(0.2, 0.1), 0.3, 1.0, Polarity::Rising),
        ];
        let out = split_ambiguous(s);
        let pols: Vec<Polarity> = out.iter().map(|s| s.polarity).collect();
        assert_eq!(pols, [Polarity::Falling, Polarity::Rising, Polarity::Rising]);
        assert_eq!(out[0].position, out[1].position);
    }

    #[test]
    fn bridging_closes_a_single_gap() {
        let n = 60;
        let r = 0.3;
        let spacing = 2.0 * r * (PI / n as f64).sin();
        let mut s = circle_surfels(Vec2::new(0.5, 0.5), r, n, 0.1, Polarity::Falling);
        s.remove(17);
        let mut opts = link(1.2 * spacing, 1.0 / r);
        opts.bridge = 0.0;
        let open = polygonalize(&s, &opts).components();
        assert_eq!(open.len(), 1);
        assert!(!open[0].closed);
        opts.bridge = 2.0;
        let closed = polygonalize(&s, &opts).components();
        assert_eq!(closed.len(), 1);
        assert!(closed[0].closed && closed[0].vertices.len() == n - 1);
    }

    #[test]
    fn second_edge_may_not_fold_back() {
        // v links to u first; w lies beyond u in nearly the same direction
        // and cannot reach u (opposite polarity), so the only way to attach
        // it is a second edge at v doubling back along the first.
        let h = 0.01;
        let v = Surfel::new(Vec2::new(0.5, 0.5), FRAC_PI_2, 1.0, Polarity::Ambiguous);
        let u = Surfel::new(Vec2::new(0.5 + h, 0.5), FRAC_PI_2, 1.0, Polarity::Falling);
        let w = Surfel::new(Vec2::new(0.5 + 3.0 * h, 0.5 + 0.1 * h), FRAC_PI_2, 1.0, Polarity::Rising);
        let mut opts = link(4.0 * h, 1.0);
        opts.min_cycle = 3;
        let fig = polygonalize(&[v, u, w], &opts);
        assert_eq!(fig.edges, vec![(0, 1)]);
        assert!(fig.spurious[2]);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn surfel() -> impl Strategy<Value = Surfel> {
        (0.0..1.0f64, 0.0..1.0f64, 0.0..PI, 0.1..10.0f64, 0..3u8).prop_map(|(x, y, t, w, p)| {
            let pol = [Polarity::Falling, Polarity::Rising, Polarity::Ambiguous][p as usize];
            Surfel::new(Vec2::new(x, y), t, w, pol)
        })
    }

    proptest! {
        #[test]
        fn merging_and_thinning_never_add_surfels(s in proptest::collection::vec(surfel(), 0..60), r in 0.0..0.1f64) {
            let merged = dedup(&s, r, 0.2);
            prop_assert!(merged.len() <= s.len());
            let thinned = thin(&merged, r);
            prop_assert!(thinned.len() <= merged.len());
            for (i, a) in thinned.iter().enumerate() {
                for b in &thinned[i + 1..] {
                    prop_assert!(a.position.dist(b.position) >= r);
                }
            }
        }

        #[test]
        fn linking_keeps_degree_at_most_two(s in proptest::collection::vec(surfel(), 0..80)) {
            let fig = polygonalize(&s, &LinkOptions::new(NoiseBounds::new(0.01, 0.2, 0.08).unwrap(), 5.0));
            for v in 0..s.len() {
                prop_assert!(fig.degree(v) <= 2);
                prop_assert_eq!(fig.spurious[v], fig.degree(v) == 0);
            }
            for &(a, b) in &fig.edges {
                prop_assert!(a != b && s[a].position.dist(s[b].position) <= 2.0 * 0.08 + 1e-12);
            }
        }

        #[test]
        fn hermite_pieces_hit_their_vertices(
            p0 in (0.0..1.0f64, 0.0..1.0f64), p1 in (0.0..1.0f64, 0.0..1.0f64),
            a in 0.0..6.3f64, b in 0.0..6.3f64,
        ) {
            let (p0, p1) = (Vec2::new(p0.0, p0.1), Vec2::new(p1.0, p1.1));
            prop_assume!(p0.dist(p1) > 1e-6);
            let piece = HermitePiece::new(p0, p1, Vec2::from_angle(a), Vec2::from_angle(b)).unwrap();
            prop_assert!(piece.eval(0.0).dist(p0) < 1e-12);
            prop_assert!(piece.eval(1.0).dist(p1) < 1e-12);
        }
    }
}
