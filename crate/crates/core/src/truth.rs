//! Ground-truth edge geometry of an analytic scene, for scoring surfels
//! and reconstructed curves.

use std::collections::HashMap;

use crate::geom::{axial_diff, Vec2};
use crate::phantom::PhantomSpec;
use crate::segmentation::SegmentedCurve;
use crate::wavefront::Surfel;

/// One dense sample of a true boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSample {
    pub position: Vec2,
    /// Outward unit normal.
    pub normal: Vec2,
    pub curve: usize,
}

/// Nearest-sample lookup result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    pub sample: EdgeSample,
}

/// Dense samples of every boundary curve with a bucket index.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    samples: Vec<EdgeSample>,
    curve_count: usize,
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl EdgeSet {
    /// Sample each curve at arclength spacing of roughly `spacing`.
    pub fn new(spec: &PhantomSpec, spacing: f64) -> Self {
        let curves = spec.curves();
        let mut samples = Vec::new();
        for (id, c) in curves.iter().enumerate() {
            let n = ((c.arclength() / spacing).ceil() as usize).max(64);
            for i in 0..n {
                let f = i as f64 / n as f64;
                samples.push(EdgeSample { position: c.point(f), normal: c.normal(f), curve: id });
            }
        }
        Self::from_samples(samples, curves.len())
    }

    /// Index explicit samples (curve ids must be below `curve_count`).
    pub fn from_samples(samples: Vec<EdgeSample>, curve_count: usize) -> Self {
        let cell = 1.0 / 128.0;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in samples.iter().enumerate() {
            buckets.entry(Self::key(s.position, cell)).or_default().push(i);
        }
        EdgeSet { samples, curve_count, cell, buckets }
    }

    fn key(p: Vec2, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    pub fn samples(&self) -> &[EdgeSample] {
        &self.samples
    }

    pub fn curve_count(&self) -> usize {
        self.curve_count
    }

    /// Nearest sample satisfying `keep`, searching outward ring by ring.
    pub fn nearest_where<F: Fn(&EdgeSample) -> bool>(&self, x: Vec2, keep: F) -> Option<Nearest> {
        if self.samples.is_empty() {
            return None;
        }
        let (cx, cy) = Self::key(x, self.cell);
        let max_ring = (2.0 / self.cell) as i64;
        let mut best: Option<Nearest> = None;
        for ring in 0..=max_ring {
            // Everything in rings beyond `ring` is at least (ring)·cell away.
            if let Some(b) = best {
                if b.distance < (ring as f64 - 1.0) * self.cell {
                    break;
                }
            }
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs() != ring && dy.abs() != ring {
                        continue;
                    }
                    let Some(list) = self.buckets.get(&(cx + dx, cy + dy)) else { continue };
                    for &i in list {
                        let s = &self.samples[i];
                        if !keep(s) {
                            continue;
                        }
                        let d = s.position.dist(x);
                        if best.is_none_or(|b| d < b.distance) {
                            best = Some(Nearest { distance: d, sample: *s });
                        }
                    }
                }
            }
        }
        best
    }

    /// All samples within `radius` of `x`.
    pub fn within(&self, x: Vec2, radius: f64) -> Vec<EdgeSample> {
        let (cx, cy) = Self::key(x, self.cell);
        let reach = (radius / self.cell).ceil() as i64 + 1;
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let Some(list) = self.buckets.get(&(cx + dx, cy + dy)) else { continue };
                out.extend(list.iter().map(|&i| self.samples[i]).filter(|s| s.position.dist(x) <= radius));
            }
        }
        out
    }

    pub fn nearest(&self, x: Vec2) -> Option<Nearest> {
        self.nearest_where(x, |_| true)
    }

    /// Distance to the whole edge set (infinite if empty).
    pub fn distance(&self, x: Vec2) -> f64 {
        self.nearest(x).map_or(f64::INFINITY, |n| n.distance)
    }

    /// Distance to the arcs whose normal lies within `alpha` of `theta`
    /// (mod π).
    pub fn arc_distance(&self, x: Vec2, theta: f64, alpha: f64) -> f64 {
        self.nearest_where(x, |s| axial_diff(s.normal.angle(), theta) <= alpha).map_or(f64::INFINITY, |n| n.distance)
    }

    /// Samples of curve `curve` whose normal lies within `alpha` of `theta`.
    pub fn arc_samples(&self, curve: usize, theta: f64, alpha: f64) -> impl Iterator<Item = &EdgeSample> {
        self.samples.iter().filter(move |s| s.curve == curve && axial_diff(s.normal.angle(), theta) <= alpha)
    }

    /// Distance to one curve.
    pub fn curve_distance(&self, x: Vec2, curve: usize) -> f64 {
        self.nearest_where(x, |s| s.curve == curve).map_or(f64::INFINITY, |n| n.distance)
    }
}

/// Position and angle error of a surfel against the nearest true edge point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfelError {
    pub distance: f64,
    pub angle: f64,
    pub curve: usize,
}

/// Score a surfel against the edge set. The angle error is taken at the
/// nearest edge point; `None` for an empty edge set.
pub fn surfel_error(edges: &EdgeSet, s: &Surfel) -> Option<SurfelError> {
    edges.nearest(s.position).map(|n| SurfelError {
        distance: n.distance,
        angle: axial_diff(n.sample.normal.angle(), s.theta),
        curve: n.sample.curve,
    })
}

/// Score a surfel as an approximation of the wavefront set: the distance
/// to the nearest edge point, and the smallest angle error over all edge
/// points within `tolerance` of the surfel (the nearest point's error when
/// none is that close).
pub fn wavefront_error(edges: &EdgeSet, s: &Surfel, tolerance: f64) -> Option<SurfelError> {
    let mut err = surfel_error(edges, s)?;
    for e in edges.within(s.position, tolerance) {
        let a = axial_diff(e.normal.angle(), s.theta);
        if a < err.angle {
            err.angle = a;
            err.curve = e.curve;
        }
    }
    Some(err)
}

/// Number of surfels farther than `radius` from every true edge.
pub fn spurious_count(edges: &EdgeSet, surfels: &[Surfel], radius: f64) -> usize {
    surfels.iter().filter(|s| edges.distance(s.position) > radius).count()
}

/// Symmetric Hausdorff distance between a reconstructed curve and true
/// curve `curve`, both taken as dense point sets.
pub fn hausdorff(edges: &EdgeSet, curve: usize, reconstructed: &SegmentedCurve) -> f64 {
    let forward = reconstructed.dense.iter().map(|&p| edges.curve_distance(p, curve)).fold(0.0, f64::max);
    let backward =
        edges.samples().iter().filter(|s| s.curve == curve).map(|s| reconstructed.distance_to(s.position)).fold(0.0, f64::max);
    forward.max(backward)
}

/// Match reconstructed closed curves to true curves: for each true curve,
/// the reconstruction with the smallest Hausdorff distance, with its
/// distance. Each reconstruction is used at most once (greedy by distance).
pub fn match_curves(edges: &EdgeSet, curves: &[&SegmentedCurve]) -> Vec<Option<(usize, f64)>> {
    let mut pairs = Vec::new();
    for t in 0..edges.curve_count() {
        for (r, c) in curves.iter().enumerate() {
            // Cheap rejection: a curve whose first vertex is far away cannot match.
            if edges.curve_distance(c.dense[0], t) > 0.1 {
                continue;
            }
            pairs.push((hausdorff(edges, t, c), t, r));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut out = vec![None; edges.curve_count()];
    let mut used = vec![false; curves.len()];
    for (d, t, r) in pairs {
        if out[t].is_none() && !used[r] {
            out[t] = Some((r, d));
            used[r] = true;
        }
    }
    out
}
