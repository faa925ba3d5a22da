//! Scene constants derived from the primitive curves: separation, curvature
//! and contrast bounds, arclengths.

use std::f64::consts::PI;

use super::shapes::{Ellipse, PolyCurve};
use crate::geom::Vec2;
use crate::quad::golden_min;

/// A boundary curve of the scene, parameterised by `f ∈ [0, 1)`.
#[derive(Debug, Clone, Copy)]
pub enum CurveRef<'a> {
    Ellipse(&'a Ellipse),
    Poly(&'a PolyCurve),
}

impl CurveRef<'_> {
    pub fn point(&self, f: f64) -> Vec2 {
        match self {
            CurveRef::Ellipse(e) => e.point(2.0 * PI * f),
            CurveRef::Poly(p) => p.at_fraction(f).0,
        }
    }

    /// Outward unit normal (for polygons, that of the edge containing the point).
    pub fn normal(&self, f: f64) -> Vec2 {
        match self {
            CurveRef::Ellipse(e) => e.normal(2.0 * PI * f),
            CurveRef::Poly(p) => p.at_fraction(f).1,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            CurveRef::Ellipse(e) => e.amplitude,
            CurveRef::Poly(p) => p.amplitude,
        }
    }

    pub fn arclength(&self) -> f64 {
        match self {
            CurveRef::Ellipse(e) => e.perimeter(),
            CurveRef::Poly(p) => p.perimeter(),
        }
    }
}

/// Minimum distance between two distinct curves.
pub(crate) fn cross_distance(c1: CurveRef<'_>, c2: CurveRef<'_>) -> f64 {
    const N: usize = 1024;
    let p1: Vec<Vec2> = (0..N).map(|i| c1.point(i as f64 / N as f64)).collect();
    let p2: Vec<Vec2> = (0..N).map(|i| c2.point(i as f64 / N as f64)).collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (i, a) in p1.iter().enumerate() {
        for (j, b) in p2.iter().enumerate() {
            let d = a.dist(*b);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    // Nested golden-section refinement: for each f1 take the best f2 nearby.
    let h = 2.0 / N as f64;
    let (f1, f2) = (best.1 as f64 / N as f64, best.2 as f64 / N as f64);
    let inner = |x: f64| golden_min(|y| c1.point(x).dist(c2.point(y)), f2 - h, f2 + h, 80).1;
    let (_, d) = golden_min(inner, f1 - h, f1 + h, 80);
    d.min(best.0)
}

/// Minimum distance between points of one ellipse whose arclength
/// separation (along the shorter way round) exceeds `min_sep`.
///
/// Returns infinity when no such pair exists.
pub(crate) fn same_curve_distance(e: &Ellipse, min_sep: f64) -> f64 {
    const N: usize = 2048;
    let table = ArcTable::new(e, 8192);
    let total = table.total();
    if 2.0 * min_sep >= total {
        return f64::INFINITY;
    }
    let at = |s: f64| e.point(table.param_at(s.rem_euclid(total)));
    let ds = total / N as f64;
    let pts: Vec<Vec2> = (0..N).map(|i| at(i as f64 * ds)).collect();

    // Boundary of the admissible set: pairs exactly `min_sep` apart.
    let boundary = |s: f64| at(s).dist(at(s + min_sep));
    let (mut best_b, mut arg_b) = (f64::INFINITY, 0.0);
    for i in 0..N {
        let s = i as f64 * ds;
        let d = boundary(s);
        if d < best_b {
            best_b = d;
            arg_b = s;
        }
    }
    let (_, refined_b) = golden_min(boundary, arg_b - ds, arg_b + ds, 80);
    best_b = best_b.min(refined_b);

    // Interior: any admissible pair.
    let (mut best_i, mut pair) = (f64::INFINITY, (0.0, 0.0));
    for i in 0..N {
        for j in (i + 1)..N {
            let sep = (j - i) as f64 * ds;
            if sep.min(total - sep) <= min_sep {
                continue;
            }
            let d = pts[i].dist(pts[j]);
            if d < best_i {
                best_i = d;
                pair = (i as f64 * ds, j as f64 * ds);
            }
        }
    }
    if best_i.is_finite() {
        let admissible = |s1: f64, s2: f64| {
            let sep = (s2 - s1).rem_euclid(total);
            sep.min(total - sep) >= min_sep
        };
        let inner = |x: f64| {
            golden_min(|y| if admissible(x, y) { at(x).dist(at(y)) } else { f64::INFINITY }, pair.1 - ds, pair.1 + ds, 80).1
        };
        let (_, d) = golden_min(inner, pair.0 - ds, pair.0 + ds, 80);
        best_i = best_i.min(d);
    }
    best_b.min(best_i)
}

/// Cumulative arclength of an ellipse on a uniform parameter grid, with
/// Newton inversion `s ↦ u`.
pub(crate) struct ArcTable<'a> {
    e: &'a Ellipse,
    du: f64,
    cum: Vec<f64>,
}

impl<'a> ArcTable<'a> {
    pub(crate) fn new(e: &'a Ellipse, n: usize) -> Self {
        let du = 2.0 * PI / n as f64;
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let a = i as f64 * du;
            let last = *cum.last().expect("non-empty");
            cum.push(last + crate::quad::gauss_legendre(|u| e.speed(u), a, a + du, 1));
        }
        ArcTable { e, du, cum }
    }

    pub(crate) fn total(&self) -> f64 {
        *self.cum.last().expect("non-empty")
    }

    /// Parameter `u ∈ [0, 2π]` at arclength `s ∈ [0, total]` from `u = 0`.
    pub(crate) fn param_at(&self, s: f64) -> f64 {
        let i = match self.cum.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return i as f64 * self.du,
            Err(i) => i.saturating_sub(1).min(self.cum.len() - 2),
        };
        let u0 = i as f64 * self.du;
        let mut u = u0 + self.du * (s - self.cum[i]) / (self.cum[i + 1] - self.cum[i]);
        for _ in 0..3 {
            let si = self.cum[i] + crate::quad::gauss_legendre(|t| self.e.speed(t), u0, u, 1);
            u -= (si - s) / self.e.speed(u);
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_table_inverts_arclength() {
        let e = Ellipse::new(Vec2::new(0.5, 0.5), 0.3, 0.15, 0.2, 1.0).unwrap();
        let t = ArcTable::new(&e, 4096);
        assert!((t.total() - e.perimeter()).abs() < 1e-12);
        for s in [0.0, 0.01, 0.3, 0.777, 1.2, t.total()] {
            let u = t.param_at(s);
            assert!((e.arclength_to(u) - s).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn concentric_circles_distance() {
        let a = Ellipse::new(Vec2::new(0.5, 0.5), 0.3, 0.3, 0.0, 1.0).unwrap();
        let b = Ellipse::new(Vec2::new(0.5, 0.5), 0.2, 0.2, 0.0, 1.0).unwrap();
        let d = cross_distance(CurveRef::Ellipse(&a), CurveRef::Ellipse(&b));
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn circle_same_curve_distance_is_chord() {
        let r = 0.25;
        let c = Ellipse::new(Vec2::new(0.5, 0.5), r, r, 0.0, 1.0).unwrap();
        let sep = 0.5 * PI * r;
        let d = same_curve_distance(&c, sep);
        assert!((d - 2.0 * r * (sep / (2.0 * r)).sin()).abs() < 1e-10);
        assert_eq!(same_curve_distance(&c, 4.0), f64::INFINITY);
    }
}
