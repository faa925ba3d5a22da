//! Primitive scene elements: ellipses, closed polylines and Gaussian bumps.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::quad::gauss_legendre;

/// A closed curve parameterised over `[0, 2π)`.
pub trait ClosedCurve {
    fn point(&self, t: f64) -> Vec2;
    fn derivative(&self, t: f64) -> Vec2;
}

/// Closed curve given by closures, handy for tests and ad-hoc shapes.
pub struct ParametricCurve<P, D> {
    pub point: P,
    pub derivative: D,
}

impl<P, D> ClosedCurve for ParametricCurve<P, D>
where
    P: Fn(f64) -> Vec2,
    D: Fn(f64) -> Vec2,
{
    fn point(&self, t: f64) -> Vec2 {
        (self.point)(t)
    }
    fn derivative(&self, t: f64) -> Vec2 {
        (self.derivative)(t)
    }
}

/// Filled ellipse `c·1_Ω`, boundary `x₀ + R(φ)(a cos u, b sin u)` traversed
/// counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: Vec2,
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    pub amplitude: f64,
}

impl Ellipse {
    /// Validated constructor. Semi-axes are swapped (and `φ` advanced by π/2)
    /// when `a < b`, so that `a ≥ b` always holds afterwards.
    pub fn new(center: Vec2, a: f64, b: f64, phi: f64, amplitude: f64) -> Result<Self> {
        let vals = [center.x, center.y, a, b, phi, amplitude];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("ellipse parameters must be finite".into()));
        }
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidGeometry(format!("ellipse semi-axes must be positive, got a={a}, b={b}")));
        }
        let e = if a >= b {
            Ellipse { center, a, b, phi, amplitude }
        } else {
            Ellipse { center, a: b, b: a, phi: phi + 0.5 * PI, amplitude }
        };
        Ok(e)
    }

    /// Unit disk at the origin with unit amplitude. It does not fit inside the
    /// image square, but it is the reference shape for the asymptotics.
    pub fn unit_disk() -> Self {
        Ellipse { center: Vec2::ZERO, a: 1.0, b: 1.0, phi: 0.0, amplitude: 1.0 }
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_extent(&self) -> Vec2 {
        let (s, c) = self.phi.sin_cos();
        Vec2::new(
            (self.a * self.a * c * c + self.b * self.b * s * s).sqrt(),
            (self.a * self.a * s * s + self.b * self.b * c * c).sqrt(),
        )
    }

    /// True if the curve lies strictly inside the open unit square.
    pub fn inside_unit_square(&self) -> bool {
        let h = self.half_extent();
        self.center.x - h.x > 0.0 && self.center.x + h.x < 1.0 && self.center.y - h.y > 0.0 && self.center.y + h.y < 1.0
    }

    fn to_world(self, v: Vec2) -> Vec2 {
        v.rotate(self.phi)
    }

    fn to_local(self, v: Vec2) -> Vec2 {
        v.rotate(-self.phi)
    }

    fn d_term(&self, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        self.a * self.a * s * s + self.b * self.b * c * c
    }

    pub fn point(&self, u: f64) -> Vec2 {
        let (s, c) = u.sin_cos();
        self.center + self.to_world(Vec2::new(self.a * c, self.b * s))
    }

    pub fn derivative(&self, u: f64) -> Vec2 {
        let (s, c) = u.sin_cos();
        self.to_world(Vec2::new(-self.a * s, self.b * c))
    }

    /// `|γ'(u)|`.
    pub fn speed(&self, u: f64) -> f64 {
        self.d_term(u).sqrt()
    }

    /// Outward unit normal.
    pub fn normal(&self, u: f64) -> Vec2 {
        let (s, c) = u.sin_cos();
        self.to_world(Vec2::new(self.b * c, self.a * s)).normalized()
    }

    /// Unit tangent (counterclockwise direction).
    pub fn tangent(&self, u: f64) -> Vec2 {
        self.derivative(u).normalized()
    }

    pub fn curvature(&self, u: f64) -> f64 {
        self.a * self.b / self.d_term(u).powf(1.5)
    }

    /// `(min κ, max κ) = (b/a², a/b²)`.
    pub fn curvature_range(&self) -> (f64, f64) {
        (self.b / (self.a * self.a), self.a / (self.b * self.b))
    }

    /// Parameter `u` at which the outward normal points along `direction`.
    pub fn param_with_normal(&self, direction: Vec2) -> f64 {
        let d = self.to_local(direction);
        (self.b * d.y).atan2(self.a * d.x)
    }

    /// Perimeter by the (spectrally accurate) periodic trapezoid rule.
    pub fn perimeter(&self) -> f64 {
        let n = 4096;
        let h = 2.0 * PI / n as f64;
        (0..n).map(|i| self.speed(i as f64 * h)).sum::<f64>() * h
    }

    /// Arclength from `u = 0` to `u` (any real `u`).
    pub fn arclength_to(&self, u: f64) -> f64 {
        let panels = ((u.abs() / (2.0 * PI)) * 256.0).ceil().max(1.0) as usize;
        gauss_legendre(|t| self.speed(t), 0.0, u, panels)
    }

    /// `sup |γ'''|` of the unit-speed parameterisation, sampled at 4096 points.
    ///
    /// For a unit-speed planar curve `γ''' = κ' N - κ² T`, so
    /// `|γ'''| = sqrt(κ_s² + κ⁴)` with `κ_s = (dκ/du)/|γ'(u)|`.
    pub fn third_derivative_sup(&self) -> f64 {
        let n = 4096;
        let a2b2 = self.a * self.a - self.b * self.b;
        (0..n)
            .map(|i| {
                let u = 2.0 * PI * i as f64 / n as f64;
                let (s, c) = u.sin_cos();
                let d = self.d_term(u);
                let kappa = self.a * self.b / d.powf(1.5);
                let dk_du = -1.5 * self.a * self.b * d.powf(-2.5) * 2.0 * a2b2 * s * c;
                let ks = dk_du / d.sqrt();
                (ks * ks + kappa.powi(4)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }
}

impl ClosedCurve for Ellipse {
    fn point(&self, t: f64) -> Vec2 {
        Ellipse::point(self, t)
    }
    fn derivative(&self, t: f64) -> Vec2 {
        Ellipse::derivative(self, t)
    }
}

/// Filled closed polygon `c·1_Ω`, vertices stored counterclockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCurve {
    vertices: Vec<Vec2>,
    pub amplitude: f64,
}

impl PolyCurve {
    /// Validated constructor; a clockwise vertex list is reversed.
    pub fn new(mut vertices: Vec<Vec2>, amplitude: f64) -> Result<Self> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry("a polyline needs at least three distinct vertices".into()));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) || !amplitude.is_finite() {
            return Err(Error::InvalidGeometry("polyline coordinates must be finite".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidGeometry(format!("polyline edge {i} has zero length")));
            }
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(Error::InvalidGeometry("polyline encloses no area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(PolyCurve { vertices, amplitude })
    }

    /// Axis-aligned square with lower-left corner `origin`.
    pub fn square(origin: Vec2, side: f64, amplitude: f64) -> Result<Self> {
        let v = vec![origin, origin + Vec2::new(side, 0.0), origin + Vec2::new(side, side), origin + Vec2::new(0.0, side)];
        Self::new(v, amplitude)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Edges as `(start, end)` pairs, counterclockwise.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn inside_unit_square(&self) -> bool {
        self.vertices.iter().all(|v| v.x > 0.0 && v.x < 1.0 && v.y > 0.0 && v.y < 1.0)
    }

    /// Point at arclength fraction `f ∈ [0, 1)` together with the outward
    /// normal of the edge it lies on.
    pub fn at_fraction(&self, f: f64) -> (Vec2, Vec2) {
        let total = self.perimeter();
        let mut s = f.rem_euclid(1.0) * total;
        for (a, b) in self.edges() {
            let len = a.dist(b);
            if s <= len {
                let d = (b - a) / len;
                return (a + d * s, -d.perp());
            }
            s -= len;
        }
        let (a, b) = self.edges().last().expect("at least three edges");
        (b, -(b - a).normalized().perp())
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>()
}

/// Isotropic Gaussian bump `A·exp(-|x - x₀|²/(2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub center: Vec2,
    pub sigma: f64,
    pub amplitude: f64,
}

impl Gaussian {
    pub fn new(center: Vec2, sigma: f64, amplitude: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() || !amplitude.is_finite() || !center.x.is_finite() || !center.y.is_finite() {
            return Err(Error::InvalidGeometry(format!("invalid Gaussian (sigma={sigma})")));
        }
        Ok(Gaussian { center, sigma, amplitude })
    }

    /// Frequency beyond which the transform has fallen below 1e-6 of its
    /// peak: `σ⁻¹·sqrt(2 ln 10⁶)`.
    pub fn bandwidth(&self) -> f64 {
        (2.0 * 1e6f64.ln()).sqrt() / self.sigma
    }
}
