//! Exact continuous Fourier transforms, `ρ̂(k) = ∫ e^{ik·x} ρ(x) dx`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::shapes::{ClosedCurve, Ellipse, Gaussian, PolyCurve};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::special::bessel_j1_over_z;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn phase(k: Vec2, x: Vec2) -> Complex64 {
    Complex64::from_polar(1.0, k.dot(x))
}

/// Transform of `c·1_Ω` for an ellipse:
/// `c·2πab·e^{ik·x₀}·J₁(ρ)/ρ` with `ρ = |(a k'₁, b k'₂)|`, `k' = R(-φ)k`.
/// At `ρ = 0` this is `c·πab`.
pub fn ellipse_ft(e: &Ellipse, k: Vec2) -> Complex64 {
    let kl = k.rotate(-e.phi);
    let rho = (e.a * kl.x).hypot(e.b * kl.y);
    phase(k, e.center) * (e.amplitude * 2.0 * PI * e.a * e.b * bessel_j1_over_z(rho))
}

/// Transform of the indicator of the region enclosed by `curve`, evaluated
/// through Green's theorem:
/// `(1/(i|k|²)) ∮ e^{ik·γ(t)} k^⊥·γ'(t) dt` with the periodic trapezoid rule.
///
/// For `k = 0` the enclosed (signed) area `½∮(x y' - y x') dt` is returned.
/// A clockwise curve yields the negated value.
pub fn boundary_integral_ft<C: ClosedCurve + ?Sized>(curve: &C, k: Vec2, nodes: usize) -> Result<Complex64> {
    if nodes < 16 {
        return Err(Error::param(format!("boundary quadrature needs at least 16 nodes, got {nodes}")));
    }
    let h = 2.0 * PI / nodes as f64;
    if k == Vec2::ZERO {
        let area: f64 = (0..nodes)
            .map(|i| {
                let t = i as f64 * h;
                curve.point(t).cross(curve.derivative(t))
            })
            .sum();
        return Ok(Complex64::new(0.5 * area * h, 0.0));
    }
    let kp = k.perp();
    let sum: Complex64 = (0..nodes)
        .map(|i| {
            let t = i as f64 * h;
            phase(k, curve.point(t)) * kp.dot(curve.derivative(t))
        })
        .sum();
    Ok(sum * h / (I * k.norm_sq()))
}

/// Contribution of the straight segment `a → b` to the Green's-theorem
/// integral, `(1/(i|k|²)) ∫₀¹ e^{ik·γ(t)} k^⊥·(b-a) dt`.
///
/// With `u = k·(b-a)` this equals
/// `(k^⊥·(b-a))/(i|k|²) · e^{ik·(a+b)/2} · sinc(u/2)`,
/// which reduces to `(k^⊥·(b-a)) e^{ik·a}/(i|k|²)` when `k ⟂ (b-a)`.
pub fn line_segment_ft(a: Vec2, b: Vec2, k: Vec2) -> Result<Complex64> {
    if k == Vec2::ZERO {
        return Err(Error::param("line_segment_ft is undefined at k = 0"));
    }
    let d = b - a;
    if d == Vec2::ZERO {
        return Err(Error::param("segment endpoints coincide"));
    }
    let k2 = k.norm_sq();
    let pre = k.perp().dot(d) / k2;
    let u = k.dot(d);
    let value = if u.abs() <= 1e-12 * k.norm() * d.norm() {
        phase(k, a) * pre
    } else {
        let half = 0.5 * u;
        phase(k, a + d * 0.5) * (pre * half.sin() / half)
    };
    Ok(value / I)
}

/// Transform of a filled polygon including its amplitude.
pub fn polycurve_ft(p: &PolyCurve, k: Vec2) -> Complex64 {
    if k == Vec2::ZERO {
        return Complex64::new(p.amplitude * p.area(), 0.0);
    }
    let s: Complex64 = p.edges().map(|(a, b)| line_segment_ft(a, b, k).expect("validated polygon edges and k != 0")).sum();
    s * p.amplitude
}

/// Transform of a Gaussian bump, `A·2πσ²·e^{-σ²|k|²/2}·e^{ik·x₀}`, set to
/// exactly zero beyond the bump's bandwidth so that the texture is strictly
/// band-limited.
pub fn gaussian_ft(g: &Gaussian, k: Vec2) -> Complex64 {
    let kr = k.norm();
    if kr > g.bandwidth() {
        return Complex64::new(0.0, 0.0);
    }
    let s2 = g.sigma * g.sigma;
    phase(k, g.center) * (g.amplitude * 2.0 * PI * s2 * (-0.5 * s2 * kr * kr).exp())
}
