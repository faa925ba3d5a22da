//! Stationary-phase description of the transform of a piecewise-constant
//! scene at large `|k|`.
//!
//! For a convex closed curve the Green's-theorem integral is dominated by
//! the two boundary points whose normal is parallel to `k`. With `κ` the
//! curvature there and `γ` the boundary point,
//!
//! ```text
//! ρ̂(k) ≈ Σ_j c_j |k|^{-3/2} [ sqrt(2π/κ₊) e^{ik·γ₊ - 3iπ/4} + sqrt(2π/κ₋) e^{ik·γ₋ + 3iπ/4} ]
//! ```
//!
//! where `+` marks the point whose outward normal points along `k`. The phase
//! offsets and the `sqrt(2π/κ)` amplitude are fixed by the disk, whose exact
//! transform `2πR J₁(|k|R)/|k|` must be reproduced to leading order.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::phantom::{Ellipse, PhantomSpec};

/// A boundary point where the phase `k·γ(t)` is stationary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    /// Index of the curve in the scene (0 when queried on a bare ellipse).
    pub curve: usize,
    /// Unit-speed (arclength) parameter measured from the end of the major axis.
    pub t: f64,
    /// Native ellipse parameter of the same point.
    pub u: f64,
    pub position: Vec2,
    pub curvature: f64,
    /// Outward unit normal.
    pub normal: Vec2,
}

/// The two stationary points of `e` for the query direction `direction`:
/// first the one whose outward normal is `+direction`, then `-direction`.
pub fn stationary_points(e: &Ellipse, direction: Vec2) -> [StationaryPoint; 2] {
    let d = direction.normalized();
    let u_plus = e.param_with_normal(d);
    let make = |u: f64| {
        let u = crate::geom::wrap_to(u, 2.0 * PI);
        StationaryPoint {
            curve: 0,
            t: e.arclength_to(u),
            u,
            position: e.point(u),
            curvature: e.curvature(u),
            normal: e.normal(u),
        }
    };
    [make(u_plus), make(u_plus + PI)]
}

fn ellipse_leading_term(e: &Ellipse, k: Vec2) -> Complex64 {
    let kr = k.norm();
    let [plus, minus] = stationary_points(e, k / kr);
    let term =
        |p: &StationaryPoint, offset: f64| Complex64::from_polar((2.0 * PI / p.curvature).sqrt(), k.dot(p.position) + offset);
    (term(&plus, -0.75 * PI) + term(&minus, 0.75 * PI)) * (e.amplitude / kr.powf(1.5))
}

/// Leading-order approximation of the scene's step part at `k`.
///
/// Valid only in the high-frequency regime `|k| ≥ k_tex` and for scenes whose
/// curves all have strictly positive curvature.
pub fn leading_order_ft(spec: &PhantomSpec, k: Vec2, k_tex: f64) -> Result<Complex64> {
    let kr = k.norm();
    if kr < k_tex || kr == 0.0 {
        return Err(Error::BelowTextureBand { k: kr, k_tex });
    }
    if !spec.polycurves().is_empty() {
        return Err(Error::ZeroCurvature);
    }
    Ok(spec.ellipses().iter().map(|e| ellipse_leading_term(e, k)).sum())
}

/// Scaled remainder `E(k) = |ρ̂_step(k) - leading(k)|·|k|²`.
pub fn scaled_remainder(spec: &PhantomSpec, k: Vec2, k_tex: f64) -> Result<f64> {
    let lead = leading_order_ft(spec, k, k_tex)?;
    Ok((spec.step_ft(k) - lead).norm() * k.norm_sq())
}

/// Bound on the scaled remainder together with the inputs that enter it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConstants {
    pub c_geo: f64,
    pub arclengths: Vec<f64>,
    pub gamma3_sup: f64,
}

/// `C_geo = Mρ̄(4 + 8κ̄/(πκ̲) + 2·sqrt(2κ̄/κ̲)) + 3ρ̄·sup|γ'''|/κ̲·Σ arclength`.
pub fn geometry_constant(spec: &PhantomSpec) -> Result<GeometryConstants> {
    let d = spec.derived();
    if d.kappa_low <= 0.0 {
        return Err(Error::ZeroCurvature);
    }
    let arclengths: Vec<f64> = spec.curves().iter().map(|c| c.arclength()).collect();
    let total: f64 = arclengths.iter().sum();
    let ratio = d.kappa_bar / d.kappa_low;
    let m = d.curve_count as f64;
    let c_geo = m * d.rho_bar * (4.0 + 8.0 * ratio / PI + 2.0 * (2.0 * ratio).sqrt())
        + 3.0 * d.rho_bar * d.gamma3_sup / d.kappa_low * total;
    Ok(GeometryConstants { c_geo, arclengths, gamma3_sup: d.gamma3_sup })
}

/// Arclength bounds between two boundary points whose normals differ by
/// `delta_theta`: `(Δθ/κ̄, Δθ/κ̲)`.
pub fn arc_length_between_angles(kappa_low: f64, kappa_bar: f64, delta_theta: f64) -> Result<(f64, f64)> {
    if !(kappa_low > 0.0) || !(kappa_bar >= kappa_low) || !(delta_theta >= 0.0) {
        return Err(Error::param(format!(
            "need 0 < kappa_low <= kappa_bar and delta_theta >= 0 (got {kappa_low}, {kappa_bar}, {delta_theta})"
        )));
    }
    Ok((delta_theta / kappa_bar, delta_theta / kappa_low))
}

/// One row of an asymptotics report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticSample {
    pub k: Vec2,
    pub exact: Complex64,
    pub leading: Complex64,
    /// `|exact - leading|·|k|²`.
    pub error: f64,
}

/// Exact vs leading-order transform along `direction` at `samples`
/// log-spaced magnitudes in `[k_min, k_max]`.
pub fn asymptotic_report(
    spec: &PhantomSpec,
    direction: Vec2,
    k_min: f64,
    k_max: f64,
    samples: usize,
) -> Result<Vec<AsymptoticSample>> {
    if !(k_min > 0.0) || !(k_max > k_min) || samples < 2 {
        return Err(Error::param("need 0 < k_min < k_max and at least two samples"));
    }
    let dir = direction.normalized();
    (0..samples)
        .map(|i| {
            let r = k_min * (k_max / k_min).powf(i as f64 / (samples - 1) as f64);
            let k = dir * r;
            let exact = spec.step_ft(k);
            let leading = leading_order_ft(spec, k, k_min)?;
            Ok(AsymptoticSample { k, exact, leading, error: (exact - leading).norm() * r * r })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_j1;

    fn disk(r: f64, c: Vec2) -> PhantomSpec {
        PhantomSpec::new(vec![Ellipse::new(c, r, r, 0.0, 1.0).unwrap()], vec![], vec![]).unwrap()
    }

    #[test]
    fn unit_circle_stationary_points() {
        let [p, q] = stationary_points(&Ellipse::unit_disk(), Vec2::new(1.0, 0.0));
        assert!((p.position - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((q.position - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((p.curvature - 1.0).abs() < 1e-15 && (q.curvature - 1.0).abs() < 1e-15);
        assert!((q.t - PI).abs() < 1e-12);
    }

    #[test]
    fn ellipse_stationary_points_match_scan() {
        let e = Ellipse::new(Vec2::ZERO, 2.0, 1.0, 0.0, 1.0).unwrap();
        let [p, q] = stationary_points(&e, Vec2::new(1.0, 0.0));
        assert!((p.position - Vec2::new(2.0, 0.0)).norm() < 1e-14);
        assert!((q.position - Vec2::new(-2.0, 0.0)).norm() < 1e-14);
        // Dense scan for the points where the tangent is orthogonal to (1, 0).
        let n = 200_000;
        let best = (0..n)
            .map(|i| 2.0 * PI * i as f64 / n as f64)
            .min_by(|&a, &b| e.tangent(a).x.abs().total_cmp(&e.tangent(b).x.abs()))
            .unwrap();
        let scanned = e.curvature(best);
        assert!((p.curvature - scanned).abs() < 1e-6);
        assert!((p.curvature - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_points_are_stationary() {
        let e = Ellipse::new(Vec2::new(0.4, 0.6), 0.3, 0.17, 1.1, 1.0).unwrap();
        for i in 0..40 {
            let d = Vec2::from_angle(0.31 + i as f64 * 0.157);
            let [p, q] = stationary_points(&e, d);
            assert!(e.tangent(p.u).dot(d).abs() < 1e-10);
            assert!(e.tangent(q.u).dot(d).abs() < 1e-10);
            assert!((p.normal.dot(d) - 1.0).abs() < 1e-12);
            assert!((p.normal + q.normal).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_leading_order_matches_bessel_asymptotics() {
        for r in [1.0, 0.3] {
            let spec = disk(r, Vec2::ZERO);
            for kr in [50.0, 100.0, 200.0] {
                let k = Vec2::new(kr, 0.0);
                let lead = leading_order_ft(&spec, k, 10.0).unwrap();
                // First-order Hankel asymptotics of 2πR J₁(kR)/k.
                let z: f64 = kr * r;
                let asym = 2.0 * PI * r / kr * (2.0 / (PI * z)).sqrt() * (z - 0.75 * PI).cos();
                assert!((lead.re - asym).abs() < 1e-12 * asym.abs().max(1e-6), "R={r} k={kr}");
                assert!(lead.im.abs() < 1e-12);
                // And the exact transform agrees up to the O(k^{-5/2}) remainder.
                let exact = 2.0 * PI * r * bessel_j1(z) / kr;
                assert!((exact - lead.re).abs() < 2.0 * (2.0 * PI * r / kr) * (2.0 / (PI * z)).sqrt() / z);
            }
        }
    }

    #[test]
    fn halving_radius_scales_terms() {
        let c = Vec2::new(0.5, 0.5);
        let big = Ellipse::new(c, 0.2, 0.2, 0.0, 1.0).unwrap();
        let small = Ellipse::new(c, 0.1, 0.1, 0.0, 1.0).unwrap();
        let k = Vec2::new(120.0, 50.0);
        let [pb, _] = stationary_points(&big, k / k.norm());
        let [ps, _] = stationary_points(&small, k / k.norm());
        let amp = |p: &StationaryPoint| (2.0 * PI / p.curvature).sqrt();
        assert!((amp(&ps) / amp(&pb) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn leading_order_preconditions() {
        let spec = disk(0.2, Vec2::new(0.5, 0.5));
        assert!(matches!(leading_order_ft(&spec, Vec2::new(50.0, 0.0), 100.0), Err(Error::BelowTextureBand { .. })));
        let sq = crate::phantom::PolyCurve::square(Vec2::new(0.3, 0.3), 0.2, 1.0).unwrap();
        let spec = PhantomSpec::new(vec![], vec![], vec![sq]).unwrap();
        assert!(matches!(leading_order_ft(&spec, Vec2::new(500.0, 0.0), 100.0), Err(Error::ZeroCurvature)));
        assert!(matches!(geometry_constant(&spec), Err(Error::ZeroCurvature)));
    }

    #[test]
    fn unit_circle_geometry_constant() {
        let spec = disk(1.0, Vec2::ZERO);
        let g = geometry_constant(&spec).unwrap();
        let want = 4.0 + 8.0 / PI + 2.0 * 2f64.sqrt() + 3.0 * 2.0 * PI;
        assert!((g.c_geo - want).abs() < 1e-10);
        assert!((g.c_geo - 28.22).abs() < 0.01);

        let scaled = PhantomSpec::new(vec![Ellipse::new(Vec2::ZERO, 1.0, 1.0, 0.0, 3.0).unwrap()], vec![], vec![]).unwrap();
        assert!((geometry_constant(&scaled).unwrap().c_geo - 3.0 * g.c_geo).abs() < 1e-9);
    }

    #[test]
    fn arc_length_bounds() {
        let (lo, hi) = arc_length_between_angles(1.0, 1.0, 0.5 * PI).unwrap();
        assert!((lo - 0.5 * PI).abs() < 1e-15 && (hi - 0.5 * PI).abs() < 1e-15);
        assert_eq!(arc_length_between_angles(0.5, 2.0, 0.0).unwrap(), (0.0, 0.0));
        assert!(arc_length_between_angles(0.0, 1.0, 0.1).is_err());
        assert!(arc_length_between_angles(2.0, 1.0, 0.1).is_err());

        // Ellipse a=2, b=1: arclength between the points with normal angles 0 and 0.3.
        let e = Ellipse::new(Vec2::ZERO, 2.0, 1.0, 0.0, 1.0).unwrap();
        let (k_lo, k_hi) = e.curvature_range();
        let u0 = e.param_with_normal(Vec2::from_angle(0.0));
        let u1 = e.param_with_normal(Vec2::from_angle(0.3));
        let s = crate::quad::gauss_legendre(|u| e.speed(u), u0, u1, 64);
        let (lo, hi) = arc_length_between_angles(k_lo, k_hi, 0.3).unwrap();
        assert!(lo <= s && s <= hi, "{lo} <= {s} <= {hi}");
    }
}
