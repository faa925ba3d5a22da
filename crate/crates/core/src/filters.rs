//! Directional band-pass filters and the constants of their error bounds.
//!
//! The filter for direction `θ` multiplies k-space data by
//! `W(|k|)·V(k_θ - θ)`, where `W` is a flat radial window on
//! `k_tex ≤ |k| ≤ k_max` of height `1/(2(k_max - k_tex))` and `V` a triangle
//! of half-width `α` and unit area. Only the lobe around `+θ` is kept; the
//! result is complex-valued and its modulus peaks on boundary arcs whose
//! normal is within `α` of `θ`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::asymptotics::geometry_constant;
use crate::error::{Error, Result};
use crate::geom::angle_diff;
use crate::grid::{inverse_transform_with, Convention, ImageGrid, SpectralGrid};
use crate::phantom::PhantomSpec;
use crate::quad::{gauss_legendre, golden_min};

/// Parameters of a directional filter bank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub k_tex: f64,
    pub k_max: f64,
    /// Angular half-width of each filter.
    pub alpha: f64,
    /// Number of directions `A`; the bank uses `θ_j = jπ/A`, `j = 1..=A`.
    pub num_angles: usize,
    /// Curvature bounds used for the parabolic-scaling check (zero if unknown).
    pub kappa_low: f64,
    pub kappa_bar: f64,
    /// Enforce `α²(k_max + k_tex)/κ̲ ≤ π`.
    pub strict_scaling: bool,
}

impl FilterParams {
    /// Validated parameters without curvature information.
    pub fn new(k_tex: f64, k_max: f64, alpha: f64, num_angles: usize) -> Result<Self> {
        let p = FilterParams { k_tex, k_max, alpha, num_angles, kappa_low: 0.0, kappa_bar: 0.0, strict_scaling: false };
        p.validate()?;
        Ok(p)
    }

    /// The configuration of the reference experiments for grid exponent `m`:
    /// `k_max = 2π·2^{m-1}`, `k_tex = k_max/2`, `α = π/16`, `A = 16`.
    pub fn reference(m: u32) -> Result<Self> {
        let k_max = 2.0 * PI * (1u64 << (m - 1)) as f64;
        Self::new(0.5 * k_max, k_max, PI / 16.0, 16)
    }

    /// Attach curvature bounds (typically those of the scene).
    pub fn with_curvature(mut self, kappa_low: f64, kappa_bar: f64) -> Result<Self> {
        self.kappa_low = kappa_low;
        self.kappa_bar = kappa_bar;
        self.validate()?;
        Ok(self)
    }

    /// Switch on the parabolic-scaling constraint.
    pub fn strict(mut self) -> Result<Self> {
        self.strict_scaling = true;
        self.validate()?;
        Ok(self)
    }

    pub fn band_width(&self) -> f64 {
        self.k_max - self.k_tex
    }

    /// The bank's directions `jπ/A`.
    pub fn angles(&self) -> Vec<f64> {
        (1..=self.num_angles).map(|j| j as f64 * PI / self.num_angles as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k_tex, self.k_max, self.alpha, self.kappa_low, self.kappa_bar].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("filter parameters must be finite"));
        }
        if !(self.k_tex > 0.0 && self.k_tex < self.k_max) {
            return Err(Error::param(format!("need 0 < k_tex < k_max (got {}, {})", self.k_tex, self.k_max)));
        }
        // At least twelve lattice points (spacing 2π) beyond k_tex.
        if self.band_width() < 24.0 * PI * (1.0 - 1e-12) {
            return Err(Error::param(format!(
                "k_max - k_tex = {:.4} is below 24π; the pass band holds fewer than 12 lattice points",
                self.band_width()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.25 * PI) {
            return Err(Error::param(format!("alpha must lie in (0, π/4), got {}", self.alpha)));
        }
        if self.num_angles == 0 {
            return Err(Error::param("the filter bank needs at least one direction"));
        }
        if self.kappa_low < 0.0 || self.kappa_bar < 0.0 {
            return Err(Error::param("curvature bounds must be non-negative"));
        }
        if self.strict_scaling {
            if self.kappa_low <= 0.0 {
                return Err(Error::param("strict parabolic scaling needs a positive kappa_low"));
            }
            let lhs = self.alpha * self.alpha * (self.k_max + self.k_tex) / self.kappa_low;
            if lhs > PI * (1.0 + 1e-12) {
                return Err(Error::param(format!("alpha violates parabolic scaling: α²(k_max+k_tex)/κ̲ = {lhs:.4} > π")));
            }
        }
        Ok(())
    }
}

/// `α = sqrt(π κ̲ / (k_max + k_tex))`.
pub fn parabolic_alpha(k_max: f64, k_tex: f64, kappa_low: f64) -> Result<f64> {
    if !(k_max > 0.0 && k_tex > 0.0 && kappa_low > 0.0) {
        return Err(Error::param("parabolic_alpha needs positive inputs"));
    }
    Ok((PI * kappa_low / (k_max + k_tex)).sqrt())
}

/// Radial window: `1/(2(k_max - k_tex))` on `k_tex ≤ |k_r| ≤ k_max`, else 0.
pub fn radial_window(p: &FilterParams, k_r: f64) -> f64 {
    let r = k_r.abs();
    if r >= p.k_tex && r <= p.k_max {
        0.5 / p.band_width()
    } else {
        0.0
    }
}

/// Angular window: `α⁻²·max(α - |k_θ|, 0)` with `k_θ` wrapped to `[-π, π)`.
pub fn angular_window(alpha: f64, k_theta: f64) -> f64 {
    let d = angle_diff(k_theta, 0.0).abs();
    (alpha - d).max(0.0) / (alpha * alpha)
}

/// Apply the filter for direction `theta` and transform back.
pub fn apply_directional_filter(
    grid: &SpectralGrid,
    theta: f64,
    params: &FilterParams,
    convention: Convention,
) -> Result<ImageGrid> {
    if params.k_max > grid.k_max() * (1.0 + 1e-12) {
        return Err(Error::param(format!("filter k_max {:.4} exceeds the grid's k_max {:.4}", params.k_max, grid.k_max())));
    }
    let filtered = grid.multiplied_by(|o| {
        let (kr, kt) = grid.polar_at(o);
        let w = radial_window(params, kr);
        if w == 0.0 {
            0.0
        } else {
            w * angular_window(params.alpha, kt - theta)
        }
    });
    Ok(inverse_transform_with(&filtered, convention))
}

/// Apply every filter of the bank; results are in the order of
/// [`FilterParams::angles`] regardless of scheduling.
pub fn filter_bank(grid: &SpectralGrid, params: &FilterParams, convention: Convention) -> Result<Vec<(f64, ImageGrid)>> {
    params.angles().into_par_iter().map(|t| apply_directional_filter(grid, t, params, convention).map(|img| (t, img))).collect()
}

/// Norms of the windows that enter the error bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterNorms {
    /// `‖W‖_{L¹(ℝ)}` (equals 1).
    pub w_l1: f64,
    /// `‖k_r^{-1/2} W‖_{L¹(ℝ)}`, integrated over both half-lines.
    pub norm_halfinv: f64,
    /// The one-sided closed form `1/(√k_max + √k_tex)`, half of the above.
    pub norm_halfinv_one_sided: f64,
    /// `‖W/k_r‖_{L¹(ℝ)} = ln(k_max/k_tex)/(k_max - k_tex)`.
    pub norm_inv: f64,
    /// `‖V‖_{L¹(S¹)}` (equals 1).
    pub v_l1: f64,
    /// `‖V'‖_{L¹(S¹)} = 2/α`.
    pub v_prime_l1: f64,
    /// Decay constant of the radial kernel: `sup_r r·|W̌(r)|` (numerical).
    pub c_w: f64,
    /// `1/(k_max - k_tex)`, the decay constant in closed form.
    pub c_w_closed_form: f64,
    /// `sup_z |W̌(z)(z + 1)|` (numerical).
    pub w_check_weighted_sup: f64,
}

/// Inverse transform of the radial window, `W̌(r) = ∫ e^{-irk} W(k) dk`.
pub fn radial_kernel(p: &FilterParams, r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        ((r * p.k_max).sin() - (r * p.k_tex).sin()) / (p.band_width() * r)
    }
}

/// Window norms by quadrature over the window supports and, for the sup
/// norms, by dense scans with golden-section refinement.
pub fn filter_norms(p: &FilterParams) -> FilterNorms {
    let panels = 64;
    let h = 0.5 / p.band_width();
    let band = |f: &dyn Fn(f64) -> f64| 2.0 * gauss_legendre(f, p.k_tex, p.k_max, panels);
    let w_l1 = band(&|_| h);
    let norm_halfinv = band(&|k| h / k.sqrt());
    let norm_inv = band(&|k| h / k);
    let a = p.alpha;
    let v_l1 =
        gauss_legendre(|t| angular_window(a, t), -a, 0.0, panels) + gauss_legendre(|t| angular_window(a, t), 0.0, a, panels);
    // V' is ±α⁻² on the two halves of the support.
    let v_prime_l1 = 2.0 * gauss_legendre(|_| 1.0 / (a * a), 0.0, a, panels);

    // r·|W̌(r)| = |sin(r k_max) - sin(r k_tex)|/Δ oscillates on the scale 1/k_max.
    let step = 0.05 / p.k_max;
    let span = 400.0 * PI / p.k_tex;
    let c_w = scan_sup(|r| r * radial_kernel(p, r).abs(), step, span, step);
    // |W̌(z)(z + 1)| peaks just right of zero; beyond |z| = 1 it is below 4/Δ.
    let w_check_weighted_sup = scan_sup(|z| (radial_kernel(p, z) * (z + 1.0)).abs(), -1.0, 1.0, step);

    FilterNorms {
        w_l1,
        norm_halfinv,
        norm_halfinv_one_sided: 1.0 / (p.k_max.sqrt() + p.k_tex.sqrt()),
        norm_inv,
        v_l1,
        v_prime_l1,
        c_w,
        c_w_closed_form: 1.0 / p.band_width(),
        w_check_weighted_sup,
    }
}

fn scan_sup<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let (mut best, mut arg) = (f64::NEG_INFINITY, lo);
    for i in 0..=n {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best {
            best = v;
            arg = x;
        }
    }
    let (_, v) = golden_min(|x| -f(x), arg - step, arg + step, 100);
    best.max(-v)
}

/// `C(W,V,α)` for the flat radial and triangular angular windows:
///
/// `sqrt(2π)/(sqrt(κ̲) cos(2α) (k_max - k_tex)) ·
///  max{1, 2 ln(k_max/k_tex) (‖V'‖ + sup|γ'''|/(2κ̲²) + sqrt(κ̲))}`
///
/// with `‖V'‖ = 2/α` (which under parabolic scaling is
/// `2 sqrt((k_max + k_tex)/(πκ̲))`).
pub fn step_window_constant(k_tex: f64, k_max: f64, alpha: f64, kappa_low: f64, gamma3: f64) -> f64 {
    let v_prime = 2.0 / alpha;
    step_window_constant_with(k_tex, k_max, alpha, kappa_low, gamma3, v_prime)
}

/// As [`step_window_constant`] with an explicit `‖V'‖_{L¹}`.
pub fn step_window_constant_with(k_tex: f64, k_max: f64, alpha: f64, kappa_low: f64, gamma3: f64, v_prime_l1: f64) -> f64 {
    let pre = (2.0 * PI).sqrt() / (kappa_low.sqrt() * (2.0 * alpha).cos() * (k_max - k_tex));
    let inner = 2.0 * (k_max / k_tex).ln() * (v_prime_l1 + gamma3 / (2.0 * kappa_low * kappa_low) + kappa_low.sqrt());
    pre * inner.max(1.0)
}

/// Inputs of the general tangent/normal constant, in the notation of the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentNormalInputs {
    pub curve_count: usize,
    pub rho_bar: f64,
    pub kappa_low: f64,
    pub alpha: f64,
    pub gamma3: f64,
}

/// General form of `C(W,V,α)` including the `2Mρ̄` prefactor and the
/// numerically evaluated window norms.
pub fn tangent_normal_constant(norms: &FilterNorms, x: &TangentNormalInputs) -> f64 {
    let pre = 2.0 * x.curve_count as f64 * x.rho_bar * (2.0 * PI).sqrt() / (x.kappa_low.sqrt() * (2.0 * x.alpha).cos());
    let first = norms.c_w * norms.v_l1;
    let second = 2.0 * norms.norm_inv * (norms.v_prime_l1 + norms.v_l1 * x.gamma3 / (2.0 * x.kappa_low * x.kappa_low))
        + x.kappa_low.sqrt() * norms.w_check_weighted_sup;
    pre * first.max(second)
}

/// Derived constants of a filter bank applied to a particular scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConstants {
    pub norms: FilterNorms,
    /// `C(W,V,α)` from the closed form for step/triangle windows.
    pub c_filter: f64,
    /// `C(W,V,α)` from the general expression with numerical norms.
    pub c_filter_general: f64,
    /// `inf W^p` over `[-α²/(2κ̲), α²/(2κ̲)]`: the window height if that
    /// interval fits inside the half pass band, else 0.
    pub inf_wp: f64,
    pub c_geo: f64,
    /// Threshold `𝔗`; may be negative, in which case the theory gives no
    /// usable threshold.
    pub threshold_t: f64,
    /// Resolution `𝔇`; infinite when `inf_wp = 0`.
    pub resolution_d: f64,
}

impl FilterConstants {
    pub fn theory_vacuous(&self) -> bool {
        !(self.threshold_t > 0.0)
    }
}

/// Evaluate `C(W,V,α)`, `𝔗` and `𝔇` for `params` on the scene `spec`
/// (curvature, contrast, separation and `C_geo` are the scene's own).
pub fn filter_constants(params: &FilterParams, spec: &PhantomSpec) -> Result<FilterConstants> {
    let d = spec.derived();
    if d.kappa_low <= 0.0 {
        return Err(Error::ZeroCurvature);
    }
    let norms = filter_norms(params);
    let geo = geometry_constant(spec)?;
    let c_filter = step_window_constant(params.k_tex, params.k_max, params.alpha, d.kappa_low, d.gamma3_sup);
    let c_filter_general = tangent_normal_constant(
        &norms,
        &TangentNormalInputs {
            curve_count: d.curve_count,
            rho_bar: d.rho_bar,
            kappa_low: d.kappa_low,
            alpha: params.alpha,
            gamma3: d.gamma3_sup,
        },
    );
    let reach = params.alpha * params.alpha / (2.0 * d.kappa_low);
    let inf_wp = if reach <= 0.5 * params.band_width() { 0.5 / params.band_width() } else { 0.0 };
    let m = d.curve_count as f64;
    let threshold_t = (PI / (2.0 * d.kappa_bar)).sqrt() * d.rho_low * inf_wp
        - (c_filter * (2.0 * m - 1.0) / (2.0 * m * d.delta) + norms.norm_halfinv) * geo.c_geo;
    let resolution_d = if inf_wp > 0.0 {
        2.0 / d.rho_low * (2.0 * d.kappa_bar / PI).sqrt() / inf_wp * (4.0 * m - 1.0) * c_filter / (2.0 * m) * geo.c_geo
    } else {
        f64::INFINITY
    };
    Ok(FilterConstants { norms, c_filter, c_filter_general, inf_wp, c_geo: geo.c_geo, threshold_t, resolution_d })
}
