//! Analytic scenes: piecewise-constant regions bounded by ellipses or
//! polygons, plus a smooth Gaussian texture, with exact Fourier transforms.

mod config;
mod derived;
mod ft;
mod shapes;

use num_complex::Complex64;

pub use derived::CurveRef;
pub use ft::{boundary_integral_ft, ellipse_ft, gaussian_ft, line_segment_ft, polycurve_ft};
pub use shapes::{ClosedCurve, Ellipse, Gaussian, ParametricCurve, PolyCurve};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::SpectralGrid;

/// Constants of a scene that the error bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    /// Number of boundary curves `M`.
    pub curve_count: usize,
    /// Minimum separation `δ` between distinct curves and between far-apart
    /// arcs of one ellipse. Infinite when nothing constrains it.
    pub delta: f64,
    /// Lower curvature bound; zero as soon as a polygon is present.
    pub kappa_low: f64,
    /// Upper curvature bound over the ellipses (zero without ellipses).
    pub kappa_bar: f64,
    pub rho_low: f64,
    pub rho_bar: f64,
    /// `sup |γ'''|` of the unit-speed ellipse parameterisations.
    pub gamma3_sup: f64,
    pub total_arclength: f64,
}

/// A complete analytic scene.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    ellipses: Vec<Ellipse>,
    texture: Vec<Gaussian>,
    polycurves: Vec<PolyCurve>,
    derived: Derived,
}

const DEFAULT_CONFIG: &str = include_str!("../../data/default_phantom.cfg");

impl PhantomSpec {
    /// Build a scene and compute its derived constants.
    ///
    /// Fails if a curve has zero amplitude or if two curves touch.
    pub fn new(ellipses: Vec<Ellipse>, texture: Vec<Gaussian>, polycurves: Vec<PolyCurve>) -> Result<Self> {
        let mut spec = PhantomSpec {
            ellipses,
            texture,
            polycurves,
            derived: Derived {
                curve_count: 0,
                delta: f64::INFINITY,
                kappa_low: 0.0,
                kappa_bar: 0.0,
                rho_low: 0.0,
                rho_bar: 0.0,
                gamma3_sup: 0.0,
                total_arclength: 0.0,
            },
        };
        spec.derived = spec.compute_derived()?;
        Ok(spec)
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new()).expect("empty scene is valid")
    }

    /// The scene shipped with the crate (see `data/default_phantom.cfg`).
    pub fn default_phantom() -> Self {
        Self::from_config(DEFAULT_CONFIG, "default_phantom.cfg").expect("bundled phantom config is valid")
    }

    /// Text of the bundled default scene.
    pub fn default_config_text() -> &'static str {
        DEFAULT_CONFIG
    }

    pub fn from_config(text: &str, source: &str) -> Result<Self> {
        config::parse(text, source)
    }

    pub fn from_config_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config(&text, &path.display().to_string())
    }

    /// Serialise in the config grammar; parsing the result gives back an
    /// identical scene.
    pub fn to_config(&self) -> String {
        config::render(self)
    }

    pub fn ellipses(&self) -> &[Ellipse] {
        &self.ellipses
    }

    pub fn texture(&self) -> &[Gaussian] {
        &self.texture
    }

    pub fn polycurves(&self) -> &[PolyCurve] {
        &self.polycurves
    }

    pub fn derived(&self) -> &Derived {
        &self.derived
    }

    /// All boundary curves, ellipses first.
    pub fn curves(&self) -> Vec<CurveRef<'_>> {
        self.ellipses.iter().map(CurveRef::Ellipse).chain(self.polycurves.iter().map(CurveRef::Poly)).collect()
    }

    /// Largest bandwidth among the texture bumps (zero without texture).
    pub fn texture_bandwidth(&self) -> f64 {
        self.texture.iter().map(Gaussian::bandwidth).fold(0.0, f64::max)
    }

    /// True if every curve and bump centre lies inside the open unit square.
    pub fn inside_unit_square(&self) -> bool {
        self.ellipses.iter().all(Ellipse::inside_unit_square) && self.polycurves.iter().all(PolyCurve::inside_unit_square)
    }

    /// Exact transform of the whole scene at `k`.
    pub fn ft(&self, k: Vec2) -> Complex64 {
        let e: Complex64 = self.ellipses.iter().map(|e| ellipse_ft(e, k)).sum();
        let p: Complex64 = self.polycurves.iter().map(|p| polycurve_ft(p, k)).sum();
        let g: Complex64 = self.texture.iter().map(|g| gaussian_ft(g, k)).sum();
        e + p + g
    }

    /// Transform of the piecewise-constant part only.
    pub fn step_ft(&self, k: Vec2) -> Complex64 {
        let e: Complex64 = self.ellipses.iter().map(|e| ellipse_ft(e, k)).sum();
        let p: Complex64 = self.polycurves.iter().map(|p| polycurve_ft(p, k)).sum();
        e + p
    }

    /// Point-wise value of the scene (no band limit).
    pub fn value_at(&self, x: Vec2) -> f64 {
        let mut v = 0.0;
        for e in &self.ellipses {
            let l = (x - e.center).rotate(-e.phi);
            if (l.x / e.a).powi(2) + (l.y / e.b).powi(2) < 1.0 {
                v += e.amplitude;
            }
        }
        for p in &self.polycurves {
            if point_in_polygon(p.vertices(), x) {
                v += p.amplitude;
            }
        }
        for g in &self.texture {
            v += g.amplitude * (-(x - g.center).norm_sq() / (2.0 * g.sigma * g.sigma)).exp();
        }
        v
    }

    /// The same scene rotated by `angle` about the image centre `(½, ½)`.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let c = Vec2::new(0.5, 0.5);
        let rot = |p: Vec2| c + (p - c).rotate(angle);
        let ellipses = self
            .ellipses
            .iter()
            .map(|e| Ellipse::new(rot(e.center), e.a, e.b, e.phi + angle, e.amplitude))
            .collect::<Result<Vec<_>>>()?;
        let texture =
            self.texture.iter().map(|g| Gaussian::new(rot(g.center), g.sigma, g.amplitude)).collect::<Result<Vec<_>>>()?;
        let polycurves = self
            .polycurves
            .iter()
            .map(|p| PolyCurve::new(p.vertices().iter().map(|&v| rot(v)).collect(), p.amplitude))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ellipses, texture, polycurves)
    }

    fn compute_derived(&self) -> Result<Derived> {
        let curves = self.curves();
        let mut d = Derived {
            curve_count: curves.len(),
            delta: f64::INFINITY,
            kappa_low: 0.0,
            kappa_bar: 0.0,
            rho_low: 0.0,
            rho_bar: 0.0,
            gamma3_sup: 0.0,
            total_arclength: 0.0,
        };
        if curves.is_empty() {
            return Ok(d);
        }
        if let Some(c) = curves.iter().find(|c| c.amplitude() == 0.0) {
            return Err(Error::InvalidGeometry(format!("curve with zero contrast ({c:?})")));
        }
        d.rho_low = curves.iter().map(|c| c.amplitude().abs()).fold(f64::INFINITY, f64::min);
        d.rho_bar = curves.iter().map(|c| c.amplitude().abs()).fold(0.0, f64::max);
        d.total_arclength = curves.iter().map(CurveRef::arclength).sum();
        d.kappa_bar = self.ellipses.iter().map(|e| e.curvature_range().1).fold(0.0, f64::max);
        d.kappa_low = if self.polycurves.is_empty() {
            self.ellipses.iter().map(|e| e.curvature_range().0).fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        d.gamma3_sup = self.ellipses.iter().map(Ellipse::third_derivative_sup).fold(0.0, f64::max);

        let mut delta = f64::INFINITY;
        for i in 0..curves.len() {
            for j in (i + 1)..curves.len() {
                delta = delta.min(derived::cross_distance(curves[i], curves[j]));
            }
        }
        if d.kappa_bar > 0.0 {
            let sep = 0.5 * std::f64::consts::PI / d.kappa_bar;
            for e in &self.ellipses {
                delta = delta.min(derived::same_curve_distance(e, sep));
            }
        }
        if delta < 1e-12 {
            return Err(Error::InvalidGeometry("boundary curves touch or intersect".into()));
        }
        d.delta = delta;
        Ok(d)
    }
}

fn point_in_polygon(v: &[Vec2], x: Vec2) -> bool {
    let n = v.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.y > x.y) != (b.y > x.y) {
            let xc = a.x + (x.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if x.x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Sample the exact transform of `spec` on the centred lattice of exponent `m`.
///
/// Fails if the texture is not band-limited below the grid's `k_max`, or if
/// a curve leaves the unit square (the sampled image would wrap around).
pub fn sample_phantom(spec: &PhantomSpec, m: u32) -> Result<SpectralGrid> {
    let grid = SpectralGrid::new(m)?;
    let limit = grid.k_max();
    let bw = spec.texture_bandwidth();
    if bw >= limit {
        return Err(Error::TextureBandwidth { bandwidth: bw, limit });
    }
    if !spec.inside_unit_square() {
        return Err(Error::InvalidGeometry("scene must lie strictly inside the unit square".into()));
    }
    SpectralGrid::from_fn(m, |k| spec.ft(k))
}
