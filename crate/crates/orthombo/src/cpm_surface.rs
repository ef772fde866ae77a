//! Closest-point representation of closed surfaces and heat diffusion on
//! them through a narrow band of quadrature points and non-uniform FFTs.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{Cloud, Layout, MatrixField};
use crate::matgeom::SmallMatrix;
use crate::mbo::Diffuser;
use crate::nufft::{ModeGrid, NufftPlan};
use crate::{Error, Result};

/// Tail mass of the 3D heat kernel outside a ball,
/// `T(x) = (2x/√π)·e^{−x²} + erfc(x)`.
pub fn tail_t(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::OutOfRange("tail argument"));
    }
    Ok(2.0 * x / PI.sqrt() * (-x * x).exp() + libm::erfc(x))
}

/// Band half-width `w_b` with `T(w_b/(2√τ)) = ε`.
pub fn band_width(tau: f64, eps: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::OutOfRange("tau"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange("eps"));
    }
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if tail_t(mid)? > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(2.0 * tau.sqrt() * 0.5 * (lo + hi))
}

/// Unrounded mode count `(1/h)·√(|ln(√π·ε/(2h√τ))|/τ)` and spacing `h`.
pub fn spectral_parameters(tau: f64, eps: f64, r: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::OutOfRange("tau"));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange("eps"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::OutOfRange("R"));
    }
    let h = (PI / r).min(PI / (2.0 * (tau * eps.ln().abs()).sqrt()));
    let arg = PI.sqrt() * eps / (2.0 * h * tau.sqrt());
    Ok((h, (arg.ln().abs() / tau).sqrt() / h))
}

/// Mode lattice for the heat kernel at time `τ` to accuracy `ε` on `[−R, R]`.
pub fn spectral_grid(tau: f64, eps: f64, r: f64) -> Result<ModeGrid> {
    let (h, m) = spectral_parameters(tau, eps, r)?;
    ModeGrid::new(h, (m.ceil() as usize).max(1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn contains(&self, p: &[f64; 3], slack: f64) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] - slack && p[a] <= self.max[a] + slack)
    }
}

type ProfileFn = dyn Fn(f64) -> (f64, f64) + Send + Sync;
type ClosestFn = dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync;

const PROFILE_SAMPLES: usize = 1024;

/// Surface of revolution about the first axis, generated by the profile
/// `t ↦ (x(t), ρ(t))` with `ρ ≥ 0`.
pub struct Revolution {
    name: String,
    profile: Box<ProfileFn>,
    t0: f64,
    t1: f64,
    /// `(t, x, ρ)` on a uniform parameter grid.
    samples: Vec<[f64; 3]>,
}

impl Revolution {
    pub fn new<F>(name: &str, profile: F, t0: f64, t1: f64) -> Result<Self>
    where
        F: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidInput("profile parameter range".into()));
        }
        let samples: Vec<[f64; 3]> = (0..PROFILE_SAMPLES)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (PROFILE_SAMPLES - 1) as f64;
                let (x, rho) = profile(t);
                [t, x, rho]
            })
            .collect();
        if samples.iter().any(|s| !s[1].is_finite() || !(s[2] >= 0.0)) {
            return Err(Error::InvalidInput("profile must be finite with ρ ≥ 0".into()));
        }
        Ok(Self {
            name: name.to_string(),
            profile: Box::new(profile),
            t0,
            t1,
            samples,
        })
    }

    /// The peanut `x = 3t − t³`, `ρ = ½√((1+x²)(4−x²))`, `t ∈ [−1, 1]`.
    pub fn peanut() -> Self {
        Self::new(
            "peanut",
            |t| {
                let x = 3.0 * t - t * t * t;
                (x, 0.5 * ((1.0 + x * x) * (4.0 - x * x)).max(0.0).sqrt())
            },
            -1.0,
            1.0,
        )
        .expect("peanut profile is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        (self.profile)(t.clamp(self.t0, self.t1))
    }

    /// Profile parameter of the closest point to `(a, r)` in the half-plane.
    fn closest_parameter(&self, a: f64, r: f64) -> f64 {
        let dist = |x: f64, rho: f64| (x - a) * (x - a) + (rho - r) * (rho - r);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            let d = dist(s[1], s[2]);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let last = self.samples.len() - 1;
        let mut lo = self.samples[best.saturating_sub(1)][0];
        let mut hi = self.samples[(best + 1).min(last)][0];
        let f = |t: f64| {
            let (x, rho) = self.eval(t);
            dist(x, rho)
        };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        while hi - lo > 1e-12 {
            if fc <= fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = f(d);
            }
        }
        let t = 0.5 * (lo + hi);
        // the sampled minimizer wins unless refinement improves on it
        let ts = self.samples[best][0];
        if f(t) <= f(ts) {
            t
        } else {
            ts
        }
    }

    /// Meridian curvature (positive when convex) and outward unit normal in
    /// the `(x, ρ)` half-plane, by central differences.
    fn meridian_frame(&self, t: f64) -> (f64, [f64; 2]) {
        let step = 1e-4 * (self.t1 - self.t0);
        let t = t.clamp(self.t0 + step, self.t1 - step);
        let (xm, rm) = self.eval(t - step);
        let (x0, r0) = self.eval(t);
        let (xp, rp) = self.eval(t + step);
        let (dx, dr) = ((xp - xm) / (2.0 * step), (rp - rm) / (2.0 * step));
        let (ddx, ddr) = ((xp - 2.0 * x0 + xm) / (step * step), (rp - 2.0 * r0 + rm) / (step * step));
        let speed = dx.hypot(dr);
        if speed == 0.0 {
            return (0.0, [0.0, 1.0]);
        }
        let kappa = (dr * ddx - dx * ddr) / speed.powi(3);
        (kappa, [-dr / speed, dx / speed])
    }

    fn bounds(&self) -> Aabb {
        let xmin = self.samples.iter().map(|s| s[1]).fold(f64::INFINITY, f64::min);
        let xmax = self.samples.iter().map(|s| s[1]).fold(f64::NEG_INFINITY, f64::max);
        let rmax = self.samples.iter().map(|s| s[2]).fold(0.0, f64::max);
        Aabb {
            min: [xmin, -rmax, -rmax],
            max: [xmax, rmax, rmax],
        }
    }
}

/// Closed surface given through its closest-point map.
#[derive(Clone)]
pub enum Surface {
    Sphere { radius: f64 },
    Revolution(Arc<Revolution>),
    Custom { map: Arc<ClosestFn>, bounds: Aabb },
}

impl fmt::Debug for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::Sphere { radius } => write!(f, "Sphere {{ radius: {radius} }}"),
            Surface::Revolution(r) => write!(f, "Revolution({})", r.name),
            Surface::Custom { bounds, .. } => write!(f, "Custom {{ bounds: {bounds:?} }}"),
        }
    }
}

/// Closest point plus the normal-offset area factor at the query point.
struct Projection {
    point: [f64; 3],
    distance: f64,
    /// Ratio of the parallel-surface area element at the query to the
    /// surface area element at the closest point.
    jacobian: f64,
}

impl Surface {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::OutOfRange("sphere radius"));
        }
        Ok(Surface::Sphere { radius })
    }

    pub fn peanut() -> Self {
        Surface::Revolution(Arc::new(Revolution::peanut()))
    }

    pub fn custom<F>(map: F, bounds: Aabb) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    {
        Surface::Custom {
            map: Arc::new(map),
            bounds,
        }
    }

    pub fn bounds(&self) -> Aabb {
        match self {
            Surface::Sphere { radius } => Aabb {
                min: [-radius; 3],
                max: [*radius; 3],
            },
            Surface::Revolution(r) => r.bounds(),
            Surface::Custom { bounds, .. } => *bounds,
        }
    }

    pub fn closest_point(&self, x: [f64; 3]) -> [f64; 3] {
        self.project(x).point
    }

    fn project(&self, x: [f64; 3]) -> Projection {
        match self {
            Surface::Sphere { radius } => {
                let r = norm(x);
                let point = if r == 0.0 {
                    [*radius, 0.0, 0.0]
                } else {
                    x.map(|c| c * radius / r)
                };
                let s = r / radius;
                Projection {
                    point,
                    distance: (r - radius).abs(),
                    jacobian: s * s,
                }
            }
            Surface::Revolution(rev) => {
                let (a, r) = (x[0], x[1].hypot(x[2]));
                let t = rev.closest_parameter(a, r);
                let (xc, rho) = rev.eval(t);
                let (cos, sin) = if r == 0.0 { (1.0, 0.0) } else { (x[1] / r, x[2] / r) };
                let point = [xc, rho * cos, rho * sin];
                let (kappa, normal) = rev.meridian_frame(t);
                let signed = (a - xc) * normal[0] + (r - rho) * normal[1];
                let ring = if rho > 1e-9 { r / rho } else { 1.0 };
                Projection {
                    point,
                    distance: (a - xc).hypot(r - rho),
                    jacobian: (1.0 + kappa * signed) * ring,
                }
            }
            Surface::Custom { map, .. } => {
                let point = map(x);
                Projection {
                    point,
                    distance: norm(sub(x, point)),
                    jacobian: 1.0,
                }
            }
        }
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandSpec {
    pub dx: f64,
    pub w_b: f64,
    pub p: usize,
    pub eps: f64,
}

impl BandSpec {
    /// Upper bound on quadrature points accepted by [`build_band`].
    pub const MAX_POINTS: usize = 40_000_000;

    /// Band sized by the truncation bound for step `tau`.
    pub fn for_tau(dx: f64, tau: f64, eps: f64, p: usize) -> Result<Self> {
        let spec = Self {
            dx,
            w_b: band_width(tau, eps)?,
            p,
            eps,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(Error::OutOfRange("dx"));
        }
        if !(self.w_b > 0.0) || !self.w_b.is_finite() {
            return Err(Error::OutOfRange("band width"));
        }
        if !(1..=8).contains(&self.p) {
            return Err(Error::OutOfRange("quadrature order p"));
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(Error::OutOfRange("eps"));
        }
        if self.w_b < self.dx {
            return Err(Error::Config(format!(
                "band width {} is below the grid spacing {}",
                self.w_b, self.dx
            )));
        }
        Ok(())
    }

    /// Whether `T(w_b/(2√τ)) ≤ ε` holds for step `tau`.
    pub fn covers(&self, tau: f64) -> Result<bool> {
        Ok(tail_t(self.w_b / (2.0 * tau.sqrt()))? <= self.eps * (1.0 + 1e-9))
    }
}

/// Chebyshev nodes `cos((2k−1)π/(2p))` on `[−1, 1]` with Fejér weights.
pub fn chebyshev_rule(p: usize) -> Vec<(f64, f64)> {
    (1..=p)
        .map(|k| {
            let theta = (2 * k - 1) as f64 * PI / (2 * p) as f64;
            let s: f64 = (1..=p / 2)
                .map(|j| (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0))
                .sum();
            (theta.cos(), 2.0 / p as f64 * (1.0 - 2.0 * s))
        })
        .collect()
}

/// Retained grid cells, their quadrature points and the closest points the
/// field lives on.
#[derive(Debug)]
pub struct BandSet {
    pub spec: BandSpec,
    /// Lower corners `x_g` of retained cells.
    pub grid_points: Vec<[f64; 3]>,
    pub distances: Vec<f64>,
    /// `p³` points per cell, cell-major.
    pub quad_points: Vec<[f64; 3]>,
    pub quad_weights: Vec<f64>,
    /// Field sample points, one per quadrature point.
    pub closest: Vec<[f64; 3]>,
    /// Surface measure represented by each closest point.
    pub surface_weights: Vec<f64>,
    layout: Arc<Layout<f64>>,
}

impl BandSet {
    pub fn n_q(&self) -> usize {
        self.quad_points.len()
    }

    pub fn cell_count(&self) -> usize {
        self.grid_points.len()
    }

    /// Field layout over the closest points, weighted by surface measure.
    pub fn layout(&self) -> Arc<Layout<f64>> {
        self.layout.clone()
    }

    pub fn area(&self) -> f64 {
        self.surface_weights.iter().sum()
    }

    /// Tight box around all quadrature and closest points.
    pub fn extent(&self) -> Aabb {
        let mut b = Aabb {
            min: [f64::INFINITY; 3],
            max: [f64::NEG_INFINITY; 3],
        };
        for p in self.quad_points.iter().chain(&self.closest) {
            for (a, &x) in p.iter().enumerate() {
                b.min[a] = b.min[a].min(x);
                b.max[a] = b.max[a].max(x);
            }
        }
        b
    }
}

/// Minimum of the area factor used for surface weights.
const MIN_JACOBIAN: f64 = 0.05;

pub fn build_band(surface: &Surface, spec: BandSpec) -> Result<BandSet> {
    spec.validate()?;
    let bounds = surface.bounds();
    let pad = spec.w_b + spec.dx;
    // cells sit on the lattice dx·Z³, so bands of different widths share cells
    let first: [i64; 3] = std::array::from_fn(|a| ((bounds.min[a] - pad) / spec.dx).floor() as i64);
    let counts: [usize; 3] = std::array::from_fn(|a| {
        (((bounds.max[a] + pad) / spec.dx).ceil() as i64 - first[a]) as usize + 1
    });
    let total = counts.iter().product::<usize>();
    let rule = chebyshev_rule(spec.p);
    let cell_pts = spec.p.pow(3);
    if (total as f64) * cell_pts as f64 > 64.0 * BandSpec::MAX_POINTS as f64 {
        return Err(Error::TooLarge(total as u64));
    }
    let slack = 1e-9 * (1.0 + bounds.max.iter().chain(&bounds.min).fold(0.0f64, |m, v| m.max(v.abs())));

    // retained cells, scanned slab by slab
    let cells: Vec<([f64; 3], f64)> = (0..counts[2])
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut out = Vec::new();
            for j in 0..counts[1] {
                for i in 0..counts[0] {
                    let x = [
                        (first[0] + i as i64) as f64 * spec.dx,
                        (first[1] + j as i64) as f64 * spec.dx,
                        (first[2] + k as i64) as f64 * spec.dx,
                    ];
                    let d = surface.project(x).distance;
                    if d < spec.w_b {
                        out.push((x, d));
                    }
                }
            }
            out
        })
        .collect();
    if cells.is_empty() {
        return Err(Error::Config("band contains no grid cells".into()));
    }
    let n_q = cells.len() * cell_pts;
    if n_q > BandSpec::MAX_POINTS {
        return Err(Error::TooLarge(n_q as u64));
    }

    let half = 0.5 * spec.dx;
    let offsets: Vec<([f64; 3], f64)> = (0..cell_pts)
        .map(|i| {
            let (a, b, c) = (&rule[i % spec.p], &rule[(i / spec.p) % spec.p], &rule[i / (spec.p * spec.p)]);
            (
                [half * (1.0 + a.0), half * (1.0 + b.0), half * (1.0 + c.0)],
                half * half * half * a.1 * b.1 * c.1,
            )
        })
        .collect();
    let quad: Vec<([f64; 3], f64, [f64; 3], f64)> = cells
        .par_iter()
        .flat_map_iter(|(x, _)| {
            offsets.iter().map(move |(o, w)| {
                let q = [x[0] + o[0], x[1] + o[1], x[2] + o[2]];
                let proj = surface.project(q);
                let s = w / (2.0 * spec.w_b * proj.jacobian.max(MIN_JACOBIAN));
                (q, *w, proj.point, s)
            })
        })
        .collect();
    if let Some(i) = quad.iter().position(|t| !bounds.contains(&t.2, slack)) {
        return Err(Error::InvalidInput(format!(
            "closest point {i} lies outside the surface bounding box"
        )));
    }
    let mut quad_points = Vec::with_capacity(n_q);
    let mut quad_weights = Vec::with_capacity(n_q);
    let mut closest = Vec::with_capacity(n_q);
    let mut surface_weights = Vec::with_capacity(n_q);
    for (q, w, c, s) in quad {
        quad_points.push(q);
        quad_weights.push(w);
        closest.push(c);
        surface_weights.push(s);
    }
    let (grid_points, distances) = cells.into_iter().unzip();
    let layout = Arc::new(Layout::Cloud(Cloud {
        points: closest.clone(),
        weights: surface_weights.clone(),
    }));
    Ok(BandSet {
        spec,
        grid_points,
        distances,
        quad_points,
        quad_weights,
        closest,
        surface_weights,
        layout,
    })
}

/// Free-space heat flow of the closest-point extension, read back on the
/// surface.
pub struct SurfaceDiffuser {
    tau: f64,
    layout: Arc<Layout<f64>>,
    modes: ModeGrid,
    plan: NufftPlan,
    /// Quadrature points mapped into `[−π, π)³`.
    sources: Vec<[f64; 3]>,
    /// Closest points mapped into `[−π, π)³`.
    targets: Vec<[f64; 3]>,
    /// Quadrature weights in mapped units.
    weights: Vec<f64>,
    /// `n_q·e^{−|m|²h²τ}` on the mode lattice; zero on the `−M` faces so the
    /// kernel stays real.
    multiplier: Vec<f64>,
    constant: f64,
    analytic: f64,
}

/// Fraction of `[−π, π)` the mapped band may occupy.
const BOX_FILL: f64 = 0.98;

impl SurfaceDiffuser {
    pub fn new(band: &BandSet, tau: f64, eps: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::OutOfRange("tau"));
        }
        let ext = band.extent();
        let center: [f64; 3] = std::array::from_fn(|a| 0.5 * (ext.min[a] + ext.max[a]));
        let half = (0..3).map(|a| 0.5 * (ext.max[a] - ext.min[a])).fold(0.0, f64::max);
        let scale = BOX_FILL * PI / half.max(f64::MIN_POSITIVE);
        let map = |p: &[f64; 3]| -> [f64; 3] { std::array::from_fn(|a| (p[a] - center[a]) * scale) };
        let tau_s = scale * scale * tau;
        let modes = spectral_grid(tau_s, eps, PI)?;
        let plan = NufftPlan::new(modes, eps.clamp(1e-12, 1e-2))?;
        let vol = scale.powi(3);
        let n_q = band.n_q() as f64;
        let m = modes.m_half as i64;
        let h2t = modes.h * modes.h * tau_s;
        let multiplier = (0..modes.len())
            .map(|i| {
                let k = modes.mode(i);
                if k.iter().any(|&c| c == -m) {
                    0.0
                } else {
                    n_q * (-h2t * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).exp()
                }
            })
            .collect();
        let mut d = Self {
            tau,
            layout: band.layout(),
            modes,
            plan,
            sources: band.quad_points.iter().map(map).collect(),
            targets: band.closest.iter().map(map).collect(),
            weights: band.quad_weights.iter().map(|w| w * vol).collect(),
            multiplier,
            constant: 1.0,
            analytic: (modes.h / (2.0 * PI)).powi(3),
        };
        let ones = vec![1.0; band.n_q()];
        let raw = d.apply(&[&ones])?.pop().expect("one component");
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidInput("calibration produced a non-positive mass".into()));
        }
        d.constant = 1.0 / mean;
        Ok(d)
    }

    pub fn modes(&self) -> &ModeGrid {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Normalization fixed by constant-field invariance.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// `(h/2π)³` from the kernel's Fourier expansion.
    pub fn analytic_constant(&self) -> f64 {
        self.analytic
    }

    /// Diffuses scalar fields given at the closest points.
    pub fn diffuse_scalars(&self, comps: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        for c in comps {
            if c.len() != self.len() {
                return Err(Error::DimensionMismatch(c.len(), self.len()));
            }
        }
        self.apply(comps)
    }

    fn apply(&self, comps: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        let k = comps.len().div_ceil(2);
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * k];
        for (q, chunk) in coeffs.chunks_exact_mut(k).enumerate() {
            let w = self.weights[q];
            for (j, c) in chunk.iter_mut().enumerate() {
                let im = comps.get(2 * j + 1).map_or(0.0, |v| v[q]);
                *c = Complex64::new(comps[2 * j][q] * w, im * w);
            }
        }
        let mut spectra = self.plan.type1_many(&self.sources, &coeffs, k)?;
        drop(coeffs);
        for s in spectra.iter_mut() {
            for (v, &m) in s.iter_mut().zip(&self.multiplier) {
                *v *= m;
            }
        }
        let refs: Vec<&[Complex64]> = spectra.iter().map(|s| s.as_slice()).collect();
        let values = self.plan.type2_many(&refs, &self.targets)?;
        drop(spectra);
        let c = self.constant;
        Ok((0..comps.len())
            .map(|i| {
                let j = i / 2;
                values
                    .chunks_exact(k)
                    .map(|v| c * if i % 2 == 0 { v[j].re } else { v[j].im })
                    .collect()
            })
            .collect())
    }

    fn check_layout(&self, f: &MatrixField<f64>) -> Result<()> {
        if Arc::ptr_eq(f.layout(), &self.layout) || f.layout().as_ref() == self.layout.as_ref() {
            Ok(())
        } else {
            Err(Error::BackendMismatch)
        }
    }
}

impl Diffuser<f64> for SurfaceDiffuser {
    fn tau(&self) -> f64 {
        self.tau
    }

    fn diffuse(&self, f: &MatrixField<f64>) -> Result<MatrixField<f64>> {
        self.check_layout(f)?;
        let n = f.n();
        let comps: Vec<Vec<f64>> = (0..n * n).map(|k| f.component(k)).collect();
        let refs: Vec<&[f64]> = comps.iter().map(|c| c.as_slice()).collect();
        let out = self.apply(&refs)?;
        drop(comps);
        let data = (0..f.len())
            .map(|q| {
                let mut m = SmallMatrix::zeros(n);
                for (k, c) in out.iter().enumerate() {
                    m.set_entry(k, c[q]);
                }
                m
            })
            .collect();
        f.with_data(data)
    }
}

/// One-shot surface diffusion of a field on `band`'s closest points.
pub fn diffuse_surface(band: &BandSet, f: &MatrixField<f64>, tau: f64, eps: f64) -> Result<MatrixField<f64>> {
    SurfaceDiffuser::new(band, tau, eps)?.diffuse(f)
}
