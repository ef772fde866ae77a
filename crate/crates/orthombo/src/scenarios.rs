//! Named initial conditions: line defects on the flat torus and two-patch
//! fields on the sphere and the peanut.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::cpm_surface::Surface;
use crate::field::{GridSpec, Layout, MatrixField};
use crate::matgeom::{t_minus, t_plus, SmallMatrix};
use crate::{Error, Real, Result};

/// Printed values of the matrix used on the first patch (not orthogonal).
pub const PATCH_A: [f64; 9] = [
    0.392227, 0.706046, 0.046171, //
    0.655478, 0.031833, 0.097132, //
    0.171187, 0.276923, 0.82346,
];

/// Printed values of the matrix used elsewhere.
pub const PATCH_B: [f64; 9] = [
    0.699077, 0.547216, 0.257508, //
    0.890903, 0.138624, 0.840717, //
    0.959291, 0.149294, 0.254282,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scenario {
    TorusStarDefect,
    TorusParallelDefects,
    TorusWinding { m: i64 },
    TorusDiskN1 { radius: f64 },
    SphereTwoPatches,
    PeanutTwoPatches,
    TorusVolumeStar,
    SphereVolume,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::TorusStarDefect,
        Scenario::TorusParallelDefects,
        Scenario::TorusWinding { m: 1 },
        Scenario::TorusDiskN1 { radius: 0.3 },
        Scenario::SphereTwoPatches,
        Scenario::PeanutTwoPatches,
        Scenario::TorusVolumeStar,
        Scenario::SphereVolume,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TorusStarDefect => "torus_star_defect",
            Scenario::TorusParallelDefects => "torus_parallel_defects",
            Scenario::TorusWinding { .. } => "torus_winding",
            Scenario::TorusDiskN1 { .. } => "torus_disk_n1",
            Scenario::SphereTwoPatches => "sphere_two_patches",
            Scenario::PeanutTwoPatches => "peanut_two_patches",
            Scenario::TorusVolumeStar => "torus_volume_star",
            Scenario::SphereVolume => "sphere_volume",
        }
    }

    /// Matrix dimension of the field.
    pub fn n(&self) -> usize {
        match self {
            Scenario::TorusDiskN1 { .. } => 1,
            Scenario::SphereTwoPatches | Scenario::PeanutTwoPatches | Scenario::SphereVolume => 3,
            _ => 2,
        }
    }

    /// Built-in surface name for surface scenarios.
    pub fn surface_name(&self) -> Option<&'static str> {
        match self {
            Scenario::SphereTwoPatches | Scenario::SphereVolume => Some("sphere"),
            Scenario::PeanutTwoPatches => Some("peanut"),
            _ => None,
        }
    }

    pub fn volume_constrained(&self) -> bool {
        matches!(self, Scenario::TorusVolumeStar | Scenario::SphereVolume)
    }

    /// Time step used for the scenario in the published runs, with torus
    /// steps counted in units of 1/1024.
    pub fn reference_tau(&self) -> f64 {
        match self {
            Scenario::TorusStarDefect | Scenario::TorusVolumeStar => 8.0 / 1024.0,
            Scenario::TorusParallelDefects | Scenario::TorusWinding { .. } => 64.0 / 1024.0,
            Scenario::TorusDiskN1 { .. } => 2.0 / 1024.0,
            Scenario::SphereTwoPatches => 0.005,
            Scenario::PeanutTwoPatches => 0.032,
            Scenario::SphereVolume => 0.01,
        }
    }

    /// Samples the initial field on `layout`: a 2-torus grid for torus
    /// scenarios, a cloud for surface scenarios.
    pub fn initial_field<T: Real>(&self, layout: Arc<Layout<T>>) -> Result<MatrixField<T>> {
        match (self.surface_name(), layout.as_ref()) {
            (None, Layout::Grid(g)) if g.d() == 2 => {}
            (Some(_), Layout::Cloud(_)) => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "layout does not fit scenario {}",
                    self.name()
                )))
            }
        }
        let n = self.n();
        match *self {
            Scenario::TorusStarDefect | Scenario::TorusVolumeStar => {
                MatrixField::from_fn(layout, n, |p, _| {
                    let (x, y) = (p[0], p[1]);
                    let alpha = T::FRAC_PI_2() * (T::TAU() * (x + y)).sin();
                    let r = x.hypot(y);
                    let theta = y.atan2(x);
                    angle_matrix(alpha, r < T::lit(0.3) + T::lit(0.06) * (T::lit(6.0) * theta).sin())
                })
            }
            Scenario::TorusParallelDefects => MatrixField::from_fn(layout, n, |p, _| {
                angle_matrix(T::PI() * (T::TAU() * p[1]).sin(), outside_strip(p[0], p[1]))
            }),
            Scenario::TorusWinding { m } => MatrixField::from_fn(layout, n, |p, _| {
                angle_matrix(T::TAU() * T::lit(m as f64) * p[1], outside_strip(p[0], p[1]))
            }),
            Scenario::TorusDiskN1 { radius } => MatrixField::from_fn(layout, n, |p, _| {
                let inside = p[0].hypot(p[1]) < T::lit(radius);
                SmallMatrix::diag(&[if inside { T::one() } else { -T::one() }])
            }),
            Scenario::SphereTwoPatches | Scenario::SphereVolume => {
                let (a, b) = patch_matrices::<T>()?;
                MatrixField::from_fn(layout, n, |p, _| {
                    if p[0] < T::zero() && p[1] < T::zero() && p[2] > T::zero() {
                        a
                    } else {
                        b
                    }
                })
            }
            Scenario::PeanutTwoPatches => {
                let (a, b) = patch_matrices::<T>()?;
                MatrixField::from_fn(layout, n, |p, _| {
                    let (y2, z2) = (p[1] * p[1], p[2] * p[2]);
                    if p[0] > ((y2 + z2) * (y2 + T::lit(0.1)) / T::lit(1.5)).sqrt() {
                        a
                    } else {
                        b
                    }
                })
            }
        }
    }

    /// Unit-torus grid with `size²` points.
    pub fn torus_layout<T: Real>(size: usize) -> Result<Arc<Layout<T>>> {
        Ok(Arc::new(Layout::Grid(GridSpec::unit_torus(size)?)))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::TorusWinding { m } => write!(f, "{}({m})", self.name()),
            Scenario::TorusDiskN1 { radius } => write!(f, "{}({radius})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

/// Accepts a bare name or `name(parameter)` for the two parameterized
/// scenarios.
impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(s[i + 1..s.len() - 1].trim())),
            Some(_) => return Err(Error::Config(format!("malformed scenario `{s}`"))),
            None => (s, None),
        };
        let bad = || Error::Config(format!("bad parameter in scenario `{s}`"));
        let plain = |sc: Scenario| match arg {
            None => Ok(sc),
            Some(_) => Err(Error::Config(format!("scenario `{name}` takes no parameter"))),
        };
        match name {
            "torus_star_defect" => plain(Scenario::TorusStarDefect),
            "torus_parallel_defects" => plain(Scenario::TorusParallelDefects),
            "torus_winding" => {
                let m = arg.map_or(Ok(1), |a| a.parse().map_err(|_| bad()))?;
                Ok(Scenario::TorusWinding { m })
            }
            "torus_disk_n1" => {
                let radius: f64 = arg.map_or(Ok(0.3), |a| a.parse().map_err(|_| bad()))?;
                if !(0.0..0.5).contains(&radius) {
                    return Err(bad());
                }
                Ok(Scenario::TorusDiskN1 { radius })
            }
            "sphere_two_patches" => plain(Scenario::SphereTwoPatches),
            "peanut_two_patches" => plain(Scenario::PeanutTwoPatches),
            "torus_volume_star" => plain(Scenario::TorusVolumeStar),
            "sphere_volume" => plain(Scenario::SphereVolume),
            _ => Err(Error::Config(format!("unknown scenario `{name}`"))),
        }
    }
}

/// Rotation by `alpha` on the SO(2) side, the reflection branch otherwise.
fn angle_matrix<T: Real>(alpha: T, plus: bool) -> SmallMatrix<T> {
    let (s, c) = alpha.sin_cos();
    let e = if plus { [c, -s, s, c] } else { [c, s, s, -c] };
    SmallMatrix::from_rows(2, &e).expect("finite angle")
}

/// `x > 0.25|sin(2.5πy)| + 0.2` or `x < −0.25|sin(2.5πy)| − 0.2`.
fn outside_strip<T: Real>(x: T, y: T) -> bool {
    let w = T::lit(0.25) * (T::lit(2.5) * T::PI() * y).sin().abs() + T::lit(0.2);
    x > w || x < -w
}

/// The two patch matrices projected onto SO(3) and SO⁻(3).
pub fn patch_matrices<T: Real>() -> Result<(SmallMatrix<T>, SmallMatrix<T>)> {
    let a = SmallMatrix::from_rows(3, &PATCH_A.map(T::lit))?;
    let b = SmallMatrix::from_rows(3, &PATCH_B.map(T::lit))?;
    Ok((t_plus(&a)?, t_minus(&b)?))
}

/// `sphere` (unit radius) or `peanut`.
pub fn builtin_surface(name: &str) -> Result<Surface> {
    match name {
        "sphere" => Surface::sphere(1.0),
        "peanut" => Ok(Surface::peanut()),
        _ => Err(Error::Config(format!("unknown surface `{name}`"))),
    }
}
