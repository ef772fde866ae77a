//! Run configuration in flat `section.key = value` form.
//!
//! ```text
//! # comment
//! scenario.name = torus_star_defect
//! run.tau = 0.0078125
//! grid.size = 256
//! ```
//!
//! | key | default |
//! |---|---|
//! | `scenario.name` | required |
//! | `run.tau` | scenario reference step |
//! | `run.max_iters` | 1000 |
//! | `run.stop_tol` | 1e-8 |
//! | `run.volume_target` | initial SO(n) measure for volume scenarios |
//! | `grid.size` | 256 |
//! | `surface.dx`, `surface.p`, `surface.eps` | 0.05, 3, 1e-6 (sphere); 0.04, 4, 1e-6 (peanut) |
//! | `output.dir` | `out` |
//! | `output.snapshot_every` | 10 (0 keeps only the first and last) |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::scenarios::Scenario;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceParams {
    pub dx: f64,
    pub p: usize,
    pub eps: f64,
}

impl SurfaceParams {
    pub fn for_surface(name: &str) -> Self {
        match name {
            "peanut" => Self { dx: 0.04, p: 4, eps: 1e-6 },
            _ => Self { dx: 0.05, p: 3, eps: 1e-6 },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub tau: f64,
    pub max_iters: usize,
    pub stop_tol: f64,
    /// Explicit SO(n) measure; volume scenarios default to the initial one.
    pub volume_target: Option<f64>,
    pub grid_size: usize,
    pub surface: SurfaceParams,
    pub out_dir: PathBuf,
    pub snapshot_every: usize,
}

const KEYS: [&str; 11] = [
    "scenario.name",
    "run.tau",
    "run.max_iters",
    "run.stop_tol",
    "run.volume_target",
    "grid.size",
    "surface.dx",
    "surface.p",
    "surface.eps",
    "output.dir",
    "output.snapshot_every",
];

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            tau: scenario.reference_tau(),
            max_iters: 1000,
            stop_tol: 1e-8,
            volume_target: None,
            grid_size: 256,
            surface: SurfaceParams::for_surface(scenario.surface_name().unwrap_or("sphere")),
            out_dir: PathBuf::from("out"),
            snapshot_every: 10,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if map.insert(k, v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        let scenario: Scenario = map
            .get("scenario.name")
            .ok_or_else(|| Error::Config("missing scenario.name".into()))?
            .parse()?;
        let mut c = Self::new(scenario);
        set(&map, "run.tau", &mut c.tau)?;
        set(&map, "run.max_iters", &mut c.max_iters)?;
        set(&map, "run.stop_tol", &mut c.stop_tol)?;
        if let Some(v) = map.get("run.volume_target") {
            c.volume_target = Some(value("run.volume_target", v)?);
        }
        set(&map, "grid.size", &mut c.grid_size)?;
        set(&map, "surface.dx", &mut c.surface.dx)?;
        set(&map, "surface.p", &mut c.surface.p)?;
        set(&map, "surface.eps", &mut c.surface.eps)?;
        if let Some(v) = map.get("output.dir") {
            c.out_dir = PathBuf::from(v);
        }
        set(&map, "output.snapshot_every", &mut c.snapshot_every)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config("run.tau must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("run.max_iters must be at least 1".into()));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config("run.stop_tol must be non-negative".into()));
        }
        if self.volume_target.is_some() && !self.scenario.volume_constrained() {
            return Err(Error::Config(format!(
                "run.volume_target given for unconstrained scenario {}",
                self.scenario
            )));
        }
        if self.scenario.surface_name().is_none() && self.grid_size < 8 {
            return Err(Error::Config("grid.size must be at least 8".into()));
        }
        let s = &self.surface;
        if !(s.dx > 0.0) || !(1..=8).contains(&s.p) || !(s.eps > 0.0 && s.eps < 0.5) {
            return Err(Error::Config("surface parameters out of range".into()));
        }
        Ok(())
    }

    /// The configuration in the same text form [`RunConfig::parse`] reads.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "scenario.name = {}\nrun.tau = {}\nrun.max_iters = {}\nrun.stop_tol = {:e}\n",
            self.scenario, self.tau, self.max_iters, self.stop_tol
        );
        if let Some(v) = self.volume_target {
            s += &format!("run.volume_target = {v}\n");
        }
        if self.scenario.surface_name().is_some() {
            s += &format!(
                "surface.dx = {}\nsurface.p = {}\nsurface.eps = {:e}\n",
                self.surface.dx, self.surface.p, self.surface.eps
            );
        } else {
            s += &format!("grid.size = {}\n", self.grid_size);
        }
        s + &format!(
            "output.dir = {}\noutput.snapshot_every = {}\n",
            self.out_dir.display(),
            self.snapshot_every
        )
    }
}

fn value<V: FromStr>(key: &str, v: &str) -> Result<V> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for {key}")))
}

fn set<V: FromStr>(map: &BTreeMap<&str, &str>, key: &str, slot: &mut V) -> Result<()> {
    if let Some(v) = map.get(key) {
        *slot = value(key, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_scenario() {
        let c = RunConfig::parse("scenario.name = torus_star_defect").unwrap();
        assert_eq!(c.tau, 0.0078125);
        assert_eq!(c.grid_size, 256);
        assert_eq!(c.stop_tol, 1e-8);
        assert_eq!(c.snapshot_every, 10);
        let c = RunConfig::parse("scenario.name = peanut_two_patches").unwrap();
        assert_eq!(c.surface, SurfaceParams { dx: 0.04, p: 4, eps: 1e-6 });
        assert_eq!(c.tau, 0.032);
    }

    #[test]
    fn full_file() {
        let text = "# star\nscenario.name = torus_winding(2)  # m = 2\n\nrun.tau = 0.002\nrun.max_iters = 50\n\
                    grid.size = 64\noutput.dir = /tmp/x\noutput.snapshot_every = 0\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.scenario, Scenario::TorusWinding { m: 2 });
        assert_eq!((c.tau, c.max_iters, c.grid_size, c.snapshot_every), (0.002, 50, 64, 0));
        assert_eq!(c.out_dir, PathBuf::from("/tmp/x"));
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors() {
        for bad in [
            "",
            "run.tau = 0.1",
            "scenario.name = nope",
            "scenario.name = torus_star_defect\nrun.tau = -1",
            "scenario.name = torus_star_defect\nrun.tau = abc",
            "scenario.name = torus_star_defect\nrun.tau = 0.1\nrun.tau = 0.2",
            "scenario.name = torus_star_defect\nrun.speed = 1",
            "scenario.name = torus_star_defect\njunk",
            "scenario.name = torus_star_defect\nrun.volume_target = 0.1",
            "scenario.name = torus_star_defect\ngrid.size = 4",
            "scenario.name = sphere_volume\nsurface.eps = 0.9",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
