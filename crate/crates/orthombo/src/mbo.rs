//! Diffusion-generated motion of orthogonal matrix fields: the plain and the
//! volume-constrained iteration, with the Lyapunov energy monitor.

use rayon::prelude::*;

use crate::field::{is_plus, plus_volume_unchecked, EnergyLog, EnergyRow, MatrixField};
use crate::matgeom::{frobenius_inner, signed_projection, svd, SmallMatrix};
use crate::{Error, Real, Result};

/// Linear smoothing operator `e^{Δτ}` acting entrywise on a field.
pub trait Diffuser<T: Real>: Sync {
    fn tau(&self) -> T;
    fn diffuse(&self, f: &MatrixField<T>) -> Result<MatrixField<T>>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MboConfig<T> {
    pub tau: T,
    pub max_iters: usize,
    /// Stop once the largest pointwise Frobenius change is at most this.
    pub stop_tol: T,
    /// Prescribed measure of the SO(n) region; `None` runs the plain scheme.
    pub volume_target: Option<T>,
}

impl<T: Real> MboConfig<T> {
    pub fn new(tau: T) -> Self {
        Self {
            tau,
            max_iters: 10_000,
            stop_tol: T::lit(1e-8),
            volume_target: None,
        }
    }

    pub fn validate(&self, total_measure: T) -> Result<()> {
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::OutOfRange("tau"));
        }
        if !(self.stop_tol >= T::zero()) {
            return Err(Error::OutOfRange("stop_tol"));
        }
        if let Some(v) = self.volume_target {
            if !(v >= T::zero() && v <= total_measure) {
                return Err(Error::OutOfRange("volume target"));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one step `A → A'` with diffused field `D = e^{Δτ}A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats<T> {
    /// Lyapunov energy of the input `A`.
    pub energy: T,
    pub max_change: T,
    pub sign_flips: usize,
    /// Points with `det D = 0`, assigned to SO(n).
    pub singular: usize,
    /// `max ‖D‖_F`
    pub max_norm: T,
    /// `max |det D|`
    pub max_abs_det: T,
}

/// `(1/τ) Σᵢ wᵢ (n − ⟨Aᵢ, Dᵢ⟩)` for an already diffused `D`.
pub fn energy_with<T: Real>(f: &MatrixField<T>, diffused: &MatrixField<T>, tau: T) -> T {
    let n = T::lit(f.n() as f64);
    let mut s = T::zero();
    for (i, (a, d)) in f.data().iter().zip(diffused.data()).enumerate() {
        let inner = frobenius_inner(a, d).expect("same dimension");
        s = s + f.weight(i) * (n - inner);
    }
    s / tau
}

/// Lyapunov energy `E^τ(A)` using the same diffusion operator as the step.
pub fn lyapunov_energy<T: Real>(f: &MatrixField<T>, diffuser: &dyn Diffuser<T>) -> Result<T> {
    f.check_orthogonal()?;
    let d = diffuser.diffuse(f)?;
    Ok(energy_with(f, &d, diffuser.tau()))
}

/// `ΔE = ⟨T⁺(D) − T⁻(D), D⟩_F` per point.
pub fn delta_e<T: Real>(diffused: &MatrixField<T>) -> Result<Vec<T>> {
    diffused
        .data()
        .par_iter()
        .map(|d| signed_projection(d).map(|p| p.delta_e))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdResult<T> {
    pub lambda: T,
    /// In descending order of value (ties by index).
    pub plus_indices: Vec<usize>,
}

/// Chooses the points with the largest values until their weight reaches `v`.
pub fn select_threshold<T: Real>(values: &[T], weights: &[T], v: T) -> Result<ThresholdResult<T>> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch(values.len(), weights.len()));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite threshold value".into()));
    }
    let total: T = weights.iter().copied().sum();
    if !(v > T::zero() && v < total) {
        return Err(Error::OutOfRange("volume target"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite"));
    let w_min = weights.iter().copied().fold(T::infinity(), T::min);
    let half = T::lit(0.5);
    let v_max = values[order[0]];
    let v_min = values[order[order.len() - 1]];
    if v > total - half * w_min {
        return Ok(ThresholdResult {
            lambda: v_min - T::one(),
            plus_indices: order,
        });
    }
    if v < half * w_min {
        return Ok(ThresholdResult {
            lambda: v_max + T::one(),
            plus_indices: Vec::new(),
        });
    }
    let mut acc = T::zero();
    let mut count = 0;
    while count < order.len() && acc < v {
        acc = acc + weights[order[count]];
        count += 1;
    }
    let lambda = if count < order.len() {
        (values[order[count - 1]] + values[order[count]]) * half
    } else {
        v_min - T::one()
    };
    order.truncate(count);
    Ok(ThresholdResult {
        lambda,
        plus_indices: order,
    })
}

fn change_stats<T: Real>(old: &[SmallMatrix<T>], new: &[SmallMatrix<T>]) -> (T, usize) {
    old.iter().zip(new).fold((T::zero(), 0), |(c, flips), (a, b)| {
        (
            c.max(a.sub(b).frobenius_norm()),
            flips + usize::from(is_plus(a) != is_plus(b)),
        )
    })
}

fn max_principle<T: Real>(d: &MatrixField<T>) -> (T, T) {
    d.data().iter().fold((T::zero(), T::zero()), |(nm, dt), m| {
        (nm.max(m.frobenius_norm()), dt.max(m.det().abs()))
    })
}

/// One step of the plain scheme: diffuse, then project every point onto
/// O(n). Points with `det D = 0` go to SO(n).
pub fn mbo_step<T: Real>(
    f: &MatrixField<T>,
    diffuser: &dyn Diffuser<T>,
) -> Result<(MatrixField<T>, StepStats<T>)> {
    f.check_orthogonal()?;
    let d = diffuser.diffuse(f)?;
    let projected: Vec<(SmallMatrix<T>, bool)> = d
        .data()
        .par_iter()
        .map(|m| {
            if m.det() == T::zero() {
                signed_projection(m).map(|p| (p.plus, true))
            } else {
                svd(m).map(|s| (s.polar(), false))
            }
        })
        .collect::<Result<_>>()?;
    let singular = projected.iter().filter(|p| p.1).count();
    let data: Vec<SmallMatrix<T>> = projected.into_iter().map(|p| p.0).collect();
    finish_step(f, &d, data, singular, diffuser.tau())
}

/// One volume-constrained step: diffuse, rank points by `ΔE`, assign `T⁺` to
/// the top points until their weight reaches `v` and `T⁻` to the rest.
pub fn volume_mbo_step<T: Real>(
    f: &MatrixField<T>,
    diffuser: &dyn Diffuser<T>,
    v: T,
) -> Result<(MatrixField<T>, StepStats<T>)> {
    f.check_orthogonal()?;
    let d = diffuser.diffuse(f)?;
    let proj = d
        .data()
        .par_iter()
        .map(signed_projection)
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<T> = proj.iter().map(|p| p.delta_e).collect();
    let weights: Vec<T> = (0..f.len()).map(|i| f.weight(i)).collect();
    let sel = select_threshold(&values, &weights, v)?;
    let mut plus = vec![false; f.len()];
    for &i in &sel.plus_indices {
        plus[i] = true;
    }
    let singular = proj.iter().filter(|p| p.singular).count();
    let data = proj
        .iter()
        .zip(&plus)
        .map(|(p, &s)| if s { p.plus } else { p.minus })
        .collect();
    finish_step(f, &d, data, singular, diffuser.tau())
}

fn finish_step<T: Real>(
    f: &MatrixField<T>,
    d: &MatrixField<T>,
    data: Vec<SmallMatrix<T>>,
    singular: usize,
    tau: T,
) -> Result<(MatrixField<T>, StepStats<T>)> {
    let (max_change, sign_flips) = change_stats(f.data(), &data);
    let (max_norm, max_abs_det) = max_principle(d);
    let stats = StepStats {
        energy: energy_with(f, d, tau),
        max_change,
        sign_flips,
        singular,
        max_norm,
        max_abs_det,
    };
    Ok((f.with_data(data)?, stats))
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub field: MatrixField<T>,
    pub log: EnergyLog<T>,
    pub converged: bool,
    pub iterations: usize,
    /// Total count of singular diffused values over the run.
    pub singular: usize,
    /// Iterations in which at least one det sign flipped.
    pub flip_iterations: usize,
    pub max_norm: T,
    pub max_abs_det: T,
    /// Largest `E(A_{s+1}) − E(A_s)` over the log (negative when strictly
    /// decreasing; zero for a single row).
    pub max_energy_increase: T,
}

impl<T: Real> RunOutcome<T> {
    /// Absolute slack `1e-9·n·measure/τ` used for the monotonicity check.
    pub fn energy_slack(&self, tau: T) -> T {
        T::lit(1e-9) * T::lit(self.field.n() as f64) * self.field.total_measure() / tau
    }

    pub fn energy_monotone(&self, tau: T) -> bool {
        self.max_energy_increase <= self.energy_slack(tau)
    }
}

/// Iterates until the change drops to `stop_tol` or `max_iters` is reached.
/// `observer` sees every new iterate with its 1-based iteration number.
pub fn mbo_run_with<T, F>(
    initial: &MatrixField<T>,
    cfg: &MboConfig<T>,
    diffuser: &dyn Diffuser<T>,
    mut observer: F,
) -> Result<RunOutcome<T>>
where
    T: Real,
    F: FnMut(usize, &MatrixField<T>, &StepStats<T>) -> Result<()>,
{
    cfg.validate(initial.total_measure())?;
    if diffuser.tau() != cfg.tau {
        return Err(Error::InvalidInput("diffuser tau differs from the run tau".into()));
    }
    initial.check_orthogonal()?;
    let mut a = initial.clone();
    let mut out = RunOutcome {
        field: initial.clone(),
        log: EnergyLog::new(),
        converged: false,
        iterations: 0,
        singular: 0,
        flip_iterations: 0,
        max_norm: T::zero(),
        max_abs_det: T::zero(),
        max_energy_increase: T::zero(),
    };
    let mut prev_energy: Option<T> = None;
    for k in 1..=cfg.max_iters {
        let pv = plus_volume_unchecked(&a);
        let (next, st) = match cfg.volume_target {
            Some(v) => volume_mbo_step(&a, diffuser, v)?,
            None => mbo_step(&a, diffuser)?,
        };
        out.log.push(EnergyRow {
            iter: k,
            energy: st.energy,
            plus_volume: pv,
            max_change: st.max_change,
            sign_flips: st.sign_flips,
        });
        if let Some(p) = prev_energy {
            let inc = st.energy - p;
            out.max_energy_increase = if k == 2 { inc } else { out.max_energy_increase.max(inc) };
        }
        prev_energy = Some(st.energy);
        out.singular += st.singular;
        out.flip_iterations += usize::from(st.sign_flips > 0);
        out.max_norm = out.max_norm.max(st.max_norm);
        out.max_abs_det = out.max_abs_det.max(st.max_abs_det);
        out.iterations = k;
        a = next;
        observer(k, &a, &st)?;
        if st.max_change <= cfg.stop_tol {
            out.converged = true;
            break;
        }
    }
    out.field = a;
    Ok(out)
}

pub fn mbo_run<T: Real>(
    initial: &MatrixField<T>,
    cfg: &MboConfig<T>,
    diffuser: &dyn Diffuser<T>,
) -> Result<RunOutcome<T>> {
    mbo_run_with(initial, cfg, diffuser, |_, _, _| Ok(()))
}
