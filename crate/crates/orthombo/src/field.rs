//! Matrix-valued fields on periodic grids and surface point clouds.

use std::io::Write;
use std::sync::Arc;

use crate::matgeom::SmallMatrix;
use crate::{Error, Real, Result};

/// Periodic uniform grid on `∏ [−Lᵢ/2, Lᵢ/2)`. Axis 0 varies fastest in the
/// flat point index.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec<T> {
    sizes: Vec<usize>,
    extent: Vec<T>,
}

impl<T: Real> GridSpec<T> {
    pub const MIN_SIZE: usize = 8;

    pub fn new(sizes: Vec<usize>, extent: Vec<T>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > 3 {
            return Err(Error::InvalidInput(format!("grid dimension {}", sizes.len())));
        }
        if sizes.len() != extent.len() {
            return Err(Error::DimensionMismatch(sizes.len(), extent.len()));
        }
        if let Some(s) = sizes.iter().find(|&&s| s < Self::MIN_SIZE) {
            return Err(Error::InvalidInput(format!("grid size {s} < {}", Self::MIN_SIZE)));
        }
        if extent.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidInput("grid extent must be positive".into()));
        }
        Ok(Self { sizes, extent })
    }

    /// `size × size` grid on the unit torus `[−1/2, 1/2)²`.
    pub fn unit_torus(size: usize) -> Result<Self> {
        Self::new(vec![size, size], vec![T::one(), T::one()])
    }

    pub fn d(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn extent(&self) -> &[T] {
        &self.extent
    }

    pub fn dx(&self, axis: usize) -> T {
        self.extent[axis] / T::lit(self.sizes[axis] as f64)
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> T {
        (0..self.d()).fold(T::one(), |v, a| v * self.dx(a))
    }

    pub fn measure(&self) -> T {
        self.extent.iter().fold(T::one(), |v, &l| v * l)
    }

    pub fn coord(&self, axis: usize, i: usize) -> T {
        -self.extent[axis] / T::lit(2.0) + T::lit(i as f64) * self.dx(axis)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (a, &s) in self.sizes.iter().enumerate() {
            idx[a] = flat % s;
            flat /= s;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for a in (0..self.d()).rev() {
            flat = flat * self.sizes[a] + idx[a];
        }
        flat
    }

    /// Physical position of point `flat`; unused axes are zero.
    pub fn position(&self, flat: usize) -> [T; 3] {
        let idx = self.multi_index(flat);
        let mut p = [T::zero(); 3];
        for a in 0..self.d() {
            p[a] = self.coord(a, idx[a]);
        }
        p
    }
}

/// Surface sample points with per-point surface-area weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Cloud<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layout<T> {
    Grid(GridSpec<T>),
    Cloud(Cloud<T>),
}

impl<T: Real> Layout<T> {
    pub fn len(&self) -> usize {
        match self {
            Layout::Grid(g) => g.len(),
            Layout::Cloud(c) => c.points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, i: usize) -> T {
        match self {
            Layout::Grid(g) => g.cell_volume(),
            Layout::Cloud(c) => c.weights[i],
        }
    }

    pub fn total_measure(&self) -> T {
        match self {
            Layout::Grid(g) => g.measure(),
            Layout::Cloud(c) => c.weights.iter().fold(T::zero(), |s, &w| s + w),
        }
    }

    pub fn position(&self, i: usize) -> [T; 3] {
        match self {
            Layout::Grid(g) => g.position(i),
            Layout::Cloud(c) => c.points[i],
        }
    }
}

/// One `n × n` matrix per sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField<T> {
    layout: Arc<Layout<T>>,
    n: usize,
    data: Vec<SmallMatrix<T>>,
}

impl<T: Real> MatrixField<T> {
    pub fn new(layout: Arc<Layout<T>>, n: usize, data: Vec<SmallMatrix<T>>) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(Error::DimensionMismatch(data.len(), layout.len()));
        }
        if let Some(m) = data.iter().find(|m| m.n() != n) {
            return Err(Error::DimensionMismatch(m.n(), n));
        }
        if let Layout::Cloud(c) = layout.as_ref() {
            if c.weights.len() != c.points.len() {
                return Err(Error::DimensionMismatch(c.weights.len(), c.points.len()));
            }
            if c.weights.iter().any(|&w| !(w > T::zero())) {
                return Err(Error::InvalidInput("cloud weights must be positive".into()));
            }
        }
        Ok(Self { layout, n, data })
    }

    pub fn constant(layout: Arc<Layout<T>>, value: SmallMatrix<T>) -> Self {
        let data = vec![value; layout.len()];
        Self {
            layout,
            n: value.n(),
            data,
        }
    }

    /// Evaluates `f(position, index)` at every point.
    pub fn from_fn<F>(layout: Arc<Layout<T>>, n: usize, f: F) -> Result<Self>
    where
        F: Fn([T; 3], usize) -> SmallMatrix<T>,
    {
        let data = (0..layout.len()).map(|i| f(layout.position(i), i)).collect();
        Self::new(layout, n, data)
    }

    /// Same layout, new values.
    pub fn with_data(&self, data: Vec<SmallMatrix<T>>) -> Result<Self> {
        Self::new(self.layout.clone(), self.n, data)
    }

    pub fn layout(&self) -> &Arc<Layout<T>> {
        &self.layout
    }

    pub fn grid(&self) -> Option<&GridSpec<T>> {
        match self.layout.as_ref() {
            Layout::Grid(g) => Some(g),
            Layout::Cloud(_) => None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[SmallMatrix<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [SmallMatrix<T>] {
        &mut self.data
    }

    pub fn weight(&self, i: usize) -> T {
        self.layout.weight(i)
    }

    pub fn total_measure(&self) -> T {
        self.layout.total_measure()
    }

    /// Scalar grid of row-major entry `k`.
    pub fn component(&self, k: usize) -> Vec<T> {
        self.data.iter().map(|m| m.entry(k)).collect()
    }

    /// Fails with the first point whose value is not in O(n).
    pub fn check_orthogonal(&self) -> Result<()> {
        for (index, m) in self.data.iter().enumerate() {
            let residual = m.orthogonality_residual();
            if !(residual <= T::ortho_tol()) {
                return Err(Error::NotOrthogonal {
                    index,
                    residual: residual.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Largest pointwise distance from the spatial mean.
    pub fn max_deviation_from_mean(&self) -> T {
        let n = self.n;
        let inv = T::one() / T::lit(self.len() as f64);
        let mut mean = SmallMatrix::zeros(n);
        for m in &self.data {
            mean = mean.add(m);
        }
        mean = mean.scale(inv);
        self.data
            .iter()
            .map(|m| m.sub(&mean).frobenius_norm())
            .fold(T::zero(), T::max)
    }
}

#[inline]
pub fn is_plus<T: Real>(m: &SmallMatrix<T>) -> bool {
    m.det() > T::zero()
}

/// Measure of the region where the field lies in SO(n).
pub fn plus_volume<T: Real>(f: &MatrixField<T>) -> Result<T> {
    f.check_orthogonal()?;
    Ok(plus_volume_unchecked(f))
}

pub(crate) fn plus_volume_unchecked<T: Real>(f: &MatrixField<T>) -> T {
    match f.layout.as_ref() {
        Layout::Grid(g) => {
            let count = f.data.iter().filter(|m| is_plus(m)).count();
            T::lit(count as f64) * g.cell_volume()
        }
        Layout::Cloud(c) => f
            .data
            .iter()
            .zip(&c.weights)
            .filter(|(m, _)| is_plus(m))
            .fold(T::zero(), |s, (_, &w)| s + w),
    }
}

fn require_grid<T: Real>(f: &MatrixField<T>) -> Result<&GridSpec<T>> {
    f.grid()
        .ok_or_else(|| Error::InvalidInput("operation needs a grid-backed field".into()))
}

/// Winding numbers of the first column along the grid row and column
/// through the domain center.
pub fn winding_pair<T: Real>(f: &MatrixField<T>) -> Result<(i64, i64)> {
    let g = require_grid(f)?;
    if g.d() != 2 || f.n != 2 {
        return Err(Error::InvalidInput("winding needs an O(2) field on a 2-torus".into()));
    }
    f.check_orthogonal()?;
    let (nx, ny) = (g.sizes()[0], g.sizes()[1]);
    let row: Vec<usize> = (0..nx).map(|i| g.flat_index(&[i, ny / 2])).collect();
    let col: Vec<usize> = (0..ny).map(|j| g.flat_index(&[nx / 2, j])).collect();
    Ok((loop_winding(f, &row)?, loop_winding(f, &col)?))
}

fn loop_winding<T: Real>(f: &MatrixField<T>, path: &[usize]) -> Result<i64> {
    let angle = |i: usize| {
        let m = &f.data[path[i]];
        m.get(1, 0).atan2(m.get(0, 0)).as_f64()
    };
    let two_pi = std::f64::consts::TAU;
    let mut total = 0.0;
    for i in 0..path.len() {
        let mut step = angle((i + 1) % path.len()) - angle(i);
        step -= two_pi * (step / two_pi).round();
        if step.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::UnderResolved { index: i, step });
        }
        total += step;
    }
    Ok((total / two_pi).round() as i64)
}

/// Grid points whose det sign differs from the forward neighbor along some
/// axis (periodic).
pub fn interface_cells<T: Real>(f: &MatrixField<T>) -> Result<Vec<[usize; 3]>> {
    let g = require_grid(f)?;
    let sign: Vec<bool> = f.data.iter().map(is_plus).collect();
    let mut out = Vec::new();
    for p in 0..g.len() {
        let idx = g.multi_index(p);
        let crosses = (0..g.d()).any(|a| {
            let mut nb = idx;
            nb[a] = (idx[a] + 1) % g.sizes()[a];
            sign[g.flat_index(&nb)] != sign[p]
        });
        if crosses {
            out.push(idx);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionStats<T> {
    pub area: T,
    pub perimeter: T,
}

impl<T: Real> RegionStats<T> {
    /// `perimeter² / (4π·area)`; undefined for an empty region or one without
    /// boundary.
    pub fn isoperimetric_ratio(&self) -> Result<T> {
        if self.area > T::zero() && self.perimeter > T::zero() {
            Ok(self.perimeter * self.perimeter / (T::lit(4.0) * T::PI() * self.area))
        } else {
            Err(Error::UndefinedRatio)
        }
    }
}

/// Area and cell-count perimeter of the plus region (first-order estimate).
pub fn plus_region_stats<T: Real>(f: &MatrixField<T>) -> Result<RegionStats<T>> {
    let g = require_grid(f)?;
    let area = plus_volume(f)?;
    let cells = interface_cells(f)?.len();
    Ok(RegionStats {
        area,
        perimeter: T::lit(cells as f64) * g.dx(0),
    })
}

/// One row per MBO iteration `k`: energy and plus-volume of the iterate
/// entering step `k`, and the change and det-sign flips that step produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRow<T> {
    pub iter: usize,
    pub energy: T,
    pub plus_volume: T,
    pub max_change: T,
    pub sign_flips: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLog<T> {
    rows: Vec<EnergyRow<T>>,
}

pub const ENERGY_CSV_HEADER: &str = "iter,energy,plus_volume,max_change,sign_flips";

impl<T: Real> EnergyLog<T> {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// # Panics
    /// If `row.iter` does not exceed the previous index.
    pub fn push(&mut self, row: EnergyRow<T>) {
        if let Some(last) = self.rows.last() {
            assert!(row.iter > last.iter, "energy log indices must increase");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[EnergyRow<T>] {
        &self.rows
    }

    pub fn energies(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{ENERGY_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iter,
                r.energy.as_f64(),
                r.plus_volume.as_f64(),
                r.max_change.as_f64(),
                r.sign_flips
            )?;
        }
        Ok(())
    }

    pub fn parse_csv(text: &str) -> Result<EnergyLog<f64>> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(ENERGY_CSV_HEADER) {
            return Err(Error::Format("missing energy CSV header".into()));
        }
        let bad = |l: &str| Error::Format(format!("bad energy CSV row: {l}"));
        let mut log = EnergyLog::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad(line));
            }
            let row = EnergyRow {
                iter: cols[0].parse().map_err(|_| bad(line))?,
                energy: cols[1].parse().map_err(|_| bad(line))?,
                plus_volume: cols[2].parse().map_err(|_| bad(line))?,
                max_change: cols[3].parse().map_err(|_| bad(line))?,
                sign_flips: cols[4].parse().map_err(|_| bad(line))?,
            };
            if log.rows.last().is_some_and(|l: &EnergyRow<f64>| row.iter <= l.iter) {
                return Err(bad(line));
            }
            log.rows.push(row);
        }
        Ok(log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(a: f64) -> SmallMatrix<f64> {
        let (s, c) = a.sin_cos();
        SmallMatrix::from_rows(2, &[c, -s, s, c]).unwrap()
    }

    fn refl(a: f64) -> SmallMatrix<f64> {
        let (s, c) = a.sin_cos();
        SmallMatrix::from_rows(2, &[c, s, s, -c]).unwrap()
    }

    fn grid(n: usize) -> Arc<Layout<f64>> {
        Arc::new(Layout::Grid(GridSpec::unit_torus(n).unwrap()))
    }

    fn split_field<F: Fn([f64; 3]) -> bool>(n: usize, inside: F) -> MatrixField<f64> {
        MatrixField::from_fn(grid(n), 2, |p, _| if inside(p) { rot(0.0) } else { refl(0.0) }).unwrap()
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::<f64>::unit_torus(4).is_err());
        assert!(GridSpec::new(vec![8, 8], vec![1.0]).is_err());
        let g = GridSpec::<f64>::unit_torus(256).unwrap();
        assert_eq!(g.dx(0), 1.0 / 256.0);
        assert_eq!(g.coord(0, 128), 0.0);
        assert_eq!(g.flat_index(&g.multi_index(1234)), 1234);
        assert_eq!(g.multi_index(1), [1, 0, 0]);
    }

    #[test]
    fn plus_volume_examples() {
        let f = MatrixField::constant(grid(16), rot(0.3));
        assert_eq!(plus_volume(&f).unwrap(), 1.0);
        let f = MatrixField::constant(grid(16), refl(0.3));
        assert_eq!(plus_volume(&f).unwrap(), 0.0);
        let f = split_field(256, |p| p[0] < 0.0);
        let v = plus_volume(&f).unwrap();
        assert!((v - 0.5).abs() <= 1.0 / 256.0);
        let bad = MatrixField::constant(grid(16), rot(0.0).scale(2.0));
        assert!(matches!(plus_volume(&bad), Err(Error::NotOrthogonal { .. })));
    }

    #[test]
    fn winding_examples() {
        let f = MatrixField::constant(grid(64), rot(1.0));
        assert_eq!(winding_pair(&f).unwrap(), (0, 0));
        let tau = std::f64::consts::TAU;
        let f = MatrixField::from_fn(grid(64), 2, |p, _| rot(tau * p[1])).unwrap();
        assert_eq!(winding_pair(&f).unwrap(), (0, 1));
        let f = MatrixField::from_fn(grid(64), 2, |p, _| {
            rot(std::f64::consts::FRAC_PI_2 * (tau * (p[0] + p[1])).sin())
        })
        .unwrap();
        assert_eq!(winding_pair(&f).unwrap(), (0, 0));
        let f = MatrixField::from_fn(grid(8), 2, |p, _| rot(3.0 * tau * p[0])).unwrap();
        assert!(matches!(winding_pair(&f), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn interface_examples() {
        let f = MatrixField::constant(grid(32), rot(0.0));
        assert!(interface_cells(&f).unwrap().is_empty());
        let f = split_field(32, |p| p[0] < 0.0);
        let cells = interface_cells(&f).unwrap();
        // one marked column at each of the two split lines
        assert_eq!(cells.len(), 2 * 32);
        let n = 256;
        let f = split_field(n, |p| p[0] * p[0] + p[1] * p[1] < 0.09);
        let count = interface_cells(&f).unwrap().len() as f64;
        let expect = std::f64::consts::TAU * 0.3 * n as f64;
        assert!((count / expect - 1.0).abs() < 0.15, "{count} vs {expect}");
    }

    #[test]
    fn region_stats_examples() {
        let f = split_field(256, |p| p[0] * p[0] + p[1] * p[1] < 0.09);
        let r = plus_region_stats(&f).unwrap().isoperimetric_ratio().unwrap();
        assert!((1.0..=1.3).contains(&r), "{r}");
        let f = MatrixField::constant(grid(16), rot(0.0));
        let s = plus_region_stats(&f).unwrap();
        assert_eq!(s.perimeter, 0.0);
        assert!(matches!(s.isoperimetric_ratio(), Err(Error::UndefinedRatio)));
        let f = split_field(256, |p| p[0].abs() < 0.2 && p[1].abs() < 0.2);
        let s = plus_region_stats(&f).unwrap();
        assert!((s.area - 0.16).abs() <= 2.0 / 256.0);
    }

    #[test]
    fn energy_csv_round_trip() {
        let mut log = EnergyLog::new();
        log.push(EnergyRow { iter: 1, energy: 2.5, plus_volume: 0.25, max_change: 0.1, sign_flips: 3 });
        log.push(EnergyRow { iter: 2, energy: 2.25, plus_volume: 0.2, max_change: 0.0, sign_flips: 0 });
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,energy,plus_volume,max_change,sign_flips\n"));
        assert_eq!(EnergyLog::<f64>::parse_csv(&text).unwrap(), log);
    }

    #[test]
    #[should_panic]
    fn energy_log_rejects_non_increasing() {
        let mut log = EnergyLog::new();
        let row = EnergyRow { iter: 1, energy: 0.0, plus_volume: 0.0, max_change: 0.0, sign_flips: 0 };
        log.push(row);
        log.push(row);
    }
}
