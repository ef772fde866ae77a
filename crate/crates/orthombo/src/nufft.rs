//! Three-dimensional type-1 and type-2 non-uniform FFTs by Gaussian gridding,
//! and the direct sums they approximate.
//!
//! Modes form the lattice `h·k`, `k ∈ {−M, …, M−1}³`; the spectral array is
//! indexed with `kx` fastest. Type-1 computes
//! `f(k) = (1/N) Σⱼ cⱼ e^{−i h k·xⱼ}` and type-2 computes
//! `F(x) = Σₖ f(k) e^{+i h k·x}`, for points in `[−π, π)³`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fft::FftNd;
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeGrid {
    pub h: f64,
    pub m_half: usize,
}

impl ModeGrid {
    pub fn new(h: f64, m_half: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::OutOfRange("mode spacing h"));
        }
        if m_half == 0 {
            return Err(Error::OutOfRange("mode half-width M"));
        }
        Ok(Self { h, m_half })
    }

    /// Modes per axis, `2M`.
    pub fn per_axis(&self) -> usize {
        2 * self.m_half
    }

    pub fn len(&self) -> usize {
        self.per_axis().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k: [i64; 3]) -> usize {
        let m = self.m_half as i64;
        let n = self.per_axis();
        let o = |x: i64| (x + m) as usize;
        o(k[0]) + n * (o(k[1]) + n * o(k[2]))
    }

    pub fn mode(&self, idx: usize) -> [i64; 3] {
        let n = self.per_axis();
        let m = self.m_half as i64;
        [
            (idx % n) as i64 - m,
            ((idx / n) % n) as i64 - m,
            (idx / (n * n)) as i64 - m,
        ]
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-12..=1e-2).contains(&tol) {
        Ok(())
    } else {
        Err(Error::OutOfRange("tol"))
    }
}

fn check_points(points: &[[f64; 3]]) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if !p.iter().all(|&x| (-PI..PI).contains(&x)) {
            return Err(Error::OutOfBox(i));
        }
    }
    Ok(())
}

const OVERSAMPLING: f64 = 2.0;

/// Reusable gridding parameters, FFT plans and deconvolution factors.
pub struct NufftPlan {
    modes: ModeGrid,
    /// Spreading reaches `msp` fine-grid points on each side.
    msp: usize,
    nf: usize,
    /// Kernel `exp(−β·s²)` with `s` in fine-grid units.
    beta: f64,
    /// `exp(−β·i²)` for `i < 2·msp`.
    ramp: Vec<f64>,
    /// `1/(nf·ĝ(k))` for `k = −M..M−1`.
    deconv: Vec<f64>,
    fft: FftNd<f64>,
}

impl NufftPlan {
    pub fn new(modes: ModeGrid, tol: f64) -> Result<Self> {
        check_tol(tol)?;
        let nm = modes.per_axis();
        let r = OVERSAMPLING;
        // Greengard–Lee: error ≈ exp(−π·msp·(R−1)/(R−1/2)), with a factor 2 to spare.
        let msp = ((2.0 / tol).ln() * (r - 0.5) / (PI * (r - 1.0))).ceil() as usize;
        let mut nf = ((r * nm as f64).ceil() as usize).max(2 * msp);
        nf += nf % 2;
        let r_eff = nf as f64 / nm as f64;
        let sigma = PI * msp as f64 / (nm as f64 * nm as f64 * r_eff * (r_eff - 0.5));
        let hf = TAU / nf as f64;
        let beta = hf * hf / (4.0 * sigma);
        let m = modes.m_half as i64;
        let deconv = (-m..m)
            .map(|k| {
                let kf = k as f64;
                let ghat = (4.0 * PI * sigma).sqrt() / TAU * (-kf * kf * sigma).exp();
                1.0 / (nf as f64 * ghat)
            })
            .collect();
        let ramp = (0..2 * msp).map(|i| (-beta * (i * i) as f64).exp()).collect();
        Ok(Self {
            modes,
            msp,
            nf,
            beta,
            ramp,
            deconv,
            fft: FftNd::new(&[nf, nf, nf]),
        })
    }

    pub fn modes(&self) -> &ModeGrid {
        &self.modes
    }

    pub fn spread_width(&self) -> usize {
        2 * self.msp
    }

    pub fn fine_size(&self) -> usize {
        self.nf
    }

    fn padded(&self) -> usize {
        self.nf + 2 * self.msp
    }

    /// Start index in the padded grid and kernel weights along one axis.
    #[inline]
    fn axis_weights(&self, x: f64, w: &mut [f64]) -> usize {
        let nf = self.nf as f64;
        let u = (self.modes.h * x).rem_euclid(TAU);
        let t = u * nf / TAU;
        let mut l0 = t.floor();
        if l0 >= nf {
            l0 = nf - 1.0;
        }
        // exp(−β(d−i)²) = exp(−βd²)·exp(2βd)^i·exp(−βi²)
        let d = t - l0 + self.msp as f64 - 1.0;
        let step = (2.0 * self.beta * d).exp();
        let mut lead = (-self.beta * d * d).exp();
        for (wi, &r) in w.iter_mut().zip(&self.ramp) {
            *wi = lead * r;
            lead *= step;
        }
        // padded index of the first weight
        l0 as usize + 1
    }

    /// Point order grouped by fine-grid blocks, so consecutive points touch
    /// nearby memory.
    fn block_order(&self, points: &[[f64; 3]]) -> Vec<u32> {
        const BLOCK: usize = 8;
        let nb = self.nf.div_ceil(BLOCK);
        let scale = self.nf as f64 / TAU;
        let bin = |x: f64| (((self.modes.h * x).rem_euclid(TAU) * scale) as usize).min(self.nf - 1) / BLOCK;
        let keys: Vec<u32> = points
            .iter()
            .map(|p| (bin(p[0]) + nb * (bin(p[1]) + nb * bin(p[2]))) as u32)
            .collect();
        let mut start = vec![0u32; nb * nb * nb + 1];
        for &k in &keys {
            start[k as usize + 1] += 1;
        }
        for i in 1..start.len() {
            start[i] += start[i - 1];
        }
        let mut order = vec![0u32; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            let slot = &mut start[k as usize];
            order[*slot as usize] = i as u32;
            *slot += 1;
        }
        order
    }

    fn wrap_table(&self) -> Vec<usize> {
        let nf = self.nf as i64;
        (0..self.padded() as i64)
            .map(|p| (p - self.msp as i64).rem_euclid(nf) as usize)
            .collect()
    }

    /// Single-component spreading with the kernel width fixed at compile
    /// time (`N = 2W`).
    fn spread_single<const W: usize, const N: usize>(
        &self,
        grid: &mut [f64],
        points: &[[f64; 3]],
        coeffs: &[Complex64],
        order: &[u32],
    ) {
        let p = self.padded();
        let (mut wx, mut wy, mut wz) = ([0.0; W], [0.0; W], [0.0; W]);
        let mut wx2 = [0.0; N];
        for &j in order {
            let j = j as usize;
            let x = &points[j];
            let sx = self.axis_weights(x[0], &mut wx);
            let sy = self.axis_weights(x[1], &mut wy);
            let sz = self.axis_weights(x[2], &mut wz);
            for i in 0..W {
                wx2[2 * i] = wx[i];
                wx2[2 * i + 1] = wx[i];
            }
            let c = coeffs[j];
            for (iz, &vz) in wz.iter().enumerate() {
                let cz = c * vz;
                for (iy, &vy) in wy.iter().enumerate() {
                    let (a, b) = (cz.re * vy, cz.im * vy);
                    let base = 2 * (sx + p * ((sy + iy) + p * (sz + iz)));
                    let row: &mut [f64; N] = (&mut grid[base..base + N]).try_into().expect("row");
                    for (g, w) in row.chunks_exact_mut(2).zip(wx2.chunks_exact(2)) {
                        g[0] += a * w[0];
                        g[1] += b * w[1];
                    }
                }
            }
        }
    }

    /// Single-component interpolation at one point, `N = 2W`.
    #[inline]
    fn gather_single<const W: usize, const N: usize>(&self, grid: &[f64], x: &[f64; 3]) -> [f64; 2] {
        let p = self.padded();
        let (mut wx, mut wy, mut wz) = ([0.0; W], [0.0; W], [0.0; W]);
        let sx = self.axis_weights(x[0], &mut wx);
        let sy = self.axis_weights(x[1], &mut wy);
        let sz = self.axis_weights(x[2], &mut wz);
        let mut wx2 = [0.0; N];
        for i in 0..W {
            wx2[2 * i] = wx[i];
            wx2[2 * i + 1] = wx[i];
        }
        let mut total = [0.0; 2];
        for (iz, &vz) in wz.iter().enumerate() {
            let mut acc_y = [0.0; 2];
            for (iy, &vy) in wy.iter().enumerate() {
                let base = 2 * (sx + p * ((sy + iy) + p * (sz + iz)));
                let row: &[f64; N] = (&grid[base..base + N]).try_into().expect("row");
                // eight independent partial sums
                let mut s = [0.0f64; 8];
                let mut rc = row.chunks_exact(8);
                let mut wc = wx2.chunks_exact(8);
                for (c, w) in (&mut rc).zip(&mut wc) {
                    for i in 0..8 {
                        s[i] += c[i] * w[i];
                    }
                }
                for (i, (c, w)) in rc.remainder().iter().zip(wc.remainder()).enumerate() {
                    s[i] += c * w;
                }
                acc_y[0] += (s[0] + s[2] + s[4] + s[6]) * vy;
                acc_y[1] += (s[1] + s[3] + s[5] + s[7]) * vy;
            }
            total[0] += acc_y[0] * vz;
            total[1] += acc_y[1] * vz;
        }
        total
    }

    /// `f(k) = (1/N) Σⱼ cⱼ e^{−i h k·xⱼ}`.
    pub fn type1(&self, points: &[[f64; 3]], coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = self.type1_many(points, coeffs, 1)?;
        Ok(out.pop().expect("one component"))
    }

    /// Type-1 for `k` coefficient sets sharing the points; `coeffs` is
    /// point-major (`coeffs[j·k + c]`). Returns one spectrum per set.
    pub fn type1_many(&self, points: &[[f64; 3]], coeffs: &[Complex64], k: usize) -> Result<Vec<Vec<Complex64>>> {
        if k == 0 || coeffs.len() != points.len() * k {
            return Err(Error::DimensionMismatch(points.len() * k.max(1), coeffs.len()));
        }
        if points.is_empty() {
            return Err(Error::InvalidInput("type-1 needs at least one point".into()));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::TooLarge(points.len() as u64));
        }
        check_points(points)?;
        let p = self.padded();
        let order = self.block_order(points);
        let nf = self.nf;
        let wrap = self.wrap_table();
        let inv_n = 1.0 / points.len() as f64;
        // interleaved (re, im) per cell
        let mut grid = vec![0.0f64; 2 * p * p * p];
        let mut column = vec![Complex64::new(0.0, 0.0); points.len()];
        let mut out = Vec::with_capacity(k);
        for comp in 0..k {
            for (d, chunk) in column.iter_mut().zip(coeffs.chunks_exact(k)) {
                *d = chunk[comp];
            }
            grid.fill(0.0);
            macro_rules! pick {
                ($($w:literal),*) => {
                    match self.spread_width() {
                        $($w => self.spread_single::<$w, { 2 * $w }>(&mut grid, points, &column, &order),)*
                        w => unreachable!("kernel width {w}"),
                    }
                };
            }
            pick!(6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28);
            let mut fine = vec![Complex64::new(0.0, 0.0); nf * nf * nf];
            for pz in 0..p {
                for py in 0..p {
                    let src = p * (py + p * pz);
                    let dst = nf * (wrap[py] + nf * wrap[pz]);
                    for px in 0..p {
                        let at = 2 * (src + px);
                        fine[dst + wrap[px]] += Complex64::new(grid[at], grid[at + 1]);
                    }
                }
            }
            self.fft.process(&mut fine, false);
            out.push(self.gather_modes(&fine, inv_n));
        }
        Ok(out)
    }

    fn gather_modes(&self, fine: &[Complex64], scale: f64) -> Vec<Complex64> {
        let nf = self.nf as i64;
        let m = self.modes.m_half as i64;
        let fi = |k: i64| k.rem_euclid(nf) as usize;
        let mut out = Vec::with_capacity(self.modes.len());
        for kz in -m..m {
            let dz = self.deconv[(kz + m) as usize] * scale;
            for ky in -m..m {
                let dyz = dz * self.deconv[(ky + m) as usize];
                let row = self.nf * (fi(ky) + self.nf * fi(kz));
                for kx in -m..m {
                    out.push(fine[row + fi(kx)] * (dyz * self.deconv[(kx + m) as usize]));
                }
            }
        }
        out
    }

    /// `F(x) = Σₖ f(k) e^{+i h k·x}`.
    pub fn type2(&self, spectral: &[Complex64], points: &[[f64; 3]]) -> Result<Vec<Complex64>> {
        self.type2_many(&[spectral], points)
    }

    /// Type-2 for several spectra sharing the targets; the result is
    /// point-major (`out[j·k + c]` for spectrum `c`).
    pub fn type2_many(&self, spectra: &[&[Complex64]], points: &[[f64; 3]]) -> Result<Vec<Complex64>> {
        let k = spectra.len();
        if k == 0 {
            return Err(Error::InvalidInput("type-2 needs at least one spectrum".into()));
        }
        for s in spectra {
            if s.len() != self.modes.len() {
                return Err(Error::DimensionMismatch(s.len(), self.modes.len()));
            }
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::TooLarge(points.len() as u64));
        }
        check_points(points)?;
        let nf = self.nf;
        let m = self.modes.m_half as i64;
        let fi = |k: i64| k.rem_euclid(nf as i64) as usize;
        let p = self.padded();
        let wrap = self.wrap_table();
        let order = self.block_order(points);
        let mut grid = vec![0.0f64; 2 * p * p * p];
        let mut out = vec![Complex64::new(0.0, 0.0); points.len() * k];
        let mut sorted = vec![0.0f64; 2 * points.len()];
        for (comp, spectral) in spectra.iter().enumerate() {
            let mut fine = vec![Complex64::new(0.0, 0.0); nf * nf * nf];
            let mut idx = 0;
            for kz in -m..m {
                let dz = self.deconv[(kz + m) as usize];
                for ky in -m..m {
                    let dyz = dz * self.deconv[(ky + m) as usize];
                    let row = nf * (fi(ky) + nf * fi(kz));
                    for kx in -m..m {
                        fine[row + fi(kx)] = spectral[idx] * (dyz * self.deconv[(kx + m) as usize]);
                        idx += 1;
                    }
                }
            }
            self.fft.process(&mut fine, true);
            for pz in 0..p {
                for py in 0..p {
                    let dst = p * (py + p * pz);
                    let src = nf * (wrap[py] + nf * wrap[pz]);
                    for px in 0..p {
                        let v = fine[src + wrap[px]];
                        grid[2 * (dst + px)] = v.re;
                        grid[2 * (dst + px) + 1] = v.im;
                    }
                }
            }
            drop(fine);
            const CHUNK: usize = 256;
            sorted
                .par_chunks_mut(2 * CHUNK)
                .zip(order.par_chunks(CHUNK))
                .for_each(|(dst, idx)| {
                    for (v, &j) in dst.chunks_exact_mut(2).zip(idx) {
                        let x = &points[j as usize];
                        macro_rules! pick {
                            ($($w:literal),*) => {
                                match self.spread_width() {
                                    $($w => v.copy_from_slice(&self.gather_single::<$w, { 2 * $w }>(&grid, x)),)*
                                    w => unreachable!("kernel width {w}"),
                                }
                            };
                        }
                        pick!(6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28);
                    }
                });
            for (v, &j) in sorted.chunks_exact(2).zip(&order) {
                out[j as usize * k + comp] = Complex64::new(v[0], v[1]);
            }
        }
        Ok(out)
    }
}

pub fn nufft_type1(
    points: &[[f64; 3]],
    coeffs: &[Complex64],
    modes: &ModeGrid,
    tol: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::new(*modes, tol)?.type1(points, coeffs)
}

pub fn nufft_type2(
    spectral: &[Complex64],
    points: &[[f64; 3]],
    modes: &ModeGrid,
    tol: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::new(*modes, tol)?.type2(spectral, points)
}

const DIRECT_LIMIT: u64 = 100_000_000;

fn direct_guard(n: usize, modes: &ModeGrid) -> Result<()> {
    let terms = n as u64 * modes.len() as u64;
    if terms > DIRECT_LIMIT {
        Err(Error::TooLarge(terms))
    } else {
        Ok(())
    }
}

/// `e^{sign·i h k x}` for `k = −M..M−1`.
fn phases(x: f64, modes: &ModeGrid, sign: f64) -> Vec<Complex64> {
    let m = modes.m_half as i64;
    (-m..m)
        .map(|k| Complex64::from_polar(1.0, sign * modes.h * k as f64 * x))
        .collect()
}

/// Exact type-1 sum (small sizes only).
pub fn direct_type1(points: &[[f64; 3]], coeffs: &[Complex64], modes: &ModeGrid) -> Result<Vec<Complex64>> {
    if points.len() != coeffs.len() {
        return Err(Error::DimensionMismatch(points.len(), coeffs.len()));
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("type-1 needs at least one point".into()));
    }
    direct_guard(points.len(), modes)?;
    check_points(points)?;
    let nm = modes.per_axis();
    let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
    for (x, &c) in points.iter().zip(coeffs) {
        let (px, py, pz) = (phases(x[0], modes, -1.0), phases(x[1], modes, -1.0), phases(x[2], modes, -1.0));
        for (iz, &ez) in pz.iter().enumerate() {
            for (iy, &ey) in py.iter().enumerate() {
                let cyz = c * ez * ey;
                let base = nm * (iy + nm * iz);
                for (ix, &ex) in px.iter().enumerate() {
                    out[base + ix] += cyz * ex;
                }
            }
        }
    }
    let inv_n = 1.0 / points.len() as f64;
    out.iter_mut().for_each(|v| *v *= inv_n);
    Ok(out)
}

/// Exact type-2 sum (small sizes only).
pub fn direct_type2(spectral: &[Complex64], points: &[[f64; 3]], modes: &ModeGrid) -> Result<Vec<Complex64>> {
    if spectral.len() != modes.len() {
        return Err(Error::DimensionMismatch(spectral.len(), modes.len()));
    }
    direct_guard(points.len(), modes)?;
    check_points(points)?;
    let nm = modes.per_axis();
    Ok(points
        .iter()
        .map(|x| {
            let (px, py, pz) = (phases(x[0], modes, 1.0), phases(x[1], modes, 1.0), phases(x[2], modes, 1.0));
            let mut acc = Complex64::new(0.0, 0.0);
            for (iz, &ez) in pz.iter().enumerate() {
                for (iy, &ey) in py.iter().enumerate() {
                    let base = nm * (iy + nm * iz);
                    let mut row = Complex64::new(0.0, 0.0);
                    for (ix, &ex) in px.iter().enumerate() {
                        row += spectral[base + ix] * ex;
                    }
                    acc += row * ey * ez;
                }
            }
            acc
        })
        .collect())
}

/// `max |a − b| / max |b|`.
pub fn max_relative_error(approx: &[Complex64], exact: &[Complex64]) -> f64 {
    let scale = exact.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let err = approx
        .iter()
        .zip(exact)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    fn random_points(n: usize, seed: u64) -> (Vec<[f64; 3]>, Vec<Complex64>) {
        let mut s = seed;
        let pts = (0..n)
            .map(|_| {
                [
                    -PI + TAU * lcg(&mut s) * 0.999_999,
                    -PI + TAU * lcg(&mut s) * 0.999_999,
                    -PI + TAU * lcg(&mut s) * 0.999_999,
                ]
            })
            .collect();
        let c = (0..n)
            .map(|_| Complex64::new(lcg(&mut s) - 0.5, lcg(&mut s) - 0.5))
            .collect();
        (pts, c)
    }

    #[test]
    fn mode_indexing() {
        let g = ModeGrid::new(1.0, 3).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.index(g.mode(idx)), idx);
        }
        assert_eq!(g.mode(0), [-3, -3, -3]);
    }

    #[test]
    fn origin_point_gives_flat_spectrum() {
        let g = ModeGrid::new(1.0, 4).unwrap();
        let f = nufft_type1(&[[0.0; 3]], &[Complex64::new(1.0, 0.0)], &g, 1e-10).unwrap();
        for v in &f {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        let d = direct_type1(&[[0.0; 3]], &[Complex64::new(1.0, 0.0)], &g).unwrap();
        assert!(d.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn antipodal_cancellation() {
        let g = ModeGrid::new(1.0, 4).unwrap();
        let pts = [[0.5, -1.0, 2.0], [-0.5, 1.0, -2.0]];
        let c = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let f = nufft_type1(&pts, &c, &g, 1e-10).unwrap();
        assert!(f[g.index([0, 0, 0])].norm() < 1e-10);
    }

    #[test]
    fn zero_mode_only_spectrum() {
        let g = ModeGrid::new(0.8, 5).unwrap();
        let mut spec = vec![Complex64::new(0.0, 0.0); g.len()];
        spec[g.index([0, 0, 0])] = Complex64::new(1.0, 0.0);
        let (pts, _) = random_points(50, 3);
        let v = nufft_type2(&spec, &pts, &g, 1e-9).unwrap();
        assert!(v.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-8));
    }

    #[test]
    fn accuracy_against_direct() {
        let (pts, c) = random_points(300, 11);
        for &(tol, m, h) in &[(1e-3, 8usize, 1.0), (1e-6, 12, 1.0), (1e-9, 10, 0.7), (1e-12, 6, 1.0)] {
            let g = ModeGrid::new(h, m).unwrap();
            let fast = nufft_type1(&pts, &c, &g, tol).unwrap();
            let exact = direct_type1(&pts, &c, &g).unwrap();
            let e1 = max_relative_error(&fast, &exact);
            assert!(e1 <= tol, "type1 tol {tol}: {e1}");
            let fast2 = nufft_type2(&exact, &pts, &g, tol).unwrap();
            let exact2 = direct_type2(&exact, &pts, &g).unwrap();
            let e2 = max_relative_error(&fast2, &exact2);
            assert!(e2 <= tol, "type2 tol {tol}: {e2}");
        }
    }

    #[test]
    fn batched_matches_single() {
        let (pts, c) = random_points(120, 21);
        let g = ModeGrid::new(0.9, 7).unwrap();
        let plan = NufftPlan::new(g, 1e-9).unwrap();
        let k = 3;
        let many: Vec<Complex64> = (0..pts.len() * k)
            .map(|i| c[i / k] * Complex64::new(1.0 + (i % k) as f64, -((i % k) as f64)))
            .collect();
        let batched = plan.type1_many(&pts, &many, k).unwrap();
        for comp in 0..k {
            let single: Vec<Complex64> = (0..pts.len()).map(|j| many[j * k + comp]).collect();
            let one = plan.type1(&pts, &single).unwrap();
            assert!(max_relative_error(&batched[comp], &one) < 1e-14);
        }
        let refs: Vec<&[Complex64]> = batched.iter().map(|v| v.as_slice()).collect();
        let back = plan.type2_many(&refs, &pts).unwrap();
        for comp in 0..k {
            let one = plan.type2(&batched[comp], &pts).unwrap();
            let col: Vec<Complex64> = (0..pts.len()).map(|j| back[j * k + comp]).collect();
            assert!(max_relative_error(&col, &one) < 1e-14);
        }
    }

    #[test]
    fn adjoint_identity() {
        let (pts, c) = random_points(200, 8);
        let g = ModeGrid::new(1.0, 6).unwrap();
        let (_, spec) = random_points(g.len(), 9);
        let plan = NufftPlan::new(g, 1e-10).unwrap();
        let f = plan.type1(&pts, &c).unwrap();
        let back = plan.type2(&spec, &pts).unwrap();
        let lhs: Complex64 = f.iter().zip(&spec).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex64 = c.iter().zip(&back).map(|(a, b)| a * b.conj()).sum::<Complex64>() / pts.len() as f64;
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn uniform_targets_match_inverse_dft() {
        let g = ModeGrid::new(1.0, 4).unwrap();
        let n = g.per_axis();
        let (_, spec) = random_points(g.len(), 17);
        let pts: Vec<[f64; 3]> = (0..g.len())
            .map(|i| {
                let j = [i % n, (i / n) % n, i / (n * n)];
                j.map(|a| -PI + TAU * a as f64 / n as f64)
            })
            .collect();
        let fast = nufft_type2(&spec, &pts, &g, 1e-9).unwrap();
        // e^{ik(−π + 2πj/n)} = (−1)^k e^{2πikj/n}
        let mut dense = vec![Complex64::new(0.0, 0.0); g.len()];
        for (idx, &v) in spec.iter().enumerate() {
            let k = g.mode(idx);
            let sign = if (k[0] + k[1] + k[2]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let at = |a: i64| a.rem_euclid(n as i64) as usize;
            dense[at(k[0]) + n * (at(k[1]) + n * at(k[2]))] = v * sign;
        }
        FftNd::new(&[n, n, n]).process(&mut dense, true);
        assert!(max_relative_error(&fast, &dense) <= 1e-9);
    }

    #[test]
    fn single_point_direct_matches_fast() {
        let g = ModeGrid::new(1.0, 5).unwrap();
        let x = [[0.4, -2.9, 1.7]];
        let c = [Complex64::new(0.3, -1.2)];
        let d = direct_type1(&x, &c, &g).unwrap();
        for (idx, v) in d.iter().enumerate() {
            let k = g.mode(idx);
            let phase = -(k[0] as f64 * x[0][0] + k[1] as f64 * x[0][1] + k[2] as f64 * x[0][2]);
            assert!((v - c[0] * Complex64::from_polar(1.0, phase)).norm() < 1e-14);
        }
        let f = nufft_type1(&x, &c, &g, 1e-12).unwrap();
        assert!(max_relative_error(&f, &d) < 1e-12);
        let d2 = direct_type2(&d, &x, &g).unwrap();
        let f2 = nufft_type2(&d, &x, &g, 1e-12).unwrap();
        assert!(max_relative_error(&f2, &d2) < 1e-12);
    }

    #[test]
    fn errors() {
        let g = ModeGrid::new(1.0, 2).unwrap();
        let c = [Complex64::new(1.0, 0.0)];
        assert!(matches!(nufft_type1(&[[PI, 0.0, 0.0]], &c, &g, 1e-6), Err(Error::OutOfBox(0))));
        assert!(matches!(nufft_type1(&[[0.0; 3]], &c, &g, 1e-13), Err(Error::OutOfRange(_))));
        assert!(matches!(nufft_type1(&[[0.0; 3]], &c, &g, 0.1), Err(Error::OutOfRange(_))));
        let big = ModeGrid::new(1.0, 200).unwrap();
        assert!(matches!(direct_type1(&[[0.0; 3]; 2], &[c[0]; 2], &big), Err(Error::TooLarge(_))));
        assert!(ModeGrid::new(0.0, 2).is_err());
    }

    #[test]
    fn zero_coefficients() {
        let g = ModeGrid::new(1.0, 3).unwrap();
        let (pts, _) = random_points(20, 5);
        let c = vec![Complex64::new(0.0, 0.0); 20];
        assert!(direct_type1(&pts, &c, &g).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(nufft_type1(&pts, &c, &g, 1e-6).unwrap().iter().all(|z| z.norm() == 0.0));
    }
}
