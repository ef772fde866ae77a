//! Heat semigroup on the flat torus via the exact Fourier symbol of the
//! periodic heat kernel.

use num_complex::Complex;
use rayon::prelude::*;

use crate::fft::FftNd;
use crate::field::{GridSpec, Layout, MatrixField};
use crate::matgeom::SmallMatrix;
use crate::mbo::Diffuser;
use crate::{Error, Real, Result};

/// `exp(−4π²τ Σ (kᵢ/Lᵢ)²)`.
pub fn heat_multiplier<T: Real>(k: &[i64], tau: T, extent: &[T]) -> Result<T> {
    if !(tau > T::zero()) {
        return Err(Error::OutOfRange("tau"));
    }
    if k.len() != extent.len() {
        return Err(Error::DimensionMismatch(k.len(), extent.len()));
    }
    let s = k
        .iter()
        .zip(extent)
        .fold(T::zero(), |s, (&ki, &l)| {
            let q = T::lit(ki as f64) / l;
            s + q * q
        });
    Ok((-T::lit(4.0) * T::PI() * T::PI() * tau * s).exp())
}

/// Signed frequency of DFT index `i` on `n` points.
fn signed_mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub struct TorusDiffuser<T: Real> {
    grid: GridSpec<T>,
    tau: T,
    /// Already divided by the point count, so forward + multiply + inverse
    /// is the whole step.
    multipliers: Vec<T>,
    fft: FftNd<T>,
}

impl<T: Real> TorusDiffuser<T> {
    pub fn new(grid: GridSpec<T>, tau: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::OutOfRange("tau"));
        }
        let inv_len = T::one() / T::lit(grid.len() as f64);
        let mut multipliers = Vec::with_capacity(grid.len());
        let mut k = vec![0i64; grid.d()];
        for p in 0..grid.len() {
            let idx = grid.multi_index(p);
            for a in 0..grid.d() {
                k[a] = signed_mode(idx[a], grid.sizes()[a]);
            }
            multipliers.push(heat_multiplier(&k, tau, grid.extent())? * inv_len);
        }
        let fft = FftNd::new(grid.sizes());
        Ok(Self {
            grid,
            tau,
            multipliers,
            fft,
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// Diffuses a complex grid in place. Real and imaginary parts evolve
    /// independently because the symbol is real and even.
    pub fn diffuse_complex(&self, data: &mut [Complex<T>]) {
        self.fft.process(data, false);
        for (x, &m) in data.iter_mut().zip(&self.multipliers) {
            *x = *x * m;
        }
        self.fft.process(data, true);
    }

    pub fn diffuse_scalar(&self, data: &[T]) -> Vec<T> {
        let mut buf: Vec<Complex<T>> = data.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.diffuse_complex(&mut buf);
        let scale = data.iter().fold(T::one(), |s, x| s.max(x.abs()));
        let residue = buf.iter().fold(T::zero(), |s, z| s.max(z.im.abs()));
        assert!(
            residue <= T::lit(1e-10) * scale,
            "imaginary residue {residue} after real diffusion"
        );
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Diffuses every matrix entry. Entries are packed two per complex
    /// transform.
    pub fn diffuse_field(&self, f: &MatrixField<T>) -> Result<MatrixField<T>> {
        match f.layout().as_ref() {
            Layout::Grid(g) if *g == self.grid => {}
            _ => return Err(Error::BackendMismatch),
        }
        let n = f.n();
        let comps = n * n;
        let pairs: Vec<(usize, Option<usize>)> = (0..comps)
            .step_by(2)
            .map(|k| (k, if k + 1 < comps { Some(k + 1) } else { None }))
            .collect();
        let out: Vec<(usize, Vec<T>)> = pairs
            .par_iter()
            .flat_map_iter(|&(a, b)| {
                let mut res = Vec::with_capacity(2);
                match b {
                    Some(b) => {
                        let mut buf: Vec<Complex<T>> = f
                            .data()
                            .iter()
                            .map(|m| Complex::new(m.entry(a), m.entry(b)))
                            .collect();
                        self.diffuse_complex(&mut buf);
                        res.push((a, buf.iter().map(|z| z.re).collect()));
                        res.push((b, buf.iter().map(|z| z.im).collect()));
                    }
                    None => res.push((a, self.diffuse_scalar(&f.component(a)))),
                }
                res
            })
            .collect();
        let mut data = vec![SmallMatrix::zeros(n); f.len()];
        for (k, values) in out {
            for (m, v) in data.iter_mut().zip(values) {
                m.set_entry(k, v);
            }
        }
        f.with_data(data)
    }
}

impl<T: Real> Diffuser<T> for TorusDiffuser<T> {
    fn tau(&self) -> T {
        self.tau
    }

    fn diffuse(&self, f: &MatrixField<T>) -> Result<MatrixField<T>> {
        self.diffuse_field(f)
    }
}

/// One-shot convenience wrapper around [`TorusDiffuser`].
pub fn diffuse_torus<T: Real>(f: &MatrixField<T>, tau: T) -> Result<MatrixField<T>> {
    let g = f.grid().ok_or(Error::BackendMismatch)?.clone();
    TorusDiffuser::new(g, tau)?.diffuse_field(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};
    use std::sync::Arc;

    fn layout(n: usize) -> Arc<Layout<f64>> {
        Arc::new(Layout::Grid(GridSpec::unit_torus(n).unwrap()))
    }

    #[test]
    fn multiplier_examples() {
        assert_eq!(heat_multiplier(&[0, 0], 0.3, &[1.0, 1.0]).unwrap(), 1.0);
        let m = heat_multiplier(&[1, 0], 1.0 / (4.0 * PI * PI), &[1.0, 1.0]).unwrap();
        assert!((m - (-1.0f64).exp()).abs() < 1e-15);
        assert!(heat_multiplier(&[1, 0], 0.0, &[1.0, 1.0]).is_err());
    }

    /// FFT of the sampled, lattice-summed Gaussian reproduces the symbol.
    #[test]
    fn multiplier_matches_sampled_kernel() {
        let n = 256;
        let tau = 0.0078125;
        let g = GridSpec::<f64>::unit_torus(n).unwrap();
        let dx = g.dx(0);
        let kernel_1d: Vec<f64> = (0..n)
            .map(|i| {
                let x = signed_mode(i, n) as f64 * dx;
                (-3..=3)
                    .map(|l| {
                        let y = x + l as f64;
                        (-y * y / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
                    })
                    .sum::<f64>()
            })
            .collect();
        let mut buf: Vec<Complex<f64>> = (0..n * n)
            .map(|p| Complex::new(kernel_1d[p % n] * kernel_1d[p / n] * dx * dx, 0.0))
            .collect();
        FftNd::new(&[n, n]).process(&mut buf, false);
        let mut worst = 0.0f64;
        for p in 0..n * n {
            let k = [signed_mode(p % n, n), signed_mode(p / n, n)];
            let m = heat_multiplier(&k, tau, &[1.0, 1.0]).unwrap();
            worst = worst.max((buf[p].re - m).abs() + buf[p].im.abs());
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn constant_field_fixed() {
        let m = SmallMatrix::from_rows(2, &[0.6, -0.8, 0.8, 0.6]).unwrap();
        let f = MatrixField::constant(layout(32), m);
        let d = diffuse_torus(&f, 0.01).unwrap();
        for x in d.data() {
            assert!(x.sub(&m).frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn eigenfunction_decay() {
        let g = GridSpec::<f64>::unit_torus(64).unwrap();
        let d = TorusDiffuser::new(g.clone(), 0.01).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|p| (TAU * g.position(p)[0]).sin()).collect();
        let v = d.diffuse_scalar(&u);
        let decay = (-4.0 * PI * PI * 0.01f64).exp();
        for (a, b) in u.iter().zip(&v) {
            assert!((a * decay - b).abs() < 1e-13);
        }
    }

    #[test]
    fn semigroup_and_mass() {
        let g = GridSpec::<f64>::unit_torus(32).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|p| ((p * 7919) % 101) as f64 / 101.0).collect();
        let a = TorusDiffuser::new(g.clone(), 0.002).unwrap();
        let b = TorusDiffuser::new(g.clone(), 0.003).unwrap();
        let c = TorusDiffuser::new(g.clone(), 0.005).unwrap();
        let two = b.diffuse_scalar(&a.diffuse_scalar(&u));
        let one = c.diffuse_scalar(&u);
        for (x, y) in two.iter().zip(&one) {
            assert!((x - y).abs() < 1e-10);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&u) - mean(&one)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = GridSpec::<f64>::unit_torus(16).unwrap();
        assert!(TorusDiffuser::new(g.clone(), -1.0).is_err());
        let d = TorusDiffuser::new(g, 0.1).unwrap();
        let other = MatrixField::constant(layout(32), SmallMatrix::identity(2));
        assert!(matches!(d.diffuse_field(&other), Err(Error::BackendMismatch)));
    }

    #[test]
    fn packed_components_match_single() {
        let g = GridSpec::<f64>::unit_torus(32).unwrap();
        let f = MatrixField::from_fn(layout(32), 2, |p, _| {
            let a = 3.0 * p[0] + (TAU * p[1]).sin();
            SmallMatrix::from_rows(2, &[a.cos(), -a.sin(), a.sin(), a.cos()]).unwrap()
        })
        .unwrap();
        let d = TorusDiffuser::new(g, 0.004).unwrap();
        let out = d.diffuse_field(&f).unwrap();
        for k in 0..4 {
            let single = d.diffuse_scalar(&f.component(k));
            for (x, y) in out.component(k).iter().zip(&single) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let g = GridSpec::<f32>::unit_torus(16).unwrap();
        let f = MatrixField::constant(Arc::new(Layout::Grid(g)), SmallMatrix::<f32>::identity(2));
        let d = diffuse_torus(&f, 0.01f32).unwrap();
        assert!(d.data()[3].sub(&SmallMatrix::identity(2)).frobenius_norm() < 1e-5);
    }
}
