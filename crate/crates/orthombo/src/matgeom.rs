//! Small dense matrices (n ≤ 3), their SVD, and the projections onto
//! O(n), SO(n) and SO⁻(n).
//!
//! Sign convention for [`svd`]: singular values are non-negative and sorted
//! in non-increasing order, `det(v) = +1`, and `det(u)` carries the sign of
//! `det(a)`. Any reflection therefore lives in the last column of `u`.

use crate::{Error, Real, Result};

pub const MAX_DIM: usize = 3;

/// Dense `n × n` real matrix, `1 ≤ n ≤ 3`, stored with a fixed row stride of 3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMatrix<T> {
    n: usize,
    e: [T; 9],
}

#[inline]
fn at(i: usize, j: usize) -> usize {
    3 * i + j
}

impl<T: Real> SmallMatrix<T> {
    /// # Panics
    /// If `n` is not in `1..=3`.
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix dimension {n} unsupported");
        Self {
            n,
            e: [T::zero(); 9],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.e[at(i, i)] = T::one();
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.e[at(i, i)] = x;
        }
        m
    }

    /// `diag(1, …, 1, −1)`.
    pub fn reflector(n: usize) -> Self {
        let mut m = Self::identity(n);
        m.e[at(n - 1, n - 1)] = -T::one();
        m
    }

    /// Builds a matrix from `n²` entries in row-major order.
    pub fn from_rows(n: usize, entries: &[T]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::InvalidInput(format!("matrix dimension {n}")));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(entries.len(), n * n));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.e[at(i, j)] = entries[i * n + j];
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.n && j < self.n);
        self.e[at(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        self.e[at(i, j)] = v;
    }

    /// Entry `k` in row-major order, `k < n²`.
    #[inline]
    pub fn entry(&self, k: usize) -> T {
        self.e[at(k / self.n, k % self.n)]
    }

    #[inline]
    pub fn set_entry(&mut self, k: usize, v: T) {
        let n = self.n;
        self.e[at(k / n, k % n)] = v;
    }

    pub fn to_row_major(&self) -> Vec<T> {
        (0..self.n * self.n).map(|k| self.entry(k)).collect()
    }

    pub fn column(&self, j: usize) -> [T; 3] {
        let mut c = [T::zero(); 3];
        for (i, ci) in c.iter_mut().enumerate().take(self.n) {
            *ci = self.e[at(i, j)];
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.e[at(j, i)] = self.e[at(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, b: &Self) -> Self {
        debug_assert_eq!(self.n, b.n);
        let n = self.n;
        let mut c = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.e[at(i, k)] * b.e[at(k, j)];
                }
                c.e[at(i, j)] = s;
            }
        }
        c
    }

    pub fn add(&self, b: &Self) -> Self {
        let mut c = *self;
        for (x, y) in c.e.iter_mut().zip(b.e.iter()) {
            *x = *x + *y;
        }
        c
    }

    pub fn sub(&self, b: &Self) -> Self {
        let mut c = *self;
        for (x, y) in c.e.iter_mut().zip(b.e.iter()) {
            *x = *x - *y;
        }
        c
    }

    pub fn scale(&self, s: T) -> Self {
        let mut c = *self;
        for x in c.e.iter_mut() {
            *x = *x * s;
        }
        c
    }

    pub fn det(&self) -> T {
        let e = &self.e;
        match self.n {
            1 => e[0],
            2 => e[0] * e[4] - e[1] * e[3],
            _ => {
                e[0] * (e[4] * e[8] - e[5] * e[7]) - e[1] * (e[3] * e[8] - e[5] * e[6])
                    + e[2] * (e[3] * e[7] - e[4] * e[6])
            }
        }
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> T {
        self.e.iter().fold(T::zero(), |s, &x| s + x * x)
    }

    pub fn frobenius_norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().all(|x| x.is_finite())
    }

    /// `‖AᵗA − I‖_F`.
    pub fn orthogonality_residual(&self) -> T {
        self.transpose()
            .matmul(self)
            .sub(&Self::identity(self.n))
            .frobenius_norm()
    }

    fn set_column(&mut self, j: usize, c: &[T; 3]) {
        for (i, &ci) in c.iter().enumerate().take(self.n) {
            self.e[at(i, j)] = ci;
        }
    }

    fn negate_column(&mut self, j: usize) {
        for i in 0..self.n {
            self.e[at(i, j)] = -self.e[at(i, j)];
        }
    }
}

/// `a = u · diag(sigma) · vᵗ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdResult<T> {
    pub u: SmallMatrix<T>,
    sigma: [T; 3],
    pub v: SmallMatrix<T>,
}

impl<T: Real> SvdResult<T> {
    pub fn sigma(&self) -> &[T] {
        &self.sigma[..self.u.n]
    }

    pub fn sigma_min(&self) -> T {
        self.sigma[self.u.n - 1]
    }

    pub fn reconstruct(&self) -> SmallMatrix<T> {
        let n = self.u.n;
        self.u
            .matmul(&SmallMatrix::diag(&self.sigma[..n]))
            .matmul(&self.v.transpose())
    }

    /// `u·vᵗ`
    pub fn polar(&self) -> SmallMatrix<T> {
        self.u.matmul(&self.v.transpose())
    }

    /// `u·Dₙ·vᵗ`
    pub fn polar_reflected(&self) -> SmallMatrix<T> {
        let mut ud = self.u;
        ud.negate_column(self.u.n - 1);
        ud.matmul(&self.v.transpose())
    }

    /// `Σ(σᵢ − 1)²`
    pub fn dist_sq_orthogonal(&self) -> T {
        self.sigma()
            .iter()
            .fold(T::zero(), |s, &x| s + (x - T::one()) * (x - T::one()))
    }
}

pub fn svd<T: Real>(a: &SmallMatrix<T>) -> Result<SvdResult<T>> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let mut r = match a.n {
        1 => svd1(a),
        2 => svd2(a),
        _ => svd3(a),
    };
    let d = a.det();
    let du = r.u.det();
    if d != T::zero() && (d > T::zero()) != (du > T::zero()) {
        r.u.negate_column(a.n - 1);
    }
    Ok(r)
}

fn svd1<T: Real>(a: &SmallMatrix<T>) -> SvdResult<T> {
    let x = a.get(0, 0);
    let s = if x < T::zero() { -T::one() } else { T::one() };
    SvdResult {
        u: SmallMatrix::diag(&[s]),
        sigma: [x.abs(), T::zero(), T::zero()],
        v: SmallMatrix::identity(1),
    }
}

/// Closed form: `a = R(φ)·diag(sx, sy)·R(θ)` with `sx ≥ |sy|`.
fn svd2<T: Real>(a: &SmallMatrix<T>) -> SvdResult<T> {
    let two = T::lit(2.0);
    let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    let e = (p + s) / two;
    let f = (p - s) / two;
    let g = (r + q) / two;
    let h = (r - q) / two;
    let qq = e.hypot(h);
    let rr = f.hypot(g);
    let sx = qq + rr;
    let sy = qq - rr;
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let theta = (a2 - a1) / two;
    let phi = (a2 + a1) / two;
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let mut u = SmallMatrix::from_rows(2, &[cp, -sp, sp, cp]).expect("finite");
    // v = R(θ)ᵗ
    let v = SmallMatrix::from_rows(2, &[ct, st, -st, ct]).expect("finite");
    if sy < T::zero() {
        u.negate_column(1);
    }
    SvdResult {
        u,
        sigma: [sx, sy.abs(), T::zero()],
        v,
    }
}

fn dot3<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit3<T: Real>(a: &[T; 3]) -> [T; 3] {
    let nrm = dot3(a, a).sqrt();
    [a[0] / nrm, a[1] / nrm, a[2] / nrm]
}

/// Unit vector orthogonal to the unit vector `u`.
fn any_orthogonal<T: Real>(u: &[T; 3]) -> [T; 3] {
    let mut k = 0;
    for i in 1..3 {
        if u[i].abs() < u[k].abs() {
            k = i;
        }
    }
    let mut e = [T::zero(); 3];
    e[k] = T::one();
    let d = dot3(&e, u);
    unit3(&[e[0] - d * u[0], e[1] - d * u[1], e[2] - d * u[2]])
}

const MAX_SWEEPS: usize = 64;

/// One-sided Jacobi on the columns of `a`.
fn svd3<T: Real>(a: &SmallMatrix<T>) -> SvdResult<T> {
    let tol = T::jacobi_tol();
    let mut w = [a.column(0), a.column(1), a.column(2)];
    let mut v = [
        [T::one(), T::zero(), T::zero()],
        [T::zero(), T::one(), T::zero()],
        [T::zero(), T::zero(), T::one()],
    ];
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let alpha = dot3(&w[i], &w[i]);
            let beta = dot3(&w[j], &w[j]);
            let gamma = dot3(&w[i], &w[j]);
            if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let c = T::one() / (T::one() + t * t).sqrt();
            let s = c * t;
            for vec in [&mut w, &mut v] {
                let (x, y) = (vec[i], vec[j]);
                for k in 0..3 {
                    vec[i][k] = c * x[k] - s * y[k];
                    vec[j][k] = s * x[k] + c * y[k];
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut norms = [
        dot3(&w[0], &w[0]).sqrt(),
        dot3(&w[1], &w[1]).sqrt(),
        dot3(&w[2], &w[2]).sqrt(),
    ];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&p, &q| norms[q].partial_cmp(&norms[p]).expect("finite"));
    let w = [w[order[0]], w[order[1]], w[order[2]]];
    let mut vs = [v[order[0]], v[order[1]], v[order[2]]];
    norms = [norms[order[0]], norms[order[1]], norms[order[2]]];

    let mut vm = SmallMatrix::zeros(3);
    for (j, c) in vs.iter().enumerate() {
        vm.set_column(j, c);
    }
    if vm.det() < T::zero() {
        for v in vs[2].iter_mut() {
            *v = -*v;
        }
        vm.negate_column(2);
    }

    if norms[0] == T::zero() {
        return SvdResult {
            u: SmallMatrix::identity(3),
            sigma: [T::zero(); 3],
            v: SmallMatrix::identity(3),
        };
    }
    let u0 = unit3(&w[0]);
    let d = dot3(&u0, &w[1]);
    let r1 = [w[1][0] - d * u0[0], w[1][1] - d * u0[1], w[1][2] - d * u0[2]];
    let u1 = if dot3(&r1, &r1).sqrt() > tol * norms[0] {
        unit3(&r1)
    } else {
        any_orthogonal(&u0)
    };
    let mut u2 = cross3(&u0, &u1);
    // After the det(v) fix w[2] may point against u0 × u1.
    if dot3(&u2, &w[2]) < T::zero() {
        u2 = [-u2[0], -u2[1], -u2[2]];
    }
    let mut u = SmallMatrix::zeros(3);
    u.set_column(0, &u0);
    u.set_column(1, &u1);
    u.set_column(2, &u2);
    SvdResult {
        u,
        sigma: norms,
        v: vm,
    }
}

/// Nearest element of O(n) and its squared Frobenius distance `Σ(σᵢ − 1)²`.
///
/// For nonsingular input the result lies in the same component as `a`.
/// With repeated singular values the minimizer is not unique; the one
/// produced by the deterministic SVD is returned.
pub fn nearest_orthogonal<T: Real>(a: &SmallMatrix<T>) -> Result<(SmallMatrix<T>, T)> {
    let s = svd(a)?;
    Ok((s.polar(), s.dist_sq_orthogonal()))
}

/// Nearest element of the component of O(n) opposite to `sign(det a)`,
/// with squared distance `Σ(σᵢ − 1)² + 4σ_min`.
pub fn nearest_opposite<T: Real>(a: &SmallMatrix<T>) -> Result<(SmallMatrix<T>, T)> {
    if a.det() == T::zero() {
        return Err(Error::DegenerateDeterminant);
    }
    let s = svd(a)?;
    let d = s.dist_sq_orthogonal() + T::lit(4.0) * s.sigma_min();
    Ok((s.polar_reflected(), d))
}

/// Nearest matrix in SO(n).
pub fn t_plus<T: Real>(a: &SmallMatrix<T>) -> Result<SmallMatrix<T>> {
    let d = a.det();
    if d == T::zero() {
        return Err(Error::DegenerateDeterminant);
    }
    let s = svd(a)?;
    Ok(if d > T::zero() {
        s.polar()
    } else {
        s.polar_reflected()
    })
}

/// Nearest matrix in SO⁻(n).
pub fn t_minus<T: Real>(a: &SmallMatrix<T>) -> Result<SmallMatrix<T>> {
    let d = a.det();
    if d == T::zero() {
        return Err(Error::DegenerateDeterminant);
    }
    let s = svd(a)?;
    Ok(if d > T::zero() {
        s.polar_reflected()
    } else {
        s.polar()
    })
}

pub fn frobenius_inner<T: Real>(a: &SmallMatrix<T>, b: &SmallMatrix<T>) -> Result<T> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(a.n, b.n));
    }
    Ok(a.e.iter().zip(b.e.iter()).fold(T::zero(), |s, (&x, &y)| s + x * y))
}

/// Both projections of a diffused value with the data the volume-constrained
/// step needs.
#[derive(Clone, Copy, Debug)]
pub struct SignedProjection<T> {
    /// Nearest matrix in SO(n).
    pub plus: SmallMatrix<T>,
    /// Nearest matrix in SO⁻(n).
    pub minus: SmallMatrix<T>,
    /// `⟨T⁺ − T⁻, a⟩_F = ±2σ_min`.
    pub delta_e: T,
    /// `det(a) == 0`; `plus` is then `u·vᵗ` or its reflection, whichever is in SO(n).
    pub singular: bool,
}

pub fn signed_projection<T: Real>(a: &SmallMatrix<T>) -> Result<SignedProjection<T>> {
    let s = svd(a)?;
    let d = a.det();
    let p = s.polar();
    let r = s.polar_reflected();
    let two_smin = T::lit(2.0) * s.sigma_min();
    Ok(if d > T::zero() {
        SignedProjection {
            plus: p,
            minus: r,
            delta_e: two_smin,
            singular: false,
        }
    } else if d < T::zero() {
        SignedProjection {
            plus: r,
            minus: p,
            delta_e: -two_smin,
            singular: false,
        }
    } else if p.det() > T::zero() {
        SignedProjection {
            plus: p,
            minus: r,
            delta_e: T::zero(),
            singular: true,
        }
    } else {
        SignedProjection {
            plus: r,
            minus: p,
            delta_e: T::zero(),
            singular: true,
        }
    })
}
