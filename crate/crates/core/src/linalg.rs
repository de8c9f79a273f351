//! Dense complex matrices of fixed small dimension and the spectral routines
//! built on them: Hermitian Jacobi eigendecomposition, one-sided Jacobi SVD and
//! a shifted Hessenberg QR iteration for matrices with real spectrum that are
//! not themselves Hermitian (e.g. `ρ·ρ̃`).

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type C<T> = Complex<T>;

/// Row-major `N×N` complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<T, const N: usize>(pub [[C<T>; N]; N]);

pub type Mat2<T> = Mat<T, 2>;
pub type Mat4<T> = Mat<T, 4>;

/// Complex column vector of length `N`.
pub type Vector<T, const N: usize> = [C<T>; N];

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

impl<T: Real, const N: usize> Mat<T, N> {
    pub fn zeros() -> Self {
        Mat([[C::zero(); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = C::one();
        }
        m
    }

    pub fn from_real_diag(d: [T; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = cr(d[i]);
        }
        m
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &Vector<T, N>, w: &Vector<T, N>) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = v[i] * w[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = z.conj());
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> C<T> {
        (0..N).fold(C::zero(), |acc, i| acc + self.0[i][i])
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = *z * s);
        m
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z = *z * s);
        m
    }

    /// `(M + M†)/2`
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(T::lit(0.5))
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.0
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn apply(&self, v: &Vector<T, N>) -> Vector<T, N> {
        let mut out = [C::zero(); N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).fold(C::zero(), |acc, j| acc + self.0[i][j] * v[j]);
        }
        out
    }

    /// `Tr(A·B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C<T> {
        let mut acc = C::zero();
        for i in 0..N {
            for j in 0..N {
                acc = acc + self.0[i][j] * other.0[j][i];
            }
        }
        acc
    }

    /// `⟨v|M|v⟩`
    pub fn expectation(&self, v: &Vector<T, N>) -> C<T> {
        let mv = self.apply(v);
        inner(v, &mv)
    }

    /// `V·diag(d)·V†` from column eigenvectors.
    pub fn from_spectral(values: &[T; N], vectors: &Self) -> Self {
        let mut m = Self::zeros();
        for k in 0..N {
            for i in 0..N {
                let vik = vectors.0[i][k] * values[k];
                for j in 0..N {
                    m.0[i][j] = m.0[i][j] + vik * vectors.0[j][k].conj();
                }
            }
        }
        m
    }

    pub fn column(&self, k: usize) -> Vector<T, N> {
        let mut v = [C::zero(); N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = self.0[i][k];
        }
        v
    }
}

/// `⟨a|b⟩`
pub fn inner<T: Real, const N: usize>(a: &Vector<T, N>, b: &Vector<T, N>) -> C<T> {
    a.iter()
        .zip(b.iter())
        .fold(C::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

pub fn vec_norm<T: Real, const N: usize>(v: &Vector<T, N>) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

impl<T, const N: usize> Index<(usize, usize)> for Mat<T, N> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.0[i][j]
    }
}

impl<T, const N: usize> IndexMut<(usize, usize)> for Mat<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.0[i][j]
    }
}

impl<T: Real, const N: usize> Add for Mat<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Sub for Mat<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        self
    }
}

impl<T: Real, const N: usize> Neg for Mat<T, N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real, const N: usize> Mul for Mat<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] = m.0[i][j] + a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

/// Kronecker product with `a₁₁·b` in the upper-left block, so basis index
/// `2·i_a + i_b`.
pub fn kron<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    let mut m = Mat4::zeros();
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    m.0[2 * ia + ib][2 * ja + jb] = a.0[ia][ja] * b.0[ib][jb];
                }
            }
        }
    }
    m
}

pub fn kron_vec<T: Real>(a: &Vector<T, 2>, b: &Vector<T, 2>) -> Vector<T, 4> {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

/// Pauli matrices: index 0 is the identity, 1..=3 are σ₁, σ₂, σ₃ with
/// `σ₃ = diag(1, −1)`.
pub fn pauli<T: Real>(j: usize) -> Mat2<T> {
    let (o, z) = (T::one(), T::zero());
    match j {
        0 => Mat([[cr(o), cr(z)], [cr(z), cr(o)]]),
        1 => Mat([[cr(z), cr(o)], [cr(o), cr(z)]]),
        2 => Mat([[cr(z), c(z, -o)], [c(z, o), cr(z)]]),
        3 => Mat([[cr(o), cr(z)], [cr(z), cr(-o)]]),
        _ => panic!("pauli index {j} out of range"),
    }
}

/// `s₁σ₁ + s₂σ₂ + s₃σ₃`
pub fn pauli_dot<T: Real>(s: [T; 3]) -> Mat2<T> {
    Mat([
        [cr(s[2]), c(s[0], -s[1])],
        [c(s[0], s[1]), cr(-s[2])],
    ])
}

impl<T: Real> Mat2<T> {
    pub fn det(&self) -> C<T> {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Singular values `(σ_max, σ_min)` via the closed-form eigenvalues of
    /// `M†M`, written without cancellation in the discriminant.
    pub fn singular_values(&self) -> (T, T) {
        let m = &self.0;
        let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let r = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let w = (m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1]).norm();
        let half = T::lit(0.5);
        let lmax = half * (p + r) + (half * (p - r)).hypot(w);
        let smax = lmax.max(T::zero()).sqrt();
        let smin = if smax > T::zero() { self.det().norm() / smax } else { T::zero() };
        (smax, smin)
    }
}

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Eigenvalues are returned in descending order with matching
/// eigenvector columns.
pub fn eigh<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<([T; N], Mat<T, N>)> {
    if !m.is_finite() {
        return Err(Error::Domain("non-finite matrix entries".into()));
    }
    let mut a = m.hermitian_part();
    let mut v = Mat::<T, N>::identity();
    let scale = a.frobenius_norm().max(T::min_positive_value());
    let eps = T::epsilon();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off = off + a.0[p][q].norm_sqr();
            }
        }
        if off.sqrt() <= eps * scale * T::lit(0.1) {
            converged = true;
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a.0[p][q];
                let mag = apq.norm();
                if mag <= T::min_positive_value() {
                    continue;
                }
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                // phase that makes the (p,q) element real and positive
                let phase = apq.conj() / mag;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;

                // columns p,q: G = D·R with D_qq = phase
                for r in 0..N {
                    let arp = a.0[r][p];
                    let arq = a.0[r][q] * phase;
                    a.0[r][p] = arp * cs - arq * sn;
                    a.0[r][q] = arp * sn + arq * cs;
                }
                for r in 0..N {
                    let apr = a.0[p][r];
                    let aqr = a.0[q][r] * phase.conj();
                    a.0[p][r] = apr * cs - aqr * sn;
                    a.0[q][r] = apr * sn + aqr * cs;
                }
                a.0[p][q] = C::zero();
                a.0[q][p] = C::zero();
                for r in 0..N {
                    let vrp = v.0[r][p];
                    let vrq = v.0[r][q] * phase;
                    v.0[r][p] = vrp * cs - vrq * sn;
                    v.0[r][q] = vrp * sn + vrq * cs;
                }
            }
        }
    }
    if !converged {
        return Err(Error::SolverFailure {
            iterations: MAX_SWEEPS,
        });
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a.0[j][j].re.partial_cmp(&a.0[i][i].re).unwrap());
    let values = std::array::from_fn(|k| a.0[order[k]][order[k]].re);
    let mut vectors = Mat::zeros();
    for (k, &src) in order.iter().enumerate() {
        for r in 0..N {
            vectors.0[r][k] = v.0[r][src];
        }
    }
    Ok((values, vectors))
}

/// Singular value decomposition `M = U·Σ·V†` by one-sided (Hestenes) Jacobi.
/// Small singular values come out with absolute accuracy near machine
/// precision relative to `‖M‖`, which is what the concurrence needs.
#[derive(Clone, Debug)]
pub struct Svd<T, const N: usize> {
    /// Descending.
    pub values: [T; N],
    /// Right singular vectors as columns.
    pub v: Mat<T, N>,
}

pub fn svd<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<Svd<T, N>> {
    if !m.is_finite() {
        return Err(Error::Domain("non-finite matrix entries".into()));
    }
    let mut a = *m;
    let mut v = Mat::<T, N>::identity();
    let eps = T::epsilon();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..N {
            for j in (i + 1)..N {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = C::zero();
                for r in 0..N {
                    alpha = alpha + a.0[r][i].norm_sqr();
                    beta = beta + a.0[r][j].norm_sqr();
                    gamma = gamma + a.0[r][i].conj() * a.0[r][j];
                }
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g <= T::min_positive_value() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let cs = T::one() / (T::one() + t * t).sqrt();
                let sn = cs * t;
                for r in 0..N {
                    let u = a.0[r][i];
                    let w = a.0[r][j] * phase;
                    a.0[r][i] = u * cs - w * sn;
                    a.0[r][j] = u * sn + w * cs;
                    let u = v.0[r][i];
                    let w = v.0[r][j] * phase;
                    v.0[r][i] = u * cs - w * sn;
                    v.0[r][j] = u * sn + w * cs;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SolverFailure {
            iterations: MAX_SWEEPS,
        });
    }

    let norms: [T; N] =
        std::array::from_fn(|k| (0..N).fold(T::zero(), |acc, r| acc + a.0[r][k].norm_sqr()).sqrt());
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let values = std::array::from_fn(|k| norms[order[k]]);
    let mut vs = Mat::zeros();
    for (k, &src) in order.iter().enumerate() {
        for r in 0..N {
            vs.0[r][k] = v.0[r][src];
        }
    }
    Ok(Svd { values, v: vs })
}

/// Complex unitary Givens rotation `[[c̄, s̄], [−s, c]]` chosen so that it maps
/// `(a, b)` to `(r, 0)`.
fn givens<T: Real>(a: C<T>, b: C<T>) -> Option<(C<T>, C<T>)> {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r <= T::min_positive_value() {
        None
    } else {
        Some((a / r, b / r))
    }
}

fn rotate_rows<T: Real, const N: usize>(h: &mut Mat<T, N>, i: usize, k: usize, cs: C<T>, sn: C<T>) {
    for col in 0..N {
        let x = h.0[i][col];
        let y = h.0[k][col];
        h.0[i][col] = cs.conj() * x + sn.conj() * y;
        h.0[k][col] = -sn * x + cs * y;
    }
}

fn rotate_cols<T: Real, const N: usize>(h: &mut Mat<T, N>, i: usize, k: usize, cs: C<T>, sn: C<T>) {
    for row in 0..N {
        let x = h.0[row][i];
        let y = h.0[row][k];
        h.0[row][i] = x * cs + y * sn;
        h.0[row][k] = -(x * sn.conj()) + y * cs.conj();
    }
}

/// All eigenvalues of a general complex matrix: Givens reduction to upper
/// Hessenberg form followed by Wilkinson-shifted QR sweeps with deflation.
pub fn eigvals_general<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<[C<T>; N]> {
    if !m.is_finite() {
        return Err(Error::Domain("non-finite matrix entries".into()));
    }
    let mut h = *m;
    for k in 0..N.saturating_sub(2) {
        for i in (k + 2)..N {
            if let Some((cs, sn)) = givens(h.0[k + 1][k], h.0[i][k]) {
                rotate_rows(&mut h, k + 1, i, cs, sn);
                rotate_cols(&mut h, k + 1, i, cs, sn);
                h.0[i][k] = C::zero();
            }
        }
    }

    let norm = h.frobenius_norm().max(T::min_positive_value());
    let eps = T::epsilon();
    let mut out = [C::zero(); N];
    let max_iter = 60 * N;
    let mut iter = 0;
    let mut since_deflation = 0;
    let mut hi = N - 1;
    while hi > 0 {
        let sub = h.0[hi][hi - 1].norm();
        let local = h.0[hi][hi].norm() + h.0[hi - 1][hi - 1].norm();
        if sub <= eps * local || sub <= eps * norm * T::lit(1e-3) {
            h.0[hi][hi - 1] = C::zero();
            out[hi] = h.0[hi][hi];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iter += 1;
        since_deflation += 1;
        if iter > max_iter {
            return Err(Error::SolverFailure { iterations: iter });
        }
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h.0[lo][lo - 1].norm();
            let l = h.0[lo][lo].norm() + h.0[lo - 1][lo - 1].norm();
            if s <= eps * l || s <= eps * norm * T::lit(1e-3) {
                h.0[lo][lo - 1] = C::zero();
                break;
            }
            lo -= 1;
        }

        let shift = if since_deflation % 11 == 10 {
            // exceptional shift breaks symmetric stalls
            h.0[hi][hi] + cr(sub * T::lit(1.5))
        } else {
            let a = h.0[hi - 1][hi - 1];
            let b = h.0[hi - 1][hi];
            let cc = h.0[hi][hi - 1];
            let d = h.0[hi][hi];
            let half = (a - d) * T::lit(0.5);
            let root = (half * half + b * cc).sqrt();
            let mean = (a + d) * T::lit(0.5);
            let l1 = mean + root;
            let l2 = mean - root;
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for i in lo..=hi {
            h.0[i][i] = h.0[i][i] - shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            match givens(h.0[k][k], h.0[k + 1][k]) {
                Some((cs, sn)) => {
                    rotate_rows(&mut h, k, k + 1, cs, sn);
                    h.0[k + 1][k] = C::zero();
                    rots.push(Some((cs, sn)));
                }
                None => rots.push(None),
            }
        }
        for (off, rot) in rots.into_iter().enumerate() {
            if let Some((cs, sn)) = rot {
                rotate_cols(&mut h, lo + off, lo + off + 1, cs, sn);
            }
        }
        for i in lo..=hi {
            h.0[i][i] = h.0[i][i] + shift;
        }
    }
    out[0] = h.0[0][0];
    Ok(out)
}

/// Eigenvalues of a matrix with real spectrum, sorted descending. Hermitian
/// inputs go through Jacobi; anything else through shifted QR, with the
/// imaginary parts required to vanish. Magnitudes below `1e-12` are clamped
/// to zero.
pub fn eigvals_desc<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<[T; N]> {
    let clamp_below = T::lit(1e-12);
    let mut vals = if m.is_hermitian(T::epsilon() * T::lit(64.0) * m.max_abs().max(T::one())) {
        eigh(m)?.0
    } else {
        let z = eigvals_general(m)?;
        let scale = m.frobenius_norm().max(T::one());
        let im_tol = T::tol().sqrt() * T::lit(1e-2) * scale;
        for e in z.iter() {
            if e.im.abs() > im_tol {
                return Err(Error::Domain(format!(
                    "spectrum is not real: eigenvalue {} + {}i",
                    e.re, e.im
                )));
            }
        }
        z.map(|e| e.re)
    };
    for x in vals.iter_mut() {
        if x.abs() < clamp_below {
            *x = T::zero();
        }
    }
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(vals)
}
