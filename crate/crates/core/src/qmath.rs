//! Two-qubit states and the metrics computed on them.
//!
//! Basis convention: `|H⟩ = (1, 0)`, `|V⟩ = (0, 1)`, two-qubit index
//! `2·a + b`, and Stokes components ordered `(σ₁, σ₂, σ₃)` with
//! `σ₃ = diag(1, −1)`, so an H-aligned axis is `(0, 0, 1)`.

use num_traits::Zero;

use crate::error::{domain, Result};
use crate::linalg::{cr, eigh, eigvals_desc, kron, pauli, svd, Mat, Mat2, Mat4, Vector};
use crate::scalar::Real;

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix4<T> {
    mat: Mat4<T>,
}

/// Single-qubit density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState<T> {
    mat: Mat2<T>,
}

/// Diagonal of the correlation matrix `T = diag(t₁, t₂, t₃)`,
/// `t_j = Tr[ρ σ_j⊗σ_j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationT<T> {
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Qubit {
    A,
    B,
}

fn validate_hermitian_unit_trace<T: Real, const N: usize>(m: &Mat<T, N>) -> Result<Mat<T, N>> {
    let tol = T::tol();
    if !m.is_finite() {
        return domain("non-finite density matrix entries");
    }
    let herm_err = m.hermiticity_error();
    if herm_err > tol {
        return domain(format!("matrix is not Hermitian (deviation {herm_err})"));
    }
    let m = m.hermitian_part();
    let tr = m.trace().re;
    if (tr - T::one()).abs() > tol {
        return domain(format!("trace {tr} differs from 1"));
    }
    let (vals, _) = eigh(&m)?;
    let min = vals[N - 1];
    if min < -tol {
        return domain(format!("matrix is not positive semidefinite (eigenvalue {min})"));
    }
    Ok(m)
}

impl<T: Real> DensityMatrix4<T> {
    /// Validates after symmetrizing via `(M + M†)/2`.
    pub fn new(mat: Mat4<T>) -> Result<Self> {
        Ok(Self {
            mat: validate_hermitian_unit_trace(&mat)?,
        })
    }

    /// Builds from a matrix the caller already knows to be a valid state.
    pub(crate) fn from_trusted(mat: Mat4<T>) -> Self {
        debug_assert!(mat.is_finite());
        Self {
            mat: mat.hermitian_part(),
        }
    }

    pub fn pure(psi: &Vector<T, 4>) -> Result<Self> {
        let n = crate::linalg::vec_norm(psi);
        if (n - T::one()).abs() > T::tol() {
            return domain(format!("state vector norm {n} differs from 1"));
        }
        Ok(Self::from_trusted(Mat4::outer(psi, psi)))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_trusted(Mat4::identity().scale(T::lit(0.25)))
    }

    /// `v·|Φ⁺⟩⟨Φ⁺| + (1 − v)·I/4`
    pub fn werner(v: T) -> Result<Self> {
        let third = T::one() / T::lit(3.0);
        if !(v >= -third - T::tol() && v <= T::one() + T::tol()) {
            return domain(format!("Werner parameter {v} outside [-1/3, 1]"));
        }
        bell_diagonal(CorrelationT {
            t1: v,
            t2: -v,
            t3: v,
        })
    }

    pub fn product(a: &QubitState<T>, b: &QubitState<T>) -> Self {
        Self::from_trusted(kron(&a.mat, &b.mat))
    }

    pub fn mat(&self) -> &Mat4<T> {
        &self.mat
    }

    pub fn into_mat(self) -> Mat4<T> {
        self.mat
    }

    pub fn eigenvalues(&self) -> Result<[T; 4]> {
        Ok(eigh(&self.mat)?.0)
    }
}

impl<T: Real> QubitState<T> {
    pub fn new(mat: Mat2<T>) -> Result<Self> {
        Ok(Self {
            mat: validate_hermitian_unit_trace(&mat)?,
        })
    }

    pub(crate) fn from_trusted(mat: Mat2<T>) -> Self {
        Self {
            mat: mat.hermitian_part(),
        }
    }

    pub fn pure(psi: &Vector<T, 2>) -> Result<Self> {
        let n = crate::linalg::vec_norm(psi);
        if (n - T::one()).abs() > T::tol() {
            return domain(format!("state vector norm {n} differs from 1"));
        }
        Ok(Self::from_trusted(Mat2::outer(psi, psi)))
    }

    pub fn mat(&self) -> &Mat2<T> {
        &self.mat
    }

    /// Bloch vector `(⟨σ₁⟩, ⟨σ₂⟩, ⟨σ₃⟩)`.
    pub fn bloch(&self) -> [T; 3] {
        std::array::from_fn(|j| self.mat.trace_product(&pauli(j + 1)).re)
    }
}

impl<T: Real> CorrelationT<T> {
    pub fn new(t1: T, t2: T, t3: T) -> Result<Self> {
        let lim = T::one() + T::tol();
        for t in [t1, t2, t3] {
            if !t.is_finite() || t.abs() > lim {
                return domain(format!("correlation entry {t} outside [-1, 1]"));
            }
        }
        Ok(Self { t1, t2, t3 })
    }

    pub fn of_bell(kind: BellKind) -> Self {
        let (o, m) = (T::one(), -T::one());
        match kind {
            BellKind::PhiPlus => Self { t1: o, t2: m, t3: o },
            BellKind::PhiMinus => Self { t1: m, t2: o, t3: o },
            BellKind::PsiPlus => Self { t1: o, t2: o, t3: m },
            BellKind::PsiMinus => Self { t1: m, t2: m, t3: m },
        }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.t1, self.t2, self.t3]
    }

    /// `T·v`
    pub fn apply(&self, v: [T; 3]) -> [T; 3] {
        [self.t1 * v[0], self.t2 * v[1], self.t3 * v[2]]
    }

    /// Bell-basis weights `(Φ⁺, Φ⁻, Ψ⁺, Ψ⁻)` of the Bell-diagonal state with
    /// this correlation.
    pub fn bell_weights(&self) -> [T; 4] {
        let q = T::lit(0.25);
        let (a, b, c) = (self.t1, self.t2, self.t3);
        [
            (T::one() + a - b + c) * q,
            (T::one() - a + b + c) * q,
            (T::one() + a + b - c) * q,
            (T::one() - a - b - c) * q,
        ]
    }

    /// `|t_j| = 1` for every `j` within tolerance.
    pub fn is_bell(&self) -> bool {
        self.as_array()
            .iter()
            .all(|t| (t.abs() - T::one()).abs() <= T::tol())
    }

    /// Concurrence of the Bell-diagonal state: `max(0, 2·max weight − 1)`.
    pub fn bell_diagonal_concurrence(&self) -> T {
        let w = self.bell_weights();
        let max = w.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        (T::lit(2.0) * max - T::one()).max(T::zero())
    }
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn vector<T: Real>(self) -> Vector<T, 4> {
        let s = T::FRAC_1_SQRT_2();
        let z = T::zero();
        match self {
            BellKind::PhiPlus => [cr(s), cr(z), cr(z), cr(s)],
            BellKind::PhiMinus => [cr(s), cr(z), cr(z), cr(-s)],
            BellKind::PsiPlus => [cr(z), cr(s), cr(s), cr(z)],
            BellKind::PsiMinus => [cr(z), cr(s), cr(-s), cr(z)],
        }
    }
}

/// `σ_j ⊗ σ_j`
fn sigma_sigma<T: Real>(j: usize) -> Mat4<T> {
    kron(&pauli(j), &pauli(j))
}

pub fn bell_state<T: Real>(kind: BellKind) -> DensityMatrix4<T> {
    let v = kind.vector::<T>();
    DensityMatrix4::from_trusted(Mat4::outer(&v, &v))
}

/// `ρ = ¼(σ₀⊗σ₀ + Σ t_j σ_j⊗σ_j)`
pub fn bell_diagonal<T: Real>(t: CorrelationT<T>) -> Result<DensityMatrix4<T>> {
    let t = CorrelationT::new(t.t1, t.t2, t.t3)?;
    if let Some(w) = t.bell_weights().iter().find(|w| **w < -T::tol()) {
        return domain(format!(
            "correlation ({}, {}, {}) is unphysical: Bell weight {w}",
            t.t1, t.t2, t.t3
        ));
    }
    let mut m = Mat4::identity();
    for (j, tj) in t.as_array().into_iter().enumerate() {
        m = m + sigma_sigma(j + 1).scale(tj);
    }
    Ok(DensityMatrix4::from_trusted(m.scale(T::lit(0.25))))
}

pub fn correlation_of<T: Real>(rho: &DensityMatrix4<T>) -> CorrelationT<T> {
    let t: [T; 3] = std::array::from_fn(|j| rho.mat.trace_product(&sigma_sigma(j + 1)).re);
    CorrelationT {
        t1: t[0],
        t2: t[1],
        t3: t[2],
    }
}

/// `σ₂⊗σ₂` is real: anti-diagonal `(−1, 1, 1, −1)`.
fn spin_flip<T: Real>() -> Mat4<T> {
    sigma_sigma(2)
}

/// Wootters concurrence.
///
/// With `ρ = W·W†` (`W = V·√Λ` from the spectral decomposition), the square
/// roots of the eigenvalues of `ρ·ρ̃` are the singular values of the complex
/// symmetric matrix `τ = Wᵀ (σ₂⊗σ₂) W`. Taking them from a Jacobi SVD of `τ`
/// keeps near-zero values accurate to machine precision instead of to its
/// square root.
pub fn concurrence<T: Real>(rho: &DensityMatrix4<T>) -> Result<T> {
    let (vals, vecs) = eigh(&rho.mat)?;
    let mut w = vecs;
    for k in 0..4 {
        let s = vals[k].max(T::zero()).sqrt();
        for r in 0..4 {
            w.0[r][k] = w.0[r][k] * s;
        }
    }
    let tau = w.transpose() * spin_flip() * w;
    let sv = svd(&tau)?.values;
    Ok((sv[0] - sv[1] - sv[2] - sv[3]).max(T::zero()).min(T::one()))
}

/// `ρ̃ = (σ₂⊗σ₂) ρ* (σ₂⊗σ₂)`
pub fn spin_flipped<T: Real>(rho: &DensityMatrix4<T>) -> Mat4<T> {
    let y = spin_flip();
    y * rho.mat.conj() * y
}

/// Concurrence straight from the eigenvalues of the non-Hermitian product
/// `ρ·ρ̃`. Independent of [`concurrence`]; loses accuracy near rank
/// deficiency because of the square roots.
pub fn concurrence_from_spectrum<T: Real>(rho: &DensityMatrix4<T>) -> Result<T> {
    let r = rho.mat * spin_flipped(rho);
    let lam = eigvals_desc(&r)?;
    let clamp = T::lit(1e-10);
    let mut s = [T::zero(); 4];
    for (k, &l) in lam.iter().enumerate() {
        if l < -clamp {
            return domain(format!("negative eigenvalue {l} of ρρ̃"));
        }
        s[k] = l.max(T::zero()).sqrt();
    }
    Ok((s[0] - s[1] - s[2] - s[3]).max(T::zero()))
}

pub fn purity<T: Real>(rho: &DensityMatrix4<T>) -> T {
    rho.mat
        .0
        .iter()
        .flatten()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn qubit_purity<T: Real>(q: &QubitState<T>) -> T {
    q.mat
        .0
        .iter()
        .flatten()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

pub fn reduced_qubit<T: Real>(rho: &DensityMatrix4<T>, which: Qubit) -> QubitState<T> {
    let m = &rho.mat.0;
    let mut out = Mat2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = crate::linalg::C::zero();
            for k in 0..2 {
                acc = acc
                    + match which {
                        Qubit::A => m[2 * a + k][2 * b + k],
                        Qubit::B => m[2 * k + a][2 * k + b],
                    };
            }
            out.0[a][b] = acc;
        }
    }
    QubitState::from_trusted(out)
}

/// `S_L = 2(1 − Tr q²)`: 0 for pure, 1 for maximally mixed.
pub fn linear_entropy<T: Real>(q: &QubitState<T>) -> T {
    (T::lit(2.0) * (T::one() - qubit_purity(q))).max(T::zero())
}

/// `⟨ψ|ρ|ψ⟩` for a normalized `ψ`.
pub fn fidelity_to_pure<T: Real>(rho: &DensityMatrix4<T>, psi: &Vector<T, 4>) -> Result<T> {
    let n = crate::linalg::vec_norm(psi);
    if (n - T::one()).abs() > T::tol() {
        return domain(format!("state vector norm {n} differs from 1"));
    }
    Ok(rho.mat.expectation(psi).re)
}

/// `½‖ρ − σ‖₁`
pub fn trace_distance<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Result<T> {
    let d = (*a - *b).hermitian_part();
    let (vals, _) = eigh(&d)?;
    Ok(vals.iter().fold(T::zero(), |acc, v| acc + v.abs()) * T::lit(0.5))
}
