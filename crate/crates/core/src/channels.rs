//! PDL and first-order PMD channel elements and their action on two-photon
//! states.

use crate::error::{domain, Error, Result};
use crate::linalg::{kron, pauli, pauli_dot, svd, Mat2, Vector};
use crate::qmath::{DensityMatrix4, Qubit};
use crate::scalar::Real;

/// Stokes-space vector `(s₁, s₂, s₃)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesVec<T> {
    pub s1: T,
    pub s2: T,
    pub s3: T,
}

impl<T: Real> StokesVec<T> {
    pub fn new(s1: T, s2: T, s3: T) -> Self {
        Self { s1, s2, s3 }
    }

    pub fn from_array(s: [T; 3]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    /// Canonical axis `(0, 0, 1)`: H polarization.
    pub fn h() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// Unit vector at polar angle `theta` from `+s₃` and azimuth `phi` in the
    /// `s₁s₂` plane.
    pub fn from_angles(theta: T, phi: T) -> Self {
        let st = theta.sin();
        Self::new(st * phi.cos(), st * phi.sin(), theta.cos())
    }

    /// `(polar, azimuth)` inverse of [`StokesVec::from_angles`].
    pub fn angles(&self) -> (T, T) {
        let n = self.norm();
        let theta = (self.s3 / n).max(-T::one()).min(T::one()).acos();
        let phi = self.s2.atan2(self.s1);
        (theta, phi)
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.s1, self.s2, self.s3]
    }

    pub fn dot(&self, o: &Self) -> T {
        self.s1 * o.s1 + self.s2 * o.s2 + self.s3 * o.s3
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::new(self.s1 * k, self.s2 * k, self.s3 * k)
    }

    pub fn neg(&self) -> Self {
        self.scaled(-T::one())
    }

    /// Rescales to unit norm; fails on (near) zero vectors.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || n <= T::lit(1e-12) {
            return domain("cannot normalize a zero Stokes vector");
        }
        Ok(self.scaled(T::one() / n))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::tol()
    }

    /// Stokes vector of a Jones vector, `⟨v|σ_j|v⟩`.
    pub fn of_jones(v: &Vector<T, 2>) -> Self {
        let s: [T; 3] = std::array::from_fn(|j| pauli(j + 1).expectation(v).re);
        Self::from_array(s)
    }

    /// Angle to another vector in `[0, π]`.
    pub fn angle_to(&self, o: &Self) -> T {
        let c = self.dot(o) / (self.norm() * o.norm());
        c.max(-T::one()).min(T::one()).acos()
    }
}

/// PDL element `γ⃗ = γ·γ̂`, magnitude in nepers and axis of maximum
/// transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdlElement<T> {
    gamma: T,
    axis: StokesVec<T>,
}

impl<T: Real> PdlElement<T> {
    pub fn new(gamma: T, axis: StokesVec<T>) -> Result<Self> {
        if !gamma.is_finite() || gamma < T::zero() {
            return domain(format!("PDL magnitude {gamma} must be finite and >= 0"));
        }
        if !axis.is_unit() {
            return domain(format!("PDL axis norm {} is not 1", axis.norm()));
        }
        Ok(Self {
            gamma,
            axis: axis.normalized()?,
        })
    }

    pub fn from_db(db: T, axis: StokesVec<T>) -> Result<Self> {
        Self::new(gamma_from_db(db)?, axis)
    }

    /// Zero PDL with the canonical placeholder axis.
    pub fn zero() -> Self {
        Self {
            gamma: T::zero(),
            axis: StokesVec::h(),
        }
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn db(&self) -> T {
        db_from_gamma(self.gamma)
    }

    pub fn axis(&self) -> StokesVec<T> {
        self.axis
    }

    /// `γ⃗`
    pub fn vector(&self) -> StokesVec<T> {
        self.axis.scaled(self.gamma)
    }
}

/// First-order PMD as a dephasing channel about `axis` with mixing weight `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmdElement<T> {
    q: T,
    axis: StokesVec<T>,
    tau_ps: Option<T>,
}

impl<T: Real> PmdElement<T> {
    pub fn new(q: T, axis: StokesVec<T>) -> Result<Self> {
        if !(q >= T::zero() && q <= T::lit(0.5)) {
            return domain(format!("dephasing weight {q} outside [0, 0.5]"));
        }
        if !axis.is_unit() {
            return domain(format!("PMD axis norm {} is not 1", axis.norm()));
        }
        Ok(Self {
            q,
            axis: axis.normalized()?,
            tau_ps: None,
        })
    }

    /// Element derived from a differential group delay and an RMS angular
    /// bandwidth; the delay is kept for provenance.
    pub fn from_dgd(tau_ps: T, sigma_omega: T, axis: StokesVec<T>) -> Result<Self> {
        let mut e = Self::new(dephasing_from_dgd(tau_ps, sigma_omega)?, axis)?;
        e.tau_ps = Some(tau_ps);
        Ok(e)
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn axis(&self) -> StokesVec<T> {
        self.axis
    }

    pub fn tau_ps(&self) -> Option<T> {
        self.tau_ps
    }
}

/// Normalized post-selected state and the coincidence transmission rate `Γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelOutcome<T> {
    pub rho_out: DensityMatrix4<T>,
    pub rate: T,
}

/// `20·log₁₀(e)`: dB per neper of amplitude PDL.
pub fn db_per_neper<T: Real>() -> T {
    T::lit(20.0) * T::LOG10_E()
}

pub fn gamma_from_db<T: Real>(db: T) -> Result<T> {
    if !db.is_finite() || db < T::zero() {
        return domain(format!("PDL {db} dB must be finite and >= 0"));
    }
    Ok(db / db_per_neper())
}

pub fn db_from_gamma<T: Real>(gamma: T) -> T {
    gamma * db_per_neper()
}

/// `P = e^{−γ/2}(σ₀ cosh(γ/2) + (γ̂·σ⃗) sinh(γ/2))`: Hermitian, singular values
/// `(1, e^{−γ})`.
pub fn pdl_operator<T: Real>(e: &PdlElement<T>) -> Mat2<T> {
    let half = e.gamma * T::lit(0.5);
    let pre = (-half).exp();
    (Mat2::identity().scale(half.cosh()) + pauli_dot(e.axis.as_array()).scale(half.sinh())).scale(pre)
}

/// `(mA⊗mB) ρ (mA⊗mB)†`, renormalized, with its trace as the rate.
pub fn apply_local<T: Real>(
    rho: &DensityMatrix4<T>,
    m_a: &Mat2<T>,
    m_b: &Mat2<T>,
) -> Result<ChannelOutcome<T>> {
    for (name, m) in [("A", m_a), ("B", m_b)] {
        let (smax, _) = m.singular_values();
        if smax > T::one() + T::tol() {
            return domain(format!(
                "operator on qubit {name} amplifies (largest singular value {smax})"
            ));
        }
    }
    let k = kron(m_a, m_b);
    let filtered = k * *rho.mat() * k.adjoint();
    let rate = filtered.trace().re;
    if !(rate >= T::lit(1e-12)) {
        return Err(Error::Extinction {
            rate: rate.to_f64().unwrap_or(0.0),
        });
    }
    Ok(ChannelOutcome {
        rho_out: DensityMatrix4::from_trusted(filtered.scale(T::one() / rate)),
        rate,
    })
}

/// PDL elements on both qubits.
pub fn apply_pdl_pair<T: Real>(
    rho: &DensityMatrix4<T>,
    a: &PdlElement<T>,
    b: &PdlElement<T>,
) -> Result<ChannelOutcome<T>> {
    apply_local(rho, &pdl_operator(a), &pdl_operator(b))
}

/// `ρ → (1 − q)ρ + q·U ρ U†` with `U = b̂·σ⃗` on the chosen qubit.
pub fn pmd_dephase<T: Real>(
    rho: &DensityMatrix4<T>,
    e: &PmdElement<T>,
    which: Qubit,
) -> DensityMatrix4<T> {
    let u = pauli_dot(e.axis.as_array());
    let id = Mat2::identity();
    let full = match which {
        Qubit::A => kron(&u, &id),
        Qubit::B => kron(&id, &u),
    };
    let flipped = full * *rho.mat() * full.adjoint();
    DensityMatrix4::from_trusted(rho.mat().scale(T::one() - e.q) + flipped.scale(e.q))
}

/// Gaussian-spectrum dephasing weight `q = (1 − exp(−σ_ω²τ²/2))/2` for a
/// delay `tau_ps` in picoseconds and RMS angular bandwidth in rad/s.
pub fn dephasing_from_dgd<T: Real>(tau_ps: T, sigma_omega: T) -> Result<T> {
    if !(tau_ps >= T::zero() && sigma_omega >= T::zero()) {
        return domain("delay and bandwidth must be >= 0");
    }
    let x = sigma_omega * tau_ps * T::lit(1e-12);
    let coherence = (-(x * x) * T::lit(0.5)).exp();
    Ok((T::one() - coherence) * T::lit(0.5))
}

/// RMS bandwidth that yields dephasing weight `q` at delay `tau_ps`.
pub fn bandwidth_for_dephasing<T: Real>(q: T, tau_ps: T) -> Result<T> {
    if !(q >= T::zero() && q < T::lit(0.5)) || !(tau_ps > T::zero()) {
        return domain("need 0 <= q < 0.5 and tau > 0");
    }
    let coherence = T::one() - T::lit(2.0) * q;
    Ok((-T::lit(2.0) * coherence.ln()).sqrt() / (tau_ps * T::lit(1e-12)))
}

/// Aggregate of two PDL elements traversed `first` then `second`.
///
/// The product `M = P₂·P₁` has the polar form `W·P_agg` with `W` unitary, so
/// the aggregate is input-referred: its magnitude is `ln(σ_max/σ_min)` of the
/// amplitude singular values and its axis is the Stokes vector of the right
/// singular vector belonging to `σ_max`.
pub fn concat_pdl<T: Real>(first: &PdlElement<T>, second: &PdlElement<T>) -> Result<PdlElement<T>> {
    let m = pdl_operator(second) * pdl_operator(first);
    let s = svd(&m)?;
    let gamma = (s.values[0] / s.values[1]).ln();
    if !(gamma >= T::lit(1e-12)) {
        return Ok(PdlElement::zero());
    }
    let axis = StokesVec::of_jones(&s.v.column(0)).normalized()?;
    PdlElement::new(gamma, axis)
}

/// Aggregate magnitude predicted by
/// `cosh γ = cosh γ₁ cosh γ₂ + (γ̂₁·γ̂₂) sinh γ₁ sinh γ₂`.
pub fn concat_magnitude<T: Real>(gamma_1: T, gamma_2: T, cos_angle: T) -> T {
    let ch = gamma_1.cosh() * gamma_2.cosh() + cos_angle * gamma_1.sinh() * gamma_2.sinh();
    ch.max(T::one()).acosh()
}

/// Angle `ϑ ∈ [0, π]` between two PDL vectors recovered from their
/// aggregate magnitude.
pub fn angle_from_aggregate<T: Real>(gamma_tot: T, gamma_1: T, gamma_2: T) -> Result<T> {
    if gamma_1 <= T::zero() || gamma_2 <= T::zero() {
        return Err(Error::UndefinedAngle(
            "both element magnitudes must be positive".into(),
        ));
    }
    let cos = (gamma_tot.cosh() - gamma_1.cosh() * gamma_2.cosh()) / (gamma_1.sinh() * gamma_2.sinh());
    let slack = T::tol();
    if !(cos.abs() <= T::one() + slack) {
        return domain(format!(
            "aggregate {gamma_tot} outside [|γ₁−γ₂|, γ₁+γ₂] for γ₁ = {gamma_1}, γ₂ = {gamma_2}"
        ));
    }
    Ok(cos.max(-T::one()).min(T::one()).acos())
}
