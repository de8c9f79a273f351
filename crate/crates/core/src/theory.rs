//! Closed-form predictions for Bell-diagonal states under local PDL: the
//! orientation parameter κ, concurrence and rate laws, the average
//! entanglement, the cross-channel equivalence mapping and compensator
//! design.

use crate::channels::{PdlElement, StokesVec};
use crate::error::{domain, Error, Result};
use crate::qmath::CorrelationT;
use crate::scalar::Real;

/// `κ = (T·γ̂_A)·γ̂_B`, clamped to `[−1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct KappaValue<T>(T);

impl<T: Real> KappaValue<T> {
    pub fn new(raw: T) -> Result<Self> {
        if !(raw.abs() <= T::one() + T::tol()) {
            return domain(format!("kappa {raw} outside [-1, 1]"));
        }
        Ok(Self(raw.max(-T::one()).min(T::one())))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// A compensating element for channel B with the predictions it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompensatorPlan<T> {
    pub element: PdlElement<T>,
    pub predicted_concurrence: T,
    pub predicted_rate: T,
}

/// Normalized concurrence and rate extremes at `κ = ±1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateBounds<T> {
    /// `sech(γ_A + γ_B)`, reached at `κ = +1`.
    pub c_min: T,
    /// `sech(γ_A − γ_B)`, reached at `κ = −1`; equals 1 at matched magnitudes.
    pub c_max_norm: T,
    /// `½(e^{−2γ_A} + e^{−2γ_B})`
    pub rate_at_kappa_minus1: T,
    /// `½(1 + e^{−2(γ_A+γ_B)})`
    pub rate_at_kappa_plus1: T,
}

pub fn kappa<T: Real>(
    t: &CorrelationT<T>,
    axis_a: &StokesVec<T>,
    axis_b: &StokesVec<T>,
) -> Result<KappaValue<T>> {
    let ta = StokesVec::from_array(t.apply(axis_a.as_array()));
    KappaValue::new(ta.dot(axis_b))
}

fn denominator<T: Real>(gamma_a: T, gamma_b: T, kappa: KappaValue<T>) -> T {
    gamma_a.cosh() * gamma_b.cosh() + kappa.value() * gamma_a.sinh() * gamma_b.sinh()
}

/// `C′ = C / (cosh γ_A cosh γ_B + κ sinh γ_A sinh γ_B)`
pub fn predicted_concurrence<T: Real>(c0: T, gamma_a: T, gamma_b: T, kappa: KappaValue<T>) -> T {
    c0 / denominator(gamma_a, gamma_b, kappa)
}

/// Coincidence rate of a Bell-diagonal state under the two elements:
/// `Γ = e^{−(γ_A+γ_B)}(cosh γ_A cosh γ_B + κ sinh γ_A sinh γ_B)`.
pub fn predicted_rate<T: Real>(gamma_a: T, gamma_b: T, kappa: KappaValue<T>) -> T {
    (-(gamma_a + gamma_b)).exp() * denominator(gamma_a, gamma_b, kappa)
}

/// `Γ·C(ρ′) = e^{−(γ_A+γ_B)}·C(ρ)`, independent of orientation.
pub fn average_entanglement<T: Real>(c0: T, gamma_a: T, gamma_b: T) -> T {
    (-(gamma_a + gamma_b)).exp() * c0
}

/// Moves a PDL element from qubit A to an element on qubit B that yields the
/// same post-selected state: equal magnitude, axis `T·γ̂_A`. Only Bell-state
/// correlations are accepted.
pub fn equivalence_map<T: Real>(e: &PdlElement<T>, t: &CorrelationT<T>) -> Result<PdlElement<T>> {
    if !t.is_bell() {
        return Err(Error::UnsupportedState(format!(
            "equivalence mapping needs |t_j| = 1, got ({}, {}, {})",
            t.t1, t.t2, t.t3
        )));
    }
    // t_j are ±1 up to rounding: apply them as exact sign flips
    let a = e.axis().as_array();
    let t = t.as_array();
    let axis = std::array::from_fn(|j| a[j] * t[j].signum());
    PdlElement::new(e.gamma(), StokesVec::from_array(axis))
}

/// Channel-B element that best restores the concurrence lost to `agg_a`.
///
/// With `u = T·γ̂_A / m`, `m = ‖T·γ̂_A‖`, the optimum is anti-parallel to `u`
/// with `tanh γ_B = m·tanh γ_A`, giving
/// `C′ = C / (cosh γ_A · √(1 − m² tanh² γ_A))`. For Bell states `m = 1` and
/// the original concurrence is restored exactly.
pub fn design_compensator<T: Real>(agg_a: &PdlElement<T>, t: &CorrelationT<T>) -> Result<CompensatorPlan<T>> {
    let ta = StokesVec::from_array(t.apply(agg_a.axis().as_array()));
    let m = ta.norm();
    if m < T::lit(1e-12) {
        return Err(Error::NoCompensationDirection);
    }
    let m = m.min(T::one());
    let axis_b = ta.scaled(-T::one() / ta.norm());
    let gamma_a = agg_a.gamma();
    let gamma_b = (m * gamma_a.tanh()).atanh();
    let element = PdlElement::new(gamma_b, axis_b)?;
    let c0 = t.bell_diagonal_concurrence();
    let k = kappa(t, &agg_a.axis(), &axis_b)?;
    Ok(CompensatorPlan {
        element,
        predicted_concurrence: predicted_concurrence(c0, gamma_a, gamma_b, k),
        predicted_rate: predicted_rate(gamma_a, gamma_b, k),
    })
}

/// Closed form of the best achievable concurrence for a Bell-diagonal state
/// with baseline `c0` when channel A carries `gamma_a` along a direction with
/// `m = ‖T·γ̂_A‖`.
pub fn optimal_compensated_concurrence<T: Real>(c0: T, gamma_a: T, m: T) -> T {
    let th = gamma_a.tanh();
    c0 / (gamma_a.cosh() * (T::one() - m * m * th * th).sqrt())
}

pub fn rate_bounds<T: Real>(gamma_a: T, gamma_b: T) -> Result<RateBounds<T>> {
    if !(gamma_a >= T::zero() && gamma_b >= T::zero()) {
        return domain("PDL magnitudes must be >= 0");
    }
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    Ok(RateBounds {
        c_min: T::one() / (gamma_a + gamma_b).cosh(),
        c_max_norm: T::one() / (gamma_a - gamma_b).cosh(),
        rate_at_kappa_minus1: half * ((-two * gamma_a).exp() + (-two * gamma_b).exp()),
        rate_at_kappa_plus1: half * (T::one() + (-two * (gamma_a + gamma_b)).exp()),
    })
}

/// Inverts the single-channel law `C = C₀ / cosh γ`.
pub fn estimate_gamma_from_concurrence<T: Real>(c0: T, c_meas: T) -> Result<T> {
    let slack = T::tol();
    if !(c_meas > T::zero()) || !(c0 <= T::one() + slack) {
        return domain(format!("need 0 < c_meas and c0 <= 1, got c0 = {c0}, c_meas = {c_meas}"));
    }
    if c_meas > c0 + slack {
        return Err(Error::Inversion {
            baseline: c0.to_f64().unwrap_or(f64::NAN),
            measured: c_meas.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((c0 / c_meas).max(T::one()).acosh())
}
