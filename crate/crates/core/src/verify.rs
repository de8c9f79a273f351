//! Randomized invariant suites comparing closed forms against brute-force
//! evaluation. Each suite reports its largest observed error.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{
    apply_local, apply_pdl_pair, concat_magnitude, concat_pdl, gamma_from_db, pdl_operator, PdlElement,
    StokesVec,
};
use crate::error::Result;
use crate::instrument::{self, settings_36, Acquisition, DetectorModel, SourceModel};
use crate::linalg::Mat2;
use crate::qmath::{
    bell_diagonal, bell_state, concurrence, concurrence_from_spectrum, trace_distance, BellKind,
    CorrelationT,
};
use crate::theory::{
    average_entanglement, design_compensator, equivalence_map, kappa, optimal_compensated_concurrence,
    predicted_concurrence, predicted_rate, KappaValue,
};

type Pdl = PdlElement<f64>;
type Stokes = StokesVec<f64>;

/// Closed-form concurrence `(c0, γ_A, γ_B, κ) ↦ C′` under test.
pub type ConcurrenceLaw = fn(f64, f64, f64, KappaValue<f64>) -> f64;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub cases: usize,
    pub law: ConcurrenceLaw,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            cases: 1000,
            law: predicted_concurrence::<f64>,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub elapsed: Duration,
    /// Set when a case could not be evaluated at all.
    pub failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.max_error <= self.tolerance
    }
}

/// Largest PDL magnitude drawn, 7 dB.
pub fn max_gamma() -> f64 {
    gamma_from_db(7.0).expect("positive")
}

pub fn random_axis(rng: &mut impl Rng) -> Stokes {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Stokes::new(r * phi.cos(), r * phi.sin(), z)
}

pub fn random_pdl(rng: &mut impl Rng, gamma_max: f64) -> Pdl {
    Pdl::new(rng.random_range(0.0..=gamma_max), random_axis(rng)).expect("valid element")
}

/// Bell-diagonal correlations from uniformly drawn Bell weights.
pub fn random_bell_diagonal(rng: &mut impl Rng) -> CorrelationT<f64> {
    let w: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-300).ln());
    let s: f64 = w.iter().sum();
    let [pp, pm, sp, sm] = w.map(|x| x / s);
    CorrelationT::new(pp - pm + sp - sm, -pp + pm + sp - sm, pp + pm - sp - sm).expect("valid weights")
}

fn run(
    name: &'static str,
    tolerance: f64,
    cases: usize,
    mut case: impl FnMut(usize) -> Result<f64>,
) -> SuiteReport {
    let t0 = Instant::now();
    let mut max_error: f64 = 0.0;
    let mut failure = None;
    for i in 0..cases {
        match case(i) {
            Ok(e) if e.is_nan() => {
                failure = Some(format!("case {i}: NaN error"));
                break;
            }
            Ok(e) => max_error = max_error.max(e),
            Err(err) => {
                failure = Some(format!("case {i}: {err}"));
                break;
            }
        }
    }
    SuiteReport {
        name,
        cases,
        max_error,
        tolerance,
        elapsed: t0.elapsed(),
        failure,
    }
}

/// Closed-form concurrence vs concurrence of the explicitly filtered matrix.
pub fn oracle_equivalence(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    run("oracle-equivalence", 1e-9, opts.cases, |_| {
        let t = random_bell_diagonal(&mut rng);
        let (a, b) = (random_pdl(&mut rng, max_gamma()), random_pdl(&mut rng, max_gamma()));
        let out = apply_pdl_pair(&bell_diagonal(t)?, &a, &b)?;
        let k = kappa(&t, &a.axis(), &b.axis())?;
        let want = (opts.law)(t.bell_diagonal_concurrence(), a.gamma(), b.gamma(), k);
        Ok((concurrence(&out.rho_out)? - want).abs())
    })
}

/// Singular-value route vs eigenvalue route for the concurrence.
pub fn dual_route(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x2);
    run("concurrence-dual-route", 1e-8, opts.cases, |_| {
        let t = random_bell_diagonal(&mut rng);
        let (a, b) = (random_pdl(&mut rng, max_gamma()), random_pdl(&mut rng, max_gamma()));
        let rho = apply_pdl_pair(&bell_diagonal(t)?, &a, &b)?.rho_out;
        Ok((concurrence(&rho)? - concurrence_from_spectrum(&rho)?).abs())
    })
}

/// A single element on either photon reduces `C` to `C/cosh γ` whatever
/// its orientation.
pub fn orientation_independence(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x3);
    run("orientation-independence", 1e-10, opts.cases, |i| {
        let t = random_bell_diagonal(&mut rng);
        let e = random_pdl(&mut rng, max_gamma());
        let rho = bell_diagonal(t)?;
        let out = if i % 2 == 0 {
            apply_local(&rho, &pdl_operator(&e), &Mat2::identity())?
        } else {
            apply_local(&rho, &Mat2::identity(), &pdl_operator(&e))?
        };
        let want = t.bell_diagonal_concurrence() / e.gamma().cosh();
        Ok((concurrence(&out.rho_out)? - want).abs())
    })
}

/// `Γ·C′ = e^{−(γ_A+γ_B)}·C` and the rate law itself.
pub fn conservation(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4);
    run("average-entanglement-conservation", 1e-9, opts.cases, |_| {
        let t = random_bell_diagonal(&mut rng);
        let (a, b) = (random_pdl(&mut rng, max_gamma()), random_pdl(&mut rng, max_gamma()));
        let out = apply_pdl_pair(&bell_diagonal(t)?, &a, &b)?;
        let c0 = t.bell_diagonal_concurrence();
        let k = kappa(&t, &a.axis(), &b.axis())?;
        let conserved = average_entanglement(c0, a.gamma(), b.gamma());
        let e1 = (out.rate * concurrence(&out.rho_out)? - conserved).abs();
        let e2 = (out.rate - predicted_rate(a.gamma(), b.gamma(), k)).abs();
        Ok(e1.max(e2))
    })
}

/// Moving an element from A to B through the correlation matrix leaves the
/// post-selected Bell state unchanged.
pub fn mapping_equality(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5);
    let per_state = opts.cases.div_ceil(4).max(1);
    run("equivalence-mapping", 1e-12, per_state * 4, |i| {
        let kind = BellKind::ALL[i / per_state];
        let rho = bell_state::<f64>(kind);
        let e = random_pdl(&mut rng, max_gamma());
        let mapped = equivalence_map(&e, &CorrelationT::of_bell(kind))?;
        let lhs = apply_local(&rho, &pdl_operator(&e), &Mat2::identity())?;
        let rhs = apply_local(&rho, &Mat2::identity(), &pdl_operator(&mapped))?;
        Ok((*lhs.rho_out.mat() - *rhs.rho_out.mat()).max_abs())
    })
}

/// Aggregate magnitude from the operator product vs the cosine law.
pub fn concatenation_law(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x6);
    run("concatenation-law", 1e-9, opts.cases, |_| {
        let (a, b) = (random_pdl(&mut rng, max_gamma()), random_pdl(&mut rng, max_gamma()));
        let agg = concat_pdl(&a, &b)?;
        let want = concat_magnitude(a.gamma(), b.gamma(), a.axis().dot(&b.axis()));
        Ok((agg.gamma() - want).abs())
    })
}

/// The designed compensator reaches the closed-form optimum on the filtered
/// matrix.
pub fn compensator_design(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7);
    run("compensator-design", 1e-9, opts.cases, |_| {
        let t = random_bell_diagonal(&mut rng);
        let a = random_pdl(&mut rng, max_gamma());
        let plan = match design_compensator(&a, &t) {
            Ok(p) => p,
            Err(crate::Error::NoCompensationDirection) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        let out = apply_pdl_pair(&bell_diagonal(t)?, &a, &plan.element)?;
        let m = StokesVec::from_array(t.apply(a.axis().as_array())).norm().min(1.0);
        let want = optimal_compensated_concurrence(t.bell_diagonal_concurrence(), a.gamma(), m);
        let e1 = (concurrence(&out.rho_out)? - want).abs();
        let e2 = (plan.predicted_concurrence - want).abs();
        Ok(e1.max(e2))
    })
}

/// Linear inversion of exact expected counts returns the filtered state.
pub fn tomography_roundtrip(opts: &VerifyOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x8);
    let src = SourceModel::ideal();
    let det = DetectorModel::new(0.2, 0.0, 0.0).expect("valid detector");
    let settings = settings_36();
    run("tomography-roundtrip", 1e-8, opts.cases.min(200), |_| {
        let t = random_bell_diagonal(&mut rng);
        let (a, b) = (random_pdl(&mut rng, max_gamma()), random_pdl(&mut rng, max_gamma()));
        let out = apply_pdl_pair(&bell_diagonal(t)?, &a, &b)?;
        let rho = instrument::tomography(
            &out,
            &settings,
            &src,
            &det,
            instrument::DEFAULT_PULSES,
            Acquisition::Exact,
        )?;
        trace_distance(rho.mat(), out.rho_out.mat())
    })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteReport> {
    vec![
        oracle_equivalence(opts),
        dual_route(opts),
        orientation_independence(opts),
        conservation(opts),
        mapping_equality(opts),
        concatenation_law(opts),
        compensator_design(opts),
        tomography_roundtrip(opts),
    ]
}
