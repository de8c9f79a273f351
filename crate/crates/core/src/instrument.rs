//! Testbed emulator: a calibrated pair source, detectors, analyzer settings,
//! Poisson coincidence counts and linear-inversion tomography.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::channels::{apply_local, pdl_operator, ChannelOutcome, PdlElement, StokesVec};
use crate::error::{domain, Error, Result};
use crate::linalg::{eigh, kron, kron_vec, pauli, Mat2, Mat4, Vector};
use crate::qmath::DensityMatrix4;

type Outcome = ChannelOutcome<f64>;
type Pdl = PdlElement<f64>;
type Rho = DensityMatrix4<f64>;

/// Source PDL used when none is given: 1.4 dB along H.
pub const DEFAULT_SOURCE_PDL_DB: f64 = 1.4;
pub const DEFAULT_MU: f64 = 0.05;
pub const DEFAULT_PULSE_RATE_HZ: f64 = 5e7;
pub const DEFAULT_PULSES: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceModel {
    werner_v: f64,
    source_pdl: Pdl,
    mu: f64,
    pulse_rate_hz: f64,
}

impl SourceModel {
    pub fn new(werner_v: f64, source_pdl: Pdl, mu: f64, pulse_rate_hz: f64) -> Result<Self> {
        if !(1.0 / 3.0..=1.0).contains(&werner_v) {
            return domain(format!("Werner parameter {werner_v} outside [1/3, 1]"));
        }
        if !(0.001..=0.1).contains(&mu) {
            return domain(format!("mean pair number {mu} outside [0.001, 0.1]"));
        }
        if !(pulse_rate_hz > 0.0 && pulse_rate_hz.is_finite()) {
            return domain(format!("pulse rate {pulse_rate_hz} must be positive"));
        }
        Ok(Self {
            werner_v,
            source_pdl,
            mu,
            pulse_rate_hz,
        })
    }

    /// Perfect `|Φ⁺⟩` source with no internal PDL.
    pub fn ideal() -> Self {
        Self {
            werner_v: 1.0,
            source_pdl: Pdl::zero(),
            mu: DEFAULT_MU,
            pulse_rate_hz: DEFAULT_PULSE_RATE_HZ,
        }
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(self.werner_v, self.source_pdl, mu, self.pulse_rate_hz)
    }

    pub fn werner_v(&self) -> f64 {
        self.werner_v
    }

    pub fn source_pdl(&self) -> Pdl {
        self.source_pdl
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn pulse_rate_hz(&self) -> f64 {
        self.pulse_rate_hz
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    efficiency: f64,
    dark_prob: f64,
    accidental_floor: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.20,
            dark_prob: 4e-5,
            accidental_floor: 0.0,
        }
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_prob: f64, accidental_floor: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return domain(format!("detector efficiency {efficiency} outside (0, 1]"));
        }
        if !(dark_prob >= 0.0 && dark_prob.is_finite()) {
            return domain(format!("dark count probability {dark_prob} must be >= 0"));
        }
        if !(accidental_floor >= 0.0 && accidental_floor.is_finite()) {
            return domain(format!("accidental floor {accidental_floor} must be >= 0"));
        }
        Ok(Self {
            efficiency,
            dark_prob,
            accidental_floor,
        })
    }

    /// Unit efficiency, no dark counts, no accidentals.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
            accidental_floor: 0.0,
        }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_prob(&self) -> f64 {
        self.dark_prob
    }

    pub fn accidental_floor(&self) -> f64 {
        self.accidental_floor
    }
}

/// Polarization analyzer states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Analyzer {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Analyzer {
    pub const ALL: [Analyzer; 6] = [Self::H, Self::V, Self::D, Self::A, Self::R, Self::L];

    pub fn jones(self) -> Vector<f64, 2> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        match self {
            Self::H => [one, zero],
            Self::V => [zero, one],
            Self::D => [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
            Self::A => [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
            Self::R => [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
            Self::L => [Complex64::new(s, 0.0), Complex64::new(0.0, -s)],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::H => 'H',
            Self::V => 'V',
            Self::D => 'D',
            Self::A => 'A',
            Self::R => 'R',
            Self::L => 'L',
        }
    }
}

/// Analyzer pair for one coincidence measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorSetting {
    jones_a: Vector<f64, 2>,
    jones_b: Vector<f64, 2>,
}

impl ProjectorSetting {
    pub fn new(jones_a: Vector<f64, 2>, jones_b: Vector<f64, 2>) -> Result<Self> {
        for (name, v) in [("A", &jones_a), ("B", &jones_b)] {
            let n = crate::linalg::vec_norm(v);
            if (n - 1.0).abs() > 1e-12 {
                return domain(format!("analyzer {name} has norm {n}"));
            }
        }
        Ok(Self { jones_a, jones_b })
    }

    pub fn of(a: Analyzer, b: Analyzer) -> Self {
        Self {
            jones_a: a.jones(),
            jones_b: b.jones(),
        }
    }

    pub fn jones_a(&self) -> Vector<f64, 2> {
        self.jones_a
    }

    pub fn jones_b(&self) -> Vector<f64, 2> {
        self.jones_b
    }

    pub fn ket(&self) -> Vector<f64, 4> {
        kron_vec(&self.jones_a, &self.jones_b)
    }

    /// `⟨ab|ρ|ab⟩`, clipped at zero.
    pub fn probability(&self, rho: &Mat4<f64>) -> f64 {
        rho.expectation(&self.ket()).re.max(0.0)
    }

    /// Row of the linear forward map onto Pauli-product coefficients:
    /// `¼·S^a_k·S^b_l` with `S_0 = 1`, index `4k + l`.
    fn design_row(&self) -> [f64; 16] {
        let sa: [f64; 4] = std::array::from_fn(|k| pauli::<f64>(k).expectation(&self.jones_a).re);
        let sb: [f64; 4] = std::array::from_fn(|k| pauli::<f64>(k).expectation(&self.jones_b).re);
        std::array::from_fn(|i| 0.25 * sa[i / 4] * sb[i % 4])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountRecord {
    pub setting: usize,
    pub expected: f64,
    pub observed: u64,
}

/// Overcomplete product set `{H, V, D, A, R, L}²`.
pub fn settings_36() -> Vec<ProjectorSetting> {
    Analyzer::ALL
        .iter()
        .flat_map(|&a| Analyzer::ALL.iter().map(move |&b| ProjectorSetting::of(a, b)))
        .collect()
}

/// Minimal informationally complete set of James, Kwiat, Munro and White.
pub fn settings_16() -> Vec<ProjectorSetting> {
    use Analyzer::*;
    [
        (H, H),
        (H, V),
        (V, V),
        (V, H),
        (R, H),
        (R, V),
        (D, V),
        (D, H),
        (D, R),
        (D, D),
        (R, D),
        (H, D),
        (V, D),
        (V, L),
        (H, L),
        (R, L),
    ]
    .into_iter()
    .map(|(a, b)| ProjectorSetting::of(a, b))
    .collect()
}

/// Source PDL `γ_S = ½ ln(ratio)` along H and Werner parameter
/// `v = (2·C·cosh γ_S + 1)/3` so the filtered state has concurrence `C`.
pub fn calibrate_source(target_c: f64, target_hh_vv_ratio: f64) -> Result<SourceModel> {
    if !(target_c > 0.5 && target_c <= 1.0) {
        return Err(Error::Calibration(format!("target concurrence {target_c} outside (1/2, 1]")));
    }
    if !(target_hh_vv_ratio >= 1.0 && target_hh_vv_ratio.is_finite()) {
        return Err(Error::Calibration(format!(
            "HH/VV ratio {target_hh_vv_ratio} must be >= 1"
        )));
    }
    let gamma_s = 0.5 * target_hh_vv_ratio.ln();
    let v = (2.0 * target_c * gamma_s.cosh() + 1.0) / 3.0;
    if v > 1.0 + 1e-12 {
        return Err(Error::Calibration(format!(
            "concurrence {target_c} with ratio {target_hh_vv_ratio} needs Werner parameter {v} > 1"
        )));
    }
    let pdl = Pdl::new(gamma_s, StokesVec::h())?;
    SourceModel::new(v.min(1.0), pdl, DEFAULT_MU, DEFAULT_PULSE_RATE_HZ)
}

/// Werner state filtered by the source PDL on qubit A.
pub fn source_state(m: &SourceModel) -> Result<Outcome> {
    let w = Rho::werner(m.werner_v)?;
    apply_local(&w, &pdl_operator(&m.source_pdl), &Mat2::identity())
}

/// `ρ_HH,HH / ρ_VV,VV`
pub fn hh_vv_ratio(rho: &Rho) -> f64 {
    rho.mat()[(0, 0)].re / rho.mat()[(3, 3)].re
}

pub fn expected_coincidences(
    outcome: &Outcome,
    s: &ProjectorSetting,
    src: &SourceModel,
    det: &DetectorModel,
    pulses: u64,
) -> f64 {
    let eta2 = det.efficiency * det.efficiency;
    let signal = src.mu * eta2 * outcome.rate * s.probability(outcome.rho_out.mat());
    pulses as f64 * (signal + det.accidental_floor + det.dark_prob * det.dark_prob)
}

/// One Poisson draw per setting. Setting `i` uses stream `i` of a ChaCha8
/// generator keyed by `seed`, so records do not depend on evaluation order.
pub fn simulate_counts(
    outcome: &Outcome,
    settings: &[ProjectorSetting],
    src: &SourceModel,
    det: &DetectorModel,
    pulses: u64,
    seed: u64,
) -> Vec<CountRecord> {
    settings
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let expected = expected_coincidences(outcome, s, src, det, pulses);
            CountRecord {
                setting: i,
                expected,
                observed: poisson_draw(expected, seed, i as u64),
            }
        })
        .collect()
}

fn poisson_draw(lambda: f64, seed: u64, stream: u64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    match Poisson::new(lambda) {
        Ok(p) => p.sample(&mut rng) as u64,
        Err(_) => lambda.round() as u64,
    }
}

/// Linear inversion from observed counts; see [`reconstruct_frequencies`].
pub fn reconstruct(records: &[CountRecord], settings: &[ProjectorSetting]) -> Result<Mat4<f64>> {
    let mut freqs = vec![0.0; settings.len()];
    for r in records {
        let slot = freqs.get_mut(r.setting).ok_or_else(|| {
            Error::Tomography(format!("record for setting {} outside the set", r.setting))
        })?;
        *slot = r.observed as f64;
    }
    reconstruct_frequencies(&freqs, settings)
}

/// Least-squares fit of the 16 Pauli-product coefficients to unnormalized
/// frequencies, normalized to unit trace. The result is Hermitian but may
/// have negative eigenvalues.
pub fn reconstruct_frequencies(freqs: &[f64], settings: &[ProjectorSetting]) -> Result<Mat4<f64>> {
    if freqs.len() != settings.len() {
        return Err(Error::Tomography(format!(
            "{} frequencies for {} settings",
            freqs.len(),
            settings.len()
        )));
    }
    let mut ata = [[0.0; 16]; 16];
    let mut atb = [0.0; 16];
    for (s, &f) in settings.iter().zip(freqs) {
        let row = s.design_row();
        for i in 0..16 {
            atb[i] += row[i] * f;
            for j in 0..16 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let x = solve_normal_equations(ata, atb)?;
    if !(x[0] > 0.0) {
        return Err(Error::Tomography("no coincidences to normalize by".into()));
    }
    let mut m = Mat4::zeros();
    for k in 0..4 {
        for l in 0..4 {
            let coeff = x[4 * k + l] / x[0];
            if coeff != 0.0 {
                m = m + kron(&pauli::<f64>(k), &pauli::<f64>(l)).scale(0.25 * coeff);
            }
        }
    }
    Ok(m.hermitian_part())
}

/// Cholesky solve of `AᵀA x = Aᵀb`; a vanishing pivot means the settings do
/// not span the operator space.
fn solve_normal_equations(mut a: [[f64; 16]; 16], b: [f64; 16]) -> Result<[f64; 16]> {
    let scale = (0..16).map(|i| a[i][i]).fold(0.0, f64::max);
    for j in 0..16 {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 1e-10 * scale) {
            return Err(Error::Tomography("measurement set is not informationally complete".into()));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..16 {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    let mut y = [0.0; 16];
    for i in 0..16 {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i][k] * y[k];
        }
        y[i] = s / a[i][i];
    }
    let mut x = [0.0; 16];
    for i in (0..16).rev() {
        let mut s = y[i];
        for k in i + 1..16 {
            s -= a[k][i] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Nearest physical state: the most negative eigenvalue is set to zero and
/// its deficit spread evenly over the remaining positive eigenvalues, until
/// none is negative.
pub fn project_physical(h: &Mat4<f64>) -> Result<Rho> {
    if h.hermiticity_error() > 1e-9 {
        return domain("projection needs a Hermitian matrix");
    }
    let tr = h.trace().re;
    if (tr - 1.0).abs() > 1e-9 {
        return domain(format!("projection needs unit trace, got {tr}"));
    }
    let (mut vals, vecs) = eigh(h)?;
    clip_spectrum(&mut vals);
    Rho::new(Mat4::from_spectral(&vals, &vecs))
}

fn clip_spectrum(vals: &mut [f64; 4]) {
    loop {
        let (imin, &vmin) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("four eigenvalues");
        if vmin >= 0.0 {
            return;
        }
        vals[imin] = 0.0;
        let n = vals.iter().filter(|&&v| v > 0.0).count();
        if n == 0 {
            return;
        }
        let share = vmin / n as f64;
        for v in vals.iter_mut().filter(|v| **v > 0.0) {
            *v += share;
        }
    }
}

/// How tomography counts are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acquisition {
    /// Counts equal their expectation values.
    Exact,
    /// Poisson counts from the given seed.
    Poisson { seed: u64 },
}

/// Full measurement chain: counts on `settings`, linear inversion, physical
/// projection.
pub fn tomography(
    outcome: &Outcome,
    settings: &[ProjectorSetting],
    src: &SourceModel,
    det: &DetectorModel,
    pulses: u64,
    acq: Acquisition,
) -> Result<Rho> {
    if pulses == 0 {
        return domain("pulses per setting must be >= 1");
    }
    let freqs: Vec<f64> = match acq {
        Acquisition::Exact => settings
            .iter()
            .map(|s| expected_coincidences(outcome, s, src, det, pulses))
            .collect(),
        Acquisition::Poisson { seed } => simulate_counts(outcome, settings, src, det, pulses, seed)
            .into_iter()
            .map(|r| r.observed as f64)
            .collect(),
    };
    project_physical(&reconstruct_frequencies(&freqs, settings)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::qmath::{bell_state, concurrence, fidelity_to_pure, trace_distance, BellKind};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_state(rng: &mut impl Rng) -> Rho {
        let mut g = Mat4::<f64>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                g.0[i][j] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let m = g * g.adjoint();
        let tr = m.trace().re;
        Rho::new(m.scale(1.0 / tr)).unwrap()
    }

    fn exact_probs(rho: &Rho, settings: &[ProjectorSetting]) -> Vec<f64> {
        settings.iter().map(|s| s.probability(rho.mat())).collect()
    }

    #[test]
    fn calibration_cases() {
        let ideal = calibrate_source(1.0, 1.0).unwrap();
        assert_eq!(ideal.werner_v(), 1.0);
        assert_eq!(ideal.source_pdl().gamma(), 0.0);

        let m = calibrate_source(0.925, 1.38).unwrap();
        assert_abs_diff_eq!(m.source_pdl().gamma(), 0.161_041_749_584_556_6, epsilon = 1e-12);
        assert_abs_diff_eq!(m.werner_v(), 0.958_013_750_821_795, epsilon = 1e-12);
        assert_eq!(m.source_pdl().axis(), StokesVec::h());

        let out = source_state(&m).unwrap();
        assert_abs_diff_eq!(concurrence(&out.rho_out).unwrap(), 0.925, epsilon = 1e-9);
        assert_abs_diff_eq!(hh_vv_ratio(&out.rho_out), 1.38, epsilon = 1e-9);

        assert!(matches!(calibrate_source(0.99, 3.0), Err(Error::Calibration(_))));
        assert!(matches!(calibrate_source(0.4, 1.0), Err(Error::Calibration(_))));
        assert!(matches!(calibrate_source(0.9, 0.5), Err(Error::Calibration(_))));
    }

    #[test]
    fn ideal_source_is_phi_plus() {
        let out = source_state(&calibrate_source(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(out.rate, 1.0);
        let phi = bell_state::<f64>(BellKind::PhiPlus);
        assert!((*out.rho_out.mat() - *phi.mat()).max_abs() < 1e-15);
    }

    #[test]
    fn calibrated_fidelity_near_095() {
        let out = source_state(&calibrate_source(0.925, 1.38).unwrap()).unwrap();
        let f = fidelity_to_pure(&out.rho_out, &BellKind::PhiPlus.vector()).unwrap();
        assert!((f - 0.95).abs() <= 0.02, "fidelity {f}");
    }

    #[test]
    fn setting_sets() {
        let s36 = settings_36();
        assert_eq!(s36.len(), 36);
        assert_eq!(settings_16().len(), 16);
        for s in s36.iter().chain(settings_16().iter()) {
            assert!(ProjectorSetting::new(s.jones_a(), s.jones_b()).is_ok());
        }
        let mut sum = Mat2::<f64>::zeros();
        for a in Analyzer::ALL {
            sum = sum + Mat2::outer(&a.jones(), &a.jones());
        }
        assert!((sum - Mat2::identity().scale(3.0)).max_abs() < 1e-15);
        let bad = [c(1.0, 0.0), c(0.1, 0.0)];
        assert!(ProjectorSetting::new(bad, Analyzer::H.jones()).is_err());
    }

    #[test]
    fn expected_count_cases() {
        let phi = Outcome {
            rho_out: bell_state(BellKind::PhiPlus),
            rate: 1.0,
        };
        let src = SourceModel::ideal().with_mu(0.01).unwrap();
        let ideal = DetectorModel::ideal();
        let hv = ProjectorSetting::of(Analyzer::H, Analyzer::V);
        assert_eq!(expected_coincidences(&phi, &hv, &src, &ideal, 1_000_000), 0.0);
        let det = DetectorModel::new(0.2, 0.0, 0.0).unwrap();
        let hh = ProjectorSetting::of(Analyzer::H, Analyzer::H);
        let n = expected_coincidences(&phi, &hh, &src, &det, 1_000_000);
        assert_abs_diff_eq!(n, 200.0, epsilon = 1e-9);
        assert_eq!(expected_coincidences(&phi, &hh, &src, &det, 2_000_000), 2.0 * n);
        let dark = DetectorModel::default();
        let n = expected_coincidences(&phi, &hv, &src, &dark, 1_000_000);
        assert_abs_diff_eq!(n, 1e6 * 1.6e-9, epsilon = 1e-15);
    }

    #[test]
    fn poisson_draws() {
        let phi = Outcome {
            rho_out: bell_state(BellKind::PhiPlus),
            rate: 1.0,
        };
        let src = SourceModel::ideal();
        let det = DetectorModel::new(0.2, 0.0, 0.0).unwrap();
        let set = settings_36();
        let a = simulate_counts(&phi, &set, &src, &det, 1_000_000, 7);
        let b = simulate_counts(&phi, &set, &src, &det, 1_000_000, 7);
        assert_eq!(a, b);
        assert_ne!(a, simulate_counts(&phi, &set, &src, &det, 1_000_000, 8));
        let hv = 1;
        assert_eq!(a[hv].expected, 0.0);
        assert_eq!(a[hv].observed, 0);

        let n = 10_000u64;
        let mean = (0..n).map(|k| poisson_draw(200.0, 11, k)).sum::<u64>() as f64 / n as f64;
        assert!((199.58..=200.42).contains(&mean), "mean {mean}");
    }

    #[test]
    fn inversion_is_exact_on_both_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let rho = random_state(&mut rng);
            for set in [settings_16(), settings_36()] {
                let m = reconstruct_frequencies(&exact_probs(&rho, &set), &set).unwrap();
                assert!((m - *rho.mat()).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inversion_is_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rho = random_state(&mut rng);
        let set = settings_36();
        let f: Vec<f64> = exact_probs(&rho, &set).iter().map(|p| 3.7e4 * p).collect();
        let m = reconstruct_frequencies(&f, &set).unwrap();
        assert!((m - *rho.mat()).max_abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_set_is_rejected() {
        let set: Vec<_> = [Analyzer::H, Analyzer::V]
            .iter()
            .flat_map(|&a| [Analyzer::H, Analyzer::V].map(|b| ProjectorSetting::of(a, b)))
            .collect();
        let f = vec![1.0; set.len()];
        assert!(matches!(reconstruct_frequencies(&f, &set), Err(Error::Tomography(_))));
        assert!(reconstruct_frequencies(&[1.0], &settings_16()).is_err());
    }

    #[test]
    fn projection_cases() {
        assert_eq!(
            {
                let mut v = [0.6, 0.5, 0.0, -0.1];
                clip_spectrum(&mut v);
                v.map(|x| (x * 1e12).round() / 1e12)
            },
            [0.55, 0.45, 0.0, 0.0]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let rho = random_state(&mut rng);
        let p = project_physical(rho.mat()).unwrap();
        assert!((*p.mat() - *rho.mat()).max_abs() < 1e-12);

        let h = Mat4::from_real_diag([0.6, 0.5, 0.0, -0.1]);
        let p = project_physical(&h).unwrap();
        let want = Mat4::from_real_diag([0.55, 0.45, 0.0, 0.0]);
        assert!((*p.mat() - want).max_abs() < 1e-12);

        let h = Mat4::from_real_diag([1.2, 0.1, -0.1, -0.2]);
        let p = project_physical(&h).unwrap();
        let vals = p.eigenvalues().unwrap();
        assert!(vals.iter().all(|&v| v >= -1e-15));
        assert_abs_diff_eq!(p.mat().trace().re, 1.0, epsilon = 1e-12);
        assert!(project_physical(&Mat4::from_real_diag([0.5, 0.5, 0.5, 0.0])).is_err());
    }

    #[test]
    fn noiseless_chain_reproduces_source() {
        let src = calibrate_source(0.925, 1.38).unwrap();
        let out = source_state(&src).unwrap();
        let det = DetectorModel::new(0.2, 0.0, 0.0).unwrap();
        for set in [settings_16(), settings_36()] {
            let rho = tomography(&out, &set, &src, &det, DEFAULT_PULSES, Acquisition::Exact).unwrap();
            assert!(trace_distance(rho.mat(), out.rho_out.mat()).unwrap() <= 1e-8);
        }
    }

    fn median_trace_distance(mu: f64, seeds: u64) -> f64 {
        let src = calibrate_source(0.925, 1.38).unwrap().with_mu(mu).unwrap();
        let out = source_state(&src).unwrap();
        let det = DetectorModel::default();
        let set = settings_36();
        let mut d: Vec<f64> = (0..seeds)
            .map(|seed| {
                let rho =
                    tomography(&out, &set, &src, &det, DEFAULT_PULSES, Acquisition::Poisson { seed }).unwrap();
                trace_distance(rho.mat(), out.rho_out.mat()).unwrap()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    }

    #[test]
    fn poisson_tomography_is_close() {
        // ~1000 counts in the brightest settings
        assert!(median_trace_distance(DEFAULT_MU, 100) <= 0.05);
        // ~200 counts in the brightest settings
        let m = median_trace_distance(0.01, 100);
        assert!(m <= 0.06, "median trace distance {m}");
    }
}
