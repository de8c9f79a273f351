//! Search for the channel-B PDL element that maximizes the post-selected
//! concurrence, and the single-qubit entropy used as a feedback signal.

use rayon::prelude::*;

use crate::channels::{
    apply_local, pdl_operator, pmd_dephase, ChannelOutcome, PdlElement, PmdElement, StokesVec,
};
use crate::error::{domain, Error, Result};
use crate::instrument::{
    self, settings_36, Acquisition, DetectorModel, ProjectorSetting, SourceModel, DEFAULT_PULSES,
};
use crate::qmath::{concurrence, linear_entropy, reduced_qubit, DensityMatrix4, Qubit};

type Rho = DensityMatrix4<f64>;
type Pdl = PdlElement<f64>;
type Stokes = StokesVec<f64>;

/// Everything that acts on photon A before the compensator: optional
/// dephasing followed by the aggregate PDL.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelA {
    pub pdl: Pdl,
    pub pmd: Option<PmdElement<f64>>,
}

impl ChannelA {
    pub fn pdl_only(pdl: Pdl) -> Self {
        Self { pdl, pmd: None }
    }

    /// Channel A followed by `element_b` on photon B.
    pub fn transmit(&self, base: &Rho, element_b: &Pdl) -> Result<ChannelOutcome<f64>> {
        let rho = match &self.pmd {
            Some(e) => pmd_dephase(base, e, Qubit::A),
            None => *base,
        };
        apply_local(&rho, &pdl_operator(&self.pdl), &pdl_operator(element_b))
    }
}

/// Tomography setup used by the noisy objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub source: SourceModel,
    pub detector: DetectorModel,
    pub pulses: u64,
    pub settings: Vec<ProjectorSetting>,
}

impl Default for Measurement {
    fn default() -> Self {
        Self {
            source: SourceModel::ideal(),
            detector: DetectorModel::default(),
            pulses: DEFAULT_PULSES,
            settings: settings_36(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub sphere_points: usize,
    /// Candidate magnitudes in nepers.
    pub gamma_grid: Vec<f64>,
    /// Maximum coordinate-descent passes.
    pub refine_iters: usize,
    pub refine_tol: f64,
    pub noisy: bool,
    pub seed: u64,
    pub measurement: Measurement,
}

impl SearchConfig {
    /// 128 orientations and seven magnitudes spanning `γ_A ± 30%`.
    pub fn for_gamma(gamma_a: f64) -> Self {
        Self {
            sphere_points: 128,
            gamma_grid: gamma_grid(gamma_a, 0.3, 7),
            refine_iters: 200,
            refine_tol: 1e-6,
            noisy: false,
            seed: 0,
            measurement: Measurement::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sphere_points < 32 {
            return domain(format!("need at least 32 sphere points, got {}", self.sphere_points));
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return domain("magnitude grid must be non-empty with finite values >= 0");
        }
        if !(self.refine_tol > 0.0) {
            return domain("refinement tolerance must be > 0");
        }
        if self.noisy && (self.measurement.pulses == 0 || self.measurement.settings.is_empty()) {
            return domain("noisy search needs pulses >= 1 and a measurement set");
        }
        Ok(())
    }
}

/// `steps` magnitudes evenly spaced over `γ·(1 ± spread)`, clipped at zero
/// and deduplicated.
pub fn gamma_grid(gamma: f64, spread: f64, steps: usize) -> Vec<f64> {
    let lo = (gamma * (1.0 - spread)).max(0.0);
    let hi = gamma * (1.0 + spread);
    let mut g: Vec<f64> = match steps {
        0 => vec![],
        1 => vec![gamma],
        n => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    };
    g.dedup();
    g
}

/// `n` nearly uniform unit vectors on the golden-angle spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<Stokes> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Stokes::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub element: Pdl,
    pub concurrence: f64,
    pub rate: f64,
    pub entropy_a: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub best: Pdl,
    pub best_concurrence: f64,
    /// Grid candidates in index order, then refinement steps in the order
    /// they were evaluated.
    pub evaluations: Vec<Evaluation>,
}

impl SearchResult {
    pub fn best_evaluation(&self) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .find(|e| e.element == self.best && e.concurrence == self.best_concurrence)
    }
}

/// `S_L` of photon A's reduced state.
pub fn entropy_feedback(rho: &Rho) -> f64 {
    linear_entropy(&reduced_qubit(rho, Qubit::A))
}

struct Objective<'a> {
    channel: &'a ChannelA,
    base: &'a Rho,
    cfg: &'a SearchConfig,
}

impl Objective<'_> {
    /// Extinct candidates score zero. `index` keys the tomography seed.
    fn eval(&self, element: Pdl, index: u64) -> Result<Evaluation> {
        let out = match self.channel.transmit(self.base, &element) {
            Ok(o) => o,
            Err(Error::Extinction { rate }) => {
                return Ok(Evaluation {
                    element,
                    concurrence: 0.0,
                    rate,
                    entropy_a: 0.0,
                })
            }
            Err(e) => return Err(e),
        };
        let rho = if self.cfg.noisy {
            let m = &self.cfg.measurement;
            let seed = derive_seed(self.cfg.seed, index);
            instrument::tomography(
                &out,
                &m.settings,
                &m.source,
                &m.detector,
                m.pulses,
                Acquisition::Poisson { seed },
            )?
        } else {
            out.rho_out
        };
        Ok(Evaluation {
            element,
            concurrence: concurrence(&rho)?,
            rate: out.rate,
            entropy_a: entropy_feedback(&rho),
        })
    }
}

/// SplitMix64 finalizer applied to `seed + index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Grid search over `sphere_points × gamma_grid`, then coordinate descent on
/// the polar angle, azimuth and magnitude with step halving.
pub fn optimize_compensator(channel: &ChannelA, base: &Rho, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let obj = Objective { channel, base, cfg };
    let axes = fibonacci_sphere(cfg.sphere_points);
    let candidates: Vec<Pdl> = axes
        .iter()
        .flat_map(|a| cfg.gamma_grid.iter().map(move |&g| Pdl::new(g, *a)))
        .collect::<Result<_>>()?;
    let mut evaluations: Vec<Evaluation> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, e)| obj.eval(*e, i as u64))
        .collect::<Result<_>>()?;

    let mut best = evaluations[0];
    for e in &evaluations[1..] {
        if e.concurrence > best.concurrence {
            best = *e;
        }
    }

    let spacing = (4.0 * std::f64::consts::PI / cfg.sphere_points as f64).sqrt();
    let gamma_span = cfg.gamma_grid.iter().cloned().fold(0.0, f64::max);
    let gamma_step = if cfg.gamma_grid.len() > 1 {
        gamma_span / (cfg.gamma_grid.len() - 1) as f64
    } else {
        gamma_span.max(0.05) * 0.25
    };
    let (theta, phi) = best.element.axis().angles();
    let mut x = [theta, phi, best.element.gamma()];
    let mut steps = [0.5 * spacing, 0.5 * spacing, 0.5 * gamma_step];
    let mut next_index = evaluations.len() as u64;

    for _ in 0..cfg.refine_iters {
        let start = best.concurrence;
        let mut moved = false;
        for k in 0..3 {
            for dir in [1.0, -1.0] {
                let mut y = x;
                y[k] += dir * steps[k];
                if k == 2 && y[2] < 0.0 {
                    y[2] = 0.0;
                }
                if y == x {
                    continue;
                }
                let e = obj.eval(Pdl::new(y[2], Stokes::from_angles(y[0], y[1]))?, next_index)?;
                next_index += 1;
                evaluations.push(e);
                if e.concurrence > best.concurrence {
                    best = e;
                    x = y;
                    moved = true;
                    break;
                }
            }
        }
        if moved {
            if best.concurrence - start < cfg.refine_tol {
                break;
            }
        } else {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            if steps.iter().all(|s| *s < 1e-9) {
                break;
            }
        }
    }

    Ok(SearchResult {
        best: best.element,
        best_concurrence: best.concurrence,
        evaluations,
    })
}

/// Evaluates a fixed-magnitude compensator at each orientation.
pub fn orientation_sweep(
    channel: &ChannelA,
    base: &Rho,
    gamma_b: f64,
    axes: &[Stokes],
) -> Result<Vec<Evaluation>> {
    let cfg = SearchConfig::for_gamma(gamma_b);
    let obj = Objective {
        channel,
        base,
        cfg: &cfg,
    };
    axes.par_iter()
        .enumerate()
        .map(|(i, a)| obj.eval(Pdl::new(gamma_b, *a)?, i as u64))
        .collect()
}
