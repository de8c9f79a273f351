//! The experiment commands. Each returns its CSV text plus companion files;
//! nothing here touches the file system.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use pdlq::channels::{apply_local, concat_pdl, gamma_from_db, pdl_operator, pmd_dephase};
use pdlq::compensation::{
    derive_seed, entropy_feedback as feedback, fibonacci_sphere, optimize_compensator, ChannelA, SearchConfig,
};
use pdlq::instrument::{hh_vv_ratio, settings_36, source_state, tomography, Acquisition};
use pdlq::qmath::{
    bell_state, concurrence, correlation_of, fidelity_to_pure, purity, reduced_qubit, BellKind, Qubit,
};
use pdlq::theory::kappa;
use pdlq::verify::{run_all, VerifyOptions};
use pdlq::{Correlation, DensityMatrix, Mat2f, Outcome, Pdl, Pmd, Stokes};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::table::{fmt_num, Cell, Table};

/// Primary CSV and named companion files.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub primary: String,
    pub companions: Vec<(&'static str, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
enum CommandId {
    B2b = 1,
    SweepPdl = 2,
    Compensate = 3,
    Tradeoff = 4,
    EntropyFeedback = 5,
}

fn row_seed(cfg: &RunConfig, cmd: CommandId, row: u64) -> u64 {
    derive_seed(derive_seed(cfg.seed, cmd as u64), row)
}

/// The transmitted state itself, or its tomographic estimate in noisy mode.
fn observe(cfg: &RunConfig, out: &Outcome, seed: u64) -> Result<DensityMatrix> {
    if !cfg.noisy {
        return Ok(out.rho_out);
    }
    let src = cfg.source()?;
    let det = cfg.detector()?;
    Ok(tomography(
        out,
        &settings_36(),
        &src,
        &det,
        cfg.pulses,
        Acquisition::Poisson { seed },
    )?)
}

fn check(cfg: &RunConfig, row: usize, what: &str, got: f64, want: f64, tol: f64) -> Result<()> {
    if !cfg.noisy && !((got - want).abs() <= tol) {
        bail!("row {row}: {what} is {got}, closed form gives {want}");
    }
    Ok(())
}

fn source_pdl(cfg: &RunConfig) -> Result<Pdl> {
    Ok(cfg.source()?.source_pdl())
}

fn phi_plus() -> DensityMatrix {
    bell_state(BellKind::PhiPlus)
}

/// Channel A with optional dephasing along H.
fn channel_a(pdl: Pdl, pmd_q: f64) -> Result<ChannelA> {
    let pmd = if pmd_q > 0.0 {
        Some(Pmd::new(pmd_q, Stokes::h())?)
    } else {
        None
    };
    Ok(ChannelA { pdl, pmd })
}

/// Concurrence scale for a Bell-state simulation: the measured baseline when
/// the source noise is not modeled explicitly, 1 when dephasing sets it.
fn concurrence_scale(cfg: &RunConfig, pmd_q: f64) -> f64 {
    if pmd_q > 0.0 {
        1.0
    } else {
        cfg.c_b2b
    }
}

fn dephased_base(pmd_q: f64) -> Result<DensityMatrix> {
    let base = phi_plus();
    Ok(match pmd_q > 0.0 {
        true => pmd_dephase(&base, &Pmd::new(pmd_q, Stokes::h())?, Qubit::A),
        false => base,
    })
}

/// Calibrated back-to-back state as a 4×4 matrix listing plus metrics.
pub fn b2b(cfg: &RunConfig) -> Result<Report> {
    let src = cfg.source()?;
    let out = source_state(&src)?;
    let rho = observe(cfg, &out, row_seed(cfg, CommandId::B2b, 0))?;
    let mut t = Table::new(&["i", "j", "re", "im"]);
    for i in 0..4 {
        for j in 0..4 {
            let z = rho.mat()[(i, j)];
            t.push(vec![i.into(), j.into(), z.re.into(), z.im.into()]);
        }
    }
    let metrics = [
        ("concurrence", concurrence(&rho)?),
        ("purity", purity(&rho)),
        ("fidelity", fidelity_to_pure(&rho, &BellKind::PhiPlus.vector())?),
        ("hh_vv_ratio", hh_vv_ratio(&rho)),
    ];
    let metrics: String = metrics.iter().map(|(k, v)| format!("{k}={}\n", fmt_num(*v))).collect();
    Ok(Report {
        primary: t.to_csv(),
        companions: vec![("metrics.txt", metrics)],
    })
}

/// Emulator PDL over a lattice of orientations, on top of the source PDL.
/// The source is a Werner state whose concurrence is the measured baseline,
/// so every row follows `C = c_b2b / cosh γ_agg`.
pub fn sweep_pdl(cfg: &RunConfig, pdl_db: &[f64], orientations: usize) -> Result<Report> {
    if orientations == 0 {
        bail!("need at least one orientation");
    }
    if let Some(bad) = pdl_db.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        bail!("PDL magnitude {bad} dB must be >= 0");
    }
    let v = (2.0 * cfg.c_b2b + 1.0) / 3.0;
    let base = DensityMatrix::werner(v)?;
    let src_pdl = source_pdl(cfg)?;
    let t_phi = Correlation::of_bell(BellKind::PhiPlus);
    let axes = fibonacci_sphere(orientations);
    let jobs: Vec<(f64, Stokes)> = pdl_db
        .iter()
        .flat_map(|&db| axes.iter().map(move |a| (db, *a)))
        .collect();
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(row, &(db, axis))| -> Result<Vec<Cell>> {
            let emu = Pdl::from_db(db, axis)?;
            let agg = concat_pdl(&src_pdl, &emu)?;
            let out = apply_local(&base, &pdl_operator(&agg), &Mat2f::identity())?;
            let rho = observe(cfg, &out, row_seed(cfg, CommandId::SweepPdl, row as u64))?;
            let c = concurrence(&rho)?;
            check(cfg, row, "concurrence", c, cfg.c_b2b / agg.gamma().cosh(), 1e-6)?;
            let k = kappa(&t_phi, &src_pdl.axis(), &axis)?;
            Ok(vec![
                db.into(),
                axis.s1.into(),
                axis.s2.into(),
                axis.s3.into(),
                agg.db().into(),
                k.value().into(),
                c.into(),
                purity(&rho).into(),
                out.rate.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "pdl_db_emulator",
        "ax1",
        "ax2",
        "ax3",
        "aggregate_pdl_db",
        "kappa",
        "concurrence",
        "purity",
        "rate",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Report {
        primary: t.to_csv(),
        companions: vec![],
    })
}

/// `steps` angles evenly spaced over `[0, π]`.
pub fn theta_grid(steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![0.0],
        n => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Emulator at angle `θ` to the source PDL; the best channel-B element is
/// found by search for each angle.
pub fn compensate(cfg: &RunConfig, pdl_db: f64, thetas: &[f64], pmd_q: f64) -> Result<Report> {
    let src_pdl = source_pdl(cfg)?;
    let scale = concurrence_scale(cfg, pmd_q);
    let base = phi_plus();
    let c_base = concurrence(&dephased_base(pmd_q)?)?;
    let measurement = cfg.measurement()?;
    let rows = thetas
        .par_iter()
        .enumerate()
        .map(|(row, &theta)| -> Result<Vec<Cell>> {
            let emu = Pdl::from_db(pdl_db, Stokes::from_angles(theta, 0.0))?;
            let agg = concat_pdl(&src_pdl, &emu)?;
            let ch = channel_a(agg, pmd_q)?;
            let seed = row_seed(cfg, CommandId::Compensate, row as u64);

            let unc = ch.transmit(&base, &Pdl::zero())?;
            let c_unc = concurrence(&observe(cfg, &unc, derive_seed(seed, u64::MAX))?)?;
            check(cfg, row, "uncompensated rate x concurrence", unc.rate * c_unc, (-agg.gamma()).exp() * c_base, 1e-9)?;

            let mut search = SearchConfig::for_gamma(agg.gamma());
            search.noisy = cfg.noisy;
            search.seed = seed;
            search.measurement = measurement.clone();
            let best = optimize_compensator(&ch, &base, &search)?;
            let comp = ch.transmit(&base, &best.best)?;
            let want = (-(agg.gamma() + best.best.gamma())).exp() * c_base;
            check(cfg, row, "compensated rate x concurrence", comp.rate * best.best_concurrence, want, 1e-9)?;

            let ax = best.best.axis();
            Ok(vec![
                theta.into(),
                agg.db().into(),
                (scale * c_unc).into(),
                (scale * best.best_concurrence).into(),
                best.best.db().into(),
                ax.s1.into(),
                ax.s2.into(),
                ax.s3.into(),
                unc.rate.into(),
                comp.rate.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "theta",
        "aggregate_pdl_db",
        "c_uncompensated",
        "c_compensated",
        "gammaB_db",
        "axB1",
        "axB2",
        "axB3",
        "rate_uncomp",
        "rate_comp",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(Report {
        primary: t.to_csv(),
        companions: vec![],
    })
}

struct SweepRow {
    axis: Stokes,
    kappa: f64,
    concurrence: f64,
    rate: f64,
    entropy: f64,
    rho: DensityMatrix,
}

/// Channel-A PDL along H of `pdl_db`, channel-B element of equal magnitude
/// swept over the orientation lattice.
fn orientation_rows(
    cfg: &RunConfig,
    cmd: CommandId,
    pdl_db: f64,
    orientations: usize,
    pmd_q: f64,
) -> Result<Vec<SweepRow>> {
    if orientations == 0 {
        bail!("need at least one orientation");
    }
    let gamma = gamma_from_db(pdl_db)?;
    let ch = channel_a(Pdl::new(gamma, Stokes::h())?, pmd_q)?;
    let base = phi_plus();
    let t = correlation_of(&dephased_base(pmd_q)?);
    fibonacci_sphere(orientations)
        .par_iter()
        .enumerate()
        .map(|(row, axis)| {
            let out = ch.transmit(&base, &Pdl::new(gamma, *axis)?)?;
            let rho = observe(cfg, &out, row_seed(cfg, cmd, row as u64))?;
            Ok(SweepRow {
                axis: *axis,
                kappa: kappa(&t, &Stokes::h(), axis)?.value(),
                concurrence: concurrence(&rho)?,
                rate: out.rate,
                entropy: feedback(&rho),
                rho,
            })
        })
        .collect()
}

/// Concurrence and rate normalized by the same channel without PDL.
pub fn tradeoff(cfg: &RunConfig, pdl_db: f64, orientations: usize, pmd_q: f64) -> Result<Report> {
    let rows = orientation_rows(cfg, CommandId::Tradeoff, pdl_db, orientations, pmd_q)?;
    let gamma = gamma_from_db(pdl_db)?;
    let reference = channel_a(Pdl::zero(), pmd_q)?.transmit(&phi_plus(), &Pdl::zero())?;
    let ref_seed = row_seed(cfg, CommandId::Tradeoff, orientations as u64);
    let c_ref = concurrence(&observe(cfg, &reference, ref_seed)?)?;
    if !(c_ref > 0.0) {
        bail!("reference state has no entanglement to normalize by");
    }
    let mut t = Table::new(&["kappa", "concurrence_norm", "rate_norm", "avg_entanglement"]);
    for (i, r) in rows.iter().enumerate() {
        let c = r.concurrence / c_ref;
        let rate = r.rate / reference.rate;
        check(cfg, i, "average entanglement", c * rate, (-2.0 * gamma).exp(), 1e-9)?;
        t.push(vec![r.kappa.into(), c.into(), rate.into(), (c * rate).into()]);
    }
    Ok(Report {
        primary: t.to_csv(),
        companions: vec![],
    })
}

/// Linear entropy of photon A against concurrence over compensator
/// orientations, with the reduced states at the extreme and median rows.
pub fn entropy_feedback(cfg: &RunConfig, pdl_db: f64, orientations: usize, pmd_q: f64) -> Result<Report> {
    let rows = orientation_rows(cfg, CommandId::EntropyFeedback, pdl_db, orientations, pmd_q)?;
    let scale = concurrence_scale(cfg, pmd_q);
    let gamma = gamma_from_db(pdl_db)?;
    let c_base = concurrence(&dephased_base(pmd_q)?)?;
    let mut t = Table::new(&["s_linear_A", "concurrence", "kappa", "axB1", "axB2", "axB3"]);
    for (i, r) in rows.iter().enumerate() {
        check(cfg, i, "rate x concurrence", r.rate * r.concurrence, (-2.0 * gamma).exp() * c_base, 1e-9)?;
        t.push(vec![
            r.entropy.into(),
            (scale * r.concurrence).into(),
            r.kappa.into(),
            r.axis.s1.into(),
            r.axis.s2.into(),
            r.axis.s3.into(),
        ]);
    }

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].entropy.total_cmp(&rows[b].entropy).then(a.cmp(&b)));
    let picks = [
        ("min", order[0]),
        ("median", order[order.len() / 2]),
        ("max", order[order.len() - 1]),
    ];
    let mut red = Table::new(&["label", "row", "s_linear_A", "i", "j", "re", "im"]);
    for (label, row) in picks {
        let q = reduced_qubit(&rows[row].rho, Qubit::A);
        for i in 0..2 {
            for j in 0..2 {
                let z = q.mat()[(i, j)];
                red.push(vec![
                    Cell::Text(label),
                    row.into(),
                    rows[row].entropy.into(),
                    i.into(),
                    j.into(),
                    z.re.into(),
                    z.im.into(),
                ]);
            }
        }
    }
    Ok(Report {
        primary: t.to_csv(),
        companions: vec![("reduced.csv", red.to_csv())],
    })
}

/// One line per invariant suite; the flag is false if any suite failed.
pub fn verify(cfg: &RunConfig, cases: usize) -> Result<(String, bool)> {
    let opts = VerifyOptions {
        seed: cfg.seed,
        cases,
        ..Default::default()
    };
    let reports = run_all(&opts);
    let mut text = String::new();
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        text.push_str(&format!(
            "{status} {} max_error={:e} tol={:e} cases={} time_ms={:.1}",
            r.name,
            r.max_error,
            r.tolerance,
            r.cases,
            r.elapsed.as_secs_f64() * 1e3
        ));
        if let Some(f) = &r.failure {
            text.push_str(&format!(" error=\"{f}\""));
        }
        text.push('\n');
    }
    let ok = reports.iter().all(|r| r.passed());
    Ok((text, ok))
}

/// Parses `a,b,c` into numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().with_context(|| format!("bad number `{x}`")))
        .collect()
}
