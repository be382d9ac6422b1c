//! The synthetic drifting-subspace study: generate (or ingest) a dataset,
//! calibrate the certificate constants against the known truth, check
//! feasibility, run the tracker per step size, and emit plot-ready CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use great_core::certs::{
    assumption4_check, delta_bound, optimize_step_size, signal_bounds, theorem1_bound,
    ultimate_bound, Assumption4Report, CertificateParams, StepSizeObjective,
};
use great_core::grassmann::{chordal_distance, orthonormalize, Subspace};
use great_core::great::{Tracker, TrackerConfig};
use great_core::simgen::{
    geodesic_sequence, perturbed_initial_estimate, random_tangent, GeodesicSpec, NoisySampleSpec,
    SampleGenerator,
};

use crate::config::{StepSizeSpec, SyntheticConfig};
use crate::csvio::{self, CsvWriter};

pub fn run_synthetic(cfg: &SyntheticConfig, seed: u64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    if cfg.horizon < cfg.window {
        bail!("horizon {} shorter than window {}", cfg.horizon, cfg.window);
    }

    // truth and samples, generated or ingested
    let (truth, samples) = match &cfg.dataset {
        None => generate_dataset(cfg, seed)?,
        Some(path) => load_dataset(cfg, path)?,
    };
    if cfg.emit_dataset {
        csvio::write_samples(&out.join("dataset.csv"), &samples)?;
        let bases: Vec<DMatrix<f64>> = truth.iter().map(|s| s.basis().clone()).collect();
        csvio::write_bases(&out.join("truth.csv"), &bases)?;
    }

    // calibrate the certificate constants tightly over the tracked range
    let t0 = cfg.window - 1;
    let mut sigma_min = f64::INFINITY;
    let mut sigma_max: f64 = 0.0;
    let mut delta_sup: f64 = 0.0;
    let probe_params = CertificateParams {
        noise_bound: cfg.noise,
        drift_bound: cfg.drift,
        sigma_min: 1.0,
        sigma_max: 1.0,
        tube_radius: cfg.tube_radius,
        step_size: 1.0,
        window_len: cfg.window,
        inner_iters: cfg.inner_iters,
        dim: cfg.dim,
    };
    for (t, truth_t) in truth
        .iter()
        .enumerate()
        .take(cfg.horizon + 1)
        .skip(cfg.window)
    {
        let data = window_matrix(&samples, t, cfg.window);
        let (lo, hi) = signal_bounds(&data, truth_t)?;
        sigma_min = sigma_min.min(lo);
        sigma_max = sigma_max.max(hi);
        delta_sup = delta_sup.max(delta_bound(&data, &probe_params)?);
    }
    let base_params = CertificateParams {
        sigma_min,
        sigma_max,
        ..probe_params
    };

    // resolve the requested step sizes
    let alphas: Vec<(String, f64)> = cfg
        .step_sizes
        .iter()
        .map(|spec| {
            Ok((
                spec.label(),
                resolve_step_size(spec, delta_sup, &base_params)?,
            ))
        })
        .collect::<Result<_>>()?;

    // feasibility gate: no Theorem-1 curves unless the check passes
    let mut reports = Vec::new();
    for (label, alpha) in &alphas {
        let report = assumption4_check(&base_params.with_step_size(*alpha), delta_sup)?;
        reports.push((label.clone(), *alpha, report));
    }
    write_assumption_report(&out.join("assumption_report.csv"), &reports)?;
    if let Some((label, _, report)) = reports.iter().find(|(_, _, r)| !r.holds) {
        bail!(
            great_core::Error::AssumptionViolated {
                slack: report.slack
            }
            .to_string()
                + &format!(" (step size {label}; report in assumption_report.csv)")
        );
    }

    // initial estimate at t0, perturbed from the first tracked truth
    let initial = perturbed_initial_estimate(&truth[t0 + 1], cfg.init_offset, seed)?;
    let initial_dist_sq = chordal_distance(&initial, &truth[t0])?.powi(2);

    write_manifest(
        &out.join("manifest.toml"),
        cfg,
        seed,
        sigma_min,
        sigma_max,
        delta_sup,
        initial_dist_sq,
        &alphas,
    )?;

    // one tracker run per step size, in parallel; each writes its own file
    alphas
        .par_iter()
        .map(|(label, alpha)| {
            run_one(
                cfg,
                &truth,
                &samples,
                &initial,
                initial_dist_sq,
                delta_sup,
                &base_params.with_step_size(*alpha),
                label,
                out,
            )
        })
        .collect::<Result<Vec<()>>>()?;

    // baseline trackers on the same dataset, distance curves only
    for kind in &cfg.baselines {
        run_baseline(cfg, &truth, &samples, &initial, kind, alphas[0].1, out)?;
    }

    Ok(())
}

/// Runs a baseline tracker over the same stream: warmed up on the
/// pre-window samples, scored on the tracked range.
fn run_baseline(
    cfg: &SyntheticConfig,
    truth: &[Subspace],
    samples: &[DVector<f64>],
    initial: &Subspace,
    kind: &str,
    grouse_alpha: f64,
    out: &Path,
) -> Result<()> {
    use great_core::baselines::{grouse_step, PastState};
    enum Baseline {
        Grouse(Subspace, f64),
        Past(PastState),
    }
    let mut tracker = match kind {
        "grouse" => Baseline::Grouse(initial.clone(), grouse_alpha),
        "past" => Baseline::Past(PastState::new(initial, cfg.past_forget)?),
        other => bail!("unknown baseline {other:?} (use grouse or past)"),
    };
    let mut csv = CsvWriter::create(
        &out.join(format!("baseline_{kind}.csv")),
        &["t", "d2_measured"],
    )?;
    for t in 1..=cfg.horizon {
        let sample = &samples[t - 1];
        let estimate = match &mut tracker {
            Baseline::Grouse(est, alpha) => {
                *est = grouse_step(est, sample, *alpha)?;
                est.clone()
            }
            Baseline::Past(state) => {
                state.step(sample)?;
                state.subspace()?
            }
        };
        if t < cfg.window {
            continue;
        }
        let measured = chordal_distance(&estimate, &truth[t])?;
        csv.row(&[t.to_string(), csvio::fmt(measured)])?;
    }
    csv.finish()
}

/// Resolves "cvg" / "ub" / "mid" / literal step sizes.
pub fn resolve_step_size(
    spec: &StepSizeSpec,
    delta_sup: f64,
    params: &CertificateParams,
) -> Result<f64> {
    let cvg = || -> Result<f64> {
        Ok(optimize_step_size(StepSizeObjective::MaxRate, delta_sup, params)?.alpha)
    };
    let ub = || -> Result<f64> {
        Ok(optimize_step_size(StepSizeObjective::MinUltimate, delta_sup, params)?.alpha)
    };
    match spec {
        StepSizeSpec::Literal(v) if *v > 0.0 => Ok(*v),
        StepSizeSpec::Literal(v) => Err(anyhow!("step size must be positive, got {v}")),
        StepSizeSpec::Named(name) => match name.as_str() {
            "cvg" => cvg(),
            "ub" => ub(),
            "mid" => Ok(0.5 * (cvg()? + ub()?)),
            other => other.parse::<f64>().map_err(|_| {
                anyhow!("unknown step size {other:?} (use cvg, ub, mid, or a number)")
            }),
        },
    }
}

fn generate_dataset(
    cfg: &SyntheticConfig,
    seed: u64,
) -> Result<(Vec<Subspace>, Vec<DVector<f64>>)> {
    // start from the first d coordinate directions
    let start = orthonormalize(
        &DMatrix::<f64>::identity(cfg.ambient, cfg.ambient)
            .columns(0, cfg.dim)
            .into_owned(),
    )?;
    let spec = GeodesicSpec {
        direction: random_tangent(&start, seed),
        start,
        per_step_distance: cfg.drift,
        steps: cfg.horizon,
    };
    let truth = geodesic_sequence(&spec)?;
    let mut generator = SampleGenerator::new(&NoisySampleSpec {
        noise_norm: cfg.noise,
        seed,
    })?;
    // sample t (1-based) comes from truth[t]
    let samples: Vec<DVector<f64>> = truth[1..].iter().map(|s| generator.draw(s)).collect();
    Ok((truth, samples))
}

fn load_dataset(
    cfg: &SyntheticConfig,
    dataset: &Path,
) -> Result<(Vec<Subspace>, Vec<DVector<f64>>)> {
    let samples = csvio::read_samples(dataset)?;
    let truth_path = dataset
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join("truth.csv");
    let bases = csvio::read_bases(&truth_path, cfg.ambient, cfg.dim)
        .with_context(|| format!("truth bases expected at {}", truth_path.display()))?;
    if bases.len() != samples.len() + 1 {
        bail!(
            "need one truth basis per sample plus the start ({} samples, {} bases)",
            samples.len(),
            bases.len()
        );
    }
    if samples.len() < cfg.horizon {
        bail!(
            "dataset holds {} samples, horizon is {}",
            samples.len(),
            cfg.horizon
        );
    }
    let truth = bases
        .into_iter()
        .map(Subspace::new)
        .collect::<great_core::Result<Vec<_>>>()?;
    Ok((truth, samples))
}

/// Data window ending at sample time `t` (1-based), oldest column first.
fn window_matrix(samples: &[DVector<f64>], t: usize, window: usize) -> DMatrix<f64> {
    let n = samples[0].len();
    let mut m = DMatrix::zeros(n, window);
    for (j, s) in samples[t - window..t].iter().enumerate() {
        m.set_column(j, s);
    }
    m
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    cfg: &SyntheticConfig,
    truth: &[Subspace],
    samples: &[DVector<f64>],
    initial: &Subspace,
    initial_dist_sq: f64,
    delta_sup: f64,
    params: &CertificateParams,
    label: &str,
    out: &Path,
) -> Result<()> {
    let config = TrackerConfig::fixed(
        cfg.ambient,
        cfg.dim,
        cfg.window,
        cfg.inner_iters,
        params.step_size,
    );
    let mut tracker = Tracker::new(config, initial.clone())?;
    let ultimate = ultimate_bound(delta_sup, params)?;
    let mut csv = CsvWriter::create(
        &out.join(format!("run_{label}.csv")),
        &["t", "d2_measured", "bound_eq11", "bound_eq12"],
    )?;
    let t0 = cfg.window - 1;
    for t in 1..=cfg.horizon {
        tracker.step(&samples[t - 1])?;
        if t < cfg.window {
            continue;
        }
        let measured = chordal_distance(tracker.estimate(), &truth[t])?;
        let steps = (t - t0) as u64;
        let bound = theorem1_bound(steps, initial_dist_sq, delta_sup, params)?;
        csv.row(&[
            t.to_string(),
            csvio::fmt(measured),
            csvio::fmt(bound.sqrt()),
            csvio::fmt(ultimate.sqrt()),
        ])?;
    }
    csv.finish()
}

fn write_assumption_report(
    path: &Path,
    reports: &[(String, f64, Assumption4Report)],
) -> Result<()> {
    let mut csv = CsvWriter::create(
        path,
        &["step_size_label", "alpha", "rho_tilde", "holds", "slack"],
    )?;
    for (label, alpha, report) in reports {
        csv.row(&[
            label.clone(),
            csvio::fmt(*alpha),
            csvio::fmt(report.rho_tilde),
            report.holds.to_string(),
            csvio::fmt(report.slack),
        ])?;
    }
    csv.finish()
}

#[allow(clippy::too_many_arguments)]
fn write_manifest(
    path: &Path,
    cfg: &SyntheticConfig,
    seed: u64,
    sigma_min: f64,
    sigma_max: f64,
    delta_sup: f64,
    initial_dist_sq: f64,
    alphas: &[(String, f64)],
) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# dataset + calibration record")?;
    writeln!(out, "ambient = {}", cfg.ambient)?;
    writeln!(out, "dim = {}", cfg.dim)?;
    writeln!(out, "drift = {:e}", cfg.drift)?;
    writeln!(out, "noise = {:e}", cfg.noise)?;
    writeln!(out, "window = {}", cfg.window)?;
    writeln!(out, "inner_iters = {}", cfg.inner_iters)?;
    writeln!(out, "tube_radius = {:e}", cfg.tube_radius)?;
    writeln!(out, "horizon = {}", cfg.horizon)?;
    writeln!(out, "seed = {seed}")?;
    writeln!(out, "drift_transport = \"reprojected\"")?;
    writeln!(out, "sigma_min = {sigma_min:e}")?;
    writeln!(out, "sigma_max = {sigma_max:e}")?;
    writeln!(out, "delta_sup = {delta_sup:e}")?;
    writeln!(out, "initial_dist_sq = {initial_dist_sq:e}")?;
    for (label, alpha) in alphas {
        writeln!(out, "alpha_{label} = {alpha:e}")?;
    }
    out.flush()?;
    Ok(())
}
