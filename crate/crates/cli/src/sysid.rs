//! Online identification studies: track the restricted behavior of a plant
//! from streaming input/output data, read predictions off the estimate, and
//! score trackers by relative prediction error.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use great_core::baselines::{grouse_step, PastState};
use great_core::behavior::{
    predictor_from_subspace, relative_prediction_error, stack_sample, LtvSystem,
};
use great_core::grassmann::Subspace;
use great_core::great::{initialize, StepRule, Tracker, TrackerConfig};
use great_core::simgen::{stream_rng, streams};

use crate::config::{SysidConfig, ValidateConfig};
use crate::csvio::{self, CsvWriter};
use crate::ltv_file::load_plant;

/// Offset separating per-repetition random streams.
const REP_STREAM_STRIDE: u64 = 1000;

struct SharedData {
    sys: LtvSystem,
    /// Raw inputs and measured outputs for the initialization + validation
    /// segment (`lag + init_len + validate_len` steps).
    inputs: Vec<DVector<f64>>,
    measured: Vec<DVector<f64>>,
    /// Plant state entering the test segment.
    x_test: DVector<f64>,
    /// Stacked samples, index s ↔ raw time lag + s.
    samples: Vec<DVector<f64>>,
}

fn sample_dim(sys: &LtvSystem, lag: usize) -> usize {
    (sys.input_dim() + sys.output_dim()) * (lag + 1)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

fn prepare_shared(cfg: &SysidConfig, seed: u64) -> Result<SharedData> {
    let sys = load_plant(&cfg.plant)?;
    if cfg.lag + 1 != cfg.t_ini + cfg.t_fut {
        bail!(
            "trajectory length mismatch: lag + 1 = {} must equal t_ini + t_fut = {}",
            cfg.lag + 1,
            cfg.t_ini + cfg.t_fut
        );
    }
    let total_raw = cfg.lag + cfg.init_len + cfg.validate_len + cfg.test_len + cfg.t_fut;
    if sys.horizon() < total_raw {
        bail!(
            "plant horizon {} too short: need {} steps (lag + splits + t_fut)",
            sys.horizon(),
            total_raw
        );
    }
    if cfg.window > cfg.init_len {
        bail!("window {} exceeds init split {}", cfg.window, cfg.init_len);
    }
    let raw_shared = cfg.lag + cfg.init_len + cfg.validate_len;
    let mut input_rng = stream_rng(seed, streams::INPUTS);
    let mut meas_rng = stream_rng(seed, streams::MEASUREMENT);
    let mut x = DVector::zeros(sys.state_dim());
    let mut inputs = Vec::with_capacity(raw_shared);
    let mut measured = Vec::with_capacity(raw_shared);
    for t in 0..raw_shared {
        let v = gaussian_vec(&mut input_rng, sys.input_dim());
        let (x_next, y) = sys.step(t, &x, &v)?;
        let noise = gaussian_vec(&mut meas_rng, sys.output_dim()) * cfg.noise_std;
        inputs.push(v);
        measured.push(y + noise);
        x = x_next;
    }
    let samples: Vec<DVector<f64>> = (cfg.lag..raw_shared)
        .map(|t| stack_sample(&inputs[t - cfg.lag..=t], &measured[t - cfg.lag..=t]))
        .collect::<great_core::Result<_>>()?;
    Ok(SharedData {
        sys,
        inputs,
        measured,
        x_test: x,
        samples,
    })
}

#[derive(Clone)]
enum OnlineTracker {
    Great(Box<Tracker>),
    Grouse { estimate: Subspace, alpha: f64 },
    Past(PastState),
}

impl OnlineTracker {
    fn build(kind: &str, cfg: &SysidConfig, ambient: usize, w_ini: &DMatrix<f64>) -> Result<Self> {
        let start = initialize(w_ini, cfg.dim)?;
        Ok(match kind {
            "great" => {
                let step = if cfg.line_search {
                    StepRule::armijo(cfg.step_size)
                } else {
                    StepRule::Fixed(cfg.step_size)
                };
                let config = TrackerConfig {
                    ambient,
                    dim: cfg.dim,
                    window_len: cfg.window,
                    inner_iters: cfg.inner_iters,
                    step,
                };
                OnlineTracker::Great(Box::new(Tracker::from_initial_data(config, w_ini)?))
            }
            "grouse" => OnlineTracker::Grouse {
                estimate: start,
                alpha: cfg.step_size,
            },
            "past" => OnlineTracker::Past(PastState::new(&start, cfg.past_forget)?),
            other => bail!("unknown tracker {other:?} (use great, grouse, past)"),
        })
    }

    fn ingest(&mut self, u: &DVector<f64>) -> Result<()> {
        match self {
            OnlineTracker::Great(t) => t.step(u)?,
            OnlineTracker::Grouse { estimate, alpha } => {
                *estimate = grouse_step(estimate, u, *alpha)?
            }
            OnlineTracker::Past(s) => s.step(u)?,
        }
        Ok(())
    }

    fn estimate(&self) -> Result<Subspace> {
        Ok(match self {
            OnlineTracker::Great(t) => t.estimate().clone(),
            OnlineTracker::Grouse { estimate, .. } => estimate.clone(),
            OnlineTracker::Past(s) => s.subspace()?,
        })
    }
}

/// Per-tracker prediction-error trajectory for one test repetition.
fn run_test_repetition(
    cfg: &SysidConfig,
    shared: &SharedData,
    trackers_at_test: &[(String, OnlineTracker)],
    seed: u64,
    rep: usize,
) -> Result<Vec<Vec<f64>>> {
    let sys = &shared.sys;
    let (m, p) = (sys.input_dim(), sys.output_dim());
    let raw_shared = shared.inputs.len();
    let extra = cfg.test_len + cfg.t_fut;
    let stride = REP_STREAM_STRIDE * (rep as u64 + 1);
    let mut input_rng = stream_rng(seed, streams::INPUTS + stride);
    let mut meas_rng = stream_rng(seed, streams::MEASUREMENT + stride);

    // continue the plant through the test segment with fresh realizations
    let mut inputs = shared.inputs[raw_shared - cfg.lag..].to_vec();
    let mut measured = shared.measured[raw_shared - cfg.lag..].to_vec();
    let mut x = shared.x_test.clone();
    for step in 0..extra {
        let t = raw_shared + step;
        let v = gaussian_vec(&mut input_rng, m);
        let (x_next, y) = sys.step(t, &x, &v)?;
        let mut y_meas = y + gaussian_vec(&mut meas_rng, p) * cfg.noise_std;
        if cfg.disturbance_at == Some(step) {
            y_meas += gaussian_vec(&mut meas_rng, p) * cfg.disturbance_scale;
        }
        inputs.push(v);
        measured.push(y_meas);
        x = x_next;
    }

    // local index l ↔ raw time raw_shared - lag + l
    let mut trackers: Vec<(String, OnlineTracker)> = trackers_at_test.to_vec();
    let mut errors = vec![Vec::with_capacity(cfg.test_len); trackers.len()];
    for s in 0..cfg.test_len {
        let l = cfg.lag + s; // newest index of this sample's window
        let sample = stack_sample(&inputs[l - cfg.lag..=l], &measured[l - cfg.lag..=l])?;
        for (idx, (_, tracker)) in trackers.iter_mut().enumerate() {
            tracker.ingest(&sample)?;
            let predictor =
                predictor_from_subspace(&tracker.estimate()?, m, p, cfg.t_ini, cfg.t_fut)?;
            let predicted = predictor.predict(
                &inputs[l + 1 - cfg.t_ini..=l],
                &measured[l + 1 - cfg.t_ini..=l],
                &inputs[l + 1..=l + cfg.t_fut],
            )?;
            let err = relative_prediction_error(&predicted, &measured[l + 1..=l + cfg.t_fut])?;
            errors[idx].push(err);
        }
    }
    Ok(errors)
}

pub fn run_sysid(cfg: &SysidConfig, seed: u64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let shared = prepare_shared(cfg, seed)?;
    let n = sample_dim(&shared.sys, cfg.lag);

    let mut w_ini = DMatrix::zeros(n, cfg.init_len);
    for j in 0..cfg.init_len {
        w_ini.set_column(j, &shared.samples[j]);
    }
    let mut trackers: Vec<(String, OnlineTracker)> = cfg
        .trackers
        .iter()
        .map(|kind| Ok((kind.clone(), OnlineTracker::build(kind, cfg, n, &w_ini)?)))
        .collect::<Result<_>>()?;
    // adapt through the validation segment
    for sample in shared.samples.iter().skip(cfg.init_len) {
        for (_, tracker) in trackers.iter_mut() {
            tracker.ingest(sample)?;
        }
    }

    let per_rep: Vec<Vec<Vec<f64>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| run_test_repetition(cfg, &shared, &trackers, seed, rep))
        .collect::<Result<_>>()?;

    // aggregate mean/std across repetitions
    let mut header = vec!["t".to_string()];
    for (kind, _) in &trackers {
        header.push(format!("{kind}_mean"));
        header.push(format!("{kind}_std"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvWriter::create(&out.join("sysid.csv"), &header_refs)?;
    let reps = cfg.repetitions as f64;
    for s in 0..cfg.test_len {
        let mut fields = vec![s.to_string()];
        for idx in 0..trackers.len() {
            let values: Vec<f64> = per_rep.iter().map(|r| r[idx][s]).collect();
            let mean = values.iter().sum::<f64>() / reps;
            let var = if cfg.repetitions > 1 {
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1.0)
            } else {
                0.0
            };
            fields.push(csvio::fmt(mean));
            fields.push(csvio::fmt(var.sqrt()));
        }
        csv.row(&fields)?;
    }
    csv.finish()?;

    for (idx, (kind, _)) in trackers.iter().enumerate() {
        let overall: f64 =
            per_rep.iter().flat_map(|r| r[idx].iter()).sum::<f64>() / (reps * cfg.test_len as f64);
        println!("{kind}: mean relative prediction error {overall:.6}");
    }
    Ok(())
}

/// One grid point of the validation search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub dim: usize,
    pub window: Option<usize>,
    pub forget: Option<f64>,
}

pub fn run_validate(
    cfg: &SysidConfig,
    grid: &ValidateConfig,
    seed: u64,
    out: &Path,
) -> Result<(GridPoint, f64)> {
    std::fs::create_dir_all(out)?;
    let shared = prepare_shared(cfg, seed)?;
    let n = sample_dim(&shared.sys, cfg.lag);

    let mut points = Vec::new();
    let mut dims = grid.dims.clone();
    dims.sort_unstable();
    if dims.is_empty() {
        bail!(great_core::Error::EmptyGrid.to_string());
    }
    match grid.tracker.as_str() {
        "great" => {
            let mut windows = grid.windows.clone();
            windows.sort_unstable();
            if windows.is_empty() {
                bail!("validate grid for the window tracker needs `windows`");
            }
            for &d in &dims {
                for &w in &windows {
                    points.push(GridPoint {
                        dim: d,
                        window: Some(w),
                        forget: None,
                    });
                }
            }
        }
        "grouse" => {
            for &d in &dims {
                points.push(GridPoint {
                    dim: d,
                    window: None,
                    forget: None,
                });
            }
        }
        "past" => {
            let mut forgets = grid.forgets.clone();
            forgets.sort_by(|a, b| a.partial_cmp(b).expect("finite forgets"));
            if forgets.is_empty() {
                bail!("validate grid for past needs `forgets`");
            }
            for &d in &dims {
                for &f in &forgets {
                    points.push(GridPoint {
                        dim: d,
                        window: None,
                        forget: Some(f),
                    });
                }
            }
        }
        other => bail!("unknown tracker {other:?}"),
    }

    // infeasible points (e.g. a dim above the data rank on noise-free data)
    // score as +inf instead of aborting the whole search
    let scores: Vec<f64> = points
        .par_iter()
        .map(|point| validation_error(cfg, grid, &shared, n, point).unwrap_or(f64::INFINITY))
        .collect();
    if scores.iter().all(|s| !s.is_finite()) {
        bail!("no grid point could be scored");
    }

    let mut csv = CsvWriter::create(
        &out.join("validate.csv"),
        &["tracker", "dim", "window", "forget", "mean_error"],
    )?;
    for (point, score) in points.iter().zip(&scores) {
        csv.row(&[
            grid.tracker.clone(),
            point.dim.to_string(),
            point.window.map_or(String::new(), |w| w.to_string()),
            point.forget.map_or(String::new(), csvio::fmt),
            csvio::fmt(*score),
        ])?;
    }
    csv.finish()?;

    // points are ordered by (dim, window, forget) ascending, so strict `<`
    // implements the documented tie-break
    let mut best = 0;
    for i in 1..points.len() {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    let chosen = points[best].clone();
    println!(
        "best: tracker={} dim={}{}{} mean_error={:.6e}",
        grid.tracker,
        chosen.dim,
        chosen
            .window
            .map_or(String::new(), |w| format!(" window={w}")),
        chosen
            .forget
            .map_or(String::new(), |f| format!(" forget={f}")),
        scores[best]
    );
    Ok((chosen, scores[best]))
}

fn validation_error(
    cfg: &SysidConfig,
    grid: &ValidateConfig,
    shared: &SharedData,
    n: usize,
    point: &GridPoint,
) -> Result<f64> {
    let mut local = cfg.clone();
    local.dim = point.dim;
    if let Some(w) = point.window {
        local.window = w;
    }
    if let Some(f) = point.forget {
        local.past_forget = f;
    }
    let mut w_ini = DMatrix::zeros(n, cfg.init_len);
    for j in 0..cfg.init_len {
        w_ini.set_column(j, &shared.samples[j]);
    }
    let mut tracker = OnlineTracker::build(&grid.tracker, &local, n, &w_ini)
        .with_context(|| format!("building {point:?}"))?;
    let (m, p) = (shared.sys.input_dim(), shared.sys.output_dim());
    let mut total = 0.0;
    let mut count = 0usize;
    let last_scored = shared.samples.len() - cfg.t_fut;
    for s in cfg.init_len..shared.samples.len() {
        tracker.ingest(&shared.samples[s])?;
        if s >= last_scored {
            continue; // not enough future data to score
        }
        let t = cfg.lag + s;
        let predictor = predictor_from_subspace(&tracker.estimate()?, m, p, cfg.t_ini, cfg.t_fut)?;
        let predicted = predictor.predict(
            &shared.inputs[t + 1 - cfg.t_ini..=t],
            &shared.measured[t + 1 - cfg.t_ini..=t],
            &shared.inputs[t + 1..=t + cfg.t_fut],
        )?;
        total += relative_prediction_error(&predicted, &shared.measured[t + 1..=t + cfg.t_fut])?;
        count += 1;
    }
    if count == 0 {
        bail!("validation split too short to score any prediction");
    }
    Ok(total / count as f64)
}
