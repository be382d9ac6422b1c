//! Stand-alone certificate evaluation: tabulate the per-step tube radius and
//! the ultimate bound for given constants, without running a tracker.

use std::path::Path;

use anyhow::{bail, Result};

use great_core::certs::{assumption4_check, tube_bound, CertificateParams};

use crate::config::CertifyConfig;
use crate::csvio::{self, CsvWriter};
use crate::synthetic::resolve_step_size;

pub fn run_certify(cfg: &CertifyConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let base = CertificateParams {
        noise_bound: cfg.noise_bound,
        drift_bound: cfg.drift_bound,
        sigma_min: cfg.sigma_min,
        sigma_max: cfg.sigma_max,
        tube_radius: cfg.tube_radius,
        step_size: 1.0,
        window_len: cfg.window,
        inner_iters: cfg.inner_iters,
        dim: cfg.dim,
    };
    let alpha = resolve_step_size(&cfg.step_size, cfg.delta_sup, &base)?;
    let params = base.with_step_size(alpha);
    let report = assumption4_check(&params, cfg.delta_sup)?;
    println!(
        "alpha = {:e}, rho_tilde = {:e}, feasible = {}, slack = {:e}",
        alpha, report.rho_tilde, report.holds, report.slack
    );
    if !report.holds {
        bail!(great_core::Error::AssumptionViolated {
            slack: report.slack
        }
        .to_string());
    }
    let tube = tube_bound(cfg.horizon, cfg.initial_dist_sq, cfg.delta_sup, &params)?;
    let mut csv = CsvWriter::create(&out.join("certify.csv"), &["t", "bound_eq11", "bound_eq12"])?;
    for (i, b) in tube.per_step.iter().enumerate() {
        csv.row(&[
            (i + 1).to_string(),
            csvio::fmt(b.sqrt()),
            csvio::fmt(tube.ultimate.sqrt()),
        ])?;
    }
    csv.finish()?;
    println!(
        "ultimate bound = {:e} (distance {:e})",
        tube.ultimate,
        tube.ultimate.sqrt()
    );
    Ok(())
}
