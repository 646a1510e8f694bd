//! Subcommand dispatch and artifact writing.
//!
//! Every output is rendered in memory first and then persisted through a
//! temporary file in the output directory, so a failed or interrupted run
//! never leaves a truncated artifact behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::bounds::{self, derive_profile};
use crate::chain::{simulate, ChainParams};
use crate::config::{Command, Format, RunConfig};
use crate::dla::{components_outside, parse_sites_csv, run_dla, DlaConfig, Site, WedgeGeometry};
use crate::error::{Error, Result};
use crate::estimators::{conditional_monotone_frequency, run_ensemble, EnsembleSpec};
use crate::rng;

/// Name of the provenance echo written next to every run's outputs.
pub const CONFIG_ECHO: &str = "config.txt";

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// One human-readable line.
    pub summary: String,
    /// Extra text for stdout (the `bounds` profile).
    pub stdout: Option<String>,
    pub files: Vec<PathBuf>,
}

fn chain_params(cfg: &RunConfig) -> Result<ChainParams> {
    if cfg.allow_degenerate_c0 {
        ChainParams::degenerate(cfg.alpha, cfg.c)
    } else {
        ChainParams::new(cfg.alpha, cfg.c)
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// `k·M/10` for `k = 0..10`, where `M` is the largest site norm.
fn default_radii(sites: &[Site]) -> Vec<f64> {
    let max = sites
        .iter()
        .map(|s| (s.norm_sq() as f64).sqrt())
        .fold(0.0, f64::max);
    (0..10).map(|k| max * k as f64 / 10.0).collect()
}

fn ends_report(alpha: f64, sites: &[Site], radii: &[f64]) -> serde_json::Value {
    let rows: Vec<_> = radii
        .iter()
        .map(|&r| json!({ "r": r, "components": components_outside(sites, r) }))
        .collect();
    json!({ "alpha": alpha, "sites": sites.len(), "ends": rows })
}

/// Writes `contents` to `dir/name` via a sibling temp file and rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    let err = |e| Error::io(path.display().to_string(), e);
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{name}."))
        .tempfile_in(dir)
        .map_err(err)?;
    tmp.write_all(contents).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(&path).map_err(|e| err(e.error))?;
    Ok(path)
}

/// `(summary, stdout text, [(file name, contents)])`.
type Rendered = (String, Option<String>, Vec<(&'static str, String)>);

/// Renders every artifact of a run without touching the filesystem,
/// except to read the `ends` input.
fn render(cfg: &RunConfig) -> Result<Rendered> {
    let mut files: Vec<(&'static str, String)> = Vec::new();
    let mut stdout = None;
    let summary = match cfg.command {
        Command::Simulate => {
            let params = chain_params(cfg)?;
            let traj = simulate(&params, cfg.horizon, cfg.seed, cfg.coupling, cfg.doob)?;
            traj.check_invariants()?;
            match cfg.format {
                Format::Csv => files.push(("trajectory.csv", traj.to_csv())),
                Format::Json => files.push(("trajectory.json", serde_json::to_string(&traj)? + "\n")),
            }
            format!(
                "simulate: alpha={} c={} horizon={} seed={} D_N={}",
                cfg.alpha,
                cfg.c,
                cfg.horizon,
                cfg.seed,
                traj.d[cfg.horizon as usize]
            )
        }
        Command::Ensemble => {
            let params = chain_params(cfg)?;
            let profile = derive_profile(cfg.alpha, cfg.c)?;
            let delta = cfg.delta.unwrap_or(profile.delta);
            let delta_bar = if cfg.delta.is_some() {
                (1.0 - cfg.alpha - delta) / 8.0
            } else {
                profile.delta_bar
            };
            let spec = EnsembleSpec {
                params,
                horizon: cfg.horizon,
                trajectories: cfg.trajectories,
                base_seed: cfg.seed,
                checkpoints: cfg.checkpoints.clone(),
                eps: cfg.eps,
                delta,
                delta_bar,
                s_scale: cfg.s_scale,
                beta: cfg.beta.unwrap_or(profile.beta),
                max_work: cfg.max_work,
            };
            let summary = run_ensemble(&spec)?;
            let monotone = cfg
                .monotone_start
                .map(|start| conditional_monotone_frequency(&spec, start))
                .transpose()?;
            let doc = json!({
                "spec": spec,
                "summary": summary,
                "conditional_monotone": monotone,
            });
            files.push(("ensemble.json", pretty(&doc)?));
            files.push(("ensemble.csv", summary.to_csv()));
            let last = summary.checkpoints.last().expect("validated non-empty");
            format!(
                "ensemble: {} trajectories to n={}; P(D_n >= {:.3}) = {:.4}, E1 = {:.4}, E2 = {:.4}",
                summary.trajectories,
                last.n,
                last.threshold,
                last.p_ge_threshold.estimate,
                last.e1.estimate,
                last.e2.estimate
            )
        }
        Command::Bounds => {
            let profile = derive_profile(cfg.alpha, cfg.c)?;
            let text = pretty(&profile.to_json())?;
            stdout = Some(text.clone());
            files.push(("bounds.json", text));
            // Touch the tail bound so an unusable β surfaces here too.
            bounds::monotone_tail_bound(1, cfg.c, cfg.alpha, profile.beta)?;
            format!(
                "bounds: alpha={} K={} delta={} beta={}",
                profile.alpha, profile.k_max, profile.delta, profile.beta
            )
        }
        Command::Dla => {
            let geom = WedgeGeometry::new(cfg.alpha)?;
            let dla_cfg = DlaConfig {
                launch_margin: cfg.launch_margin,
                step_budget: cfg.step_budget,
                resample_cap: cfg.resample_cap,
                ..DlaConfig::default()
            };
            let mut stream = rng::stream(cfg.seed);
            let run = run_dla(geom, cfg.particles, &mut stream, &dla_cfg)?;
            run.aggregate.check_invariants()?;
            let sites = run.aggregate.particles();
            let radii = cfg.radii.clone().unwrap_or_else(|| default_radii(sites));
            files.push(("sites.csv", run.aggregate.sites_csv()));
            files.push(("tips.csv", run.tips_csv()));
            files.push(("ends.json", pretty(&ends_report(cfg.alpha, sites, &radii))?));
            if cfg.pgm {
                files.push(("occupancy.pgm", run.aggregate.to_pgm()));
            }
            let tip = run.tips.last().expect("tip series starts at k = 0");
            format!(
                "dla: alpha={} particles={} L={} R={} gap={}",
                cfg.alpha,
                cfg.particles,
                tip.l,
                tip.r.map_or_else(|| "undefined".to_string(), |r| r.to_string()),
                tip.gap
            )
        }
        Command::Ends => {
            let input = cfg.input.as_ref().expect("validated present");
            let text = std::fs::read_to_string(input)
                .map_err(|e| Error::io(input.display().to_string(), e))?;
            let sites = parse_sites_csv(&text)?;
            let radii = cfg.radii.clone().unwrap_or_else(|| default_radii(&sites));
            let report = ends_report(cfg.alpha, &sites, &radii);
            files.push(("ends.json", pretty(&report)?));
            format!("ends: {} sites, {} radii", sites.len(), radii.len())
        }
    };
    files.push((CONFIG_ECHO, cfg.echo()));
    Ok((summary, stdout, files))
}

/// Runs one subcommand and persists its artifacts under `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let (summary, stdout, rendered) = render(cfg)?;
    std::fs::create_dir_all(&cfg.output)
        .map_err(|e| Error::io(cfg.output.display().to_string(), e))?;
    let files = rendered
        .iter()
        .map(|(name, body)| write_atomic(&cfg.output, name, body.as_bytes()))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutcome {
        summary,
        stdout,
        files,
    })
}
