//! Demos and the experiment runner behind the `zonoset` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use zonoset::estimation::{EstimatorConfig, EstimatorMethod, Limits};
use zonoset::propagate::{Method, PropSet};
use zonoset::scenarios::{
    afd_demo_family, estimation_demo_system, estimation_demo_v, estimation_demo_w, estimation_demo_x0,
    estimation_demo_x0_set, propagate_demo_dag, propagate_demo_set, reduction_demo_set, REDUCTION_SEED,
};
use zonoset::system::{simulate, DtSystem};
use zonoset::ZonoSet;

use commands::{EstimationJob, PropagationJob, ReductionJob};
pub use error::{CliError, CliResult};
use output::OutDir;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Options {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub budget: Option<u128>,
}

/// Report text and the files written.
pub struct Outcome {
    pub report: String,
    pub written: Vec<PathBuf>,
}

fn finish(out: OutDir, report: String) -> Outcome {
    Outcome { report, written: out.written }
}

pub fn demo_reduction(o: &Options) -> CliResult<Outcome> {
    let seed = o.seed.unwrap_or(REDUCTION_SEED);
    let mut out = OutDir::new(&o.out_dir)?;
    let job = ReductionJob { set: reduction_demo_set(seed), ng: 4, nc: 2, samples: 10_000, seed };
    out.write("reduction_input.json", ZonoSet::ConZonotope(job.set.clone()).to_json())?;
    let report = commands::reduction(&mut out, &job)?;
    Ok(finish(out, report))
}

pub fn demo_propagate(o: &Options) -> CliResult<Outcome> {
    let mut out = OutDir::new(&o.out_dir)?;
    let job = PropagationJob {
        set: PropSet::ConZonotope(propagate_demo_set()),
        f: propagate_demo_dag(),
        methods: vec![Method::MeanValue, Method::FirstOrder, Method::PolyRelax],
        samples: 10_000,
        seed: o.seed.unwrap_or(11),
    };
    let (report, rows) = commands::propagation(&mut out, &job)?;
    let radius = |m: Method| rows.iter().find(|r| r.method == m).map(|r| r.radius).unwrap_or(f64::NAN);
    let pr = radius(Method::PolyRelax);
    if !(pr <= radius(Method::MeanValue) && pr <= radius(Method::FirstOrder)) {
        return Err(CliError::Numerical("the relaxation enclosure is not the tightest".into()));
    }
    Ok(finish(out, report))
}

pub fn demo_estimation(o: &Options) -> CliResult<Outcome> {
    let mut out = OutDir::new(&o.out_dir)?;
    let sys = DtSystem::Nonlinear(estimation_demo_system());
    let (w, v) = (estimation_demo_w(), estimation_demo_v());
    let rec = simulate(&sys, &estimation_demo_x0(), 100, &w, &v, &[], o.seed.unwrap_or(7))?;
    let configs = EstimatorMethod::NONLINEAR
        .into_iter()
        .map(|method| EstimatorConfig {
            method,
            w: w.clone(),
            v: v.clone(),
            limits: Limits::default(),
            x0: ZonoSet::Zonotope(estimation_demo_x0_set()),
            admissible: None,
        })
        .collect();
    let job = EstimationJob { sys, rec, inputs: Vec::new(), configs, snapshots: vec![1, 10, 50, 100] };
    let (report, _) = commands::estimation(&mut out, &job)?;
    Ok(finish(out, report))
}

pub fn demo_afd(o: &Options) -> CliResult<Outcome> {
    let mut out = OutDir::new(&o.out_dir)?;
    let report = commands::fault_diagnosis(&mut out, &afd_demo_family(), o.budget)?;
    Ok(finish(out, report))
}

/// Runs every section of a config file; `--seed` overrides the config seed.
pub fn run(o: &Options, path: &Path) -> CliResult<Outcome> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = config::parse(&text, path)?;
    let seed = o.seed.unwrap_or(cfg.seed);
    let reduction = cfg.reduction.as_ref().map(|s| s.job(seed)).transpose()?;
    let propagate = cfg.propagate.as_ref().map(|s| s.job(seed)).transpose()?;
    let estimation = cfg.estimation.as_ref().map(|s| s.job(seed)).transpose()?;
    if let Some(afd) = &cfg.afd {
        afd.family.validate().map_err(|e| CliError::Config(format!("field `afd.family`: {e}")))?;
    }

    let mut out = OutDir::new(&o.out_dir)?;
    let mut report = String::new();
    if let Some(job) = &reduction {
        report += &commands::reduction(&mut out, job)?;
    }
    if let Some(job) = &propagate {
        report += &commands::propagation(&mut out, job)?.0;
    }
    if let Some(job) = &estimation {
        report += &commands::estimation(&mut out, job)?.0;
    }
    if let Some(afd) = &cfg.afd {
        report += &commands::fault_diagnosis(&mut out, &afd.family, o.budget.or(afd.budget))?;
    }
    Ok(finish(out, report))
}
