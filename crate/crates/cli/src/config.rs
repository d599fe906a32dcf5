//! Experiment configuration read by `zonoset run`.
//!
//! A config holds an optional `seed` and any of the sections `reduction`,
//! `propagate`, `estimation` and `afd`. Matrices use the dense
//! `{rows, cols, data}` layout with row-major data, vectors are arrays and
//! sets carry a `kind` tag.

use std::path::Path;

use nalgebra::DVector;
use serde::Deserialize;
use zonoset::estimation::{EstimatorConfig, EstimatorMethod, Limits};
use zonoset::faultdiag::ModelFamily;
use zonoset::funcdag::DagSpec;
use zonoset::propagate::{Method, PropSet};
use zonoset::system::{simulate, SystemSpec};
use zonoset::{IntervalVector, ZonoSet, Zonotope};

use crate::commands::{EstimationJob, PropagationJob, ReductionJob};
use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub reduction: Option<ReductionSpec>,
    pub propagate: Option<PropagateSpec>,
    pub estimation: Option<EstimationSpec>,
    pub afd: Option<AfdSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSpec {
    pub set: ZonoSet,
    pub ng: usize,
    pub nc: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateSpec {
    pub f: DagSpec,
    pub set: ZonoSet,
    pub methods: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    pub ng: usize,
    pub nc: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSpec {
    pub system: SystemSpec,
    pub methods: Vec<String>,
    pub steps: usize,
    pub x0: ZonoSet,
    /// Initial true state; defaults to the center of an interval or
    /// zonotope `x0`.
    pub x_true: Option<Vec<f64>>,
    pub w: Zonotope,
    pub v: Zonotope,
    pub limits: Option<LimitsSpec>,
    pub admissible: Option<IntervalVector>,
    #[serde(default)]
    pub inputs: Vec<Vec<f64>>,
    #[serde(default)]
    pub snapshots: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfdSpec {
    pub family: ModelFamily,
    pub budget: Option<u128>,
}

fn default_samples() -> usize {
    10_000
}

/// Parses a config, reporting the field path and line of the first error.
pub fn parse(text: &str, origin: &Path) -> CliResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!("{}: field `{path}`: {inner}", origin.display()))
    })?;
    if cfg.reduction.is_none() && cfg.propagate.is_none() && cfg.estimation.is_none() && cfg.afd.is_none() {
        return Err(CliError::Config(format!(
            "{}: no experiment section (reduction, propagate, estimation or afd)",
            origin.display()
        )));
    }
    Ok(cfg)
}

fn field<T>(name: &str, r: zonoset::Result<T>) -> CliResult<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("field `{name}`: {m}")),
        other => other,
    })
}

impl ReductionSpec {
    pub fn job(&self, seed: u64) -> CliResult<ReductionJob> {
        field("reduction.set", self.set.validate())?;
        let ZonoSet::ConZonotope(set) = field("reduction.set", self.set.convert(zonoset::SetKind::ConZonotope))? else {
            unreachable!("converted to a constrained zonotope")
        };
        Ok(ReductionJob { set, ng: self.ng, nc: self.nc, samples: self.samples, seed })
    }
}

impl PropagateSpec {
    pub fn job(&self, seed: u64) -> CliResult<PropagationJob> {
        let f = field("propagate.f", self.f.build())?;
        field("propagate.set", self.set.validate())?;
        let set = match &self.set {
            ZonoSet::Interval(x) => PropSet::Interval(x.clone()),
            ZonoSet::Zonotope(z) => PropSet::Zonotope(z.clone()),
            ZonoSet::ConZonotope(z) => PropSet::ConZonotope(z.clone()),
            other => {
                return Err(CliError::Config(format!(
                    "field `propagate.set`: cannot propagate a {}",
                    other.kind().name()
                )))
            }
        };
        let methods = self
            .methods
            .iter()
            .map(|m| field("propagate.methods", m.parse::<Method>()))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(PropagationJob { set, f, methods, samples: self.samples, seed })
    }
}

impl EstimationSpec {
    pub fn job(&self, seed: u64) -> CliResult<EstimationJob> {
        let sys = field("estimation.system", self.system.build())?;
        field("estimation.x0", self.x0.validate())?;
        field("estimation.w", ZonoSet::Zonotope(self.w.clone()).validate())?;
        field("estimation.v", ZonoSet::Zonotope(self.v.clone()).validate())?;
        let x_true = match (&self.x_true, &self.x0) {
            (Some(x), _) => DVector::from_vec(x.clone()),
            (None, ZonoSet::Interval(b)) => b.mid(),
            (None, ZonoSet::Zonotope(z)) => z.c.clone(),
            (None, other) => {
                return Err(CliError::Config(format!(
                    "field `estimation.x_true`: required when x0 is a {}",
                    other.kind().name()
                )))
            }
        };
        let limits = self.limits.as_ref().map_or(Limits::default(), |l| Limits { ng: l.ng, nc: l.nc });
        let configs = self
            .methods
            .iter()
            .map(|m| {
                Ok(EstimatorConfig {
                    method: field("estimation.methods", m.parse::<EstimatorMethod>())?,
                    w: self.w.clone(),
                    v: self.v.clone(),
                    limits,
                    x0: self.x0.clone(),
                    admissible: self.admissible.clone(),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        if configs.is_empty() {
            return Err(CliError::Config("field `estimation.methods`: no estimator listed".into()));
        }
        let inputs: Vec<DVector<f64>> = self.inputs.iter().map(|u| DVector::from_vec(u.clone())).collect();
        let rec = field("estimation", simulate(&sys, &x_true, self.steps, &self.w, &self.v, &inputs, seed))?;
        Ok(EstimationJob { sys, rec, inputs, configs, snapshots: self.snapshots.clone() })
    }
}
