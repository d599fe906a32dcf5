use std::fmt::Write;
use std::thread;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zonoset::estimation::{Estimate, Estimator, EstimatorConfig};
use zonoset::faultdiag::{design_separating_input_with_budget, ModelFamily};
use zonoset::funcdag::FuncDag;
use zonoset::interval::SampleDistribution;
use zonoset::propagate::{propagate, Method, PropSet};
use zonoset::setqueries::{VolumeMetric, DEFAULT_COMBO_BUDGET};
use zonoset::system::{DtSystem, SimulationRecord};
use zonoset::{ConZonotope, Error, IntervalVector, ZonoSet, Zonotope};

use crate::error::{CliError, CliResult};
use crate::output::{count_escapes, csv_table, fmt_vec, planar, planar_estimate, OutDir};
use crate::svg::Plot;

const MEMBERSHIP_TOL: f64 = 1e-8;

// ---------------------------------------------------------------- reduction

pub struct ReductionJob {
    pub set: ConZonotope,
    pub ng: usize,
    pub nc: usize,
    pub samples: usize,
    pub seed: u64,
}

pub fn reduction(out: &mut OutDir, job: &ReductionJob) -> CliResult<String> {
    let z = &job.set;
    let r = z.reduce(job.ng, job.nc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let pts = z.sample(job.samples, &mut rng)?;
    let violations = count_escapes(&r, &pts, MEMBERSHIP_TOL)?;
    let mut report = String::new();
    let _ = writeln!(report, "input: {} generators, {} constraints", z.ng(), z.nc());
    let _ = writeln!(report, "reduced: {} generators, {} constraints", r.ng(), r.nc());
    let _ = writeln!(report, "samples: {}", pts.len());
    let _ = writeln!(report, "violations: {violations}");
    out.write("reduction_report.txt", &report)?;
    out.write("reduction_output.json", ZonoSet::ConZonotope(r.clone()).to_json())?;
    if let (Some(before), Some(after)) = (
        planar(&ZonoSet::ConZonotope(z.clone()))?,
        planar(&ZonoSet::ConZonotope(r.clone()))?,
    ) {
        let mut plot = Plot::new("constrained zonotope reduction");
        plot.polygon(format!("reduced ({}, {})", r.ng(), r.nc()), after);
        plot.polygon(format!("input ({}, {})", z.ng(), z.nc()), before);
        out.write("reduction.svg", plot.render())?;
    }
    if violations > 0 {
        return Err(CliError::Numerical(format!("{violations} samples escape the reduced set")));
    }
    Ok(report)
}

// ---------------------------------------------------------------- propagation

pub struct PropagationJob {
    pub set: PropSet,
    pub f: FuncDag,
    pub methods: Vec<Method>,
    pub samples: usize,
    pub seed: u64,
}

pub struct PropagationRow {
    pub method: Method,
    pub set: ConZonotope,
    pub radius: f64,
    pub escapes: usize,
}

fn sample_propset(x: &PropSet, n: usize, rng: &mut ChaCha8Rng) -> CliResult<Vec<DVector<f64>>> {
    Ok(match x {
        PropSet::Interval(b) => b.sample(n, SampleDistribution::Uniform, rng),
        PropSet::Zonotope(z) => z.sample(n, rng),
        PropSet::ConZonotope(z) => z.sample(n, rng)?,
    })
}

fn as_conzonotope(y: PropSet) -> ConZonotope {
    match y {
        PropSet::Interval(b) => Zonotope::from_interval(&b).into(),
        PropSet::Zonotope(z) => z.into(),
        PropSet::ConZonotope(z) => z,
    }
}

pub fn propagation(out: &mut OutDir, job: &PropagationJob) -> CliResult<(String, Vec<PropagationRow>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let images = sample_propset(&job.set, job.samples, &mut rng)?
        .iter()
        .map(|p| job.f.eval_real(p))
        .collect::<Result<Vec<_>, Error>>()?;
    let results: Vec<CliResult<PropagationRow>> = thread::scope(|s| {
        let handles: Vec<_> = job
            .methods
            .iter()
            .map(|&m| {
                let images = &images;
                s.spawn(move || -> CliResult<PropagationRow> {
                    let y = as_conzonotope(propagate(&job.set, &job.f, m)?);
                    Ok(PropagationRow {
                        method: m,
                        radius: y.volume(VolumeMetric::PartopeNthRoot)?,
                        escapes: count_escapes(&y, images, MEMBERSHIP_TOL)?,
                        set: y,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("propagation thread panicked")).collect()
    });
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let header: Vec<String> = ["method", "radius", "generators", "constraints", "escapes"].map(String::from).to_vec();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.method.name().to_string(),
                r.radius.to_string(),
                r.set.ng().to_string(),
                r.set.nc().to_string(),
                r.escapes.to_string(),
            ]
        })
        .collect();
    out.write("propagate_radii.csv", csv_table("propagate-radii", &header, &table)?)?;
    for r in &rows {
        out.write(&format!("propagate_{}.json", r.method.name()), ZonoSet::ConZonotope(r.set.clone()).to_json())?;
    }
    if job.f.n_outputs() == 2 {
        let mut plot = Plot::new("enclosures of f(X)");
        for r in &rows {
            if let Some(poly) = planar(&ZonoSet::ConZonotope(r.set.clone()))? {
                plot.polygon(r.method.name(), poly);
            }
        }
        plot.points = images.iter().take(1000).cloned().collect();
        out.write("propagate.svg", plot.render())?;
    }

    let mut report = format!("{:<12} {:>10} {:>4} {:>4} {:>8}\n", "method", "radius", "ng", "nc", "escapes");
    for r in &rows {
        let _ = writeln!(
            report,
            "{:<12} {:>10.4} {:>4} {:>4} {:>8}",
            r.method.name(),
            r.radius,
            r.set.ng(),
            r.set.nc(),
            r.escapes
        );
    }
    if let Some(r) = rows.iter().find(|r| r.escapes > 0) {
        return Err(CliError::Numerical(format!("{} samples of f(X) escape the {} enclosure", r.escapes, r.method)));
    }
    Ok((report, rows))
}

// ---------------------------------------------------------------- estimation

pub struct EstimationJob {
    pub sys: DtSystem,
    pub rec: SimulationRecord,
    pub inputs: Vec<DVector<f64>>,
    pub configs: Vec<EstimatorConfig>,
    pub snapshots: Vec<usize>,
}

pub struct StepRow {
    pub k: usize,
    pub hull: Option<IntervalVector>,
    pub volume: f64,
    pub fault: bool,
    pub contains_truth: bool,
}

impl StepRow {
    pub fn radius(&self) -> f64 {
        self.hull.as_ref().map_or(f64::INFINITY, |h| h.rad().max())
    }
}

struct MethodRun {
    rows: Vec<StepRow>,
    snapshots: Vec<(usize, Estimate)>,
}

fn run_one(job: &EstimationJob, cfg: &EstimatorConfig) -> CliResult<MethodRun> {
    let mut est = Estimator::new(job.sys.clone(), cfg.clone())?;
    let nu = job.sys.nu();
    let input = |k: usize| job.inputs.get(k).cloned().unwrap_or_else(|| DVector::zeros(nu));
    let mut run = MethodRun { rows: Vec::new(), snapshots: Vec::new() };
    for (k, y) in job.rec.y.iter().enumerate() {
        let s = est.step(&input(k), &input(k + 1), y)?;
        let hull = match s.updated.interval_hull() {
            Ok(h) => Some(h),
            Err(Error::UnboundedSet) => None,
            Err(e) => return Err(e.into()),
        };
        run.rows.push(StepRow {
            k: s.k,
            hull,
            volume: s.updated.volume()?,
            fault: s.fault,
            contains_truth: s.updated.is_inside(&job.rec.x[k + 1])?,
        });
        if job.snapshots.contains(&s.k) {
            run.snapshots.push((s.k, s.updated.clone()));
        }
    }
    Ok(run)
}

pub fn estimation(out: &mut OutDir, job: &EstimationJob) -> CliResult<(String, Vec<Vec<StepRow>>)> {
    let runs: Vec<CliResult<MethodRun>> = thread::scope(|s| {
        let handles: Vec<_> = job.configs.iter().map(|cfg| s.spawn(move || run_one(job, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("estimator thread panicked")).collect()
    });
    let runs = runs.into_iter().collect::<CliResult<Vec<_>>>()?;
    let nx = job.sys.nx();
    let names: Vec<&str> = job.configs.iter().map(|c| c.method.name()).collect();

    let mut header: Vec<String> = vec!["method".into(), "k".into()];
    for i in 0..nx {
        header.push(format!("lo{}", i + 1));
        header.push(format!("hi{}", i + 1));
    }
    header.extend(["radius", "volume", "fault", "contains_truth"].map(String::from));
    let mut log = Vec::new();
    for (name, run) in names.iter().zip(&runs) {
        for r in &run.rows {
            let mut row = vec![name.to_string(), r.k.to_string()];
            for i in 0..nx {
                let (lo, hi) = r.hull.as_ref().map_or((f64::NEG_INFINITY, f64::INFINITY), |h| (h.lo()[i], h.hi()[i]));
                row.push(lo.to_string());
                row.push(hi.to_string());
            }
            row.extend([r.radius().to_string(), r.volume.to_string(), r.fault.to_string(), r.contains_truth.to_string()]);
            log.push(row);
        }
    }
    out.write("estimation.csv", csv_table("estimation-log", &header, &log)?)?;

    let mut vheader = vec!["k".to_string()];
    vheader.extend(names.iter().map(|n| n.to_string()));
    let steps = job.rec.y.len();
    let volumes: Vec<Vec<String>> = (0..steps)
        .map(|i| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(runs.iter().map(|r| r.rows[i].volume.to_string()));
            row
        })
        .collect();
    out.write("estimation_volume.csv", csv_table("estimation-volume", &vheader, &volumes)?)?;

    if nx >= 2 {
        for &k in &job.snapshots {
            let mut plot = Plot::new(format!("state estimates at k = {k}"));
            for (name, run) in names.iter().zip(&runs) {
                if let Some((_, e)) = run.snapshots.iter().find(|(kk, _)| *kk == k) {
                    if let Some(poly) = planar_estimate(e)? {
                        plot.polygon(*name, poly);
                    }
                }
            }
            if plot.layers.is_empty() {
                continue;
            }
            plot.marker = job.rec.x.get(k).map(|x| x.rows(0, 2).into_owned());
            out.write(&format!("estimation_k{k:03}.svg"), plot.render())?;
        }
    }

    let mut report = format!("{:<14} {:>12} {:>12} {:>7} {:>9}\n", "method", "final volume", "mean volume", "faults", "contained");
    for (name, run) in names.iter().zip(&runs) {
        let finals = run.rows.last().map_or(f64::NAN, |r| r.volume);
        let mean = run.rows.iter().map(|r| r.volume).sum::<f64>() / run.rows.len().max(1) as f64;
        let faults = run.rows.iter().filter(|r| r.fault).count();
        let contained = run.rows.iter().filter(|r| r.contains_truth).count();
        let _ = writeln!(report, "{name:<14} {finals:>12.4} {mean:>12.4} {faults:>7} {contained:>5}/{:<3}", run.rows.len());
    }
    let rows: Vec<Vec<StepRow>> = runs.into_iter().map(|r| r.rows).collect();
    for (name, r) in names.iter().zip(&rows) {
        if let Some(bad) = r.iter().find(|s| !s.contains_truth && !s.fault) {
            return Err(CliError::Numerical(format!("{name}: the true state escapes at k = {}", bad.k)));
        }
    }
    Ok((report, rows))
}

// ---------------------------------------------------------------- fault diagnosis

pub fn fault_diagnosis(out: &mut OutDir, fam: &ModelFamily, budget: Option<u128>) -> CliResult<String> {
    fam.validate()?;
    let design = design_separating_input_with_budget(fam, budget.unwrap_or(DEFAULT_COMBO_BUDGET))?;
    let json = serde_json::to_string_pretty(&design).map_err(|e| CliError::Io(e.to_string()))?;
    out.write("afd_result.json", json + "\n")?;

    let mut tubes = Vec::new();
    for i in 0..fam.models.len() {
        tubes.push(fam.tube(i)?);
    }
    let zero = DVector::zeros(fam.input_len());
    if tubes.first().is_some_and(|t| t.d.len() >= 2) {
        let mut plot = Plot::new("output tubes");
        for (i, t) in tubes.iter().enumerate() {
            if let Some(p) = planar(&ZonoSet::Zonotope(t.at(&design.u)?))? {
                plot.polygon(format!("model {i}, designed input"), p);
            }
        }
        for (i, t) in tubes.iter().enumerate() {
            if let Some(p) = planar(&ZonoSet::Zonotope(t.at(&zero)?))? {
                plot.dashed(format!("model {i}, zero input"), p);
            }
        }
        out.write("afd_tubes.svg", plot.render())?;
    }

    let mut report = String::new();
    let _ = writeln!(report, "input: {}", fmt_vec(&design.u));
    let _ = writeln!(report, "objective: {:.6}", design.objective);
    let _ = writeln!(report, "nodes: {}", design.nodes);
    for c in &design.certificates {
        let _ = writeln!(
            report,
            "pair ({}, {}): separated: {}, distance: {:.6}, margin met: {}",
            c.pair.0, c.pair.1, c.separated, c.distance, c.margin_met
        );
    }
    Ok(report)
}
