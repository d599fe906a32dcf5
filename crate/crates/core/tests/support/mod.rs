//! Checks shared by the integration tests and the acceptance target. Each
//! returns a one-line summary on success and a diagnostic on failure.
#![allow(dead_code)]

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use zonoset::estimation::{run_estimator, Estimate, Estimator, EstimatorConfig, EstimatorMethod, Limits};
use zonoset::faultdiag::{certify, design_separating_input, ModelFamily};
use zonoset::funcdag::{DagBuilder, FuncDag, UnaryOp};
use zonoset::interval::{BinaryOp, UnaryFn};
use zonoset::polyrelax::relax_function;
use zonoset::propagate::{propagate, Method, PropSet};
use zonoset::scenarios::*;
use zonoset::setqueries::VolumeMetric;
use zonoset::system::{simulate, DescriptorSystem, DtSystem, LinearSystem};
use zonoset::{ConZonotope, Error, Interval, IntervalVector, LineZonotope, ZonoSet, Zonotope};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e:?}"))
}

/// Membership with slack: the point lies within `tol` (∞-norm) of the set.
pub fn near(z: &ConZonotope, p: &DVector<f64>, tol: f64) -> bool {
    if z.is_inside(p).unwrap_or(false) {
        return true;
    }
    match z.closest_point(p) {
        Ok(q) => (q - p).amax() <= tol,
        Err(_) => false,
    }
}

/// Membership test against the vertex polygon of a planar set, with an LP
/// fallback for points the polygon test rejects.
pub fn planar_members(z: &ConZonotope, pts: &[DVector<f64>], tol: f64) -> Result<usize, String> {
    let v = ok(z.vertices_2d(), "vertices")?;
    let inside_polygon = |p: &DVector<f64>| {
        (0..v.len()).all(|i| {
            let (a, b) = (&v[i], &v[(i + 1) % v.len()]);
            let e = b - a;
            let cross = e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]);
            cross >= -tol * e.norm()
        })
    };
    Ok(pts.iter().filter(|p| !inside_polygon(p) && !near(z, p, tol)).count())
}

pub fn ball(n: usize, r: f64) -> Zonotope {
    Zonotope {
        g: DMatrix::identity(n, n) * r,
        c: DVector::zeros(n),
    }
}

fn normal(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

// ---------------------------------------------------------------- 1

pub fn reduction_demo() -> Check {
    let t = Instant::now();
    let z = reduction_demo_set(REDUCTION_SEED);
    ensure!((z.dim(), z.ng(), z.nc()) == (2, 47, 15), "input has shape {:?}", (z.dim(), z.ng(), z.nc()));
    let r = ok(z.reduce(4, 2), "reduce")?;
    let secs = t.elapsed().as_secs_f64();
    ensure!((r.ng(), r.nc()) == (4, 2), "reduced to ({}, {})", r.ng(), r.nc());
    let mut rng = ChaCha8Rng::seed_from_u64(REDUCTION_SEED);
    let pts = ok(z.sample(10_000, &mut rng), "sample")?;
    let violations = planar_members(&r, &pts, 1e-8)?;
    ensure!(violations == 0, "{violations} of 10000 samples escape");
    ensure!(secs < 5.0, "took {secs:.1} s");
    Ok(format!("47/15 -> 4/2, 0 of 10000 samples escape, {secs:.2} s"))
}

// ---------------------------------------------------------------- 2

pub fn propagation_demo() -> Check {
    let f = propagate_demo_dag();
    let x = propagate_demo_set();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<DVector<f64>> = ok(x.sample(10_000, &mut rng), "sample")?
        .iter()
        .map(|s| f.eval_real(s).unwrap())
        .collect();
    let mut radii = Vec::new();
    let mut secs = 0.0;
    for m in [Method::MeanValue, Method::FirstOrder, Method::PolyRelax] {
        let t = Instant::now();
        let PropSet::ConZonotope(y) = ok(propagate(&PropSet::ConZonotope(x.clone()), &f, m), "propagate")? else {
            return Err("CZ in, CZ out".into());
        };
        secs += t.elapsed().as_secs_f64();
        let escaped = planar_members(&y, &pts, 1e-8)?;
        ensure!(escaped == 0, "{m}: {escaped} samples escape");
        radii.push(ok(y.volume(VolumeMetric::PartopeNthRoot), "volume")?);
    }
    let (mv, fo, pr) = (radii[0], radii[1], radii[2]);
    ensure!(pr <= mv && pr <= fo, "radii mv {mv:.4}, fo {fo:.4}, pr {pr:.4}");
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("radius mv {mv:.4}, fo {fo:.4}, pr {pr:.4}, no escapes, {secs:.2} s"))
}

// ---------------------------------------------------------------- 3

pub fn nonlinear_estimation() -> Check {
    let t = Instant::now();
    let sys = DtSystem::Nonlinear(estimation_demo_system());
    let (w, v) = (estimation_demo_w(), estimation_demo_v());
    let rec = ok(simulate(&sys, &estimation_demo_x0(), 100, &w, &v, &[], 7), "simulate")?;
    let mut finals = Vec::new();
    for method in EstimatorMethod::NONLINEAR {
        let cfg = EstimatorConfig {
            method,
            w: w.clone(),
            v: v.clone(),
            limits: Limits::default(),
            x0: ZonoSet::Zonotope(estimation_demo_x0_set()),
            admissible: None,
        };
        let log = ok(run_estimator(&sys, &cfg, &rec, &[]), "estimator")?;
        ensure!(log.len() == 101, "{method}: {} log rows", log.len());
        for row in &log {
            ensure!(row.contains_truth, "{method}: true state escapes at k = {}", row.k);
            ensure!(!row.fault, "{method}: spurious fault at k = {}", row.k);
        }
        finals.push((method, log[100].volume));
    }
    let pr = finals.iter().find(|(m, _)| *m == EstimatorMethod::CzPr).unwrap().1;
    ensure!(finals.iter().all(|&(_, v)| pr <= v), "final volumes {finals:?}");
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 120.0, "took {secs:.1} s");
    let list: Vec<String> = finals.iter().map(|(m, v)| format!("{m} {v:.4}")).collect();
    Ok(format!("containment at all 101 steps; final volume {}; {secs:.1} s", list.join(", ")))
}

// ---------------------------------------------------------------- 4

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_system_with(rng: &mut ChaCha8Rng, n: usize, bw: DMatrix<f64>, ny: usize) -> LinearSystem {
    let mut a = normal(rng, n, n);
    let rho = spectral_radius(&a);
    a *= rng.random_range(0.6..0.98) / rho;
    LinearSystem::new(a, bw, normal(rng, n, 1), normal(rng, ny, n), DMatrix::identity(ny, ny)).unwrap()
}

fn random_system(rng: &mut ChaCha8Rng) -> LinearSystem {
    let n = rng.random_range(2..=3);
    let ny = rng.random_range(1..=2);
    random_system_with(rng, n, DMatrix::identity(n, n), ny)
}

fn inputs(n: usize) -> Vec<DVector<f64>> {
    (0..=n).map(|k| DVector::from_element(1, (0.3 * k as f64).sin())).collect()
}

fn config(method: EstimatorMethod, x0: ZonoSet, n: usize, ny: usize, limits: Limits) -> EstimatorConfig {
    EstimatorConfig {
        method,
        w: ball(n, 0.1),
        v: ball(ny, 0.1),
        limits,
        x0,
        admissible: None,
    }
}

pub fn linear_containment() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for s in 0..20 {
        let sys = random_system(&mut rng);
        let (n, ny) = (sys.nx(), sys.ny());
        let u = inputs(50);
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-0.9..0.9));
        let dt = DtSystem::Linear(sys);
        let rec = ok(simulate(&dt, &x0, 50, &ball(n, 0.1), &ball(ny, 0.1), &u, s), "simulate")?;
        for method in [EstimatorMethod::ZonStrip, EstimatorMethod::CzLinear, EstimatorMethod::LzLinear] {
            let cfg = config(method, ZonoSet::Zonotope(ball(n, 1.0)), n, ny, Limits::default());
            let log = ok(run_estimator(&dt, &cfg, &rec, &u), "estimator")?;
            for row in &log {
                ensure!(row.contains_truth, "system {s}, {method}: escape at k = {}", row.k);
                ensure!(!row.fault, "system {s}, {method}: fault at k = {}", row.k);
            }
        }
    }
    Ok("20 systems x 50 steps, strip/cz/lz contain the truth".into())
}

pub fn cz_inside_strip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for s in 0..5 {
        // One noise channel and one output keep the exact set small enough to carry.
        let n = rng.random_range(2..=3);
        let bw = normal(&mut rng, n, 1);
        let sys = random_system_with(&mut rng, n, bw, 1);
        let u = inputs(50);
        let dt = DtSystem::Linear(sys);
        let rec = ok(simulate(&dt, &DVector::zeros(n), 50, &ball(1, 0.1), &ball(1, 0.1), &u, s), "simulate")?;
        let cfg = |method, limits| EstimatorConfig {
            w: ball(1, 0.1),
            ..config(method, ZonoSet::Zonotope(ball(n, 1.0)), n, 1, limits)
        };
        let unlimited = Limits { ng: 100_000, nc: 100_000 };
        let mut cz = ok(Estimator::new(dt.clone(), cfg(EstimatorMethod::CzLinear, unlimited)), "cz")?;
        let mut strip = ok(Estimator::new(dt.clone(), cfg(EstimatorMethod::ZonStrip, Limits::default())), "strip")?;
        for (k, y) in rec.y.iter().enumerate() {
            ok(cz.step(&u[k], &u[k + 1], y), "cz step")?;
            ok(strip.step(&u[k], &u[k + 1], y), "strip step")?;
            let (Estimate::ConZonotope(inner), Estimate::Zonotope(outer)) = (&cz.state().updated, &strip.state().updated) else {
                return Err("estimate kinds follow the methods".into());
            };
            let hp = ok(outer.hrep(), "hrep")?;
            for p in ok(inner.sample(1000, &mut rng), "sample")? {
                let excess = (&hp.h * &p - &hp.k).max();
                ensure!(excess <= 1e-8 * (1.0 + hp.k.amax()), "system {s}, k = {k}: excess {excess}");
            }
        }
    }
    Ok("exact cz inside strip estimate, 5 systems x 50 steps x 1000 samples".into())
}

/// `E = diag(1, …, 1, 0)` with a noise-free algebraic row.
fn random_descriptor(rng: &mut ChaCha8Rng) -> DescriptorSystem {
    let n = rng.random_range(2..=3);
    let mut e = DMatrix::identity(n, n);
    e[(n - 1, n - 1)] = 0.0;
    let mut a = normal(rng, n, n) * 0.4;
    a[(n - 1, n - 1)] = if a[(n - 1, n - 1)] >= 0.0 { 1.0 } else { -1.0 };
    let mut bw = DMatrix::identity(n, n);
    bw[(n - 1, n - 1)] = 0.0;
    let mut bu = normal(rng, n, 1);
    bu[(n - 1, 0)] = 0.0;
    let c = normal(rng, 1, n);
    DescriptorSystem::new(e, LinearSystem::new(a, bw, bu, c, DMatrix::identity(1, 1)).unwrap()).unwrap()
}

pub fn descriptor_static_rows() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for s in 0..5 {
        let sys = random_descriptor(&mut rng);
        let n = sys.linear.nx();
        let row = DMatrix::from_rows(&[sys.linear.a.row(n - 1).into_owned()]);
        // Consistent start: the algebraic row vanishes at x0.
        let mut x0 = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
        x0[n - 1] = -(row.columns(0, n - 1) * x0.rows(0, n - 1))[0] / row[(0, n - 1)];
        let dt = DtSystem::Descriptor(sys.clone());
        let u = inputs(30);
        let rec = ok(simulate(&dt, &x0, 30, &ball(n, 0.05), &ball(1, 0.05), &u, s), "simulate")?;
        let start = ZonoSet::Zonotope(Zonotope {
            g: DMatrix::identity(n, n) * 0.5,
            c: x0.map(|v| v + 0.1),
        });
        for method in [EstimatorMethod::CzDescriptor, EstimatorMethod::LzDescriptor] {
            let mut cfg = config(method, start.clone(), n, 1, Limits::default());
            cfg.w = ball(n, 0.05);
            cfg.v = ball(1, 0.05);
            cfg.admissible = Some(IntervalVector::from_bounds(&vec![-50.0; n], &vec![50.0; n]).unwrap());
            let mut est = ok(Estimator::new(dt.clone(), cfg), "estimator")?;
            for (k, y) in rec.y.iter().enumerate() {
                let st = ok(est.step(&u[k], &u[k + 1], y), "step")?;
                ensure!(!st.fault, "system {s}, {method}: fault at k = {k}");
                ensure!(st.updated.is_inside(&rec.x[k + 1]).unwrap(), "system {s}, {method}: escape at k = {k}");
                let image = match &st.updated {
                    Estimate::ConZonotope(z) => ok(z.linmap(&row).and_then(|i| i.interval_hull()), "image")?,
                    Estimate::LineZonotope(z) => ok(z.linmap(&row).and_then(|i| i.interval_hull()), "image")?,
                    Estimate::Zonotope(_) => return Err("descriptor estimates are constrained".into()),
                };
                let r = image.get(0);
                worst = worst.max(r.lo.abs().max(r.hi.abs()));
                ensure!(worst <= 1e-8, "system {s}, {method}, k = {k}: static row spans {r}");
            }
        }
    }
    Ok(format!("descriptor static rows within {worst:.1e} over 5 systems x 30 steps"))
}

pub fn lz_becomes_bounded() -> Check {
    // Observable pair with observability index 2.
    let sys = LinearSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.8]),
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 1),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    let dt = DtSystem::Linear(sys);
    let rec = ok(simulate(&dt, &DVector::from_row_slice(&[1.0, -1.0]), 5, &ball(2, 0.1), &ball(1, 0.1), &[], 9), "simulate")?;
    let cfg = config(EstimatorMethod::LzLinear, ZonoSet::LineZonotope(LineZonotope::realset(2)), 2, 1, Limits::default());
    let mut est = ok(Estimator::new(dt, cfg), "estimator")?;
    let zero = DVector::zeros(1);
    for (k, y) in rec.y.iter().enumerate() {
        let st = ok(est.step(&zero, &zero, y), "step")?;
        let bounded = match st.updated.interval_hull() {
            Ok(h) => h.is_bounded(),
            Err(Error::UnboundedSet) => false,
            Err(e) => return Err(format!("hull: {e}")),
        };
        ensure!(bounded == (k >= 1), "bounded = {bounded} after {} measurements", k + 1);
        ensure!(st.updated.is_inside(&rec.x[k + 1]).unwrap(), "escape at k = {k}");
    }
    Ok("lz from the whole plane is bounded after 2 measurements".into())
}

pub fn linear_and_descriptor() -> Check {
    let parts = [linear_containment()?, cz_inside_strip()?, descriptor_static_rows()?, lz_becomes_bounded()?];
    Ok(parts.join("; "))
}

// ---------------------------------------------------------------- 5

/// Separating-axis test in the plane: is the origin at ∞-distance at least
/// `eps` from the zonotope with center `c` and generators `g`?
fn origin_clear_2d(c: &DVector<f64>, g: &DMatrix<f64>, eps: f64) -> bool {
    let mut gens: Vec<[f64; 2]> = g.column_iter().map(|col| [col[0], col[1]]).collect();
    gens.push([eps, 0.0]);
    gens.push([0.0, eps]);
    gens.iter().any(|gen| {
        let n = [-gen[1], gen[0]];
        let reach: f64 = gens.iter().map(|q| (n[0] * q[0] + n[1] * q[1]).abs()).sum();
        (n[0] * c[0] + n[1] * c[1]).abs() >= reach
    })
}

/// Smallest `‖ũ‖∞` on the grid of step `step` over `[−1, 1]²` that separates
/// the two tubes of a family with two-dimensional stacked outputs.
pub fn afd_grid_optimum(fam: &ModelFamily, step: f64) -> Option<f64> {
    let (t1, t2) = (fam.tube(0).unwrap(), fam.tube(1).unwrap());
    let g = DMatrix::from_columns(&t1.g.column_iter().chain(t2.g.column_iter()).collect::<Vec<_>>());
    let n = (1.0 / step).round() as i64;
    let mut best: Option<f64> = None;
    for a in -n..=n {
        for b in -n..=n {
            let u = DVector::from_row_slice(&[a as f64 * step, b as f64 * step]);
            let c = t1.center(&u).unwrap() - t2.center(&u).unwrap();
            if origin_clear_2d(&c, &g, fam.eps) {
                let norm = u.amax();
                best = Some(best.map_or(norm, |v: f64| v.min(norm)));
            }
        }
    }
    best
}

pub fn fault_diagnosis() -> Check {
    let fam = afd_demo_family();
    let t = Instant::now();
    let design = ok(design_separating_input(&fam), "design")?;
    let secs = t.elapsed().as_secs_f64();
    for cert in &design.certificates {
        ensure!(cert.separated && cert.distance >= fam.eps * (1.0 - 1e-9), "certificate {cert:?}");
    }
    let zero = ok(certify(&fam, &DVector::zeros(fam.input_len())), "certify")?;
    ensure!(zero.iter().all(|c| !c.separated && c.distance < 1e-9), "zero input: {zero:?}");
    let oracle = afd_grid_optimum(&fam, 0.01).ok_or("grid finds no separating input")?;
    ensure!(
        (design.objective - oracle).abs() <= 0.01 + 1e-9,
        "milp {} vs grid {oracle}",
        design.objective
    );
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!(
        "|u| = {:.4} (grid {oracle:.2}), certificates separated, zero input overlaps, {secs:.2} s",
        design.objective
    ))
}

// ---------------------------------------------------------------- 6

/// ξ-grid oracle for a CZ with three generators and one constraint: the
/// constraint is solved for the generator with the largest coefficient and
/// the other two run over a grid.
struct XiGrid {
    images: Vec<DVector<f64>>,
    spacing: f64,
}

fn xi_grid(z: &ConZonotope, per_dim: usize) -> XiGrid {
    let a = z.a.row(0);
    let j = (0..3).max_by(|&p, &q| a[p].abs().total_cmp(&a[q].abs())).unwrap();
    let free: Vec<usize> = (0..3).filter(|&i| i != j).collect();
    let h = 2.0 / (per_dim - 1) as f64;
    let mut images = Vec::new();
    for p in 0..per_dim {
        for q in 0..per_dim {
            let mut xi = DVector::zeros(3);
            xi[free[0]] = -1.0 + h * p as f64;
            xi[free[1]] = -1.0 + h * q as f64;
            xi[j] = (z.b[0] - a[free[0]] * xi[free[0]] - a[free[1]] * xi[free[1]]) / a[j];
            if xi[j].abs() <= 1.0 {
                images.push(&z.c + &z.g * &xi);
            }
        }
    }
    // A grid step in the free coordinates moves the image by at most this much.
    let lip: f64 = free
        .iter()
        .map(|&i| (z.g.column(i) - z.g.column(j) * (a[i] / a[j])).amax())
        .sum();
    XiGrid { images, spacing: h * lip }
}

pub fn set_query_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut empties, mut inside, mut outside) = (0, 0, 0);
    for case in 0..50 {
        let g = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_fn(1, 3, |_, _| rng.random_range(-1.0f64..1.0));
        let l1: f64 = a.iter().map(|v| v.abs()).sum();
        let b = if case % 3 == 0 { rng.random_range(1.1..1.5) } else { rng.random_range(-0.9..0.9) } * l1;
        let z = ConZonotope::new(g, DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)), a, DVector::from_element(1, b)).unwrap();
        let grid = xi_grid(&z, 81);
        let empty = ok(z.is_empty(), "is_empty")?;
        ensure!(empty == grid.images.is_empty(), "case {case}: is_empty {empty}, grid has {} points", grid.images.len());
        if empty {
            empties += 1;
            continue;
        }
        let hull = ok(z.interval_hull(), "hull")?;
        for _ in 0..40 {
            let p = DVector::from_fn(2, |i, _| rng.random_range(hull.get(i).lo - 0.3..hull.get(i).hi + 0.3));
            let d = grid.images.iter().map(|q| (q - &p).amax()).fold(f64::INFINITY, f64::min);
            let verdict = ok(z.is_inside(&p), "is_inside")?;
            if d < 1e-12 {
                ensure!(verdict, "case {case}: grid image {p} reported outside");
                inside += 1;
            } else if d > grid.spacing {
                ensure!(!verdict, "case {case}: {p} at grid distance {d} reported inside");
                outside += 1;
            }
        }
        for q in grid.images.iter().step_by(97) {
            ensure!(ok(z.is_inside(q), "is_inside")?, "case {case}: grid image {q} reported outside");
            inside += 1;
        }
    }
    Ok(format!("50 CZs: {empties} empty, {inside} inside and {outside} outside verdicts agree with the grid"))
}

pub fn volume_vs_monte_carlo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let n = 2 + case % 2;
        let ng = rng.random_range(n..=n + 3);
        let z = Zonotope {
            g: DMatrix::from_fn(n, ng, |_, _| rng.random_range(-1.0..1.0)),
            c: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
        };
        let exact = ok(z.exact_volume(100_000), "volume")?;
        let hp = ok(z.hrep(), "hrep")?;
        let hull = z.interval_hull();
        let boxvol: f64 = hull.diam().iter().product();
        // Sample until enough hits that the relative error is well below 1%.
        let (mut samples, mut hits) = (0usize, 0usize);
        while hits < 100_000 && samples < 20_000_000 {
            let p = DVector::from_fn(n, |i, _| rng.random_range(hull.get(i).lo..=hull.get(i).hi));
            samples += 1;
            if hp.contains(&p, 0.0) {
                hits += 1;
            }
        }
        let mc = boxvol * hits as f64 / samples as f64;
        let rel = (mc - exact).abs() / exact;
        worst = worst.max(rel);
        ensure!(rel < 0.02, "case {case}: exact {exact}, Monte Carlo {mc}");
    }
    Ok(format!("20 zonotope volumes within {:.2}% of Monte Carlo", 100.0 * worst))
}

pub fn jacobian_vs_differences() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for f in [propagate_demo_dag(), estimation_demo_g()] {
        let n = f.n_inputs();
        for _ in 0..50 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-2.0..3.0));
            let j = ok(f.jacobian_real(&x), "jacobian")?;
            for k in 0..n {
                let h = 1e-5 * (1.0 + x[k].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let fd = (f.eval_real(&xp).unwrap() - f.eval_real(&xm).unwrap()) / (2.0 * h);
                for i in 0..f.n_outputs() {
                    let err = (fd[i] - j[(i, k)]).abs() / j[(i, k)].abs().max(1.0);
                    worst = worst.max(err);
                    ensure!(err < 1e-6, "d f{i}/dx{k} at {x}: {} vs {}", j[(i, k)], fd[i]);
                }
            }
        }
    }
    Ok(format!("jacobians match central differences, worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------- 7

fn random_interval(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Interval {
    let a = rng.random_range(lo..hi);
    let b = if rng.random_bool(0.1) { a } else { rng.random_range(lo..hi) };
    Interval::spanning(a, b)
}

fn pick(rng: &mut ChaCha8Rng, x: Interval) -> f64 {
    match rng.random_range(0..6) {
        0 => x.lo,
        1 => x.hi,
        _ => rng.random_range(x.lo..=x.hi),
    }
}

fn encloses(y: Interval, v: f64) -> bool {
    let slack = 1e-12 * (1.0 + v.abs());
    y.lo - slack <= v && v <= y.hi + slack
}

pub fn interval_inclusion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let unary = [
        UnaryFn::Sqr,
        UnaryFn::Pow(3),
        UnaryFn::Pow(4),
        UnaryFn::Pow(5),
        UnaryFn::Sqrt,
        UnaryFn::Exp,
        UnaryFn::Log,
        UnaryFn::Sin,
        UnaryFn::Cos,
        UnaryFn::Tan,
        UnaryFn::Abs,
    ];
    let binary = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];
    for case in 0..100_000 {
        if case % 3 == 0 {
            let op = binary[rng.random_range(0..binary.len())];
            let x = random_interval(&mut rng, -10.0, 10.0);
            let mut y = random_interval(&mut rng, -10.0, 10.0);
            if op == BinaryOp::Div && y.contains_zero() {
                y = random_interval(&mut rng, 0.1, 10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
            let (a, b) = (pick(&mut rng, x), pick(&mut rng, y));
            let (fx, v) = match op {
                BinaryOp::Add => (x + y, a + b),
                BinaryOp::Sub => (x - y, a - b),
                BinaryOp::Mul => (x * y, a * b),
                BinaryOp::Div => (ok(x.checked_div(&y), "div")?, a / b),
            };
            ensure!(encloses(fx, v), "{op:?}: {a} in {x}, {b} in {y}, value {v} outside {fx}");
        } else {
            let op = unary[rng.random_range(0..unary.len())];
            let x = match op {
                UnaryFn::Sqrt | UnaryFn::Log => random_interval(&mut rng, 1e-3, 20.0),
                UnaryFn::Exp => random_interval(&mut rng, -20.0, 20.0),
                UnaryFn::Tan => {
                    let k = f64::from(rng.random_range(-3..=3)) * std::f64::consts::PI;
                    random_interval(&mut rng, -1.5, 1.5) + k
                }
                _ => random_interval(&mut rng, -10.0, 10.0),
            };
            let a = pick(&mut rng, x);
            let fx = ok(op.apply(x), "apply")?;
            let v = op.apply_real(a);
            ensure!(encloses(fx, v), "{op:?}: {a} in {x}, value {v} outside {fx}");
        }
    }
    Ok("100000 random (op, X, x) triples satisfy f(x) in F(X)".into())
}

// ---------------------------------------------------------------- 8

fn single(op: UnaryOp) -> FuncDag {
    let mut b = DagBuilder::new(1);
    let x = b.input(0);
    let y = b.unary(op, x);
    b.build(&[y])
}

pub fn relaxation_corpus() -> Vec<(&'static str, FuncDag, IntervalVector)> {
    let f_dom = propagate_demo_set().interval_hull().unwrap();
    let g_dom = IntervalVector::from_bounds(&[4.0, -0.5, -0.2, -0.2], &[6.0, 1.5, 0.2, 0.2]).unwrap();
    let xy = {
        let mut b = DagBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let m = b.mul(x, y);
        b.build(&[m])
    };
    vec![
        ("f", propagate_demo_dag(), f_dom),
        ("g", estimation_demo_g(), g_dom),
        ("x^2", single(UnaryOp::Sqr), IntervalVector::from_bounds(&[-1.5], &[2.0]).unwrap()),
        ("xy", xy, IntervalVector::from_bounds(&[-1.0, 0.5], &[2.0, 3.0]).unwrap()),
        ("exp", single(UnaryOp::Exp), IntervalVector::from_bounds(&[-1.0], &[2.0]).unwrap()),
        ("log", single(UnaryOp::Log), IntervalVector::from_bounds(&[0.2], &[5.0]).unwrap()),
        ("sin", single(UnaryOp::Sin), IntervalVector::from_bounds(&[-2.0], &[2.5]).unwrap()),
    ]
}

pub fn relaxation_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for (name, f, dom) in relaxation_corpus() {
        let rel = ok(relax_function(&f, &dom), "relax")?;
        let (lo, hi) = (rel.z.lo(), rel.z.hi());
        for x in dom.sample(10_000, Default::default(), &mut rng) {
            let t = DVector::from_vec(ok(f.trace(x.as_slice()), "trace")?);
            ensure!(rel.p.contains(&t, 1e-8), "{name}: trace at {x} violates a row");
            for i in 0..t.len() {
                let slack = 1e-8 * (1.0 + t[i].abs());
                ensure!(lo[i] - slack <= t[i] && t[i] <= hi[i] + slack, "{name}: factor {i} = {} outside its slot", t[i]);
            }
        }
    }
    Ok("10000 traces for each of f, g, x^2, xy, exp, log, sin satisfy every row and slot".into())
}
