//! Brute-force oracles for the LP and MILP solvers, shared with the
//! acceptance target.
#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonoset_optim::{solve_lp, solve_milp, LinearProgram, LpOutcome, MilpOutcome, MixedIntegerProgram};

/// Rows `a·x <= b` and `a·x = b` gathered from the whole program.
struct Polyhedron {
    ineq: Vec<(DVector<f64>, f64)>,
    eq: Vec<(DVector<f64>, f64)>,
}

fn polyhedron(lp: &LinearProgram) -> Polyhedron {
    let n = lp.num_vars();
    let mut ineq = Vec::new();
    for i in 0..lp.ineq_matrix.nrows() {
        ineq.push((lp.ineq_matrix.row(i).transpose(), lp.ineq_rhs[i]));
    }
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        if lp.upper[j].is_finite() {
            ineq.push((e.clone(), lp.upper[j]));
        }
        if lp.lower[j].is_finite() {
            ineq.push((-e, -lp.lower[j]));
        }
    }
    let eq = (0..lp.eq_matrix.nrows())
        .map(|i| (lp.eq_matrix.row(i).transpose(), lp.eq_rhs[i]))
        .collect();
    Polyhedron { ineq, eq }
}

/// Minimum of the objective over all basic feasible solutions, or None if no
/// vertex exists. Only valid for bounded feasible regions.
pub fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let p = polyhedron(lp);
    let mut best: Option<f64> = None;
    // Equality rows may be redundant, so try every active-set size.
    let subsets = (0..=n).flat_map(|k| (0..p.ineq.len()).combinations(k));
    for active in subsets {
        let rows: Vec<&(DVector<f64>, f64)> = p.eq.iter().chain(active.iter().map(|&i| &p.ineq[i])).collect();
        if rows.len() < n {
            continue;
        }
        let m = DMatrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]);
        let rhs = DVector::from_fn(rows.len(), |r, _| rows[r].1);
        let svd = m.clone().svd(true, true);
        if svd.rank(1e-9) < n {
            continue;
        }
        let Ok(x) = svd.solve(&rhs, 1e-12) else { continue };
        if (&m * &x - &rhs).amax() > 1e-7 {
            continue;
        }
        let feasible = p.ineq.iter().all(|(a, b)| a.dot(&x) <= b + 1e-7)
            && p.eq.iter().all(|(a, b)| (a.dot(&x) - b).abs() <= 1e-7);
        if feasible {
            let v = lp.objective.dot(&x);
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=5);
    let m_in = rng.random_range(0..=8);
    let m_eq = rng.random_range(0..=2.min(n));
    let gen = |rng: &mut ChaCha8Rng, r: usize| {
        DMatrix::from_fn(r, n, |_, _| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
    };
    let a_in = gen(rng, m_in);
    let a_eq = gen(rng, m_eq);
    // Anchor the rows at a random point so most instances are feasible.
    let anchor = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let slack = DVector::from_fn(m_in, |_, _| rng.random_range(-0.5..3.0));
    let b_in = &a_in * &anchor + slack;
    let b_eq = &a_eq * &anchor;
    let lower = DVector::from_fn(n, |_, _| rng.random_range(-5.0..-1.0));
    let upper = DVector::from_fn(n, |_, _| rng.random_range(1.0..5.0));
    LinearProgram::new(n)
        .with_objective(DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)))
        .with_inequalities(a_in, b_in)
        .with_equalities(a_eq, b_eq)
        .with_bounds(lower, upper)
}

pub fn lp_vs_vertex_enumeration() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut optimal = 0;
    for case in 0..100 {
        let lp = random_lp(&mut rng);
        let oracle = vertex_oracle(&lp);
        match (solve_lp(&lp).unwrap(), oracle) {
            (LpOutcome::Optimal(s), Some(v)) => {
                if (s.objective - v).abs() > 1e-6 * (1.0 + v.abs()) {
                    return Err(format!("lp case {case}: {} vs {v}", s.objective));
                }
                if lp.max_violation(&s.x) >= 1e-8 {
                    return Err(format!("lp case {case}: infeasible point"));
                }
                optimal += 1;
            }
            (LpOutcome::Infeasible, None) => {}
            (got, want) => return Err(format!("lp case {case}: solver {got:?}, oracle {want:?}")),
        }
    }
    if optimal <= 50 {
        return Err(format!("only {optimal} of 100 instances had an optimum"));
    }
    Ok(format!("100 LPs agree with vertex enumeration ({optimal} optimal)"))
}

pub fn milp_vs_exhaustive() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut solved = 0;
    for case in 0..50 {
        let n_bin = rng.random_range(1..=6);
        let n_cont = rng.random_range(0..=2);
        let n = n_bin + n_cont;
        let m = rng.random_range(1..=4);
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-3.0..3.0));
        let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..3.0));
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let lower = DVector::from_fn(n, |j, _| if j < n_bin { 0.0 } else { -2.0 });
        let upper = DVector::from_fn(n, |j, _| if j < n_bin { 1.0 } else { 2.0 });
        let lp = LinearProgram::new(n)
            .with_objective(c)
            .with_inequalities(a, b)
            .with_bounds(lower, upper);

        let mut oracle: Option<f64> = None;
        for mask in 0..(1u32 << n_bin) {
            // Substitute the binaries and enumerate vertices of the continuous part.
            let fixed: Vec<f64> = (0..n_bin).map(|j| f64::from((mask >> j) & 1)).collect();
            let shift: f64 = (0..n_bin).map(|j| lp.objective[j] * fixed[j]).sum();
            let a_cont = lp.ineq_matrix.columns(n_bin, n_cont).into_owned();
            let b_cont = DVector::from_fn(m, |i, _| {
                lp.ineq_rhs[i] - (0..n_bin).map(|j| lp.ineq_matrix[(i, j)] * fixed[j]).sum::<f64>()
            });
            let value = if n_cont == 0 {
                b_cont.iter().all(|&v| v >= -1e-9).then_some(0.0)
            } else {
                let sub = LinearProgram::new(n_cont)
                    .with_objective(lp.objective.rows(n_bin, n_cont).into_owned())
                    .with_inequalities(a_cont, b_cont)
                    .with_bounds(DVector::from_element(n_cont, -2.0), DVector::from_element(n_cont, 2.0));
                vertex_oracle(&sub)
            };
            if let Some(v) = value {
                oracle = Some(oracle.map_or(v + shift, |o: f64| o.min(v + shift)));
            }
        }
        let out = solve_milp(&MixedIntegerProgram::new(lp.clone(), (0..n_bin).collect())).unwrap();
        match (out, oracle) {
            (MilpOutcome::Optimal(s), Some(v)) => {
                if (s.objective - v).abs() >= 1e-6 * (1.0 + v.abs()) {
                    return Err(format!("milp case {case}: {} vs {v}", s.objective));
                }
                if lp.max_violation(&s.x) >= 1e-8 || (0..n_bin).any(|j| s.x[j] != 0.0 && s.x[j] != 1.0) {
                    return Err(format!("milp case {case}: bad point {}", s.x));
                }
                solved += 1;
            }
            (MilpOutcome::Infeasible, None) => {}
            (got, want) => return Err(format!("milp case {case}: solver {got:?}, oracle {want:?}")),
        }
    }
    if solved <= 20 {
        return Err(format!("only {solved} of 50 instances had an optimum"));
    }
    Ok(format!("50 MILPs agree with exhaustive enumeration ({solved} optimal)"))
}

