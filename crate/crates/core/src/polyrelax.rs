//! Polyhedral relaxations of factorable functions over a box, and the
//! constrained-zonotope enclosure built from them.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcdag::{BinaryOp, FuncDag, Node, Scalar, UnaryOp};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::select_rows;
use crate::setrep::{ConZonotope, HPolytope};

type Row = Vec<(usize, f64)>;

/// Factor bounds and halfspace relaxation accumulated node by node.
#[derive(Debug, Clone, Default)]
pub struct RelaxTape {
    z: Vec<Interval>,
    ineq: Vec<(Row, f64)>,
    eq: Vec<(Row, f64)>,
    fallbacks: Vec<usize>,
}

/// Result of relaxing a DAG: `Z`, `P` over the factor space, and the
/// factor indices of the DAG's inputs and outputs.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub z: IntervalVector,
    pub p: HPolytope,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// Factors whose univariate op fell back to interval-bound rows.
    pub fallbacks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Curvature {
    Convex,
    Concave,
    Neither,
}

impl RelaxTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.z
    }

    fn push(&mut self, z: Interval) -> usize {
        self.z.push(z);
        self.z.len() - 1
    }

    /// New factor with the given bounds and no relaxation rows.
    pub fn input(&mut self, x: Interval) -> usize {
        self.push(x)
    }

    pub fn constant(&mut self, v: f64) -> usize {
        let j = self.push(Interval::point(v));
        self.eq.push((vec![(j, 1.0)], v));
        j
    }

    fn bound_rows(&mut self, j: usize) {
        let z = self.z[j];
        self.ineq.push((vec![(j, 1.0)], z.hi));
        self.ineq.push((vec![(j, -1.0)], -z.lo));
    }

    fn constant_value(&self, j: usize) -> Option<f64> {
        self.eq
            .iter()
            .find(|(row, _)| row.len() == 1 && row[0] == (j, 1.0))
            .map(|&(_, v)| v)
    }

    pub fn binary(&mut self, op: BinaryOp, a: usize, b: usize) -> Result<usize> {
        let (x, y) = (self.z[a], self.z[b]);
        let j = match op {
            BinaryOp::Add => {
                let j = self.push(x + y);
                self.eq.push((vec![(j, 1.0), (a, -1.0), (b, -1.0)], 0.0));
                j
            }
            BinaryOp::Sub => {
                let j = self.push(x - y);
                self.eq.push((vec![(j, 1.0), (a, -1.0), (b, 1.0)], 0.0));
                j
            }
            BinaryOp::Mul => {
                let j = self.push(x * y);
                if let Some(k) = self.constant_value(a) {
                    self.eq.push((vec![(j, 1.0), (b, -k)], 0.0));
                } else if let Some(k) = self.constant_value(b) {
                    self.eq.push((vec![(j, 1.0), (a, -k)], 0.0));
                } else {
                    self.mccormick(j, a, b, x, y);
                }
                j
            }
            BinaryOp::Div => {
                let q = x.checked_div(&y).map_err(|_| {
                    Error::DomainViolation(format!("division by an interval containing zero: {y}"))
                })?;
                let j = self.push(q);
                if let Some(k) = self.constant_value(b) {
                    self.eq.push((vec![(j, 1.0), (a, -1.0 / k)], 0.0));
                } else {
                    // z = x/y is the product relation z·y = x.
                    self.mccormick(a, j, b, q, y);
                }
                j
            }
        };
        Ok(j)
    }

    /// The four McCormick inequalities for `w = u·v`, `u ∈ x`, `v ∈ y`.
    fn mccormick(&mut self, w: usize, u: usize, v: usize, x: Interval, y: Interval) {
        let rows = [
            (vec![(u, y.lo), (v, x.lo), (w, -1.0)], x.lo * y.lo),
            (vec![(u, y.hi), (v, x.hi), (w, -1.0)], x.hi * y.hi),
            (vec![(w, 1.0), (u, -y.lo), (v, -x.hi)], -x.hi * y.lo),
            (vec![(w, 1.0), (u, -y.hi), (v, -x.lo)], -x.lo * y.hi),
        ];
        self.ineq.extend(rows.into_iter().map(|(row, k)| (merge(row), k)));
    }

    pub fn unary(&mut self, op: UnaryOp, a: usize) -> Result<usize> {
        let x = self.z[a];
        let z = apply_interval(op, x)?;
        let j = self.push(z);
        match op {
            UnaryOp::Neg => {
                self.eq.push((vec![(j, 1.0), (a, 1.0)], 0.0));
                return Ok(j);
            }
            UnaryOp::Pow(0) => {
                self.eq.push((vec![(j, 1.0)], 1.0));
                return Ok(j);
            }
            UnaryOp::Pow(1) => {
                self.eq.push((vec![(j, 1.0), (a, -1.0)], 0.0));
                return Ok(j);
            }
            _ => {}
        }
        let curv = curvature(op, x);
        if x.lo == x.hi || curv == Curvature::Neither {
            self.fallbacks.push(j);
            self.bound_rows(j);
            if x.lo < x.hi {
                self.curvature_tangents(op, a, j, x);
            }
            return Ok(j);
        }
        let (l, u) = (x.lo, x.hi);
        let (fl, fu) = (value(op, l), value(op, u));
        let slope = (fu - fl) / (u - l);
        // Secant bounds z on one side, tangents on the other.
        let (secant_sign, tangent_sign) = if curv == Curvature::Convex { (1.0, -1.0) } else { (-1.0, 1.0) };
        self.ineq.push((
            vec![(j, secant_sign), (a, -secant_sign * slope)],
            secant_sign * (fl - slope * l),
        ));
        for t in [l, 0.5 * (l + u), u] {
            let Some(d) = derivative(op, t) else { continue };
            let ft = value(op, t);
            if !d.is_finite() || !ft.is_finite() {
                continue;
            }
            // Convex: f(t) + d(x − t) ≤ z.
            self.ineq.push((
                vec![(j, tangent_sign), (a, -tangent_sign * d)],
                tangent_sign * (ft - d * t),
            ));
        }
        Ok(j)
    }

    /// Tangents shifted by `½·f''·r²`, with `f''` bounded over `x`; valid
    /// without a fixed curvature sign.
    fn curvature_tangents(&mut self, op: UnaryOp, a: usize, j: usize, x: Interval) {
        let Ok((_, _, d2)) = x.unary(op, 2) else { return };
        if !d2.lo.is_finite() || !d2.hi.is_finite() {
            return;
        }
        let (l, u) = (x.lo, x.hi);
        for t in [l, 0.5 * (l + u), u] {
            let Some(d) = derivative(op, t) else { continue };
            let ft = value(op, t);
            if !d.is_finite() || !ft.is_finite() {
                continue;
            }
            let r2 = (t - l).max(u - t).powi(2);
            let slack = 1e-12 * (1.0 + ft.abs() + d.abs() * t.abs());
            let below = 0.5 * d2.lo.min(0.0) * r2 - slack;
            let above = 0.5 * d2.hi.max(0.0) * r2 + slack;
            // ft + d(x − t) + below ≤ z ≤ ft + d(x − t) + above
            self.ineq.push((vec![(j, -1.0), (a, d)], d * t - ft - below));
            self.ineq.push((vec![(j, 1.0), (a, -d)], ft - d * t + above));
        }
    }

    pub fn to_hpolytope(&self) -> HPolytope {
        let nf = self.len();
        let dense = |rows: &[(Row, f64)]| {
            let mut m = DMatrix::zeros(rows.len(), nf);
            for (i, (row, _)) in rows.iter().enumerate() {
                for &(j, v) in row {
                    m[(i, j)] += v;
                }
            }
            (m, DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1)))
        };
        let (h, k) = dense(&self.ineq);
        let (aeq, beq) = dense(&self.eq);
        HPolytope { h, k, aeq, beq }
    }
}

fn merge(row: Row) -> Row {
    let mut out: Row = Vec::with_capacity(row.len());
    for (j, v) in row {
        match out.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += v,
            None => out.push((j, v)),
        }
    }
    out
}

fn apply_interval(op: UnaryOp, x: Interval) -> Result<Interval> {
    Ok(match op {
        UnaryOp::Neg => -x,
        UnaryOp::Sqr => x.sqr(),
        UnaryOp::Pow(n) => x.powi(n),
        UnaryOp::Sqrt => x.sqrt()?,
        UnaryOp::Exp => x.exp(),
        UnaryOp::Log => x.ln()?,
        UnaryOp::Sin => x.sin(),
        UnaryOp::Cos => x.cos(),
        UnaryOp::Tan => x.tan()?,
        UnaryOp::Abs => x.abs(),
    })
}

fn value(op: UnaryOp, t: f64) -> f64 {
    match op {
        UnaryOp::Neg => -t,
        UnaryOp::Sqr => t * t,
        UnaryOp::Pow(n) => t.powi(n as i32),
        UnaryOp::Sqrt => t.max(0.0).sqrt(),
        UnaryOp::Exp => t.exp(),
        UnaryOp::Log => t.ln(),
        UnaryOp::Sin => t.sin(),
        UnaryOp::Cos => t.cos(),
        UnaryOp::Tan => t.tan(),
        UnaryOp::Abs => t.abs(),
    }
}

/// A (sub)gradient at `t`, if finite.
fn derivative(op: UnaryOp, t: f64) -> Option<f64> {
    let d = match op {
        UnaryOp::Neg => -1.0,
        UnaryOp::Sqr => 2.0 * t,
        UnaryOp::Pow(n) => n as f64 * t.powi(n as i32 - 1),
        UnaryOp::Sqrt => {
            if t <= 0.0 {
                return None;
            }
            0.5 / t.sqrt()
        }
        UnaryOp::Exp => t.exp(),
        UnaryOp::Log => {
            if t <= 0.0 {
                return None;
            }
            1.0 / t
        }
        UnaryOp::Sin => t.cos(),
        UnaryOp::Cos => -t.sin(),
        UnaryOp::Tan => 1.0 + t.tan().powi(2),
        UnaryOp::Abs => {
            if t == 0.0 {
                0.0
            } else {
                t.signum()
            }
        }
    };
    Some(d)
}

fn curvature(op: UnaryOp, x: Interval) -> Curvature {
    match op {
        UnaryOp::Sqr | UnaryOp::Exp | UnaryOp::Abs => Curvature::Convex,
        UnaryOp::Pow(n) if n % 2 == 0 => Curvature::Convex,
        UnaryOp::Pow(_) => {
            if x.lo >= 0.0 {
                Curvature::Convex
            } else if x.hi <= 0.0 {
                Curvature::Concave
            } else {
                Curvature::Neither
            }
        }
        UnaryOp::Sqrt | UnaryOp::Log => Curvature::Concave,
        UnaryOp::Sin => sine_curvature(x.lo, x.hi),
        UnaryOp::Cos => sine_curvature(x.lo + FRAC_PI_2, x.hi + FRAC_PI_2),
        UnaryOp::Tan => {
            let k = ((x.lo + x.hi) / 2.0 / PI).round() * PI;
            if x.lo >= k {
                Curvature::Convex
            } else if x.hi <= k {
                Curvature::Concave
            } else {
                Curvature::Neither
            }
        }
        UnaryOp::Neg => Curvature::Neither,
    }
}

/// sin is concave on `[2kπ, (2k+1)π]` and convex on `[(2k−1)π, 2kπ]`.
fn sine_curvature(l: f64, u: f64) -> Curvature {
    let k = (l / PI).floor();
    if u > (k + 1.0) * PI {
        return Curvature::Neither;
    }
    if (k as i64).rem_euclid(2) == 0 {
        Curvature::Concave
    } else {
        Curvature::Convex
    }
}

/// Relaxes every node of `dag` over `domain`, one factor per node.
pub fn relax_function(dag: &FuncDag, domain: &IntervalVector) -> Result<Relaxation> {
    if domain.dim() != dag.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: dag.n_inputs(),
            got: domain.dim(),
        });
    }
    let mut tape = RelaxTape::new();
    for node in dag.nodes() {
        match *node {
            Node::Input(i) => tape.input(domain.get(i)),
            Node::Const(c) => tape.constant(c),
            Node::Unary(op, a) => tape.unary(op, a)?,
            Node::Binary(op, a, b) => tape.binary(op, a, b)?,
        };
    }
    Ok(Relaxation {
        z: IntervalVector::from_intervals(&tape.z),
        p: tape.to_hpolytope(),
        inputs: (0..dag.n_inputs()).collect(),
        outputs: dag.outputs().to_vec(),
        fallbacks: tape.fallbacks,
    })
}

/// Encloses `f(X)` by lifting X into the factor space, intersecting with
/// the relaxation and projecting onto the output factors.
pub fn propagate_pr_cz(dag: &FuncDag, x: &ConZonotope) -> Result<ConZonotope> {
    let (cut, rel) = pr_lift(dag, x)?;
    let proj = ConZonotope {
        g: select_rows(&cut.g, &rel.outputs),
        c: DVector::from_iterator(rel.outputs.len(), rel.outputs.iter().map(|&o| cut.c[o])),
        a: cut.a,
        b: cut.b,
    };
    proj.compact()
}

/// The set of factor traces of X cut by the relaxation over `hull(X)`,
/// together with that relaxation.
pub fn pr_lift(dag: &FuncDag, x: &ConZonotope) -> Result<(ConZonotope, Relaxation)> {
    if x.dim() != dag.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: dag.n_inputs(),
            got: x.dim(),
        });
    }
    let hull = x.interval_hull()?;
    if !hull.is_bounded() {
        return Err(Error::UnboundedSet);
    }
    let rel = relax_function(dag, &hull)?;
    let lifted = lift_into_factors(x, &rel);
    let cut = lifted.intersect_halfspaces(&rel.p)?;
    Ok((cut, rel))
}

/// X on the input factors, an independent box generator per other factor.
fn lift_into_factors(x: &ConZonotope, rel: &Relaxation) -> ConZonotope {
    let nf = rel.z.dim();
    let free: Vec<usize> = (0..nf)
        .filter(|j| !rel.inputs.contains(j) && rel.z.get(*j).rad() > 0.0)
        .collect();
    let ng = x.ng() + free.len();
    let mut g = DMatrix::zeros(nf, ng);
    let mut c = rel.z.mid();
    for (i, &f) in rel.inputs.iter().enumerate() {
        g.view_mut((f, 0), (1, x.ng())).copy_from(&x.g.row(i));
        c[f] = x.c[i];
    }
    for (k, &f) in free.iter().enumerate() {
        g[(f, x.ng() + k)] = rel.z.get(f).rad();
    }
    let mut a = DMatrix::zeros(x.nc(), ng);
    a.view_mut((0, 0), (x.nc(), x.ng())).copy_from(&x.a);
    ConZonotope { g, c, a, b: x.b.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcdag::DagBuilder;

    fn single(op: UnaryOp) -> FuncDag {
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let y = b.unary(op, x);
        b.build(&[y])
    }

    fn feasible(p: &HPolytope, z: &DVector<f64>) -> bool {
        p.contains(z, 1e-9)
    }

    /// Range of factor `j` over P with the other listed factors pinned.
    fn factor_range(p: &HPolytope, pins: &[(usize, f64)], j: usize) -> (f64, f64) {
        let n = p.dim();
        let mut aeq = p.aeq.clone();
        let mut beq = p.beq.clone();
        for &(i, v) in pins {
            let mut row = DMatrix::zeros(1, n);
            row[(0, i)] = 1.0;
            aeq = crate::linalg::vcat(n, &[&aeq, &row]);
            beq = crate::linalg::vcat_vec(&[&beq, &DVector::from_element(1, v)]);
        }
        let q = HPolytope { h: p.h.clone(), k: p.k.clone(), aeq, beq };
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        let hi = q.support(&e).unwrap().0;
        let lo = -q.support(&(-e)).unwrap().0;
        (lo, hi)
    }

    #[test]
    fn square_relaxation_at_midpoint() {
        let rel = relax_function(&single(UnaryOp::Sqr), &IntervalVector::from_bounds(&[0.0], &[2.0]).unwrap()).unwrap();
        let (lo, hi) = factor_range(&rel.p, &[(0, 1.0)], 1);
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 2.0).abs() < 1e-9, "{lo} {hi}");
        for k in 0..=200 {
            let x = 2.0 * k as f64 / 200.0;
            assert!(feasible(&rel.p, &DVector::from_row_slice(&[x, x * x])));
        }
    }

    #[test]
    fn mccormick_is_exact_at_corners() {
        let mut b = DagBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let p = b.mul(x, y);
        let f = b.build(&[p]);
        let rel = relax_function(&f, &IntervalVector::from_bounds(&[0.0, 0.0], &[1.0, 1.0]).unwrap()).unwrap();
        let (lo, hi) = factor_range(&rel.p, &[(0, 1.0), (1, 1.0)], 2);
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn affine_is_exact() {
        let r = DMatrix::from_element(1, 1, 2.0);
        let f = FuncDag::affine(&r, &DVector::from_element(1, 1.0));
        let rel = relax_function(&f, &IntervalVector::from_bounds(&[-3.0], &[5.0]).unwrap()).unwrap();
        let (lo, hi) = factor_range(&rel.p, &[(0, 0.5)], rel.outputs[0]);
        assert!((lo - 2.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        let x = ConZonotope::from_interval(&IntervalVector::from_bounds(&[-1.0], &[1.0]).unwrap());
        let out = propagate_pr_cz(&f, &x).unwrap();
        let box_ = out.interval_hull().unwrap();
        assert!((box_.lo()[0] + 1.0).abs() < 1e-9 && (box_.hi()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn trig_fallback_and_curvature() {
        assert_eq!(curvature(UnaryOp::Sin, Interval::spanning(0.1, 3.0)), Curvature::Concave);
        assert_eq!(curvature(UnaryOp::Sin, Interval::spanning(-3.0, -0.1)), Curvature::Convex);
        assert_eq!(curvature(UnaryOp::Sin, Interval::spanning(-1.0, 1.0)), Curvature::Neither);
        assert_eq!(curvature(UnaryOp::Cos, Interval::spanning(-1.0, 1.0)), Curvature::Concave);
        assert_eq!(curvature(UnaryOp::Tan, Interval::spanning(0.0, 1.0)), Curvature::Convex);
        let rel = relax_function(&single(UnaryOp::Sin), &IntervalVector::from_bounds(&[-1.0], &[1.0]).unwrap()).unwrap();
        assert_eq!(rel.fallbacks, vec![1]);
    }

    #[test]
    fn traces_satisfy_every_row() {
        use rand::{Rng, SeedableRng};
        let ops = [
            UnaryOp::Sqr,
            UnaryOp::Pow(3),
            UnaryOp::Sqrt,
            UnaryOp::Exp,
            UnaryOp::Log,
            UnaryOp::Sin,
            UnaryOp::Cos,
            UnaryOp::Tan,
            UnaryOp::Abs,
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for op in ops {
            let mut b = DagBuilder::new(2);
            let (x, y) = (b.input(0), b.input(1));
            let u = b.unary(op, x);
            let d = b.div(u, y);
            let m = b.mul(d, x);
            let f = b.build(&[m]);
            let dom = IntervalVector::from_bounds(&[0.2, 1.0], &[1.3, 2.0]).unwrap();
            let rel = relax_function(&f, &dom).unwrap();
            for _ in 0..500 {
                let s = [rng.random_range(0.2..1.3), rng.random_range(1.0..2.0)];
                let t = DVector::from_vec(f.trace(&s).unwrap());
                assert!(feasible(&rel.p, &t), "{op:?} at {s:?}");
                assert!(rel.z.contains(&t).unwrap());
            }
        }
    }
}
