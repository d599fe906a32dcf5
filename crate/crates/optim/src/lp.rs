use nalgebra::{DMatrix, DVector};

use crate::{OptimError, Result};

/// `minimize objectiveᵀx` subject to `eq_matrix·x = eq_rhs`,
/// `ineq_matrix·x <= ineq_rhs` and `lower <= x <= upper`.
///
/// Bounds may be infinite. Blocks with zero rows are allowed and must still
/// carry the right number of columns.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl LinearProgram {
    /// An unconstrained program over `n` free variables with zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: DVector::zeros(n),
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_objective(mut self, c: DVector<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.eq_matrix = a;
        self.eq_rhs = b;
        self
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.ineq_matrix = a;
        self.ineq_rhs = b;
        self
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let checks = [
            (self.eq_matrix.ncols() == n, "equality matrix columns"),
            (self.eq_matrix.nrows() == self.eq_rhs.len(), "equality rhs length"),
            (self.ineq_matrix.ncols() == n, "inequality matrix columns"),
            (self.ineq_matrix.nrows() == self.ineq_rhs.len(), "inequality rhs length"),
            (self.lower.len() == n, "lower bound length"),
            (self.upper.len() == n, "upper bound length"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(OptimError::Shape(what.to_string()));
            }
        }
        Ok(())
    }

    /// Maximum violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        if self.eq_matrix.nrows() > 0 {
            let r = &self.eq_matrix * x - &self.eq_rhs;
            worst = worst.max(r.amax());
        }
        if self.ineq_matrix.nrows() > 0 {
            let r = &self.ineq_matrix * x - &self.ineq_rhs;
            worst = worst.max(r.max().max(0.0));
        }
        for i in 0..x.len() {
            worst = worst.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Multipliers of the equality rows (Lagrangian `cᵀx − yᵀ(Ax − b)`).
    pub eq_duals: DVector<f64>,
    /// Multipliers of the inequality rows, nonpositive at optimality.
    pub ineq_duals: DVector<f64>,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpOutcome::Infeasible)
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// Row entries below this fraction of the row's largest are dropped.
const DROP_TOL: f64 = 1e-14;
/// Rows this small relative to the whole matrix count as zero rows.
const ZERO_ROW_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 100_000;
const REINVERT_EVERY: usize = 50;
const BLAND_AFTER: usize = 500;

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lo + y
    Shift { col: usize, lo: f64 },
    /// x = hi − y
    Mirror { col: usize, hi: f64 },
    /// x = y⁺ − y⁻
    Split { pos: usize, neg: usize },
}

/// Solves `lp` with a two-phase bounded-variable primal simplex.
///
/// Pivoting uses the largest reduced cost and falls back to Bland's rule
/// once 500 consecutive degenerate pivots have been taken.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.num_vars();
    for i in 0..n {
        if lp.lower[i] > lp.upper[i] {
            return Ok(LpOutcome::Infeasible);
        }
    }

    // Columns of the standard form.
    let mut maps = Vec::with_capacity(n);
    let mut col_ub: Vec<f64> = Vec::new();
    let mut col_cost: Vec<f64> = Vec::new();
    for i in 0..n {
        let (lo, hi, c) = (lp.lower[i], lp.upper[i], lp.objective[i]);
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: col_ub.len(), lo });
            col_ub.push(hi - lo);
            col_cost.push(c);
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: col_ub.len(), hi });
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
        } else {
            let pos = col_ub.len();
            maps.push(VarMap::Split { pos, neg: pos + 1 });
            col_ub.extend([f64::INFINITY, f64::INFINITY]);
            col_cost.extend([c, -c]);
        }
    }
    let n_struct = col_ub.len();

    // Rows: equalities first, then inequalities with a slack each.
    let m_eq = lp.eq_matrix.nrows();
    let m_in = lp.ineq_matrix.nrows();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m_eq + m_in);
    let mut rhs: Vec<f64> = Vec::with_capacity(m_eq + m_in);
    let mut row_origin: Vec<usize> = Vec::with_capacity(m_eq + m_in);
    let mut row_scale: Vec<f64> = Vec::with_capacity(m_eq + m_in);
    let n_cols_no_art = n_struct + m_in;
    let mut infeasible = false;
    let matrix_scale = lp.eq_matrix.amax().max(lp.ineq_matrix.amax());
    let rhs_scale = lp.eq_rhs.amax().max(lp.ineq_rhs.amax());
    for r in 0..(m_eq + m_in) {
        let (a_row, b, slack) = if r < m_eq {
            (lp.eq_matrix.row(r), lp.eq_rhs[r], None)
        } else {
            let k = r - m_eq;
            (lp.ineq_matrix.row(k), lp.ineq_rhs[k], Some(n_struct + k))
        };
        let mut row = vec![0.0; n_cols_no_art];
        let mut b = b;
        for (i, map) in maps.iter().enumerate() {
            let a = a_row[i];
            if a == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shift { col, lo } => {
                    row[col] += a;
                    b -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    row[col] -= a;
                    b -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        if let Some(s) = slack {
            row[s] = 1.0;
        }
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale <= ZERO_ROW_TOL * matrix_scale {
            // 0 = b or 0 <= b
            let bad = if slack.is_none() { b.abs() } else { -b };
            if bad > 1e-9 * (1.0 + rhs_scale) {
                infeasible = true;
            }
            continue;
        }
        let inv = 1.0 / scale;
        row.iter_mut().for_each(|v| *v = if v.abs() < DROP_TOL * scale { 0.0 } else { *v * inv });
        rows.push(row);
        rhs.push(b * inv);
        row_origin.push(r);
        row_scale.push(inv);
    }
    if infeasible {
        return Ok(LpOutcome::Infeasible);
    }
    let mut ub = col_ub;
    ub.extend(std::iter::repeat_n(f64::INFINITY, m_in));
    let mut cost = col_cost;
    cost.extend(std::iter::repeat_n(0.0, m_in));

    let mut tab = Tableau::new(rows, rhs, ub);
    let phase_one = tab.phase_one()?;
    if !phase_one {
        return Ok(LpOutcome::Infeasible);
    }
    let bounded = tab.phase_two(&cost)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let values = tab.column_values();
    let mut x = DVector::zeros(n);
    for (i, map) in maps.iter().enumerate() {
        x[i] = match *map {
            VarMap::Shift { col, lo } => lo + values[col],
            VarMap::Mirror { col, hi } => hi - values[col],
            VarMap::Split { pos, neg } => values[pos] - values[neg],
        };
        // Snap onto finite bounds to absorb roundoff.
        x[i] = x[i].clamp(lp.lower[i], lp.upper[i]);
    }
    let objective = lp.objective.dot(&x);

    let row_duals = tab.row_duals();
    let mut eq_duals = DVector::zeros(m_eq);
    let mut ineq_duals = DVector::zeros(m_in);
    for (k, &orig) in row_origin.iter().enumerate() {
        let y = row_duals[k] * row_scale[k];
        if orig < m_eq {
            eq_duals[orig] = y;
        } else {
            ineq_duals[orig - m_eq] = y;
        }
    }

    Ok(LpOutcome::Optimal(LpSolution {
        x,
        objective,
        eq_duals,
        ineq_duals,
        pivots: tab.pivots,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

/// Dense tableau `B⁻¹[A | D]` over nonnegative columns with optional upper
/// bounds, followed by one artificial column per row.
struct Tableau {
    m: usize,
    ncols: usize,
    n_real: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    /// Initial `[A | I]` and right-hand side, kept for reinversion.
    t0: Vec<f64>,
    beta0: Vec<f64>,
    cost: Vec<f64>,
    since_reinvert: usize,
    basis: Vec<usize>,
    status: Vec<Status>,
    ub: Vec<f64>,
    d: Vec<f64>,
    art_sign: Vec<f64>,
    rhs_norm: f64,
    pivots: usize,
    degenerate_run: usize,
}

impl Tableau {
    fn new(rows: Vec<Vec<f64>>, rhs: Vec<f64>, mut ub: Vec<f64>) -> Self {
        let m = rows.len();
        let n_real = ub.len();
        let ncols = n_real + m;
        let mut t = vec![0.0; m * ncols];
        let mut art_sign = vec![1.0; m];
        let mut beta = vec![0.0; m];
        for (i, row) in rows.iter().enumerate() {
            let s = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            art_sign[i] = s;
            for (j, v) in row.iter().enumerate() {
                t[i * ncols + j] = s * v;
            }
            t[i * ncols + n_real + i] = 1.0;
            beta[i] = s * rhs[i];
        }
        ub.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut status = vec![Status::AtLower; ncols];
        let basis: Vec<usize> = (n_real..ncols).collect();
        for &b in &basis {
            status[b] = Status::Basic;
        }
        let rhs_norm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Tableau {
            m,
            ncols,
            n_real,
            t0: t.clone(),
            beta0: beta.clone(),
            t,
            beta,
            cost: vec![0.0; ncols],
            since_reinvert: 0,
            basis,
            status,
            ub,
            d: vec![0.0; ncols],
            art_sign,
            rhs_norm,
            pivots: 0,
            degenerate_run: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn price(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        for j in 0..self.ncols {
            let mut dj = cost[j];
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    dj -= cb * self.at(i, j);
                }
            }
            self.d[j] = dj;
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Returns false when the rows admit no nonnegative solution.
    fn phase_one(&mut self) -> Result<bool> {
        let mut cost = vec![0.0; self.ncols];
        cost[self.n_real..].iter_mut().for_each(|c| *c = 1.0);
        self.price(&cost);
        self.iterate()?;
        let infeas: f64 = (0..self.m)
            .filter(|&i| self.basis[i] >= self.n_real)
            .map(|i| self.beta[i].max(0.0))
            .sum();
        if infeas > 1e-9 * (1.0 + self.rhs_norm) {
            return Ok(false);
        }
        // Artificials are pinned at zero from here on.
        for j in self.n_real..self.ncols {
            self.ub[j] = 0.0;
            if self.status[j] == Status::AtUpper {
                self.status[j] = Status::AtLower;
            }
        }
        for i in 0..self.m {
            if self.basis[i] >= self.n_real {
                self.beta[i] = 0.0;
            }
        }
        Ok(true)
    }

    /// Returns false when the objective is unbounded below.
    fn phase_two(&mut self, real_cost: &[f64]) -> Result<bool> {
        let mut cost = real_cost.to_vec();
        cost.extend(std::iter::repeat_n(0.0, self.m));
        self.price(&cost);
        self.degenerate_run = 0;
        self.iterate()
    }

    fn eligible(&self, j: usize) -> Option<f64> {
        let dj = self.d[j];
        match self.status[j] {
            Status::Basic => None,
            _ if self.ub[j] == 0.0 => None,
            Status::AtLower if dj < -COST_TOL => Some(1.0),
            Status::AtUpper if dj > COST_TOL => Some(-1.0),
            _ => None,
        }
    }

    /// Runs simplex iterations; returns false on an unbounded ray.
    fn iterate(&mut self) -> Result<bool> {
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(OptimError::NumericalFailure(MAX_PIVOTS));
            }
            let bland = self.degenerate_run >= BLAND_AFTER;
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if let Some(dir) = self.eligible(j) {
                    if bland {
                        enter = Some((j, dir));
                        break;
                    }
                    let score = self.d[j].abs();
                    if score > best {
                        best = score;
                        enter = Some((j, dir));
                    }
                }
            }
            let Some((j, dir)) = enter else {
                if self.since_reinvert > 0 && self.reinvert() {
                    continue;
                }
                return Ok(true);
            };
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                continue;
            }

            // Ratio test: basic values move at rate r_i = −dir·T_ij.
            let mut theta = f64::INFINITY;
            let mut leave: Option<(usize, Status)> = None;
            let mut leave_mag = 0.0;
            for i in 0..self.m {
                let r = -dir * self.at(i, j);
                let (limit, to) = if r < -PIVOT_TOL {
                    (self.beta[i].max(0.0) / -r, Status::AtLower)
                } else if r > PIVOT_TOL && self.ub[self.basis[i]].is_finite() {
                    let room = (self.ub[self.basis[i]] - self.beta[i]).max(0.0);
                    (room / r, Status::AtUpper)
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((p, _)) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                self.basis[i] < self.basis[p]
                            } else {
                                r.abs() > leave_mag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = limit;
                    leave = Some((i, to));
                    leave_mag = r.abs();
                }
            }
            let flip = self.ub[j];
            if flip <= theta {
                if !flip.is_finite() {
                    return Ok(false);
                }
                // Entering variable reaches its opposite bound first.
                for i in 0..self.m {
                    let r = -dir * self.at(i, j);
                    self.beta[i] += r * flip;
                }
                self.status[j] = if dir > 0.0 {
                    Status::AtUpper
                } else {
                    Status::AtLower
                };
                self.pivots += 1;
                self.since_reinvert += 1;
                self.degenerate_run = 0;
                continue;
            }
            let (p, to) = leave.expect("finite ratio implies a leaving row");
            if theta < 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            for i in 0..self.m {
                let r = -dir * self.at(i, j);
                self.beta[i] += r * theta;
            }
            let entering_value = if dir > 0.0 { theta } else { self.ub[j] - theta };
            let leaving = self.basis[p];
            self.status[leaving] = to;
            self.status[j] = Status::Basic;
            self.basis[p] = j;
            self.beta[p] = entering_value;
            self.pivot(p, j);
            self.pivots += 1;
            self.since_reinvert += 1;
        }
    }

    /// Recomputes `B⁻¹[A | I]`, the basic values and the reduced costs from
    /// the initial rows. Returns false, changing nothing, if B is singular.
    fn reinvert(&mut self) -> bool {
        self.since_reinvert = 0;
        let (m, nc) = (self.m, self.ncols);
        if m == 0 {
            return false;
        }
        let orig = DMatrix::from_row_slice(m, nc, &self.t0);
        let b = DMatrix::from_fn(m, m, |i, k| orig[(i, self.basis[k])]);
        let mut rhs = DVector::from_column_slice(&self.beta0);
        for j in 0..nc {
            if self.status[j] == Status::AtUpper {
                rhs -= orig.column(j) * self.ub[j];
            }
        }
        let lu = b.lu();
        let (Some(t), Some(beta)) = (lu.solve(&orig), lu.solve(&rhs)) else {
            return false;
        };
        if t.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for k in 0..nc {
                let v = t[(i, k)];
                self.t[i * nc + k] = if v.abs() < 1e-13 { 0.0 } else { v };
            }
            self.t[i * nc + self.basis[i]] = 1.0;
            self.beta[i] = beta[i];
        }
        let cost = std::mem::take(&mut self.cost);
        self.price(&cost);
        true
    }

    fn pivot(&mut self, p: usize, j: usize) {
        let nc = self.ncols;
        let piv = self.at(p, j);
        let inv = 1.0 / piv;
        for k in 0..nc {
            self.t[p * nc + k] *= inv;
        }
        self.t[p * nc + j] = 1.0;
        let (before, rest) = self.t.split_at_mut(p * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for row in before.chunks_exact_mut(nc).chain(after.chunks_exact_mut(nc)) {
            let f = row[j];
            if f != 0.0 {
                for k in 0..nc {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for k in 0..nc {
                self.d[k] -= f * prow[k];
            }
            self.d[j] = 0.0;
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_real];
        for j in 0..self.n_real {
            if self.status[j] == Status::AtUpper {
                v[j] = self.ub[j];
            }
        }
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_real {
                v[b] = self.beta[i].max(0.0);
            }
        }
        v
    }

    /// Duals of the (scaled) rows, read off the artificial columns' reduced costs.
    fn row_duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| -self.d[self.n_real + i] * self.art_sign[i])
            .collect()
    }
}
