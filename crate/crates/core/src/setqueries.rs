//! LP-backed predicates and metrics on zonotopic sets: emptiness,
//! membership, support, interval hulls, H-representations, volumes, radii,
//! sampling, projection and 2-D vertex lists.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use zonoset_optim::{solve_lp, LinearProgram, LpOutcome};

use crate::error::{Error, Result};
use crate::interval::IntervalVector;
use crate::linalg::{hcat, left_null_space, nonzero_columns, rank, select_cols, select_entries, select_rows, vcat};
use crate::setrep::{ConZonotope, HPolytope, LineZonotope, Zonotope};

/// Slack on the t-minimization: `t ≤ 1 + EMPTY_TOL` counts as nonempty.
pub const EMPTY_TOL: f64 = 1e-9;
/// Default cap on generator combinations for H-rep and exact volume.
pub const DEFAULT_COMBO_BUDGET: u128 = 100_000;

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Minimum of `‖ξ‖∞` over the parameters reproducing the set (and `x`, if
/// given). `None` when no parameters exist at all.
fn min_xi_norm(z: &LineZonotope, x: Option<&DVector<f64>>) -> Result<Option<(f64, DVector<f64>, DVector<f64>)>> {
    let (ng, nl) = (z.ng(), z.nl());
    let nv = ng + nl + 1;
    let mut eq_blocks = vec![hcat(z.nc(), &[&z.a, &z.s, &DMatrix::zeros(z.nc(), 1)])];
    let mut rhs = vec![z.b.clone()];
    if let Some(x) = x {
        if x.len() != z.dim() {
            return Err(Error::DimensionMismatch {
                expected: z.dim(),
                got: x.len(),
            });
        }
        eq_blocks.push(hcat(z.dim(), &[&z.g, &z.m, &DMatrix::zeros(z.dim(), 1)]));
        rhs.push(x - &z.c);
    }
    let eq = vcat(nv, &eq_blocks.iter().collect::<Vec<_>>());
    let eq_rhs = crate::linalg::vcat_vec(&rhs.iter().collect::<Vec<_>>());
    let mut ineq = DMatrix::zeros(2 * ng, nv);
    for i in 0..ng {
        ineq[(2 * i, i)] = 1.0;
        ineq[(2 * i, nv - 1)] = -1.0;
        ineq[(2 * i + 1, i)] = -1.0;
        ineq[(2 * i + 1, nv - 1)] = -1.0;
    }
    let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
    lower[nv - 1] = 0.0;
    let mut obj = DVector::zeros(nv);
    obj[nv - 1] = 1.0;
    let lp = LinearProgram::new(nv)
        .with_objective(obj)
        .with_equalities(eq, eq_rhs)
        .with_inequalities(ineq, DVector::zeros(2 * ng))
        .with_bounds(lower, DVector::from_element(nv, f64::INFINITY));
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => Some((
            s.objective,
            s.x.rows(0, ng).into_owned(),
            s.x.rows(ng, nl).into_owned(),
        )),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("t is bounded below by zero"),
    })
}

/// Maximizer of `dirᵀx` over the set.
fn support_lz(z: &LineZonotope, dir: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    if dir.len() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: z.dim(),
            got: dir.len(),
        });
    }
    let (ng, nl) = (z.ng(), z.nl());
    let nv = ng + nl;
    let gm = hcat(z.dim(), &[&z.g, &z.m]);
    let obj = -(gm.transpose() * dir);
    let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(nv, f64::INFINITY);
    for i in 0..ng {
        lower[i] = -1.0;
        upper[i] = 1.0;
    }
    let lp = LinearProgram::new(nv)
        .with_objective(obj)
        .with_equalities(hcat(z.nc(), &[&z.a, &z.s]), z.b.clone())
        .with_bounds(lower, upper);
    match solve_lp(&lp)? {
        LpOutcome::Optimal(s) => {
            let x = &z.c + &gm * &s.x;
            Ok((dir.dot(&x), x))
        }
        LpOutcome::Infeasible => Err(Error::EmptySet),
        LpOutcome::Unbounded => Err(Error::UnboundedSet),
    }
}

fn interval_hull_lz(z: &LineZonotope) -> Result<IntervalVector> {
    let n = z.dim();
    let mut lo = DVector::zeros(n);
    let mut hi = DVector::zeros(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        hi[i] = support_lz(z, &e)?.0;
        lo[i] = -support_lz(z, &-e)?.0;
        if lo[i] > hi[i] {
            // Solver noise on a degenerate coordinate.
            let m = 0.5 * (lo[i] + hi[i]);
            lo[i] = m;
            hi[i] = m;
        }
    }
    IntervalVector::new(lo, hi)
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    match dims.iter().find(|&&d| d >= n) {
        Some(&index) => Err(Error::IndexOutOfRange { index, dim: n }),
        None => Ok(()),
    }
}

/// Radius metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusMetric {
    /// Largest half-width of the interval hull.
    InfHull,
    /// Frobenius norm of the generator matrix.
    Frobenius,
}

/// Volume metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMetric {
    Exact,
    /// n-th root of the volume of a parallelotope enclosure.
    PartopeNthRoot,
}

impl Zonotope {
    pub fn is_inside(&self, x: &DVector<f64>) -> Result<bool> {
        LineZonotope::from(self.clone()).is_inside(x)
    }

    /// Tightest box, in closed form.
    pub fn interval_hull(&self) -> IntervalVector {
        let r = DVector::from_fn(self.dim(), |i, _| self.g.row(i).iter().map(|v| v.abs()).sum::<f64>());
        IntervalVector::from_mid_rad(&self.c, &r)
    }

    pub fn support(&self, dir: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        if dir.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dir.len(),
            });
        }
        let gd = self.g.transpose() * dir;
        let xi = gd.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let x = self.point_at(&xi);
        Ok((dir.dot(&x), x))
    }

    pub fn hrep(&self) -> Result<HPolytope> {
        self.hrep_with_budget(DEFAULT_COMBO_BUDGET)
    }

    /// Facets from generalized cross products of `n−1` generators.
    pub fn hrep_with_budget(&self, budget: u128) -> Result<HPolytope> {
        let n = self.dim();
        let cols = nonzero_columns(&self.g, 0.0);
        let g = select_cols(&self.g, &cols);
        let r = rank(&g, 1e-10);
        if r < n {
            return Err(Error::DegenerateZonotope { rank: r, dim: n });
        }
        let needed = binomial(g.ncols(), n - 1);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut push = |h: DVector<f64>| {
            let norm = h.norm();
            if norm < 1e-12 {
                return;
            }
            let h = h / norm;
            if !rows.iter().any(|r| (r - &h).amax() < 1e-9) {
                rows.push(h);
            }
        };
        if n == 1 {
            push(DVector::from_element(1, 1.0));
            push(DVector::from_element(1, -1.0));
        } else {
            for combo in (0..g.ncols()).combinations(n - 1) {
                let sub = select_cols(&g, &combo);
                // Cofactor expansion gives a vector orthogonal to every column.
                let h = DVector::from_fn(n, |i, _| {
                    let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
                    let minor = select_rows(&sub, &keep).determinant();
                    if i % 2 == 0 {
                        minor
                    } else {
                        -minor
                    }
                });
                push(h.clone());
                push(-h);
            }
        }
        let h = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let k = DVector::from_fn(rows.len(), |i, _| {
            rows[i].dot(&self.c) + (g.transpose() * &rows[i]).iter().map(|v| v.abs()).sum::<f64>()
        });
        HPolytope::from_inequalities(h, k)
    }

    pub fn volume(&self, metric: VolumeMetric) -> Result<f64> {
        match metric {
            VolumeMetric::Exact => self.exact_volume(DEFAULT_COMBO_BUDGET),
            VolumeMetric::PartopeNthRoot => ConZonotope::from(self.clone()).volume(metric),
        }
    }

    /// `2ⁿ Σ |det|` over all n-subsets of generators.
    pub fn exact_volume(&self, budget: u128) -> Result<f64> {
        let n = self.dim();
        let needed = binomial(self.ng(), n);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let total: f64 = (0..self.ng())
            .combinations(n)
            .map(|combo| select_cols(&self.g, &combo).determinant().abs())
            .sum();
        Ok(2f64.powi(n as i32) * total)
    }

    pub fn radius(&self, metric: RadiusMetric) -> f64 {
        match metric {
            RadiusMetric::InfHull => self.interval_hull().rad().amax(),
            RadiusMetric::Frobenius => self.g.norm(),
        }
    }

    /// Uniform draws of ξ in the unit box, mapped.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<DVector<f64>> {
        (0..n)
            .map(|_| {
                let xi = DVector::from_fn(self.ng(), |_, _| rng.random_range(-1.0..=1.0));
                self.point_at(&xi)
            })
            .collect()
    }

    pub fn project(&self, dims: &[usize]) -> Result<Zonotope> {
        check_dims(dims, self.dim())?;
        Ok(Zonotope {
            g: select_rows(&self.g, dims),
            c: select_entries(&self.c, dims),
        })
    }

    /// Counterclockwise vertex cycle, by angle-sorting the generators.
    pub fn vertices_2d(&self) -> Result<Vec<DVector<f64>>> {
        if self.dim() != 2 {
            return Err(Error::DimensionUnsupported {
                supported: 2,
                got: self.dim(),
            });
        }
        let mut gens: Vec<DVector<f64>> = (0..self.ng())
            .map(|j| self.g.column(j).into_owned())
            .filter(|g| g.amax() > 0.0)
            .map(|g| if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) { -g } else { g })
            .collect();
        gens.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
        let mut v = self.c.clone();
        for g in &gens {
            v -= g;
        }
        let mut out = vec![v.clone()];
        for g in gens.iter().chain(gens.iter()).take(2 * gens.len()).enumerate() {
            let (i, g) = g;
            if i < gens.len() {
                v += 2.0 * g;
            } else {
                v -= 2.0 * g;
            }
            out.push(v.clone());
        }
        out.pop();
        Ok(clean_polygon(out))
    }
}

impl ConZonotope {
    pub fn is_empty(&self) -> Result<bool> {
        LineZonotope::from(self.clone()).is_empty()
    }

    pub fn is_inside(&self, x: &DVector<f64>) -> Result<bool> {
        LineZonotope::from(self.clone()).is_inside(x)
    }

    pub fn support(&self, dir: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        if self.nc() == 0 {
            return self.unconstrained().support(dir);
        }
        support_lz(&self.clone().into(), dir)
    }

    /// Tightest box; closed form when unconstrained, 2n LPs otherwise.
    pub fn interval_hull(&self) -> Result<IntervalVector> {
        if self.nc() == 0 {
            return Ok(self.unconstrained().interval_hull());
        }
        interval_hull_lz(&self.clone().into())
    }

    /// Lift, take the zonotope H-rep, keep the rows on the original
    /// coordinates (the lifted coordinates are pinned to zero).
    pub fn hrep(&self) -> Result<HPolytope> {
        let n = self.dim();
        let lifted = self.lift().zonotope.hrep()?;
        let mut rows = Vec::new();
        for i in 0..lifted.h.nrows() {
            let h = lifted.h.row(i).columns(0, n).transpose();
            let k = lifted.k[i];
            if h.amax() < 1e-12 {
                if k < -1e-9 {
                    rows.push((h, k));
                }
                continue;
            }
            rows.push((h, k));
        }
        let h = DMatrix::from_fn(rows.len(), n, |i, j| rows[i].0[j]);
        let k = DVector::from_fn(rows.len(), |i, _| rows[i].1);
        HPolytope::from_inequalities(h, k)
    }

    pub fn volume(&self, metric: VolumeMetric) -> Result<f64> {
        match metric {
            VolumeMetric::Exact => {
                if self.nc() == 0 {
                    self.unconstrained().exact_volume(DEFAULT_COMBO_BUDGET)
                } else {
                    Err(Error::UnsupportedMethod {
                        method: "exact volume".into(),
                        set: "ConZonotope",
                    })
                }
            }
            VolumeMetric::PartopeNthRoot => {
                let p = self.partope_bound()?;
                let n = self.dim() as f64;
                Ok(p.g.determinant().abs().powf(1.0 / n) * 2.0)
            }
        }
    }

    pub fn radius(&self, metric: RadiusMetric) -> Result<f64> {
        Ok(match metric {
            RadiusMetric::InfHull => self.interval_hull()?.rad().amax(),
            RadiusMetric::Frobenius => self.g.norm(),
        })
    }

    /// Hit-and-run samples over `{Aξ = b} ∩ [−1, 1]^{n_g}`, started from the
    /// minimum-norm feasible ξ after `50·n_g` burn-in steps.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        if self.nc() == 0 {
            return Ok(self.unconstrained().sample(n, rng));
        }
        let Some((t, xi0, _)) = min_xi_norm(&self.clone().into(), None)? else {
            return Err(Error::EmptySet);
        };
        if t > 1.0 + EMPTY_TOL {
            return Err(Error::EmptySet);
        }
        let ng = self.ng();
        let basis = left_null_space(&self.a.transpose(), 1e-10);
        let mut xi = xi0.map(|v| v.clamp(-1.0, 1.0));
        let step = |xi: &mut DVector<f64>, rng: &mut R| {
            let raw = DVector::from_fn(basis.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let d = &basis * raw;
            let norm = d.norm();
            if norm < 1e-12 {
                return;
            }
            let d = d / norm;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..ng {
                if d[i].abs() > 1e-14 {
                    let a = (-1.0 - xi[i]) / d[i];
                    let b = (1.0 - xi[i]) / d[i];
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
            }
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return;
            }
            let s = rng.random_range(lo..=hi);
            *xi += d * s;
            xi.apply(|v| *v = v.clamp(-1.0, 1.0));
        };
        for _ in 0..50 * ng {
            step(&mut xi, rng);
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            for _ in 0..3 {
                step(&mut xi, rng);
            }
            out.push(&self.c + &self.g * &xi);
        }
        Ok(out)
    }

    /// Row selection on `c` and `G`; constraints unchanged.
    pub fn project(&self, dims: &[usize]) -> Result<ConZonotope> {
        check_dims(dims, self.dim())?;
        Ok(ConZonotope {
            g: select_rows(&self.g, dims),
            c: select_entries(&self.c, dims),
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    /// Counterclockwise vertex cycle via support-function refinement.
    pub fn vertices_2d(&self) -> Result<Vec<DVector<f64>>> {
        if self.dim() != 2 {
            return Err(Error::DimensionUnsupported {
                supported: 2,
                got: self.dim(),
            });
        }
        if self.nc() == 0 {
            return self.unconstrained().vertices_2d();
        }
        let lz: LineZonotope = self.clone().into();
        polygon_by_support(|d| support_lz(&lz, d).map(|s| s.1))
    }
}

impl LineZonotope {
    /// True iff no (ξ, δ) with `‖ξ‖∞ ≤ 1` satisfies `Aξ + Sδ = b`.
    pub fn is_empty(&self) -> Result<bool> {
        Ok(match min_xi_norm(self, None)? {
            None => true,
            Some((t, _, _)) => t > 1.0 + EMPTY_TOL,
        })
    }

    pub fn is_inside(&self, x: &DVector<f64>) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "point of dimension {} tested against a set in dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(match min_xi_norm(self, Some(x))? {
            None => false,
            Some((t, _, _)) => t <= 1.0 + EMPTY_TOL,
        })
    }

    pub fn support(&self, dir: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        support_lz(self, dir)
    }

    pub fn interval_hull(&self) -> Result<IntervalVector> {
        interval_hull_lz(self)
    }

    pub fn is_bounded(&self) -> Result<bool> {
        match self.interval_hull() {
            Ok(_) => Ok(true),
            Err(Error::UnboundedSet) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn radius(&self, metric: RadiusMetric) -> Result<f64> {
        Ok(match metric {
            RadiusMetric::InfHull => self.interval_hull()?.rad().amax(),
            RadiusMetric::Frobenius => self.g.norm(),
        })
    }

    /// Samples after eliminating the removable lines; fails if some remain.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        let bounded = self.eliminate_lines();
        if bounded.nl() > 0 {
            return Err(Error::UnboundedSet);
        }
        bounded.to_conzonotope()?.sample(n, rng)
    }

    pub fn project(&self, dims: &[usize]) -> Result<LineZonotope> {
        check_dims(dims, self.dim())?;
        Ok(LineZonotope {
            m: select_rows(&self.m, dims),
            g: select_rows(&self.g, dims),
            c: select_entries(&self.c, dims),
            s: self.s.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }
}

impl HPolytope {
    pub fn support(&self, dir: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let lp = LinearProgram::new(self.dim())
            .with_objective(-dir)
            .with_inequalities(self.h.clone(), self.k.clone())
            .with_equalities(self.aeq.clone(), self.beq.clone());
        match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => Ok((dir.dot(&s.x), s.x)),
            LpOutcome::Infeasible => Err(Error::EmptySet),
            LpOutcome::Unbounded => Err(Error::UnboundedSet),
        }
    }

    pub fn vertices_2d(&self) -> Result<Vec<DVector<f64>>> {
        if self.dim() != 2 {
            return Err(Error::DimensionUnsupported {
                supported: 2,
                got: self.dim(),
            });
        }
        polygon_by_support(|d| self.support(d).map(|s| s.1))
    }
}

/// Polygon of a compact convex 2-D set from its support points. Consecutive
/// support points are split along the normal of the chord joining them until
/// every chord is a true edge.
fn polygon_by_support(support: impl Fn(&DVector<f64>) -> Result<DVector<f64>>) -> Result<Vec<DVector<f64>>> {
    let dirs = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    let mut pts = Vec::new();
    for (x, y) in dirs {
        pts.push(support(&DVector::from_row_slice(&[x, y]))?);
    }
    let scale = 1.0 + pts.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    let mut out = Vec::new();
    for i in 0..pts.len() {
        out.push(pts[i].clone());
        refine_chord(&pts[i], &pts[(i + 1) % pts.len()], &support, tol, 0, &mut out)?;
    }
    Ok(clean_polygon(out))
}

fn refine_chord(
    a: &DVector<f64>,
    b: &DVector<f64>,
    support: &impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    tol: f64,
    depth: usize,
    out: &mut Vec<DVector<f64>>,
) -> Result<()> {
    let e = b - a;
    if e.amax() <= tol || depth > 60 {
        return Ok(());
    }
    let normal = DVector::from_row_slice(&[e[1], -e[0]]) / e.norm();
    let r = support(&normal)?;
    if normal.dot(&r) - normal.dot(a) > tol {
        refine_chord(a, &r, support, tol, depth + 1, out)?;
        out.push(r.clone());
        refine_chord(&r, b, support, tol, depth + 1, out)?;
    }
    Ok(())
}

/// Drops repeated and collinear points of a closed polygon.
fn clean_polygon(pts: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let scale = 1.0 + pts.iter().map(|p| p.amax()).fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    let mut v: Vec<DVector<f64>> = Vec::new();
    for p in pts {
        if v.last().is_none_or(|q| (q - &p).amax() > tol) {
            v.push(p);
        }
    }
    while v.len() > 1 && (&v[0] - v.last().unwrap()).amax() <= tol {
        v.pop();
    }
    let mut changed = true;
    while changed && v.len() > 2 {
        changed = false;
        for i in 0..v.len() {
            let a = &v[(i + v.len() - 1) % v.len()];
            let b = &v[i];
            let c = &v[(i + 1) % v.len()];
            let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            let len = (c - a).norm().max(tol);
            if cross.abs() / len <= tol {
                v.remove(i);
                changed = true;
                break;
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(r: usize, c: usize, d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, d)
    }

    fn v(d: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(d)
    }

    fn hexagon() -> Zonotope {
        Zonotope::new(m(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]), DVector::zeros(2)).unwrap()
    }

    #[test]
    fn emptiness_examples() {
        let z = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, 1.0]), v(&[3.0])).unwrap();
        assert!(z.is_empty().unwrap());
        let z0 = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, 1.0]), v(&[0.0])).unwrap();
        assert!(!z0.is_empty().unwrap());
        let lz = LineZonotope::new(
            m(2, 1, &[1.0, 0.0]),
            DMatrix::zeros(2, 0),
            DVector::zeros(2),
            m(1, 1, &[1.0]),
            DMatrix::zeros(1, 0),
            v(&[10.0]),
        )
        .unwrap();
        assert!(!lz.is_empty().unwrap());
    }

    #[test]
    fn membership_examples() {
        let z = Zonotope::unit_box(2);
        assert!(z.is_inside(&z.c).unwrap());
        assert!(!z.is_inside(&v(&[1.1, 1.1])).unwrap());
        assert!(z.is_inside(&v(&[1.0, -1.0])).unwrap());
        assert!(matches!(z.is_inside(&v(&[0.0])), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn hull_examples() {
        assert_eq!(
            Zonotope::unit_box(2).interval_hull(),
            IntervalVector::from_bounds(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()
        );
        assert_eq!(
            hexagon().interval_hull(),
            IntervalVector::from_bounds(&[-2.0, -2.0], &[2.0, 2.0]).unwrap()
        );
        let cz = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, -1.0]), v(&[0.0])).unwrap();
        let h = cz.interval_hull().unwrap();
        assert!((h.hi()[0] - 1.0).abs() < 1e-9 && (h.lo()[1] + 1.0).abs() < 1e-9);
        let line = LineZonotope::realset(2);
        assert!(matches!(line.interval_hull(), Err(Error::UnboundedSet)));
        let empty = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, 1.0]), v(&[3.0])).unwrap();
        assert!(matches!(empty.interval_hull(), Err(Error::EmptySet)));
    }

    #[test]
    fn hrep_examples() {
        let b = Zonotope::unit_box(2).hrep().unwrap();
        assert_eq!(b.h.nrows(), 4);
        assert!(b.k.iter().all(|&k| (k - 1.0).abs() < 1e-12));
        let hx = hexagon().hrep().unwrap();
        assert_eq!(hx.h.nrows(), 6);
        let degenerate = Zonotope::new(m(2, 2, &[1.0, 2.0, 0.0, 0.0]), DVector::zeros(2)).unwrap();
        assert!(matches!(
            degenerate.hrep(),
            Err(Error::DegenerateZonotope { rank: 1, dim: 2 })
        ));
        let big = Zonotope::new(DMatrix::from_fn(3, 40, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0), DVector::zeros(3)).unwrap();
        assert!(matches!(big.hrep_with_budget(10), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn hexagon_hrep_matches_vertices() {
        let z = hexagon();
        let verts = z.vertices_2d().unwrap();
        assert_eq!(verts.len(), 6);
        let p = z.hrep().unwrap();
        for vtx in &verts {
            let slack = &p.k - &p.h * vtx;
            assert!(slack.min() > -1e-9);
            // Each vertex is tight on exactly two facets.
            assert_eq!(slack.iter().filter(|s| s.abs() < 1e-9).count(), 2);
        }
    }

    #[test]
    fn volume_examples() {
        assert!((Zonotope::unit_box(2).volume(VolumeMetric::Exact).unwrap() - 4.0).abs() < 1e-12);
        assert!((hexagon().volume(VolumeMetric::Exact).unwrap() - 12.0).abs() < 1e-12);
        assert_eq!(Zonotope::point(v(&[1.0, 2.0])).volume(VolumeMetric::Exact).unwrap(), 0.0);
        let partope = Zonotope::unit_box(2).volume(VolumeMetric::PartopeNthRoot).unwrap();
        assert!((partope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn radius_examples() {
        assert_eq!(Zonotope::unit_box(2).radius(RadiusMetric::InfHull), 1.0);
        assert_eq!(Zonotope::point(v(&[3.0])).radius(RadiusMetric::InfHull), 0.0);
        assert_eq!(hexagon().radius(RadiusMetric::InfHull), 2.0);
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = Zonotope::unit_box(2);
        assert!(ConZonotope::from(z.clone()).sample(0, &mut rng).unwrap().is_empty());
        let pts = z.sample(1000, &mut rng);
        let mean = pts.iter().fold(DVector::zeros(2), |acc, p| acc + p) / 1000.0;
        assert!(mean.amax() < 0.1);
        assert!(pts.iter().all(|p| z.is_inside(p).unwrap()));

        let cz = ConZonotope::new(
            m(2, 3, &[0.2, 0.4, 0.2, 0.2, 0.0, -0.2]),
            v(&[-1.0, 1.0]),
            m(1, 3, &[2.0, 2.0, 2.0]),
            v(&[-3.0]),
        )
        .unwrap();
        let pts = cz.sample(300, &mut rng).unwrap();
        assert!(pts.iter().all(|p| cz.is_inside(p).unwrap()));
    }

    #[test]
    fn projection() {
        let z = Zonotope::unit_box(3);
        assert_eq!(z.project(&[0, 1, 2]).unwrap(), z);
        assert_eq!(z.project(&[0, 2]).unwrap().compact(), Zonotope::unit_box(2));
        assert!(matches!(z.project(&[3]), Err(Error::IndexOutOfRange { index: 3, dim: 3 })));
    }

    #[test]
    fn vertex_examples() {
        let sq = Zonotope::unit_box(2).vertices_2d().unwrap();
        assert_eq!(sq, vec![v(&[-1.0, -1.0]), v(&[1.0, -1.0]), v(&[1.0, 1.0]), v(&[-1.0, 1.0])]);
        let rot = Zonotope::new(m(2, 2, &[1.0, 1.0, 1.0, -1.0]), DVector::zeros(2)).unwrap();
        let r = rot.vertices_2d().unwrap();
        assert_eq!(r.len(), 4);
        for target in [v(&[2.0, 0.0]), v(&[0.0, 2.0]), v(&[-2.0, 0.0]), v(&[0.0, -2.0])] {
            assert!(r.iter().any(|p| (p - &target).amax() < 1e-12));
        }
        let seg = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, 1.0]), v(&[0.0])).unwrap();
        let s = seg.vertices_2d().unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().any(|p| (p - v(&[-1.0, 1.0])).amax() < 1e-9));
        assert!(s.iter().any(|p| (p - v(&[1.0, -1.0])).amax() < 1e-9));
        assert!(matches!(
            Zonotope::unit_box(3).vertices_2d(),
            Err(Error::DimensionUnsupported { .. })
        ));
    }

    #[test]
    fn cz_vertices_of_octagon() {
        // Unit box cut by |x1 + x2| <= 1.5 written as a polytope.
        let p = HPolytope::from_inequalities(
            m(6, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0, -1.0, -1.0]),
            v(&[1.0, 1.0, 1.0, 1.0, 1.5, 1.5]),
        )
        .unwrap();
        let verts = p.vertices_2d().unwrap();
        assert_eq!(verts.len(), 6);
        // Counterclockwise: positive signed area.
        let area: f64 = (0..verts.len())
            .map(|i| {
                let a = &verts[i];
                let b = &verts[(i + 1) % verts.len()];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        assert!((area - (4.0 - 0.25)).abs() < 1e-9);
    }
}
