//! Complexity reduction: zonotope order reduction, constrained-zonotope
//! rescaling, constraint elimination and generator reduction via lifting,
//! line elimination for line zonotopes, and parallelotope enclosures.

use nalgebra::{DMatrix, DVector};
use zonoset_optim::{solve_lp, LinearProgram, LpOutcome};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{hcat, rank, select_cols, select_entries, select_rows};
use crate::setrep::{ConZonotope, LineZonotope, Zonotope};

const PROPAGATION_SWEEPS: usize = 25;
const ZERO_TOL: f64 = 1e-12;

/// How `rescale` tightens the ξ-domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RescaleMode {
    /// Interval constraint propagation over `Aξ = b`.
    #[default]
    Interval,
    /// Exact bounds from `2·n_g` LPs.
    Lp,
}

impl Zonotope {
    /// Girard-style reduction to at most `ng` generators: the generators with
    /// the smallest `‖g‖₁ − ‖g‖∞` are replaced by their box.
    pub fn reduce(&self, ng: usize) -> Result<Zonotope> {
        let n = self.dim();
        let z = self.compact();
        if z.ng() <= ng {
            return Ok(z);
        }
        if ng < n {
            return Err(Error::TargetTooSmall(format!(
                "{ng} generators requested for a zonotope in dimension {n}"
            )));
        }
        let mut order: Vec<(f64, usize)> = (0..z.ng())
            .map(|j| {
                let g = z.g.column(j);
                (g.iter().map(|v| v.abs()).sum::<f64>() - g.amax(), j)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let n_box = z.ng() - ng + n;
        let boxed: Vec<usize> = order[..n_box].iter().map(|&(_, j)| j).collect();
        let mut kept: Vec<usize> = order[n_box..].iter().map(|&(_, j)| j).collect();
        kept.sort_unstable();
        let radii = DVector::from_fn(n, |i, _| boxed.iter().map(|&j| z.g[(i, j)].abs()).sum::<f64>());
        let bx = DMatrix::from_diagonal(&radii);
        let bx = select_cols(&bx, &(0..n).filter(|&i| radii[i] > 0.0).collect::<Vec<_>>());
        Ok(Zonotope {
            g: hcat(n, &[&select_cols(&z.g, &kept), &bx]),
            c: z.c,
        })
    }

    /// Parallelotope enclosure, see [`ConZonotope::partope_bound`].
    pub fn partope_bound(&self) -> Result<Zonotope> {
        ConZonotope::from(self.clone()).partope_bound()
    }
}

/// Tightened ξ-domain of `{Aξ = b, ξ ∈ [−1,1]}` by interval propagation.
fn propagate_domain(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<Interval>> {
    let ng = a.ncols();
    let mut dom = vec![Interval::unit(); ng];
    for _ in 0..PROPAGATION_SWEEPS {
        let mut changed = false;
        for i in 0..a.nrows() {
            let row_scale = a.row(i).amax();
            if row_scale <= ZERO_TOL {
                if b[i].abs() > 1e-9 {
                    return Err(Error::EmptySet);
                }
                continue;
            }
            for j in 0..ng {
                let aij = a[(i, j)];
                if aij.abs() <= 1e-9 * row_scale {
                    continue;
                }
                // Σ_{k≠j} a_ik ξ_k, recomputed to avoid cancellation.
                let rest = (0..ng)
                    .filter(|&k| k != j)
                    .fold(Interval::point(0.0), |acc, k| acc + dom[k] * a[(i, k)]);
                let cand = (Interval::point(b[i]) - rest) * (1.0 / aij);
                let tol = 1e-9 * (1.0 + b[i].abs() / aij.abs());
                match dom[j].intersect(&cand) {
                    Some(new) => {
                        if new.lo > dom[j].lo + 1e-12 || new.hi < dom[j].hi - 1e-12 {
                            changed = true;
                        }
                        dom[j] = new;
                    }
                    None => {
                        if cand.lo > dom[j].hi + tol || cand.hi < dom[j].lo - tol {
                            return Err(Error::EmptySet);
                        }
                        let p = if cand.lo > dom[j].hi { dom[j].hi } else { dom[j].lo };
                        dom[j] = Interval::point(p);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(dom)
}

fn lp_domain(z: &ConZonotope) -> Result<Vec<Interval>> {
    let ng = z.ng();
    let mut dom = Vec::with_capacity(ng);
    for j in 0..ng {
        let mut ends = [0.0; 2];
        for (slot, sign) in [(0, 1.0), (1, -1.0)] {
            let mut obj = DVector::zeros(ng);
            obj[j] = sign;
            let lp = LinearProgram::new(ng)
                .with_objective(obj)
                .with_equalities(z.a.clone(), z.b.clone())
                .with_bounds(DVector::from_element(ng, -1.0), DVector::from_element(ng, 1.0));
            match solve_lp(&lp)? {
                LpOutcome::Optimal(s) => ends[slot] = s.x[j],
                _ => return Err(Error::EmptySet),
            }
        }
        dom.push(Interval::spanning(ends[0], ends[1]));
    }
    Ok(dom)
}

impl ConZonotope {
    /// Tightens the ξ-domain and renormalizes it to the unit box; the
    /// represented set is unchanged.
    pub fn rescale(&self, mode: RescaleMode) -> Result<ConZonotope> {
        if self.nc() == 0 {
            return Ok(self.clone());
        }
        let dom = match mode {
            RescaleMode::Interval => propagate_domain(&self.a, &self.b)?,
            RescaleMode::Lp => lp_domain(self)?,
        };
        let dom = IntervalVector::from_intervals(&dom);
        let (m, r) = (dom.mid(), dom.rad());
        let scale = DMatrix::from_diagonal(&r);
        Ok(ConZonotope {
            g: &self.g * &scale,
            c: &self.c + &self.g * &m,
            a: &self.a * &scale,
            b: &self.b - &self.a * &m,
        })
    }

    /// Drops generators that vanish in both G and A, and constraint rows
    /// that are identically zero.
    pub fn compact(&self) -> Result<ConZonotope> {
        let gscale = self.g.amax().max(self.a.amax()).max(1e-300);
        let cols: Vec<usize> = (0..self.ng())
            .filter(|&j| self.g.column(j).amax().max(self.a.column(j).amax()) > ZERO_TOL * gscale)
            .collect();
        let a = select_cols(&self.a, &cols);
        let mut rows = Vec::new();
        for i in 0..a.nrows() {
            if a.row(i).amax() > ZERO_TOL * gscale {
                rows.push(i);
            } else if self.b[i].abs() > 1e-9 * (1.0 + self.b.amax()) {
                return Err(Error::EmptySet);
            }
        }
        Ok(ConZonotope {
            g: select_cols(&self.g, &cols),
            c: self.c.clone(),
            a: select_rows(&a, &rows),
            b: select_entries(&self.b, &rows),
        })
    }

    /// `(excess, row, column)` of the least lossy pivot.
    fn best_pivot(&self) -> (f64, usize, usize) {
        let z = self;
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for i in 0..z.nc() {
            let row = z.a.row(i);
            let scale = row.amax();
            let total: f64 = row.iter().map(|v| v.abs()).sum();
            for j in 0..z.ng() {
                let aij = row[j];
                if aij.abs() <= 1e-9 * scale {
                    continue;
                }
                let rest = total - aij.abs();
                let lo = (z.b[i] - rest.copysign(aij)) / aij;
                let hi = (z.b[i] + rest.copysign(aij)) / aij;
                let (lo, hi) = (lo.min(hi), lo.max(hi));
                let excess = (hi - 1.0).max(0.0) + (-1.0 - lo).max(0.0);
                let better = match best {
                    None => true,
                    Some((e, mag, _, _)) => {
                        excess < e - 1e-12 || (excess <= e + 1e-12 && aij.abs() > mag)
                    }
                };
                if better {
                    best = Some((excess, aij.abs(), i, j));
                }
            }
        }
        let (e, _, i, j) = best.expect("a nonzero constraint row exists after compaction");
        (e, i, j)
    }

    /// Removes one constraint by solving it for one generator variable. The
    /// pivot minimizes how far the implied range of that variable reaches
    /// beyond [−1, 1], ties broken by the largest coefficient.
    fn eliminate_one_constraint(&self) -> Result<ConZonotope> {
        let z = self.rescale(RescaleMode::Interval)?.compact()?;
        if z.nc() == 0 {
            return Ok(z);
        }
        let (_, i, j) = z.best_pivot();
        let aij = z.a[(i, j)];
        let arow = z.a.row(i).into_owned() / aij;
        let bi = z.b[i] / aij;
        let gj = z.g.column(j).into_owned();
        let aj = z.a.column(j).into_owned();
        let g = &z.g - &gj * &arow;
        let c = &z.c + &gj * bi;
        let a = &z.a - &aj * &arow;
        let b = &z.b - &aj * bi;
        let keep_cols: Vec<usize> = (0..z.ng()).filter(|&k| k != j).collect();
        let keep_rows: Vec<usize> = (0..z.nc()).filter(|&k| k != i).collect();
        ConZonotope {
            g: select_cols(&g, &keep_cols),
            c,
            a: select_rows(&select_cols(&a, &keep_cols), &keep_rows),
            b: select_entries(&b, &keep_rows),
        }
        .compact()
    }

    /// Eliminates constraints until at most `nc` remain.
    pub fn eliminate_constraints(&self, nc: usize) -> Result<ConZonotope> {
        let mut z = self.compact()?;
        while z.nc() > nc {
            z = z.eliminate_one_constraint()?;
        }
        Ok(z)
    }

    /// Encloses the set by one with at most `ng` generators and `nc`
    /// constraints: constraint elimination, then Girard reduction of the
    /// lifted zonotope. When `ng − n < nc`, extra constraints are eliminated
    /// so the lifted reduction is possible.
    pub fn reduce(&self, ng: usize, nc: usize) -> Result<ConZonotope> {
        let n = self.dim();
        if self.ng() <= ng && self.nc() <= nc {
            return Ok(self.clone());
        }
        if ng < n {
            return Err(Error::TargetTooSmall(format!(
                "{ng} generators requested for a set in dimension {n}"
            )));
        }
        let mut z = self.eliminate_constraints(nc)?;
        if z.ng() > ng {
            z = z.eliminate_constraints(nc.min(ng - n))?;
        }
        if z.ng() > ng {
            let lifted = z.lift();
            let reduced = lifted.zonotope.reduce(ng)?;
            z = crate::setalgebra::LiftedZonotope::tag(reduced, n)?.unlift();
        }
        Ok(z)
    }

    /// Parallelotope `T·box` enclosing the set. In the plane this is the
    /// smallest-area enclosing parallelogram of the vertex polygon. Otherwise
    /// T is the identity or the n largest independent generators, whichever
    /// gives less volume, and the box is the interval hull of `T⁻¹Z`.
    pub fn partope_bound(&self) -> Result<Zonotope> {
        let n = self.dim();
        let z = self.rescale(RescaleMode::Interval)?.compact()?;
        if n == 2 {
            if let Some(p) = min_area_parallelogram(&z.vertices_2d()?) {
                return Ok(p);
            }
        }
        let mut candidates = vec![DMatrix::identity(n, n)];
        let mut order: Vec<usize> = (0..z.ng()).collect();
        order.sort_by(|&a, &b| z.g.column(b).norm().total_cmp(&z.g.column(a).norm()).then(a.cmp(&b)));
        let mut basis: Vec<usize> = Vec::new();
        for j in order {
            let mut trial = basis.clone();
            trial.push(j);
            if rank(&select_cols(&z.g, &trial), 1e-8) == trial.len() {
                basis = trial;
            }
            if basis.len() == n {
                break;
            }
        }
        if basis.len() == n {
            let t = select_cols(&z.g, &basis);
            let t = DMatrix::from_fn(n, n, |i, j| t[(i, j)] / t.column(j).norm());
            candidates.push(t);
        }
        let mut best: Option<(f64, Zonotope)> = None;
        for t in candidates {
            let Some(tinv) = t.clone().try_inverse() else { continue };
            let hull = z.linmap(&tinv)?.interval_hull()?;
            let vol = t.determinant().abs() * hull.diam().iter().product::<f64>();
            if best.as_ref().is_none_or(|(v, _)| vol < *v - 1e-12 * v.abs()) {
                best = Some((
                    vol,
                    Zonotope {
                        g: &t * DMatrix::from_diagonal(&hull.rad()),
                        c: &t * hull.mid(),
                    },
                ));
            }
        }
        Ok(best.expect("the identity is always invertible").1)
    }
}

/// Minimal enclosing parallelogram of a convex polygon. Some optimum has a
/// side flush with an edge in each pair of opposite sides, so pairs of edge
/// normals are searched. `None` for polygons with fewer than three vertices.
fn min_area_parallelogram(poly: &[DVector<f64>]) -> Option<Zonotope> {
    if poly.len() < 3 {
        return None;
    }
    let mut normals: Vec<(f64, f64)> = vec![(1.0, 0.0), (0.0, 1.0)];
    for i in 0..poly.len() {
        let e = &poly[(i + 1) % poly.len()] - &poly[i];
        let len = e.norm();
        if len > 0.0 {
            normals.push((-e[1] / len, e[0] / len));
        }
    }
    let span = |(a, b): (f64, f64)| {
        poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let p = a * v[0] + b * v[1];
            (lo.min(p), hi.max(p))
        })
    };
    let spans: Vec<(f64, f64)> = normals.iter().map(|&nv| span(nv)).collect();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..normals.len() {
        for k in i + 1..normals.len() {
            let det = normals[i].0 * normals[k].1 - normals[i].1 * normals[k].0;
            if det.abs() < 1e-6 {
                continue;
            }
            let area = (spans[i].1 - spans[i].0) * (spans[k].1 - spans[k].0) / det.abs();
            if best.is_none_or(|(a, _, _)| area < a) {
                best = Some((area, i, k));
            }
        }
    }
    let (_, i, k) = best?;
    let nmat = DMatrix::from_row_slice(2, 2, &[normals[i].0, normals[i].1, normals[k].0, normals[k].1]);
    let t = nmat.try_inverse()?;
    let mid = DVector::from_row_slice(&[0.5 * (spans[i].0 + spans[i].1), 0.5 * (spans[k].0 + spans[k].1)]);
    let rad = DVector::from_row_slice(&[0.5 * (spans[i].1 - spans[i].0), 0.5 * (spans[k].1 - spans[k].0)]);
    Some(Zonotope {
        g: &t * DMatrix::from_diagonal(&rad),
        c: &t * mid,
    })
}

impl LineZonotope {
    /// Solves constraints for line variables and substitutes them; exact.
    /// Lines that no constraint touches and that have no effect are dropped.
    pub fn eliminate_lines(&self) -> LineZonotope {
        let mut z = self.clone();
        loop {
            let scale = z.s.amax().max(z.a.amax()).max(1e-300);
            let pick = (0..z.nl()).find_map(|j| {
                if z.nc() == 0 {
                    return None;
                }
                let col = z.s.column(j);
                let i = col.iamax();
                (col[i].abs() > 1e-9 * scale).then_some((i, j))
            });
            let Some((i, j)) = pick else { break };
            let sij = z.s[(i, j)];
            let srow = z.s.row(i).into_owned() / sij;
            let arow = z.a.row(i).into_owned() / sij;
            let bi = z.b[i] / sij;
            let mj = z.m.column(j).into_owned();
            let sj = z.s.column(j).into_owned();
            let keep_lines: Vec<usize> = (0..z.nl()).filter(|&k| k != j).collect();
            let keep_rows: Vec<usize> = (0..z.nc()).filter(|&k| k != i).collect();
            let m = &z.m - &mj * &srow;
            let g = &z.g - &mj * &arow;
            let c = &z.c + &mj * bi;
            let s = &z.s - &sj * &srow;
            let a = &z.a - &sj * &arow;
            let b = &z.b - &sj * bi;
            z = LineZonotope {
                m: select_cols(&m, &keep_lines),
                g,
                c,
                s: select_rows(&select_cols(&s, &keep_lines), &keep_rows),
                a: select_rows(&a, &keep_rows),
                b: select_entries(&b, &keep_rows),
            };
        }
        let live: Vec<usize> = (0..z.nl()).filter(|&j| z.m.column(j).amax() > ZERO_TOL).collect();
        z.m = select_cols(&z.m, &live);
        z.s = select_cols(&z.s, &live);
        z
    }

    /// Eliminates removable lines, then reduces the bounded part like a
    /// constrained zonotope; remaining lines are carried over unchanged.
    pub fn reduce(&self, ng: usize, nc: usize) -> Result<LineZonotope> {
        let z = self.eliminate_lines();
        // After elimination no constraint involves a line.
        let bounded = ConZonotope {
            g: z.g.clone(),
            c: z.c.clone(),
            a: z.a.clone(),
            b: z.b.clone(),
        };
        let reduced = bounded.reduce(ng, nc)?;
        let mut out: LineZonotope = reduced.into();
        out.s = DMatrix::zeros(out.nc(), z.nl());
        out.m = z.m;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(r: usize, c: usize, d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, d)
    }

    fn v(d: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(d)
    }

    fn demo() -> ConZonotope {
        ConZonotope::new(
            m(2, 3, &[0.2, 0.4, 0.2, 0.2, 0.0, -0.2]),
            v(&[-1.0, 1.0]),
            m(1, 3, &[2.0, 2.0, 2.0]),
            v(&[-3.0]),
        )
        .unwrap()
    }

    fn random_cz(rng: &mut ChaCha8Rng, n: usize, ng: usize, nc: usize) -> ConZonotope {
        let g = DMatrix::from_fn(n, ng, |_, _| rng.random_range(-1.0..1.0));
        let a = DMatrix::from_fn(nc, ng, |_, _| rng.random_range(-1.0..1.0));
        let xi = DVector::from_fn(ng, |_, _| rng.random_range(-0.5..0.5));
        let b = &a * xi;
        ConZonotope::new(g, DVector::zeros(n), a, b).unwrap()
    }

    #[test]
    fn zonotope_reduction_examples() {
        let z = Zonotope::unit_box(2);
        assert_eq!(z.reduce(5).unwrap(), z);
        let three = Zonotope::new(m(2, 3, &[1.0, 0.0, 0.1, 0.0, 1.0, 0.1]), DVector::zeros(2)).unwrap();
        let r = three.reduce(2).unwrap();
        assert_eq!(r.g, DMatrix::from_diagonal(&v(&[1.1, 1.1])));
        let par = Zonotope::new(m(2, 2, &[1.0, 0.5, 0.2, 1.0]), DVector::zeros(2)).unwrap();
        assert_eq!(par.reduce(2).unwrap(), par);
        assert!(matches!(three.reduce(1), Err(Error::TargetTooSmall(_))));
    }

    #[test]
    fn rescale_examples() {
        let free: ConZonotope = Zonotope::unit_box(2).into();
        assert_eq!(free.rescale(RescaleMode::Interval).unwrap(), free);
        let pinned = ConZonotope::new(m(1, 1, &[2.0]), v(&[0.0]), m(1, 1, &[1.0]), v(&[0.5])).unwrap();
        for mode in [RescaleMode::Interval, RescaleMode::Lp] {
            let r = pinned.rescale(mode).unwrap();
            assert!(r.g.amax() < 1e-12);
            assert!((r.c[0] - 1.0).abs() < 1e-12);
        }
        let empty = ConZonotope::new(DMatrix::identity(2, 2), DVector::zeros(2), m(1, 2, &[1.0, 1.0]), v(&[3.0])).unwrap();
        assert!(matches!(empty.rescale(RescaleMode::Interval), Err(Error::EmptySet)));
        assert!(matches!(empty.rescale(RescaleMode::Lp), Err(Error::EmptySet)));
    }

    #[test]
    fn rescale_preserves_membership() {
        let z = demo();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for mode in [RescaleMode::Interval, RescaleMode::Lp] {
            let r = z.rescale(mode).unwrap();
            for p in z.sample(300, &mut rng).unwrap() {
                assert!(r.is_inside(&p).unwrap());
            }
            for p in r.sample(300, &mut rng).unwrap() {
                assert!(z.is_inside(&p).unwrap());
            }
        }
    }

    #[test]
    fn cz_reduction_contains_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let z = random_cz(&mut rng, 2, 10, 4);
            for (ng, nc) in [(10, 4), (6, 2), (4, 0), (3, 1), (2, 0)] {
                let r = z.reduce(ng, nc).unwrap();
                assert!(r.ng() <= ng && r.nc() <= nc, "({}, {}) for target ({ng}, {nc})", r.ng(), r.nc());
                for p in z.sample(100, &mut rng).unwrap() {
                    assert!(r.is_inside(&p).unwrap());
                }
            }
        }
        let z = demo();
        assert_eq!(z.reduce(3, 1).unwrap(), z);
    }

    #[test]
    fn line_elimination_examples() {
        let real = LineZonotope::realset(2);
        assert_eq!(real.reduce(4, 2).unwrap(), real);
        let lz = LineZonotope::new(
            m(2, 1, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            m(1, 1, &[1.0]),
            DMatrix::zeros(1, 2),
            v(&[0.0]),
        )
        .unwrap();
        let e = lz.eliminate_lines();
        assert_eq!(e.nl(), 0);
        let cz = e.to_conzonotope().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for p in cz.sample(200, &mut rng).unwrap() {
            assert!(lz.is_inside(&p).unwrap());
        }
        assert!(cz.is_inside(&v(&[1.0, 1.0])).unwrap());
        assert!(!cz.is_inside(&v(&[1.5, 0.0])).unwrap());
    }

    #[test]
    fn partope_examples() {
        let par = Zonotope::new(m(2, 2, &[1.0, 0.5, 0.2, 1.0]), v(&[1.0, 2.0])).unwrap();
        let p = par.partope_bound().unwrap();
        assert!((p.exact_volume(u128::MAX).unwrap() - par.exact_volume(u128::MAX).unwrap()).abs() < 1e-9);
        let hex = Zonotope::new(m(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]), DVector::zeros(2)).unwrap();
        let p = hex.partope_bound().unwrap();
        assert_eq!(p.ng(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in hex.sample(1000, &mut rng) {
            assert!(p.is_inside(&x).unwrap());
        }
        let flat = Zonotope::new(m(2, 2, &[1.0, 2.0, 0.0, 0.0]), DVector::zeros(2)).unwrap();
        let p = flat.partope_bound().unwrap();
        assert_eq!(p.ng(), 2);
        for x in flat.sample(100, &mut rng) {
            assert!(p.is_inside(&x).unwrap());
        }
    }
}
