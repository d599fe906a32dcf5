//! Closed-form set operations: linear maps, Minkowski sums, Cartesian
//! products, generalized intersections, strip and halfspace intersections,
//! convex hulls, interval-matrix inclusion, closest points and lifting.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use zonoset_optim::{solve_lp, LinearProgram, LpOutcome};

use crate::error::{ensure_shape, Error, Result};
use crate::interval::IntervalMatrix;
use crate::linalg::{blockdiag, hcat, nonzero_columns, select_cols, vcat, vcat_vec};
use crate::setqueries::binomial;
use crate::setrep::{ConZonotope, HPolytope, LineZonotope, Strip, Zonotope};

/// Combination count up to which strip intersection scores candidates by
/// exact volume rather than by Frobenius norm.
const STRIP_EXACT_VOLUME_BUDGET: u128 = 10_000;

fn check_map(r: &DMatrix<f64>, n: usize) -> Result<()> {
    ensure_shape(r.ncols() == n, || {
        format!("map has {} columns, set dimension is {n}", r.ncols())
    })
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    ensure_shape(a == b, || format!("sets live in dimensions {a} and {b}"))
}

impl Zonotope {
    pub fn linmap(&self, r: &DMatrix<f64>) -> Result<Zonotope> {
        check_map(r, self.dim())?;
        Ok(Zonotope {
            g: r * &self.g,
            c: r * &self.c,
        })
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Zonotope> {
        check_same_dim(self.dim(), v.len())?;
        Ok(Zonotope {
            g: self.g.clone(),
            c: &self.c + v,
        })
    }

    pub fn neg(&self) -> Zonotope {
        Zonotope {
            g: -&self.g,
            c: -&self.c,
        }
    }

    pub fn minkowski_sum(&self, w: &Zonotope) -> Result<Zonotope> {
        check_same_dim(self.dim(), w.dim())?;
        Ok(Zonotope {
            g: hcat(self.dim(), &[&self.g, &w.g]),
            c: &self.c + &w.c,
        })
    }

    pub fn cartesian(&self, y: &Zonotope) -> Zonotope {
        Zonotope {
            g: blockdiag(&[&self.g, &y.g]),
            c: vcat_vec(&[&self.c, &y.c]),
        }
    }

    /// Drops zero generators.
    pub fn compact(&self) -> Zonotope {
        Zonotope {
            g: select_cols(&self.g, &nonzero_columns(&self.g, 0.0)),
            c: self.c.clone(),
        }
    }

    /// Zonotope enclosing `Z ∩ S`, choosing the gain among
    /// `{0} ∪ {g_j / pᵀg_j}` by smallest volume (lowest index on ties).
    pub fn intersect_strip(&self, s: &Strip) -> Result<Zonotope> {
        check_same_dim(self.dim(), s.dim())?;
        if !s.sigma.is_finite() {
            return Ok(self.clone());
        }
        let pg = self.g.transpose() * &s.p;
        let pc = s.p.dot(&self.c);
        let reach = pg.iter().map(|v| v.abs()).sum::<f64>();
        if pc - reach >= s.d - s.sigma && pc + reach <= s.d + s.sigma {
            return Ok(self.clone());
        }
        let n = self.dim();
        let scale = pg.amax();
        let mut candidates = vec![DVector::zeros(n)];
        for j in 0..self.ng() {
            if pg[j].abs() > 1e-12 * scale.max(1e-300) {
                candidates.push(self.g.column(j) / pg[j]);
            }
        }
        let use_exact = binomial(self.ng() + 1, n) <= STRIP_EXACT_VOLUME_BUDGET;
        let build = |lambda: &DVector<f64>| -> Zonotope {
            let proj = DMatrix::identity(n, n) - lambda * s.p.transpose();
            let g = hcat(n, &[&(proj * &self.g), &DMatrix::from_column_slice(n, 1, (lambda * s.sigma).as_slice())]);
            Zonotope {
                g: select_cols(&g, &nonzero_columns(&g, 1e-14 * g.amax().max(1e-300))),
                c: &self.c + lambda * (s.d - pc),
            }
        };
        let mut best: Option<(f64, Zonotope)> = None;
        for lambda in &candidates {
            let z = build(lambda);
            let score = if use_exact {
                z.exact_volume(u128::MAX)?
            } else {
                z.g.norm()
            };
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, z));
            }
        }
        Ok(best.expect("λ = 0 is always a candidate").1)
    }

    /// True when the strip provably misses the zonotope.
    pub fn strip_is_disjoint(&self, s: &Strip) -> bool {
        let pc = s.p.dot(&self.c);
        let reach = (self.g.transpose() * &s.p).iter().map(|v| v.abs()).sum::<f64>();
        pc - reach > s.d + s.sigma || pc + reach < s.d - s.sigma
    }

    pub fn convex_hull(&self, w: &Zonotope) -> Result<ConZonotope> {
        ConZonotope::from(self.clone()).convex_hull(&ConZonotope::from(w.clone()))
    }
}

impl ConZonotope {
    pub fn linmap(&self, r: &DMatrix<f64>) -> Result<ConZonotope> {
        check_map(r, self.dim())?;
        Ok(ConZonotope {
            g: r * &self.g,
            c: r * &self.c,
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<ConZonotope> {
        check_same_dim(self.dim(), v.len())?;
        let mut out = self.clone();
        out.c += v;
        Ok(out)
    }

    pub fn minkowski_sum(&self, w: &ConZonotope) -> Result<ConZonotope> {
        check_same_dim(self.dim(), w.dim())?;
        Ok(ConZonotope {
            g: hcat(self.dim(), &[&self.g, &w.g]),
            c: &self.c + &w.c,
            a: blockdiag(&[&self.a, &w.a]),
            b: vcat_vec(&[&self.b, &w.b]),
        })
    }

    pub fn cartesian(&self, y: &ConZonotope) -> ConZonotope {
        ConZonotope {
            g: blockdiag(&[&self.g, &y.g]),
            c: vcat_vec(&[&self.c, &y.c]),
            a: blockdiag(&[&self.a, &y.a]),
            b: vcat_vec(&[&self.b, &y.b]),
        }
    }

    /// `{z ∈ Z : Rz ∈ Y}`.
    pub fn generalized_intersection(&self, y: &ConZonotope, r: &DMatrix<f64>) -> Result<ConZonotope> {
        check_map(r, self.dim())?;
        ensure_shape(r.nrows() == y.dim(), || {
            format!("map has {} rows, second set dimension is {}", r.nrows(), y.dim())
        })?;
        let (ngz, ngy) = (self.ng(), y.ng());
        let coupling = hcat(y.dim(), &[&(r * &self.g), &(-&y.g)]);
        Ok(ConZonotope {
            g: hcat(self.dim(), &[&self.g, &DMatrix::zeros(self.dim(), ngy)]),
            c: self.c.clone(),
            a: vcat(ngz + ngy, &[&blockdiag(&[&self.a, &y.a]), &coupling]),
            b: vcat_vec(&[&self.b, &y.b, &(&y.c - r * &self.c)]),
        })
    }

    pub fn intersect(&self, y: &ConZonotope) -> Result<ConZonotope> {
        self.generalized_intersection(y, &DMatrix::identity(self.dim(), self.dim()))
    }

    /// Exact `Z ∩ P`. Each active inequality gets one slack generator whose
    /// half-range comes from the bound of `hᵀx` over the zonotope
    /// `(G, c)`; equality rows become constraints on the existing ξ.
    pub fn intersect_halfspaces(&self, p: &HPolytope) -> Result<ConZonotope> {
        check_same_dim(self.dim(), p.dim())?;
        let ng = self.ng();
        let mut rows: Vec<(DVector<f64>, f64, f64)> = Vec::new();
        for f in 0..p.h.nrows() {
            let h = p.h.row(f).transpose();
            let hg = self.g.transpose() * &h;
            let hc = h.dot(&self.c);
            let reach: f64 = hg.iter().map(|v| v.abs()).sum();
            let (lo, hi) = (hc - reach, hc + reach);
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::UnboundedSlack);
            }
            let k = p.k[f];
            if k >= hi {
                continue;
            }
            let r = if k >= lo { 0.5 * (k - lo) } else { 0.0 };
            rows.push((hg, r, k - hc - r));
        }
        let ns = rows.len();
        let n_new = ng + ns;
        let neq = p.aeq.nrows();
        let mut a = DMatrix::zeros(self.nc() + ns + neq, n_new);
        let mut b = DVector::zeros(self.nc() + ns + neq);
        a.view_mut((0, 0), (self.nc(), ng)).copy_from(&self.a);
        b.rows_mut(0, self.nc()).copy_from(&self.b);
        for (i, (hg, r, rhs)) in rows.iter().enumerate() {
            let row = self.nc() + i;
            a.view_mut((row, 0), (1, ng)).copy_from(&hg.transpose());
            a[(row, ng + i)] = *r;
            b[row] = *rhs;
        }
        if neq > 0 {
            let row = self.nc() + ns;
            a.view_mut((row, 0), (neq, ng)).copy_from(&(&p.aeq * &self.g));
            b.rows_mut(row, neq).copy_from(&(&p.beq - &p.aeq * &self.c));
        }
        Ok(ConZonotope {
            g: hcat(self.dim(), &[&self.g, &DMatrix::zeros(self.dim(), ns)]),
            c: self.c.clone(),
            a,
            b,
        })
    }

    /// Exact `conv(Z ∪ W)` with one interpolation generator λ and one slack
    /// generator per bound of the rescaled parameters:
    /// `x = (c₁+c₂)/2 + λ(c₁−c₂)/2 + G₁y₁ + G₂y₂`, `|y₁| ≤ (1+λ)/2`,
    /// `|y₂| ≤ (1−λ)/2`.
    pub fn convex_hull(&self, w: &ConZonotope) -> Result<ConZonotope> {
        check_same_dim(self.dim(), w.dim())?;
        let n = self.dim();
        let (n1, n2) = (self.ng(), w.ng());
        let nb = n1 + n2;
        let ng = nb + 1 + 2 * nb;
        let lam = nb;
        let g = hcat(
            n,
            &[
                &self.g,
                &w.g,
                &DMatrix::from_column_slice(n, 1, ((&self.c - &w.c) * 0.5).as_slice()),
                &DMatrix::zeros(n, 2 * nb),
            ],
        );
        let c = (&self.c + &w.c) * 0.5;
        let nc = self.nc() + w.nc() + 2 * nb;
        let mut a = DMatrix::zeros(nc, ng);
        let mut b = DVector::zeros(nc);
        a.view_mut((0, 0), (self.nc(), n1)).copy_from(&self.a);
        for i in 0..self.nc() {
            a[(i, lam)] = -0.5 * self.b[i];
            b[i] = 0.5 * self.b[i];
        }
        let off = self.nc();
        a.view_mut((off, n1), (w.nc(), n2)).copy_from(&w.a);
        for i in 0..w.nc() {
            a[(off + i, lam)] = 0.5 * w.b[i];
            b[off + i] = 0.5 * w.b[i];
        }
        // ±y_i − (1 ± λ)/2 + s = 0 with slack s = 1 + ξ_s ∈ [0, 2].
        let mut row = self.nc() + w.nc();
        let mut slack = nb + 1;
        for i in 0..nb {
            let lam_sign = if i < n1 { -0.5 } else { 0.5 };
            for sign in [1.0, -1.0] {
                a[(row, i)] = sign;
                a[(row, lam)] = lam_sign;
                a[(row, slack)] = 1.0;
                b[row] = -0.5;
                row += 1;
                slack += 1;
            }
        }
        Ok(ConZonotope { g, c, a, b })
    }

    /// Encloses `{Jx : J ∈ [J], x ∈ Z}` by `mid(J)Z ⊕ diag(rad(J)·m)`,
    /// with `m` the magnitude of the interval hull of Z.
    pub fn cz_inclusion(&self, j: &IntervalMatrix) -> Result<ConZonotope> {
        check_map(&j.mid(), self.dim())?;
        let hull = self.interval_hull()?;
        if !hull.is_bounded() {
            return Err(Error::UnboundedSet);
        }
        let box_rad = j.rad() * hull.mag();
        let mid = self.linmap(&j.mid())?;
        let d = DMatrix::from_diagonal(&box_rad);
        let d = select_cols(&d, &nonzero_columns(&d, 0.0));
        let ng_box = d.ncols();
        Ok(ConZonotope {
            g: hcat(mid.dim(), &[&mid.g, &d]),
            c: mid.c,
            a: hcat(self.nc(), &[&self.a, &DMatrix::zeros(self.nc(), ng_box)]),
            b: self.b.clone(),
        })
    }

    /// A point of Z minimizing `‖z − h‖∞`.
    pub fn closest_point(&self, h: &DVector<f64>) -> Result<DVector<f64>> {
        check_same_dim(self.dim(), h.len())?;
        let (n, ng) = (self.dim(), self.ng());
        let nv = ng + 1;
        let t_col = DMatrix::from_element(n, 1, -1.0);
        let ineq = vcat(nv, &[&hcat(n, &[&self.g, &t_col]), &hcat(n, &[&(-&self.g), &t_col])]);
        let rhs = vcat_vec(&[&(h - &self.c), &(&self.c - h)]);
        let mut lower = DVector::from_element(nv, -1.0);
        let mut upper = DVector::from_element(nv, 1.0);
        lower[ng] = 0.0;
        upper[ng] = f64::INFINITY;
        let mut obj = DVector::zeros(nv);
        obj[ng] = 1.0;
        let lp = LinearProgram::new(nv)
            .with_objective(obj)
            .with_equalities(hcat(self.nc(), &[&self.a, &DMatrix::zeros(self.nc(), 1)]), self.b.clone())
            .with_inequalities(ineq, rhs)
            .with_bounds(lower, upper);
        match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => Ok(&self.c + &self.g * s.x.rows(0, ng)),
            _ => Err(Error::EmptySet),
        }
    }

    /// Embeds the set as the zonotope `([G; A], [c; −b])` in `ℝ^{n+n_c}`.
    pub fn lift(&self) -> LiftedZonotope {
        LiftedZonotope {
            zonotope: Zonotope {
                g: vcat(self.ng(), &[&self.g, &self.a]),
                c: vcat_vec(&[&self.c, &(-&self.b)]),
            },
            n: self.dim(),
        }
    }
}

/// A zonotope in `ℝ^{n+n_c}` whose trailing coordinates encode the
/// constraints of a constrained zonotope in `ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedZonotope {
    pub zonotope: Zonotope,
    pub n: usize,
}

impl LiftedZonotope {
    /// Tags `z` as lifted with `n` leading state coordinates.
    pub fn tag(zonotope: Zonotope, n: usize) -> Result<Self> {
        if n > zonotope.dim() {
            return Err(Error::NotALiftedSet);
        }
        Ok(LiftedZonotope { zonotope, n })
    }

    pub fn nc(&self) -> usize {
        self.zonotope.dim() - self.n
    }

    pub fn unlift(&self) -> ConZonotope {
        let (n, nc, ng) = (self.n, self.nc(), self.zonotope.ng());
        ConZonotope {
            g: self.zonotope.g.rows(0, n).into_owned(),
            c: self.zonotope.c.rows(0, n).into_owned(),
            a: self.zonotope.g.view((n, 0), (nc, ng)).into_owned(),
            b: -self.zonotope.c.rows(n, nc).into_owned(),
        }
    }
}

impl LineZonotope {
    pub fn linmap(&self, r: &DMatrix<f64>) -> Result<LineZonotope> {
        check_map(r, self.dim())?;
        Ok(LineZonotope {
            m: r * &self.m,
            g: r * &self.g,
            c: r * &self.c,
            s: self.s.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<LineZonotope> {
        check_same_dim(self.dim(), v.len())?;
        let mut out = self.clone();
        out.c += v;
        Ok(out)
    }

    pub fn minkowski_sum(&self, w: &LineZonotope) -> Result<LineZonotope> {
        check_same_dim(self.dim(), w.dim())?;
        Ok(LineZonotope {
            m: hcat(self.dim(), &[&self.m, &w.m]),
            g: hcat(self.dim(), &[&self.g, &w.g]),
            c: &self.c + &w.c,
            s: blockdiag(&[&self.s, &w.s]),
            a: blockdiag(&[&self.a, &w.a]),
            b: vcat_vec(&[&self.b, &w.b]),
        })
    }

    pub fn cartesian(&self, y: &LineZonotope) -> LineZonotope {
        LineZonotope {
            m: blockdiag(&[&self.m, &y.m]),
            g: blockdiag(&[&self.g, &y.g]),
            c: vcat_vec(&[&self.c, &y.c]),
            s: blockdiag(&[&self.s, &y.s]),
            a: blockdiag(&[&self.a, &y.a]),
            b: vcat_vec(&[&self.b, &y.b]),
        }
    }

    /// `{z ∈ Z : Rz ∈ Y}`, with the line blocks coupled by `[R M_z  −M_y]`.
    pub fn generalized_intersection(&self, y: &LineZonotope, r: &DMatrix<f64>) -> Result<LineZonotope> {
        check_map(r, self.dim())?;
        ensure_shape(r.nrows() == y.dim(), || {
            format!("map has {} rows, second set dimension is {}", r.nrows(), y.dim())
        })?;
        let n = self.dim();
        Ok(LineZonotope {
            m: hcat(n, &[&self.m, &DMatrix::zeros(n, y.nl())]),
            g: hcat(n, &[&self.g, &DMatrix::zeros(n, y.ng())]),
            c: self.c.clone(),
            s: vcat(
                self.nl() + y.nl(),
                &[&blockdiag(&[&self.s, &y.s]), &hcat(y.dim(), &[&(r * &self.m), &(-&y.m)])],
            ),
            a: vcat(
                self.ng() + y.ng(),
                &[&blockdiag(&[&self.a, &y.a]), &hcat(y.dim(), &[&(r * &self.g), &(-&y.g)])],
            ),
            b: vcat_vec(&[&self.b, &y.b, &(&y.c - r * &self.c)]),
        })
    }

    pub fn intersect(&self, y: &LineZonotope) -> Result<LineZonotope> {
        self.generalized_intersection(y, &DMatrix::identity(self.dim(), self.dim()))
    }
}

/// All sign vectors of length `n` (for brute-force corner enumeration in tests
/// and small oracles).
pub fn sign_vectors(n: usize) -> impl Iterator<Item = DVector<f64>> {
    (0..n)
        .map(|_| [-1.0, 1.0])
        .multi_cartesian_product()
        .map(DVector::from_vec)
}
