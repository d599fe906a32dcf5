//! Open-loop active fault diagnosis: an input sequence, as small as possible
//! in the ∞-norm, after which the stacked output tubes of every pair of
//! candidate models are separated with a margin.
//!
//! The output tube over the horizon is kept exact: the shared initial-state,
//! process-noise and measurement-noise factors appear once per model, so the
//! stacked outputs `(y₁, …, y_N)` stay correlated across time steps. Its
//! center is affine in the stacked input `ũ = (u₀, …, u_{N−1})`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use zonoset_optim::{solve_milp, LinearProgram, MilpOutcome, MixedIntegerProgram};

use crate::error::{ensure_shape, Error, Result};
use crate::interval::IntervalVector;
use crate::linalg::{hcat, vcat, vcat_vec};
use crate::setqueries::DEFAULT_COMBO_BUDGET;
use crate::setrep::{ConZonotope, Zonotope};
use crate::system::LinearSystem;

/// Extra slack on every separating row so that the certificate is not
/// decided by solver round-off.
const ROW_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFamily {
    pub models: Vec<LinearSystem>,
    pub x0: Zonotope,
    pub w: Zonotope,
    pub v: Zonotope,
    pub horizon: usize,
    /// Admissible input at every step, of dimension `n_u`.
    pub u_box: IntervalVector,
    /// Required ∞-norm gap between the output tubes.
    pub eps: f64,
}

impl ModelFamily {
    pub fn validate(&self) -> Result<()> {
        let first = self.models.first().ok_or_else(|| Error::ConfigInvalid("model family is empty".into()))?;
        for (i, m) in self.models.iter().enumerate() {
            m.validate()?;
            ensure_shape(
                m.nx() == first.nx() && m.nu() == first.nu() && m.ny() == first.ny(),
                || format!("model {i} has (nx, nu, ny) = ({}, {}, {})", m.nx(), m.nu(), m.ny()),
            )?;
            ensure_shape(m.nw() == self.w.dim(), || format!("model {i}: Bw has {} columns, W has dimension {}", m.nw(), self.w.dim()))?;
            ensure_shape(m.dv.ncols() == self.v.dim(), || {
                format!("model {i}: Dv has {} columns, V has dimension {}", m.dv.ncols(), self.v.dim())
            })?;
        }
        ensure_shape(self.x0.dim() == first.nx(), || format!("X0 has dimension {}, nx is {}", self.x0.dim(), first.nx()))?;
        ensure_shape(self.u_box.dim() == first.nu(), || format!("U has dimension {}, nu is {}", self.u_box.dim(), first.nu()))?;
        if self.horizon == 0 {
            return Err(Error::ConfigInvalid("horizon must be at least 1".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::ConfigInvalid(format!("margin must be positive, got {}", self.eps)));
        }
        if self.u_box.lo().iter().chain(self.u_box.hi().iter()).any(|v| !v.is_finite()) {
            return Err(Error::ConfigInvalid("input box must be bounded".into()));
        }
        Ok(())
    }

    pub fn nu(&self) -> usize {
        self.u_box.dim()
    }

    /// Length of the stacked input `ũ`.
    pub fn input_len(&self) -> usize {
        self.horizon * self.nu()
    }

    /// `U^N` as lower and upper vectors.
    pub fn stacked_bounds(&self) -> (DVector<f64>, DVector<f64>) {
        let nu = self.nu();
        let lo = DVector::from_fn(self.input_len(), |i, _| self.u_box.lo()[i % nu]);
        let hi = DVector::from_fn(self.input_len(), |i, _| self.u_box.hi()[i % nu]);
        (lo, hi)
    }

    pub fn tube(&self, model: usize) -> Result<OutputTube> {
        let sys = self
            .models
            .get(model)
            .ok_or(Error::IndexOutOfRange { index: model, dim: self.models.len() })?;
        output_tube(sys, &self.x0, &self.w, &self.v, self.horizon)
    }
}

/// The stacked output set `{F ũ + d + G ξ : ‖ξ‖∞ ≤ 1}` in `ℝ^{N·n_y}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTube {
    pub g: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl OutputTube {
    pub fn center(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_shape(u.len() == self.f.ncols(), || format!("input has length {}, expected {}", u.len(), self.f.ncols()))?;
        Ok(&self.f * u + &self.d)
    }

    pub fn at(&self, u: &DVector<f64>) -> Result<Zonotope> {
        Ok(Zonotope {
            g: self.g.clone(),
            c: self.center(u)?,
        })
    }
}

/// Exact stacked output tube `(y₁, …, y_N)` of one model driven by
/// `u₀, …, u_{N−1}`.
pub fn output_tube(sys: &LinearSystem, x0: &Zonotope, w: &Zonotope, v: &Zonotope, horizon: usize) -> Result<OutputTube> {
    sys.validate()?;
    ensure_shape(horizon >= 1, || "horizon must be at least 1".into())?;
    ensure_shape(x0.dim() == sys.nx(), || format!("X0 has dimension {}, nx is {}", x0.dim(), sys.nx()))?;
    ensure_shape(w.dim() == sys.nw(), || format!("W has dimension {}, nw is {}", w.dim(), sys.nw()))?;
    ensure_shape(v.dim() == sys.dv.ncols(), || format!("V has dimension {}, Dv has {} columns", v.dim(), sys.dv.ncols()))?;
    let (nx, nu, ny) = (sys.nx(), sys.nu(), sys.ny());
    let (g0, gw, gv) = (x0.ng(), w.ng(), v.ng());
    let p = g0 + horizon * (gw + gv);
    let m = horizon * nu;

    let mut gx = DMatrix::zeros(nx, p);
    gx.view_mut((0, 0), (nx, g0)).copy_from(&x0.g);
    let mut cx = x0.c.clone();
    let mut fx = DMatrix::zeros(nx, m);
    let bw_gw = &sys.bw * &w.g;
    let bw_cw = &sys.bw * &w.c;
    let dv_gv = &sys.dv * &v.g;
    let dv_cv = &sys.dv * &v.c;

    let mut g = DMatrix::zeros(horizon * ny, p);
    let mut f = DMatrix::zeros(horizon * ny, m);
    let mut d = DVector::zeros(horizon * ny);
    for k in 1..=horizon {
        gx = &sys.a * &gx;
        gx.view_mut((0, g0 + (k - 1) * gw), (nx, gw)).copy_from(&bw_gw);
        cx = &sys.a * &cx + &bw_cw;
        fx = &sys.a * &fx;
        fx.view_mut((0, (k - 1) * nu), (nx, nu)).copy_from(&sys.bu);

        let row = (k - 1) * ny;
        let mut gy = &sys.c * &gx;
        gy.view_mut((0, g0 + horizon * gw + (k - 1) * gv), (ny, gv)).copy_from(&dv_gv);
        g.view_mut((row, 0), (ny, p)).copy_from(&gy);
        f.view_mut((row, 0), (ny, m)).copy_from(&(&sys.c * &fx));
        d.rows_mut(row, ny).copy_from(&(&sys.c * &cx + &dv_cv));
    }
    Ok(OutputTube { g, f, d })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCertificate {
    pub pair: (usize, usize),
    /// LP verdict that the two tubes do not intersect.
    pub separated: bool,
    /// ∞-norm distance between the two tubes.
    pub distance: f64,
    pub margin_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatingInput {
    #[serde(with = "crate::serde_util::vector")]
    pub u: DVector<f64>,
    /// `‖ũ‖∞`.
    pub objective: f64,
    pub certificates: Vec<PairCertificate>,
    pub nodes: usize,
}

impl SeparatingInput {
    pub fn certified(&self) -> bool {
        self.certificates.iter().all(|c| c.separated && c.margin_met)
    }
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Checks every pair of tubes under input `u` by LP: emptiness of the
/// intersection and the ∞-distance between the sets.
pub fn certify(fam: &ModelFamily, u: &DVector<f64>) -> Result<Vec<PairCertificate>> {
    fam.validate()?;
    let tubes = (0..fam.models.len()).map(|i| fam.tube(i)).collect::<Result<Vec<_>>>()?;
    pairs(tubes.len())
        .map(|(i, j)| {
            let yi = ConZonotope::from(tubes[i].at(u)?);
            let yj = ConZonotope::from(tubes[j].at(u)?);
            let n = yi.dim();
            let separated = yi.generalized_intersection(&yj, &DMatrix::identity(n, n))?.is_empty()?;
            let diff = ConZonotope::from(Zonotope {
                g: hcat(n, &[&tubes[i].g, &tubes[j].g]),
                c: tubes[i].center(u)? - tubes[j].center(u)?,
            });
            let distance = diff.closest_point(&DVector::zeros(n))?.amax();
            Ok(PairCertificate {
                pair: (i, j),
                separated,
                distance,
                margin_met: distance >= fam.eps * (1.0 - 1e-9),
            })
        })
        .collect()
}

pub fn design_separating_input(fam: &ModelFamily) -> Result<SeparatingInput> {
    design_separating_input_with_budget(fam, DEFAULT_COMBO_BUDGET)
}

/// Minimizes `‖ũ‖∞` over `U^N` such that, for every pair `(i, j)`, the
/// origin lies outside `Ỹ_i(ũ) ⊕ (−Ỹ_j(ũ)) ⊕ ε·B∞`. Each pair contributes the
/// facets of that set with one binary per facet and a big-M disjunction.
pub fn design_separating_input_with_budget(fam: &ModelFamily, budget: u128) -> Result<SeparatingInput> {
    fam.validate()?;
    let tubes = (0..fam.models.len()).map(|i| fam.tube(i)).collect::<Result<Vec<_>>>()?;
    let m = fam.input_len();
    let (ulo, uhi) = fam.stacked_bounds();
    let umax = DVector::from_fn(m, |i, _| ulo[i].abs().max(uhi[i].abs()));

    // Facet rows as (coefficients on ũ, −M, right-hand side) for h·Fũ + M·δ ≤ M − k − h·d.
    let mut blocks: Vec<Vec<(DVector<f64>, f64, f64)>> = Vec::new();
    for (i, j) in pairs(tubes.len()) {
        let ny = tubes[i].g.nrows();
        let z = Zonotope {
            g: hcat(ny, &[&tubes[i].g, &tubes[j].g, &(DMatrix::identity(ny, ny) * fam.eps)]),
            c: DVector::zeros(ny),
        };
        let hp = z.hrep_with_budget(budget)?;
        let fij = &tubes[i].f - &tubes[j].f;
        let dij = &tubes[i].d - &tubes[j].d;
        let rows = (0..hp.h.nrows())
            .map(|r| {
                let h = hp.h.row(r).transpose();
                let hf = fij.transpose() * &h;
                let hd = h.dot(&dij);
                let k = hp.k[r] + ROW_SLACK;
                let big_m = k + hf.abs().dot(&umax) + hd.abs() + 1.0;
                (hf, big_m, big_m - k - hd)
            })
            .collect();
        blocks.push(rows);
    }

    let nf: usize = blocks.iter().map(Vec::len).sum();
    let nv = m + 1 + nf;
    let t = m;
    let mut ineq_rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut row = DVector::zeros(nv);
            row[i] = s;
            row[t] = -1.0;
            ineq_rows.push(row);
            rhs.push(0.0);
        }
    }
    let mut next = m + 1;
    for block in &blocks {
        let mut any = DVector::zeros(nv);
        for (hf, big_m, b) in block {
            let mut row = DVector::zeros(nv);
            row.rows_mut(0, m).copy_from(hf);
            row[next] = *big_m;
            ineq_rows.push(row);
            rhs.push(*b);
            any[next] = -1.0;
            next += 1;
        }
        ineq_rows.push(any);
        rhs.push(-1.0);
    }
    let a = DMatrix::from_fn(ineq_rows.len(), nv, |r, c| ineq_rows[r][c]);
    let lower = vcat_vec(&[&ulo, &DVector::zeros(1 + nf)]);
    let upper = vcat_vec(&[&uhi, &DVector::from_element(1, umax.max()), &DVector::from_element(nf, 1.0)]);
    let mut obj = DVector::zeros(nv);
    obj[t] = 1.0;
    let lp = LinearProgram::new(nv)
        .with_objective(obj)
        .with_inequalities(vcat(nv, &[&a]), DVector::from_vec(rhs))
        .with_bounds(lower, upper);
    let mip = MixedIntegerProgram::new(lp, (m + 1..nv).collect());
    let sol = match solve_milp(&mip)? {
        MilpOutcome::Optimal(s) => s,
        MilpOutcome::Infeasible => return Err(Error::InfeasibleSeparation),
    };
    let u = DVector::from_fn(m, |i, _| sol.x[i].clamp(ulo[i], uhi[i]));
    let certificates = certify(fam, &u)?;
    let out = SeparatingInput {
        objective: u.amax(),
        u,
        certificates,
        nodes: sol.nodes,
    };
    if !out.certified() {
        return Err(Error::InfeasibleSeparation);
    }
    Ok(out)
}
