//! Set-based state estimation for linear, descriptor and nonlinear
//! discrete-time systems, with measurement-consistency fault flags.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_shape, Error, Result};
use crate::funcdag::FuncDag;
use crate::interval::{Interval, IntervalVector};
use crate::linalg::{hcat, rank};
use crate::polyrelax::pr_lift;
use crate::propagate::{cz_fo, cz_mv, zonotope_fo, zonotope_mv};
use crate::reduction::RescaleMode;
use crate::setqueries::VolumeMetric;
use crate::setrep::{ConZonotope, HPolytope, LineZonotope, Strip, ZonoSet, Zonotope};
use crate::system::{DescriptorSystem, DtSystem, LinearSystem, NonlinearSystem, SimulationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorMethod {
    ZonStrip,
    CzLinear,
    LzLinear,
    CzDescriptor,
    LzDescriptor,
    ZonMv,
    ZonFo,
    CzMv,
    CzFo,
    CzPr,
}

impl EstimatorMethod {
    pub const NONLINEAR: [EstimatorMethod; 5] = [
        EstimatorMethod::ZonMv,
        EstimatorMethod::ZonFo,
        EstimatorMethod::CzMv,
        EstimatorMethod::CzFo,
        EstimatorMethod::CzPr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorMethod::ZonStrip => "zon-strip",
            EstimatorMethod::CzLinear => "cz",
            EstimatorMethod::LzLinear => "lz",
            EstimatorMethod::CzDescriptor => "cz-descriptor",
            EstimatorMethod::LzDescriptor => "lz-descriptor",
            EstimatorMethod::ZonMv => "zon-mv",
            EstimatorMethod::ZonFo => "zon-fo",
            EstimatorMethod::CzMv => "cz-mv",
            EstimatorMethod::CzFo => "cz-fo",
            EstimatorMethod::CzPr => "cz-pr",
        }
    }

    fn system_kind(self) -> &'static str {
        match self {
            EstimatorMethod::ZonStrip | EstimatorMethod::CzLinear | EstimatorMethod::LzLinear => "linear",
            EstimatorMethod::CzDescriptor | EstimatorMethod::LzDescriptor => "descriptor",
            _ => "nonlinear",
        }
    }
}

impl fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EstimatorMethod::ZonStrip,
            EstimatorMethod::CzLinear,
            EstimatorMethod::LzLinear,
            EstimatorMethod::CzDescriptor,
            EstimatorMethod::LzDescriptor,
            EstimatorMethod::ZonMv,
            EstimatorMethod::ZonFo,
            EstimatorMethod::CzMv,
            EstimatorMethod::CzFo,
            EstimatorMethod::CzPr,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::ConfigInvalid(format!("unknown estimator method '{s}'")))
    }
}

/// Complexity caps applied to the updated set after every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub ng: usize,
    pub nc: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { ng: 20, nc: 5 }
    }
}

/// An enclosure in whichever representation the estimator carries.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Zonotope(Zonotope),
    ConZonotope(ConZonotope),
    LineZonotope(LineZonotope),
}

impl Estimate {
    pub fn dim(&self) -> usize {
        match self {
            Estimate::Zonotope(z) => z.dim(),
            Estimate::ConZonotope(z) => z.dim(),
            Estimate::LineZonotope(z) => z.dim(),
        }
    }

    pub fn is_inside(&self, x: &DVector<f64>) -> Result<bool> {
        match self {
            Estimate::Zonotope(z) => z.is_inside(x),
            Estimate::ConZonotope(z) => z.is_inside(x),
            Estimate::LineZonotope(z) => z.is_inside(x),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        match self {
            Estimate::Zonotope(_) => Ok(false),
            Estimate::ConZonotope(z) => z.is_empty(),
            Estimate::LineZonotope(z) => z.is_empty(),
        }
    }

    pub fn interval_hull(&self) -> Result<IntervalVector> {
        match self {
            Estimate::Zonotope(z) => Ok(z.interval_hull()),
            Estimate::ConZonotope(z) => z.interval_hull(),
            Estimate::LineZonotope(z) => z.interval_hull(),
        }
    }

    /// Partope n-th-root volume; infinite for unbounded line zonotopes.
    pub fn volume(&self) -> Result<f64> {
        match self {
            Estimate::Zonotope(z) => z.volume(VolumeMetric::PartopeNthRoot),
            Estimate::ConZonotope(z) => z.volume(VolumeMetric::PartopeNthRoot),
            Estimate::LineZonotope(z) => {
                let z = z.eliminate_lines();
                if z.nl() > 0 {
                    Ok(f64::INFINITY)
                } else {
                    z.to_conzonotope()?.volume(VolumeMetric::PartopeNthRoot)
                }
            }
        }
    }

    pub fn to_zonoset(&self) -> ZonoSet {
        match self {
            Estimate::Zonotope(z) => ZonoSet::Zonotope(z.clone()),
            Estimate::ConZonotope(z) => ZonoSet::ConZonotope(z.clone()),
            Estimate::LineZonotope(z) => ZonoSet::LineZonotope(z.clone()),
        }
    }

    fn reduce(&self, limits: Limits) -> Result<Estimate> {
        Ok(match self {
            Estimate::Zonotope(z) => Estimate::Zonotope(z.reduce(limits.ng)?),
            Estimate::ConZonotope(z) if z.ng() <= limits.ng && z.nc() <= limits.nc => self.clone(),
            Estimate::ConZonotope(z) => Estimate::ConZonotope(z.rescale(RescaleMode::Lp)?.compact()?.reduce(limits.ng, limits.nc)?),
            Estimate::LineZonotope(z) => Estimate::LineZonotope(z.reduce(limits.ng, limits.nc)?),
        })
    }
}

/// Sets closed under the linear prediction step.
pub trait LinearImage: Sized {
    fn map(&self, r: &DMatrix<f64>) -> Result<Self>;
    fn shift(&self, v: &DVector<f64>) -> Result<Self>;
    fn add_zonotope(&self, w: &Zonotope) -> Result<Self>;
}

impl LinearImage for Zonotope {
    fn map(&self, r: &DMatrix<f64>) -> Result<Self> {
        self.linmap(r)
    }
    fn shift(&self, v: &DVector<f64>) -> Result<Self> {
        self.translate(v)
    }
    fn add_zonotope(&self, w: &Zonotope) -> Result<Self> {
        self.minkowski_sum(w)
    }
}

impl LinearImage for ConZonotope {
    fn map(&self, r: &DMatrix<f64>) -> Result<Self> {
        self.linmap(r)
    }
    fn shift(&self, v: &DVector<f64>) -> Result<Self> {
        self.translate(v)
    }
    fn add_zonotope(&self, w: &Zonotope) -> Result<Self> {
        self.minkowski_sum(&w.clone().into())
    }
}

impl LinearImage for LineZonotope {
    fn map(&self, r: &DMatrix<f64>) -> Result<Self> {
        self.linmap(r)
    }
    fn shift(&self, v: &DVector<f64>) -> Result<Self> {
        self.translate(v)
    }
    fn add_zonotope(&self, w: &Zonotope) -> Result<Self> {
        self.minkowski_sum(&w.clone().into())
    }
}

/// `A X̂ ⊕ B_w W ⊕ B_u u`.
pub fn linear_predict<S: LinearImage>(x: &S, sys: &LinearSystem, u: &DVector<f64>, w: &Zonotope) -> Result<S> {
    ensure_shape(u.len() == sys.nu(), || format!("input has length {}, expected {}", u.len(), sys.nu()))?;
    x.map(&sys.a)?.add_zonotope(&w.linmap(&sys.bw)?)?.shift(&(&sys.bu * u))
}

/// Zonotope update by sequential strip intersections; the flag reports a
/// strip that provably misses the prediction.
pub fn linear_update_strips(xbar: &Zonotope, sys: &LinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<(Zonotope, bool)> {
    check_output(y, sys.ny())?;
    let noise = v.linmap(&sys.dv)?.interval_hull();
    let strips = (0..sys.ny())
        .map(|j| (sys.c.row(j).transpose(), Interval::point(y[j]) - noise.get(j)))
        .collect::<Vec<_>>();
    strip_update(xbar, strips)
}

/// Intersects with `{x : pᵀx ∈ r}` for each `(p, r)`.
fn strip_update(xbar: &Zonotope, strips: Vec<(DVector<f64>, Interval)>) -> Result<(Zonotope, bool)> {
    let mut z = xbar.clone();
    let mut fault = false;
    for (p, r) in strips {
        if p.iter().all(|&v| v == 0.0) {
            fault |= !r.contains(0.0);
            continue;
        }
        let s = Strip::new(p, r.mid(), r.rad())?;
        if z.strip_is_disjoint(&s) {
            fault = true;
            continue;
        }
        z = z.intersect_strip(&s)?;
    }
    Ok((z, fault))
}

fn check_output(y: &DVector<f64>, ny: usize) -> Result<()> {
    if y.len() != ny {
        return Err(Error::DimensionMismatch { expected: ny, got: y.len() });
    }
    Ok(())
}

/// `X̄ ∩_C (y ⊕ −D_v V)`.
pub fn linear_update_cz(xbar: &ConZonotope, sys: &LinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<ConZonotope> {
    check_output(y, sys.ny())?;
    let meas = measurement_set(sys, y, v)?;
    xbar.generalized_intersection(&meas.into(), &sys.c)
}

pub fn linear_update_lz(xbar: &LineZonotope, sys: &LinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<LineZonotope> {
    check_output(y, sys.ny())?;
    let meas = measurement_set(sys, y, v)?;
    xbar.generalized_intersection(&meas.into(), &sys.c)
}

fn measurement_set(sys: &LinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<Zonotope> {
    let dv = v.linmap(&sys.dv)?;
    Ok(Zonotope { g: -dv.g, c: y - dv.c })
}

/// Static equations `U₀ᵀA x ∈ −U₀ᵀ(B_w W ⊕ B_u u)` as a map and a set.
fn static_equations(sys: &DescriptorSystem, w: &Zonotope, u_next: &DVector<f64>) -> Result<Option<(DMatrix<f64>, Zonotope)>> {
    let u0 = sys.algebraic_basis();
    if u0.ncols() == 0 {
        return Ok(None);
    }
    let ut = u0.transpose();
    let s = &sys.linear;
    let rhs = w.linmap(&(-&ut * &s.bw))?.translate(&(-&ut * &s.bu * u_next))?;
    Ok(Some((&ut * &s.a, rhs)))
}

/// Descriptor prediction with a constrained zonotope: the admissible box
/// bounds the directions E does not determine.
pub fn descriptor_predict_cz(
    x: &ConZonotope,
    sys: &DescriptorSystem,
    u: &DVector<f64>,
    u_next: &DVector<f64>,
    w: &Zonotope,
    admissible: &IntervalVector,
) -> Result<ConZonotope> {
    let image = linear_predict(x, &sys.linear, u, w)?;
    let n = sys.linear.nx();
    let mut xbar = match sys.e.clone().try_inverse().filter(|_| rank(&sys.e, 1e-10) == n) {
        Some(einv) => image.linmap(&einv)?,
        None => ConZonotope::from_interval(admissible).generalized_intersection(&image, &sys.e)?,
    };
    if let Some((r, set)) = static_equations(sys, w, u_next)? {
        xbar = xbar.generalized_intersection(&set.into(), &r)?;
    }
    Ok(xbar)
}

/// Descriptor prediction with a line zonotope; the prior is all of ℝⁿ.
pub fn descriptor_predict_lz(
    x: &LineZonotope,
    sys: &DescriptorSystem,
    u: &DVector<f64>,
    u_next: &DVector<f64>,
    w: &Zonotope,
) -> Result<LineZonotope> {
    let image = linear_predict(x, &sys.linear, u, w)?;
    let n = sys.linear.nx();
    let mut xbar = match sys.e.clone().try_inverse().filter(|_| rank(&sys.e, 1e-10) == n) {
        Some(einv) => image.linmap(&einv)?,
        None => LineZonotope::realset(n).generalized_intersection(&image, &sys.e)?,
    };
    if let Some((r, set)) = static_equations(sys, w, u_next)? {
        xbar = xbar.generalized_intersection(&set.into(), &r)?;
    }
    Ok(xbar)
}

fn bind_known_input(sys: &NonlinearSystem, u: &DVector<f64>) -> Result<FuncDag> {
    if u.len() != sys.nu {
        return Err(Error::DimensionMismatch { expected: sys.nu, got: u.len() });
    }
    if sys.nu == 0 {
        return Ok(sys.f.clone());
    }
    let base = sys.nx + sys.nw;
    let fixed: Vec<(usize, f64)> = (0..sys.nu).map(|i| (base + i, u[i])).collect();
    sys.f.bind_inputs(&fixed)
}

pub fn nonlinear_predict_zon(
    x: &Zonotope,
    sys: &NonlinearSystem,
    u: &DVector<f64>,
    w: &Zonotope,
    method: EstimatorMethod,
) -> Result<Zonotope> {
    let f = bind_known_input(sys, u)?;
    let xw = x.cartesian(w);
    match method {
        EstimatorMethod::ZonMv => zonotope_mv(&f, &xw),
        EstimatorMethod::ZonFo => zonotope_fo(&f, &xw),
        m => Err(Error::UnsupportedMethod { method: m.name().into(), set: "Zonotope" }),
    }
}

pub fn nonlinear_predict_cz(
    x: &ConZonotope,
    sys: &NonlinearSystem,
    u: &DVector<f64>,
    w: &Zonotope,
    method: EstimatorMethod,
) -> Result<ConZonotope> {
    let f = bind_known_input(sys, u)?;
    let xw = x.cartesian(&w.clone().into());
    match method {
        EstimatorMethod::CzMv => cz_mv(&f, &xw),
        EstimatorMethod::CzFo => cz_fo(&f, &xw),
        EstimatorMethod::CzPr => crate::polyrelax::propagate_pr_cz(&f, &xw),
        m => Err(Error::UnsupportedMethod { method: m.name().into(), set: "ConZonotope" }),
    }
}

/// Strip update from a mean-value linearization of g over
/// `hull(X) × hull(V)`: `g_j(x, v) − pᵀx` is enclosed in an interval R and
/// the measurement gives the strip `pᵀx ∈ y_j − R`. The linearization is
/// redone over each updated set until its hull stops shrinking.
pub fn nonlinear_update_zon(xbar: &Zonotope, sys: &NonlinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<(Zonotope, bool)> {
    check_output(y, sys.ny())?;
    let size = |z: &Zonotope| z.interval_hull().diam().sum();
    let mut z = xbar.clone();
    for _ in 0..ZON_UPDATE_PASSES {
        let before = size(&z);
        let (next, fault) = zon_strip_pass(&z, sys, y, v)?;
        if fault {
            return Ok((next, true));
        }
        let after = size(&next);
        z = next;
        if after > 0.99 * before {
            break;
        }
    }
    Ok((z, false))
}

const ZON_UPDATE_PASSES: usize = 10;

fn zon_strip_pass(xbar: &Zonotope, sys: &NonlinearSystem, y: &DVector<f64>, v: &Zonotope) -> Result<(Zonotope, bool)> {
    let nx = sys.nx;
    let dom = xbar.interval_hull().stack(&v.interval_hull());
    let mid = dom.mid();
    let j = sys.g.jacobian_interval(&dom)?;
    let g_mid = sys.g.eval_real(&mid)?;
    let dev: Vec<Interval> = (0..dom.dim()).map(|i| dom.get(i) - Interval::point(mid[i])).collect();
    let strips = (0..sys.ny())
        .map(|q| {
            let p = DVector::from_fn(nx, |i, _| j.get(q, i).mid());
            let mut r = Interval::point(g_mid[q] - p.dot(&mid.rows(0, nx)));
            for (i, d) in dev.iter().enumerate() {
                let coef = if i < nx { j.get(q, i) - Interval::point(p[i]) } else { j.get(q, i) };
                r = r + coef * *d;
            }
            (p, Interval::point(y[q]) - r)
        })
        .collect();
    strip_update(xbar, strips)
}

/// CZ update: encloses `[x; g(x, v)]` over `X̄ × V`, pins the output block
/// to y and projects back onto x.
/// Passes are repeated on `X̄ ∩ hull(previous)` while the hull keeps
/// shrinking.
pub fn nonlinear_update_cz(
    xbar: &ConZonotope,
    sys: &NonlinearSystem,
    y: &DVector<f64>,
    v: &Zonotope,
    method: EstimatorMethod,
) -> Result<ConZonotope> {
    check_output(y, sys.ny())?;
    let mut z = cz_update_pass(xbar, sys, y, v, method)?;
    let mut hull = z.interval_hull()?;
    for _ in 1..ZON_UPDATE_PASSES {
        let eye = DMatrix::identity(sys.nx, sys.nx);
        let dom = xbar.generalized_intersection(&ConZonotope::from_interval(&hull), &eye)?;
        let next = cz_update_pass(&dom, sys, y, v, method)?;
        let next_hull = next.interval_hull()?;
        let (before, after) = (hull.diam().sum(), next_hull.diam().sum());
        z = next;
        hull = next_hull;
        if after > 0.99 * before {
            break;
        }
    }
    Ok(z)
}

fn cz_update_pass(
    xbar: &ConZonotope,
    sys: &NonlinearSystem,
    y: &DVector<f64>,
    v: &Zonotope,
    method: EstimatorMethod,
) -> Result<ConZonotope> {
    let nx = sys.nx;
    let ny = sys.ny();
    let xv = xbar.cartesian(&v.clone().into());
    let dims: Vec<usize> = (0..nx).collect();
    if method == EstimatorMethod::CzPr {
        let (lifted, rel) = pr_lift(&sys.g, &xv)?;
        let nf = lifted.dim();
        let mut aeq = DMatrix::zeros(ny, nf);
        for (q, &o) in rel.outputs.iter().enumerate() {
            aeq[(q, o)] = 1.0;
        }
        let pin = HPolytope {
            h: DMatrix::zeros(0, nf),
            k: DVector::zeros(0),
            aeq,
            beq: y.clone(),
        };
        let cut = lifted.intersect_halfspaces(&pin)?;
        let x_factors: Vec<usize> = rel.inputs[..nx].to_vec();
        return cut.project(&x_factors)?.compact();
    }
    let h = sys.g.with_input_passthrough(&dims)?;
    let joint = match method {
        EstimatorMethod::CzMv => cz_mv(&h, &xv)?,
        EstimatorMethod::CzFo => cz_fo(&h, &xv)?,
        m => return Err(Error::UnsupportedMethod { method: m.name().into(), set: "ConZonotope" }),
    };
    let r = hcat(ny, &[&DMatrix::zeros(ny, nx), &DMatrix::identity(ny, ny)]);
    let cut = joint.generalized_intersection(&ConZonotope::point(y.clone()), &r)?;
    cut.project(&dims)?.compact()
}

/// Measurement-consistency fault flag: an empty update.
pub fn fault_detect(updated: &Estimate) -> Result<bool> {
    updated.is_empty()
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    pub method: EstimatorMethod,
    pub w: Zonotope,
    pub v: Zonotope,
    pub limits: Limits,
    pub x0: ZonoSet,
    /// State box for constrained-zonotope descriptor estimation.
    pub admissible: Option<IntervalVector>,
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    pub predicted: Estimate,
    pub updated: Estimate,
    pub k: usize,
    pub fault: bool,
}

#[derive(Debug, Clone)]
pub struct Estimator {
    sys: DtSystem,
    cfg: EstimatorConfig,
    state: EstimatorState,
}

impl Estimator {
    pub fn new(sys: DtSystem, cfg: EstimatorConfig) -> Result<Estimator> {
        let matches = matches!(
            (&sys, cfg.method.system_kind()),
            (DtSystem::Linear(_), "linear") | (DtSystem::Descriptor(_), "descriptor") | (DtSystem::Nonlinear(_), "nonlinear")
        );
        if !matches {
            return Err(Error::ConfigInvalid(format!(
                "estimator {} needs a {} system",
                cfg.method,
                cfg.method.system_kind()
            )));
        }
        let n = sys.nx();
        if cfg.limits.ng < n {
            return Err(Error::ConfigInvalid(format!("generator limit {} is below the state dimension {n}", cfg.limits.ng)));
        }
        if cfg.method == EstimatorMethod::CzDescriptor {
            match &cfg.admissible {
                None => return Err(Error::MissingAdmissibleBound),
                Some(b) if !b.is_bounded() => return Err(Error::MissingAdmissibleBound),
                _ => {}
            }
        }
        let x0 = initial_estimate(&cfg)?;
        if x0.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.dim() });
        }
        Ok(Estimator {
            sys,
            state: EstimatorState {
                predicted: x0.clone(),
                updated: x0,
                k: 0,
                fault: false,
            },
            cfg,
        })
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// One prediction–update cycle. `u` is the input applied at the previous
    /// step and `u_next` the input at the current one (used only by the
    /// static equations of descriptor models). An inconsistent measurement
    /// sets the fault flag and keeps the prediction as the estimate.
    pub fn step(&mut self, u: &DVector<f64>, u_next: &DVector<f64>, y: &DVector<f64>) -> Result<&EstimatorState> {
        let (w, v) = (&self.cfg.w, &self.cfg.v);
        let method = self.cfg.method;
        let (predicted, updated, strip_fault) = match (&self.sys, &self.state.updated) {
            (DtSystem::Linear(s), Estimate::Zonotope(x)) => {
                let xbar = linear_predict(x, s, u, w)?;
                let (xhat, f) = linear_update_strips(&xbar, s, y, v)?;
                (Estimate::Zonotope(xbar), Estimate::Zonotope(xhat), f)
            }
            (DtSystem::Linear(s), Estimate::ConZonotope(x)) => {
                let xbar = linear_predict(x, s, u, w)?;
                let xhat = linear_update_cz(&xbar, s, y, v)?;
                (Estimate::ConZonotope(xbar), Estimate::ConZonotope(xhat), false)
            }
            (DtSystem::Linear(s), Estimate::LineZonotope(x)) => {
                let xbar = linear_predict(x, s, u, w)?;
                let xhat = linear_update_lz(&xbar, s, y, v)?;
                (Estimate::LineZonotope(xbar), Estimate::LineZonotope(xhat), false)
            }
            (DtSystem::Descriptor(s), Estimate::ConZonotope(x)) => {
                let b = self.cfg.admissible.as_ref().ok_or(Error::MissingAdmissibleBound)?;
                let xbar = descriptor_predict_cz(x, s, u, u_next, w, b)?;
                let xhat = linear_update_cz(&xbar, &s.linear, y, v)?;
                (Estimate::ConZonotope(xbar), Estimate::ConZonotope(xhat), false)
            }
            (DtSystem::Descriptor(s), Estimate::LineZonotope(x)) => {
                let xbar = descriptor_predict_lz(x, s, u, u_next, w)?;
                let xhat = linear_update_lz(&xbar, &s.linear, y, v)?;
                (Estimate::LineZonotope(xbar), Estimate::LineZonotope(xhat), false)
            }
            (DtSystem::Nonlinear(s), Estimate::Zonotope(x)) => {
                let xbar = nonlinear_predict_zon(x, s, u, w, method)?;
                let (xhat, f) = nonlinear_update_zon(&xbar, s, y, v)?;
                (Estimate::Zonotope(xbar), Estimate::Zonotope(xhat), f)
            }
            (DtSystem::Nonlinear(s), Estimate::ConZonotope(x)) => {
                let xbar = nonlinear_predict_cz(x, s, u, w, method)?;
                let xhat = match nonlinear_update_cz(&xbar, s, y, v, method) {
                    Err(Error::EmptySet) => None,
                    other => Some(other?),
                };
                let upd = match xhat {
                    Some(z) => Estimate::ConZonotope(z),
                    None => Estimate::ConZonotope(empty_cz(s.nx)),
                };
                (Estimate::ConZonotope(xbar), upd, false)
            }
            _ => unreachable!("the estimate kind follows the method"),
        };
        let fault = strip_fault || fault_detect(&updated)?;
        let source = if fault { &predicted } else { &updated };
        let mut next = if fault { predicted.reduce(self.cfg.limits)? } else { reduce_or_keep(&updated, self.cfg.limits)? };
        if let DtSystem::Descriptor(s) = &self.sys {
            if &next != source {
                next = restore_static_rows(next, s, w, u_next)?;
            }
        }
        self.state = EstimatorState {
            predicted,
            updated: next,
            k: self.state.k + 1,
            fault,
        };
        Ok(&self.state)
    }
}

/// Reduction may drop the static equations of a descriptor model; intersect
/// with them again.
fn restore_static_rows(z: Estimate, sys: &DescriptorSystem, w: &Zonotope, u_next: &DVector<f64>) -> Result<Estimate> {
    let Some((r, set)) = static_equations(sys, w, u_next)? else {
        return Ok(z);
    };
    Ok(match z {
        Estimate::ConZonotope(x) => match x.generalized_intersection(&set.into(), &r)?.compact() {
            Ok(c) => Estimate::ConZonotope(c),
            Err(Error::EmptySet) => Estimate::ConZonotope(x),
            Err(e) => return Err(e),
        },
        Estimate::LineZonotope(x) => Estimate::LineZonotope(x.generalized_intersection(&set.into(), &r)?),
        other => other,
    })
}

fn reduce_or_keep(z: &Estimate, limits: Limits) -> Result<Estimate> {
    match z.reduce(limits) {
        Err(Error::EmptySet) => Ok(z.clone()),
        other => other,
    }
}

/// `{0 : ξ = 2}`, an empty set used when compaction proves emptiness.
fn empty_cz(n: usize) -> ConZonotope {
    ConZonotope {
        g: DMatrix::zeros(n, 1),
        c: DVector::zeros(n),
        a: DMatrix::from_element(1, 1, 1.0),
        b: DVector::from_element(1, 2.0),
    }
}

fn initial_estimate(cfg: &EstimatorConfig) -> Result<Estimate> {
    use crate::setrep::SetKind;
    let kind = match cfg.method {
        EstimatorMethod::ZonStrip | EstimatorMethod::ZonMv | EstimatorMethod::ZonFo => SetKind::Zonotope,
        EstimatorMethod::LzLinear | EstimatorMethod::LzDescriptor => SetKind::LineZonotope,
        _ => SetKind::ConZonotope,
    };
    Ok(match cfg.x0.convert(kind)? {
        ZonoSet::Zonotope(z) => Estimate::Zonotope(z),
        ZonoSet::ConZonotope(z) => Estimate::ConZonotope(z),
        ZonoSet::LineZonotope(z) => Estimate::LineZonotope(z),
        _ => unreachable!("converted to an estimator kind"),
    })
}

/// One row of an estimation log.
#[derive(Debug, Clone)]
pub struct StepLog {
    pub k: usize,
    pub hull: IntervalVector,
    pub volume: f64,
    pub fault: bool,
    /// Whether the simulated true state lies in the estimate.
    pub contains_truth: bool,
}

/// Runs the estimator along a simulation; `u[k]` is the input applied at
/// step k (zero when missing).
pub fn run_estimator(sys: &DtSystem, cfg: &EstimatorConfig, rec: &SimulationRecord, u: &[DVector<f64>]) -> Result<Vec<StepLog>> {
    let mut est = Estimator::new(sys.clone(), cfg.clone())?;
    let nu = sys.nu();
    let input = |k: usize| u.get(k).cloned().unwrap_or_else(|| DVector::zeros(nu));
    let mut log = Vec::with_capacity(rec.y.len() + 1);
    log.push(log_row(est.state(), &rec.x[0])?);
    for (k, y) in rec.y.iter().enumerate() {
        est.step(&input(k), &input(k + 1), y)?;
        log.push(log_row(est.state(), &rec.x[k + 1])?);
    }
    Ok(log)
}

fn log_row(s: &EstimatorState, truth: &DVector<f64>) -> Result<StepLog> {
    Ok(StepLog {
        k: s.k,
        hull: s.updated.interval_hull()?,
        volume: s.updated.volume()?,
        fault: s.fault,
        contains_truth: s.updated.is_inside(truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, d: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, d)
    }

    fn two_state() -> LinearSystem {
        LinearSystem::new(
            m(2, 2, &[0.9, 0.2, -0.1, 0.8]),
            DMatrix::identity(2, 2),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 1, &[1.0]),
        )
        .unwrap()
    }

    fn ball(n: usize, r: f64) -> Zonotope {
        Zonotope { g: DMatrix::identity(n, n) * r, c: DVector::zeros(n) }
    }

    #[test]
    fn identity_prediction() {
        let mut sys = two_state();
        sys.a = DMatrix::identity(2, 2);
        let x = ball(2, 1.0);
        let w = Zonotope::point(DVector::zeros(2));
        let p = linear_predict(&x, &sys, &DVector::zeros(1), &w).unwrap();
        assert_eq!(p.compact(), x);
        sys.a = DMatrix::zeros(2, 2);
        let p = linear_predict(&x, &sys, &DVector::from_element(1, 2.0), &ball(2, 0.1)).unwrap();
        assert_eq!(p.c.as_slice(), &[0.0, 2.0]);
        assert!((p.interval_hull().rad() - DVector::from_element(2, 0.1)).amax() < 1e-15);
    }

    #[test]
    fn uninformative_output_keeps_prediction() {
        let mut sys = two_state();
        sys.c = DMatrix::zeros(1, 2);
        let xbar = ball(2, 1.0);
        let (z, fault) = linear_update_strips(&xbar, &sys, &DVector::from_element(1, 0.05), &ball(1, 0.1)).unwrap();
        assert_eq!(z, xbar);
        assert!(!fault);
    }

    #[test]
    fn exact_measurement_collapses_width() {
        let sys = LinearSystem::new(m(1, 1, &[1.0]), m(1, 1, &[1.0]), DMatrix::zeros(1, 0), m(1, 1, &[1.0]), m(1, 1, &[1.0])).unwrap();
        let xbar = ball(1, 1.0);
        let (z, _) = linear_update_strips(&xbar, &sys, &DVector::from_element(1, 0.3), &Zonotope::point(DVector::zeros(1))).unwrap();
        let h = z.interval_hull();
        assert!(h.rad()[0] < 1e-12 && (h.mid()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_measurement_is_empty() {
        let sys = two_state();
        let xbar: ConZonotope = ball(2, 1.0).into();
        let v = ball(1, 0.1);
        let ok = linear_update_cz(&xbar, &sys, &DVector::zeros(1), &v).unwrap();
        assert!(!ok.is_empty().unwrap() && ok.is_inside(&DVector::zeros(2)).unwrap());
        let bad = linear_update_cz(&xbar, &sys, &DVector::from_element(1, 5.0), &v).unwrap();
        assert!(fault_detect(&Estimate::ConZonotope(bad)).unwrap());
    }

    #[test]
    fn descriptor_with_identity_matches_linear() {
        let lin = two_state();
        let d = DescriptorSystem::new(DMatrix::identity(2, 2), lin.clone()).unwrap();
        let x: ConZonotope = ball(2, 1.0).into();
        let (u, w) = (DVector::from_element(1, 0.5), ball(2, 0.1));
        let a = descriptor_predict_cz(&x, &d, &u, &u, &w, &IntervalVector::from_bounds(&[-9.0, -9.0], &[9.0, 9.0]).unwrap()).unwrap();
        let b = linear_predict(&x, &lin, &u, &w).unwrap();
        assert_eq!(a, b);
        let lz: LineZonotope = x.clone().into();
        let a = descriptor_predict_lz(&lz, &d, &u, &u, &w).unwrap();
        assert_eq!(a, linear_predict(&lz, &lin, &u, &w).unwrap());
    }

    #[test]
    fn cz_descriptor_needs_a_box() {
        let lin = two_state();
        let d = DescriptorSystem::new(DMatrix::identity(2, 2), lin).unwrap();
        let cfg = EstimatorConfig {
            method: EstimatorMethod::CzDescriptor,
            w: ball(2, 0.1),
            v: ball(1, 0.1),
            limits: Limits::default(),
            x0: ZonoSet::Zonotope(ball(2, 1.0)),
            admissible: None,
        };
        assert!(matches!(Estimator::new(DtSystem::Descriptor(d), cfg), Err(Error::MissingAdmissibleBound)));
    }

    #[test]
    fn method_names_round_trip() {
        for m in EstimatorMethod::NONLINEAR {
            assert_eq!(m.name().parse::<EstimatorMethod>().unwrap(), m);
        }
        assert!("cz-dc".parse::<EstimatorMethod>().is_err());
    }
}
