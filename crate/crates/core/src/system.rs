//! Discrete-time models with bounded uncertainty and their simulation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_shape, Error, Result};
use crate::funcdag::{DagSpec, FuncDag};
use crate::linalg::{left_null_space, pinv, rank, vcat, vcat_vec};
use crate::setrep::Zonotope;

/// `x_k = A x_{k−1} + B_w w_{k−1} + B_u u_{k−1}`, `y_k = C x_k + D_v v_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    #[serde(rename = "A", with = "crate::serde_util::matrix")]
    pub a: DMatrix<f64>,
    #[serde(rename = "Bw", with = "crate::serde_util::matrix")]
    pub bw: DMatrix<f64>,
    #[serde(rename = "Bu", with = "crate::serde_util::matrix")]
    pub bu: DMatrix<f64>,
    #[serde(rename = "C", with = "crate::serde_util::matrix")]
    pub c: DMatrix<f64>,
    #[serde(rename = "Dv", with = "crate::serde_util::matrix")]
    pub dv: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, bw: DMatrix<f64>, bu: DMatrix<f64>, c: DMatrix<f64>, dv: DMatrix<f64>) -> Result<Self> {
        let sys = LinearSystem { a, bw, bu, c, dv };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let nx = self.a.nrows();
        ensure_shape(self.a.ncols() == nx, || format!("A is {}×{}", nx, self.a.ncols()))?;
        ensure_shape(self.bw.nrows() == nx, || format!("Bw has {} rows, expected {nx}", self.bw.nrows()))?;
        ensure_shape(self.bu.nrows() == nx, || format!("Bu has {} rows, expected {nx}", self.bu.nrows()))?;
        ensure_shape(self.c.ncols() == nx, || format!("C has {} columns, expected {nx}", self.c.ncols()))?;
        ensure_shape(self.dv.nrows() == self.c.nrows(), || {
            format!("Dv has {} rows, C has {}", self.dv.nrows(), self.c.nrows())
        })
    }

    pub fn nx(&self) -> usize {
        self.a.nrows()
    }

    pub fn nw(&self) -> usize {
        self.bw.ncols()
    }

    pub fn nu(&self) -> usize {
        self.bu.ncols()
    }

    pub fn ny(&self) -> usize {
        self.c.nrows()
    }

    pub fn nv(&self) -> usize {
        self.dv.ncols()
    }
}

/// `E x_k = A x_{k−1} + B_w w_{k−1} + B_u u_{k−1}` with possibly singular E.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSystem {
    #[serde(rename = "E", with = "crate::serde_util::matrix")]
    pub e: DMatrix<f64>,
    #[serde(flatten)]
    pub linear: LinearSystem,
}

impl DescriptorSystem {
    pub fn new(e: DMatrix<f64>, linear: LinearSystem) -> Result<Self> {
        let sys = DescriptorSystem { e, linear };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        self.linear.validate()?;
        let n = self.linear.nx();
        ensure_shape(self.e.shape() == (n, n), || format!("E is {:?}, expected {n}×{n}", self.e.shape()))
    }

    /// Orthonormal basis `U₀` of the left null space of E, as columns. Each
    /// column gives a static equation `U₀ᵀ(A x_k + B_w w_k + B_u u_k) = 0`.
    pub fn algebraic_basis(&self) -> DMatrix<f64> {
        left_null_space(&self.e, 1e-10)
    }
}

/// `x_k = f(x_{k−1}, w_{k−1}, u_{k−1})`, `y_k = g(x_k, v_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSystem {
    pub f: FuncDag,
    pub g: FuncDag,
    pub nx: usize,
    pub nw: usize,
    pub nu: usize,
    pub nv: usize,
}

impl NonlinearSystem {
    pub fn new(f: FuncDag, g: FuncDag, nx: usize, nw: usize, nu: usize, nv: usize) -> Result<Self> {
        let arity = |what: &str, got: usize, expected: usize| {
            if got == expected {
                Ok(())
            } else {
                Err(Error::ConfigInvalid(format!("{what} takes {got} inputs, expected {expected}")))
            }
        };
        arity("f", f.n_inputs(), nx + nw + nu)?;
        arity("g", g.n_inputs(), nx + nv)?;
        if f.n_outputs() != nx {
            return Err(Error::ConfigInvalid(format!("f has {} outputs, expected {nx}", f.n_outputs())));
        }
        Ok(NonlinearSystem { f, g, nx, nw, nu, nv })
    }

    pub fn ny(&self) -> usize {
        self.g.n_outputs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DtSystem {
    Linear(LinearSystem),
    Descriptor(DescriptorSystem),
    Nonlinear(NonlinearSystem),
}

impl DtSystem {
    pub fn nx(&self) -> usize {
        match self {
            DtSystem::Linear(s) => s.nx(),
            DtSystem::Descriptor(s) => s.linear.nx(),
            DtSystem::Nonlinear(s) => s.nx,
        }
    }

    pub fn nu(&self) -> usize {
        match self {
            DtSystem::Linear(s) => s.nu(),
            DtSystem::Descriptor(s) => s.linear.nu(),
            DtSystem::Nonlinear(s) => s.nu,
        }
    }
}

/// JSON form of a system.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemSpec {
    Linear(LinearSystem),
    Descriptor(DescriptorSystem),
    Nonlinear {
        f: DagSpec,
        g: DagSpec,
        nx: usize,
        nw: usize,
        #[serde(default)]
        nu: usize,
        nv: usize,
    },
}

impl SystemSpec {
    pub fn build(&self) -> Result<DtSystem> {
        let config = |e: Error| match e {
            Error::ShapeMismatch(m) => Error::ConfigInvalid(m),
            other => other,
        };
        Ok(match self {
            SystemSpec::Linear(s) => {
                s.validate().map_err(config)?;
                DtSystem::Linear(s.clone())
            }
            SystemSpec::Descriptor(s) => {
                s.validate().map_err(config)?;
                DtSystem::Descriptor(s.clone())
            }
            SystemSpec::Nonlinear { f, g, nx, nw, nu, nv } => {
                DtSystem::Nonlinear(NonlinearSystem::new(f.build()?, g.build()?, *nx, *nw, *nu, *nv)?)
            }
        })
    }
}

/// States `x_0..x_N`, outputs `y_1..y_N` and the drawn uncertainties
/// (`w[k]` enters the step to `x_{k+1}`, `v[k]` the output `y_{k+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub w: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

fn input_at(u: &[DVector<f64>], k: usize, nu: usize) -> Result<DVector<f64>> {
    match u.get(k) {
        Some(v) if v.len() == nu => Ok(v.clone()),
        Some(v) => Err(Error::DimensionMismatch { expected: nu, got: v.len() }),
        None => Ok(DVector::zeros(nu)),
    }
}

fn draw(z: &Zonotope, rng: &mut ChaCha8Rng) -> DVector<f64> {
    z.sample(1, rng).pop().expect("one sample requested")
}

/// Simulates `n` steps from `x0` with uncertainties drawn from W and V.
/// Missing known inputs are zero.
pub fn simulate(
    sys: &DtSystem,
    x0: &DVector<f64>,
    n: usize,
    w: &Zonotope,
    v: &Zonotope,
    u: &[DVector<f64>],
    seed: u64,
) -> Result<SimulationRecord> {
    let nx = sys.nx();
    if x0.len() != nx {
        return Err(Error::DimensionMismatch { expected: nx, got: x0.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Descriptor steps need the disturbance one step ahead.
    let n_w = if matches!(sys, DtSystem::Descriptor(_)) { n + 1 } else { n };
    let ws: Vec<DVector<f64>> = (0..n_w).map(|_| draw(w, &mut rng)).collect();
    let vs: Vec<DVector<f64>> = (0..n).map(|_| draw(v, &mut rng)).collect();
    let nu = sys.nu();
    let mut xs = vec![x0.clone()];
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let prev = &xs[k];
        let uk = input_at(u, k, nu)?;
        let next = match sys {
            DtSystem::Linear(s) => {
                check_noise(s.nw(), ws[k].len())?;
                &s.a * prev + &s.bw * &ws[k] + &s.bu * &uk
            }
            DtSystem::Descriptor(s) => {
                check_noise(s.linear.nw(), ws[k].len())?;
                descriptor_step(s, prev, &ws[k], &uk, &ws[k + 1], &input_at(u, k + 1, nu)?)?
            }
            DtSystem::Nonlinear(s) => {
                check_noise(s.nw, ws[k].len())?;
                s.f.eval_real(&vcat_vec(&[prev, &ws[k], &uk]))?
            }
        };
        let y = match sys {
            DtSystem::Linear(s) | DtSystem::Descriptor(DescriptorSystem { linear: s, .. }) => {
                check_noise(s.nv(), vs[k].len())?;
                &s.c * &next + &s.dv * &vs[k]
            }
            DtSystem::Nonlinear(s) => {
                check_noise(s.nv, vs[k].len())?;
                s.g.eval_real(&vcat_vec(&[&next, &vs[k]]))?
            }
        };
        xs.push(next);
        ys.push(y);
    }
    Ok(SimulationRecord { x: xs, y: ys, w: ws, v: vs })
}

fn check_noise(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Solves `E x = A x_prev + B_w w + B_u u` together with the static
/// equations `U₀ᵀ(A x + B_w w_next + B_u u_next) = 0`.
pub fn descriptor_step(
    sys: &DescriptorSystem,
    prev: &DVector<f64>,
    w: &DVector<f64>,
    u: &DVector<f64>,
    w_next: &DVector<f64>,
    u_next: &DVector<f64>,
) -> Result<DVector<f64>> {
    let s = &sys.linear;
    let n = s.nx();
    let u0 = sys.algebraic_basis();
    let rhs = &s.a * prev + &s.bw * w + &s.bu * u;
    let scale = 1.0 + rhs.amax();
    let lhs = u0.transpose() * &rhs;
    if lhs.amax() > 1e-9 * scale {
        return Err(Error::IllPosedDescriptor(format!(
            "previous state violates the static equations by {:.3e}",
            lhs.amax()
        )));
    }
    let m = vcat(n, &[&sys.e, &(u0.transpose() * &s.a)]);
    if rank(&m, 1e-10) < n {
        return Err(Error::IllPosedDescriptor("the next state is not uniquely determined".into()));
    }
    let full = vcat_vec(&[&rhs, &(-(u0.transpose() * (&s.bw * w_next + &s.bu * u_next)))]);
    let x = pinv(&m) * &full;
    let resid = (&m * &x - &full).amax();
    if resid > 1e-9 * (1.0 + full.amax()) {
        return Err(Error::IllPosedDescriptor(format!("inconsistent step, residual {resid:.3e}")));
    }
    Ok(x)
}
