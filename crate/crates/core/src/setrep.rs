//! Set representation records: strips, zonotopes, constrained zonotopes,
//! line zonotopes and H-polytopes, their constructors and lossless
//! conversions.
//!
//! Empty blocks are zero-column (or zero-row) matrices, so every record is
//! shape-total.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_shape, Error, Result};
use crate::interval::IntervalVector;

/// Slab `{s : |pᵀs − d| ≤ σ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    #[serde(with = "crate::serde_util::vector")]
    pub p: DVector<f64>,
    pub d: f64,
    pub sigma: f64,
}

impl Strip {
    pub fn new(p: DVector<f64>, d: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::DomainViolation(format!("strip half-width {sigma} < 0")));
        }
        if p.iter().all(|&v| v == 0.0) {
            return Err(Error::DomainViolation("strip normal is zero".into()));
        }
        Ok(Strip { p, d, sigma })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (self.p.dot(x) - self.d).abs() <= self.sigma + tol
    }
}

/// `{c + Gξ : ‖ξ‖∞ ≤ 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zonotope {
    #[serde(rename = "G", with = "crate::serde_util::matrix")]
    pub g: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub c: DVector<f64>,
}

/// `{c + Gξ : ‖ξ‖∞ ≤ 1, Aξ = b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConZonotope {
    #[serde(rename = "G", with = "crate::serde_util::matrix")]
    pub g: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub c: DVector<f64>,
    #[serde(rename = "A", with = "crate::serde_util::matrix")]
    pub a: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub b: DVector<f64>,
}

/// `{c + Mδ + Gξ : ‖ξ‖∞ ≤ 1, Sδ + Aξ = b}` with δ free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineZonotope {
    #[serde(rename = "M", with = "crate::serde_util::matrix")]
    pub m: DMatrix<f64>,
    #[serde(rename = "G", with = "crate::serde_util::matrix")]
    pub g: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub c: DVector<f64>,
    #[serde(rename = "S", with = "crate::serde_util::matrix")]
    pub s: DMatrix<f64>,
    #[serde(rename = "A", with = "crate::serde_util::matrix")]
    pub a: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub b: DVector<f64>,
}

/// `{x : Hx ≤ k, Aeq x = beq}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HPolytope {
    #[serde(rename = "H", with = "crate::serde_util::matrix")]
    pub h: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub k: DVector<f64>,
    #[serde(rename = "Aeq", with = "crate::serde_util::matrix")]
    pub aeq: DMatrix<f64>,
    #[serde(with = "crate::serde_util::vector")]
    pub beq: DVector<f64>,
}

impl Zonotope {
    pub fn new(g: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        ensure_shape(g.nrows() == c.len(), || {
            format!("zonotope G has {} rows, c has {}", g.nrows(), c.len())
        })?;
        Ok(Zonotope { g, c })
    }

    /// The degenerate zonotope `{c}`.
    pub fn point(c: DVector<f64>) -> Self {
        Zonotope {
            g: DMatrix::zeros(c.len(), 0),
            c,
        }
    }

    pub fn from_interval(x: &IntervalVector) -> Self {
        Zonotope {
            g: DMatrix::from_diagonal(&x.rad()),
            c: x.mid(),
        }
    }

    /// Unit box `[-1, 1]ⁿ` centred at the origin.
    pub fn unit_box(n: usize) -> Self {
        Zonotope {
            g: DMatrix::identity(n, n),
            c: DVector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn ng(&self) -> usize {
        self.g.ncols()
    }

    pub fn point_at(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.c + &self.g * xi
    }
}

impl ConZonotope {
    pub fn new(g: DMatrix<f64>, c: DVector<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        ensure_shape(g.nrows() == c.len(), || {
            format!("CZ G has {} rows, c has {}", g.nrows(), c.len())
        })?;
        ensure_shape(a.ncols() == g.ncols(), || {
            format!("CZ A has {} columns, G has {}", a.ncols(), g.ncols())
        })?;
        ensure_shape(a.nrows() == b.len(), || {
            format!("CZ A has {} rows, b has {}", a.nrows(), b.len())
        })?;
        Ok(ConZonotope { g, c, a, b })
    }

    pub fn point(c: DVector<f64>) -> Self {
        Zonotope::point(c).into()
    }

    pub fn from_interval(x: &IntervalVector) -> Self {
        Zonotope::from_interval(x).into()
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn ng(&self) -> usize {
        self.g.ncols()
    }

    pub fn nc(&self) -> usize {
        self.a.nrows()
    }

    /// The zonotope obtained by dropping the constraints.
    pub fn unconstrained(&self) -> Zonotope {
        Zonotope {
            g: self.g.clone(),
            c: self.c.clone(),
        }
    }
}

impl LineZonotope {
    pub fn new(
        m: DMatrix<f64>,
        g: DMatrix<f64>,
        c: DVector<f64>,
        s: DMatrix<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        let n = c.len();
        ensure_shape(m.nrows() == n && g.nrows() == n, || {
            format!("LZ M has {} rows, G has {}, c has {n}", m.nrows(), g.nrows())
        })?;
        ensure_shape(s.ncols() == m.ncols() && a.ncols() == g.ncols(), || {
            format!(
                "LZ S has {} columns for {} lines, A has {} columns for {} generators",
                s.ncols(),
                m.ncols(),
                a.ncols(),
                g.ncols()
            )
        })?;
        ensure_shape(s.nrows() == b.len() && a.nrows() == b.len(), || {
            format!("LZ S has {} rows, A has {}, b has {}", s.nrows(), a.nrows(), b.len())
        })?;
        Ok(LineZonotope { m, g, c, s, a, b })
    }

    /// All of ℝⁿ: `(Iₙ, _, 0)`.
    pub fn realset(n: usize) -> Self {
        LineZonotope {
            m: DMatrix::identity(n, n),
            g: DMatrix::zeros(n, 0),
            c: DVector::zeros(n),
            s: DMatrix::zeros(0, n),
            a: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
        }
    }

    pub fn point(c: DVector<f64>) -> Self {
        Zonotope::point(c).into()
    }

    pub fn from_interval(x: &IntervalVector) -> Self {
        Zonotope::from_interval(x).into()
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn nl(&self) -> usize {
        self.m.ncols()
    }

    pub fn ng(&self) -> usize {
        self.g.ncols()
    }

    pub fn nc(&self) -> usize {
        self.b.len()
    }

    /// The bounded part, valid when there are no lines.
    pub fn to_conzonotope(&self) -> Result<ConZonotope> {
        if self.nl() > 0 {
            return Err(Error::UnsupportedConversion {
                from: "LineZonotope",
                to: "ConZonotope",
            });
        }
        Ok(ConZonotope {
            g: self.g.clone(),
            c: self.c.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }
}

impl HPolytope {
    pub fn new(h: DMatrix<f64>, k: DVector<f64>, aeq: DMatrix<f64>, beq: DVector<f64>) -> Result<Self> {
        ensure_shape(h.nrows() == k.len() && aeq.nrows() == beq.len(), || {
            format!(
                "H-polytope H has {} rows, k has {}; Aeq has {} rows, beq has {}",
                h.nrows(),
                k.len(),
                aeq.nrows(),
                beq.len()
            )
        })?;
        ensure_shape(h.ncols() == aeq.ncols(), || {
            format!("H-polytope H has {} columns, Aeq has {}", h.ncols(), aeq.ncols())
        })?;
        Ok(HPolytope { h, k, aeq, beq })
    }

    pub fn from_inequalities(h: DMatrix<f64>, k: DVector<f64>) -> Result<Self> {
        let n = h.ncols();
        Self::new(h, k, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn from_interval(x: &IntervalVector) -> Self {
        let n = x.dim();
        let mut h = DMatrix::zeros(2 * n, n);
        let mut k = DVector::zeros(2 * n);
        for i in 0..n {
            h[(2 * i, i)] = 1.0;
            k[2 * i] = x.hi()[i];
            h[(2 * i + 1, i)] = -1.0;
            k[2 * i + 1] = -x.lo()[i];
        }
        HPolytope {
            h,
            k,
            aeq: DMatrix::zeros(0, n),
            beq: DVector::zeros(0),
        }
    }

    pub fn from_strip(s: &Strip) -> Self {
        let n = s.dim();
        let mut h = DMatrix::zeros(2, n);
        h.row_mut(0).copy_from(&s.p.transpose());
        h.row_mut(1).copy_from(&(-&s.p).transpose());
        HPolytope {
            h,
            k: DVector::from_row_slice(&[s.d + s.sigma, s.sigma - s.d]),
            aeq: DMatrix::zeros(0, n),
            beq: DVector::zeros(0),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let hx = &self.h * x;
        let ex = &self.aeq * x;
        hx.iter().zip(self.k.iter()).all(|(v, k)| *v <= k + tol)
            && ex.iter().zip(self.beq.iter()).all(|(v, b)| (v - b).abs() <= tol)
    }
}

impl From<Zonotope> for ConZonotope {
    fn from(z: Zonotope) -> Self {
        let ng = z.ng();
        ConZonotope {
            g: z.g,
            c: z.c,
            a: DMatrix::zeros(0, ng),
            b: DVector::zeros(0),
        }
    }
}

impl From<ConZonotope> for LineZonotope {
    fn from(z: ConZonotope) -> Self {
        let n = z.dim();
        let nc = z.nc();
        LineZonotope {
            m: DMatrix::zeros(n, 0),
            g: z.g,
            c: z.c,
            s: DMatrix::zeros(nc, 0),
            a: z.a,
            b: z.b,
        }
    }
}

impl From<Zonotope> for LineZonotope {
    fn from(z: Zonotope) -> Self {
        ConZonotope::from(z).into()
    }
}

impl From<&Strip> for LineZonotope {
    /// The slab as `(I − ppᵀ/‖p‖², pσ/‖p‖², pd/‖p‖²)`; its line directions
    /// span the hyperplane orthogonal to p.
    fn from(s: &Strip) -> Self {
        let n = s.dim();
        let pp = s.p.norm_squared();
        let m = DMatrix::identity(n, n) - &s.p * s.p.transpose() / pp;
        LineZonotope {
            m,
            g: DMatrix::from_column_slice(n, 1, (&s.p * (s.sigma / pp)).as_slice()),
            c: &s.p * (s.d / pp),
            s: DMatrix::zeros(0, n),
            a: DMatrix::zeros(0, 1),
            b: DVector::zeros(0),
        }
    }
}

/// Kind tag for [`ZonoSet`] conversions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    Interval,
    Strip,
    Zonotope,
    ConZonotope,
    LineZonotope,
    HPolytope,
}

impl SetKind {
    pub fn name(self) -> &'static str {
        match self {
            SetKind::Interval => "Interval",
            SetKind::Strip => "Strip",
            SetKind::Zonotope => "Zonotope",
            SetKind::ConZonotope => "ConZonotope",
            SetKind::LineZonotope => "LineZonotope",
            SetKind::HPolytope => "HPolytope",
        }
    }
}

/// Any set value, tagged by kind in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ZonoSet {
    Interval(IntervalVector),
    Strip(Strip),
    Zonotope(Zonotope),
    ConZonotope(ConZonotope),
    LineZonotope(LineZonotope),
    HPolytope(HPolytope),
}

impl ZonoSet {
    pub fn kind(&self) -> SetKind {
        match self {
            ZonoSet::Interval(_) => SetKind::Interval,
            ZonoSet::Strip(_) => SetKind::Strip,
            ZonoSet::Zonotope(_) => SetKind::Zonotope,
            ZonoSet::ConZonotope(_) => SetKind::ConZonotope,
            ZonoSet::LineZonotope(_) => SetKind::LineZonotope,
            ZonoSet::HPolytope(_) => SetKind::HPolytope,
        }
    }

    /// Exact conversion along the supported arrows:
    /// Interval → {Zonotope, ConZonotope, LineZonotope, HPolytope},
    /// Zonotope → {ConZonotope, LineZonotope, HPolytope},
    /// ConZonotope → {LineZonotope, HPolytope},
    /// Strip → {HPolytope, LineZonotope}.
    pub fn convert(&self, target: SetKind) -> Result<ZonoSet> {
        if self.kind() == target {
            return Ok(self.clone());
        }
        let unsupported = || Error::UnsupportedConversion {
            from: self.kind().name(),
            to: target.name(),
        };
        Ok(match (self, target) {
            (ZonoSet::Interval(x), SetKind::Zonotope) => ZonoSet::Zonotope(Zonotope::from_interval(x)),
            (ZonoSet::Interval(x), SetKind::ConZonotope) => ZonoSet::ConZonotope(ConZonotope::from_interval(x)),
            (ZonoSet::Interval(x), SetKind::LineZonotope) => ZonoSet::LineZonotope(LineZonotope::from_interval(x)),
            (ZonoSet::Interval(x), SetKind::HPolytope) => ZonoSet::HPolytope(HPolytope::from_interval(x)),
            (ZonoSet::Zonotope(z), SetKind::ConZonotope) => ZonoSet::ConZonotope(z.clone().into()),
            (ZonoSet::Zonotope(z), SetKind::LineZonotope) => ZonoSet::LineZonotope(z.clone().into()),
            (ZonoSet::Zonotope(z), SetKind::HPolytope) => ZonoSet::HPolytope(z.hrep()?),
            (ZonoSet::ConZonotope(z), SetKind::LineZonotope) => ZonoSet::LineZonotope(z.clone().into()),
            (ZonoSet::ConZonotope(z), SetKind::HPolytope) => ZonoSet::HPolytope(z.hrep()?),
            (ZonoSet::Strip(s), SetKind::HPolytope) => ZonoSet::HPolytope(HPolytope::from_strip(s)),
            (ZonoSet::Strip(s), SetKind::LineZonotope) => ZonoSet::LineZonotope(s.into()),
            _ => return Err(unsupported()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("set values always serialize")
    }

    pub fn from_json(s: &str) -> Result<ZonoSet> {
        let set: ZonoSet = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    /// Re-checks shape invariants (needed after deserialization).
    pub fn validate(&self) -> Result<()> {
        match self {
            ZonoSet::Interval(x) => {
                IntervalVector::new(x.lo().clone(), x.hi().clone())?;
            }
            ZonoSet::Strip(s) => {
                Strip::new(s.p.clone(), s.d, s.sigma)?;
            }
            ZonoSet::Zonotope(z) => {
                Zonotope::new(z.g.clone(), z.c.clone())?;
            }
            ZonoSet::ConZonotope(z) => {
                ConZonotope::new(z.g.clone(), z.c.clone(), z.a.clone(), z.b.clone())?;
            }
            ZonoSet::LineZonotope(z) => {
                LineZonotope::new(z.m.clone(), z.g.clone(), z.c.clone(), z.s.clone(), z.a.clone(), z.b.clone())?;
            }
            ZonoSet::HPolytope(p) => {
                HPolytope::new(p.h.clone(), p.k.clone(), p.aeq.clone(), p.beq.clone())?;
            }
        }
        Ok(())
    }
}
