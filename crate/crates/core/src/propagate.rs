//! Enclosures of nonlinear images of intervals, zonotopes and constrained
//! zonotopes.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcdag::FuncDag;
use crate::interval::{Interval, IntervalMatrix, IntervalVector};
use crate::linalg::{hcat, nonzero_columns, select_cols};
use crate::polyrelax::propagate_pr_cz;
use crate::reduction::RescaleMode;
use crate::setrep::{ConZonotope, Zonotope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Natural,
    MeanValue,
    FirstOrder,
    PolyRelax,
    Dc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Natural => "natural",
            Method::MeanValue => "meanvalue",
            Method::FirstOrder => "firstorder",
            Method::PolyRelax => "polyrelax",
            Method::Dc => "dc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "natural" => Method::Natural,
            "meanvalue" | "mv" => Method::MeanValue,
            "firstorder" | "fo" => Method::FirstOrder,
            "polyrelax" | "pr" => Method::PolyRelax,
            "dc" => Method::Dc,
            other => return Err(Error::ConfigInvalid(format!("unknown propagation method '{other}'"))),
        })
    }
}

/// A set that can be pushed through a function.
#[derive(Debug, Clone, PartialEq)]
pub enum PropSet {
    Interval(IntervalVector),
    Zonotope(Zonotope),
    ConZonotope(ConZonotope),
}

impl PropSet {
    fn kind_name(&self) -> &'static str {
        match self {
            PropSet::Interval(_) => "IntervalVector",
            PropSet::Zonotope(_) => "Zonotope",
            PropSet::ConZonotope(_) => "ConZonotope",
        }
    }
}

/// Encloses `f(X)` with the chosen method.
pub fn propagate(x: &PropSet, dag: &FuncDag, method: Method) -> Result<PropSet> {
    Ok(match (x, method) {
        (PropSet::Interval(b), Method::Natural) => PropSet::Interval(dag.eval_interval(b)?),
        (PropSet::Interval(b), Method::MeanValue) => PropSet::Interval(interval_mean_value(dag, b)?),
        (PropSet::Zonotope(z), Method::MeanValue) => PropSet::Zonotope(zonotope_mv(dag, z)?),
        (PropSet::Zonotope(z), Method::FirstOrder) => PropSet::Zonotope(zonotope_fo(dag, z)?),
        (PropSet::ConZonotope(z), Method::MeanValue) => PropSet::ConZonotope(cz_mv(dag, z)?),
        (PropSet::ConZonotope(z), Method::FirstOrder) => PropSet::ConZonotope(cz_fo(dag, z)?),
        (PropSet::ConZonotope(z), Method::PolyRelax) => PropSet::ConZonotope(propagate_pr_cz(dag, z)?),
        (set, m) => {
            return Err(Error::UnsupportedMethod {
                method: m.name().into(),
                set: set.kind_name(),
            })
        }
    })
}

fn check_inputs(dag: &FuncDag, n: usize) -> Result<()> {
    if dag.n_inputs() != n {
        return Err(Error::DimensionMismatch {
            expected: dag.n_inputs(),
            got: n,
        });
    }
    Ok(())
}

/// `f(m) + [J](X)(X − m)` in interval arithmetic.
pub fn interval_mean_value(dag: &FuncDag, x: &IntervalVector) -> Result<IntervalVector> {
    check_inputs(dag, x.dim())?;
    let m = x.mid();
    let fm = dag.eval_real(&m)?;
    let j = dag.jacobian_interval(x)?;
    let dev = x.binary(&IntervalVector::point(&m), crate::interval::BinaryOp::Sub)?;
    let lin = j.mul_vec(&dev)?;
    lin.binary(&IntervalVector::point(&fm), crate::interval::BinaryOp::Add)
}

/// Diagonal generators for a box with the given radii, zero columns dropped.
fn box_generators(rad: &DVector<f64>) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(rad);
    select_cols(&d, &nonzero_columns(&d, 0.0))
}

/// `{Jx : J ∈ [J], x ∈ Z}` ⊆ `mid(J)Z ⊕ diag(rad(J)·|hull(Z)|)`.
fn zonotope_inclusion(z: &Zonotope, j: &IntervalMatrix) -> Zonotope {
    let m = j.mid();
    let rad = j.rad() * z.interval_hull().mag();
    Zonotope {
        g: hcat(m.nrows(), &[&(&m * &z.g), &box_generators(&rad)]),
        c: &m * &z.c,
    }
}

pub fn zonotope_mv(dag: &FuncDag, x: &Zonotope) -> Result<Zonotope> {
    check_inputs(dag, x.dim())?;
    let j = dag.jacobian_interval(&x.interval_hull())?;
    let fc = dag.eval_real(&x.c)?;
    let centered = Zonotope {
        g: x.g.clone(),
        c: DVector::zeros(x.dim()),
    };
    let mut out = zonotope_inclusion(&centered, &j);
    out.c += fc;
    Ok(out)
}

pub fn cz_mv(dag: &FuncDag, x: &ConZonotope) -> Result<ConZonotope> {
    check_inputs(dag, x.dim())?;
    let hull = x.interval_hull()?;
    let z_star = x.closest_point(&hull.mid())?;
    let j = dag.jacobian_interval(&hull)?;
    let fz = dag.eval_real(&z_star)?;
    let shifted = x.translate(&-&z_star)?;
    shifted.cz_inclusion(&j)?.translate(&fz)
}

/// Per-output bounds on `½ (x − c)ᵀ H_q (x − c)` for `x = c + Gξ`, both from
/// the generators and from the box `domain − c`, intersected.
fn taylor_remainder(dag: &FuncDag, domain: &IntervalVector, g: &DMatrix<f64>, c: &DVector<f64>) -> Result<Vec<Interval>> {
    let hs = dag.hessians_interval(domain)?;
    let gt = g.transpose();
    let n = c.len();
    let d: Vec<Interval> = (0..n).map(|i| domain.get(i) - Interval::point(c[i])).collect();
    hs.iter()
        .map(|h| {
            let q = h.mul_real_right(g)?.mul_real_left(&gt)?;
            let ng = g.ncols();
            let mut by_gen = Interval::point(0.0);
            for i in 0..ng {
                for k in 0..ng {
                    let qik = q.get(i, k);
                    by_gen = by_gen
                        + if i == k {
                            qik * Interval::spanning(0.0, 1.0)
                        } else {
                            qik * Interval::spanning(-1.0, 1.0)
                        };
                }
            }
            let mut by_box = Interval::point(0.0);
            for i in 0..n {
                for k in 0..n {
                    by_box = by_box + if i == k { h.get(i, i) * d[i].sqr() } else { h.get(i, k) * d[i] * d[k] };
                }
            }
            let acc = by_gen.intersect(&by_box).unwrap_or(by_gen);
            Ok(acc * 0.5)
        })
        .collect()
}

fn remainder_box(r: &[Interval]) -> (DMatrix<f64>, DVector<f64>) {
    let rad = DVector::from_iterator(r.len(), r.iter().map(|i| i.rad()));
    let mid = DVector::from_iterator(r.len(), r.iter().map(|i| i.mid()));
    (box_generators(&rad), mid)
}

pub fn zonotope_fo(dag: &FuncDag, x: &Zonotope) -> Result<Zonotope> {
    check_inputs(dag, x.dim())?;
    let hull = x.interval_hull();
    let jc = dag.jacobian_real(&x.c)?;
    let fc = dag.eval_real(&x.c)?;
    let r = taylor_remainder(dag, &hull, &x.g, &x.c)?;
    let (rg, rc) = remainder_box(&r);
    Ok(Zonotope {
        g: hcat(fc.len(), &[&(&jc * &x.g), &rg]),
        c: fc + rc,
    })
}

pub fn cz_fo(dag: &FuncDag, x: &ConZonotope) -> Result<ConZonotope> {
    check_inputs(dag, x.dim())?;
    let x = x.rescale(RescaleMode::Interval)?.compact()?;
    let hull = x.interval_hull()?.hull(&IntervalVector::point(&x.c))?;
    let jc = dag.jacobian_real(&x.c)?;
    let fc = dag.eval_real(&x.c)?;
    let r = taylor_remainder(dag, &hull, &x.g, &x.c)?;
    let (rg, rc) = remainder_box(&r);
    let nr = rg.ncols();
    Ok(ConZonotope {
        g: hcat(fc.len(), &[&(&jc * &x.g), &rg]),
        c: fc + rc,
        a: hcat(x.nc(), &[&x.a, &DMatrix::zeros(x.nc(), nr)]),
        b: x.b.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcdag::{DagBuilder, UnaryOp};

    fn square() -> FuncDag {
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let y = b.unary(UnaryOp::Sqr, x);
        b.build(&[y])
    }

    fn unit_segment() -> Zonotope {
        Zonotope::new(DMatrix::from_element(1, 1, 0.5), DVector::from_element(1, 1.5)).unwrap()
    }

    fn bounds(z: &Zonotope) -> (f64, f64) {
        let h = z.interval_hull();
        (h.lo()[0], h.hi()[0])
    }

    #[test]
    fn natural_interval() {
        let x = PropSet::Interval(IntervalVector::from_bounds(&[0.0], &[2.0]).unwrap());
        let PropSet::Interval(y) = propagate(&x, &square(), Method::Natural).unwrap() else { panic!() };
        assert_eq!((y.lo()[0], y.hi()[0]), (0.0, 4.0));
    }

    #[test]
    fn mean_value_square() {
        let (lo, hi) = bounds(&zonotope_mv(&square(), &unit_segment()).unwrap());
        assert!((lo - 0.25).abs() < 1e-12 && (hi - 4.25).abs() < 1e-12);
        let cz: ConZonotope = unit_segment().into();
        let h = cz_mv(&square(), &cz).unwrap().interval_hull().unwrap();
        assert!((h.lo()[0] - 0.25).abs() < 1e-9 && (h.hi()[0] - 4.25).abs() < 1e-9);
    }

    #[test]
    fn first_order_square() {
        let (lo, hi) = bounds(&zonotope_fo(&square(), &unit_segment()).unwrap());
        assert!((lo - 0.75).abs() < 1e-12 && (hi - 4.0).abs() < 1e-12, "{lo} {hi}");
    }

    #[test]
    fn linear_maps_are_exact() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -1.0, 0.5]);
        let t = DVector::from_row_slice(&[0.3, -0.2]);
        let f = FuncDag::affine(&r, &t);
        let z = Zonotope::new(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]), DVector::zeros(2)).unwrap();
        let exact = z.linmap(&r).unwrap().translate(&t).unwrap();
        for m in [zonotope_mv(&f, &z).unwrap(), zonotope_fo(&f, &z).unwrap()] {
            assert!((&m.g - &exact.g).amax() < 1e-12 && (&m.c - &exact.c).amax() < 1e-12);
        }
        let x = PropSet::Interval(IntervalVector::from_bounds(&[-1.0, 0.0], &[1.0, 2.0]).unwrap());
        let PropSet::Interval(y) = propagate(&x, &f, Method::MeanValue).unwrap() else { panic!() };
        let PropSet::Interval(n) = propagate(&x, &f, Method::Natural).unwrap() else { panic!() };
        assert!((y.lo() - n.lo()).amax() < 1e-12 && (y.hi() - n.hi()).amax() < 1e-12);
    }

    #[test]
    fn unsupported_combinations() {
        let z = PropSet::Zonotope(unit_segment());
        assert!(matches!(propagate(&z, &square(), Method::PolyRelax), Err(Error::UnsupportedMethod { .. })));
        assert!(matches!(propagate(&z, &square(), Method::Dc), Err(Error::UnsupportedMethod { .. })));
        assert_eq!("FO".parse::<Method>().unwrap(), Method::FirstOrder);
    }
}
