//! Ready-made instances used by the demos and the acceptance suite.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::faultdiag::ModelFamily;
use crate::funcdag::{DagBuilder, FuncDag, NodeId, UnaryOp};
use crate::interval::IntervalVector;
use crate::setrep::{ConZonotope, Zonotope};
use crate::system::{LinearSystem, NonlinearSystem};

/// Seed of the shipped reduction instance.
pub const REDUCTION_SEED: u64 = 2024;

/// A nonempty, bounded constrained zonotope in ℝ² with 47 generators and
/// 15 constraints, drawn from `seed`.
pub fn reduction_demo_set(seed: u64) -> ConZonotope {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ng, nc) = (47, 15);
    let g = DMatrix::from_fn(2, ng, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.2);
    let a = DMatrix::from_fn(nc, ng, |_, _| rng.sample::<f64, _>(StandardNormal));
    let xi0 = DVector::from_fn(ng, |_, _| rng.random_range(-0.5..0.5));
    let b = &a * &xi0;
    ConZonotope {
        g,
        c: DVector::zeros(2),
        a,
        b,
    }
}

/// `X = ([0.2 0.4 0.2; 0.2 0 −0.2], (−1, 1), 2·1₁ₓ₃, −3)`.
pub fn propagate_demo_set() -> ConZonotope {
    ConZonotope {
        g: DMatrix::from_row_slice(2, 3, &[0.2, 0.4, 0.2, 0.2, 0.0, -0.2]),
        c: DVector::from_row_slice(&[-1.0, 1.0]),
        a: DMatrix::from_row_slice(1, 3, &[2.0, 2.0, 2.0]),
        b: DVector::from_element(1, -3.0),
    }
}

/// `f₁ = 3x₁ − x₁²/7 − 4x₁x₂/(4+x₁) (+ a₁)`, `f₂ = −2x₂ + 3x₁x₂/(4+x₁) (+ a₂)`.
fn build_f(b: &mut DagBuilder, x1: NodeId, x2: NodeId, add: Option<(NodeId, NodeId)>) -> (NodeId, NodeId) {
    let x1sq = b.unary(UnaryOp::Sqr, x1);
    let t1 = b.scale(3.0, x1);
    let seven = b.constant(7.0);
    let t2 = b.div(x1sq, seven);
    let x1x2 = b.mul(x1, x2);
    let den = b.add_const(x1, 4.0);
    let ratio = b.div(x1x2, den);
    let t3 = b.scale(4.0, ratio);
    let f1 = b.sub(t1, t2);
    let mut f1 = b.sub(f1, t3);
    let t4 = b.scale(-2.0, x2);
    let t5 = b.scale(3.0, ratio);
    let mut f2 = b.add(t4, t5);
    if let Some((a1, a2)) = add {
        f1 = b.add(f1, a1);
        f2 = b.add(f2, a2);
    }
    (f1, f2)
}

/// The map `f: ℝ² → ℝ²` of the propagation demo.
pub fn propagate_demo_dag() -> FuncDag {
    let mut b = DagBuilder::new(2);
    let (x1, x2) = (b.input(0), b.input(1));
    let (f1, f2) = build_f(&mut b, x1, x2, None);
    b.build(&[f1, f2])
}

/// `g₁ = x₁ − sin(x₂/2) + v₁`, `g₂ = (1 − x₁)x₂ + v₂`, inputs `(x, v)`.
pub fn estimation_demo_g() -> FuncDag {
    let mut b = DagBuilder::new(4);
    let (x1, x2, v1, v2) = (b.input(0), b.input(1), b.input(2), b.input(3));
    let half = b.scale(0.5, x2);
    let s = b.unary(UnaryOp::Sin, half);
    let g1 = b.sub(x1, s);
    let g1 = b.add(g1, v1);
    let negx1 = b.unary(UnaryOp::Neg, x1);
    let one_minus = b.add_const(negx1, 1.0);
    let g2 = b.mul(one_minus, x2);
    let g2 = b.add(g2, v2);
    b.build(&[g1, g2])
}

/// The nonlinear estimation model: f with additive w, g as above, no
/// known input.
pub fn estimation_demo_system() -> NonlinearSystem {
    let mut b = DagBuilder::new(4);
    let (x1, x2, w1, w2) = (b.input(0), b.input(1), b.input(2), b.input(3));
    let (f1, f2) = build_f(&mut b, x1, x2, Some((w1, w2)));
    let f = b.build(&[f1, f2]);
    NonlinearSystem::new(f, estimation_demo_g(), 2, 2, 0, 2).expect("demo arities are consistent")
}

/// `X₀ = ([0.5 1 −0.5; 0.5 0.5 0], (5, 0.5))`.
pub fn estimation_demo_x0_set() -> Zonotope {
    Zonotope {
        g: DMatrix::from_row_slice(2, 3, &[0.5, 1.0, -0.5, 0.5, 0.5, 0.0]),
        c: DVector::from_row_slice(&[5.0, 0.5]),
    }
}

pub fn estimation_demo_x0() -> DVector<f64> {
    DVector::from_row_slice(&[5.2, 0.65])
}

/// `‖w‖∞ ≤ 0.5`.
pub fn estimation_demo_w() -> Zonotope {
    Zonotope {
        g: DMatrix::identity(2, 2) * 0.5,
        c: DVector::zeros(2),
    }
}

/// `‖v‖∞ ≤ 0.2`.
pub fn estimation_demo_v() -> Zonotope {
    Zonotope {
        g: DMatrix::identity(2, 2) * 0.2,
        c: DVector::zeros(2),
    }
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn interval_zonotope(c: f64, r: f64) -> Zonotope {
    Zonotope {
        g: scalar(r),
        c: DVector::from_element(1, c),
    }
}

/// Two scalar models `x⁺ = ±0.5x + w + u`, `y = x + v` with
/// `x₀ ∈ 0.2 ± 0.1`, `|w|, |v| ≤ 0.05`, horizon 2, `|u| ≤ 1`, margin 0.01.
pub fn afd_demo_family() -> ModelFamily {
    let model = |a: f64| LinearSystem {
        a: scalar(a),
        bw: scalar(1.0),
        bu: scalar(1.0),
        c: scalar(1.0),
        dv: scalar(1.0),
    };
    ModelFamily {
        models: vec![model(0.5), model(-0.5)],
        x0: interval_zonotope(0.2, 0.1),
        w: interval_zonotope(0.0, 0.05),
        v: interval_zonotope(0.0, 0.05),
        horizon: 2,
        u_box: IntervalVector::from_bounds(&[-1.0], &[1.0]).expect("ordered bounds"),
        eps: 0.01,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_functions_by_hand() {
        let f = propagate_demo_dag();
        assert_eq!(f.eval_real(&DVector::zeros(2)).unwrap().as_slice(), &[0.0, 0.0]);
        let v = f.eval_real(&DVector::from_row_slice(&[3.0, 1.0])).unwrap();
        assert!((v[0] - (9.0 - 9.0 / 7.0 - 12.0 / 7.0)).abs() < 1e-12);
        assert!((v[1] - (-2.0 + 9.0 / 7.0)).abs() < 1e-12);
        let g = estimation_demo_g();
        let y = g.eval_real(&DVector::from_row_slice(&[2.0, 1.0, 0.1, -0.1])).unwrap();
        assert!((y[0] - (2.0 - 0.5f64.sin() + 0.1)).abs() < 1e-12);
        assert!((y[1] - (-1.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn reduction_instance_shape() {
        let z = reduction_demo_set(REDUCTION_SEED);
        assert_eq!((z.dim(), z.ng(), z.nc()), (2, 47, 15));
        assert!(!z.is_empty().unwrap());
        assert!(estimation_demo_x0_set().is_inside(&estimation_demo_x0()).unwrap());
    }
}
