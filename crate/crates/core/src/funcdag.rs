//! Factorable functions as expression DAGs, with real and natural-interval
//! evaluation and forward-mode first and second derivatives.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix, IntervalVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryOp {
    Neg,
    Sqr,
    Pow(u32),
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Input(usize),
    Const(f64),
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

/// Handle to a node under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

/// Topologically ordered expression graph; inputs occupy nodes `0..n_inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncDag {
    nodes: Vec<Node>,
    outputs: Vec<usize>,
    n_inputs: usize,
}

pub struct DagBuilder {
    nodes: Vec<Node>,
    n_inputs: usize,
}

impl DagBuilder {
    pub fn new(n_inputs: usize) -> Self {
        DagBuilder {
            nodes: (0..n_inputs).map(Node::Input).collect(),
            n_inputs,
        }
    }

    pub fn input(&self, i: usize) -> NodeId {
        assert!(i < self.n_inputs, "input {i} out of range");
        NodeId(i)
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, v: f64) -> NodeId {
        self.push(Node::Const(v))
    }

    pub fn unary(&mut self, op: UnaryOp, a: NodeId) -> NodeId {
        self.push(Node::Unary(op, a.0))
    }

    pub fn binary(&mut self, op: BinaryOp, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Binary(op, a.0, b.0))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(BinaryOp::Div, a, b)
    }

    pub fn scale(&mut self, k: f64, a: NodeId) -> NodeId {
        let c = self.constant(k);
        self.mul(c, a)
    }

    pub fn add_const(&mut self, a: NodeId, k: f64) -> NodeId {
        let c = self.constant(k);
        self.add(a, c)
    }

    /// `Σ |a_i|`, expanded into primitive nodes.
    pub fn norm1(&mut self, args: &[NodeId]) -> NodeId {
        let mut acc = self.constant(0.0);
        for &a in args {
            let t = self.unary(UnaryOp::Abs, a);
            acc = self.add(acc, t);
        }
        acc
    }

    /// `sqrt(Σ a_i²)`, expanded into primitive nodes.
    pub fn norm2(&mut self, args: &[NodeId]) -> NodeId {
        let mut acc = self.constant(0.0);
        for &a in args {
            let t = self.unary(UnaryOp::Sqr, a);
            acc = self.add(acc, t);
        }
        self.unary(UnaryOp::Sqrt, acc)
    }

    pub fn build(self, outputs: &[NodeId]) -> FuncDag {
        FuncDag {
            nodes: self.nodes,
            outputs: outputs.iter().map(|o| o.0).collect(),
            n_inputs: self.n_inputs,
        }
    }
}

/// Scalars the DAG can be evaluated over.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn constant(v: f64) -> Self;
    fn try_div(self, rhs: Self) -> Result<Self>;
    /// `(f, f', f'')` of a unary op at `self`; derivatives only if `order > 0`.
    fn unary(self, op: UnaryOp, order: usize) -> Result<(Self, Self, Self)>;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }

    fn try_div(self, rhs: Self) -> Result<Self> {
        if rhs == 0.0 {
            return Err(Error::DomainViolation("division by zero".into()));
        }
        Ok(self / rhs)
    }

    fn unary(self, op: UnaryOp, order: usize) -> Result<(f64, f64, f64)> {
        let x = self;
        Ok(match op {
            UnaryOp::Neg => (-x, -1.0, 0.0),
            UnaryOp::Sqr => (x * x, 2.0 * x, 2.0),
            UnaryOp::Pow(n) => pow_derivs(x, n),
            UnaryOp::Sqrt => {
                if x < 0.0 {
                    return Err(Error::DomainViolation(format!("sqrt of {x}")));
                }
                let s = x.sqrt();
                if order > 0 && x == 0.0 {
                    return Err(Error::NonDifferentiable("sqrt at 0".into()));
                }
                (s, 0.5 / s, -0.25 / (s * x))
            }
            UnaryOp::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            UnaryOp::Log => {
                if x <= 0.0 {
                    return Err(Error::DomainViolation(format!("log of {x}")));
                }
                (x.ln(), 1.0 / x, -1.0 / (x * x))
            }
            UnaryOp::Sin => (x.sin(), x.cos(), -x.sin()),
            UnaryOp::Cos => (x.cos(), -x.sin(), -x.cos()),
            UnaryOp::Tan => {
                let t = x.tan();
                let d = 1.0 + t * t;
                (t, d, 2.0 * t * d)
            }
            UnaryOp::Abs => {
                if order > 0 && x == 0.0 {
                    return Err(Error::NonDifferentiable("abs at 0".into()));
                }
                (x.abs(), x.signum(), 0.0)
            }
        })
    }
}

fn pow_derivs(x: f64, n: u32) -> (f64, f64, f64) {
    let n_i = n as i32;
    let nf = n as f64;
    match n {
        0 => (1.0, 0.0, 0.0),
        1 => (x, 1.0, 0.0),
        _ => (x.powi(n_i), nf * x.powi(n_i - 1), nf * (nf - 1.0) * x.powi(n_i - 2)),
    }
}

impl Scalar for Interval {
    fn constant(v: f64) -> Self {
        Interval::point(v)
    }

    fn try_div(self, rhs: Self) -> Result<Self> {
        self.checked_div(&rhs)
    }

    fn unary(self, op: UnaryOp, order: usize) -> Result<(Interval, Interval, Interval)> {
        let x = self;
        let zero = Interval::point(0.0);
        let p = Interval::point;
        Ok(match op {
            UnaryOp::Neg => (-x, p(-1.0), zero),
            UnaryOp::Sqr => (x.sqr(), x * 2.0, p(2.0)),
            UnaryOp::Pow(n) => match n {
                0 => (p(1.0), zero, zero),
                1 => (x, p(1.0), zero),
                _ => {
                    let nf = n as f64;
                    (x.powi(n), x.powi(n - 1) * nf, x.powi(n.saturating_sub(2)) * (nf * (nf - 1.0)))
                }
            },
            UnaryOp::Sqrt => {
                let s = x.sqrt()?;
                if order > 0 && x.lo <= 0.0 {
                    return Err(Error::DomainViolation(format!("sqrt not differentiable over {x}")));
                }
                let d1 = if order > 0 { p(0.5).checked_div(&s)? } else { zero };
                let d2 = if order > 0 { p(-0.25).checked_div(&(s * x))? } else { zero };
                (s, d1, d2)
            }
            UnaryOp::Exp => {
                let e = x.exp();
                (e, e, e)
            }
            UnaryOp::Log => {
                let l = x.ln()?;
                (l, p(1.0).checked_div(&x)?, p(-1.0).checked_div(&x.sqr())?)
            }
            UnaryOp::Sin => (x.sin(), x.cos(), -x.sin()),
            UnaryOp::Cos => (x.cos(), -x.sin(), -x.cos()),
            UnaryOp::Tan => {
                let t = x.tan()?;
                let d = t.sqr() + 1.0;
                (t, d, t * d * 2.0)
            }
            UnaryOp::Abs => {
                if order > 0 && x.lo <= 0.0 && x.hi >= 0.0 {
                    return Err(Error::DomainViolation(format!("abs not differentiable over {x}")));
                }
                let s = if x.lo > 0.0 { 1.0 } else { -1.0 };
                (x.abs(), p(s), zero)
            }
        })
    }
}

/// Value with gradient and optional Hessian (row-major `n×n`).
#[derive(Debug, Clone)]
pub struct Jet<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Option<Vec<T>>,
}

impl<T: Scalar> Jet<T> {
    fn constant(v: T, n: usize, second: bool) -> Self {
        let z = T::constant(0.0);
        Jet {
            value: v,
            grad: vec![z; n],
            hess: second.then(|| vec![z; n * n]),
        }
    }

    fn variable(v: T, i: usize, n: usize, second: bool) -> Self {
        let mut j = Self::constant(v, n, second);
        j.grad[i] = T::constant(1.0);
        j
    }

    fn n(&self) -> usize {
        self.grad.len()
    }

    fn add(&self, o: &Self, sign: f64) -> Self {
        let s = T::constant(sign);
        Jet {
            value: self.value + s * o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| a + s * b).collect(),
            hess: match (&self.hess, &o.hess) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()),
                _ => None,
            },
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let n = self.n();
        Jet {
            value: self.value * o.value,
            grad: (0..n).map(|i| self.value * o.grad[i] + o.value * self.grad[i]).collect(),
            hess: match (&self.hess, &o.hess) {
                (Some(a), Some(b)) => Some(
                    (0..n * n)
                        .map(|k| {
                            let (i, j) = (k / n, k % n);
                            self.value * b[k]
                                + o.value * a[k]
                                + self.grad[i] * o.grad[j]
                                + o.grad[i] * self.grad[j]
                        })
                        .collect(),
                ),
                _ => None,
            },
        }
    }

    fn chain(&self, f: T, d1: T, d2: T) -> Self {
        let n = self.n();
        Jet {
            value: f,
            grad: self.grad.iter().map(|&g| d1 * g).collect(),
            hess: self.hess.as_ref().map(|h| {
                (0..n * n)
                    .map(|k| d1 * h[k] + d2 * self.grad[k / n] * self.grad[k % n])
                    .collect()
            }),
        }
    }

    fn unary(&self, op: UnaryOp) -> Result<Self> {
        let (f, d1, d2) = self.value.unary(op, 1 + self.hess.is_some() as usize)?;
        Ok(self.chain(f, d1, d2))
    }

    fn div(&self, o: &Self) -> Result<Self> {
        // a / b = a · (1/b), with (1/b)' = −1/b², (1/b)'' = 2/b³.
        let one = T::constant(1.0);
        let r = one.try_div(o.value)?;
        let recip = o.chain(r, -(r * r), T::constant(2.0) * r * r * r);
        Ok(self.mul(&recip))
    }
}

impl FuncDag {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Builds a DAG from raw parts, checking topological order and arity.
    pub fn from_parts(nodes: Vec<Node>, outputs: Vec<usize>, n_inputs: usize) -> Result<FuncDag> {
        for (i, node) in nodes.iter().enumerate() {
            let ok = match *node {
                Node::Input(k) => k < n_inputs && i == k,
                Node::Const(_) => i >= n_inputs,
                Node::Unary(_, a) => a < i && i >= n_inputs,
                Node::Binary(_, a, b) => a < i && b < i && i >= n_inputs,
            };
            if !ok {
                return Err(Error::ConfigInvalid(format!("node {i} breaks the DAG layout: {node:?}")));
            }
        }
        if nodes.len() < n_inputs {
            return Err(Error::ConfigInvalid("fewer nodes than inputs".into()));
        }
        if let Some(&o) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return Err(Error::ConfigInvalid(format!("output refers to missing node {o}")));
        }
        Ok(FuncDag {
            nodes,
            outputs,
            n_inputs,
        })
    }

    fn check_arity(&self, got: usize) -> Result<()> {
        if got != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                got,
            });
        }
        Ok(())
    }

    /// Values of every node.
    pub fn trace<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_arity(x.len())?;
        let mut v: Vec<T> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let val = match *node {
                Node::Input(i) => x[i],
                Node::Const(c) => T::constant(c),
                Node::Unary(op, a) => v[a].unary(op, 0)?.0,
                Node::Binary(op, a, b) => match op {
                    BinaryOp::Add => v[a] + v[b],
                    BinaryOp::Sub => v[a] - v[b],
                    BinaryOp::Mul => v[a] * v[b],
                    BinaryOp::Div => v[a].try_div(v[b])?,
                },
            };
            v.push(val);
        }
        Ok(v)
    }

    pub fn eval_real(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let t = self.trace(x.as_slice())?;
        Ok(DVector::from_iterator(self.outputs.len(), self.outputs.iter().map(|&o| t[o])))
    }

    /// Natural interval extension.
    pub fn eval_interval(&self, x: &IntervalVector) -> Result<IntervalVector> {
        let t = self.trace(&x.to_intervals())?;
        Ok(IntervalVector::from_intervals(
            &self.outputs.iter().map(|&o| t[o]).collect::<Vec<_>>(),
        ))
    }

    /// Forward-mode jets of the outputs.
    pub fn jets<T: Scalar>(&self, x: &[T], second: bool) -> Result<Vec<Jet<T>>> {
        self.check_arity(x.len())?;
        let n = self.n_inputs;
        let mut v: Vec<Jet<T>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let j = match *node {
                Node::Input(i) => Jet::variable(x[i], i, n, second),
                Node::Const(c) => Jet::constant(T::constant(c), n, second),
                Node::Unary(op, a) => v[a].unary(op)?,
                Node::Binary(op, a, b) => match op {
                    BinaryOp::Add => v[a].add(&v[b], 1.0),
                    BinaryOp::Sub => v[a].add(&v[b], -1.0),
                    BinaryOp::Mul => v[a].mul(&v[b]),
                    BinaryOp::Div => v[a].div(&v[b])?,
                },
            };
            v.push(j);
        }
        Ok(self.outputs.iter().map(|&o| v[o].clone()).collect())
    }

    pub fn jacobian_real(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let jets = self.jets(x.as_slice(), false)?;
        Ok(DMatrix::from_fn(jets.len(), self.n_inputs, |i, j| jets[i].grad[j]))
    }

    /// Enclosure of `{J(x) : x ∈ X}`.
    pub fn jacobian_interval(&self, x: &IntervalVector) -> Result<IntervalMatrix> {
        let jets = self.jets(&x.to_intervals(), false)?;
        Ok(IntervalMatrix::from_fn(jets.len(), self.n_inputs, |i, j| jets[i].grad[j]))
    }

    pub fn hessian_real(&self, x: &DVector<f64>, q: usize) -> Result<DMatrix<f64>> {
        self.check_output(q)?;
        let jets = self.jets(x.as_slice(), true)?;
        let h = jets[q].hess.as_ref().expect("second order requested");
        Ok(DMatrix::from_row_slice(self.n_inputs, self.n_inputs, h))
    }

    /// Enclosure of the Hessian of output `q` over the box.
    pub fn hessian_interval(&self, x: &IntervalVector, q: usize) -> Result<IntervalMatrix> {
        self.check_output(q)?;
        let jets = self.jets(&x.to_intervals(), true)?;
        let h = jets[q].hess.as_ref().expect("second order requested");
        let n = self.n_inputs;
        Ok(IntervalMatrix::from_fn(n, n, |i, j| h[i * n + j]))
    }

    /// Hessian enclosures of every output.
    pub fn hessians_interval(&self, x: &IntervalVector) -> Result<Vec<IntervalMatrix>> {
        let jets = self.jets(&x.to_intervals(), true)?;
        let n = self.n_inputs;
        Ok(jets
            .iter()
            .map(|j| {
                let h = j.hess.as_ref().expect("second order requested");
                IntervalMatrix::from_fn(n, n, |a, b| h[a * n + b])
            })
            .collect())
    }

    fn check_output(&self, q: usize) -> Result<()> {
        if q >= self.outputs.len() {
            return Err(Error::IndexOutOfRange {
                index: q,
                dim: self.outputs.len(),
            });
        }
        Ok(())
    }

    /// Replaces the listed inputs by constants; the remaining inputs are
    /// renumbered in their original order.
    pub fn bind_inputs(&self, fixed: &[(usize, f64)]) -> Result<FuncDag> {
        let mut value: HashMap<usize, f64> = HashMap::new();
        for &(i, v) in fixed {
            if i >= self.n_inputs {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    dim: self.n_inputs,
                });
            }
            value.insert(i, v);
        }
        let free: Vec<usize> = (0..self.n_inputs).filter(|i| !value.contains_key(i)).collect();
        let mut b = DagBuilder::new(free.len());
        let mut map: Vec<NodeId> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let id = match *node {
                Node::Input(i) => match value.get(&i) {
                    Some(&v) => b.constant(v),
                    None => b.input(free.iter().position(|&f| f == i).expect("free input")),
                },
                Node::Const(c) => b.constant(c),
                Node::Unary(op, a) => b.unary(op, map[a]),
                Node::Binary(op, a, c) => b.binary(op, map[a], map[c]),
            };
            map.push(id);
        }
        // Inputs must occupy the leading nodes; rebuild if constants came first.
        let outputs: Vec<NodeId> = self.outputs.iter().map(|&o| map[o]).collect();
        Ok(b.build(&outputs).normalized())
    }

    /// Moves input nodes to the front, preserving evaluation order.
    fn normalized(self) -> FuncDag {
        if self.nodes.iter().take(self.n_inputs).enumerate().all(|(i, n)| *n == Node::Input(i)) {
            return self;
        }
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&k| !matches!(self.nodes[k], Node::Input(_)));
        let mut pos = vec![0; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| match self.nodes[old] {
                Node::Unary(op, a) => Node::Unary(op, pos[a]),
                Node::Binary(op, a, b) => Node::Binary(op, pos[a], pos[b]),
                other => other,
            })
            .collect();
        FuncDag {
            nodes,
            outputs: self.outputs.iter().map(|&o| pos[o]).collect(),
            n_inputs: self.n_inputs,
        }
    }

    /// The same function with the listed inputs prepended to the outputs.
    pub fn with_input_passthrough(&self, inputs: &[usize]) -> Result<FuncDag> {
        if let Some(&i) = inputs.iter().find(|&&i| i >= self.n_inputs) {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.n_inputs,
            });
        }
        let mut outputs = inputs.to_vec();
        outputs.extend(&self.outputs);
        Ok(FuncDag {
            nodes: self.nodes.clone(),
            outputs,
            n_inputs: self.n_inputs,
        })
    }

    /// Linear function `x ↦ Rx + t`.
    pub fn affine(r: &DMatrix<f64>, t: &DVector<f64>) -> FuncDag {
        let mut b = DagBuilder::new(r.ncols());
        let outs: Vec<NodeId> = (0..r.nrows())
            .map(|i| {
                let mut acc = b.constant(t[i]);
                for j in 0..r.ncols() {
                    if r[(i, j)] != 0.0 {
                        let x = b.input(j);
                        let term = b.scale(r[(i, j)], x);
                        acc = b.add(acc, term);
                    }
                }
                acc
            })
            .collect();
        b.build(&outs)
    }

    pub fn from_json(s: &str) -> Result<FuncDag> {
        let spec: DagSpec = serde_json::from_str(s).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        spec.build()
    }
}

/// JSON form of a DAG: named inputs, a node list referring to earlier ids,
/// and output ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagSpec {
    pub inputs: Vec<String>,
    pub nodes: Vec<NodeSpec>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub op: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub n: Option<u32>,
}

impl DagSpec {
    pub fn build(&self) -> Result<FuncDag> {
        let mut b = DagBuilder::new(self.inputs.len());
        let mut ids: HashMap<&str, NodeId> = HashMap::new();
        for (i, name) in self.inputs.iter().enumerate() {
            if ids.insert(name, b.input(i)).is_some() {
                return Err(Error::ConfigInvalid(format!("duplicate node id '{name}'")));
            }
        }
        for node in &self.nodes {
            let arg = |k: usize| -> Result<NodeId> {
                let name = node.args.get(k).ok_or_else(|| {
                    Error::ConfigInvalid(format!("node '{}' ({}) is missing argument {}", node.id, node.op, k + 1))
                })?;
                ids.get(name.as_str()).copied().ok_or_else(|| {
                    Error::ConfigInvalid(format!("node '{}' refers to undefined node '{name}'", node.id))
                })
            };
            let unary = |op: UnaryOp, b: &mut DagBuilder| -> Result<NodeId> { Ok(b.unary(op, arg(0)?)) };
            let id = match node.op.as_str() {
                "const" => b.constant(node.value.ok_or_else(|| {
                    Error::ConfigInvalid(format!("constant node '{}' has no value", node.id))
                })?),
                "add" | "sub" | "mul" | "div" => {
                    let op = match node.op.as_str() {
                        "add" => BinaryOp::Add,
                        "sub" => BinaryOp::Sub,
                        "mul" => BinaryOp::Mul,
                        _ => BinaryOp::Div,
                    };
                    let (x, y) = (arg(0)?, arg(1)?);
                    b.binary(op, x, y)
                }
                "neg" => unary(UnaryOp::Neg, &mut b)?,
                "sqr" => unary(UnaryOp::Sqr, &mut b)?,
                "pow" => {
                    let n = node.n.ok_or_else(|| {
                        Error::ConfigInvalid(format!("pow node '{}' has no exponent n", node.id))
                    })?;
                    unary(UnaryOp::Pow(n), &mut b)?
                }
                "sqrt" => unary(UnaryOp::Sqrt, &mut b)?,
                "exp" => unary(UnaryOp::Exp, &mut b)?,
                "log" => unary(UnaryOp::Log, &mut b)?,
                "sin" => unary(UnaryOp::Sin, &mut b)?,
                "cos" => unary(UnaryOp::Cos, &mut b)?,
                "tan" => unary(UnaryOp::Tan, &mut b)?,
                "abs" => unary(UnaryOp::Abs, &mut b)?,
                "norm1" | "norm2" => {
                    let args: Result<Vec<NodeId>> = (0..node.args.len()).map(arg).collect();
                    let args = args?;
                    if node.op == "norm1" {
                        b.norm1(&args)
                    } else {
                        b.norm2(&args)
                    }
                }
                other => {
                    return Err(Error::ConfigInvalid(format!("node '{}' has unknown op '{other}'", node.id)));
                }
            };
            if ids.insert(&node.id, id).is_some() {
                return Err(Error::ConfigInvalid(format!("duplicate node id '{}'", node.id)));
            }
        }
        let outputs: Result<Vec<NodeId>> = self
            .outputs
            .iter()
            .map(|o| {
                ids.get(o.as_str())
                    .copied()
                    .ok_or_else(|| Error::ConfigInvalid(format!("output refers to undefined node '{o}'")))
            })
            .collect();
        Ok(b.build(&outputs?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> FuncDag {
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let y = b.unary(UnaryOp::Sqr, x);
        b.build(&[y])
    }

    fn iv(lo: f64, hi: f64) -> IntervalVector {
        IntervalVector::from_bounds(&[lo], &[hi]).unwrap()
    }

    #[test]
    fn real_evaluation() {
        let mut b = DagBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let k = b.constant(7.0);
        let out = b.build(&[x, y, k]);
        let p = DVector::from_row_slice(&[1.5, -2.0]);
        assert_eq!(out.eval_real(&p).unwrap().as_slice(), &[1.5, -2.0, 7.0]);
        assert!(matches!(
            out.eval_real(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let l = b.unary(UnaryOp::Log, x);
        assert!(matches!(
            b.build(&[l]).eval_real(&DVector::from_element(1, -1.0)),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn interval_evaluation() {
        let r = square().eval_interval(&iv(0.0, 2.0)).unwrap();
        assert_eq!((r.lo()[0], r.hi()[0]), (0.0, 4.0));
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let d = b.sub(x, x);
        let r = b.build(&[d]).eval_interval(&iv(0.0, 1.0)).unwrap();
        assert_eq!((r.lo()[0], r.hi()[0]), (-1.0, 1.0));
    }

    #[test]
    fn derivatives_of_square() {
        let f = square();
        assert_eq!(f.jacobian_real(&DVector::from_element(1, 3.0)).unwrap()[(0, 0)], 6.0);
        let j = f.jacobian_interval(&iv(1.0, 2.0)).unwrap();
        assert_eq!((j.get(0, 0).lo, j.get(0, 0).hi), (2.0, 4.0));
        let h = f.hessian_interval(&iv(-3.0, 5.0), 0).unwrap();
        assert_eq!((h.get(0, 0).lo, h.get(0, 0).hi), (2.0, 2.0));
    }

    #[test]
    fn affine_derivatives_are_exact() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        let f = FuncDag::affine(&r, &DVector::from_row_slice(&[1.0, 0.0]));
        let x = IntervalVector::from_bounds(&[-1.0, 0.0], &[2.0, 5.0]).unwrap();
        let j = f.jacobian_interval(&x).unwrap();
        assert_eq!(j.lo(), &r);
        assert_eq!(j.hi(), &r);
        assert_eq!(f.jacobian_real(&DVector::zeros(2)).unwrap(), r);
        let h = f.hessian_interval(&x, 1).unwrap();
        assert_eq!(h.lo().amax(), 0.0);
        assert_eq!(h.hi().amax(), 0.0);
    }

    #[test]
    fn norms_expand() {
        let mut b = DagBuilder::new(2);
        let (x, y) = (b.input(0), b.input(1));
        let n1 = b.norm1(&[x, y]);
        let n2 = b.norm2(&[x, y]);
        let f = b.build(&[n1, n2]);
        let v = f.eval_real(&DVector::from_row_slice(&[3.0, -4.0])).unwrap();
        assert_eq!(v.as_slice(), &[7.0, 5.0]);
        assert!(f.nodes().iter().all(|n| !matches!(n, Node::Input(i) if *i > 1)));
    }

    #[test]
    fn abs_derivative_rules() {
        let mut b = DagBuilder::new(1);
        let x = b.input(0);
        let a = b.unary(UnaryOp::Abs, x);
        let f = b.build(&[a]);
        assert!(matches!(f.jacobian_interval(&iv(-1.0, 1.0)), Err(Error::DomainViolation(_))));
        assert!(matches!(
            f.jacobian_real(&DVector::from_element(1, 0.0)),
            Err(Error::NonDifferentiable(_))
        ));
        assert_eq!(f.jacobian_real(&DVector::from_element(1, -2.0)).unwrap()[(0, 0)], -1.0);
    }

    #[test]
    fn binding_inputs() {
        let mut b = DagBuilder::new(3);
        let (x, u, y) = (b.input(0), b.input(1), b.input(2));
        let s = b.add(x, u);
        let p = b.mul(s, y);
        let f = b.build(&[p]);
        let g = f.bind_inputs(&[(1, 2.0)]).unwrap();
        assert_eq!(g.n_inputs(), 2);
        let v = g.eval_real(&DVector::from_row_slice(&[1.0, 4.0])).unwrap();
        assert_eq!(v[0], 12.0);
        let pass = f.with_input_passthrough(&[2]).unwrap();
        let v = pass.eval_real(&DVector::from_row_slice(&[1.0, 1.0, 3.0])).unwrap();
        assert_eq!(v.as_slice(), &[3.0, 6.0]);
    }

    #[test]
    fn json_schema() {
        let json = r#"{
            "inputs": ["x", "y"],
            "nodes": [
                {"id": "p", "op": "mul", "args": ["x", "y"]},
                {"id": "k", "op": "const", "value": 2},
                {"id": "s", "op": "sin", "args": ["p"]},
                {"id": "out", "op": "add", "args": ["s", "k"]}
            ],
            "outputs": ["out", "p"]
        }"#;
        let f = FuncDag::from_json(json).unwrap();
        let v = f.eval_real(&DVector::from_row_slice(&[0.5, 2.0])).unwrap();
        assert!((v[0] - (1.0f64.sin() + 2.0)).abs() < 1e-15);
        let bad = json.replace(r#""args": ["s", "k"]"#, r#""args": ["s", "missing"]"#);
        match FuncDag::from_json(&bad) {
            Err(Error::ConfigInvalid(msg)) => assert!(msg.contains("missing")),
            other => panic!("{other:?}"),
        }
    }
}
