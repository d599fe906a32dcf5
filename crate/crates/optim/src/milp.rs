use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use crate::lp::{solve_lp, LinearProgram, LpOutcome};
use crate::{OptimError, Result};

const INTEGRALITY_TOL: f64 = 1e-6;
pub const DEFAULT_NODE_BUDGET: usize = 100_000;

/// A linear program in which the listed variables must take values in {0, 1}.
#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
    pub node_budget: usize,
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram, binaries: Vec<usize>) -> Self {
        MixedIntegerProgram {
            lp,
            binaries,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone)]
pub enum MilpOutcome {
    Optimal(MilpSolution),
    Infeasible,
}

impl MilpOutcome {
    pub fn optimal(self) -> Option<MilpSolution> {
        match self {
            MilpOutcome::Optimal(s) => Some(s),
            MilpOutcome::Infeasible => None,
        }
    }
}

struct Node {
    bound: f64,
    seq: usize,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch-and-bound over LP relaxations, branching on the most
/// fractional binary. Minimizes the objective of `mip.lp`.
pub fn solve_milp(mip: &MixedIntegerProgram) -> Result<MilpOutcome> {
    mip.lp.validate()?;
    let n = mip.lp.num_vars();
    let mut root_lo = mip.lp.lower.clone();
    let mut root_hi = mip.lp.upper.clone();
    for &b in &mip.binaries {
        if b >= n {
            return Err(OptimError::BinaryIndex(b));
        }
        root_lo[b] = root_lo[b].max(0.0);
        root_hi[b] = root_hi[b].min(1.0);
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq: 0,
        lower: root_lo,
        upper: root_hi,
    });
    let mut seq = 1;
    let mut nodes = 0;
    let mut incumbent: Option<(f64, DVector<f64>)> = None;
    let mut relax = mip.lp.clone();

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= *best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        nodes += 1;
        if nodes > mip.node_budget {
            return Err(OptimError::NodeBudgetExceeded(mip.node_budget));
        }
        relax.lower = node.lower.clone();
        relax.upper = node.upper.clone();
        let sol = match solve_lp(&relax)? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Err(OptimError::UnboundedRelaxation),
        };
        if let Some((best, _)) = &incumbent {
            if sol.objective >= *best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        let branch = mip
            .binaries
            .iter()
            .map(|&b| (b, (sol.x[b] - sol.x[b].round()).abs()))
            .filter(|&(_, frac)| frac > INTEGRALITY_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
        match branch {
            None => {
                let mut x = sol.x.clone();
                for &b in &mip.binaries {
                    x[b] = x[b].round();
                }
                incumbent = Some((sol.objective, x));
            }
            Some((b, _)) => {
                for v in [0.0, 1.0] {
                    let mut lower = node.lower.clone();
                    let mut upper = node.upper.clone();
                    lower[b] = v;
                    upper[b] = v;
                    heap.push(Node {
                        bound: sol.objective,
                        seq,
                        lower,
                        upper,
                    });
                    seq += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some((objective, x)) => MilpOutcome::Optimal(MilpSolution {
            x,
            objective,
            nodes,
        }),
        None => MilpOutcome::Infeasible,
    })
}
