//! Model diagnostics and the primitivity check on a sparsity pattern.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::matrix::CscMatrix;
use crate::numeric::compensated_sum;
use crate::MdpModel;

/// Probabilities must normalize within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PolicyNotNormalized {
        state: usize,
        sum: f64,
    },
    DynamicsNotNormalized {
        state: usize,
        action: usize,
        sum: f64,
    },
    NegativePolicy {
        state: usize,
        action: usize,
        value: f64,
    },
    NegativeTransition {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    NonFiniteReward {
        state: usize,
        action: usize,
    },
    PositiveReward {
        state: usize,
        action: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::PolicyNotNormalized { state, sum } => {
                write!(f, "policy row of state {state} sums to {sum}")
            }
            Self::DynamicsNotNormalized { state, action, sum } => {
                write!(f, "p(.|{state}, {action}) sums to {sum}")
            }
            Self::NegativePolicy { state, action, value } => {
                write!(f, "pi({action}|{state}) = {value} is negative")
            }
            Self::NegativeTransition {
                state,
                action,
                next,
                value,
            } => {
                write!(f, "p({next}|{state}, {action}) = {value} is negative")
            }
            Self::NonFiniteReward { state, action } => {
                write!(f, "r({state}, {action}) is not finite")
            }
            Self::PositiveReward { state, action, value } => {
                write!(f, "r({state}, {action}) = {value} is positive")
            }
        }
    }
}

/// Strong connectivity and period of a directed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Primitivity {
    pub irreducible: bool,
    /// gcd of cycle lengths through the component of node 0; 0 when that
    /// component has no cycle.
    pub period: usize,
}

impl Primitivity {
    pub fn is_primitive(&self) -> bool {
        self.irreducible && self.period == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub primitivity: Primitivity,
    /// Pairs not reachable from pair 0 along the transition pattern.
    pub unreachable_pairs: Vec<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity.is_primitive()
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bfs_levels(n: usize, adj: &[Vec<usize>], root: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    let mut queue = VecDeque::new();
    level[root] = Some(0);
    queue.push_back(root);
    while let Some(x) = queue.pop_front() {
        let lx = level[x].unwrap();
        for &y in &adj[x] {
            if level[y].is_none() {
                level[y] = Some(lx + 1);
                queue.push_back(y);
            }
        }
    }
    level
}

/// Irreducibility (reachability from node 0 forwards and backwards) and
/// period (gcd of `level(i) + 1 - level(j)` over edges `i → j` of a BFS
/// tree) of the pattern of `matrix`, where column `i` holds the edges out
/// of `i`.
pub fn primitivity(matrix: &CscMatrix) -> Primitivity {
    let n = matrix.dim();
    if n == 0 {
        return Primitivity {
            irreducible: false,
            period: 0,
        };
    }
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for (j, i, _) in matrix.triplets() {
        fwd[i].push(j);
        bwd[j].push(i);
    }
    let level = bfs_levels(n, &fwd, 0);
    let back = bfs_levels(n, &bwd, 0);
    let irreducible = level.iter().all(Option::is_some) && back.iter().all(Option::is_some);
    let mut period = 0;
    for (i, outs) in fwd.iter().enumerate() {
        let (Some(li), true) = (level[i], back[i].is_some()) else {
            continue;
        };
        for &j in outs {
            if let (Some(lj), true) = (level[j], back[j].is_some()) {
                period = gcd(period, (li + 1).abs_diff(lj));
            }
        }
    }
    Primitivity { irreducible, period }
}

fn reachable_from_zero(matrix: &CscMatrix) -> Vec<usize> {
    let n = matrix.dim();
    let mut fwd = vec![Vec::new(); n];
    for (j, i, _) in matrix.triplets() {
        fwd[i].push(j);
    }
    bfs_levels(n, &fwd, 0)
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_none())
        .map(|(i, _)| i)
        .collect()
}

/// Pattern of `P` (and of `P̃`, which shares it) without requiring the model
/// to be normalized.
fn transition_pattern(model: &MdpModel) -> CscMatrix {
    let index = model.index();
    let columns = (0..index.len())
        .map(|i| {
            let mut col = Vec::new();
            for &(next, p) in &model.dynamics()[i] {
                if p > 0.0 {
                    for j in index.state_pairs(next) {
                        if model.policy()[j] > 0.0 {
                            col.push((j, 1.0));
                        }
                    }
                }
            }
            col
        })
        .collect();
    CscMatrix::from_columns(index.len(), columns).expect("indices validated at construction")
}

/// Reports every violated model invariant and the primitivity of the
/// tilted-matrix sparsity pattern. Never fails.
pub fn validate_model(model: &MdpModel) -> ValidationReport {
    let index = model.index();
    let mut violations = Vec::new();
    for s in 0..model.n_states() {
        let row = model.policy_row(s);
        for (a, &p) in row.iter().enumerate() {
            if p < 0.0 || p.is_nan() {
                violations.push(Violation::NegativePolicy {
                    state: s,
                    action: a,
                    value: p,
                });
            }
        }
        let sum = compensated_sum(row);
        if (sum - 1.0).abs() > NORMALIZATION_TOL || sum.is_nan() {
            violations.push(Violation::PolicyNotNormalized { state: s, sum });
        }
        for a in 0..model.n_actions() {
            let succ = model.successors(s, a);
            for &(next, p) in succ {
                if p < 0.0 || p.is_nan() {
                    violations.push(Violation::NegativeTransition {
                        state: s,
                        action: a,
                        next,
                        value: p,
                    });
                }
            }
            let probs: Vec<f64> = succ.iter().map(|&(_, p)| p).collect();
            let sum = compensated_sum(&probs);
            if (sum - 1.0).abs() > NORMALIZATION_TOL || sum.is_nan() {
                violations.push(Violation::DynamicsNotNormalized {
                    state: s,
                    action: a,
                    sum,
                });
            }
            let r = model.rewards()[index.encode(s, a)];
            if !r.is_finite() {
                violations.push(Violation::NonFiniteReward { state: s, action: a });
            } else if r > 0.0 {
                violations.push(Violation::PositiveReward {
                    state: s,
                    action: a,
                    value: r,
                });
            }
        }
    }
    let pattern = transition_pattern(model);
    ValidationReport {
        violations,
        primitivity: primitivity(&pattern),
        unreachable_pairs: reachable_from_zero(&pattern),
    }
}
