//! Breadth-first search for terminating Laplace sequences.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{laplace_transform, LaplaceError};
use crate::system::{CoeffTable, DiagonalSystem, SystemError};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Terminated {
        steps: usize,
        path: Vec<usize>,
        numeric_only: bool,
    },
    NotTerminated,
    Degenerate,
    PrereqViolated,
}

/// One explored branch.
#[derive(Clone, Debug, Serialize)]
pub struct SequenceNode {
    pub path: Vec<usize>,
    /// `ok`, `terminated`, `repeat`, `not_hyperbolic` or the error text.
    pub outcome: String,
    pub lambdas: Vec<String>,
    pub cross_form_residual: Option<f64>,
    pub table_residual: Option<f64>,
    pub semihamiltonian_residual: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceResult {
    pub i: usize,
    pub depth: usize,
    pub outcome: Outcome,
    pub nodes: Vec<SequenceNode>,
}

struct Frontier {
    path: Vec<usize>,
    sys: DiagonalSystem,
}

/// Search `j`-paths of length up to `max_depth` for one ending in a system
/// whose row `i` vanishes. Paths are explored in lexicographic order, so the
/// first hit is the shortest and lexicographically smallest.
pub fn sequence_terminates(
    sys: &DiagonalSystem,
    i: usize,
    max_depth: usize,
) -> Result<SequenceResult, SystemError> {
    let samples = sys.sample()?;
    let table = CoeffTable::build(sys, &samples);
    let n = sys.n;
    let root_zero = (1..=n)
        .filter(|&m| m != i)
        .all(|m| table.is_numeric_zero(i, m));
    if root_zero {
        let numeric_only = !(1..=n).filter(|&m| m != i).all(|m| table.is_zero(i, m));
        return Ok(SequenceResult {
            i,
            depth: max_depth,
            outcome: Outcome::Terminated {
                steps: 0,
                path: vec![],
                numeric_only,
            },
            nodes: vec![],
        });
    }
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    seen.insert(sys.printed_lambdas());
    let mut frontier = vec![Frontier {
        path: vec![],
        sys: sys.clone(),
    }];
    let mut nodes = Vec::new();
    let (mut alive, mut degenerate) = (false, false);
    for _ in 0..max_depth {
        let mut next = Vec::new();
        for node in &frontier {
            let s = node.sys.sample()?;
            let t = CoeffTable::build(&node.sys, &s);
            for j in (1..=n).filter(|&j| j != i) {
                let mut path = node.path.clone();
                path.push(j);
                let step = match laplace_transform(&node.sys, &t, &s, i, j) {
                    Ok(step) => step,
                    Err(e) => {
                        match e {
                            LaplaceError::DegenerateLaplace { .. }
                            | LaplaceError::CollidingCoefficients { .. } => degenerate = true,
                            _ => {}
                        }
                        nodes.push(SequenceNode {
                            path,
                            outcome: e.to_string(),
                            lambdas: vec![],
                            cross_form_residual: None,
                            table_residual: None,
                            semihamiltonian_residual: None,
                        });
                        continue;
                    }
                };
                let printed: Vec<String> = step.lambdas.iter().map(|l| l.to_string()).collect();
                let terminated = step.row.vanishes(&s, sys.tol);
                let repeat = !seen.insert(printed.clone());
                let outcome = if terminated {
                    "terminated"
                } else if step.table.is_none() {
                    "not_hyperbolic"
                } else if repeat {
                    "repeat"
                } else {
                    "ok"
                };
                nodes.push(SequenceNode {
                    path: path.clone(),
                    outcome: outcome.into(),
                    lambdas: printed,
                    cross_form_residual: Some(step.row.cross_form.max),
                    table_residual: step.table_residual.as_ref().map(|r| r.max),
                    semihamiltonian_residual: step.semihamiltonian.as_ref().map(|c| c.residual.max),
                });
                if terminated {
                    return Ok(SequenceResult {
                        i,
                        depth: max_depth,
                        outcome: Outcome::Terminated {
                            steps: path.len(),
                            path,
                            numeric_only: !step.row.vanishes_symbolically(),
                        },
                        nodes,
                    });
                }
                alive = true;
                if step.table.is_some() && !repeat {
                    next.push(Frontier {
                        path,
                        sys: step.system,
                    });
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    let outcome = if alive {
        Outcome::NotTerminated
    } else if degenerate {
        Outcome::Degenerate
    } else {
        Outcome::PrereqViolated
    };
    Ok(SequenceResult {
        i,
        depth: max_depth,
        outcome,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    #[test]
    fn decoupled_terminates_immediately() {
        let r = sequence_terminates(&builtin("order0_decoupled").unwrap(), 1, 3).unwrap();
        assert_eq!(
            r.outcome,
            Outcome::Terminated {
                steps: 0,
                path: vec![],
                numeric_only: false
            }
        );
    }

    #[test]
    fn shifted_family_never_terminates() {
        let r = sequence_terminates(&builtin("shifted3").unwrap(), 1, 2).unwrap();
        assert_eq!(r.outcome, Outcome::NotTerminated);
        assert!(r
            .nodes
            .iter()
            .all(|n| n.outcome == "ok" || n.outcome == "repeat"));
        assert!(r
            .nodes
            .iter()
            .all(|n| n.semihamiltonian_residual.unwrap() <= 1e-9));
    }

    #[test]
    fn swapped_pair_is_degenerate() {
        let r = sequence_terminates(&builtin("lindeg2").unwrap(), 1, 1).unwrap();
        assert_eq!(r.outcome, Outcome::Degenerate);
    }

    #[test]
    fn one_step_termination() {
        let sys = DiagonalSystem::from_strs(&["1/(u1 + u2)", "0"], vec![(1.0, 2.0); 2]).unwrap();
        let r = sequence_terminates(&sys, 1, 3).unwrap();
        assert!(
            matches!(r.outcome, Outcome::Terminated { steps: 1, .. }),
            "{:?}",
            r.outcome
        );
    }
}
