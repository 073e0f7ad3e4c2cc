//! Offline authority scoring by power iteration over a transfer data graph.
//!
//! Each step computes `r'(i) = (1 - d) + d * Σ_j A(i, j) * r(j)`. The base
//! term is not divided by the node count, so scores are not a probability
//! distribution; a node with no incoming authority settles at `1 - d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{validate_outgoing_mass, NodeId, TransferDataGraph};

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid rank parameters: {0}")]
    InvalidParams(String),
    #[error("outgoing transfer mass exceeds 1 at nodes {0:?}")]
    MassExceedsOne(Vec<NodeId>),
    #[error("no convergence after {} iterations (residual {residual:e})", best.iterations_used)]
    NotConverged { best: Box<RankVector>, residual: f64 },
    #[error("linear system is singular")]
    SingularSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Uniform,
    /// Each node starts at its share of all weighted edges that point to it.
    #[serde(rename = "inratio")]
    InRatio,
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(InitMode::Uniform),
            "inratio" | "in-ratio" => Ok(InitMode::InRatio),
            other => Err(format!("unknown init mode {other:?} (expected uniform or inratio)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankParams {
    pub damping: f64,
    /// Threshold on the L1 distance between successive iterates.
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: InitMode,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            damping: 0.85,
            epsilon: 1e-8,
            max_iter: 200,
            init: InitMode::InRatio,
        }
    }
}

impl RankParams {
    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(RankError::InvalidParams(format!(
                "damping must be in (0, 1), got {}",
                self.damping
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(RankError::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(RankError::InvalidParams("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankVector {
    pub scores: Vec<f64>,
    pub iterations_used: usize,
    pub final_residual: f64,
}

pub fn init_rank(graph: &TransferDataGraph, mode: InitMode) -> Result<Vec<f64>, RankError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(RankError::EmptyGraph);
    }
    let total = graph.edges().len();
    match mode {
        InitMode::InRatio if total > 0 => Ok((0..n).map(|i| graph.in_degree(i) as f64 / total as f64).collect()),
        _ => Ok(vec![1.0 / n as f64; n]),
    }
}

/// One application of the score equation. Each node sums its incoming edges
/// in edge-list order, so the result is bitwise reproducible.
pub fn rank_step(graph: &TransferDataGraph, scores: &[f64], damping: f64) -> Vec<f64> {
    debug_assert_eq!(scores.len(), graph.node_count());
    (0..graph.node_count())
        .map(|i| {
            let inflow: f64 = graph.incoming(i).map(|e| e.weight * scores[e.from]).sum();
            (1.0 - damping) + damping * inflow
        })
        .collect()
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Iterates [`rank_step`] from [`init_rank`] until successive iterates are
/// within `epsilon` in L1. `iterations_used` counts every step taken,
/// including the one that met the threshold.
pub fn compute_objectrank(graph: &TransferDataGraph, params: &RankParams) -> Result<RankVector, RankError> {
    params.validate()?;
    let flagged: Vec<NodeId> = validate_outgoing_mass(graph)
        .into_iter()
        .filter(|m| m.exceeds_one)
        .map(|m| m.node)
        .collect();
    if !flagged.is_empty() {
        return Err(RankError::MassExceedsOne(flagged));
    }
    let mut scores = init_rank(graph, params.init)?;
    let mut residual = f64::INFINITY;
    for iteration in 1..=params.max_iter {
        let next = rank_step(graph, &scores, params.damping);
        residual = l1_distance(&next, &scores);
        scores = next;
        if residual < params.epsilon {
            return Ok(RankVector {
                scores,
                iterations_used: iteration,
                final_residual: residual,
            });
        }
    }
    Err(RankError::NotConverged {
        best: Box::new(RankVector {
            scores,
            iterations_used: params.max_iter,
            final_residual: residual,
        }),
        residual,
    })
}

/// Dense direct solve of `(I - dA) r = (1 - d) 1` by Gaussian elimination
/// with partial pivoting. Independent of the iterative path; intended for
/// test graphs of up to a couple of thousand nodes.
pub fn oracle_rank(graph: &TransferDataGraph, damping: f64) -> Result<Vec<f64>, RankError> {
    let n = graph.node_count();
    if n == 0 {
        return Err(RankError::EmptyGraph);
    }
    let width = n + 1;
    let mut m = vec![0.0f64; n * width];
    for i in 0..n {
        m[i * width + i] = 1.0;
        m[i * width + n] = 1.0 - damping;
    }
    for e in graph.edges() {
        m[e.to * width + e.from] -= damping * e.weight;
    }

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| m[a * width + col].abs().total_cmp(&m[b * width + col].abs()))
            .expect("non-empty range");
        if m[pivot_row * width + col].abs() < 1e-14 {
            return Err(RankError::SingularSystem);
        }
        if pivot_row != col {
            for k in 0..width {
                m.swap(col * width + k, pivot_row * width + k);
            }
        }
        let pivot = m[col * width + col];
        for row in col + 1..n {
            let factor = m[row * width + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..width {
                m[row * width + k] -= factor * m[col * width + k];
            }
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row * width + k] * x[k]).sum();
        x[row] = (m[row * width + n] - tail) / m[row * width + row];
    }
    Ok(x)
}
