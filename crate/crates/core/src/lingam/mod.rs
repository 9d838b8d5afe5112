//! Linear non-Gaussian acyclic model estimation. `direct` hosts the
//! kernel-independence search that is guaranteed to finish in p-1 selection
//! rounds; `ica` hosts the FastICA-based baseline that may fail to converge.

pub mod direct;
pub mod ica;

use ndarray::{Array2, ArrayView1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::min_norm_lstsq;

/// Observations arranged p variables by n samples, one row per variable.
/// Construction centers every row; downstream estimators assume zero-mean
/// variables and models without intercepts.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    x: Array2<f64>,
    labels: Vec<String>,
}

impl DataMatrix {
    /// Builds a data matrix from variable rows. Requires p >= 2 variables,
    /// n >= 3 samples, finite entries, and one label per variable.
    pub fn from_rows(mut x: Array2<f64>, labels: Vec<String>) -> Result<Self> {
        let (p, n) = x.dim();
        if p < 2 {
            return Err(Error::InvalidValue(format!(
                "need at least 2 variables, got {p}"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidValue(format!(
                "need at least 3 samples, got {n}"
            )));
        }
        if labels.len() != p {
            return Err(Error::InvalidValue(format!(
                "{} labels for {p} variables",
                labels.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("non-finite sample values".into()));
        }
        for mut row in x.rows_mut() {
            let mean = row.sum() / n as f64;
            row.mapv_inplace(|v| v - mean);
        }
        Ok(Self { x, labels })
    }

    /// Number of variables.
    pub fn p(&self) -> usize {
        self.x.nrows()
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn variable(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Per-run estimator notes carried alongside the structural result.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    /// Independence score of the variable chosen at each selection round
    /// (non-finite when the round only had degenerate candidates).
    pub step_scores: Vec<f64>,
    /// Set when there were fewer samples than variables; the strength matrix
    /// then comes from minimum-norm least squares.
    pub rank_deficient: bool,
    /// Candidate evaluations skipped because the candidate's residual had
    /// (numerically) zero variance.
    pub degenerate_candidates: usize,
}

/// A fitted acyclic linear model: a causal order (earliest variable first),
/// the connection-strength matrix with structural zeros wherever the order
/// forbids an edge, and the implied residuals.
#[derive(Debug, Clone)]
pub struct CausalModel {
    pub order: Vec<usize>,
    pub b: Array2<f64>,
    pub residuals: Array2<f64>,
    pub diagnostics: Diagnostics,
}

impl CausalModel {
    /// True when `b[i][j]` is exactly zero whenever `i` does not come after
    /// `j` in the causal order.
    pub fn is_strictly_lower_under_order(&self) -> bool {
        let p = self.order.len();
        let mut pos = vec![0usize; p];
        for (t, &v) in self.order.iter().enumerate() {
            pos[v] = t;
        }
        for i in 0..p {
            for j in 0..p {
                if pos[i] <= pos[j] && self.b[[i, j]] != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Ordinary least squares of each variable on all its predecessors in
/// `order`, falling back to the minimum-norm solution when the regression is
/// rank deficient. Returns `(B, residuals = X - B X, rank_deficient)`.
pub(crate) fn estimate_b(x: &Array2<f64>, order: &[usize]) -> (Array2<f64>, Array2<f64>, bool) {
    let (p, n) = x.dim();
    debug_assert_eq!(order.len(), p);
    let mut b = Array2::zeros((p, p));
    for t in 1..p {
        let target = order[t];
        let preds = &order[..t];
        let mut design = Array2::zeros((t, n));
        for (k, &j) in preds.iter().enumerate() {
            design.row_mut(k).assign(&x.row(j));
        }
        let beta = min_norm_lstsq(&design, &x.row(target).to_owned());
        for (k, &j) in preds.iter().enumerate() {
            b[[target, j]] = beta[k];
        }
    }
    let residuals = x - &b.dot(x);
    (b, residuals, n < p)
}

/// JSON document shared by both estimators. The ICA fields are omitted for
/// the direct algorithm.
#[derive(Debug, Clone, Serialize)]
pub struct CausalReport {
    pub order: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub diagnostics: ReportDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDiagnostics {
    /// `null` entries mark rounds decided among degenerate candidates only.
    pub step_scores: Vec<Option<f64>>,
    pub rank_deficient: bool,
    pub degenerate_candidates: usize,
}

impl CausalReport {
    pub fn new(model: &CausalModel, labels: &[String]) -> Self {
        Self {
            order: model.order.clone(),
            b: model.b.rows().into_iter().map(|r| r.to_vec()).collect(),
            labels: labels.to_vec(),
            diagnostics: ReportDiagnostics {
                step_scores: model
                    .diagnostics
                    .step_scores
                    .iter()
                    .map(|&s| s.is_finite().then_some(s))
                    .collect(),
                rank_deficient: model.diagnostics.rank_deficient,
                degenerate_candidates: model.diagnostics.degenerate_candidates,
            },
            converged: None,
            iterations: None,
        }
    }

    pub fn with_convergence(mut self, converged: bool, iterations: usize) -> Self {
        self.converged = Some(converged);
        self.iterations = Some(iterations);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Renders the model as a Graphviz digraph: one node per variable, one edge
/// j -> i for every |b[i][j]| above the threshold, labelled with the strength
/// at three decimals. Output is byte-deterministic for a given model.
pub fn to_dot(model: &CausalModel, labels: &[String], edge_threshold: f64) -> String {
    let p = model.order.len();
    let mut out = String::from("digraph G {\n");
    for label in labels {
        out.push_str(&format!("  \"{label}\";\n"));
    }
    for i in 0..p {
        for j in 0..p {
            let strength = model.b[[i, j]];
            if strength.abs() > edge_threshold {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [label=\"{:.3}\"];\n",
                    labels[j], labels[i], strength
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}
