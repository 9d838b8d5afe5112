//! Projection of a trained factorization into a relations-by-features data
//! matrix. For each selected relation r the core is contracted with the
//! relation embedding and both entity matrices, giving a d_e x d_e slice that
//! describes how the latent entity dimensions interact under r; the row-major
//! flattening of those slices stacks into the matrix handed to causal
//! discovery.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kg::{AdjacencyTensor, KgIndex};
use crate::lingam::DataMatrix;
use crate::tensor::{mode_product_vector, Mode};
use crate::tucker::TuckerModel;

/// The matricized projection: one row per selected relation, d_e^2 columns.
/// Row i is the row-major flattening of the slice for `relation_ids[i]`, so
/// the feature with flat index c * d_e + c' corresponds to slice entry
/// (c, c'). Values are the raw contraction; centering happens when the
/// matrix is prepared for causal discovery.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    pub q: Array2<f64>,
    pub relation_ids: Vec<usize>,
    pub d_e: usize,
}

impl ProjectionMatrix {
    pub fn n_selected(&self) -> usize {
        self.relation_ids.len()
    }

    /// Column labels `f_<row>_<col>` in flat-index order; these become the
    /// causal variable names and the DAG node names.
    pub fn feature_labels(&self) -> Vec<String> {
        let d = self.d_e;
        (0..d * d).map(|v| format!("f_{}_{}", v / d, v % d)).collect()
    }

    /// Transposes into a p x n data matrix (features as variables, relations
    /// as samples) and centers each variable.
    pub fn to_data_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::from_rows(self.q.t().to_owned(), self.feature_labels())
    }

    /// CSV with a `rel_id` column and one `f_r_c` column per feature, floats
    /// at 17 significant digits so a reload is bit-exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "rel_id")?;
        for label in self.feature_labels() {
            write!(w, ",{label}")?;
        }
        writeln!(w)?;
        for (row, &rel) in self.relation_ids.iter().enumerate() {
            write!(w, "{rel}")?;
            for v in self.q.row(row) {
                write!(w, ",{v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads a CSV produced by [`ProjectionMatrix::write_csv`].
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidValue("empty projection csv".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"rel_id") || cols.len() < 2 {
            return Err(Error::InvalidValue(
                "projection csv must start with a rel_id column".into(),
            ));
        }
        let features = cols.len() - 1;
        let d_e = (features as f64).sqrt().round() as usize;
        if d_e * d_e != features {
            return Err(Error::InvalidValue(format!(
                "{features} feature columns is not a perfect square"
            )));
        }
        let mut relation_ids = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let rel: usize = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::InvalidValue("bad rel_id".into()))?;
            relation_ids.push(rel);
            let mut count = 0;
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::InvalidValue("bad float in projection csv".into()))?;
                values.push(v);
                count += 1;
            }
            if count != features {
                return Err(Error::DimMismatch {
                    context: "projection csv row",
                    expected: features,
                    actual: count,
                });
            }
        }
        let rows = relation_ids.len();
        let q = Array2::from_shape_vec((rows, features), values)
            .map_err(|e| Error::InvalidValue(e.to_string()))?;
        Ok(Self { q, relation_ids, d_e })
    }
}

/// Computes the projection rows for `relation_ids`. For relation r with
/// embedding w_r: contract the core with w_r along mode 2, multiply by the
/// entity matrix on both open modes (E^T (E C_r), computed as (E^T E) C_r),
/// and flatten row-major.
pub fn project(model: &TuckerModel, relation_ids: &[usize]) -> Result<ProjectionMatrix> {
    if relation_ids.is_empty() {
        return Err(Error::InvalidValue("no relations selected".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &r in relation_ids {
        if r >= model.n_r() {
            return Err(Error::OutOfBounds { what: "relation", id: r, bound: model.n_r() });
        }
        if !seen.insert(r) {
            return Err(Error::DuplicateRelation { id: r });
        }
    }
    let d_e = model.d_e();
    let gram = model.entity.t().dot(&model.entity); // E^T E, d_e x d_e
    let mut q = Array2::zeros((relation_ids.len(), d_e * d_e));
    for (row, &r) in relation_ids.iter().enumerate() {
        let w_r = model.relation.row(r);
        let c_r = mode_product_vector(&model.core, &w_r, Mode::Two)?; // d_e x d_e
        let slice = gram.dot(&c_r);
        for c in 0..d_e {
            for cp in 0..d_e {
                q[[row, c * d_e + cp]] = slice[[c, cp]];
            }
        }
    }
    Ok(ProjectionMatrix { q, relation_ids: relation_ids.to_vec(), d_e })
}

/// Which relations feed the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// Lowest ids first: `[0, 1, ..., count-1]`.
    First,
    /// Ordered by triple count descending, ties broken by ascending id.
    MostFrequent,
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "most-frequent" => Ok(Self::MostFrequent),
            other => Err(Error::InvalidValue(format!(
                "unknown relation policy '{other}' (expected first|most-frequent)"
            ))),
        }
    }
}

/// Deterministically picks `count` relation ids under `policy`.
pub fn select_relations(
    index: &KgIndex,
    count: usize,
    policy: SelectionPolicy,
    tensor: &AdjacencyTensor,
) -> Result<Vec<usize>> {
    let n_r = index.n_r();
    if count == 0 {
        return Err(Error::InvalidValue("must select at least one relation".into()));
    }
    if count > n_r {
        return Err(Error::TooMany { requested: count, available: n_r });
    }
    match policy {
        SelectionPolicy::First => Ok((0..count).collect()),
        SelectionPolicy::MostFrequent => {
            let counts = tensor.relation_counts();
            let mut ids: Vec<usize> = (0..n_r).collect();
            ids.sort_by_key(|&r| (std::cmp::Reverse(counts[r]), r));
            ids.truncate(count);
            Ok(ids)
        }
    }
}
