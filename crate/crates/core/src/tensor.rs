//! n-mode products for third-order tensors, the contraction primitive behind
//! the factorization model's scoring function and the projection step.

use ndarray::{Array2, Array3, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Contraction mode of a third-order tensor, numbered the way the tensor
/// literature numbers them (mode 1 runs over the first index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }
}

fn check_dim(t: &Array3<f64>, mode: Mode, actual: usize) -> Result<()> {
    let expected = t.shape()[mode.axis()];
    if actual != expected {
        return Err(Error::DimMismatch {
            context: "mode-n product",
            expected,
            actual,
        });
    }
    Ok(())
}

/// Tensor-times-matrix: replaces the `mode` dimension of `t` by the row count
/// of `m`. `m` must have as many columns as `t` is long along `mode`.
pub fn mode_product_matrix(t: &Array3<f64>, m: &ArrayView2<f64>, mode: Mode) -> Result<Array3<f64>> {
    check_dim(t, mode, m.ncols())?;
    let (d0, d1, d2) = t.dim();
    let r = m.nrows();
    let out = match mode {
        Mode::One => {
            let mut out = Array3::zeros((r, d1, d2));
            for j in 0..d1 {
                for k in 0..d2 {
                    for a in 0..r {
                        let mut acc = 0.0;
                        for i in 0..d0 {
                            acc += m[[a, i]] * t[[i, j, k]];
                        }
                        out[[a, j, k]] = acc;
                    }
                }
            }
            out
        }
        Mode::Two => {
            let mut out = Array3::zeros((d0, r, d2));
            for i in 0..d0 {
                for k in 0..d2 {
                    for b in 0..r {
                        let mut acc = 0.0;
                        for j in 0..d1 {
                            acc += m[[b, j]] * t[[i, j, k]];
                        }
                        out[[i, b, k]] = acc;
                    }
                }
            }
            out
        }
        Mode::Three => {
            let mut out = Array3::zeros((d0, d1, r));
            for i in 0..d0 {
                for j in 0..d1 {
                    for c in 0..r {
                        let mut acc = 0.0;
                        for k in 0..d2 {
                            acc += m[[c, k]] * t[[i, j, k]];
                        }
                        out[[i, j, c]] = acc;
                    }
                }
            }
            out
        }
    };
    Ok(out)
}

/// Tensor-times-vector: contracts the `mode` dimension away, leaving a matrix
/// over the two remaining modes (in their original order).
pub fn mode_product_vector(t: &Array3<f64>, v: &ArrayView1<f64>, mode: Mode) -> Result<Array2<f64>> {
    check_dim(t, mode, v.len())?;
    let (d0, d1, d2) = t.dim();
    let out = match mode {
        Mode::One => {
            let mut out = Array2::zeros((d1, d2));
            for i in 0..d0 {
                let vi = v[i];
                for j in 0..d1 {
                    for k in 0..d2 {
                        out[[j, k]] += vi * t[[i, j, k]];
                    }
                }
            }
            out
        }
        Mode::Two => {
            let mut out = Array2::zeros((d0, d2));
            for j in 0..d1 {
                let vj = v[j];
                for i in 0..d0 {
                    for k in 0..d2 {
                        out[[i, k]] += vj * t[[i, j, k]];
                    }
                }
            }
            out
        }
        Mode::Three => {
            let mut out = Array2::zeros((d0, d1));
            for k in 0..d2 {
                let vk = v[k];
                for i in 0..d0 {
                    for j in 0..d1 {
                        out[[i, j]] += vk * t[[i, j, k]];
                    }
                }
            }
            out
        }
    };
    Ok(out)
}
