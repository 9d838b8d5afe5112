//! Kernel-based direct estimation of the causal order. Each round regresses
//! every remaining variable on every candidate, scores the candidate by a
//! kernelized mutual-information measure between itself and the residuals,
//! and removes the winner; exactly p-1 rounds always suffice, so the search
//! terminates by construction rather than by convergence.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::cholesky_half_logdet;
use crate::lingam::{estimate_b, CausalModel, DataMatrix, Diagnostics};
use crate::rng::subsample_indices;

/// Variance below which a vector is treated as constant.
const VAR_TOL: f64 = 1e-12;

/// Tuning of the kernel independence measure. `None` fields fall back to the
/// documented defaults: the regularizer depends on the effective sample count
/// and the kernel width comes from the median pairwise distance of each
/// standardized input.
#[derive(Debug, Clone)]
pub struct DirectParams {
    pub tau: Option<f64>,
    pub sigma_rbf: Option<f64>,
    /// Gram matrices are built on at most this many (seeded, jointly drawn)
    /// samples to bound the cubic log-determinant cost.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for DirectParams {
    fn default() -> Self {
        Self {
            tau: None,
            sigma_rbf: None,
            sample_cap: 500,
            seed: 0,
        }
    }
}

fn tau_default(n_effective: usize) -> f64 {
    if n_effective >= 1000 {
        2e-3
    } else {
        2e-2
    }
}

fn variance(x: &ArrayView1<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Least-squares residual of `x_i` on `x_j` using centered copies, so the
/// result is uncorrelated with the regressor. Errors when the regressor is
/// (numerically) constant, which signals a degenerate input column.
pub fn residualize(x_i: &ArrayView1<f64>, x_j: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = x_i.len();
    if n != x_j.len() {
        return Err(Error::DimMismatch {
            context: "residualize",
            expected: n,
            actual: x_j.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidValue("need at least 2 samples".into()));
    }
    let mean_i = x_i.sum() / n as f64;
    let mean_j = x_j.sum() / n as f64;
    let mut cov = 0.0;
    let mut var_j = 0.0;
    for k in 0..n {
        let dj = x_j[k] - mean_j;
        cov += (x_i[k] - mean_i) * dj;
        var_j += dj * dj;
    }
    if var_j / (n as f64) < VAR_TOL {
        return Err(Error::ConstantRegressor { index: usize::MAX });
    }
    let slope = cov / var_j;
    Ok(Array1::from_shape_fn(n, |k| {
        (x_i[k] - mean_i) - slope * (x_j[k] - mean_j)
    }))
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let var = values.iter().map(|v| v * v).sum::<f64>() / n;
    if var >= VAR_TOL {
        let inv = 1.0 / var.sqrt();
        for v in values.iter_mut() {
            *v *= inv;
        }
    }
}

fn median_pairwise_distance(values: &[f64]) -> f64 {
    let n = values.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push((values[i] - values[j]).abs());
        }
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    *median
}

/// Centered RBF Gram matrix of a scalar sample.
fn centered_gram(values: &[f64], sigma: f64) -> Array2<f64> {
    let n = values.len();
    let inv = -1.0 / (2.0 * sigma * sigma);
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in i + 1..n {
            let d = values[i] - values[j];
            let v = (inv * d * d).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            k[[i, j]] += grand - row_means[i] - row_means[j];
        }
    }
    k
}

fn block_logdet(kk: &Array2<f64>) -> Option<f64> {
    cholesky_half_logdet(kk).map(|h| 2.0 * h)
}

/// Kernel-based mutual-information estimate between two scalar samples:
/// -1/2 log(det K_tau / det D_tau) over centered RBF Gram matrices, clamped
/// at zero from below. Inputs are standardized internally; near-constant
/// inputs flow through and come out as (near) zero dependence.
pub fn kernel_mi(y1: &ArrayView1<f64>, y2: &ArrayView1<f64>, params: &DirectParams) -> Result<f64> {
    let n = y1.len();
    if n != y2.len() {
        return Err(Error::DimMismatch {
            context: "kernel_mi",
            expected: n,
            actual: y2.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidValue("need at least 3 samples".into()));
    }
    let idx = subsample_indices(n, params.sample_cap, params.seed);
    let m = idx.len();
    let mut a: Vec<f64> = idx.iter().map(|&i| y1[i]).collect();
    let mut b: Vec<f64> = idx.iter().map(|&i| y2[i]).collect();
    standardize(&mut a);
    standardize(&mut b);

    let sigma_a = params
        .sigma_rbf
        .unwrap_or_else(|| median_pairwise_distance(&a).max(VAR_TOL.sqrt()).max(1e-3));
    let sigma_b = params
        .sigma_rbf
        .unwrap_or_else(|| median_pairwise_distance(&b).max(VAR_TOL.sqrt()).max(1e-3));
    let k1 = centered_gram(&a, sigma_a);
    let k2 = centered_gram(&b, sigma_b);

    let tau = params.tau.unwrap_or_else(|| tau_default(m));
    let c = m as f64 * tau / 2.0;

    // regularized diagonal factors A = K1 + cI, B = K2 + cI
    let mut a_mat = k1.clone();
    let mut b_mat = k2.clone();
    for i in 0..m {
        a_mat[[i, i]] += c;
        b_mat[[i, i]] += c;
    }

    // D_tau is block diagonal with A^2 and B^2
    let ld_a = block_logdet(&a_mat)
        .ok_or_else(|| Error::NumericalFailure("regularized Gram not positive definite".into()))?;
    let ld_b = block_logdet(&b_mat)
        .ok_or_else(|| Error::NumericalFailure("regularized Gram not positive definite".into()))?;
    let logdet_d = 2.0 * (ld_a + ld_b);

    // K_tau assembled blockwise: [[A^2, K1 K2], [K2 K1, B^2]]
    let mut kk = Array2::zeros((2 * m, 2 * m));
    kk.slice_mut(s![..m, ..m]).assign(&a_mat.dot(&a_mat));
    kk.slice_mut(s![m.., m..]).assign(&b_mat.dot(&b_mat));
    let k1k2 = k1.dot(&k2);
    kk.slice_mut(s![..m, m..]).assign(&k1k2);
    kk.slice_mut(s![m.., ..m]).assign(&k1k2.t());

    let logdet_k = match block_logdet(&kk) {
        Some(v) => v,
        None => {
            // one jitter retry scaled to the matrix before giving up
            let trace: f64 = (0..2 * m).map(|i| kk[[i, i]]).sum();
            let jitter = 1e-10 * trace / (2 * m) as f64;
            for i in 0..2 * m {
                kk[[i, i]] += jitter;
            }
            block_logdet(&kk).ok_or_else(|| {
                Error::NumericalFailure("block Gram log-determinant failed after jitter".into())
            })?
        }
    };

    let mi = -0.5 * (logdet_k - logdet_d);
    if !mi.is_finite() {
        return Err(Error::NumericalFailure("non-finite mutual information".into()));
    }
    Ok(mi.max(0.0))
}

fn t_kernel_rows(
    x: &Array2<f64>,
    j: usize,
    active: &[usize],
    params: &DirectParams,
) -> Result<f64> {
    let x_j = x.row(j);
    let mut total = 0.0;
    for &i in active {
        if i == j {
            continue;
        }
        let r_i = residualize(&x.row(i), &x_j).map_err(|e| match e {
            Error::ConstantRegressor { .. } => Error::ConstantRegressor { index: j },
            other => other,
        })?;
        total += kernel_mi(&x_j, &r_i.view(), params)?;
    }
    Ok(total)
}

/// Total dependence between candidate `j` and the residuals of every other
/// active variable regressed on it; the most exogenous candidate scores
/// lowest.
pub fn t_kernel(
    x: &DataMatrix,
    j: usize,
    active: &[usize],
    params: &DirectParams,
) -> Result<f64> {
    if !active.contains(&j) {
        return Err(Error::InvalidValue(format!("variable {j} not in active set")));
    }
    if active.len() < 2 {
        return Err(Error::InvalidValue("need at least 2 active variables".into()));
    }
    t_kernel_rows(x.matrix(), j, active, params)
}

/// Runs the full search: p-1 selection rounds, then ordinary least squares of
/// each variable on its predecessors in the recovered order (minimum-norm
/// when rank deficient). Candidates whose current residual is constant are
/// deferred behind every live candidate (ties by ascending index), which
/// keeps runs with fewer samples than variables well defined.
pub fn discover(x: &DataMatrix, params: &DirectParams) -> Result<CausalModel> {
    let p = x.p();
    let mut work = x.matrix().clone();
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut order = Vec::with_capacity(p);
    let mut step_scores = Vec::with_capacity(p.saturating_sub(1));
    let mut degenerate_candidates = 0usize;

    while remaining.len() > 1 {
        let mut best: Option<(f64, usize)> = None;
        for &j in &remaining {
            let score = if variance(&work.row(j)) < VAR_TOL {
                degenerate_candidates += 1;
                f64::INFINITY
            } else {
                t_kernel_rows(&work, j, &remaining, params)?
            };
            let better = match best {
                None => true,
                // strict improvement only: first (lowest) index wins ties
                Some((s, _)) => score < s,
            };
            if better {
                best = Some((score, j));
            }
        }
        let (score, m) = best.expect("non-empty candidate set");
        order.push(m);
        step_scores.push(score);
        remaining.retain(|&v| v != m);
        if variance(&work.row(m)) >= VAR_TOL {
            let x_m = work.row(m).to_owned();
            for &i in &remaining {
                let r = residualize(&work.row(i), &x_m.view())?;
                work.row_mut(i).assign(&r);
            }
        }
    }
    order.push(remaining[0]);

    let (b, residuals, rank_deficient) = estimate_b(x.matrix(), &order);
    Ok(CausalModel {
        order,
        b,
        residuals,
        diagnostics: Diagnostics {
            step_scores,
            rank_deficient,
            degenerate_candidates,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;

    fn uniform_vec(n: usize, rng: &mut impl Rng) -> Array1<f64> {
        Array1::from_shape_fn(n, |_| rng.gen_range(-1.0_f64..1.0))
    }

    #[test]
    fn residual_of_identical_vectors_is_zero() {
        let mut rng = substream(1, "direct-test");
        let x = uniform_vec(40, &mut rng);
        let r = residualize(&x.view(), &x.view()).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn orthogonal_regressor_leaves_vector_unchanged() {
        // empirically uncorrelated pair by construction
        let x_i = Array1::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        let x_j = Array1::from_vec(vec![1.0, 1.0, -1.0, -1.0]);
        let r = residualize(&x_i.view(), &x_j.view()).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(r[k], x_i[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_is_uncorrelated_with_regressor() {
        let mut rng = substream(2, "direct-test");
        for _ in 0..20 {
            let x_i = uniform_vec(50, &mut rng);
            let x_j = uniform_vec(50, &mut rng);
            let r = residualize(&x_i.view(), &x_j.view()).unwrap();
            let mean_j = x_j.sum() / 50.0;
            let cov = x_j
                .iter()
                .zip(r.iter())
                .map(|(xj, ri)| (xj - mean_j) * ri)
                .sum::<f64>()
                / 50.0;
            assert!(cov.abs() < 1e-10, "cov {cov}");
        }
    }

    #[test]
    fn slope_matches_grid_refinement_oracle() {
        let mut rng = substream(3, "direct-test");
        let x_j = uniform_vec(50, &mut rng);
        let x_i = &x_j * 1.7 + &uniform_vec(50, &mut rng) * 0.3;
        // oracle: minimize sum((xi - b*xj)^2) over centered data by nested
        // grid refinement, independent of the closed form
        let n = 50.0;
        let ci = &x_i - x_i.sum() / n;
        let cj = &x_j - x_j.sum() / n;
        let sse = |b: f64| -> f64 { ci.iter().zip(cj.iter()).map(|(a, c)| (a - b * c).powi(2)).sum() };
        let mut lo = -10.0;
        let mut hi = 10.0;
        let mut best = 0.0;
        for _ in 0..6 {
            let step = (hi - lo) / 1000.0;
            let mut best_val = f64::INFINITY;
            for k in 0..=1000 {
                let b = lo + step * k as f64;
                let v = sse(b);
                if v < best_val {
                    best_val = v;
                    best = b;
                }
            }
            lo = best - 2.0 * step;
            hi = best + 2.0 * step;
        }
        let r = residualize(&x_i.view(), &x_j.view()).unwrap();
        // recover the slope the implementation used: b = (ci - r) / cj elementwise
        let implied = (ci[0] - r[0]) / cj[0];
        assert_abs_diff_eq!(implied, best, epsilon = 1e-6);
    }

    #[test]
    fn constant_regressor_is_an_error() {
        let x_i = Array1::from_vec(vec![1.0, 2.0, 3.0]);
        let x_j = Array1::from_vec(vec![5.0, 5.0, 5.0]);
        assert!(matches!(
            residualize(&x_i.view(), &x_j.view()),
            Err(Error::ConstantRegressor { .. })
        ));
    }

    #[test]
    fn kernel_mi_is_nonnegative_and_detects_dependence() {
        let params = DirectParams { seed: 5, ..Default::default() };
        let mut correct = 0;
        for trial in 0..20 {
            let mut rng = substream(100 + trial, "direct-test");
            let y1 = uniform_vec(200, &mut rng);
            let indep = uniform_vec(200, &mut rng);
            let mi_dep = kernel_mi(&y1.view(), &y1.view(), &params).unwrap();
            let mi_indep = kernel_mi(&y1.view(), &indep.view(), &params).unwrap();
            assert!(mi_dep >= 0.0 && mi_indep >= 0.0);
            if mi_dep > mi_indep {
                correct += 1;
            }
        }
        assert!(correct >= 19, "dependence ordered correctly in {correct}/20");
    }

    #[test]
    fn kernel_mi_handles_near_constant_input() {
        let params = DirectParams::default();
        let mut rng = substream(7, "direct-test");
        let y1 = uniform_vec(50, &mut rng);
        let y2 = Array1::zeros(50);
        let mi = kernel_mi(&y1.view(), &y2.view(), &params).unwrap();
        assert!(mi >= 0.0 && mi < 1e-6, "mi {mi}");
    }

    #[test]
    fn t_kernel_with_two_actives_is_single_mi_term() {
        let params = DirectParams { seed: 9, ..Default::default() };
        let mut rng = substream(8, "direct-test");
        let mut x = Array2::zeros((2, 60));
        x.row_mut(0).assign(&uniform_vec(60, &mut rng));
        x.row_mut(1).assign(&uniform_vec(60, &mut rng));
        let dm = DataMatrix::from_rows(x, vec!["a".into(), "b".into()]).unwrap();
        let t = t_kernel(&dm, 0, &[0, 1], &params).unwrap();
        let r = residualize(&dm.variable(1), &dm.variable(0)).unwrap();
        let mi = kernel_mi(&dm.variable(0), &r.view(), &params).unwrap();
        assert_abs_diff_eq!(t, mi, epsilon = 1e-12);
    }

    #[test]
    fn t_kernel_is_symmetric_in_non_candidate_labels() {
        let params = DirectParams { seed: 10, ..Default::default() };
        let mut rng = substream(11, "direct-test");
        let mut x = Array2::zeros((3, 80));
        for i in 0..3 {
            x.row_mut(i).assign(&uniform_vec(80, &mut rng));
        }
        let labels = vec!["a".into(), "b".into(), "c".into()];
        let dm = DataMatrix::from_rows(x.clone(), labels.clone()).unwrap();
        let t_orig = t_kernel(&dm, 0, &[0, 1, 2], &params).unwrap();
        // swap variables 1 and 2
        let mut swapped = x;
        let r1 = swapped.row(1).to_owned();
        let r2 = swapped.row(2).to_owned();
        swapped.row_mut(1).assign(&r2);
        swapped.row_mut(2).assign(&r1);
        let dm2 = DataMatrix::from_rows(swapped, labels).unwrap();
        let t_swap = t_kernel(&dm2, 0, &[0, 1, 2], &params).unwrap();
        assert_abs_diff_eq!(t_orig, t_swap, epsilon = 1e-12);
    }

    fn two_var_instance(n: usize, seed: u64) -> DataMatrix {
        let mut rng = substream(seed, "direct-test");
        let e1 = uniform_vec(n, &mut rng);
        let e2 = uniform_vec(n, &mut rng);
        let x2 = &e1 * 3.0 + &e2;
        let mut x = Array2::zeros((2, n));
        x.row_mut(0).assign(&e1);
        x.row_mut(1).assign(&x2);
        DataMatrix::from_rows(x, vec!["x1".into(), "x2".into()]).unwrap()
    }

    #[test]
    fn recovers_two_variable_chain() {
        let dm = two_var_instance(1000, 21);
        let model = discover(&dm, &DirectParams { seed: 1, ..Default::default() }).unwrap();
        assert_eq!(model.order, vec![0, 1]);
        assert_abs_diff_eq!(model.b[[1, 0]], 3.0, epsilon = 0.1);
        assert!(model.is_strictly_lower_under_order());
        assert_eq!(model.diagnostics.step_scores.len(), 1);
    }

    #[test]
    fn first_selection_matches_exhaustive_scan_p3() {
        let mut rng = substream(31, "direct-test");
        let n = 200;
        let e: Vec<Array1<f64>> = (0..3).map(|_| uniform_vec(n, &mut rng)).collect();
        let x0 = e[0].clone();
        let x1 = &x0 * 0.8 + &e[1];
        let x2 = &x1 * -0.9 + &e[2];
        let mut x = Array2::zeros((3, n));
        x.row_mut(0).assign(&x0);
        x.row_mut(1).assign(&x1);
        x.row_mut(2).assign(&x2);
        let dm = DataMatrix::from_rows(
            x,
            vec!["x0".into(), "x1".into(), "x2".into()],
        )
        .unwrap();
        let params = DirectParams { seed: 3, ..Default::default() };
        let model = discover(&dm, &params).unwrap();
        let active = [0, 1, 2];
        let scores: Vec<f64> = active
            .iter()
            .map(|&j| t_kernel(&dm, j, &active, &params).unwrap())
            .collect();
        let argmin = (0..3).min_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap()).unwrap();
        assert_eq!(model.order[0], argmin);
        assert_abs_diff_eq!(model.diagnostics.step_scores[0], scores[argmin], epsilon = 1e-12);
    }

    #[test]
    fn identical_rows_take_the_degenerate_path() {
        let mut rng = substream(41, "direct-test");
        let row = uniform_vec(50, &mut rng);
        let mut x = Array2::zeros((2, 50));
        x.row_mut(0).assign(&row);
        x.row_mut(1).assign(&row);
        let dm = DataMatrix::from_rows(x, vec!["a".into(), "b".into()]).unwrap();
        let model = discover(&dm, &DirectParams::default()).unwrap();
        assert_eq!(model.order.len(), 2);
        let (first, second) = (model.order[0], model.order[1]);
        assert_abs_diff_eq!(model.b[[second, first]], 1.0, epsilon = 1e-9);
        assert!(model.is_strictly_lower_under_order());
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = substream(51, "direct-test");
        let n = 150;
        let e: Vec<Array1<f64>> = (0..3).map(|_| uniform_vec(n, &mut rng)).collect();
        let x0 = e[0].clone();
        let x1 = &x0 * 1.2 + &e[1];
        let x2 = &x0 * -0.7 + &(&x1 * 0.5) + &e[2];
        let rows = [x0, x1, x2];
        let labels = ["x0", "x1", "x2"];
        let build = |perm: &[usize]| {
            let mut x = Array2::zeros((3, n));
            for (new_i, &old_i) in perm.iter().enumerate() {
                x.row_mut(new_i).assign(&rows[old_i]);
            }
            DataMatrix::from_rows(x, perm.iter().map(|&i| labels[i].to_string()).collect())
                .unwrap()
        };
        let params = DirectParams { seed: 2, ..Default::default() };
        let base = discover(&build(&[0, 1, 2]), &params).unwrap();
        let perm = [2, 0, 1]; // new index -> old index
        let permuted = discover(&build(&perm), &params).unwrap();
        // map permuted outputs back into original variable ids
        let back: Vec<usize> = permuted.order.iter().map(|&v| perm[v]).collect();
        assert_eq!(back, base.order);
        for new_i in 0..3 {
            for new_j in 0..3 {
                let diff =
                    permuted.b[[new_i, new_j]] - base.b[[perm[new_i], perm[new_j]]];
                assert!(diff.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn always_terminates_with_full_order() {
        // adversarial: all-equal columns except tiny noise
        let mut rng = substream(61, "direct-test");
        let base = uniform_vec(30, &mut rng);
        let mut x = Array2::zeros((4, 30));
        for i in 0..4 {
            let noise = uniform_vec(30, &mut rng) * 1e-3;
            x.row_mut(i).assign(&(&base + &noise));
        }
        let dm = DataMatrix::from_rows(x, (0..4).map(|i| format!("v{i}")).collect()).unwrap();
        let model = discover(&dm, &DirectParams::default()).unwrap();
        let mut sorted = model.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
        assert_eq!(model.diagnostics.step_scores.len(), 3);
    }

    #[test]
    fn more_variables_than_samples_is_flagged_not_fatal() {
        let mut rng = substream(71, "direct-test");
        let n = 5;
        let mut x = Array2::zeros((8, n));
        for i in 0..8 {
            x.row_mut(i).assign(&uniform_vec(n, &mut rng));
        }
        let dm = DataMatrix::from_rows(x, (0..8).map(|i| format!("v{i}")).collect()).unwrap();
        let model = discover(&dm, &DirectParams::default()).unwrap();
        assert!(model.diagnostics.rank_deficient);
        assert_eq!(model.order.len(), 8);
        assert!(model.is_strictly_lower_under_order());
        assert!(model.b.iter().all(|v| v.is_finite()));
    }
}
