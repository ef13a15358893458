use serde::{Deserialize, Serialize};

use super::{split_gain, HyperParams};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature_index: usize,
    /// Rows with `x < split_threshold` go left.
    pub split_threshold: f64,
    /// Net of `gamma`.
    pub gain: f64,
    pub grad_left: f64,
    pub grad_right: f64,
    pub hess_left: f64,
    pub hess_right: f64,
}

/// Row order of every column, sorted by `(value, row index)`. Built once per
/// training run; split search then only filters by the round's row subset.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    order: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

/// Midpoint of two consecutive distinct values, nudged up to `hi` when the
/// floating-point midpoint collapses onto `lo`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo {
        mid
    } else {
        hi
    }
}

impl SortedColumns {
    pub fn new(matrix: &FeatureMatrix) -> Self {
        let n = matrix.n_rows();
        let mut order = Vec::with_capacity(matrix.n_cols());
        let mut values = Vec::with_capacity(matrix.n_cols());
        for c in 0..matrix.n_cols() {
            let col: Vec<f64> = (0..n).map(|r| matrix.get(r, c)).collect();
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.push(idx);
            values.push(col);
        }
        SortedColumns { order, values }
    }

    /// Best admissible stump over `cols` for the rows flagged in `in_rows`.
    /// `rows` lists the same rows in ascending order; `cols` must be
    /// ascending so that a strict `>` implements the tie-break (lowest
    /// feature, then lowest threshold).
    pub fn best_split(
        &self,
        grads: &[f64],
        hess: &[f64],
        rows: &[usize],
        in_rows: &[bool],
        cols: &[usize],
        params: &HyperParams,
    ) -> Option<SplitCandidate> {
        let (g_total, h_total) = rows.iter().fold((0.0, 0.0), |(g, h), &r| (g + grads[r], h + hess[r]));

        let mut best: Option<SplitCandidate> = None;
        for &c in cols {
            let values = &self.values[c];
            let (mut gl, mut hl) = (0.0, 0.0);
            let mut prev: Option<f64> = None;
            for &r in &self.order[c] {
                let r = r as usize;
                if !in_rows[r] {
                    continue;
                }
                let v = values[r];
                if let Some(p) = prev.filter(|p| *p != v) {
                    let (gr, hr) = (g_total - gl, h_total - hl);
                    if hl.min(hr) >= params.min_child_weight {
                        let gain = split_gain(gl, hl, gr, hr, params);
                        if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                            best = Some(SplitCandidate {
                                feature_index: c,
                                split_threshold: midpoint(p, v),
                                gain,
                                grad_left: gl,
                                grad_right: gr,
                                hess_left: hl,
                                hess_right: hr,
                            });
                        }
                    }
                }
                gl += grads[r];
                hl += hess[r];
                prev = Some(v);
            }
        }
        best
    }
}

/// Exact best stump for per-row gradients `g`/`h` (indexed by matrix row)
/// restricted to `row_subset` and `column_subset`.
pub fn find_best_stump(
    g: &[f64],
    h: &[f64],
    matrix: &FeatureMatrix,
    row_subset: &[usize],
    column_subset: &[usize],
    params: &HyperParams,
) -> Option<SplitCandidate> {
    let mut rows = row_subset.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let mut cols = column_subset.to_vec();
    cols.sort_unstable();
    cols.dedup();
    let mut in_rows = vec![false; matrix.n_rows()];
    for &r in &rows {
        in_rows[r] = true;
    }
    SortedColumns::new(matrix).best_split(g, h, &rows, &in_rows, &cols, params)
}
