//! Kuhn-Munkres assignment with row/column potentials, O(n^2 m).

/// Maximum-weight assignment on a rectangular `weights` matrix. Returns, for
/// every row, the matched column (`None` for rows left over when there are
/// more rows than columns) and the total weight of the matching.
///
/// Exactly `min(rows, cols)` pairs are matched, including zero-weight ones.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols));

    let row_to_col = if rows <= cols {
        min_cost(rows, cols, |i, j| -weights[i][j])
    } else {
        let col_to_row = min_cost(cols, rows, |i, j| -weights[j][i]);
        let mut out = vec![None; rows];
        for (c, r) in col_to_row.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        out
    };
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| weights[i][c]))
        .sum();
    (row_to_col, total)
}

/// Minimum-cost assignment of every one of `n` rows to distinct columns
/// among `m >= n`. `cost(i, j)` is queried with 0-based indices.
fn min_cost(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    debug_assert!(n <= m);
    // 1-based with a virtual column 0, following the classic formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(r - 1, j - 1) - u[r] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = col0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    col1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![None; n];
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = Some(j - 1);
        }
    }
    row_to_col
}
