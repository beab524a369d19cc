//! Maximum-weight bipartite assignment (Kuhn-Munkres with potentials).

/// Finds a one-to-one assignment of rows to columns maximizing the total
/// weight of a rectangular, non-negative weight matrix.
///
/// Returns, for every row, the assigned column (`None` when there are more
/// rows than columns and the row stays unmatched) and the total weight.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> (Vec<Option<usize>>, f64) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (vec![None; rows], 0.0);
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols));

    // Solve min-cost on the orientation with rows <= cols.
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let max_w = weights.iter().flatten().cloned().fold(0.0, f64::max);
    let cost = |i: usize, j: usize| -> f64 {
        let w = if transpose { weights[j][i] } else { weights[i][j] };
        max_w - w
    };

    // 1-based potentials; p[j] = row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![None; rows];
    let mut total = 0.0;
    for j in 1..=m {
        if p[j] == 0 {
            continue;
        }
        let (r, c) = if transpose { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) };
        assign[r] = Some(c);
        total += weights[r][c];
    }
    (assign, total)
}
