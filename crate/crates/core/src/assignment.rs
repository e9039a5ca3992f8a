//! Linear sum assignment (Hungarian method, shortest augmenting paths with
//! dual potentials). `O(n² m)` for an `n × m` cost matrix with `n <= m`.

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is row-major with `rows * cols` entries and `rows <= cols`.
/// Returns the column chosen for each row and the total cost.
pub fn linear_sum_assignment(cost: &[f64], rows: usize, cols: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), rows * cols, "cost matrix has wrong length");
    assert!(rows <= cols, "more rows than columns");
    if rows == 0 {
        return (Vec::new(), 0.0);
    }

    let at = |i: usize, j: usize| cost[i * cols + j];
    // 1-based potentials and matching; index 0 is the virtual root
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut row_of = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if row_of[j] != 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    let total = assignment.iter().enumerate().map(|(i, &j)| at(i, j)).sum();
    (assignment, total)
}
