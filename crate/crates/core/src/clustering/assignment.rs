//! Hungarian algorithm (shortest augmenting paths with potentials).

/// Minimum-cost perfect matching on a square cost matrix given row-major.
/// Returns `col_for_row`.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
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
    let mut col_for_row = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_for_row[row_of[j] - 1] = j - 1;
        }
    }
    col_for_row
}

/// Maximum total weight of a matching between rows and columns of a
/// (possibly rectangular) nonnegative weight table.
pub fn max_weight_matching(weights: &[Vec<usize>]) -> usize {
    let rows = weights.len();
    let cols = weights.iter().map(Vec::len).max().unwrap_or(0);
    let n = rows.max(cols);
    if n == 0 {
        return 0;
    }
    let top = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let at = |i: usize, j: usize| weights.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| top - at(i, j)).collect()).collect();
    min_cost_assignment(&cost)
        .iter()
        .enumerate()
        .map(|(i, &j)| at(i, j) as usize)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<i64>]) -> i64 {
        fn go(cost: &[Vec<i64>], row: usize, used: &mut Vec<bool>) -> i64 {
            if row == cost.len() {
                return 0;
            }
            let mut best = i64::MAX;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) % 20) as i64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let assign = min_cost_assignment(&cost);
                let total: i64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                assert_eq!(total, brute_force(&cost));
                let mut seen = assign.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn rectangular() {
        assert_eq!(max_weight_matching(&[vec![3, 1, 0], vec![0, 0, 4]]), 7);
        assert_eq!(max_weight_matching(&[vec![2], vec![5]]), 5);
    }
}
