//! Rectangular linear assignment (Hungarian method with potentials).

/// Minimum-cost assignment over a rectangular cost matrix.
///
/// Returns `(row, col)` pairs sorted by row; every row is assigned when there
/// are at least as many columns as rows, otherwise every column is.
/// Deterministic: scans run in index order and only strict improvements move.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols)
            .map(|j| (0..rows).map(|i| cost[i][j]).collect())
            .collect();
        let mut pairs: Vec<(usize, usize)> = hungarian(&transposed)
            .into_iter()
            .map(|(j, i)| (i, j))
            .collect();
        pairs.sort_unstable();
        return pairs;
    }

    let (n, m) = (rows, cols);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
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
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn total(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| cost[i][j]).sum()
    }

    /// Minimum over all injective maps from the smaller side.
    fn brute(cost: &[Vec<f64>]) -> f64 {
        let rows = cost.len();
        let cols = cost[0].len();
        fn go(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>, transpose: bool) -> f64 {
            let (rows, cols) = if transpose {
                (cost[0].len(), cost.len())
            } else {
                (cost.len(), cost[0].len())
            };
            if i == rows {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cols {
                if !used[j] {
                    used[j] = true;
                    let c = if transpose { cost[j][i] } else { cost[i][j] };
                    best = best.min(c + go(cost, i + 1, used, transpose));
                    used[j] = false;
                }
            }
            best
        }
        if rows <= cols {
            go(cost, 0, &mut vec![false; cols], false)
        } else {
            go(cost, 0, &mut vec![false; rows], true)
        }
    }

    #[test]
    fn two_by_two_prefers_diagonal() {
        let c = vec![vec![0.1, 0.2], vec![0.2, 0.1]];
        assert_eq!(hungarian(&c), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn empty_and_rectangular() {
        assert!(hungarian(&[]).is_empty());
        assert!(hungarian(&[vec![], vec![]]).is_empty());
        let tall = vec![vec![5.0], vec![1.0], vec![3.0]];
        assert_eq!(hungarian(&tall), vec![(1, 0)]);
        let wide = vec![vec![5.0, 1.0, 3.0]];
        assert_eq!(hungarian(&wide), vec![(0, 1)]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in prop::collection::vec(0u32..1000, 25),
        ) {
            let cost: Vec<Vec<f64>> = (0..rows)
                .map(|i| (0..cols).map(|j| seed[i * 5 + j] as f64 / 1000.0).collect())
                .collect();
            let pairs = hungarian(&cost);
            prop_assert_eq!(pairs.len(), rows.min(cols));
            let mut seen_r = std::collections::HashSet::new();
            let mut seen_c = std::collections::HashSet::new();
            for &(i, j) in &pairs {
                prop_assert!(seen_r.insert(i) && seen_c.insert(j));
            }
            prop_assert!((total(&cost, &pairs) - brute(&cost)).abs() < 1e-9);
        }
    }
}
