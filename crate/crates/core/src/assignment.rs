//! Global UE-to-MEC assignment by minimum-weight bipartite matching.
//!
//! Offline verification oracle for the decentralized policies: given an
//! estimated delay for every (UE, MEC) pair and per-MEC capacities in UE
//! slots, finds the assignment minimizing total delay. Capacitated MECs are
//! expanded into one column per slot and solved with the O(n^2 m) Hungarian
//! algorithm with row/column potentials.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// MEC chosen for each UE, indexed by UE.
    pub mec_of_ue: Vec<usize>,
    pub total_cost: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum AssignmentError {
    #[error("total capacity {capacity} is below the number of UEs {ues}")]
    Infeasible { ues: usize, capacity: usize },
    #[error("delay matrix row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("delay matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
}

/// Hungarian algorithm on a rectangular `n x m` cost matrix with `n <= m`.
/// Returns the column matched to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    debug_assert!(n <= m);

    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
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
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=m {
        if row_of_col[j] != 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Minimum-total-delay assignment of UEs (rows) to MECs (columns), each MEC
/// taking at most `capacities[m]` UEs.
pub fn oracle_assign(delay: &[Vec<f64>], capacities: &[usize]) -> Result<Assignment, AssignmentError> {
    let n_ues = delay.len();
    let n_mecs = capacities.len();
    for (row, r) in delay.iter().enumerate() {
        if r.len() != n_mecs {
            return Err(AssignmentError::Ragged {
                row,
                got: r.len(),
                expected: n_mecs,
            });
        }
        if let Some(col) = r.iter().position(|c| !c.is_finite()) {
            return Err(AssignmentError::NonFinite { row, col });
        }
    }
    if n_ues == 0 {
        return Ok(Assignment {
            mec_of_ue: Vec::new(),
            total_cost: 0.0,
        });
    }
    // A MEC never needs more slots than there are UEs.
    let slots: Vec<usize> = capacities
        .iter()
        .enumerate()
        .flat_map(|(m, &c)| std::iter::repeat_n(m, c.min(n_ues)))
        .collect();
    if slots.len() < n_ues {
        return Err(AssignmentError::Infeasible {
            ues: n_ues,
            capacity: capacities.iter().sum(),
        });
    }
    let expanded: Vec<Vec<f64>> = delay
        .iter()
        .map(|row| slots.iter().map(|&m| row[m]).collect())
        .collect();
    let cols = hungarian(&expanded);
    let mec_of_ue: Vec<usize> = cols.iter().map(|&c| slots[c]).collect();
    let total_cost = mec_of_ue.iter().enumerate().map(|(u, &m)| delay[u][m]).sum();
    Ok(Assignment {
        mec_of_ue,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_ue_picks_cheapest() {
        let a = oracle_assign(&[vec![5.0, 3.0]], &[1, 1]).unwrap();
        assert_eq!(a.mec_of_ue, vec![1]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn three_by_three_matches_permutations() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| p.iter().enumerate().map(|(r, &k)| c[r][k]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let a = oracle_assign(&c, &[1, 1, 1]).unwrap();
        assert_eq!(a.total_cost, best);
    }

    #[test]
    fn identical_rows() {
        let row = vec![7.0, 2.0, 9.0, 4.0];
        let c = vec![row.clone(); 3];
        let a = oracle_assign(&c, &[3, 3, 3, 3]).unwrap();
        assert_eq!(a.total_cost, 3.0 * 2.0);
        let a = oracle_assign(&c, &[1, 1, 1, 1]).unwrap();
        assert_eq!(a.total_cost, 2.0 + 4.0 + 7.0);
    }

    #[test]
    fn capacity_limits_sharing() {
        let c = vec![vec![1.0, 10.0], vec![1.0, 10.0], vec![1.0, 10.0]];
        let a = oracle_assign(&c, &[2, 5]).unwrap();
        assert_eq!(a.total_cost, 12.0);
        assert_eq!(a.mec_of_ue.iter().filter(|&&m| m == 0).count(), 2);
    }

    #[test]
    fn infeasible_and_malformed() {
        let c = vec![vec![1.0], vec![2.0]];
        assert_eq!(
            oracle_assign(&c, &[1]),
            Err(AssignmentError::Infeasible { ues: 2, capacity: 1 })
        );
        assert!(matches!(
            oracle_assign(&[vec![1.0, f64::NAN]], &[1, 1]),
            Err(AssignmentError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            oracle_assign(&[vec![1.0]], &[1, 1]),
            Err(AssignmentError::Ragged { .. })
        ));
    }
}
