//! Exact linear algebra over `Q` and `Z`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Q;

pub type SparseVec = BTreeMap<usize, Q>;

/// Row-echelon basis of a subspace of `Q^N`, grown one vector at a time.
///
/// Each stored row has leading entry 1 at its pivot column and zeros in
/// every earlier column, so reducing a vector by increasing pivot column
/// yields the unique representative with zeros in all pivot columns.
#[derive(Clone, Debug, Default)]
pub struct SparseEchelon {
    rows: HashMap<usize, Vec<(usize, Q)>>,
}

impl SparseEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.rows.contains_key(&col)
    }

    /// Reduces `v` modulo the span in place.
    pub fn reduce(&self, v: &mut SparseVec) {
        let mut cursor = 0;
        while let Some((&k, c)) = v.range(cursor..).next() {
            match self.rows.get(&k) {
                Some(row) => {
                    let c = c.clone();
                    for (j, a) in row {
                        let e = v.entry(*j).or_insert_with(Q::zero);
                        *e -= &c * a;
                        if e.is_zero() {
                            v.remove(j);
                        }
                    }
                }
                None => cursor = k + 1,
            }
        }
    }

    /// Adds a vector; returns whether the rank grew.
    pub fn insert(&mut self, mut v: SparseVec) -> bool {
        self.reduce(&mut v);
        let Some((&p, lead)) = v.iter().next() else { return false };
        let inv = Q::one() / lead;
        let row: Vec<(usize, Q)> = v.into_iter().map(|(j, a)| (j, a * &inv)).collect();
        self.rows.insert(p, row);
        true
    }
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn rank_int(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        for r in rank + 1..rows {
            if m[r][c].is_zero() {
                // still has to be rescaled to stay fraction-free
                for j in c + 1..cols {
                    let v = &m[r][j] * &m[rank][c];
                    m[r][j] = v / &prev;
                }
                continue;
            }
            for j in c + 1..cols {
                let v = &m[r][j] * &m[rank][c] - &m[r][c] * &m[rank][j];
                m[r][j] = v / &prev;
            }
            m[r][c] = BigInt::zero();
        }
        prev = m[rank][c].clone();
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Rank of a rational matrix (rows cleared of denominators, then Bareiss).
pub fn rank_q(m: &[Vec<Q>]) -> usize {
    let ints = m
        .iter()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    rank_int(ints)
}

/// A factored linear system `A x = b` (A is `m x k`), reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    cols: usize,
    /// `transform * A = reduced`, with `reduced` in reduced row-echelon form.
    transform: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

/// A particular solution together with the dimension of the solution kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub x: Vec<Q>,
    pub kernel_dim: usize,
}

impl LinearSolver {
    #[allow(clippy::needless_range_loop)]
    pub fn new(a: &[Vec<Q>], cols: usize) -> Self {
        let m = a.len();
        let mut r: Vec<Vec<Q>> = a.to_vec();
        let mut t: Vec<Vec<Q>> =
            (0..m).map(|i| (0..m).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for c in 0..cols {
            if row == m {
                break;
            }
            let Some(p) = (row..m).find(|&i| !r[i][c].is_zero()) else { continue };
            r.swap(row, p);
            t.swap(row, p);
            let inv = Q::one() / &r[row][c];
            for x in r[row].iter_mut() {
                *x *= &inv;
            }
            for x in t[row].iter_mut() {
                *x *= &inv;
            }
            for i in 0..m {
                if i == row || r[i][c].is_zero() {
                    continue;
                }
                let f = r[i][c].clone();
                for j in 0..cols {
                    if !r[row][j].is_zero() {
                        let d = &f * &r[row][j];
                        r[i][j] -= d;
                    }
                }
                for j in 0..m {
                    if !t[row][j].is_zero() {
                        let d = &f * &t[row][j];
                        t[i][j] -= d;
                    }
                }
            }
            pivots.push(c);
            row += 1;
        }
        LinearSolver { cols, transform: t, pivots }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Solves `A x = b`, free variables set to zero.
    pub fn solve(&self, b: &[Q]) -> Result<Solution> {
        let m = self.transform.len();
        if b.len() != m {
            return Err(Error::Precondition("right-hand side has the wrong length".into()));
        }
        let c: Vec<Q> = self
            .transform
            .iter()
            .map(|row| row.iter().zip(b).filter(|(t, _)| !t.is_zero()).map(|(t, y)| t * y).sum())
            .collect();
        if let Some(i) = (self.rank()..m).find(|&i| !c[i].is_zero()) {
            return Err(Error::Inconsistent(format!("residual {} in equation {i}", c[i])));
        }
        let mut x = vec![Q::zero(); self.cols];
        for (i, &p) in self.pivots.iter().enumerate() {
            x[p] = c[i].clone();
        }
        Ok(Solution { x, kernel_dim: self.cols - self.rank() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn sv(entries: &[(usize, i64)]) -> SparseVec {
        entries.iter().map(|&(i, c)| (i, q(c))).collect()
    }

    #[test]
    fn echelon_remainders_are_canonical() {
        let mut e = SparseEchelon::new();
        assert!(e.insert(sv(&[(0, 1), (1, -1)])));
        assert!(e.insert(sv(&[(1, 1), (2, -1)])));
        assert!(!e.insert(sv(&[(0, 1), (2, -1)])));
        assert_eq!(e.rank(), 2);
        // e0, e1, e2 are all equivalent modulo the span
        for i in 0..3 {
            let mut v = sv(&[(i, 3)]);
            e.reduce(&mut v);
            assert_eq!(v, sv(&[(2, 3)]));
        }
    }

    #[test]
    fn bareiss_rank() {
        let m = |rows: &[&[i64]]| rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
        assert_eq!(rank_int(m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank_int(m(&[&[0, 1, 1], &[1, 0, 1], &[1, 1, 0]])), 3);
        assert_eq!(rank_int(m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank_int(m(&[&[0, 2, 4], &[0, 1, 2], &[3, 0, 0]])), 2);
    }

    #[test]
    fn solver_consistency() {
        let a = vec![vec![q(1), q(1)], vec![q(2), q(2)], vec![q(1), q(-1)]];
        let s = LinearSolver::new(&a, 2);
        assert_eq!(s.rank(), 2);
        let sol = s.solve(&[q(3), q(6), q(1)]).unwrap();
        assert_eq!(sol.x, vec![q(2), q(1)]);
        assert!(matches!(s.solve(&[q(3), q(5), q(1)]), Err(Error::Inconsistent(_))));
        let under = LinearSolver::new(&[vec![q(1), q(1)]], 2);
        let sol = under.solve(&[q(4)]).unwrap();
        assert_eq!((sol.x, sol.kernel_dim), (vec![q(4), q(0)], 1));
    }
}
