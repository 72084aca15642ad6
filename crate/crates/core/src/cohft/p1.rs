//! The projective line and the quadric `P1 x P1`.
//!
//! Coordinates on `H*(P1 x P1)`, in the tensor-square basis order:
//! `x` (unit), `y2` (`1 (x) pt`), `y1` (`pt (x) 1`), `z` (point class).
//! The quantum part of the quadric's potential is
//! `sum N(a, b) z^{2a+2b-1} / (2a+2b-1)! * exp(a y1 + b y2)`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::{exponent_vectors, Exponents, Metric, Potential};
use crate::error::{Error, Result};
use crate::linalg::LinearSolver;
use crate::rational::{factorial, pow_q, q, Q};

/// `x^2 z / 2 + e^z - 1 - z - z^2/2` through total degree `order`.
pub fn p1_potential(order: usize) -> Result<Potential> {
    let g = Metric::even(vec![vec![q(0), q(1)], vec![q(1), q(0)]])?;
    let mut phi = Potential::new(g, order.max(3));
    phi.set(vec![2, 1], q(1))?;
    for k in 3..=order as u32 {
        phi.set(vec![0, k], q(1))?;
    }
    Ok(phi)
}

/// Invariants `N(a, b)` keyed by bidegree.
pub type NTable = BTreeMap<(u32, u32), Q>;

// internal variable order: x, y1, y2, z
const X: usize = 0;
const Y1: usize = 1;
const Y2: usize = 2;
const Z: usize = 3;

fn classical(i: usize, j: usize, k: usize) -> Q {
    let mut v = [i, j, k];
    v.sort_unstable();
    match v {
        [X, X, Z] | [X, Y1, Y2] => Q::one(),
        _ => Q::zero(),
    }
}

/// Polynomial in `z`: coefficient of `z^k` at index `k`.
type ZPoly = Vec<Q>;

fn zpoly_mul_add(acc: &mut ZPoly, a: &ZPoly, b: &ZPoly, w: &Q) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    if acc.len() < a.len() + b.len() - 1 {
        acc.resize(a.len() + b.len() - 1, Q::zero());
    }
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            acc[i + j] += w * x * y;
        }
    }
}

/// Component of `Phi_{ijk}` at `q1^a q2^b`.
fn third_derivative(table: &NTable, idx: [usize; 3], a: u32, b: u32) -> ZPoly {
    if a == 0 && b == 0 {
        return vec![classical(idx[0], idx[1], idx[2])];
    }
    if idx.contains(&X) {
        return Vec::new();
    }
    let Some(n) = table.get(&(a, b)) else { return Vec::new() };
    let d = 2 * (a + b) - 1;
    let s = idx.iter().filter(|&&i| i == Z).count() as u32;
    if s > d {
        return Vec::new();
    }
    let p = idx.iter().filter(|&&i| i == Y1).count() as u32;
    let r = idx.iter().filter(|&&i| i == Y2).count() as u32;
    let c = n * pow_q(&q(a as i64), p) * pow_q(&q(b as i64), r);
    let k = (d - s) as usize;
    let mut out = vec![Q::zero(); k + 1];
    out[k] = c / Q::from_integer(factorial(k as u64));
    out
}

/// Inverse metric: `x <-> z`, `y1 <-> y2`.
fn partner(e: usize) -> usize {
    3 - e
}

/// `sum_e Phi_{ije} Phi_{e' kl}` at `q1^a q2^b` (`e'` the metric partner).
fn side(table: &NTable, i: usize, j: usize, k: usize, l: usize, a: u32, b: u32) -> ZPoly {
    let mut acc = ZPoly::new();
    for e in 0..4 {
        for a1 in 0..=a {
            for b1 in 0..=b {
                let left = third_derivative(table, [i, j, e], a1, b1);
                let right = third_derivative(table, [partner(e), k, l], a - a1, b - b1);
                zpoly_mul_add(&mut acc, &left, &right, &Q::one());
            }
        }
    }
    acc
}

/// All residuals `(ij|kl) - (jk|il)` at bidegree `(a, b)`.
fn residuals(table: &NTable, a: u32, b: u32) -> Vec<Q> {
    let mut out = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut lhs = side(table, i, j, k, l, a, b);
                    let rhs = side(table, j, k, i, l, a, b);
                    if lhs.len() < rhs.len() {
                        lhs.resize(rhs.len(), Q::zero());
                    }
                    for (t, x) in rhs.into_iter().enumerate() {
                        lhs[t] -= x;
                    }
                    out.extend(lhs);
                }
            }
        }
    }
    out
}

/// `N(a, b)` for `a + b <= max_degree`, solved from the associativity
/// equations bidegree by bidegree starting from `N(1,0) = N(0,1) = 1`.
pub fn p1xp1_recursion(max_degree: u32) -> Result<NTable> {
    let mut table = NTable::new();
    table.insert((1, 0), q(1));
    table.insert((0, 1), q(1));
    for (a, b) in [(1, 0), (0, 1)] {
        if residuals(&table, a, b).iter().any(|r| !r.is_zero()) {
            return Err(Error::Inconsistent("seeds violate the associativity equations".into()));
        }
    }
    for deg in 2..=max_degree {
        for a in 0..=deg {
            let b = deg - a;
            table.insert((a, b), Q::zero());
            let r0 = residuals(&table, a, b);
            table.insert((a, b), Q::one());
            let r1 = residuals(&table, a, b);
            let mut value: Option<Q> = None;
            for (x0, x1) in r0.iter().zip(&r1) {
                let slope = x1 - x0;
                if slope.is_zero() {
                    if !x0.is_zero() {
                        return Err(Error::Inconsistent(format!("N({a},{b}) cannot satisfy every equation")));
                    }
                    continue;
                }
                let v = -x0 / slope;
                match &value {
                    None => value = Some(v),
                    Some(w) if *w != v => {
                        return Err(Error::Inconsistent(format!("N({a},{b}) is overdetermined: {w} vs {v}")));
                    }
                    _ => {}
                }
            }
            let v = value.ok_or_else(|| Error::Inconsistent(format!("N({a},{b}) is not determined")))?;
            table.insert((a, b), v);
        }
    }
    Ok(table)
}

/// Tensor-basis exponent vector for `x^e0 y1^p y2^r z^d`.
fn tensor_exps(e0: u32, p: u32, r: u32, d: u32) -> Exponents {
    vec![e0, r, p, d]
}

/// The quadric's potential built from an `N` table, through total degree `order`.
pub fn p1xp1_series_potential(table: &NTable, order: usize) -> Result<Potential> {
    let g = Metric::even(vec![vec![q(0), q(1)], vec![q(1), q(0)]])?;
    let metric = g.tensor(&g);
    let mut phi = Potential::new(metric, order);
    phi.set(tensor_exps(2, 0, 0, 1), q(1))?;
    phi.set(tensor_exps(1, 1, 1, 0), q(1))?;
    for n in 3..=order as u32 {
        for e in exponent_vectors(4, n) {
            let (e0, r, p, d) = (e[0], e[1], e[2], e[3]);
            if e0 > 0 || d % 2 == 0 {
                continue;
            }
            let deg = d.div_ceil(2);
            let mut y = Q::zero();
            for a in 0..=deg {
                if let Some(nv) = table.get(&(a, deg - a)) {
                    y += nv * pow_q(&q(a as i64), p) * pow_q(&q((deg - a) as i64), r);
                }
            }
            if !y.is_zero() {
                phi.set(e, y)?;
            }
        }
    }
    Ok(phi)
}

/// `N(a, b)` read off a rank-4 potential for every degree `a + b` whose
/// correlators through `order` determine them.
pub fn extract_p1xp1_degrees(phi: &Potential, order: usize) -> Result<NTable> {
    let mut out = NTable::new();
    for deg in 1..=(order as u32).div_ceil(2) {
        let d = 2 * deg - 1;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for extra in 0..=(order as u32).saturating_sub(d) {
            if d + extra < 3 {
                continue;
            }
            for p in 0..=extra {
                let r = extra - p;
                rows.push(
                    (0..=deg).map(|a| pow_q(&q(a as i64), p) * pow_q(&q((deg - a) as i64), r)).collect::<Vec<_>>(),
                );
                rhs.push(phi.y(&tensor_exps(0, p, r, d)));
            }
        }
        if rows.is_empty() {
            continue;
        }
        let solver = LinearSolver::new(&rows, (deg + 1) as usize);
        let sol = solver
            .solve(&rhs)
            .map_err(|e| Error::Inconsistent(format!("correlators of degree {deg} fit no N table: {e}")))?;
        if sol.kernel_dim > 0 {
            continue;
        }
        for (a, v) in sol.x.into_iter().enumerate() {
            out.insert((a as u32, deg - a as u32), v);
        }
    }
    Ok(out)
}

/// Outcome of comparing a computed quadric potential with the recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct P1xP1Comparison {
    pub classical_terms_ok: bool,
    /// Correlators where the two potentials differ: `(multi-index, expected, found)`.
    pub mismatches: Vec<(Exponents, Q, Q)>,
    pub extracted: NTable,
    pub recursion: NTable,
    /// Extracted values disagreeing with the recursion.
    pub disagreements: Vec<(u32, u32)>,
}

impl P1xP1Comparison {
    pub fn passed(&self) -> bool {
        self.classical_terms_ok && self.mismatches.is_empty() && self.disagreements.is_empty()
    }
}

pub fn compare_p1xp1(phi: &Potential, order: usize) -> Result<P1xP1Comparison> {
    if phi.rank() != 4 {
        return Err(Error::Precondition("expected a rank-4 potential".into()));
    }
    let recursion = p1xp1_recursion((order as u32).div_ceil(2))?;
    let expected = p1xp1_series_potential(&recursion, order)?;
    let classical_terms_ok = phi.y(&tensor_exps(2, 0, 0, 1)) == q(1) && phi.y(&tensor_exps(1, 1, 1, 0)) == q(1);
    let mut keys: Vec<&Exponents> = expected.terms().keys().chain(phi.terms().keys()).collect();
    keys.sort();
    keys.dedup();
    let mismatches = keys
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() as usize <= order)
        .filter_map(|e| {
            let (x, y) = (expected.y(e), phi.y(e));
            (x != y).then(|| (e.clone(), x, y))
        })
        .collect();
    let extracted = extract_p1xp1_degrees(phi, order)?;
    let rec: HashMap<_, _> = recursion.iter().collect();
    let disagreements =
        extracted.iter().filter(|(k, v)| rec.get(k).map_or(!v.is_zero(), |w| *w != *v)).map(|(k, _)| *k).collect();
    Ok(P1xP1Comparison { classical_terms_ok, mismatches, extracted, recursion, disagreements })
}

#[cfg(test)]
mod tests {
    use super::super::wdvv_check;
    use super::*;

    #[test]
    fn p1_is_associative() {
        let phi = p1_potential(10).unwrap();
        assert!(wdvv_check(&phi, 10).unwrap().passed());
        assert_eq!(phi.y_indices(&[0, 0, 1]).unwrap(), q(1));
        assert_eq!(phi.y_indices(&[1; 7]).unwrap(), q(1));
    }

    #[test]
    fn known_quadric_invariants() {
        let t = p1xp1_recursion(4).unwrap();
        assert_eq!(t[&(1, 1)], q(1));
        assert_eq!(t[&(2, 0)], q(0));
        assert_eq!(t[&(2, 1)], q(1));
        assert_eq!(t[&(1, 2)], q(1));
        assert_eq!(t[&(2, 2)], q(12));
    }

    #[test]
    fn series_potential_is_associative() {
        let t = p1xp1_recursion(4).unwrap();
        let phi = p1xp1_series_potential(&t, 8).unwrap();
        assert!(wdvv_check(&phi, 8).unwrap().passed());
        let mut bad = phi.clone();
        bad.set(vec![0, 1, 1, 3], q(7)).unwrap();
        assert!(!wdvv_check(&bad, 8).unwrap().passed());
        let back = extract_p1xp1_degrees(&phi, 8).unwrap();
        for (k, v) in &back {
            assert_eq!(&t[k], v);
        }
        assert!(back.contains_key(&(2, 1)));
    }
}
