//! Tree-level cohomological field theories: potentials, the associativity
//! equations, strata integrals, class reconstruction and tensor products,
//! rank-one theories and the volume recursions.

mod omega;
mod p1;
mod rank_one;
mod strata;
mod tensor;
mod wp;

pub use omega::{a_coefficients, omega_recursion, ACoefficients, AOrbit};
pub use p1::{
    compare_p1xp1, extract_p1xp1_degrees, p1_potential, p1xp1_recursion, p1xp1_series_potential, NTable,
    P1xP1Comparison,
};
pub use rank_one::{RankOneJson, RankOneTheory};
pub use strata::{reconstruct_classes, strata_integral, strata_integrals};
pub use tensor::tensor_potential;
pub use wp::{matone_check, matone_check_with, wp_volumes, MatoneReport};

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::LinearSolver;
use crate::rational::{binomial, format_q, parse_q, Q};

/// Exponent vector of a monomial in the coordinates of `H`.
pub type Exponents = Vec<u32>;

/// A nondegenerate symmetric even scalar product on `H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metric {
    gram: Vec<Vec<Q>>,
    inverse: Vec<Vec<Q>>,
    parities: Vec<bool>,
}

impl Metric {
    pub fn new(gram: Vec<Vec<Q>>, parities: Vec<bool>) -> Result<Self> {
        let r = gram.len();
        if r == 0 || gram.iter().any(|row| row.len() != r) || parities.len() != r {
            return Err(Error::Precondition("gram matrix must be square and match the parities".into()));
        }
        for a in 0..r {
            for b in 0..r {
                if gram[a][b] != gram[b][a] {
                    return Err(Error::Precondition("gram matrix is not symmetric".into()));
                }
                if !gram[a][b].is_zero() && parities[a] != parities[b] {
                    return Err(Error::Precondition("metric pairs vectors of different parity".into()));
                }
            }
        }
        let solver = LinearSolver::new(&gram, r);
        if solver.rank() < r {
            return Err(Error::Precondition("gram matrix is singular".into()));
        }
        let mut cols = Vec::with_capacity(r);
        for j in 0..r {
            let e: Vec<Q> = (0..r).map(|i| if i == j { Q::one() } else { Q::zero() }).collect();
            cols.push(solver.solve(&e)?.x);
        }
        let inverse = (0..r).map(|i| (0..r).map(|j| cols[j][i].clone()).collect()).collect();
        Ok(Metric { gram, inverse, parities })
    }

    /// All vectors even.
    pub fn even(gram: Vec<Vec<Q>>) -> Result<Self> {
        let r = gram.len();
        Self::new(gram, vec![false; r])
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<Q>] {
        &self.gram
    }

    pub fn inverse(&self) -> &[Vec<Q>] {
        &self.inverse
    }

    pub fn parities(&self) -> &[bool] {
        &self.parities
    }

    /// Nonzero entries `g^{ef}` of the inverse: the Casimir element.
    pub fn casimir(&self) -> Vec<(usize, usize, Q)> {
        let mut out = Vec::new();
        for (e, row) in self.inverse.iter().enumerate() {
            for (f, x) in row.iter().enumerate() {
                if !x.is_zero() {
                    out.push((e, f, x.clone()));
                }
            }
        }
        out
    }

    /// `g' (x) g''` on `H' (x) H''`, basis `(i, j)` at index `i * r'' + j`.
    pub fn tensor(&self, other: &Metric) -> Metric {
        let (r1, r2) = (self.rank(), other.rank());
        let idx = |i: usize, j: usize| i * r2 + j;
        let n = r1 * r2;
        let mut gram = vec![vec![Q::zero(); n]; n];
        let mut inverse = vec![vec![Q::zero(); n]; n];
        let mut parities = vec![false; n];
        for a in 0..r1 {
            for b in 0..r2 {
                parities[idx(a, b)] = self.parities[a] ^ other.parities[b];
                for c in 0..r1 {
                    for d in 0..r2 {
                        gram[idx(a, b)][idx(c, d)] = &self.gram[a][c] * &other.gram[b][d];
                        inverse[idx(a, b)][idx(c, d)] = &self.inverse[a][c] * &other.inverse[b][d];
                    }
                }
            }
        }
        Metric { gram, inverse, parities }
    }
}

/// Exponent vector of a list of basis indices.
pub fn exponents_of(rank: usize, indices: &[usize]) -> Exponents {
    let mut e = vec![0; rank];
    for &i in indices {
        e[i] += 1;
    }
    e
}

/// Basis indices of an exponent vector, in increasing order.
pub fn indices_of(exps: &[u32]) -> Vec<usize> {
    exps.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect()
}

/// All exponent vectors of length `rank` and total degree `deg`.
pub fn exponent_vectors(rank: usize, deg: u32) -> Vec<Exponents> {
    fn rec(rank: usize, deg: u32, cur: &mut Exponents, out: &mut Vec<Exponents>) {
        if cur.len() + 1 == rank {
            cur.push(deg);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=deg).rev() {
            cur.push(k);
            rec(rank, deg - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if rank > 0 {
        rec(rank, deg, &mut Vec::new(), &mut out);
    }
    out
}

/// A potential truncated at total degree `order`, stored through its
/// correlators: `Phi = sum Y(e) x^e / e!` over exponent vectors `e` with
/// `3 <= |e| <= order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Potential {
    metric: Metric,
    order: usize,
    coeffs: BTreeMap<Exponents, Q>,
}

impl Potential {
    pub fn new(metric: Metric, order: usize) -> Self {
        Potential { metric, order, coeffs: BTreeMap::new() }
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn rank(&self) -> usize {
        self.metric.rank()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Nonzero correlators in exponent order.
    pub fn terms(&self) -> &BTreeMap<Exponents, Q> {
        &self.coeffs
    }

    pub fn set(&mut self, exps: Exponents, y: Q) -> Result<()> {
        if exps.len() != self.rank() {
            return Err(Error::Precondition(format!("multi-index of length {} for rank {}", exps.len(), self.rank())));
        }
        let deg: u32 = exps.iter().sum();
        if deg < 3 || deg as usize > self.order {
            return Err(Error::Degree(format!("degree {deg} outside 3..={}", self.order)));
        }
        if exps.iter().zip(self.metric.parities()).any(|(&k, &odd)| odd && k > 1) {
            return Err(Error::Precondition("odd coordinates square to zero".into()));
        }
        if y.is_zero() {
            self.coeffs.remove(&exps);
        } else {
            self.coeffs.insert(exps, y);
        }
        Ok(())
    }

    /// The correlator `Y(e)`; zero below degree 3.
    pub fn y(&self, exps: &[u32]) -> Q {
        self.coeffs.get(exps).cloned().unwrap_or_else(Q::zero)
    }

    /// `Y_n(g_{i_1}, ..., g_{i_n})`, failing beyond the truncation order.
    pub fn y_indices(&self, indices: &[usize]) -> Result<Q> {
        if indices.len() > self.order {
            return Err(Error::Degree(format!("correlator of length {} beyond order {}", indices.len(), self.order)));
        }
        if indices.iter().any(|&i| i >= self.rank()) {
            return Err(Error::Precondition("basis index out of range".into()));
        }
        Ok(self.y(&exponents_of(self.rank(), indices)))
    }

    /// The same series cut at a lower order.
    pub fn truncate(&self, order: usize) -> Potential {
        Potential {
            metric: self.metric.clone(),
            order: order.min(self.order),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() as usize <= order)
                .map(|(e, y)| (e.clone(), y.clone()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> PotentialJson {
        PotentialJson {
            rank: self.rank(),
            parities: self.metric.parities.clone(),
            gram: self.metric.gram.iter().map(|r| r.iter().map(format_q).collect()).collect(),
            terms: self
                .coeffs
                .iter()
                .map(|(e, y)| PotentialTerm { multi_index: e.clone(), coeff: format_q(y) })
                .collect(),
            order: self.order,
        }
    }

    pub fn from_json(j: &PotentialJson) -> Result<Self> {
        if j.gram.len() != j.rank {
            return Err(Error::Parse("gram size does not match rank".into()));
        }
        let gram = j
            .gram
            .iter()
            .map(|row| row.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>())
            .collect::<Result<Vec<_>>>()?;
        let metric = Metric::new(gram, j.parities.clone())?;
        let mut p = Potential::new(metric, j.order);
        for t in &j.terms {
            let y = parse_q(&t.coeff)?;
            if p.coeffs.contains_key(&t.multi_index) {
                return Err(Error::Parse("repeated multi-index".into()));
            }
            p.set(t.multi_index.clone(), y)?;
        }
        Ok(p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: PotentialJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&j)
    }
}

/// Serialized potential. Each term gives an exponent vector and its correlator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialJson {
    pub rank: usize,
    pub parities: Vec<bool>,
    pub gram: Vec<Vec<String>>,
    pub terms: Vec<PotentialTerm>,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub multi_index: Exponents,
    pub coeff: String,
}

/// Where the associativity equations first fail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WdvvFailure {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    /// Coefficient of `x^beta / beta!` at which the two sides differ.
    pub beta: Exponents,
    pub lhs: Q,
    pub rhs: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WdvvReport {
    pub checked: usize,
    pub failure: Option<WdvvFailure>,
}

impl WdvvReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Sign picked up moving odd `a` past `b` and `c`.
pub fn wdvv_sign(parities: &[bool], a: usize, b: usize, c: usize) -> i32 {
    if parities[a] && (parities[b] ^ parities[c]) {
        -1
    } else {
        1
    }
}

fn add_exps(a: &[u32], idx: &[usize]) -> Exponents {
    let mut e = a.to_vec();
    for &i in idx {
        e[i] += 1;
    }
    e
}

/// `sum_{e,f} Phi_{a b e} g^{ef} Phi_{f c d}` at `x^beta / beta!`.
fn wdvv_side(
    phi: &Potential,
    cas: &[(usize, usize, Q)],
    splits: &[(Exponents, Exponents, Q)],
    a: usize,
    b: usize,
    c: usize,
    d: usize,
) -> Q {
    let mut total = Q::zero();
    for (e, f, g) in cas {
        for (b1, b2, w) in splits {
            let y1 = phi.y(&add_exps(b1, &[a, b, *e]));
            if y1.is_zero() {
                continue;
            }
            let y2 = phi.y(&add_exps(b2, &[*f, c, d]));
            if !y2.is_zero() {
                total += w * g * y1 * y2;
            }
        }
    }
    total
}

fn splittings(beta: &[u32]) -> Vec<(Exponents, Exponents, Q)> {
    let mut out = vec![(Vec::new(), Vec::new(), Q::one())];
    for &k in beta {
        let mut next = Vec::new();
        for (b1, b2, w) in &out {
            for j in 0..=k {
                let mut x1 = b1.clone();
                let mut x2 = b2.clone();
                x1.push(j);
                x2.push(k - j);
                next.push((x1, x2, w * Q::from_integer(binomial(k as i64, j as i64))));
            }
        }
        out = next;
    }
    out
}

/// Checks the associativity equations for every quadruple of basis indices
/// at every coefficient `x^beta` with `|beta| <= order - 3`; these involve
/// exactly the correlators of degree at most `order`.
pub fn wdvv_check(phi: &Potential, order: usize) -> Result<WdvvReport> {
    if order > phi.order() {
        return Err(Error::Degree(format!("order {order} beyond truncation {}", phi.order())));
    }
    let r = phi.rank();
    let cas = phi.metric().casimir();
    let par = phi.metric().parities().to_vec();
    let mut checked = 0;
    for deg in 0..=order.saturating_sub(3) as u32 {
        for beta in exponent_vectors(r, deg) {
            let splits = splittings(&beta);
            for a in 0..r {
                for b in 0..r {
                    for c in 0..r {
                        for d in 0..r {
                            checked += 1;
                            let lhs = wdvv_side(phi, &cas, &splits, a, b, c, d);
                            let rhs = wdvv_side(phi, &cas, &splits, b, c, a, d)
                                * Q::from_integer(wdvv_sign(&par, a, b, c).into());
                            if lhs != rhs {
                                return Ok(WdvvReport {
                                    checked,
                                    failure: Some(WdvvFailure { a, b, c, d, beta, lhs, rhs }),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(WdvvReport { checked, failure: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn metric_inverse_and_tensor() {
        let g = Metric::even(vec![vec![q(0), q(1)], vec![q(1), q(0)]]).unwrap();
        assert_eq!(g.inverse(), g.gram());
        let t = g.tensor(&g);
        assert_eq!(t.rank(), 4);
        assert_eq!(t.gram()[0][3], q(1));
        assert_eq!(t.gram()[1][2], q(1));
        assert!(Metric::even(vec![vec![q(1), q(1)], vec![q(1), q(1)]]).is_err());
        assert!(Metric::new(vec![vec![q(0), q(1)], vec![q(1), q(0)]], vec![false, true]).is_err());
    }

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponent_vectors(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(exponent_vectors(3, 3).len(), 10);
        assert_eq!(indices_of(&[2, 0, 1]), vec![0, 0, 2]);
    }

    #[test]
    fn cubic_algebra_potential() {
        // Q[e]/(e^2 - e) with unit 1: structure constants of an associative algebra
        let g = Metric::even(vec![vec![q(1), q(0)], vec![q(0), q(1)]]).unwrap();
        let mut phi = Potential::new(g, 3);
        phi.set(vec![3, 0], q(1)).unwrap();
        phi.set(vec![0, 3], q(1)).unwrap();
        assert!(wdvv_check(&phi, 3).unwrap().passed());
        // a non-associative cubic fails
        let g = Metric::even(vec![vec![q(1), q(0)], vec![q(0), q(1)]]).unwrap();
        let mut bad = Potential::new(g, 3);
        bad.set(vec![2, 1], q(1)).unwrap();
        assert!(!wdvv_check(&bad, 3).unwrap().passed());
    }

    #[test]
    fn odd_sign_bookkeeping() {
        let par = [false, true, true];
        assert_eq!(wdvv_sign(&par, 1, 1, 0), -1);
        assert_eq!(wdvv_sign(&par, 1, 1, 2), 1);
        assert_eq!(wdvv_sign(&par, 0, 1, 2), 1);
        let g = Metric::new(vec![vec![q(1), q(0), q(0)], vec![q(0), q(0), q(1)], vec![q(0), q(1), q(0)]], par.to_vec())
            .unwrap();
        let mut phi = Potential::new(g, 4);
        assert!(phi.set(vec![1, 2, 0], q(1)).is_err());
        phi.set(vec![1, 1, 1], q(1)).unwrap();
    }

    #[test]
    fn json_round_trip() {
        let phi = p1_potential(6).unwrap();
        let back = Potential::from_json_str(&phi.to_json_string()).unwrap();
        assert_eq!(back, phi);
        assert!(
            Potential::from_json_str(r#"{"rank":1,"parities":[false],"gram":[["0"]],"terms":[],"order":4}"#).is_err()
        );
        assert!(Potential::from_json_str(
            r#"{"rank":1,"parities":[false],"gram":[["1"]],"terms":[{"multi_index":[2],"coeff":"1"}],"order":4}"#
        )
        .is_err());
    }
}
