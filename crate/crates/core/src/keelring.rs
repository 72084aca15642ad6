//! The ring `H*_S = F_S / I_S` in the good-monomial basis.
//!
//! Good monomials span every graded piece but are not independent; the
//! linear relations among them are spanned by the insertion relations built
//! in [`relation`]. An element is kept in normal form: its coefficient
//! vector in each degree is reduced modulo the row-echelon form of those
//! relations, so two elements are equal iff their normal forms coincide.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SparseEchelon, SparseVec};
use crate::rational::{format_q, parse_q, Q};
use crate::trees::{
    check_n, compatible, enumerate_stable_trees, full_mask, labels_of, Mask, Partition2, STree, TreeJson,
};

/// A good monomial is the same thing as a stable tree.
pub type Monomial = STree;

/// Unreduced linear combination of good monomials.
pub type Combination = HashMap<STree, Q>;

pub(crate) fn add_term(c: &mut Combination, m: STree, x: Q) {
    if x.is_zero() {
        return;
    }
    use std::collections::hash_map::Entry;
    match c.entry(m) {
        Entry::Occupied(mut e) => {
            *e.get_mut() += x;
            if e.get().is_zero() {
                e.remove();
            }
        }
        Entry::Vacant(e) => {
            e.insert(x);
        }
    }
}

/// Pairs of flags chosen at the two ends of the edge in case c of the
/// divisor-times-monomial rule: `near` at the label-1 end, `far` opposite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlagChoice {
    pub near: [Mask; 2],
    pub far: [Mask; 2],
}

/// The three mutually exclusive situations for `D_sigma * m(tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisorCase {
    /// `D_sigma m(tau)` is again good.
    Good,
    /// Some divisor of `m(tau)` has `a = 4` with `sigma`.
    Vanishing,
    /// `D_sigma` divides `m(tau)`.
    Square,
}

pub fn classify(sigma: &Partition2, m: &STree) -> DivisorCase {
    if m.contains(sigma) {
        DivisorCase::Square
    } else if m.edges().iter().all(|p| compatible(p, sigma)) {
        DivisorCase::Good
    } else {
        DivisorCase::Vanishing
    }
}

/// Every admissible choice of flag pairs for a square case.
pub fn admissible_choices(sigma: &Partition2, m: &STree) -> Vec<FlagChoice> {
    let Some(k) = m.edge_index(sigma) else { return Vec::new() };
    let layout = m.layout();
    let (near, far) = layout.edge_ends[k];
    let pairs = |v: usize| -> Vec<[Mask; 2]> {
        let ef = layout.edge_flag(m, k, v);
        let fl: Vec<Mask> = layout.vertices[v].flags.iter().copied().filter(|f| *f != ef).collect();
        let mut out = Vec::new();
        for a in 0..fl.len() {
            for b in a + 1..fl.len() {
                out.push([fl[a], fl[b]]);
            }
        }
        out
    };
    let (pn, pf) = (pairs(near), pairs(far));
    let mut out = Vec::with_capacity(pn.len() * pf.len());
    for a in &pn {
        for b in &pf {
            out.push(FlagChoice { near: *a, far: *b });
        }
    }
    out
}

/// The reproducible choice: at each end, the two flags whose branches
/// contain the smallest labels.
pub fn default_choice(sigma: &Partition2, m: &STree) -> Option<FlagChoice> {
    let k = m.edge_index(sigma)?;
    let layout = m.layout();
    let (near, far) = layout.edge_ends[k];
    let pick = |v: usize| -> [Mask; 2] {
        let ef = layout.edge_flag(m, k, v);
        // flags are stored sorted by smallest label
        let mut it = layout.vertices[v].flags.iter().copied().filter(|f| *f != ef);
        [it.next().expect("stable"), it.next().expect("stable")]
    };
    Some(FlagChoice { near: pick(near), far: pick(far) })
}

/// `D_sigma * m` as unreduced terms, using `choice` in the square case.
pub fn mul_divisor_terms_with(sigma: &Partition2, m: &STree, choice: Option<FlagChoice>) -> Result<Vec<(STree, Q)>> {
    if sigma.n() != m.n() {
        return Err(Error::Mismatch(sigma.n(), m.n()));
    }
    match classify(sigma, m) {
        DivisorCase::Good => Ok(vec![(m.with_split(*sigma), Q::one())]),
        DivisorCase::Vanishing => Ok(Vec::new()),
        DivisorCase::Square => {
            let choice = match choice {
                Some(c) => c,
                None => default_choice(sigma, m).expect("square case has an edge"),
            };
            let k = m.edge_index(sigma).expect("square case");
            let layout = m.layout();
            let (near, far) = layout.edge_ends[k];
            let mut out = Vec::new();
            for (v, keep) in [(near, choice.near), (far, choice.far)] {
                let ef = layout.edge_flag(m, k, v);
                let flags = &layout.vertices[v].flags;
                if keep[0] == keep[1] || keep.iter().any(|f| *f == ef || !flags.contains(f)) {
                    return Err(Error::InvalidFlags("flag choice does not fit the edge".into()));
                }
                let movable: Vec<Mask> = flags.iter().copied().filter(|f| *f != ef && !keep.contains(f)).collect();
                let t = movable.len();
                for bits in 1u64..(1 << t) {
                    let moved = (0..t).filter(|i| bits >> i & 1 == 1).fold(0, |acc, i| acc | movable[i]);
                    let split = Partition2::new_unchecked(m.n(), moved | ef);
                    out.push((m.with_split(split), -Q::one()));
                }
            }
            Ok(out)
        }
    }
}

pub(crate) fn mul_divisor_terms(sigma: &Partition2, m: &STree) -> Vec<(STree, Q)> {
    mul_divisor_terms_with(sigma, m, None).expect("label sets agree")
}

pub(crate) fn mul_divisor_comb(sigma: &Partition2, c: &Combination) -> Combination {
    let mut out = Combination::new();
    for (m, x) in c {
        for (t, y) in mul_divisor_terms(sigma, m) {
            add_term(&mut out, t, x * y);
        }
    }
    out
}

/// Multiplies a combination by a monomial, one divisor at a time.
pub(crate) fn mul_monomial_comb(c: &Combination, m: &STree) -> Combination {
    let mut cur = c.clone();
    for s in m.edges() {
        if cur.is_empty() {
            break;
        }
        cur = mul_divisor_comb(s, &cur);
    }
    cur
}

pub(crate) fn mul_comb(x: &Combination, y: &Combination) -> Combination {
    let mut out = Combination::new();
    for (m, c) in y {
        for (t, v) in mul_monomial_comb(x, m) {
            add_term(&mut out, t, v * c);
        }
    }
    out
}

/// A linear relation among good monomials of one degree, with the datum
/// `(tau, v, i, j, k, l)` that produced it.
#[derive(Clone, Debug)]
pub struct Relation {
    pub tree: STree,
    pub vertex: usize,
    pub flags: [Mask; 4],
    pub terms: Vec<(STree, Q)>,
}

/// `R(tau, v, i, j, k, l)`: sum over ordered splittings `(T1, T2)` of the
/// other flags at `v` of `m(tau'(alpha)) - m(tau''(alpha))`, where `tau'`
/// inserts an edge separating `{i, j} + T1` from `{k, l} + T2` and `tau''`
/// separates `{k, j} + T1` from `{i, l} + T2`.
pub fn relation(tau: &STree, v: usize, flags: [Mask; 4]) -> Result<Relation> {
    let layout = tau.layout();
    let vert = layout.vertices.get(v).ok_or_else(|| Error::InvalidFlags("no such vertex".into()))?;
    if vert.valency() < 4 {
        return Err(Error::InvalidFlags(format!("vertex valency {} < 4", vert.valency())));
    }
    for (a, f) in flags.iter().enumerate() {
        if !vert.flags.contains(f) || flags[..a].contains(f) {
            return Err(Error::InvalidFlags("flags must be distinct flags of the vertex".into()));
        }
    }
    let [i, j, k, _] = flags;
    let rest: Vec<Mask> = vert.flags.iter().copied().filter(|f| !flags.contains(f)).collect();
    let n = tau.n();
    let mut c = Combination::new();
    for bits in 0u64..(1 << rest.len()) {
        let t1 = (0..rest.len()).filter(|b| bits >> b & 1 == 1).fold(0, |acc, b| acc | rest[b]);
        add_term(&mut c, tau.with_split(Partition2::new_unchecked(n, i | j | t1)), Q::one());
        add_term(&mut c, tau.with_split(Partition2::new_unchecked(n, k | j | t1)), -Q::one());
    }
    let mut terms: Vec<(STree, Q)> = c.into_iter().collect();
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Relation { tree: tau.clone(), vertex: v, flags, terms })
}

/// Relations spanning all linear relations among good monomials of degree
/// `d >= 1`: two per (tree with `d - 1` edges, vertex of valency >= 4,
/// 4-subset of its flags). Relations for one 4-subset depend only on the
/// two pairings compared, since every splitting of the remaining flags is summed.
pub fn spanning_relations(n: usize, d: usize) -> Result<Vec<Relation>> {
    check_n(n)?;
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for tau in enumerate_stable_trees(n, d - 1)?.iter() {
        let layout = tau.layout();
        for (v, vert) in layout.vertices.iter().enumerate() {
            let f = &vert.flags;
            let k = f.len();
            if k < 4 {
                continue;
            }
            for a in 0..k {
                for b in a + 1..k {
                    for c in b + 1..k {
                        for e in c + 1..k {
                            out.push(relation(tau, v, [f[a], f[b], f[c], f[e]])?);
                            out.push(relation(tau, v, [f[a], f[c], f[b], f[e]])?);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) struct DegreeData {
    pub monomials: Arc<Vec<STree>>,
    pub index: HashMap<STree, usize>,
    pub echelon: SparseEchelon,
}

impl DegreeData {
    fn build(n: usize, d: usize) -> Result<Self> {
        let monomials = enumerate_stable_trees(n, d)?;
        let index: HashMap<STree, usize> = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut echelon = SparseEchelon::new();
        for r in spanning_relations(n, d)? {
            let v: SparseVec = r.terms.into_iter().map(|(m, c)| (index[&m], c)).collect();
            echelon.insert(v);
        }
        Ok(DegreeData { monomials, index, echelon })
    }

    /// Indices of the good monomials that form the normal-form basis.
    pub fn basis(&self) -> Vec<usize> {
        (0..self.monomials.len()).filter(|&i| !self.echelon.is_pivot(i)).collect()
    }
}

pub(crate) struct RingData {
    n: usize,
    degrees: Vec<OnceLock<Arc<DegreeData>>>,
}

impl RingData {
    pub fn degree(&self, d: usize) -> Arc<DegreeData> {
        self.degrees[d].get_or_init(|| Arc::new(DegreeData::build(self.n, d).expect("valid n"))).clone()
    }
}

pub(crate) fn ring(n: usize) -> Arc<RingData> {
    static RINGS: OnceLock<Mutex<HashMap<usize, Arc<RingData>>>> = OnceLock::new();
    let rings = RINGS.get_or_init(Default::default);
    rings
        .lock()
        .unwrap()
        .entry(n)
        .or_insert_with(|| Arc::new(RingData { n, degrees: (0..=n - 3).map(|_| OnceLock::new()).collect() }))
        .clone()
}

/// Good monomials of degree `d` forming the normal-form basis of `H^{2d}`.
pub fn normal_basis(n: usize, d: usize) -> Result<Vec<STree>> {
    check_n(n)?;
    if d > n - 3 {
        return Ok(Vec::new());
    }
    let dd = ring(n).degree(d);
    Ok(dd.basis().into_iter().map(|i| dd.monomials[i].clone()).collect())
}

/// An element of `H*(M_{0,n})` in normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RingElement {
    n: u8,
    terms: BTreeMap<STree, Q>,
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H{}(", self.n)?;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*{:?}", format_q(c), m)?;
        }
        write!(f, ")")
    }
}

impl RingElement {
    pub fn zero(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(RingElement { n: n as u8, terms: BTreeMap::new() })
    }

    pub fn one(n: usize) -> Result<Self> {
        Ok(Self::monomial(STree::corolla(n)?))
    }

    pub fn constant(n: usize, c: Q) -> Result<Self> {
        Ok(Self::one(n)?.scale(&c))
    }

    pub fn divisor(p: &Partition2) -> Self {
        Self::monomial(STree::from_sorted_unchecked(p.n(), vec![*p]))
    }

    pub fn monomial(m: STree) -> Self {
        let n = m.n();
        let mut c = Combination::new();
        c.insert(m, Q::one());
        Self::from_combination(n, c)
    }

    /// Reduces an arbitrary combination of good monomials on `n` labels.
    pub fn from_combination(n: usize, c: Combination) -> Self {
        let mut by_degree: BTreeMap<usize, Vec<(STree, Q)>> = BTreeMap::new();
        for (m, x) in c {
            debug_assert_eq!(m.n(), n);
            if !x.is_zero() {
                by_degree.entry(m.degree()).or_default().push((m, x));
            }
        }
        let r = ring(n);
        let mut terms = BTreeMap::new();
        for (d, items) in by_degree {
            let dd = r.degree(d);
            let mut v = SparseVec::new();
            for (m, x) in items {
                let e = v.entry(dd.index[&m]).or_insert_with(Q::zero);
                *e += x;
            }
            v.retain(|_, x| !x.is_zero());
            dd.echelon.reduce(&mut v);
            for (i, x) in v {
                terms.insert(dd.monomials[i].clone(), x);
            }
        }
        RingElement { n: n as u8, terms }
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (STree, Q)>) -> Result<Self> {
        check_n(n)?;
        let mut c = Combination::new();
        for (m, x) in terms {
            if m.n() != n {
                return Err(Error::Mismatch(n, m.n()));
            }
            add_term(&mut c, m, x);
        }
        Ok(Self::from_combination(n, c))
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn terms(&self) -> &BTreeMap<STree, Q> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn to_combination(&self) -> Combination {
        self.terms.iter().map(|(m, x)| (m.clone(), x.clone())).collect()
    }

    /// The component of degree `d`.
    pub fn part(&self, d: usize) -> RingElement {
        RingElement {
            n: self.n,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, x)| (m.clone(), x.clone())).collect(),
        }
    }

    /// Highest degree with a nonzero component, if any.
    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn is_homogeneous(&self, d: usize) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    /// Coefficient of the unit monomial.
    pub fn constant_term(&self) -> Q {
        self.terms.iter().find(|(m, _)| m.degree() == 0).map(|(_, x)| x.clone()).unwrap_or_else(Q::zero)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            Err(Error::Mismatch(self.n(), other.n()))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut terms = self.terms.clone();
        for (m, x) in &other.terms {
            let e = terms.entry(m.clone()).or_insert_with(Q::zero);
            *e += x;
            if e.is_zero() {
                terms.remove(m);
            }
        }
        // sums of normal forms are normal forms
        Ok(RingElement { n: self.n, terms })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return RingElement { n: self.n, terms: BTreeMap::new() };
        }
        RingElement { n: self.n, terms: self.terms.iter().map(|(m, x)| (m.clone(), x * c)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let (small, big) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        let prod = mul_comb(&big.to_combination(), &small.to_combination());
        Ok(Self::from_combination(self.n(), prod))
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(self.n())?;
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn mul_divisor(&self, p: &Partition2) -> Result<Self> {
        if p.n() != self.n() {
            return Err(Error::Mismatch(self.n(), p.n()));
        }
        Ok(Self::from_combination(self.n(), mul_divisor_comb(p, &self.to_combination())))
    }

    /// `exp` of a nilpotent element with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::Precondition("exp needs a zero constant term".into()));
        }
        let mut acc = Self::one(self.n())?;
        let mut term = Self::one(self.n())?;
        for k in 1..=self.n() as i64 - 3 {
            term = term.mul(self)?.scale(&Q::new(1.into(), k.into()));
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// `log` of an element with constant term 1.
    pub fn log(&self) -> Result<Self> {
        if !self.constant_term().is_one() {
            return Err(Error::Precondition("log needs constant term 1".into()));
        }
        let u = self.sub(&Self::one(self.n())?)?;
        let mut acc = Self::zero(self.n())?;
        let mut power = Self::one(self.n())?;
        for k in 1..=self.n() as i64 - 3 {
            power = power.mul(&u)?;
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&power.scale(&Q::new(sign.into(), k.into())))?;
        }
        Ok(acc)
    }

    /// Applies a label permutation (label `i` goes to `perm[i - 1]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let mut c = Combination::new();
        for (m, x) in &self.terms {
            add_term(&mut c, m.relabel(perm)?, x.clone());
        }
        Ok(Self::from_combination(self.n(), c))
    }
}

/// `D_sigma * m(tau)` in normal form (deterministic flag choice in the square case).
pub fn mul_divisor(sigma: &Partition2, m: &STree) -> Result<RingElement> {
    let terms = mul_divisor_terms_with(sigma, m, None)?;
    RingElement::from_terms(m.n(), terms)
}

/// Normal form of `D_{sigma_1} ... D_{sigma_k}`.
pub fn reduce(product: &[Partition2]) -> Result<RingElement> {
    let first = product.first().ok_or_else(|| Error::Precondition("empty product".into()))?;
    let n = first.n();
    let mut c = Combination::new();
    c.insert(STree::corolla(n)?, Q::one());
    for p in product {
        if p.n() != n {
            return Err(Error::Mismatch(n, p.n()));
        }
        c = mul_divisor_comb(p, &c);
        if c.is_empty() {
            break;
        }
    }
    Ok(RingElement::from_combination(n, c))
}

/// The choice-free expression for `D_sigma^2` obtained by averaging over
/// all flag choices.
pub fn d_sigma_squared_avg(sigma: &Partition2) -> RingElement {
    let n = sigma.n();
    let mut c = Combination::new();
    for t1 in [sigma.first(), sigma.second()] {
        let size = t1.count_ones() as i64;
        let members = labels_of(t1);
        for bits in 1u64..(1 << members.len()) {
            let t = members
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .fold(0, |acc, (_, l)| acc | 1 << (l - 1));
            let rest = (t1 ^ t) & full_mask(n);
            let r = rest.count_ones() as i64;
            if r < 2 {
                continue;
            }
            let w = Q::new((r * (r - 1)).into(), (size * (size - 1)).into());
            let other = Partition2::new_unchecked(n, rest);
            let m = STree::from_sorted_unchecked(n, {
                let mut v = vec![*sigma, other];
                v.sort();
                v
            });
            add_term(&mut c, m, -w);
        }
    }
    RingElement::from_combination(n, c)
}

/// Graded dimension of `H^{2r}`: number of good monomials of degree `r`
/// minus the rank of the insertion relations among them.
pub fn betti_by_relations(n: usize, r: usize) -> Result<usize> {
    check_n(n)?;
    if r > n - 3 {
        return Ok(0);
    }
    let dd = ring(n).degree(r);
    Ok(dd.monomials.len() - dd.echelon.rank())
}

/// Elements of `H*(M_{0, S1 + .}) (x) H*(M_{0, S2 + .})`, normal form in both factors.
///
/// For `sigma = {S1, S2}` with `S1` the part containing label 1, the left
/// factor relabels `S1` increasingly as `1..=|S1|` and the gluing point as
/// `|S1| + 1`; the right factor does the same for `S2`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TensorElement {
    pub left_n: usize,
    pub right_n: usize,
    pub terms: BTreeMap<(STree, STree), Q>,
}

impl TensorElement {
    fn from_raw(left_n: usize, right_n: usize, raw: HashMap<(STree, STree), Q>) -> Self {
        // reduce left factors for each right monomial, then right factors for each left one
        let mut by_right: HashMap<STree, Combination> = HashMap::new();
        for ((l, r), x) in raw {
            add_term(by_right.entry(r).or_default(), l, x);
        }
        let mut by_left: HashMap<STree, Combination> = HashMap::new();
        for (r, comb) in by_right {
            let red = RingElement::from_combination(left_n, comb);
            for (l, x) in red.terms {
                add_term(by_left.entry(l).or_default(), r.clone(), x);
            }
        }
        let mut terms = BTreeMap::new();
        for (l, comb) in by_left {
            let red = RingElement::from_combination(right_n, comb);
            for (r, x) in red.terms {
                terms.insert((l.clone(), r), x);
            }
        }
        TensorElement { left_n, right_n, terms }
    }

    /// `a (x) b`.
    pub fn product_of(a: &RingElement, b: &RingElement) -> Self {
        let mut terms = BTreeMap::new();
        for (l, x) in &a.terms {
            for (r, y) in &b.terms {
                terms.insert((l.clone(), r.clone()), x * y);
            }
        }
        TensorElement { left_n: a.n(), right_n: b.n(), terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, x) in &other.terms {
            let e = terms.entry(k.clone()).or_insert_with(Q::zero);
            *e += x;
            if e.is_zero() {
                terms.remove(k);
            }
        }
        TensorElement { left_n: self.left_n, right_n: self.right_n, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Relabels the labels in `part` to `1..=|part|` in increasing order.
fn compress(m: Mask, part: Mask) -> Mask {
    let mut out = 0;
    let mut bit = 0;
    let mut rest = part;
    while rest != 0 {
        let b = rest.trailing_zeros();
        if m >> b & 1 == 1 {
            out |= 1 << bit;
        }
        bit += 1;
        rest &= rest - 1;
    }
    out
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Image of one generator `D_tau` under restriction to the divisor `sigma`.
fn pullback_generator(sigma: &Partition2, tau: &Partition2) -> Vec<(Side, Partition2, Q)> {
    let (s1, s2) = sigma.parts();
    let (k1, k2) = (s1.count_ones() as usize, s2.count_ones() as usize);
    if tau == sigma {
        // -sum_{i j | .} D (x) 1  -  sum_{. | k l} 1 (x) D
        let mut out = Vec::new();
        for (side, k) in [(Side::Left, k1), (Side::Right, k2)] {
            let m = k + 1;
            if m < 4 {
                continue;
            }
            let dot = 1u64 << k;
            let ij = 0b11u64;
            let others = full_mask(m) ^ dot ^ ij;
            let members: Vec<u64> = labels_of(others).into_iter().map(|l| 1u64 << (l - 1)).collect();
            for bits in 0u64..(1 << members.len()) {
                let extra = members.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).fold(0, |a, (_, b)| a | b);
                let side_set = ij | extra;
                if (full_mask(m) ^ side_set).count_ones() >= 2 {
                    out.push((side, Partition2::new_unchecked(m, side_set), -Q::one()));
                }
            }
        }
        return out;
    }
    if !compatible(sigma, tau) {
        return Vec::new();
    }
    for t in [tau.first(), tau.second()] {
        if t & s2 == 0 {
            let m = k1 + 1;
            return vec![(Side::Left, Partition2::new_unchecked(m, compress(t, s1)), Q::one())];
        }
        if t & s1 == 0 {
            let m = k2 + 1;
            return vec![(Side::Right, Partition2::new_unchecked(m, compress(t, s2)), Q::one())];
        }
    }
    unreachable!("compatible distinct partitions nest on one side")
}

/// Restriction of `x` to the boundary divisor `sigma`.
pub fn pullback_to_divisor(sigma: &Partition2, x: &RingElement) -> Result<TensorElement> {
    if sigma.n() != x.n() {
        return Err(Error::Mismatch(x.n(), sigma.n()));
    }
    let (s1, s2) = sigma.parts();
    let (ln, rn) = (s1.count_ones() as usize + 1, s2.count_ones() as usize + 1);
    let mut total: HashMap<(STree, STree), Q> = HashMap::new();
    for (m, coeff) in &x.terms {
        let mut cur: HashMap<(STree, STree), Q> = HashMap::new();
        cur.insert((STree::corolla(ln)?, STree::corolla(rn)?), coeff.clone());
        // generators other than sigma first: they only add edges
        let mut gens: Vec<&Partition2> = m.edges().iter().collect();
        gens.sort_by_key(|p| *p == sigma);
        for tau in gens {
            let images = pullback_generator(sigma, tau);
            let mut next: HashMap<(STree, STree), Q> = HashMap::new();
            for ((l, r), c) in &cur {
                for (side, d, w) in &images {
                    let (prod, fixed_left) = match side {
                        Side::Left => (mul_divisor_terms(d, l), true),
                        Side::Right => (mul_divisor_terms(d, r), false),
                    };
                    for (t, y) in prod {
                        let key = if fixed_left { (t, r.clone()) } else { (l.clone(), t) };
                        let v = c * w * y;
                        let e = next.entry(key).or_insert_with(Q::zero);
                        *e += v;
                    }
                }
            }
            next.retain(|_, v| !v.is_zero());
            cur = next;
            if cur.is_empty() {
                break;
            }
        }
        for (k, v) in cur {
            let e = total.entry(k).or_insert_with(Q::zero);
            *e += v;
        }
    }
    total.retain(|_, v| !v.is_zero());
    Ok(TensorElement::from_raw(ln, rn, total))
}

/// Serialized ring element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingElementJson {
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub tree: TreeJson,
    pub coeff: String,
}

impl From<&RingElement> for RingElementJson {
    fn from(x: &RingElement) -> Self {
        RingElementJson {
            n: x.n(),
            terms: x.terms.iter().map(|(m, c)| TermJson { tree: TreeJson::from(m), coeff: format_q(c) }).collect(),
        }
    }
}

impl TryFrom<&RingElementJson> for RingElement {
    type Error = Error;
    fn try_from(j: &RingElementJson) -> Result<Self> {
        check_n(j.n)?;
        let mut terms = Vec::with_capacity(j.terms.len());
        for t in &j.terms {
            let m = STree::try_from(&t.tree)?;
            if m.n() != j.n {
                return Err(Error::Mismatch(j.n, m.n()));
            }
            terms.push((m, parse_q(&t.coeff)?));
        }
        RingElement::from_terms(j.n, terms)
    }
}

impl RingElement {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&RingElementJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: RingElementJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        RingElement::try_from(&j)
    }
}
