//! Integration and the Poincare pairing on strata classes.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keelring::{mul_monomial_comb, Combination, RingElement};
use crate::rational::{factorial, format_q, parse_q, Q};
use crate::trees::{
    check_n, coloured_shape_key, compatible, enumerate_stable_trees, one_edge_refinements, Partition2, STree, TreeJson,
};

/// Sum of the coefficients of trivalent monomials.
pub fn integrate(x: &RingElement) -> Q {
    x.terms().iter().filter(|(m, _)| m.is_trivalent()).map(|(_, c)| c.clone()).sum()
}

/// Integration is well defined before reduction: every relation among top
/// monomials has as many positive as negative unit terms.
pub(crate) fn integrate_comb(c: &Combination) -> Q {
    c.iter().filter(|(m, _)| m.is_trivalent()).map(|(_, x)| x.clone()).sum()
}

fn check_complementary(m1: &STree, m2: &STree) -> Result<()> {
    if m1.n() != m2.n() {
        return Err(Error::Mismatch(m1.n(), m2.n()));
    }
    if m1.degree() + m2.degree() != m1.n() - 3 {
        return Err(Error::Degree(format!(
            "degrees {} + {} do not add up to {}",
            m1.degree(),
            m2.degree(),
            m1.n() - 3
        )));
    }
    Ok(())
}

/// `<m1, m2>` by multiplying out in the ring and integrating.
pub fn pair_oracle(m1: &STree, m2: &STree) -> Result<Q> {
    check_complementary(m1, m2)?;
    let mut c = Combination::new();
    c.insert(m1.clone(), Q::one());
    Ok(integrate_comb(&mul_monomial_comb(&c, m2)))
}

/// Heads of the oriented edges: `(edge index in tau, head vertex)`.
pub type Orientation = Vec<(usize, usize)>;

fn demands(tau: &STree) -> (Vec<usize>, Vec<(usize, usize)>) {
    let layout = tau.layout();
    (layout.vertices.iter().map(|v| v.valency() - 3).collect(), layout.edge_ends)
}

/// The orientation of the marked edges with in-degree `|v| - 3` at every
/// vertex, if one exists.
pub fn good_orientation(tau: &STree, marked: &[usize]) -> Option<Orientation> {
    let (mut need, ends) = demands(tau);
    let mut left: BTreeSet<usize> = marked.iter().copied().collect();
    let mut out = Orientation::new();
    // strip leaves of the marked forest; each leaf's demand forces its edge
    loop {
        let mut progress = false;
        for &k in left.clone().iter() {
            let (a, b) = ends[k];
            let deg = |v: usize| left.iter().filter(|&&e| ends[e].0 == v || ends[e].1 == v).count();
            let (leaf, other) = if deg(a) == 1 {
                (a, b)
            } else if deg(b) == 1 {
                (b, a)
            } else {
                continue;
            };
            let head = match need[leaf] {
                1 => leaf,
                0 => other,
                _ => return None,
            };
            if need[head] == 0 {
                return None;
            }
            need[head] -= 1;
            out.push((k, head));
            left.remove(&k);
            progress = true;
        }
        if left.is_empty() || !progress {
            break;
        }
    }
    if !left.is_empty() {
        let rest: Vec<usize> = left.into_iter().collect();
        let found = exhaustive_orientations(&ends, &need, &rest);
        let first = found.into_iter().next()?;
        out.extend(first);
    } else if need.iter().any(|&d| d != 0) {
        return None;
    }
    out.sort_unstable();
    Some(out)
}

fn exhaustive_orientations(ends: &[(usize, usize)], need: &[usize], edges: &[usize]) -> Vec<Orientation> {
    let mut found = Vec::new();
    for bits in 0u64..(1 << edges.len()) {
        let mut indeg = vec![0usize; need.len()];
        let mut o = Orientation::new();
        for (i, &k) in edges.iter().enumerate() {
            let head = if bits >> i & 1 == 1 { ends[k].1 } else { ends[k].0 };
            indeg[head] += 1;
            o.push((k, head));
        }
        if indeg == need {
            found.push(o);
        }
    }
    found
}

/// Every good orientation, by trying all of them.
pub fn all_good_orientations(tau: &STree, marked: &[usize]) -> Vec<Orientation> {
    let (need, ends) = demands(tau);
    exhaustive_orientations(&ends, &need, marked)
}

/// The product tree and doubled edges of `m1 * m2`, or `None` when some
/// cross pair has `a = 4`.
pub fn product_tree(m1: &STree, m2: &STree) -> Option<(STree, Vec<usize>)> {
    let mut splits: BTreeSet<Partition2> = m1.edges().iter().copied().collect();
    for q in m2.edges() {
        if !m1.edges().iter().all(|p| compatible(p, q)) {
            return None;
        }
        splits.insert(*q);
    }
    let tau = STree::from_partitions(m1.n(), splits.into_iter().collect()).ok()?;
    let doubled = m2.edges().iter().filter(|q| m1.contains(q)).map(|q| tau.edge_index(q).expect("in union")).collect();
    Some((tau, doubled))
}

fn vertex_weight(tau: &STree) -> Q {
    let mut w = Q::one();
    for v in &tau.layout().vertices {
        let d = v.valency() - 3;
        let f = Q::from_integer(factorial(d as u64));
        w *= if d % 2 == 1 { -f } else { f };
    }
    w
}

/// `<m1, m2>` as a product of `(-1)^{|v|-3} (|v|-3)!` over the vertices of
/// the product tree, provided a good orientation of the doubled edges exists.
pub fn pair_kaufmann(m1: &STree, m2: &STree) -> Result<Q> {
    check_complementary(m1, m2)?;
    let Some((tau, doubled)) = product_tree(m1, m2) else { return Ok(Q::zero()) };
    Ok(match good_orientation(&tau, &doubled) {
        Some(_) => vertex_weight(&tau),
        None => Q::zero(),
    })
}

/// All `m'` of complementary degree with `<m, m'> != 0`, with the pairing.
///
/// A nonzero partner is compatible with every edge of `m`, so `m + m'` is a
/// refinement `tau` of `m` and `m' = (tau \ m) + A` for a subset `A` of `m`.
pub fn nonzero_partners(m: &STree) -> Vec<(STree, Q)> {
    let n = m.n();
    let target = n - 3 - m.degree();
    let mut out = Vec::new();
    let mut level: BTreeSet<STree> = BTreeSet::from([m.clone()]);
    let mut extra = 0;
    loop {
        if extra <= target {
            let need_a = target - extra;
            if need_a <= m.degree() {
                for tau in &level {
                    let new: Vec<Partition2> = tau.edges().iter().filter(|p| !m.contains(p)).copied().collect();
                    for a in subsets(m.edges(), need_a) {
                        let mut s = new.clone();
                        s.extend(a);
                        s.sort();
                        let partner = STree::from_partitions(n, s).expect("subset of a tree");
                        let idx: Vec<usize> = m
                            .edges()
                            .iter()
                            .filter(|p| partner.contains(p))
                            .map(|p| tau.edge_index(p).expect("in tau"))
                            .collect();
                        if good_orientation(tau, &idx).is_some() {
                            out.push((partner, vertex_weight(tau)));
                        }
                    }
                }
            }
        }
        if extra == target || level.is_empty() {
            break;
        }
        level = level.iter().flat_map(one_edge_refinements).collect();
        extra += 1;
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn subsets(items: &[Partition2], k: usize) -> Vec<Vec<Partition2>> {
    let mut out = Vec::new();
    let n = items.len();
    if k > n {
        return out;
    }
    for bits in 0u64..(1 << n) {
        if bits.count_ones() as usize == k {
            out.push((0..n).filter(|i| bits >> i & 1 == 1).map(|i| items[i]).collect());
        }
    }
    out
}

/// Classes of `trees` under label permutations preserving `colour`
/// (`colour[i]` is the class of label `i + 1`), in order of first member.
pub fn orbits(trees: &[STree], colour: &[u8]) -> Vec<Vec<STree>> {
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut out: Vec<Vec<STree>> = Vec::new();
    for t in trees {
        let key = coloured_shape_key(t, colour);
        match index.get(&key) {
            Some(&i) => out[i].push(t.clone()),
            None => {
                index.insert(key, out.len());
                out.push(vec![t.clone()]);
            }
        }
    }
    out
}

/// Symmetric-group orbits of good monomials of degree `d`.
pub fn symmetric_orbits(n: usize, d: usize) -> Result<Vec<Vec<STree>>> {
    Ok(orbits(&enumerate_stable_trees(n, d)?, &vec![0; n]))
}

/// Gram matrix between good monomials (or orbit sums of them) of degrees
/// `r` and `n - 3 - r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingMatrix {
    pub n: usize,
    pub r: usize,
    pub invariant: bool,
    /// Single monomials, or orbit representatives when `invariant`.
    pub row_basis: Vec<STree>,
    pub col_basis: Vec<STree>,
    pub row_orbit_sizes: Vec<usize>,
    pub col_orbit_sizes: Vec<usize>,
    pub entries: Vec<Vec<Q>>,
}

pub fn pairing_matrix(n: usize, r: usize, invariant: bool) -> Result<PairingMatrix> {
    check_n(n)?;
    if r > n - 3 {
        return Err(Error::Degree(format!("degree {r} exceeds {}", n - 3)));
    }
    let s = n - 3 - r;
    let (rows, cols): (Vec<Vec<STree>>, Vec<Vec<STree>>) = if invariant {
        (symmetric_orbits(n, r)?, symmetric_orbits(n, s)?)
    } else {
        let one = |d| -> Result<Vec<Vec<STree>>> {
            Ok(enumerate_stable_trees(n, d)?.iter().map(|t| vec![t.clone()]).collect())
        };
        (one(r)?, one(s)?)
    };
    let col_of: HashMap<&STree, usize> =
        cols.iter().enumerate().flat_map(|(j, o)| o.iter().map(move |t| (t, j))).collect();
    let entries: Vec<Vec<Q>> = rows
        .par_iter()
        .map(|orbit| {
            let mut row = vec![Q::zero(); cols.len()];
            for (partner, v) in nonzero_partners(&orbit[0]) {
                row[col_of[&partner]] += v;
            }
            let size = Q::from_integer((orbit.len() as i64).into());
            row.into_iter().map(|x| x * &size).collect()
        })
        .collect();
    Ok(PairingMatrix {
        n,
        r,
        invariant,
        row_basis: rows.iter().map(|o| o[0].clone()).collect(),
        col_basis: cols.iter().map(|o| o[0].clone()).collect(),
        row_orbit_sizes: rows.iter().map(Vec::len).collect(),
        col_orbit_sizes: cols.iter().map(Vec::len).collect(),
        entries,
    })
}

impl PairingMatrix {
    pub fn rank(&self) -> usize {
        crate::linalg::rank_q(&self.entries)
    }

    pub fn to_json(&self) -> PairingMatrixJson {
        PairingMatrixJson {
            n: self.n,
            r: self.r,
            invariant: self.invariant,
            row_basis: self.row_basis.iter().map(TreeJson::from).collect(),
            col_basis: self.col_basis.iter().map(TreeJson::from).collect(),
            row_orbit_sizes: self.row_orbit_sizes.clone(),
            col_orbit_sizes: self.col_orbit_sizes.clone(),
            entries: self.entries.iter().flatten().map(format_q).collect(),
        }
    }

    pub fn from_json(j: &PairingMatrixJson) -> Result<Self> {
        let trees = |ts: &[TreeJson]| ts.iter().map(STree::try_from).collect::<Result<Vec<_>>>();
        let (row_basis, col_basis) = (trees(&j.row_basis)?, trees(&j.col_basis)?);
        let cols = col_basis.len();
        if j.entries.len() != row_basis.len() * cols
            || j.row_orbit_sizes.len() != row_basis.len()
            || j.col_orbit_sizes.len() != cols
        {
            return Err(Error::Parse("pairing matrix dimensions do not match its bases".into()));
        }
        if row_basis.iter().chain(&col_basis).any(|t| t.n() != j.n) || j.n < 3 || j.r > j.n - 3 {
            return Err(Error::Parse("pairing matrix bases do not match n".into()));
        }
        let flat = j.entries.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?;
        let entries =
            if cols == 0 { vec![Vec::new(); row_basis.len()] } else { flat.chunks(cols).map(<[Q]>::to_vec).collect() };
        Ok(PairingMatrix {
            n: j.n,
            r: j.r,
            invariant: j.invariant,
            row_basis,
            col_basis,
            row_orbit_sizes: j.row_orbit_sizes.clone(),
            col_orbit_sizes: j.col_orbit_sizes.clone(),
            entries,
        })
    }
}

/// Serialized pairing matrix; `entries` is row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingMatrixJson {
    pub n: usize,
    pub r: usize,
    pub invariant: bool,
    pub row_basis: Vec<TreeJson>,
    pub col_basis: Vec<TreeJson>,
    pub row_orbit_sizes: Vec<usize>,
    pub col_orbit_sizes: Vec<usize>,
    pub entries: Vec<String>,
}

/// Graded dimension by the rank of the pairing between complementary degrees.
pub fn betti_by_pairing(n: usize, r: usize) -> Result<usize> {
    if r > n - 3 {
        return Ok(0);
    }
    Ok(pairing_matrix(n, r, false)?.rank())
}

/// Largest `n` for which [`betti`] runs both methods.
pub const BETTI_MAX_N: usize = 7;

/// `dim H^{2r}(M_{0,n})` computed from the relations and from the pairing,
/// failing if the two disagree.
pub fn betti(n: usize, r: usize) -> Result<usize> {
    check_n(n)?;
    if n > BETTI_MAX_N {
        return Err(Error::Precondition(format!("betti is supported for n <= {BETTI_MAX_N}")));
    }
    let a = crate::keelring::betti_by_relations(n, r)?;
    let b = betti_by_pairing(n, r)?;
    if a != b {
        return Err(Error::Inconsistent(format!("relation rank gives {a}, pairing rank gives {b}")));
    }
    Ok(a)
}
