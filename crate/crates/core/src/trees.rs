//! Stable labelled trees.
//!
//! A stable `S`-tree is stored as the sorted set of 2-partitions cut out by
//! its edges. Distinct edges always give compatible partitions, and the set
//! determines the tree up to `S`-isomorphism, so the sorted list is at once
//! the canonical form and the key of the good monomial `m(tau)`.
//!
//! Labels are `1..=n` externally and bit `i - 1` of a [`Mask`] internally.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of labels, bit `i - 1` standing for label `i`.
pub type Mask = u64;

pub const MAX_LABELS: usize = 63;

pub fn full_mask(n: usize) -> Mask {
    (1u64 << n) - 1
}

pub fn labels_of(mask: Mask) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

pub fn mask_of(labels: &[usize], n: usize) -> Result<Mask> {
    let mut m = 0;
    for &l in labels {
        if l == 0 || l > n {
            return Err(Error::Label { label: l, n });
        }
        m |= 1 << (l - 1);
    }
    Ok(m)
}

fn min_label_bit(m: Mask) -> u32 {
    m.trailing_zeros()
}

/// Accepts label counts `3 <= n <= 63`.
pub fn check_n(n: usize) -> Result<()> {
    if (3..=MAX_LABELS).contains(&n) {
        Ok(())
    } else {
        Err(Error::LabelCount(n))
    }
}

/// An unordered stable partition `{S1, S2}` of `1..=n`, naming the boundary
/// divisor `D_sigma`. Stored by the part containing label 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition2 {
    n: u8,
    mask: Mask,
}

impl Partition2 {
    /// Builds the partition `{side, complement}`.
    pub fn new(n: usize, side: Mask) -> Result<Self> {
        check_n(n)?;
        let full = full_mask(n);
        if side & !full != 0 {
            return Err(Error::UnstablePartition(format!("{side:#b} has labels beyond {n}")));
        }
        let other = full ^ side;
        if side.count_ones() < 2 || other.count_ones() < 2 {
            return Err(Error::UnstablePartition(format!("{{{}|{}}}", fmt_labels(side), fmt_labels(other))));
        }
        let mask = if side & 1 == 1 { side } else { other };
        Ok(Partition2 { n: n as u8, mask })
    }

    pub fn from_labels(n: usize, side: &[usize]) -> Result<Self> {
        Self::new(n, mask_of(side, n)?)
    }

    pub(crate) fn new_unchecked(n: usize, side: Mask) -> Self {
        let full = full_mask(n);
        let mask = if side & 1 == 1 { side } else { full ^ side };
        debug_assert!(mask.count_ones() >= 2 && (full ^ mask).count_ones() >= 2);
        Partition2 { n: n as u8, mask }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// The part containing label 1.
    pub fn first(&self) -> Mask {
        self.mask
    }

    /// The part not containing label 1.
    pub fn second(&self) -> Mask {
        full_mask(self.n()) ^ self.mask
    }

    pub fn parts(&self) -> (Mask, Mask) {
        (self.first(), self.second())
    }

    /// The smaller part; on a tie, the one containing label 1.
    pub fn smaller_side(&self) -> Mask {
        let (a, b) = self.parts();
        if b.count_ones() < a.count_ones() {
            b
        } else {
            a
        }
    }

    /// True when `i, j` lie on one side and `k, l` on the other (`ij sigma kl`).
    pub fn separates(&self, ij: Mask, kl: Mask) -> bool {
        let a = self.mask;
        (ij & a == ij && kl & a == 0) || (ij & a == 0 && kl & a == kl)
    }

    /// Parses `{12|345}` (single-digit labels) or `{1,2|3,4,5}`.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid partition {s:?}"));
        let body = s.trim().strip_prefix('{').and_then(|t| t.strip_suffix('}')).ok_or_else(bad)?;
        let (l, r) = body.split_once('|').ok_or_else(bad)?;
        let parse_side = |side: &str| -> Result<Vec<usize>> {
            let side = side.trim();
            if side.contains(',') {
                side.split(',').map(|t| t.trim().parse::<usize>().map_err(|_| bad())).collect()
            } else {
                side.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad))
                    .collect()
            }
        };
        let (a, b) = (parse_side(l)?, parse_side(r)?);
        let (ma, mb) = (mask_of(&a, n)?, mask_of(&b, n)?);
        if ma & mb != 0 || (ma | mb) != full_mask(n) || a.len() + b.len() != n {
            return Err(Error::Parse(format!("{s:?} is not a 2-partition of 1..={n}")));
        }
        Self::new(n, ma)
    }
}

fn fmt_labels(m: Mask) -> String {
    let ls = labels_of(m);
    if ls.iter().all(|&l| l < 10) {
        ls.iter().map(|l| l.to_string()).collect()
    } else {
        ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Partition2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}|{}}}", fmt_labels(self.first()), fmt_labels(self.second()))
    }
}

impl fmt::Debug for Partition2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Number of nonempty sets among the four intersections `S_i ∩ T_j`.
pub(crate) fn a_value_masks(a: Mask, b: Mask, full: Mask) -> u8 {
    let (a2, b2) = (full ^ a, full ^ b);
    [a & b, a & b2, a2 & b, a2 & b2].iter().filter(|m| **m != 0).count() as u8
}

/// `a(sigma, tau)`: 2 iff equal, 3 iff compatible, 4 iff `D_sigma D_tau` lies in the ideal.
pub fn a_value(sigma: &Partition2, tau: &Partition2) -> Result<u8> {
    if sigma.n != tau.n {
        return Err(Error::Mismatch(sigma.n(), tau.n()));
    }
    Ok(a_value_masks(sigma.mask, tau.mask, full_mask(sigma.n())))
}

pub(crate) fn compatible(sigma: &Partition2, tau: &Partition2) -> bool {
    a_value_masks(sigma.mask, tau.mask, full_mask(sigma.n())) <= 3
}

/// One vertex of a tree: the label sets of the branches of its flags.
/// A singleton block is a tail; larger blocks are edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub flags: Vec<Mask>,
}

impl Vertex {
    pub fn valency(&self) -> usize {
        self.flags.len()
    }
}

/// Vertices and edge incidences of an [`STree`].
#[derive(Clone, Debug)]
pub struct Layout {
    pub vertices: Vec<Vertex>,
    /// For edge `k` (index into `STree::edges`): `(near, far)` where `near`
    /// is the endpoint on the label-1 side.
    pub edge_ends: Vec<(usize, usize)>,
}

impl Layout {
    /// The flag of vertex `v` pointing along edge `k`.
    pub fn edge_flag(&self, tree: &STree, k: usize, v: usize) -> Mask {
        let (near, _) = self.edge_ends[k];
        if v == near {
            tree.splits[k].second()
        } else {
            tree.splits[k].first()
        }
    }
}

/// A stable `S`-tree in canonical form (sorted edge partitions).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct STree {
    n: u8,
    splits: Vec<Partition2>,
}

impl fmt::Debug for STree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}[", self.n)?;
        for (i, s) in self.splits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for STree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Result of the categorical product of two trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Product {
    /// Both inputs are the same tree; `sigma x sigma = sigma`.
    Equal(STree),
    /// The product exists; its edges are the union of both edge sets.
    Tree(STree),
    /// Some pair of edge partitions has `a = 4`.
    None,
}

impl STree {
    /// The one-vertex tree (unit monomial).
    pub fn corolla(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(STree { n: n as u8, splits: Vec::new() })
    }

    /// Builds a tree from edge partitions, rejecting incompatible or repeated ones.
    pub fn from_partitions(n: usize, mut splits: Vec<Partition2>) -> Result<Self> {
        check_n(n)?;
        if let Some(p) = splits.iter().find(|p| p.n() != n) {
            return Err(Error::Mismatch(n, p.n()));
        }
        splits.sort();
        for w in splits.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidTree(format!("repeated edge {}", w[0])));
            }
        }
        for (i, a) in splits.iter().enumerate() {
            for b in &splits[i + 1..] {
                if !compatible(a, b) {
                    return Err(Error::InvalidTree(format!("{a} and {b} are incompatible")));
                }
            }
        }
        Ok(STree { n: n as u8, splits })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, splits: Vec<Partition2>) -> Self {
        debug_assert!(splits.windows(2).all(|w| w[0] < w[1]));
        STree { n: n as u8, splits }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn edges(&self) -> &[Partition2] {
        &self.splits
    }

    /// `|E_tau|`, the degree of `m(tau)`.
    pub fn degree(&self) -> usize {
        self.splits.len()
    }

    pub fn contains(&self, p: &Partition2) -> bool {
        self.splits.binary_search(p).is_ok()
    }

    pub fn edge_index(&self, p: &Partition2) -> Option<usize> {
        self.splits.binary_search(p).ok()
    }

    pub fn is_trivalent(&self) -> bool {
        self.degree() + 3 == self.n()
    }

    /// Adds one (compatible, new) split; caller guarantees both.
    pub(crate) fn with_split(&self, p: Partition2) -> STree {
        let mut splits = self.splits.clone();
        let pos = splits.binary_search(&p).unwrap_err();
        splits.insert(pos, p);
        STree { n: self.n, splits }
    }

    /// Vertex/edge structure, recovered from the laminar family of clusters
    /// (edge sides avoiding label 1).
    pub fn layout(&self) -> Layout {
        let n = self.n();
        let full = full_mask(n);
        let clusters: Vec<Mask> = self.splits.iter().map(|p| p.second()).collect();
        // parent[k]: vertex index holding cluster k as a flag (0 = root, k+1 = cluster k)
        let mut parent = vec![0usize; clusters.len()];
        for (k, &c) in clusters.iter().enumerate() {
            let mut best: Option<usize> = None;
            for (j, &d) in clusters.iter().enumerate() {
                if j != k && d & c == c && d != c {
                    match best {
                        Some(b) if clusters[b].count_ones() <= d.count_ones() => {}
                        _ => best = Some(j),
                    }
                }
            }
            parent[k] = best.map_or(0, |b| b + 1);
        }
        let mut vertices: Vec<Vertex> = Vec::with_capacity(clusters.len() + 1);
        let mut covered = vec![0 as Mask; clusters.len() + 1];
        let mut flags: Vec<Vec<Mask>> = vec![Vec::new(); clusters.len() + 1];
        for (k, &c) in clusters.iter().enumerate() {
            flags[parent[k]].push(c);
            covered[parent[k]] |= c;
            flags[k + 1].push(full ^ c);
        }
        for v in 0..=clusters.len() {
            let own = if v == 0 { full } else { clusters[v - 1] };
            let mut rest = own & !covered[v];
            while rest != 0 {
                let b = rest & rest.wrapping_neg();
                flags[v].push(b);
                rest ^= b;
            }
            let mut f = std::mem::take(&mut flags[v]);
            f.sort_by_key(|m| min_label_bit(*m));
            vertices.push(Vertex { flags: f });
        }
        let edge_ends = (0..clusters.len()).map(|k| (parent[k], k + 1)).collect();
        Layout { vertices, edge_ends }
    }

    /// The vertex carrying the tail of `label`.
    pub fn vertex_of_label(&self, layout: &Layout, label: usize) -> usize {
        let bit = 1u64 << (label - 1);
        layout.vertices.iter().position(|v| v.flags.contains(&bit)).expect("every label has a tail")
    }

    /// The edge partition of edge `k` (trivially stored).
    pub fn edge_partition(&self, k: usize) -> Result<Partition2> {
        self.splits.get(k).copied().ok_or(Error::NoSuchEdge)
    }

    /// Removes edge `k`.
    pub fn contract(&self, k: usize) -> Result<STree> {
        if k >= self.splits.len() {
            return Err(Error::NoSuchEdge);
        }
        let mut splits = self.splits.clone();
        splits.remove(k);
        Ok(STree { n: self.n, splits })
    }

    /// Inserts a new edge at vertex `v` separating the flags in `group`
    /// from the remaining flags of `v`; both groups need at least two flags.
    pub fn insert_at(&self, layout: &Layout, v: usize, group: &[Mask]) -> Result<STree> {
        let vert = layout.vertices.get(v).ok_or_else(|| Error::InvalidFlags("no such vertex".into()))?;
        let mut side = 0;
        for g in group {
            if !vert.flags.contains(g) || side & g != 0 {
                return Err(Error::InvalidFlags("group is not a set of flags of the vertex".into()));
            }
            side |= g;
        }
        let remaining = vert.valency() - group.len();
        if group.len() < 2 || remaining < 2 {
            return Err(Error::InvalidFlags("inserted edge would be unstable".into()));
        }
        Ok(self.with_split(Partition2::new_unchecked(self.n(), side)))
    }

    /// `tr_{T,e}(tau)`: moves the branches `t` at the endpoint `v` of edge `k`
    /// to the midpoint of that edge. The flags left at `v` (other than the
    /// edge flag) must number at least two.
    pub fn transplant(&self, layout: &Layout, k: usize, v: usize, t: &[Mask]) -> Result<STree> {
        let &(near, far) = layout.edge_ends.get(k).ok_or(Error::NoSuchEdge)?;
        if v != near && v != far {
            return Err(Error::InvalidFlags("vertex is not an endpoint of the edge".into()));
        }
        if t.is_empty() {
            return Err(Error::InvalidFlags("empty transplant set".into()));
        }
        let ef = layout.edge_flag(self, k, v);
        if t.contains(&ef) {
            return Err(Error::InvalidFlags("transplant set contains the edge flag".into()));
        }
        let mut group = t.to_vec();
        group.push(ef);
        self.insert_at(layout, v, &group)
    }

    /// Forgets a label and stabilizes; returns the tree on `n - 1` labels
    /// (higher labels shift down) and the number of edges contracted.
    pub fn forget_and_stabilize(&self, label: usize) -> Result<(STree, usize)> {
        let n = self.n();
        if n < 4 {
            return Err(Error::Precondition("cannot forget a label of a 3-pointed tree".into()));
        }
        if label == 0 || label > n {
            return Err(Error::Label { label, n });
        }
        let b = label - 1;
        let low = (1u64 << b) - 1;
        let squeeze = |m: Mask| (m & low) | ((m >> (b + 1)) << b);
        let m = n - 1;
        let full = full_mask(m);
        let mut out: BTreeSet<Partition2> = BTreeSet::new();
        for p in &self.splits {
            let s = squeeze(p.first());
            if s.count_ones() >= 2 && (full ^ s).count_ones() >= 2 {
                out.insert(Partition2::new_unchecked(m, s));
            }
        }
        let contracted = self.splits.len() - out.len();
        Ok((STree { n: m as u8, splits: out.into_iter().collect() }, contracted))
    }

    /// Applies a label permutation: label `i` becomes `perm[i - 1]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<STree> {
        let n = self.n();
        let mut seen = 0u64;
        for &p in perm {
            if p == 0 || p > n || seen >> (p - 1) & 1 == 1 {
                return Err(Error::Precondition("not a permutation".into()));
            }
            seen |= 1 << (p - 1);
        }
        if perm.len() != n {
            return Err(Error::Precondition("not a permutation".into()));
        }
        let mut splits: Vec<Partition2> =
            self.splits.iter().map(|s| Partition2::new_unchecked(n, permute_mask(s.first(), perm))).collect();
        splits.sort();
        Ok(STree { n: self.n, splits })
    }

    pub fn to_graph(&self) -> TreeGraph {
        let layout = self.layout();
        let mut tails = vec![0; self.n()];
        for (v, vert) in layout.vertices.iter().enumerate() {
            for f in &vert.flags {
                if f.count_ones() == 1 {
                    tails[min_label_bit(*f) as usize] = v;
                }
            }
        }
        TreeGraph { vertices: layout.vertices.len(), edges: layout.edge_ends.clone(), tails }
    }
}

pub(crate) fn permute_mask(m: Mask, perm: &[usize]) -> Mask {
    let mut out = 0;
    let mut rest = m;
    while rest != 0 {
        let b = rest.trailing_zeros() as usize;
        out |= 1 << (perm[b] - 1);
        rest &= rest - 1;
    }
    out
}

/// `sigma x tau` in the category of `S`-trees and `S`-morphisms.
pub fn tree_product(sigma: &STree, tau: &STree) -> Result<Product> {
    if sigma.n != tau.n {
        return Err(Error::Mismatch(sigma.n(), tau.n()));
    }
    if sigma == tau {
        return Ok(Product::Equal(sigma.clone()));
    }
    for a in &sigma.splits {
        for b in &tau.splits {
            if !compatible(a, b) {
                return Ok(Product::None);
            }
        }
    }
    let union: BTreeSet<Partition2> = sigma.splits.iter().chain(&tau.splits).copied().collect();
    Ok(Product::Tree(STree { n: sigma.n, splits: union.into_iter().collect() }))
}

/// Explicit vertex/edge/tail form of a tree with arbitrary vertex numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// `tails[i]` is the vertex carrying label `i + 1`.
    pub tails: Vec<usize>,
}

impl TreeGraph {
    /// Checks stability and tree shape and returns the canonical form.
    pub fn canonicalize(&self) -> Result<STree> {
        let n = self.tails.len();
        check_n(n)?;
        let nv = self.vertices;
        if nv == 0 || self.edges.len() + 1 != nv {
            return Err(Error::InvalidTree("edge count must be vertex count minus one".into()));
        }
        let mut adj = vec![Vec::new(); nv];
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            if a >= nv || b >= nv || a == b {
                return Err(Error::InvalidTree("bad edge endpoints".into()));
            }
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        let mut valency: Vec<usize> = adj.iter().map(|a| a.len()).collect();
        for &t in &self.tails {
            if t >= nv {
                return Err(Error::InvalidTree("tail on missing vertex".into()));
            }
            valency[t] += 1;
        }
        if valency.iter().any(|&v| v < 3) {
            return Err(Error::InvalidTree("unstable vertex".into()));
        }
        let mut labels_at = vec![0 as Mask; nv];
        for (i, &t) in self.tails.iter().enumerate() {
            labels_at[t] |= 1 << i;
        }
        // connectivity
        let mut seen = vec![false; nv];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidTree("graph is disconnected".into()));
        }
        let mut splits = Vec::with_capacity(self.edges.len());
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            let mut side = 0;
            let mut stack = vec![(a, b)];
            while let Some((v, from)) = stack.pop() {
                side |= labels_at[v];
                for &(w, kk) in &adj[v] {
                    if w != from && kk != k {
                        stack.push((w, v));
                    }
                }
            }
            splits.push(Partition2::new(n, side)?);
        }
        STree::from_partitions(n, splits)
    }
}

/// All stable trees on `n` labels with `r` edges, sorted, built by
/// inserting one edge at a time at a vertex.
pub fn enumerate_stable_trees(n: usize, r: usize) -> Result<Arc<Vec<STree>>> {
    check_n(n)?;
    static CACHE: crate::Memo<(usize, usize), Arc<Vec<STree>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.lock().unwrap().get(&(n, r)) {
        return Ok(v.clone());
    }
    let result: Vec<STree> = if r == 0 {
        vec![STree::corolla(n)?]
    } else if r > n - 3 {
        Vec::new()
    } else {
        let prev = enumerate_stable_trees(n, r - 1)?;
        let mut out = BTreeSet::new();
        for t in prev.iter() {
            for child in one_edge_refinements(t) {
                out.insert(child);
            }
        }
        out.into_iter().collect()
    };
    let arc = Arc::new(result);
    cache.lock().unwrap().entry((n, r)).or_insert_with(|| arc.clone());
    Ok(arc)
}

/// Every tree obtained from `t` by inserting one edge at some vertex.
pub fn one_edge_refinements(t: &STree) -> Vec<STree> {
    let layout = t.layout();
    let mut out = Vec::new();
    for vert in &layout.vertices {
        let k = vert.valency();
        if k < 4 {
            continue;
        }
        // subsets containing flag 0 so each unordered split is seen once
        for bits in 0u64..(1 << (k - 1)) {
            let group_bits = (bits << 1) | 1;
            let size = group_bits.count_ones() as usize;
            if size < 2 || k - size < 2 {
                continue;
            }
            let side = (0..k).filter(|i| group_bits >> i & 1 == 1).fold(0, |acc, i| acc | vert.flags[i]);
            out.push(t.with_split(Partition2::new_unchecked(t.n(), side)));
        }
    }
    out
}

/// Serialized tree: each edge by the smaller side of its partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: usize,
    pub edges: Vec<Vec<usize>>,
}

impl From<&STree> for TreeJson {
    fn from(t: &STree) -> Self {
        TreeJson { n: t.n(), edges: t.splits.iter().map(|p| labels_of(p.smaller_side())).collect() }
    }
}

impl TryFrom<&TreeJson> for STree {
    type Error = Error;
    fn try_from(j: &TreeJson) -> Result<STree> {
        check_n(j.n)?;
        let mut parts = Vec::with_capacity(j.edges.len());
        for e in &j.edges {
            let m = mask_of(e, j.n)?;
            if m.count_ones() as usize != e.len() {
                return Err(Error::Parse("repeated label in edge".into()));
            }
            parts.push(Partition2::new(j.n, m)?);
        }
        STree::from_partitions(j.n, parts)
    }
}

impl STree {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&TreeJson::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<STree> {
        let j: TreeJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        STree::try_from(&j)
    }
}

/// Canonical key of a tree up to relabelling within colour classes:
/// `colour[i]` is the class of label `i + 1`. Two trees get the same key
/// iff a colour-preserving label permutation maps one to the other.
pub fn coloured_shape_key(t: &STree, colour: &[u8]) -> Vec<u8> {
    let layout = t.layout();
    let nv = layout.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in &layout.edge_ends {
        adj[a].push(b);
        adj[b].push(a);
    }
    let tails: Vec<Vec<u8>> = layout
        .vertices
        .iter()
        .map(|v| {
            let mut c: Vec<u8> =
                v.flags.iter().filter(|f| f.count_ones() == 1).map(|f| colour[min_label_bit(*f) as usize]).collect();
            c.sort_unstable();
            c
        })
        .collect();
    fn enc(v: usize, from: usize, adj: &[Vec<usize>], tails: &[Vec<u8>]) -> Vec<u8> {
        let mut kids: Vec<Vec<u8>> = adj[v].iter().filter(|&&w| w != from).map(|&w| enc(w, v, adj, tails)).collect();
        kids.sort();
        let mut out = vec![b'('];
        for c in &tails[v] {
            out.push(b'a' + c);
        }
        for k in kids {
            out.extend(k);
        }
        out.push(b')');
        out
    }
    (0..nv).map(|r| enc(r, usize::MAX, &adj, &tails)).min().expect("nonempty tree")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, side: &[usize]) -> Partition2 {
        Partition2::from_labels(n, side).unwrap()
    }

    fn caterpillar5() -> STree {
        STree::from_partitions(5, vec![p(5, &[1, 2]), p(5, &[4, 5])]).unwrap()
    }

    #[test]
    fn a_values() {
        let s = p(5, &[1, 2]);
        assert_eq!(a_value(&s, &s).unwrap(), 2);
        assert_eq!(a_value(&p(4, &[1, 2]), &p(4, &[1, 3])).unwrap(), 4);
        assert_eq!(a_value(&s, &p(5, &[4, 5])).unwrap(), 3);
        assert!(a_value(&s, &p(4, &[1, 2])).is_err());
    }

    #[test]
    fn partition_parsing() {
        assert_eq!(Partition2::parse("{12|345}", 5).unwrap(), p(5, &[3, 4, 5]));
        assert_eq!(Partition2::parse("{1,2|3,4,5}", 5).unwrap(), p(5, &[1, 2]));
        assert!(Partition2::parse("{1|2345}", 5).is_err());
        assert!(Partition2::parse("{12|34}", 5).is_err());
        assert!(Partition2::parse("{12|245}", 5).is_err());
        assert_eq!(p(5, &[1, 2]).to_string(), "{12|345}");
    }

    #[test]
    fn layout_of_caterpillar() {
        let t = caterpillar5();
        let l = t.layout();
        let mut vals: Vec<usize> = l.vertices.iter().map(|v| v.valency()).collect();
        vals.sort();
        assert_eq!(vals, vec![3, 3, 3]);
        let mid = t.vertex_of_label(&l, 3);
        assert!(l.edge_ends.iter().all(|&(a, b)| a == mid || b == mid));
    }

    #[test]
    fn edge_partitions_of_caterpillar() {
        let t = caterpillar5();
        let parts: Vec<Partition2> = (0..2).map(|k| t.edge_partition(k).unwrap()).collect();
        assert!(parts.contains(&p(5, &[1, 2])));
        assert!(parts.contains(&p(5, &[1, 2, 3])));
        assert_eq!(t.edge_partition(2), Err(Error::NoSuchEdge));
    }

    #[test]
    fn products() {
        let a = STree::from_partitions(5, vec![p(5, &[1, 2])]).unwrap();
        let b = STree::from_partitions(5, vec![p(5, &[4, 5])]).unwrap();
        assert_eq!(tree_product(&a, &b).unwrap(), Product::Tree(caterpillar5()));
        assert_eq!(tree_product(&a, &a).unwrap(), Product::Equal(a.clone()));
        let c = STree::from_partitions(4, vec![p(4, &[1, 2])]).unwrap();
        let d = STree::from_partitions(4, vec![p(4, &[1, 3])]).unwrap();
        assert_eq!(tree_product(&c, &d).unwrap(), Product::None);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_stable_trees(4, 1).unwrap().len(), 3);
        assert_eq!(enumerate_stable_trees(5, 2).unwrap().len(), 15);
        assert!(enumerate_stable_trees(5, 3).unwrap().is_empty());
        assert!(enumerate_stable_trees(5, 2).unwrap().iter().all(|t| t.is_trivalent()));
        assert_eq!(enumerate_stable_trees(6, 0).unwrap().len(), 1);
    }

    #[test]
    fn transplant_moves_one_tail() {
        // {12|345}; the big vertex carries 3,4,5; move tail 3 to the midpoint
        let t = STree::from_partitions(5, vec![p(5, &[1, 2])]).unwrap();
        let l = t.layout();
        let big = t.vertex_of_label(&l, 3);
        let out = t.transplant(&l, 0, big, &[1 << 2]).unwrap();
        assert_eq!(out, caterpillar5());
        let k = out.edge_index(&p(5, &[1, 2, 3])).unwrap();
        assert_eq!(out.contract(k).unwrap(), t);
    }

    #[test]
    fn transplant_errors() {
        let t = STree::from_partitions(5, vec![p(5, &[1, 2])]).unwrap();
        let l = t.layout();
        let big = t.vertex_of_label(&l, 3);
        assert!(t.transplant(&l, 0, big, &[]).is_err());
        let ef = l.edge_flag(&t, 0, big);
        assert!(t.transplant(&l, 0, big, &[ef]).is_err());
        // leaving fewer than two flags behind is unstable
        assert!(t.transplant(&l, 0, big, &[1 << 2, 1 << 3]).is_err());
    }

    #[test]
    fn transplant_leaving_two_flags_gives_trivalent_vertex() {
        let t = STree::from_partitions(6, vec![p(6, &[1, 2])]).unwrap();
        let l = t.layout();
        let big = t.vertex_of_label(&l, 3);
        let out = t.transplant(&l, 0, big, &[1 << 2, 1 << 3]).unwrap();
        let lo = out.layout();
        let v = out.vertex_of_label(&lo, 5);
        assert_eq!(lo.vertices[v].valency(), 3);
    }

    #[test]
    fn forgetting() {
        let t = STree::from_partitions(4, vec![p(4, &[1, 2])]).unwrap();
        let (s, c) = t.forget_and_stabilize(4).unwrap();
        assert_eq!((s.n(), s.degree(), c), (3, 0, 1));
        let (s, c) = STree::corolla(5).unwrap().forget_and_stabilize(2).unwrap();
        assert_eq!((s.n(), s.degree(), c), (4, 0, 0));
        // tail 3 sits on the valency-3 middle vertex of the caterpillar
        let (s, c) = caterpillar5().forget_and_stabilize(3).unwrap();
        assert_eq!((s.degree(), c), (1, 1));
        assert_eq!(s.edges()[0], p(4, &[1, 2]));
        // a valency-4 middle vertex survives
        let t6 = STree::from_partitions(6, vec![p(6, &[1, 2]), p(6, &[5, 6])]).unwrap();
        let (s, c) = t6.forget_and_stabilize(3).unwrap();
        assert_eq!((s.degree(), c), (2, 0));
    }

    #[test]
    fn graph_round_trip_and_relabelled_vertices() {
        let t = caterpillar5();
        let g = t.to_graph();
        assert_eq!(g.canonicalize().unwrap(), t);
        // renumber vertices by reversing
        let nv = g.vertices;
        let rev = |v: usize| nv - 1 - v;
        let g2 = TreeGraph {
            vertices: nv,
            edges: g.edges.iter().map(|&(a, b)| (rev(b), rev(a))).collect(),
            tails: g.tails.iter().map(|&v| rev(v)).collect(),
        };
        assert_eq!(g2.canonicalize().unwrap(), t);
        let bad = TreeGraph { vertices: 3, edges: vec![(0, 1), (1, 2)], tails: vec![0, 0, 2, 2] };
        assert!(bad.canonicalize().is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = caterpillar5();
        let s = t.to_json();
        assert_eq!(s, r#"{"n":5,"edges":[[1,2],[4,5]]}"#);
        assert_eq!(STree::from_json(&s).unwrap(), t);
        assert!(STree::from_json(r#"{"n":4,"edges":[[1,2],[1,3]]}"#).is_err());
        assert!(STree::from_json(r#"{"n":4,"edges":[[1,1]]}"#).is_err());
    }

    #[test]
    fn shape_keys() {
        let col = vec![0u8; 5];
        let a = STree::from_partitions(5, vec![p(5, &[1, 2])]).unwrap();
        let b = STree::from_partitions(5, vec![p(5, &[3, 5])]).unwrap();
        let c = caterpillar5();
        assert_eq!(coloured_shape_key(&a, &col), coloured_shape_key(&b, &col));
        assert_ne!(coloured_shape_key(&a, &col), coloured_shape_key(&c, &col));
        let col2 = vec![1, 0, 0, 0, 0];
        assert_ne!(coloured_shape_key(&a, &col2), coloured_shape_key(&b, &col2));
    }
}
