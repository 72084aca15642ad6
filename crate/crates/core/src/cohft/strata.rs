use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::{exponent_vectors, indices_of, Exponents, Potential};
use crate::error::{Error, Result};
use crate::intersect::nonzero_partners;
use crate::keelring::{normal_basis, RingElement};
use crate::linalg::LinearSolver;
use crate::rational::Q;
use crate::trees::{check_n, enumerate_stable_trees, Partition2, STree};

enum Slot {
    Tail(usize),
    /// Edge index and whether this end carries the first Casimir factor.
    Edge(usize, bool),
}

/// Integral of `I_n(g_{inputs[0]} ... g_{inputs[n-1]})` over the stratum of
/// `tree`: the vertex correlators contracted along edges with the Casimir.
pub fn strata_integral(phi: &Potential, tree: &STree, inputs: &[usize]) -> Result<Q> {
    let n = tree.n();
    if inputs.len() != n {
        return Err(Error::Precondition(format!("{} inputs for {n} labels", inputs.len())));
    }
    let layout = tree.layout();
    let mut vertices: Vec<Vec<Slot>> = Vec::with_capacity(layout.vertices.len());
    for (v, vert) in layout.vertices.iter().enumerate() {
        if vert.valency() > phi.order() {
            return Err(Error::Degree(format!("vertex of valency {} beyond order {}", vert.valency(), phi.order())));
        }
        let mut slots = Vec::with_capacity(vert.valency());
        for &f in &vert.flags {
            if f.count_ones() == 1 {
                slots.push(Slot::Tail(f.trailing_zeros() as usize));
            } else {
                let k = tree.edge_index(&Partition2::new_unchecked(n, f)).expect("flag of an edge");
                slots.push(Slot::Edge(k, layout.edge_ends[k].0 == v));
            }
        }
        vertices.push(slots);
    }
    let cas = phi.metric().casimir();
    let edges = tree.degree();
    let mut choice = vec![0usize; edges];
    let mut total = Q::zero();
    loop {
        let mut term = Q::from_integer(1.into());
        for &c in &choice {
            term *= &cas[c].2;
        }
        for slots in &vertices {
            let idx: Vec<usize> = slots
                .iter()
                .map(|s| match s {
                    Slot::Tail(l) => inputs[*l],
                    Slot::Edge(k, first) => {
                        let (e, f, _) = &cas[choice[*k]];
                        if *first {
                            *e
                        } else {
                            *f
                        }
                    }
                })
                .collect();
            term *= phi.y_indices(&idx)?;
            if term.is_zero() {
                break;
            }
        }
        total += term;
        // next Casimir assignment
        let mut k = 0;
        while k < edges {
            choice[k] += 1;
            if choice[k] < cas.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == edges {
            break;
        }
    }
    Ok(total)
}

/// Strata integrals over every stable tree on `inputs.len()` labels.
pub fn strata_integrals(phi: &Potential, inputs: &[usize]) -> Result<BTreeMap<STree, Q>> {
    let n = inputs.len();
    check_n(n)?;
    let mut out = BTreeMap::new();
    for d in 0..=n - 3 {
        for t in enumerate_stable_trees(n, d)?.iter() {
            out.insert(t.clone(), strata_integral(phi, t, inputs)?);
        }
    }
    Ok(out)
}

/// The class `I_n(inputs)` whose integral over every stratum matches
/// [`strata_integral`]; fails if the constraints are inconsistent.
pub fn reconstruct_class(phi: &Potential, inputs: &[usize]) -> Result<RingElement> {
    let n = inputs.len();
    check_n(n)?;
    let mut terms = Vec::new();
    for d in 0..=n - 3 {
        let tests = enumerate_stable_trees(n, n - 3 - d)?;
        let rhs: Vec<Q> = tests.iter().map(|t| strata_integral(phi, t, inputs)).collect::<Result<_>>()?;
        if rhs.iter().all(Q::is_zero) {
            continue;
        }
        let basis = normal_basis(n, d)?;
        let col: HashMap<&STree, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut a = vec![vec![Q::zero(); basis.len()]; tests.len()];
        for (i, t) in tests.iter().enumerate() {
            for (m, v) in nonzero_partners(t) {
                if let Some(&j) = col.get(&m) {
                    a[i][j] = v;
                }
            }
        }
        let sol = LinearSolver::new(&a, basis.len())
            .solve(&rhs)
            .map_err(|e| Error::Inconsistent(format!("strata integrals of degree {d} admit no class: {e}")))?;
        terms.extend(basis.into_iter().zip(sol.x).filter(|(_, x)| !x.is_zero()));
    }
    RingElement::from_terms(n, terms)
}

/// Classes `I_n` for every input multiset of size `n`, keyed by exponent vector.
pub fn reconstruct_classes(phi: &Potential, n: usize) -> Result<Vec<(Exponents, RingElement)>> {
    check_n(n)?;
    exponent_vectors(phi.rank(), n as u32)
        .into_iter()
        .map(|e| {
            let c = reconstruct_class(phi, &indices_of(&e))?;
            Ok((e, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{p1_potential, Metric, RankOneTheory};
    use super::*;
    use crate::intersect::integrate;
    use crate::keelring::pullback_to_divisor;
    use crate::keelring::TensorElement;
    use crate::rational::{frac, q};
    use crate::taut::divisors;

    #[test]
    fn one_vertex_is_the_correlator() {
        let phi = p1_potential(6).unwrap();
        let t = STree::corolla(5).unwrap();
        assert_eq!(strata_integral(&phi, &t, &[1, 1, 1, 1, 1]).unwrap(), q(1));
        assert_eq!(strata_integral(&phi, &t, &[0, 1, 1, 1, 1]).unwrap(), q(0));
    }

    #[test]
    fn one_edge_with_diagonal_metric() {
        // rank 2, g = diag(1, 2), Y3(000) = 1, Y3(011) = 3, Y3(111) = 5
        let g = Metric::even(vec![vec![q(1), q(0)], vec![q(0), q(2)]]).unwrap();
        let mut phi = Potential::new(g, 4);
        phi.set(vec![3, 0], q(1)).unwrap();
        phi.set(vec![1, 2], q(3)).unwrap();
        phi.set(vec![0, 3], q(5)).unwrap();
        let t = STree::from_partitions(4, vec![Partition2::from_labels(4, &[1, 2]).unwrap()]).unwrap();
        // Y(0,0,e) g^{ee} Y(e,1,1) = 1*1*3 + 0
        assert_eq!(strata_integral(&phi, &t, &[0, 0, 1, 1]).unwrap(), q(3));
        // Y(1,1,e) g^{ee} Y(e,1,1) = 3*1*3 + 5*(1/2)*5
        assert_eq!(strata_integral(&phi, &t, &[1, 1, 1, 1]).unwrap(), q(9) + frac(25, 2));
    }

    #[test]
    fn rank_one_products() {
        let c = RankOneTheory::from_coordinates(&[q(2), q(3), q(5), q(7)]).unwrap();
        let phi = c.potential(6).unwrap();
        let t = STree::from_partitions(6, vec![Partition2::from_labels(6, &[1, 2]).unwrap()]).unwrap();
        // vertices of valency 3 and 5
        assert_eq!(strata_integral(&phi, &t, &[0; 6]).unwrap(), q(2) * q(5));
    }

    #[test]
    fn p1_classes_at_n4() {
        let phi = p1_potential(6).unwrap();
        let c = reconstruct_class(&phi, &[1, 1, 1, 1]).unwrap();
        assert_eq!(integrate(&c), q(1));
        for d in divisors(4).unwrap() {
            let m = STree::from_partitions(4, vec![d]).unwrap();
            let on_d = integrate(&c.mul(&RingElement::monomial(m.clone())).unwrap());
            assert_eq!(on_d, strata_integral(&phi, &m, &[1, 1, 1, 1]).unwrap());
        }
    }

    #[test]
    fn p1_classes_split() {
        let phi = p1_potential(7).unwrap();
        let cas = phi.metric().casimir();
        for n in 4..=6 {
            for (e, c) in reconstruct_classes(&phi, n).unwrap() {
                let inputs = indices_of(&e);
                for sigma in divisors(n).unwrap() {
                    let (s1, s2) = sigma.parts();
                    let side =
                        |s: u64| -> Vec<usize> { (0..n).filter(|l| s >> l & 1 == 1).map(|l| inputs[l]).collect() };
                    let mut expect: Option<TensorElement> = None;
                    for (a, b, g) in &cas {
                        let mut left = side(s1);
                        left.push(*a);
                        let mut right = side(s2);
                        right.push(*b);
                        let t = TensorElement::product_of(
                            &reconstruct_class(&phi, &left).unwrap().scale(g),
                            &reconstruct_class(&phi, &right).unwrap(),
                        );
                        expect = Some(match expect {
                            None => t,
                            Some(x) => x.add(&t),
                        });
                    }
                    assert_eq!(pullback_to_divisor(&sigma, &c).unwrap(), expect.unwrap(), "n={n} {e:?} {sigma}");
                }
            }
        }
    }
}
