use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_traits::Zero;
use rayon::prelude::*;

use super::{exponent_vectors, indices_of, strata_integral, Exponents, Potential};
use crate::error::{Error, Result};
use crate::intersect::nonzero_partners;
use crate::linalg::LinearSolver;
use crate::rational::Q;
use crate::trees::{coloured_shape_key, enumerate_stable_trees, STree};

struct Orbits {
    reps: Vec<STree>,
    sizes: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
}

fn orbits(n: usize, d: usize, colour: &[u8]) -> Result<Orbits> {
    let mut o = Orbits { reps: Vec::new(), sizes: Vec::new(), index: HashMap::new() };
    for t in enumerate_stable_trees(n, d)?.iter() {
        let key = coloured_shape_key(t, colour);
        match o.index.get(&key) {
            Some(&i) => o.sizes[i] += 1,
            None => {
                o.index.insert(key, o.reps.len());
                o.reps.push(t.clone());
                o.sizes.push(1);
            }
        }
    }
    Ok(o)
}

fn cached_orbits(n: usize, d: usize, colour: &[u8]) -> Result<Arc<Orbits>> {
    static CACHE: crate::Memo<(usize, Vec<u8>), Arc<Orbits>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (d, colour.to_vec());
    if let Some(o) = cache.lock().unwrap().get(&key) {
        return Ok(o.clone());
    }
    let o = Arc::new(orbits(n, d, colour)?);
    cache.lock().unwrap().insert(key, o.clone());
    Ok(o)
}

/// Invariant pairing between orbit sums of degree `d` (rows, by
/// representative) and `n - 3 - d` (columns, full orbit sums).
fn pairing_solver(n: usize, d: usize, colour: &[u8]) -> Result<Arc<LinearSolver>> {
    static CACHE: crate::Memo<(usize, Vec<u8>), Arc<LinearSolver>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (d, colour.to_vec());
    if let Some(s) = cache.lock().unwrap().get(&key) {
        return Ok(s.clone());
    }
    let rows = cached_orbits(n, d, colour)?;
    let cols = cached_orbits(n, n - 3 - d, colour)?;
    let mut k = vec![vec![Q::zero(); cols.reps.len()]; rows.reps.len()];
    for (i, rep) in rows.reps.iter().enumerate() {
        for (m, v) in nonzero_partners(rep) {
            k[i][cols.index[&coloured_shape_key(&m, colour)]] += v;
        }
    }
    let solver = Arc::new(LinearSolver::new(&k, cols.reps.len()));
    cache.lock().unwrap().insert(key, solver.clone());
    Ok(solver)
}

/// `int I'(g') I''(g'')` for inputs listed per label; the stabilizer of the
/// labelling acts on strata and both classes are invariant under it.
fn cup_integral(phi1: &Potential, phi2: &Potential, in1: &[usize], in2: &[usize], colour: &[u8]) -> Result<Q> {
    let n = in1.len();
    let mut total = Q::zero();
    for d in 0..=n - 3 {
        let rows = cached_orbits(n, d, colour)?;
        let f2: Vec<Q> = rows.reps.iter().map(|t| strata_integral(phi2, t, in2)).collect::<Result<_>>()?;
        if f2.iter().all(Q::is_zero) {
            continue;
        }
        let cols = cached_orbits(n, n - 3 - d, colour)?;
        let f1: Vec<Q> = cols.reps.iter().map(|t| strata_integral(phi1, t, in1)).collect::<Result<_>>()?;
        if f1.iter().all(Q::is_zero) {
            continue;
        }
        let sol = pairing_solver(n, d, colour)?
            .solve(&f2)
            .map_err(|e| Error::Inconsistent(format!("no invariant class matches the strata integrals: {e}")))?;
        for ((x, size), f) in sol.x.iter().zip(&cols.sizes).zip(&f1) {
            if !x.is_zero() && !f.is_zero() {
                total += x * Q::from_integer((*size as i64).into()) * f;
            }
        }
    }
    Ok(total)
}

/// Potential of the tensor product theory on `H' (x) H''` (basis `(i, j)`
/// at index `i * rank'' + j`), through total degree `order`.
pub fn tensor_potential(phi1: &Potential, phi2: &Potential, order: usize) -> Result<Potential> {
    if order > phi1.order() || order > phi2.order() {
        return Err(Error::Degree(format!("order {order} beyond a factor's truncation")));
    }
    if phi1.metric().parities().iter().chain(phi2.metric().parities()).any(|&p| p) {
        return Err(Error::Precondition("tensor products are implemented for even theories".into()));
    }
    let r2 = phi2.rank();
    let metric = phi1.metric().tensor(phi2.metric());
    let rank = metric.rank();
    let jobs: Vec<Exponents> = (3..=order as u32).flat_map(|n| exponent_vectors(rank, n)).collect();
    let values: Vec<(Exponents, Q)> = jobs
        .into_par_iter()
        .map(|e| {
            let inputs = indices_of(&e);
            let in1: Vec<usize> = inputs.iter().map(|i| i / r2).collect();
            let in2: Vec<usize> = inputs.iter().map(|i| i % r2).collect();
            // orbit data depends only on the block sizes of the sorted labelling
            let mut colour: Vec<u8> = Vec::with_capacity(inputs.len());
            for (k, i) in inputs.iter().enumerate() {
                colour.push(match k {
                    0 => 0,
                    _ if inputs[k - 1] == *i => colour[k - 1],
                    _ => colour[k - 1] + 1,
                });
            }
            let y = if inputs.len() == 3 {
                phi1.y_indices(&in1)? * phi2.y_indices(&in2)?
            } else {
                cup_integral(phi1, phi2, &in1, &in2, &colour)?
            };
            Ok((e, y))
        })
        .collect::<Result<_>>()?;
    let mut out = Potential::new(metric, order);
    for (e, y) in values {
        out.set(e, y)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{p1_potential, reconstruct_classes, strata::reconstruct_class, wdvv_check, RankOneTheory};
    use super::*;
    use crate::intersect::integrate;
    use crate::rational::q;

    #[test]
    fn identity_is_neutral() {
        let id = RankOneTheory::identity(6).potential(6).unwrap();
        let phi = p1_potential(6).unwrap();
        let t = tensor_potential(&id, &phi, 6).unwrap();
        assert_eq!(t.terms(), phi.terms());
        let t = tensor_potential(&phi, &id, 6).unwrap();
        assert_eq!(t.terms(), phi.terms());
    }

    #[test]
    fn scalings_multiply() {
        let a = RankOneTheory::scaling(q(2), 6).potential(6).unwrap();
        let b = RankOneTheory::scaling(q(3), 6).potential(6).unwrap();
        let ab = RankOneTheory::scaling(q(6), 6).potential(6).unwrap();
        assert_eq!(tensor_potential(&a, &b, 6).unwrap(), ab);
    }

    #[test]
    fn classes_of_a_tensor_product_are_cup_products() {
        let phi = p1_potential(5).unwrap();
        let t = tensor_potential(&phi, &phi, 5).unwrap();
        assert!(wdvv_check(&t, 5).unwrap().passed());
        for n in 4..=5 {
            for (e, c) in reconstruct_classes(&t, n).unwrap() {
                let inputs = indices_of(&e);
                let in1: Vec<usize> = inputs.iter().map(|i| i / 2).collect();
                let in2: Vec<usize> = inputs.iter().map(|i| i % 2).collect();
                let cup = reconstruct_class(&phi, &in1).unwrap().mul(&reconstruct_class(&phi, &in2).unwrap()).unwrap();
                assert_eq!(c, cup);
                assert_eq!(integrate(&c), integrate(&cup));
            }
        }
    }
}
