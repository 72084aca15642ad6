use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::intersect::{nonzero_partners, symmetric_orbits};
use crate::linalg::LinearSolver;
use crate::rational::{factorial, Q};
use crate::taut::z;
use crate::trees::{check_n, coloured_shape_key, STree};

/// `A_n(sigma)` on one symmetric-group orbit of trees with `a` edges.
#[derive(Clone, Debug, PartialEq)]
pub struct AOrbit {
    pub representative: STree,
    pub size: usize,
    pub value: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ACoefficients {
    pub n: usize,
    pub a: usize,
    pub orbits: Vec<AOrbit>,
    /// Dimension of the solution space of the defining system.
    pub kernel_dim: usize,
}

/// Invariant weights `A_n(sigma)` on trees with `a` edges such that
/// `<sum A(sigma) sigma, tau>` is 1 when `tau` has a vertex of valency
/// `a + 3` and 0 otherwise, for every `tau` with `n - 3 - a` edges.
pub fn a_coefficients(n: usize, a: usize) -> Result<ACoefficients> {
    check_n(n)?;
    if a == 0 || a > n - 3 {
        return Err(Error::Precondition(format!("need 1 <= a <= {}", n - 3)));
    }
    let unknowns = symmetric_orbits(n, a)?;
    let tests = symmetric_orbits(n, n - 3 - a)?;
    let colour = vec![0u8; n];
    let index: HashMap<Vec<u8>, usize> =
        unknowns.iter().enumerate().map(|(i, o)| (coloured_shape_key(&o[0], &colour), i)).collect();
    let mut m = vec![vec![Q::zero(); unknowns.len()]; tests.len()];
    let mut rhs = Vec::with_capacity(tests.len());
    for (i, orbit) in tests.iter().enumerate() {
        let tau = &orbit[0];
        for (sigma, v) in nonzero_partners(tau) {
            m[i][index[&coloured_shape_key(&sigma, &colour)]] += v;
        }
        let hit = tau.layout().vertices.iter().any(|v| v.valency() == a + 3);
        rhs.push(Q::from_integer((hit as i64).into()));
    }
    let sol = LinearSolver::new(&m, unknowns.len())
        .solve(&rhs)
        .map_err(|e| Error::Inconsistent(format!("A_{n} with a = {a}: {e}")))?;
    let orbits = unknowns
        .into_iter()
        .zip(sol.x)
        .map(|(o, value)| AOrbit { size: o.len(), representative: o[0].clone(), value })
        .collect();
    Ok(ACoefficients { n, a, orbits, kernel_dim: sol.kernel_dim })
}

fn omega_rec(n: usize, a: usize, memo: &mut HashMap<usize, Q>) -> Result<Q> {
    if n == 3 {
        return Ok(Q::from_integer(1.into()));
    }
    if !(n - 3).is_multiple_of(a) {
        return Ok(Q::zero());
    }
    if let Some(v) = memo.get(&n) {
        return Ok(v.clone());
    }
    let za = z(a + 3)?;
    let value = if n == a + 3 {
        za
    } else {
        let m = (n - 3) / a - 1;
        let coeffs = a_coefficients(n, a)?;
        let mut total = Q::zero();
        for orbit in &coeffs.orbits {
            if orbit.value.is_zero() {
                continue;
            }
            let mut term = Q::from_integer(factorial(m as u64));
            for v in orbit.representative.layout().vertices {
                let excess = v.valency() - 3;
                if excess % a != 0 {
                    term = Q::zero();
                    break;
                }
                term /= Q::from_integer(factorial((excess / a) as u64));
                term *= omega_rec(v.valency(), a, memo)?;
            }
            total += term * &orbit.value * Q::from_integer((orbit.size as i64).into());
        }
        za * total
    };
    memo.insert(n, value.clone());
    Ok(value)
}

/// `Omega_n(a)` from the recursion over trees with `a` edges weighted by
/// `A_n`, seeded by `Omega_3 = 1` and `Omega_{a+3}(a) = z_{a+3}`.
pub fn omega_recursion(n: usize, a: usize) -> Result<Q> {
    check_n(n)?;
    if a == 0 {
        return Err(Error::Precondition("a must be at least 1".into()));
    }
    omega_rec(n, a, &mut HashMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};
    use crate::taut::omega_direct;

    #[test]
    fn a4() {
        let c = a_coefficients(4, 1).unwrap();
        assert_eq!(c.orbits.len(), 1);
        assert_eq!((c.orbits[0].size, c.orbits[0].value.clone()), (3, frac(1, 3)));
        assert!(a_coefficients(4, 2).is_err());
    }

    #[test]
    fn a5_systems_solve() {
        a_coefficients(5, 1).unwrap();
        a_coefficients(5, 2).unwrap();
    }

    #[test]
    fn recursion_matches_direct_small() {
        for n in 4..=6 {
            assert_eq!(omega_recursion(n, 1).unwrap(), omega_direct(n, 1).unwrap(), "n={n}");
        }
        assert_eq!(omega_recursion(6, 2).unwrap(), q(0));
        assert_eq!(omega_recursion(5, 2).unwrap(), omega_direct(5, 2).unwrap());
    }
}
