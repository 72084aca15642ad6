use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{binomial, factorial, Q};

/// `v_4, ..., v_nmax` from the quadratic recursion seeded by `v_3 = 1`.
///
/// The sum is halved: each splitting is counted from both ends.
pub fn wp_volumes(nmax: usize) -> Result<Vec<Q>> {
    if nmax < 4 {
        return Err(Error::Precondition("nmax must be at least 4".into()));
    }
    let mut v: Vec<Q> = vec![Q::zero(), Q::zero(), Q::zero(), Q::from_integer(1.into())];
    for n in 4..=nmax as i64 {
        let mut s = Q::zero();
        for i in 1..=n - 3 {
            let w = Q::new((i * (n - i - 2)).into(), (n - 1).into());
            s += w
                * Q::from_integer(binomial(n - 4, i - 1) * binomial(n, i + 1))
                * &v[(i + 2) as usize]
                * &v[(n - i) as usize];
        }
        v.push(s / Q::from_integer(2.into()));
    }
    Ok(v.split_off(4))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatoneReport {
    pub order: usize,
    /// Lowest power of `x` with a nonzero residual, and the residual.
    pub failure: Option<(usize, Q)>,
}

impl MatoneReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn mul(a: &[Q], b: &[Q], len: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn deriv(a: &[Q]) -> Vec<Q> {
    (1..a.len()).map(|k| &a[k] * Q::from_integer((k as i64).into())).chain(std::iter::once(Q::zero())).collect()
}

/// Checks `x (x - g) g'' = x g'^2 + (x - g) g'` through `x^order` for
/// `g = x^2 (x^{-1} Phi')'`, `Phi = sum_{n>=3} v_n x^n / (n! (n-3)!)`,
/// with `volumes[k]` holding `v_{k+3}`.
pub fn matone_check_with(volumes: &[Q], order: usize) -> MatoneReport {
    let len = order + 1;
    // g = sum v_n (n-2) x^{n-1} / ((n-1)! (n-3)!)
    let mut g = vec![Q::zero(); len];
    for (k, v) in volumes.iter().enumerate() {
        let n = k as u64 + 3;
        let p = (n - 1) as usize;
        if p < len {
            g[p] = v * Q::from_integer(((n - 2) as i64).into()) / Q::from_integer(factorial(n - 1) * factorial(n - 3));
        }
    }
    let mut x = vec![Q::zero(); len];
    if len > 1 {
        x[1] = Q::from_integer(1.into());
    }
    let x_minus_g: Vec<Q> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    let g1 = deriv(&g);
    let g2 = deriv(&g1);
    let lhs = mul(&mul(&x, &x_minus_g, len), &g2, len);
    let rhs: Vec<Q> =
        mul(&x, &mul(&g1, &g1, len), len).iter().zip(mul(&x_minus_g, &g1, len)).map(|(a, b)| a + b).collect();
    let failure = (0..len).find(|&k| lhs[k] != rhs[k]).map(|k| (k, &lhs[k] - &rhs[k]));
    MatoneReport { order, failure }
}

/// The ODE check with volumes from [`wp_volumes`]; coefficients through
/// `x^order` involve `v_n` for `n <= order + 1`.
pub fn matone_check(order: usize) -> Result<MatoneReport> {
    let mut v = vec![Q::from_integer(1.into())];
    v.extend(wp_volumes((order + 1).max(4))?);
    Ok(matone_check_with(&v, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn first_volumes() {
        assert_eq!(wp_volumes(7).unwrap(), vec![q(1), q(5), q(61), q(1379)]);
        assert!(wp_volumes(3).is_err());
    }

    #[test]
    fn ode_holds_and_detects_perturbation() {
        assert!(matone_check(7).unwrap().passed());
        assert!(matone_check(12).unwrap().passed());
        let mut v = vec![q(1)];
        v.extend(wp_volumes(13).unwrap());
        v[3] += q(1); // v_6
        let r = matone_check_with(&v, 12);
        assert!(!r.passed());
    }
}
