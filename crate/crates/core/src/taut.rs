//! Psi and kappa classes, forgetful pushforward, and the integrals `z_n`
//! and `Omega_n(a)`.

use std::sync::{Arc, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intersect::integrate;
use crate::keelring::{
    add_term, mul_comb, pullback_to_divisor, Combination, RingElement, RingElementJson, TensorElement,
};
use crate::rational::{pow_q, Q};
use crate::trees::{check_n, full_mask, Mask, Partition2, STree};

fn psi_comb(n: usize, i: usize) -> Result<Combination> {
    check_n(n)?;
    if i == 0 || i > n {
        return Err(Error::Label { label: i, n });
    }
    let mut c = Combination::new();
    let bit: Mask = 1 << (i - 1);
    let full = full_mask(n);
    let denom = ((n - 1) * (n - 2)) as i64;
    for s in 0..=full {
        if s & bit == 0 {
            continue;
        }
        let (k, rest) = (s.count_ones() as usize, (full ^ s).count_ones() as i64);
        if k < 2 || rest < 2 {
            continue;
        }
        let p = Partition2::new_unchecked(n, s);
        let m = STree::from_partitions(n, vec![p])?;
        add_term(&mut c, m, Q::new((rest * (rest - 1)).into(), denom.into()));
    }
    Ok(c)
}

/// `psi_i` on `n` labels as a weighted sum of boundary divisors through `i`.
pub fn psi(n: usize, i: usize) -> Result<RingElement> {
    static CACHE: crate::Memo<(usize, usize), RingElement> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(x) = cache.lock().unwrap().get(&(n, i)) {
        return Ok(x.clone());
    }
    let x = RingElement::from_combination(n, psi_comb(n, i)?);
    cache.lock().unwrap().insert((n, i), x.clone());
    Ok(x)
}

fn push_comb(c: &Combination, label: usize) -> Result<Combination> {
    let mut out = Combination::new();
    for (m, x) in c {
        let (t, lost) = m.forget_and_stabilize(label)?;
        if lost == 1 {
            add_term(&mut out, t, x.clone());
        }
    }
    Ok(out)
}

/// Pushforward along the map forgetting `label` (higher labels shift down).
pub fn pushforward_forget(x: &RingElement, label: usize) -> Result<RingElement> {
    let n = x.n();
    if n < 4 {
        return Err(Error::Precondition("pushforward needs at least 4 labels".into()));
    }
    if label == 0 || label > n {
        return Err(Error::Label { label, n });
    }
    let terms: Combination = x.terms().iter().map(|(m, c)| (m.clone(), c.clone())).collect();
    Ok(RingElement::from_combination(n - 1, push_comb(&terms, label)?))
}

/// `kappa_a` on `n` labels: the pushforward of `psi_{n+1}^{a+1}`.
pub fn kappa(n: usize, a: usize) -> Result<RingElement> {
    check_n(n)?;
    if a == 0 {
        return Err(Error::Precondition("kappa index must be at least 1".into()));
    }
    if a > n - 3 {
        return RingElement::zero(n);
    }
    static CACHE: crate::Memo<(usize, usize), Arc<RingElement>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(x) = cache.lock().unwrap().get(&(n, a)) {
        return Ok((**x).clone());
    }
    // multiplied out unreduced on n + 1 labels; reduction happens after pushing down
    let p = psi_comb(n + 1, n + 1)?;
    let mut acc = p.clone();
    for _ in 0..a {
        acc = mul_comb(&acc, &p);
    }
    let x = RingElement::from_combination(n, push_comb(&acc, n + 1)?);
    cache.lock().unwrap().insert((n, a), Arc::new(x.clone()));
    Ok(x)
}

/// Which tautological class a [`TautClass`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TautKind {
    Psi { label: usize },
    Kappa { a: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TautClass {
    pub kind: TautKind,
    pub class: RingElement,
}

impl TautClass {
    pub fn psi(n: usize, i: usize) -> Result<Self> {
        Ok(TautClass { kind: TautKind::Psi { label: i }, class: psi(n, i)? })
    }

    pub fn kappa(n: usize, a: usize) -> Result<Self> {
        Ok(TautClass { kind: TautKind::Kappa { a }, class: kappa(n, a)? })
    }

    pub fn to_json(&self) -> TautClassJson {
        TautClassJson { kind: self.kind, class: RingElementJson::from(&self.class) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TautClassJson {
    #[serde(flatten)]
    pub kind: TautKind,
    pub class: RingElementJson,
}

/// One failed instance of the logarithmic splitting identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitFailure {
    pub n: usize,
    pub divisor: Partition2,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LogReport {
    pub checked: usize,
    pub failures: Vec<SplitFailure>,
}

impl LogReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All boundary divisors on `n` labels.
pub fn divisors(n: usize) -> Result<Vec<Partition2>> {
    Ok(crate::trees::enumerate_stable_trees(n, 1)?.iter().map(|t| t.edges()[0]).collect())
}

/// Whether `x` restricts to every boundary divisor as `x' (x) 1 + 1 (x) x''`.
pub fn splits_logarithmically(
    family: &dyn Fn(usize) -> Result<RingElement>,
    n: usize,
    sigma: &Partition2,
) -> Result<bool> {
    let (s1, s2) = sigma.parts();
    let (n1, n2) = (s1.count_ones() as usize + 1, s2.count_ones() as usize + 1);
    let lhs = pullback_to_divisor(sigma, &family(n)?)?;
    let rhs = TensorElement::product_of(&family(n1)?, &RingElement::one(n2)?)
        .add(&TensorElement::product_of(&RingElement::one(n1)?, &family(n2)?));
    Ok(lhs == rhs)
}

/// Checks the logarithmic splitting identity for `3 < n <= nmax` and every divisor.
pub fn check_logarithmic(family: &dyn Fn(usize) -> Result<RingElement>, nmax: usize) -> Result<LogReport> {
    let mut report = LogReport::default();
    for n in 4..=nmax {
        for sigma in divisors(n)? {
            report.checked += 1;
            if !splits_logarithmically(family, n, &sigma)? {
                report.failures.push(SplitFailure { n, divisor: sigma });
            }
        }
    }
    Ok(report)
}

/// `z_n = int kappa_{n-3}`, with `z_3 = 1`.
pub fn z(n: usize) -> Result<Q> {
    check_n(n)?;
    if n == 3 {
        return Ok(Q::one());
    }
    Ok(integrate(&kappa(n, n - 3)?))
}

/// `int kappa_a^{(n-3)/a}`, or 0 when `a` does not divide `n - 3`.
pub fn omega_direct(n: usize, a: usize) -> Result<Q> {
    check_n(n)?;
    if a == 0 {
        return Err(Error::Precondition("a must be at least 1".into()));
    }
    if !(n - 3).is_multiple_of(a) {
        return Ok(Q::zero());
    }
    let k = kappa(n, a)?;
    Ok(integrate(&k.pow(((n - 3) / a) as u32)?))
}

/// Constant `c` in `omega_WP = c * pi^2 * kappa_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WpNormalization {
    pub coefficient: Q,
}

impl Default for WpNormalization {
    fn default() -> Self {
        WpNormalization { coefficient: Q::from_integer(2.into()) }
    }
}

impl WpNormalization {
    /// Rational factor multiplying `pi^{2(n-3)}` in `int omega_WP^{n-3}`.
    pub fn volume_coefficient(&self, n: usize) -> Result<Q> {
        check_n(n)?;
        let e = (n - 3) as u32;
        Ok(pow_q(&self.coefficient, e) * omega_direct(n, 1)?)
    }
}

/// Integral of a product of psi classes, one factor `psi_i^{e_i}` per entry.
pub fn psi_integral(n: usize, exponents: &[usize]) -> Result<Q> {
    if exponents.len() != n {
        return Err(Error::Precondition("one exponent per label".into()));
    }
    if exponents.iter().sum::<usize>() != n - 3 {
        return Ok(Q::zero());
    }
    let mut acc = RingElement::one(n)?;
    for (i, &e) in exponents.iter().enumerate() {
        if e > 0 {
            acc = acc.mul(&psi(n, i + 1)?.pow(e as u32)?)?;
        }
    }
    Ok(integrate(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};

    #[test]
    fn psi_small() {
        assert!(psi(3, 1).unwrap().is_zero());
        let p = psi(4, 1).unwrap();
        assert_eq!(integrate(&p), q(1));
        let d = |s: &[usize]| RingElement::divisor(&Partition2::from_labels(4, s).unwrap());
        let expect = d(&[1, 2]).add(&d(&[1, 3])).unwrap().add(&d(&[1, 4])).unwrap().scale(&frac(1, 3));
        assert_eq!(p, expect);
        assert_eq!(integrate(&psi(5, 1).unwrap().pow(2).unwrap()), q(1));
        assert!(psi(4, 5).is_err());
    }

    #[test]
    fn pushforward_basics() {
        let d = RingElement::divisor(&Partition2::from_labels(4, &[1, 2]).unwrap());
        assert_eq!(pushforward_forget(&d, 4).unwrap(), RingElement::one(3).unwrap());
        assert!(pushforward_forget(&RingElement::one(5).unwrap(), 5).unwrap().is_zero());
    }

    #[test]
    fn projection_formula() {
        for n in 5..=6 {
            for m in crate::trees::enumerate_stable_trees(n, n - 3).unwrap().iter() {
                let x = RingElement::monomial(m.clone());
                for label in 1..=n {
                    assert_eq!(integrate(&pushforward_forget(&x, label).unwrap()), integrate(&x));
                }
            }
        }
    }

    #[test]
    fn kappa_small() {
        assert_eq!(integrate(&kappa(4, 1).unwrap()), q(1));
        assert!(kappa(4, 2).unwrap().is_zero());
        assert!(kappa(4, 0).is_err());
        let k = kappa(5, 1).unwrap();
        assert_eq!(k.relabel(&[2, 3, 4, 5, 1]).unwrap(), k);
        assert_eq!(k.relabel(&[2, 1, 3, 4, 5]).unwrap(), k);
    }

    #[test]
    fn z_and_omega_small() {
        assert_eq!(z(3).unwrap(), q(1));
        assert_eq!(z(4).unwrap(), q(1));
        assert_eq!(omega_direct(4, 1).unwrap(), q(1));
        assert_eq!(omega_direct(5, 1).unwrap(), q(5));
        assert_eq!(omega_direct(5, 2).unwrap(), z(5).unwrap());
        assert_eq!(omega_direct(6, 2).unwrap(), q(0));
    }

    #[test]
    fn psi_is_not_logarithmic() {
        let r = check_logarithmic(&|n| psi(n, 1), 5).unwrap();
        assert!(!r.passed());
        let k = check_logarithmic(&|n| kappa(n, 1), 5).unwrap();
        assert!(k.passed(), "{:?}", k.failures);
    }

    #[test]
    fn json_tag() {
        let t = TautClass::psi(4, 2).unwrap();
        let j = serde_json::to_value(t.to_json()).unwrap();
        assert_eq!(j["kind"], "psi");
        assert_eq!(j["label"], 2);
    }

    #[test]
    fn wp_default_scaling() {
        assert_eq!(WpNormalization::default().volume_coefficient(5).unwrap(), q(20));
    }
}
