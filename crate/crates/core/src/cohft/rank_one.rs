use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::strata::reconstruct_class;
use super::{Metric, Potential};
use crate::error::{Error, Result};
use crate::intersect::integrate;
use crate::keelring::{pullback_to_divisor, RingElement, RingElementJson, TensorElement};
use crate::rational::{format_q, parse_q, pow_q, Q};
use crate::taut::{divisors, kappa};
use crate::trees::Partition2;

/// A rank-one theory `c_3, ..., c_nmax`, each `c_n` a class on `n` labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOneTheory {
    classes: Vec<RingElement>,
}

fn inverse_of(x: &RingElement) -> Result<RingElement> {
    let c0 = x.constant_term();
    if c0.is_zero() {
        return Err(Error::Precondition("class with zero constant term is not invertible".into()));
    }
    let n = x.n();
    let inv0 = Q::one() / &c0;
    let u = x.scale(&inv0).sub(&RingElement::one(n)?)?;
    let mut acc = RingElement::one(n)?;
    let mut power = RingElement::one(n)?;
    for _ in 1..=n - 3 {
        power = power.mul(&u)?.scale(&-Q::one());
        acc = acc.add(&power)?;
    }
    Ok(acc.scale(&inv0))
}

impl RankOneTheory {
    /// Classes for `n = 3, 4, ...` in order.
    pub fn new(classes: Vec<RingElement>) -> Result<Self> {
        for (i, c) in classes.iter().enumerate() {
            if c.n() != i + 3 {
                return Err(Error::Mismatch(i + 3, c.n()));
            }
        }
        if classes.is_empty() {
            return Err(Error::Precondition("a theory needs at least c_3".into()));
        }
        Ok(RankOneTheory { classes })
    }

    /// `c_n(t) = t^{n-2}` times the fundamental class.
    pub fn scaling(t: Q, nmax: usize) -> Self {
        let classes =
            (3..=nmax.max(3)).map(|n| RingElement::constant(n, pow_q(&t, n as u32 - 2)).expect("n >= 3")).collect();
        RankOneTheory { classes }
    }

    pub fn identity(nmax: usize) -> Self {
        Self::scaling(Q::one(), nmax)
    }

    pub fn nmax(&self) -> usize {
        self.classes.len() + 2
    }

    pub fn class(&self, n: usize) -> Result<&RingElement> {
        self.classes.get(n.wrapping_sub(3)).ok_or_else(|| Error::Precondition(format!("no class for n = {n}")))
    }

    pub fn classes(&self) -> &[RingElement] {
        &self.classes
    }

    fn common(&self, other: &Self) -> usize {
        self.classes.len().min(other.classes.len())
    }

    /// Cup product `c'_n c''_n` for every `n`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let classes = (0..self.common(other)).map(|i| self.classes[i].mul(&other.classes[i])).collect::<Result<_>>()?;
        Ok(RankOneTheory { classes })
    }

    pub fn is_invertible(&self) -> bool {
        !self.classes[0].constant_term().is_zero()
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_invertible() {
            return Err(Error::Precondition("c_3 has zero constant term".into()));
        }
        Ok(RankOneTheory { classes: self.classes.iter().map(inverse_of).collect::<Result<_>>()? })
    }

    /// The unique `(t, c')` with `c = c(t) (x) c'` and `c'_n` of constant term 1.
    pub fn factorize(&self) -> Result<(Q, Self)> {
        let t = self.classes[0].constant_term();
        if t.is_zero() {
            return Err(Error::Precondition("c_3 has zero constant term".into()));
        }
        let classes =
            self.classes.iter().enumerate().map(|(i, c)| c.scale(&(Q::one() / pow_q(&t, i as u32 + 1)))).collect();
        Ok((t, RankOneTheory { classes }))
    }

    /// `lambda_n = log c_n`; needs every constant term equal to 1.
    pub fn log(&self) -> Result<Vec<RingElement>> {
        self.classes.iter().map(RingElement::log).collect()
    }

    pub fn exp(logs: &[RingElement]) -> Result<Self> {
        Self::new(logs.iter().map(RingElement::exp).collect::<Result<_>>()?)
    }

    /// The twisted theory `exp(sum_a s_a kappa_a)`; `s[0]` is `s_1`.
    pub fn twisted(s: &[Q], nmax: usize) -> Result<Self> {
        let mut logs = Vec::new();
        for n in 3..=nmax {
            let mut l = RingElement::zero(n)?;
            for (i, sa) in s.iter().enumerate() {
                if !sa.is_zero() && i < n - 3 {
                    l = l.add(&kappa(n, i + 1)?.scale(sa))?;
                }
            }
            logs.push(l);
        }
        Self::exp(&logs)
    }

    /// `C_n = int c_n`.
    pub fn coordinates(&self) -> Vec<Q> {
        self.classes.iter().map(integrate).collect()
    }

    /// The theory whose stratum integrals are products of `C_{|v|}` over vertices.
    pub fn from_coordinates(cs: &[Q]) -> Result<Self> {
        let phi = Self::coordinate_potential(cs)?;
        let classes = (3..cs.len() + 3).map(|n| reconstruct_class(&phi, &vec![0; n])).collect::<Result<_>>()?;
        Ok(RankOneTheory { classes })
    }

    fn coordinate_potential(cs: &[Q]) -> Result<Potential> {
        let mut phi = Potential::new(Metric::even(vec![vec![Q::one()]])?, cs.len() + 2);
        for (i, c) in cs.iter().enumerate() {
            phi.set(vec![i as u32 + 3], c.clone())?;
        }
        Ok(phi)
    }

    /// Rank-one potential with `Y_n = C_n`, through `order`.
    pub fn potential(&self, order: usize) -> Result<Potential> {
        let cs = self.coordinates();
        let k = order.saturating_sub(2).min(cs.len());
        let mut phi = Self::coordinate_potential(&cs[..k])?;
        phi = Potential { order: order.max(3), ..phi };
        Ok(phi)
    }

    /// Divisors where `c_n` fails to restrict to `c_{n1+1} (x) c_{n2+1}`.
    pub fn splitting_failures(&self) -> Result<Vec<(usize, Partition2)>> {
        let mut out = Vec::new();
        for n in 4..=self.nmax() {
            for sigma in divisors(n)? {
                let (s1, s2) = sigma.parts();
                let (n1, n2) = (s1.count_ones() as usize + 1, s2.count_ones() as usize + 1);
                let lhs = pullback_to_divisor(&sigma, self.class(n)?)?;
                let rhs = TensorElement::product_of(self.class(n1)?, self.class(n2)?);
                if lhs != rhs {
                    out.push((n, sigma));
                }
            }
        }
        Ok(out)
    }

    /// Whether each `c_n` is fixed by the transposition `(1 2)` and the
    /// cycle `(1 2 ... n)`, which generate the symmetric group.
    pub fn is_symmetric(&self) -> Result<bool> {
        for c in &self.classes {
            let n = c.n();
            let swap: Vec<usize> = (1..=n).map(|i| if i <= 2 { 3 - i } else { i }).collect();
            let cycle: Vec<usize> = (1..=n).map(|i| i % n + 1).collect();
            if c.relabel(&swap)? != *c || c.relabel(&cycle)? != *c {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> RankOneJson {
        RankOneJson::Classes { classes: self.classes.iter().map(RingElementJson::from).collect() }
    }

    pub fn from_json(j: &RankOneJson, nmax: usize) -> Result<Self> {
        match j {
            RankOneJson::Coordinates { cn } => {
                Self::from_coordinates(&cn.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?)
            }
            RankOneJson::Twist { sa } => {
                Self::twisted(&sa.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?, nmax)
            }
            RankOneJson::Classes { classes } => {
                Self::new(classes.iter().map(RingElement::try_from).collect::<Result<_>>()?)
            }
        }
    }

    pub fn coordinates_json(&self) -> RankOneJson {
        RankOneJson::Coordinates { cn: self.coordinates().iter().map(format_q).collect() }
    }
}

/// A serialized rank-one theory: coordinates `C_3, C_4, ...`, twisting
/// parameters `s_1, s_2, ...`, or explicit classes `c_3, c_4, ...`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankOneJson {
    Coordinates {
        #[serde(rename = "Cn")]
        cn: Vec<String>,
    },
    Twist {
        sa: Vec<String>,
    },
    Classes {
        classes: Vec<RingElementJson>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};
    use crate::taut::z;

    #[test]
    fn scaling_group() {
        let a = RankOneTheory::scaling(q(2), 6);
        let b = RankOneTheory::scaling(frac(1, 3), 6);
        assert_eq!(a.tensor(&b).unwrap(), RankOneTheory::scaling(frac(2, 3), 6));
        assert_eq!(a.inverse().unwrap(), RankOneTheory::scaling(frac(1, 2), 6));
        assert!(!RankOneTheory::scaling(q(0), 5).is_invertible());
        assert!(a.splitting_failures().unwrap().is_empty());
    }

    #[test]
    fn identity_from_coordinates() {
        let id = RankOneTheory::from_coordinates(&[q(1), q(0), q(0), q(0)]).unwrap();
        assert_eq!(id, RankOneTheory::identity(6));
    }

    #[test]
    fn coordinates_round_trip() {
        let cs = vec![q(2), q(-1), frac(3, 2), q(5)];
        let t = RankOneTheory::from_coordinates(&cs).unwrap();
        assert_eq!(t.coordinates(), cs);
        assert!(t.splitting_failures().unwrap().is_empty());
        assert!(t.is_symmetric().unwrap());
    }

    #[test]
    fn twisted_theory_logs() {
        let s = vec![q(2), frac(-1, 3), q(1)];
        let t = RankOneTheory::twisted(&s, 6).unwrap();
        assert!(t.splitting_failures().unwrap().is_empty());
        let back = RankOneTheory::exp(&t.log().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn coordinates_are_triangular_in_the_twist() {
        for n in 4..=6usize {
            let base = vec![frac(1, 2), q(-2), q(3)];
            let mut bumped = base.clone();
            bumped[n - 4] += q(5);
            let c0 = RankOneTheory::twisted(&base, n).unwrap().coordinates()[n - 3].clone();
            let c1 = RankOneTheory::twisted(&bumped, n).unwrap().coordinates()[n - 3].clone();
            assert_eq!(c1 - c0, q(5) * z(n).unwrap());
            // s_a with a > n - 3 does not enter C_n
            let mut far = base.clone();
            far.push(q(9));
            assert_eq!(
                RankOneTheory::twisted(&far, n).unwrap().coordinates()[n - 3],
                RankOneTheory::twisted(&base, n).unwrap().coordinates()[n - 3]
            );
        }
    }

    #[test]
    fn json_forms() {
        let j: RankOneJson = serde_json::from_str(r#"{"Cn":["1","0"]}"#).unwrap();
        assert_eq!(RankOneTheory::from_json(&j, 4).unwrap(), RankOneTheory::identity(4));
        let j: RankOneJson = serde_json::from_str(r#"{"sa":["0"]}"#).unwrap();
        assert_eq!(RankOneTheory::from_json(&j, 5).unwrap(), RankOneTheory::identity(5));
        let t = RankOneTheory::scaling(q(3), 5);
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let back: RankOneJson = serde_json::from_str(&s).unwrap();
        assert_eq!(RankOneTheory::from_json(&back, 5).unwrap(), t);
    }
}
