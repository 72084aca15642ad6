//! Acceptance harness: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use keel::cohft::{
    compare_p1xp1, matone_check, omega_recursion, p1_potential, tensor_potential, wdvv_check, wp_volumes, RankOneTheory,
};
use keel::intersect::{betti, pair_kaufmann, pair_oracle};
use keel::keelring::{admissible_choices, classify, mul_divisor_terms_with, DivisorCase};
use keel::rational::{factorial, frac, q};
use keel::taut::{check_logarithmic, divisors, kappa, omega_direct, psi_integral};
use keel::trees::{enumerate_stable_trees, Partition2, STree};
use keel::{RingElement, Q};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn all_trees(n: usize) -> Vec<STree> {
    (0..=n - 3).flat_map(|r| enumerate_stable_trees(n, r).unwrap().iter().cloned().collect::<Vec<_>>()).collect()
}

fn timed(limit: Duration, start: Instant, detail: String) -> Outcome {
    let el = start.elapsed();
    if el < limit {
        Ok(format!("{detail} in {el:.2?}"))
    } else {
        Err(format!("{detail} but took {el:.2?}, limit {limit:?}"))
    }
}

fn c1_volumes() -> Outcome {
    let start = Instant::now();
    let v = wp_volumes(7).map_err(fail)?;
    let want = vec![q(1), q(5), q(61), q(1379)];
    if v != want {
        return Err(format!("got {v:?}"));
    }
    timed(Duration::from_secs(1), start, "v4..v7 = 1, 5, 61, 1379".into())
}

fn c2_matone() -> Outcome {
    let start = Instant::now();
    let r = matone_check(12).map_err(fail)?;
    if let Some((k, res)) = r.failure {
        return Err(format!("residual {res} at x^{k}"));
    }
    timed(Duration::from_secs(1), start, "ODE holds through x^12".into())
}

fn c3_kaufmann() -> Outcome {
    let mut pairs = 0usize;
    for n in 4..=7 {
        for r in 0..=n - 3 {
            let left = enumerate_stable_trees(n, r).map_err(fail)?;
            let right = enumerate_stable_trees(n, n - 3 - r).map_err(fail)?;
            let bad = left.par_iter().find_map_any(|a| {
                right.iter().find_map(|b| {
                    let k = pair_kaufmann(a, b).map_err(fail);
                    let o = pair_oracle(a, b).map_err(fail);
                    match (k, o) {
                        (Ok(k), Ok(o)) if k == o => None,
                        (k, o) => Some(format!("n={n} {a:?} {b:?}: {k:?} vs {o:?}")),
                    }
                })
            });
            if let Some(b) = bad {
                return Err(b);
            }
            pairs += left.len() * right.len();
        }
    }
    Ok(format!("{pairs} pairs agree for n <= 7"))
}

fn c4_betti() -> Outcome {
    let mut shown = Vec::new();
    for n in 5..=7 {
        let b: Vec<usize> = (0..=n - 3).map(|r| betti(n, r)).collect::<keel::Result<_>>().map_err(fail)?;
        shown.push(format!("n={n} {b:?}"));
        let expect: Option<Vec<usize>> = match n {
            5 => Some(vec![1, 5, 1]),
            6 => Some(vec![1, 16, 16, 1]),
            _ => None,
        };
        if expect.is_some_and(|e| e != b) {
            return Err(format!("n={n}: {b:?}"));
        }
    }
    Ok(shown.join(", "))
}

fn divisor_commute(sigma: &Partition2, tau: &Partition2, m: &STree) -> keel::Result<bool> {
    let x = RingElement::monomial(m.clone());
    Ok(x.mul_divisor(sigma)?.mul_divisor(tau)? == x.mul_divisor(tau)?.mul_divisor(sigma)?)
}

fn flag_independent(sigma: &Partition2, m: &STree) -> keel::Result<bool> {
    let mut first: Option<RingElement> = None;
    for c in admissible_choices(sigma, m) {
        let v = RingElement::from_terms(m.n(), mul_divisor_terms_with(sigma, m, Some(c))?)?;
        match &first {
            None => first = Some(v),
            Some(f) if *f != v => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

fn c5_commutativity() -> Outcome {
    let mut commuting = 0usize;
    let mut squares = 0usize;
    for n in 4..=5 {
        let ds = divisors(n).map_err(fail)?;
        for m in all_trees(n) {
            for (i, s) in ds.iter().enumerate() {
                if classify(s, &m) == DivisorCase::Square {
                    squares += 1;
                    if !flag_independent(s, &m).map_err(fail)? {
                        return Err(format!("choice dependence n={n} {s:?} {m:?}"));
                    }
                }
                for t in &ds[i + 1..] {
                    commuting += 1;
                    if !divisor_commute(s, t, &m).map_err(fail)? {
                        return Err(format!("non-commuting n={n} {s:?} {t:?} {m:?}"));
                    }
                }
            }
        }
    }
    let n = 6;
    let ds = divisors(n).map_err(fail)?;
    let trees = all_trees(n);
    let mut rng = StdRng::seed_from_u64(0x6b65656c);
    let mut random = 0usize;
    while random < 1000 {
        let m = &trees[rng.gen_range(0..trees.len())];
        let s = &ds[rng.gen_range(0..ds.len())];
        let t = &ds[rng.gen_range(0..ds.len())];
        if !divisor_commute(s, t, m).map_err(fail)? {
            return Err(format!("non-commuting n=6 {s:?} {t:?} {m:?}"));
        }
        if m.degree() > 0 {
            let e = &m.edges()[rng.gen_range(0..m.degree())];
            if !flag_independent(e, m).map_err(fail)? {
                return Err(format!("choice dependence n=6 {e:?} {m:?}"));
            }
        }
        random += 1;
    }
    Ok(format!("{commuting} exhaustive pairs, {squares} square cases (n <= 5), {random} random cases (n = 6)"))
}

fn c6_keel_relations() -> Outcome {
    let mut checked = 0usize;
    for n in 4..=6 {
        let ds = divisors(n).map_err(fail)?;
        let trees = all_trees(n);
        let bit = |l: usize| 1u64 << (l - 1);
        for i in 1..=n {
            for j in i + 1..=n {
                for k in j + 1..=n {
                    for l in k + 1..=n {
                        let mut plus = Vec::new();
                        let mut minus = Vec::new();
                        for d in &ds {
                            if d.separates(bit(i) | bit(j), bit(k) | bit(l)) {
                                plus.push(*d);
                            }
                            if d.separates(bit(i) | bit(k), bit(j) | bit(l)) {
                                minus.push(*d);
                            }
                        }
                        for m in &trees {
                            let x = RingElement::monomial(m.clone());
                            let mut acc = RingElement::zero(n).map_err(fail)?;
                            for d in &plus {
                                acc = acc.add(&x.mul_divisor(d).map_err(fail)?).map_err(fail)?;
                            }
                            for d in &minus {
                                acc = acc.sub(&x.mul_divisor(d).map_err(fail)?).map_err(fail)?;
                            }
                            if !acc.is_zero() {
                                return Err(format!("R_{i}{j}{k}{l} * {m:?} = {acc:?}"));
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{checked} relation-monomial products vanish for n <= 6"))
}

fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for a in 0..=total {
        for mut rest in compositions(n - 1, total - a) {
            rest.insert(0, a);
            out.push(rest);
        }
    }
    out
}

fn c7_psi() -> Outcome {
    let mut checked = 0usize;
    for n in 4..=7 {
        for e in compositions(n, n - 3) {
            let got = psi_integral(n, &e).map_err(fail)?;
            let want = e
                .iter()
                .fold(Q::from_integer(factorial(n as u64 - 3)), |acc, &a| acc / Q::from_integer(factorial(a as u64)));
            if got != want {
                return Err(format!("n={n} {e:?}: {got} vs {want}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} exponent vectors for n <= 7"))
}

fn c8_log_splitting() -> Outcome {
    let mut checked = 0usize;
    for a in 1..=3 {
        let r = check_logarithmic(&|n| kappa(n, a), 7).map_err(fail)?;
        if !r.passed() {
            return Err(format!("kappa_{a}: {:?}", r.failures));
        }
        checked += r.checked;
    }
    Ok(format!("kappa_1..3 split on {checked} divisors, n <= 7"))
}

fn c9_omega() -> Outcome {
    let mut cases: Vec<(usize, usize)> = (4..=7).map(|n| (n, 1)).collect();
    cases.push((7, 2));
    let mut shown = Vec::new();
    for (n, a) in cases {
        let rec = omega_recursion(n, a).map_err(fail)?;
        let direct = omega_direct(n, a).map_err(fail)?;
        if rec != direct {
            return Err(format!("Omega_{n}({a}): {rec} vs {direct}"));
        }
        shown.push(format!("Omega_{n}({a})={rec}"));
    }
    Ok(shown.join(" "))
}

fn c10_tensor_square() -> Outcome {
    let start = Instant::now();
    let p1 = p1_potential(8).map_err(fail)?;
    let t = tensor_potential(&p1, &p1, 8).map_err(fail)?;
    let cmp = compare_p1xp1(&t, 8).map_err(fail)?;
    if !cmp.passed() {
        return Err(format!("{cmp:?}"));
    }
    let w = wdvv_check(&t, 8).map_err(fail)?;
    if !w.passed() {
        return Err(format!("{:?}", w.failure));
    }
    Ok(format!("{} N(a,b) values agree, WDVV on {} equations, {:.2?}", cmp.extracted.len(), w.checked, start.elapsed()))
}

fn c11_rank_one() -> Outcome {
    let nmax = 6;
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
    let id = RankOneTheory::identity(nmax);
    let s = vec![frac(1, 2), q(-2), frac(3, 7)];
    let a = RankOneTheory::twisted(&s, nmax).map_err(fail)?;
    let b = RankOneTheory::from_coordinates(&[q(1), frac(2, 3), q(-1), q(4)]).map_err(fail)?;
    let scaled = RankOneTheory::scaling(q(3), nmax).tensor(&b).map_err(fail)?;

    check(a.tensor(&id).map_err(fail)? == a && id.tensor(&b).map_err(fail)? == b, "identity is not neutral")?;
    check(
        RankOneTheory::scaling(q(2), nmax).tensor(&RankOneTheory::scaling(frac(-1, 5), nmax)).map_err(fail)?
            == RankOneTheory::scaling(frac(-2, 5), nmax),
        "scalings do not multiply",
    )?;
    check(a.tensor(&b).map_err(fail)? == b.tensor(&a).map_err(fail)?, "tensor is not commutative")?;
    for t in [&a, &b, &scaled] {
        check(t.tensor(&t.inverse().map_err(fail)?).map_err(fail)? == id, "inverse fails")?;
        check(t.splitting_failures().map_err(fail)?.is_empty() && t.is_symmetric().map_err(fail)?, "not a theory")?;
        check(RankOneTheory::from_coordinates(&t.coordinates()).map_err(fail)? == *t, "coordinates do not determine")?;
    }
    let (t, rest) = scaled.factorize().map_err(fail)?;
    check(
        t == q(3)
            && rest.classes().iter().all(|c| c.constant_term().is_one())
            && RankOneTheory::scaling(t, nmax).tensor(&rest).map_err(fail)? == scaled,
        "factorization fails",
    )?;
    let (la, lb) = (a.log().map_err(fail)?, b.log().map_err(fail)?);
    let lab = a.tensor(&b).map_err(fail)?.log().map_err(fail)?;
    for ((x, y), z) in la.iter().zip(&lb).zip(&lab) {
        check(x.add(y).map_err(fail)? == *z, "log is not additive")?;
    }
    check(RankOneTheory::exp(&lb).map_err(fail)? == b, "exp does not invert log")?;
    for (i, l) in la.iter().enumerate() {
        let n = i + 3;
        let mut want = RingElement::zero(n).map_err(fail)?;
        for (k, sk) in s.iter().enumerate().filter(|(k, _)| *k < n - 3) {
            want = want.add(&kappa(n, k + 1).map_err(fail)?.scale(sk)).map_err(fail)?;
        }
        check(*l == want, "twisted log is not the kappa sum")?;
    }
    check(!RankOneTheory::scaling(Q::zero(), nmax).is_invertible(), "zero scaling invertible")?;
    Ok("identity, scaling, inverse, factorization, log/exp and twisting laws hold for n <= 6".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("wp volumes", c1_volumes),
        ("matone ode", c2_matone),
        ("kaufmann pairing", c3_kaufmann),
        ("betti dual methods", c4_betti),
        ("commutativity and flag independence", c5_commutativity),
        ("keel relations annihilate", c6_keel_relations),
        ("psi multinomials", c7_psi),
        ("logarithmic splitting", c8_log_splitting),
        ("omega recursion", c9_omega),
        ("p1 tensor square", c10_tensor_square),
        ("rank-one group laws", c11_rank_one),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
