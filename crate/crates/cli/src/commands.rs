use std::fs;
use std::path::Path;

use keel::cohft::{
    a_coefficients, compare_p1xp1, matone_check, omega_recursion, p1_potential, tensor_potential, wdvv_check,
    wp_volumes, Potential, RankOneJson, RankOneTheory,
};
use keel::intersect::{integrate, pair_kaufmann, pair_oracle, BETTI_MAX_N};
use keel::keelring::{betti_by_relations, reduce};
use keel::rational::format_q;
use keel::taut::{check_logarithmic, kappa, omega_direct, psi, psi_integral, LogReport};
use keel::trees::{check_n, enumerate_stable_trees, Partition2, STree};
use keel::{RingElement, Q};
use serde_json::{json, Value};

use crate::cache::Cache;
use crate::error::{CliError, CliResult};
use crate::table::Table;
use crate::{Command, Method};

pub struct Output {
    pub json: Value,
    pub table: String,
    /// False when a check ran to completion and found a violation.
    pub passed: bool,
}

impl Output {
    fn ok(json: Value, table: String) -> Self {
        Output { json, table, passed: true }
    }
}

fn qs(x: &Q) -> Value {
    Value::String(format_q(x))
}

pub fn monomial_str(t: &STree) -> String {
    if t.degree() == 0 {
        "1".into()
    } else {
        t.edges().iter().map(|p| p.to_string()).collect()
    }
}

/// Divisors written as `{12|345}{123|45}`, optionally separated by `*` or
/// spaces; `1` is the empty product.
pub fn parse_divisors(s: &str, n: usize) -> CliResult<Vec<Partition2>> {
    let s = s.trim();
    if s == "1" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut rest = s;
    loop {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '*');
        if rest.is_empty() {
            break;
        }
        if !rest.starts_with('{') {
            return Err(CliError::Usage(format!("expected '{{' in {s:?}")));
        }
        let end = rest.find('}').ok_or_else(|| CliError::Usage(format!("unclosed '{{' in {s:?}")))?;
        out.push(Partition2::parse(&rest[..=end], n)?);
        rest = &rest[end + 1..];
    }
    if out.is_empty() {
        return Err(CliError::Usage("empty monomial; write 1 for the unit".into()));
    }
    Ok(out)
}

fn parse_monomial(s: &str, n: usize) -> CliResult<STree> {
    Ok(STree::from_partitions(n, parse_divisors(s, n)?)?)
}

fn element_json(x: &RingElement) -> Value {
    let terms: Vec<Value> =
        x.terms().iter().map(|(m, c)| json!({ "monomial": monomial_str(m), "coeff": format_q(c) })).collect();
    json!({ "n": x.n(), "terms": terms, "integral": format_q(&integrate(x)) })
}

fn element_table(x: &RingElement) -> String {
    let mut t = Table::new(&["degree", "coeff", "monomial"]);
    for (m, c) in x.terms() {
        t.row(vec![m.degree().to_string(), format_q(c), monomial_str(m)]);
    }
    format!("{}\nintegral  {}", t.render(), format_q(&integrate(x)))
}

fn element_output(x: &RingElement, extra: Value) -> Output {
    let mut j = element_json(x);
    if let (Value::Object(m), Value::Object(e)) = (&mut j, extra) {
        m.extend(e);
    }
    Output::ok(j, element_table(x))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn potential_output(phi: &Potential) -> CliResult<Output> {
    let mut t = Table::new(&["multi_index", "coeff"]);
    for (e, y) in phi.terms() {
        let idx: Vec<String> = e.iter().map(u32::to_string).collect();
        t.row(vec![idx.join(","), format_q(y)]);
    }
    Ok(Output::ok(serde_json::to_value(phi.to_json())?, t.render()))
}

fn log_output(what: String, nmax: usize, r: &LogReport) -> Output {
    let failures: Vec<Value> =
        r.failures.iter().map(|f| json!({ "n": f.n, "divisor": f.divisor.to_string() })).collect();
    let mut t = Table::new(&["n", "divisor"]);
    for f in &r.failures {
        t.row(vec![f.n.to_string(), f.divisor.to_string()]);
    }
    let summary = format!("{what}: {} divisors checked through n = {nmax}, {} failures", r.checked, r.failures.len());
    Output {
        json: json!({ "family": what, "nmax": nmax, "checked": r.checked, "passed": r.passed(), "failures": failures }),
        table: if r.passed() { summary } else { format!("{summary}\n{}", t.render()) },
        passed: r.passed(),
    }
}

pub fn run(cmd: &Command, cache: &Cache) -> CliResult<Output> {
    match cmd {
        Command::Trees { n, r } => {
            check_n(*n)?;
            let degrees: Vec<usize> = match r {
                Some(r) if *r > n - 3 => {
                    return Err(keel::Error::Degree(format!("degree {r} exceeds {}", n - 3)).into())
                }
                Some(r) => vec![*r],
                None => (0..=n - 3).collect(),
            };
            let mut t = Table::new(&["degree", "monomial"]);
            let mut trees = Vec::new();
            for d in degrees {
                for tr in enumerate_stable_trees(*n, d)?.iter() {
                    t.row(vec![d.to_string(), monomial_str(tr)]);
                    trees.push(json!({ "degree": d, "monomial": monomial_str(tr) }));
                }
            }
            Ok(Output::ok(json!({ "n": n, "count": trees.len(), "trees": trees }), t.render()))
        }
        Command::Mul { n, product } => {
            check_n(*n)?;
            let ds = parse_divisors(product, *n)?;
            let x = if ds.is_empty() { RingElement::one(*n)? } else { reduce(&ds)? };
            Ok(element_output(&x, json!({ "product": product.trim() })))
        }
        Command::Pair { n, m1, m2, method } => {
            check_n(*n)?;
            let (a, b) = (parse_monomial(m1, *n)?, parse_monomial(m2, *n)?);
            if a.degree() + b.degree() != n - 3 {
                return Err(keel::Error::Degree(format!(
                    "degrees {} and {} do not add up to {}",
                    a.degree(),
                    b.degree(),
                    n - 3
                ))
                .into());
            }
            let value = match method {
                Method::Kaufmann => pair_kaufmann(&a, &b)?,
                Method::Oracle => pair_oracle(&a, &b)?,
                Method::Both => {
                    let (k, o) = (pair_kaufmann(&a, &b)?, pair_oracle(&a, &b)?);
                    if k != o {
                        return Err(CliError::Check(format!(
                            "pairing mismatch: tree formula {} against reduction {}",
                            format_q(&k),
                            format_q(&o)
                        )));
                    }
                    k
                }
            };
            let method = format!("{method:?}").to_lowercase();
            Ok(Output::ok(
                json!({ "n": n, "m1": monomial_str(&a), "m2": monomial_str(&b), "method": method, "value": format_q(&value) }),
                format_q(&value),
            ))
        }
        Command::Betti { n } => {
            check_n(*n)?;
            if *n > BETTI_MAX_N {
                return Err(keel::Error::Precondition(format!("betti is supported for n <= {BETTI_MAX_N}")).into());
            }
            let by_rel: Vec<usize> = (0..=n - 3).map(|r| betti_by_relations(*n, r)).collect::<keel::Result<_>>()?;
            let by_pair: Vec<usize> = cache.pairings(*n)?.iter().map(|m| m.rank()).collect();
            if by_rel != by_pair {
                return Err(CliError::Check(format!("relations give {by_rel:?}, pairing ranks give {by_pair:?}")));
            }
            let mut t = Table::new(&["r", "dim"]);
            for (r, b) in by_rel.iter().enumerate() {
                t.row(vec![r.to_string(), b.to_string()]);
            }
            Ok(Output::ok(json!({ "n": n, "betti": by_rel }), t.render()))
        }
        Command::Psi { n, label, power, exponents } => {
            check_n(*n)?;
            match (label, exponents) {
                (_, Some(e)) => {
                    let v = psi_integral(*n, e)?;
                    Ok(Output::ok(json!({ "n": n, "exponents": e, "integral": format_q(&v) }), format_q(&v)))
                }
                (Some(i), None) => {
                    let x = psi(*n, *i)?.pow(*power)?;
                    Ok(element_output(&x, json!({ "label": i, "power": power })))
                }
                (None, None) => Err(CliError::Usage("give --label or --exponents".into())),
            }
        }
        Command::Kappa { n, a } => {
            let x = kappa(*n, *a)?;
            Ok(element_output(&x, json!({ "a": a })))
        }
        Command::LogCheck { a, theory, nmax } => match (a, theory) {
            (Some(a), _) => {
                let a = *a;
                if a == 0 {
                    return Err(keel::Error::Precondition("a must be at least 1".into()).into());
                }
                let r = check_logarithmic(&|n| kappa(n, a), *nmax)?;
                Ok(log_output(format!("kappa_{a}"), *nmax, &r))
            }
            (None, Some(path)) => {
                let j: RankOneJson = serde_json::from_str(&read(path)?)?;
                let t = RankOneTheory::from_json(&j, *nmax)?;
                let failures = t.splitting_failures()?;
                let checked: usize =
                    (4..=t.nmax()).map(|n| keel::taut::divisors(n).map(|d| d.len())).sum::<keel::Result<usize>>()?;
                let r = LogReport {
                    checked,
                    failures: failures
                        .into_iter()
                        .map(|(n, divisor)| keel::taut::SplitFailure { n, divisor })
                        .collect(),
                };
                Ok(log_output("theory".into(), t.nmax(), &r))
            }
            (None, None) => Err(CliError::Usage("give --a or --theory".into())),
        },
        Command::WpVolumes { nmax } => {
            let v = wp_volumes(*nmax)?;
            let mut t = Table::new(&["n", "v_n"]);
            for (i, x) in v.iter().enumerate() {
                t.row(vec![(i + 4).to_string(), format_q(x)]);
            }
            Ok(Output::ok(json!({ "nmax": nmax, "v": v.iter().map(qs).collect::<Vec<_>>() }), t.render()))
        }
        Command::Matone { order } => {
            let r = matone_check(*order)?;
            let failure = r.failure.as_ref().map(|(k, res)| json!({ "power": k, "residual": format_q(res) }));
            let table = match &r.failure {
                None => format!("ODE holds through x^{order}"),
                Some((k, res)) => format!("ODE fails at x^{k}: residual {}", format_q(res)),
            };
            Ok(Output {
                json: json!({ "order": order, "passed": r.passed(), "failure": failure }),
                table,
                passed: r.passed(),
            })
        }
        Command::ACoeffs { n, a } => {
            let c = a_coefficients(*n, *a)?;
            let mut t = Table::new(&["size", "value", "representative"]);
            let orbits: Vec<Value> = c
                .orbits
                .iter()
                .map(|o| {
                    t.row(vec![o.size.to_string(), format_q(&o.value), monomial_str(&o.representative)]);
                    json!({ "representative": monomial_str(&o.representative), "size": o.size, "value": format_q(&o.value) })
                })
                .collect();
            Ok(Output::ok(
                json!({ "n": n, "a": a, "kernel_dim": c.kernel_dim, "orbits": orbits }),
                format!("{}\nkernel dimension  {}", t.render(), c.kernel_dim),
            ))
        }
        Command::Omega { n, a } => {
            let (d, r) = (omega_direct(*n, *a)?, omega_recursion(*n, *a)?);
            if d != r {
                return Err(CliError::Check(format!(
                    "Omega_{n}({a}): direct {} against recursion {}",
                    format_q(&d),
                    format_q(&r)
                )));
            }
            Ok(Output::ok(
                json!({ "n": n, "a": a, "direct": format_q(&d), "recursion": format_q(&r) }),
                format!("Omega_{n}({a}) = {}", format_q(&d)),
            ))
        }
        Command::Wdvv { potential, order } => {
            let phi = Potential::from_json_str(&read(potential)?)?;
            let order = order.unwrap_or(phi.order());
            let r = wdvv_check(&phi, order)?;
            let failure = r.failure.as_ref().map(|f| {
                json!({ "a": f.a, "b": f.b, "c": f.c, "d": f.d, "beta": f.beta, "lhs": format_q(&f.lhs), "rhs": format_q(&f.rhs) })
            });
            let table = match &r.failure {
                None => format!("{} equations hold through order {order}", r.checked),
                Some(f) => format!(
                    "fails for (a,b,c,d) = ({},{},{},{}) at {:?}: {} vs {}",
                    f.a,
                    f.b,
                    f.c,
                    f.d,
                    f.beta,
                    format_q(&f.lhs),
                    format_q(&f.rhs)
                ),
            };
            Ok(Output {
                json: json!({ "order": order, "checked": r.checked, "passed": r.passed(), "failure": failure }),
                table,
                passed: r.passed(),
            })
        }
        Command::Tensor { left, right, order } => {
            let a = Potential::from_json_str(&read(left)?)?;
            let b = Potential::from_json_str(&read(right)?)?;
            potential_output(&tensor_potential(&a, &b, *order)?)
        }
        Command::P1xp1 { order } => {
            let p1 = p1_potential(*order)?;
            let t = tensor_potential(&p1, &p1, *order)?;
            let c = compare_p1xp1(&t, *order)?;
            let mut table = Table::new(&["a", "b", "extracted", "recursion"]);
            let mut rows = Vec::new();
            for ((a, b), v) in &c.recursion {
                let got = c.extracted.get(&(*a, *b));
                let shown = got.map(format_q).unwrap_or_else(|| "-".into());
                table.row(vec![a.to_string(), b.to_string(), shown.clone(), format_q(v)]);
                rows.push(json!({ "a": a, "b": b, "extracted": got.map(format_q), "recursion": format_q(v) }));
            }
            let mismatches: Vec<Value> = c
                .mismatches
                .iter()
                .map(|(e, x, y)| json!({ "multi_index": e, "expected": format_q(x), "found": format_q(y) }))
                .collect();
            let text = format!(
                "classical terms {}\n{} correlator mismatches\n{}",
                if c.classical_terms_ok { "ok" } else { "wrong" },
                mismatches.len(),
                table.render()
            );
            Ok(Output {
                json: json!({
                    "order": order,
                    "passed": c.passed(),
                    "classical_terms_ok": c.classical_terms_ok,
                    "mismatches": mismatches,
                    "degrees": rows,
                    "potential": serde_json::to_value(t.to_json())?,
                }),
                table: text,
                passed: c.passed(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisor_strings() {
        let ds = parse_divisors("{12|345} * {123|45}", 5).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(monomial_str(&STree::from_partitions(5, ds).unwrap()), "{12|345}{123|45}");
        assert!(parse_divisors("1", 5).unwrap().is_empty());
        assert!(parse_divisors("{12|345", 5).is_err());
        assert!(parse_divisors("x", 5).is_err());
        assert!(parse_divisors("", 5).is_err());
    }
}
