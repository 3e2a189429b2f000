//! Known input/output cases, grouped into named suites.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::loopmat::{gauss_decompose, unipotent_split, Coweight, LoopMatrix, Side};
use crate::nilring::SquareZeroStep;
use crate::slices::{closure_bounds, enumerate_strata, project_pi_mu, retract_to_w, CertifiedPoint};
use crate::smoothing::{tangent_dimension, weierstrass_correct};
use crate::zseries::ZSeries;

use super::suites::SuiteOutcome;

pub const BUILTIN: &str = include_str!("../../fixtures/selftest.json");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixtureCase {
    pub name: String,
    pub suite: String,
    pub op: String,
    pub input: Value,
    pub expected: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixtureFile {
    pub cases: Vec<FixtureCase>,
}

impl FixtureFile {
    pub fn parse(text: &str) -> Result<FixtureFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn builtin() -> FixtureFile {
        FixtureFile::parse(BUILTIN).expect("embedded fixtures parse")
    }
}

fn field<T: DeserializeOwned>(v: &Value, key: &str) -> Result<T> {
    let inner = v
        .get(key)
        .ok_or_else(|| Error::Parse(format!("fixture is missing {key:?}")))?;
    Ok(serde_json::from_value(inner.clone())?)
}

fn opt_field<T: DeserializeOwned>(v: &Value, key: &str) -> Result<Option<T>> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => Ok(Some(serde_json::from_value(x.clone())?)),
    }
}

/// Equal where both are known, and `got` known at least as far as `want`.
fn matrix_matches(got: &LoopMatrix, want: &LoopMatrix) -> bool {
    let deep_enough = match (got.prec(), want.prec()) {
        (_, None) => got.is_exact(),
        (None, Some(_)) => true,
        (Some(a), Some(b)) => a >= b,
    };
    deep_enough && got.n() == want.n() && got.eq_on_window(want)
}

fn series_matches(got: &ZSeries, want: &ZSeries) -> bool {
    let deep_enough = match (got.prec(), want.prec()) {
        (_, None) => got.is_exact(),
        (None, Some(_)) => true,
        (Some(a), Some(b)) => a >= b,
    };
    deep_enough && got.eq_on_window(want)
}

fn matrices_match(expected: &Value, got: &[(&str, &LoopMatrix)]) -> Result<bool> {
    for (key, m) in got {
        let want: LoopMatrix = field(expected, key)?;
        if !matrix_matches(m, &want) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn evaluate(case: &FixtureCase) -> Result<bool> {
    let input = &case.input;
    let expected = &case.expected;
    match case.op.as_str() {
        "gauss" => {
            let g: LoopMatrix = field(input, "g")?;
            let gd = gauss_decompose(&g, opt_field(input, "floor")?)?;
            matrices_match(expected, &[("x", &gd.x), ("t", &gd.t), ("y", &gd.y)])
        }
        "split" => {
            let u: LoopMatrix = field(input, "u")?;
            let side: Side = field(input, "side")?;
            let (pol, tail) = unipotent_split(&u, side)?;
            matrices_match(expected, &[("pol", &pol), ("tail", &tail)])
        }
        "project" => {
            let g: LoopMatrix = field(input, "g")?;
            let (x, y) = project_pi_mu(&g, &field(input, "mu")?, field(input, "floor")?)?;
            matrices_match(expected, &[("x", &x), ("y", &y)])
        }
        "retract" => {
            let point: CertifiedPoint = field(input, "point")?;
            let w = retract_to_w(&point, &field(input, "mu")?, field(input, "floor")?)?;
            Ok(w.witnesses_valid()? && matrices_match(expected, &[("g", &w.g)])?)
        }
        "closure" => {
            let g: LoopMatrix = field(input, "g")?;
            let want: bool = field(expected, "value")?;
            Ok(closure_bounds(&g, &field(input, "lam")?)? == want)
        }
        "strata" => {
            let got = enumerate_strata(&field(input, "lam")?, &field(input, "mu")?)?;
            let want: Vec<Coweight> = field(expected, "strata")?;
            Ok(got == want)
        }
        "weierstrass" => {
            let d: ZSeries = field(input, "d")?;
            let step: SquareZeroStep = field(input, "step")?;
            Ok(series_matches(
                &weierstrass_correct(&d, &step)?,
                &field(expected, "gamma")?,
            ))
        }
        "tangent" => {
            let point: CertifiedPoint = field(input, "point")?;
            let mu: Coweight = field(input, "mu")?;
            let window: i64 = field(input, "window")?;
            let lam = point.orbit()?.lam.clone();
            let w = retract_to_w(&point, &mu, window)?;
            let rep = tangent_dimension(&w, &lam, window)?;
            let want: usize = field(expected, "corank")?;
            Ok(rep.stable && rep.residue_ok && rep.corank == want)
        }
        "inverse" => {
            let s: ZSeries = field(input, "s")?;
            Ok(series_matches(
                &s.inverse(opt_field(input, "target")?)?,
                &field(expected, "value")?,
            ))
        }
        "mul" => {
            let a: ZSeries = field(input, "a")?;
            let b: ZSeries = field(input, "b")?;
            Ok(series_matches(&a.checked_mul(&b)?, &field(expected, "value")?))
        }
        other => Err(Error::Parse(format!("unknown fixture op {other:?}"))),
    }
}

/// Whether the case passes; an expected `{"error": kind}` must fail with
/// that kind.
pub fn check_case(case: &FixtureCase) -> std::result::Result<(), String> {
    let want_error = case.expected.get("error").and_then(Value::as_str);
    match (evaluate(case), want_error) {
        (Ok(true), None) => Ok(()),
        (Ok(false), None) => Err("output differs from expected".into()),
        (Ok(_), Some(kind)) => Err(format!("expected error {kind}, got a result")),
        (Err(e), Some(kind)) if e.kind() == kind => Ok(()),
        (Err(e), _) => Err(format!("{}: {e}", e.kind())),
    }
}

/// One outcome per suite name, in name order.
pub fn run_fixtures(file: &FixtureFile) -> Vec<SuiteOutcome> {
    let mut by_suite: BTreeMap<&str, Vec<&FixtureCase>> = BTreeMap::new();
    for case in &file.cases {
        by_suite.entry(case.suite.as_str()).or_default().push(case);
    }
    by_suite
        .into_iter()
        .map(|(suite, cases)| {
            let results: Vec<_> = cases.iter().map(|c| (c.name.as_str(), check_case(c))).collect();
            let passed = results.iter().filter(|(_, r)| r.is_ok()).count();
            let failures: Vec<String> = results
                .iter()
                .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
                .collect();
            SuiteOutcome {
                name: format!("fixtures.{suite}"),
                passed,
                total: results.len(),
                ok: passed == results.len(),
                signature: results.iter().map(|(_, r)| r.is_ok().to_string()).collect(),
                failures,
                detail: String::new(),
                elapsed: Default::default(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixtures_pass() {
        let out = run_fixtures(&FixtureFile::builtin());
        assert!(out.len() >= 8);
        for o in &out {
            assert!(o.ok, "{}: {:?}", o.name, o.failures);
        }
    }

    #[test]
    fn negated_coefficient_is_caught() {
        let text = BUILTIN.replace(
            r#""expected": { "g": { "rows": [["1", "1"]"#,
            r#""expected": { "g": { "rows": [["1", "-1"]"#,
        );
        assert_ne!(text, BUILTIN);
        let out = run_fixtures(&FixtureFile::parse(&text).unwrap());
        let bad: Vec<_> = out.iter().filter(|o| !o.ok).map(|o| o.name.as_str()).collect();
        assert_eq!(bad, vec!["fixtures.retract"]);
    }
}
