//! Command bodies behind the CLI. Each returns the text to print and the
//! exit code, so they can be driven without a process.

use serde::Deserialize;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::fixtures::{run_fixtures, FixtureFile};
use super::runner::{run_trials, summarize, write_ndjson, ErrorRecord, TrialRecord};
use super::suites::{run_suites, signatures, Sizes, SuiteOutcome};
use crate::error::{Error, Result};
use crate::loopmat::{gauss_decompose, unipotent_split, Coweight, LoopMatrix, Side};
use crate::nilring::{RingDescriptor, SquareZeroStep};
use crate::slices::{
    closure_bounds, dominance_leq, enumerate_strata, in_w_mu, in_x_mu, infer_mu, project_pi_mu, retract_to_w,
    sample_slice_point, sample_x_point, unipotent_inverse, CertifiedPoint,
};
use crate::smoothing::{lift_point, lift_through_tower, tangent_dimension};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SELFTEST_FAILED: i32 = 1;
pub const EXIT_PREDICATE_FALSE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

const DEFAULT_FLOOR: i64 = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub text: String,
}

impl Output {
    fn json(code: i32, v: &Value) -> Output {
        Output {
            code,
            text: format!("{v}\n"),
        }
    }

    pub fn error(e: &Error) -> Output {
        Output::json(EXIT_ERROR, &json!({ "error": ErrorRecord::from(e) }))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussInput {
    g: LoopMatrix,
    #[serde(default)]
    floor: Option<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitInput {
    u: LoopMatrix,
    side: Side,
}

/// `g` bare or as a certified point.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointInput {
    #[serde(default)]
    g: Option<LoopMatrix>,
    #[serde(default)]
    point: Option<CertifiedPoint>,
    #[serde(default)]
    mu: Option<Coweight>,
    #[serde(default)]
    floor: Option<i64>,
}

impl PointInput {
    fn point(&self) -> Result<CertifiedPoint> {
        match (&self.g, &self.point) {
            (Some(g), None) => Ok(CertifiedPoint::bare(g.clone())),
            (None, Some(p)) => Ok(p.clone()),
            _ => Err(Error::Parse("give exactly one of \"g\" and \"point\"".into())),
        }
    }

    fn mu(&self, g: &LoopMatrix) -> Result<Coweight> {
        match &self.mu {
            Some(mu) => Ok(mu.clone()),
            None => Ok(infer_mu(g)?.0),
        }
    }
}

fn parse_input<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn gauss(text: &str) -> Result<Output> {
    let input: GaussInput = parse_input(text)?;
    let gd = gauss_decompose(&input.g, Some(input.floor.unwrap_or(DEFAULT_FLOOR)))?;
    Ok(Output::json(EXIT_OK, &json!({ "x": gd.x, "t": gd.t, "y": gd.y })))
}

fn split(text: &str) -> Result<Output> {
    let input: SplitInput = parse_input(text)?;
    let (pol, tail) = unipotent_split(&input.u, input.side)?;
    Ok(Output::json(EXIT_OK, &json!({ "pol": pol, "tail": tail })))
}

fn project(text: &str) -> Result<Output> {
    let input: PointInput = parse_input(text)?;
    let g = input.point()?.g;
    let mu = input.mu(&g)?;
    let (x, y) = project_pi_mu(&g, &mu, input.floor.unwrap_or(DEFAULT_FLOOR))?;
    Ok(Output::json(EXIT_OK, &json!({ "mu": mu, "x": x, "y": y })))
}

/// With an orbit witness the full retraction; otherwise `x⁻¹·g·y⁻¹` alone.
fn retract(text: &str) -> Result<Output> {
    let input: PointInput = parse_input(text)?;
    let point = input.point()?;
    let mu = input.mu(&point.g)?;
    let floor = input.floor.unwrap_or(DEFAULT_FLOOR);
    let out = if point.witness.orbit.is_some() {
        retract_to_w(&point, &mu, floor)?
    } else {
        let (x, y) = project_pi_mu(&point.g, &mu, floor)?;
        let g = LoopMatrix::product(&[&unipotent_inverse(&x)?, &point.g, &unipotent_inverse(&y)?])?;
        CertifiedPoint::bare(g)
    };
    let in_slice = in_w_mu(&out.g, &mu)?;
    let witnesses = if out.witness.orbit.is_some() {
        Some(out.witnesses_valid()?)
    } else {
        None
    };
    let ok = in_slice && witnesses != Some(false);
    let code = if ok { EXIT_OK } else { EXIT_PREDICATE_FALSE };
    Ok(Output::json(
        code,
        &json!({ "g": out.g, "witness": out.witness, "mu": mu, "in_w_mu": in_slice, "witnesses_valid": witnesses }),
    ))
}

/// `gauss`, `split`, `project` or `retract` on one JSON document.
pub fn run_json_command(command: &str, input: &str) -> Output {
    let res = match command {
        "gauss" => gauss(input),
        "split" => split(input),
        "project" => project(input),
        "retract" => retract(input),
        other => Err(Error::Precondition(format!("unknown command {other:?}"))),
    };
    res.unwrap_or_else(|e| Output::error(&e))
}

enum Tower {
    Eps(u32),
    Single(SquareZeroStep),
}

/// `--tower m` or `ring = eps(m)`: steps up to `ℚ[ε]/(ε^m)`;
/// `ring = fsz(ℚ, r)`: the single step onto `ℚ`.
fn tower(cfg: &ExperimentConfig) -> Result<Tower> {
    match (&cfg.tower, &cfg.ring) {
        (Some(m), _) if *m < 2 => Err(Error::Precondition(format!("tower height {m} must be at least 2"))),
        (Some(m), Some(RingDescriptor::EpsTower(r))) if r != m => {
            Err(Error::Precondition(format!("tower {m} disagrees with ring eps({r})")))
        }
        (Some(m), None | Some(RingDescriptor::EpsTower(_))) | (None, Some(RingDescriptor::EpsTower(m))) => {
            Ok(Tower::Eps(*m))
        }
        (None, None) => Ok(Tower::Eps(2)),
        (None, Some(RingDescriptor::FreeSquareZero(base, r))) if **base == RingDescriptor::Rational => Ok(
            Tower::Single(SquareZeroStep::free_square_zero(RingDescriptor::Rational, *r)?),
        ),
        (_, Some(ring)) => Err(Error::Precondition(format!("cannot lift rational points into {ring}"))),
    }
}

fn check_weights(lam: &Coweight, mu: &Coweight) -> Result<()> {
    if !lam.is_dominant() || !dominance_leq(mu, lam) {
        return Err(Error::Precondition(format!("need {lam} dominant and {mu} <= {lam}")));
    }
    Ok(())
}

fn ndjson(command: &str, records: &[TrialRecord], extra: &[Value]) -> Result<Output> {
    let summary = summarize(command, records);
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    for v in extra {
        serde_json::to_writer(&mut buf, v)?;
        buf.push(b'\n');
    }
    write_ndjson(&mut buf, &[], &summary)?;
    Ok(Output {
        code: summary.exit_code(),
        text: String::from_utf8(buf).expect("json is utf-8"),
    })
}

fn lift(cfg: &ExperimentConfig) -> Result<Output> {
    let lam = cfg.lam()?;
    let mu = cfg.mu()?;
    check_weights(&lam, &mu)?;
    let tower = tower(cfg)?;
    let records = run_trials(cfg.trials(), cfg.seed(), cfg.jobs, |_, rng| {
        let point = sample_x_point(&lam, &mu, 1, rng)?;
        let steps = match &tower {
            Tower::Eps(m) => lift_through_tower(&point, &mu, *m, rng)?,
            Tower::Single(step) => vec![lift_point(&point, &mu, step, rng)?],
        };
        let ok = steps.iter().all(|s| s.success);
        Ok((ok, json!({ "steps": steps })))
    });
    ndjson("lift", &records, &[])
}

fn tangent(cfg: &ExperimentConfig, input: Option<&str>) -> Result<Output> {
    let given = input.map(parse_input::<CertifiedPoint>).transpose()?;
    let (lam, mu) = match &given {
        Some(p) => {
            let lam = match &cfg.lam {
                Some(l) => l.clone(),
                None => p.orbit()?.lam.clone(),
            };
            let mu = match (&cfg.mu, &p.witness.slice) {
                (Some(m), _) => m.clone(),
                (None, Some(s)) => s.mu.clone(),
                (None, None) => infer_mu(&p.g)?.0,
            };
            (lam, mu)
        }
        None => (cfg.lam()?, cfg.mu()?),
    };
    check_weights(&lam, &mu)?;
    let window = match cfg.window {
        Some(_) => cfg.window()?,
        None => crate::slices::working_precision(&lam, &mu, 0),
    };
    let trials = if given.is_some() { 1 } else { cfg.trials() };
    let records = run_trials(trials, cfg.seed(), cfg.jobs, |_, rng| {
        let point = match &given {
            Some(p) if p.witness.slice.is_some() => p.clone(),
            Some(p) => retract_to_w(p, &mu, window)?,
            None => sample_slice_point(&lam, &mu, rng)?,
        };
        let rep = tangent_dimension(&point, &lam, window)?;
        let ok = rep.stable && rep.residue_ok && rep.corank as i64 == rep.reference_dimension;
        Ok((ok, serde_json::to_value(&rep)?))
    });
    ndjson("tangent", &records, &[])
}

/// Points of every stratum `𝒲^ν_μ` tested against every bound `ν′`;
/// a record passes when all bounds `ν′ ≥ ν` hold.
fn strata(cfg: &ExperimentConfig) -> Result<Output> {
    let lam = cfg.lam()?;
    let mu = cfg.mu()?;
    let strata = enumerate_strata(&lam, &mu)?;
    let per = cfg.trials();
    let records = run_trials(strata.len() * per, cfg.seed(), cfg.jobs, |i, rng| {
        let nu = &strata[i / per];
        let point = sample_slice_point(nu, &mu, rng)?;
        let row = strata
            .iter()
            .map(|b| closure_bounds(&point.g, b))
            .collect::<Result<Vec<bool>>>()?;
        let ok = strata.iter().zip(&row).all(|(b, &c)| c || !dominance_leq(nu, b));
        Ok((ok, json!({ "nu": nu, "contained": row })))
    });
    let mut matrix = vec![vec![0usize; strata.len()]; strata.len()];
    for r in &records {
        if let Some(row) = r.report.as_ref().and_then(|v| v["contained"].as_array()) {
            for (j, c) in row.iter().enumerate() {
                if c.as_bool() == Some(true) {
                    matrix[r.trial / per][j] += 1;
                }
            }
        }
    }
    let table = json!({ "strata": strata, "points_per_stratum": per, "containment": matrix });
    ndjson("strata", &records, &[table])
}

fn sample(cfg: &ExperimentConfig) -> Result<Output> {
    let lam = cfg.lam()?;
    let mu = cfg.mu()?;
    check_weights(&lam, &mu)?;
    let records = run_trials(cfg.trials(), cfg.seed(), cfg.jobs, |_, rng| {
        let point = sample_x_point(&lam, &mu, 1, rng)?;
        let ok = point.witnesses_valid()? && in_x_mu(&point.g, &mu)?;
        Ok((ok, serde_json::to_value(&point)?))
    });
    ndjson("sample", &records, &[])
}

/// `lift`, `tangent`, `strata` or `sample`; errors in a trial are recorded in
/// the stream, errors in the configuration abort with exit 3.
pub fn run_batch(cfg: &ExperimentConfig, input: Option<&str>) -> Output {
    let command = cfg.command.clone().unwrap_or_default();
    let res = match command.as_str() {
        "lift" => lift(cfg),
        "tangent" => tangent(cfg, input),
        "strata" => strata(cfg),
        "sample" => sample(cfg),
        other => Err(Error::Precondition(format!("unknown batch command {other:?}"))),
    };
    res.unwrap_or_else(|e| Output::error(&e))
}

fn suite_lines(out: &mut String, outcomes: &[SuiteOutcome]) {
    for o in outcomes {
        out.push_str(&o.line());
        out.push('\n');
        for f in &o.failures {
            out.push_str(&format!("    {f}\n"));
        }
    }
}

/// Fixture suites, then the property suites at `sizes` and once more at
/// doubled precision. Exit 0 iff everything passes.
pub fn selftest(fixtures: Option<&str>, sizes: &Sizes, seed: u64, jobs: Option<usize>) -> Output {
    let file = match fixtures
        .map(FixtureFile::parse)
        .unwrap_or_else(|| Ok(FixtureFile::builtin()))
    {
        Ok(f) => f,
        Err(e) => {
            return Output {
                code: EXIT_SELFTEST_FAILED,
                text: format!("FAIL fixtures: {e}\n"),
            }
        }
    };
    let mut outcomes = run_fixtures(&file);
    let props = run_suites(sizes, seed, 1, jobs);
    let doubled = run_suites(sizes, seed, 2, jobs);
    let same = signatures(&props) == signatures(&doubled);
    outcomes.extend(props.into_iter().map(|(_, o)| o));
    outcomes.push(SuiteOutcome {
        name: "determinism".into(),
        passed: usize::from(same),
        total: 1,
        ok: same,
        signature: vec![],
        failures: if same {
            vec![]
        } else {
            vec!["outcomes differ at doubled precision".into()]
        },
        detail: String::new(),
        elapsed: Default::default(),
    });
    let mut text = String::new();
    suite_lines(&mut text, &outcomes);
    let passed = outcomes.iter().filter(|o| o.ok).count();
    text.push_str(&format!("selftest: {passed}/{} suites passed\n", outcomes.len()));
    Output {
        code: if passed == outcomes.len() {
            EXIT_OK
        } else {
            EXIT_SELFTEST_FAILED
        },
        text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_command_outputs() {
        let out = run_json_command("gauss", r#"{"g":{"rows":[["1","1"],["0","z"]]}}"#);
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.text).unwrap();
        let t: LoopMatrix = serde_json::from_value(v["t"].clone()).unwrap();
        assert_eq!(t, serde_json::from_str(r#"{"rows":[["1","0"],["0","z"]]}"#).unwrap());

        let out = run_json_command("gauss", r#"{"g":{"rows":[["0","1"],["1","0"]]}}"#);
        assert_eq!(out.code, 3);
        let v: Value = serde_json::from_str(&out.text).unwrap();
        assert_eq!(v["error"]["kind"], "NotInBigCell");

        assert_eq!(run_json_command("gauss", "not json").code, 3);
    }

    #[test]
    fn retract_command_without_witness() {
        let out = run_json_command("retract", r#"{"g":{"rows":[["1","z^2 + 1"],["0","z"]]}}"#);
        assert_eq!(out.code, 0, "{}", out.text);
        let v: Value = serde_json::from_str(&out.text).unwrap();
        let g: LoopMatrix = serde_json::from_value(v["g"].clone()).unwrap();
        assert_eq!(g, serde_json::from_str(r#"{"rows":[["1","1"],["0","z"]]}"#).unwrap());
        assert_eq!(v["mu"], json!([0, 1]));
    }

    #[test]
    fn strata_stream_ends_with_summary() {
        let cfg = ExperimentConfig {
            command: Some("strata".into()),
            lam: Some(Coweight(vec![2, 0])),
            mu: Some(Coweight(vec![0, 2])),
            trials: Some(3),
            seed: Some(1),
            ..Default::default()
        };
        let out = run_batch(&cfg, None);
        assert_eq!(out.code, 0, "{}", out.text);
        let lines: Vec<Value> = out.text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 6 + 2);
        assert_eq!(lines[6]["strata"], json!([[2, 0], [1, 1]]));
        assert_eq!(lines[6]["containment"][1], json!([3, 3]));
        assert_eq!(lines[7]["summary"]["passed"], 6);
    }

    #[test]
    fn tower_selection() {
        let mut cfg = ExperimentConfig {
            ring: Some(RingDescriptor::EpsTower(3)),
            ..Default::default()
        };
        assert!(matches!(tower(&cfg), Ok(Tower::Eps(3))));
        cfg.tower = Some(4);
        assert!(tower(&cfg).is_err());
        cfg.ring = Some(RingDescriptor::free_square_zero(RingDescriptor::Rational, 2).unwrap());
        cfg.tower = None;
        assert!(matches!(tower(&cfg), Ok(Tower::Single(_))));
    }
}
