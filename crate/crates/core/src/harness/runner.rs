use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::trial_seed;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
}

impl Summary {
    /// 0 all passed, 2 some predicate false, 3 some trial errored.
    pub fn exit_code(&self) -> i32 {
        if self.errors > 0 {
            3
        } else if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

/// Run `trials` independent trials, each with its own ChaCha8 stream seeded
/// from `(master, index)`. Results come back in index order whatever the
/// thread count.
pub fn run_trials<F>(trials: usize, master: u64, jobs: Option<usize>, f: F) -> Vec<TrialRecord>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<(bool, Value)> + Sync,
{
    let one = |i: usize| {
        let seed = trial_seed(master, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match f(i, &mut rng) {
            Ok((ok, report)) => TrialRecord {
                trial: i,
                seed,
                ok,
                error: None,
                report: Some(report),
            },
            Err(e) => TrialRecord {
                trial: i,
                seed,
                ok: false,
                error: Some(ErrorRecord::from(&e)),
                report: None,
            },
        }
    };
    let run = || (0..trials).into_par_iter().map(one).collect::<Vec<_>>();
    match jobs {
        Some(j) if j > 0 => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        _ => run(),
    }
}

pub fn summarize(command: &str, records: &[TrialRecord]) -> Summary {
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let passed = records.iter().filter(|r| r.ok).count();
    Summary {
        command: command.to_string(),
        trials: records.len(),
        passed,
        failed: records.len() - passed - errors,
        errors,
    }
}

/// Records one per line, then `{"summary": …}`.
pub fn write_ndjson<W: Write>(out: &mut W, records: &[TrialRecord], summary: &Summary) -> Result<()> {
    let io = |e: std::io::Error| Error::Json(e.to_string());
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n").map_err(io)?;
    }
    serde_json::to_writer(&mut *out, &serde_json::json!({ "summary": summary }))?;
    out.write_all(b"\n").map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn order_and_values_do_not_depend_on_threads() {
        let f = |i: usize, rng: &mut ChaCha8Rng| -> Result<(bool, Value)> {
            let x: u32 = rng.gen();
            if i == 3 {
                return Err(Error::Precondition("boom".into()));
            }
            Ok((x.is_multiple_of(2), serde_json::json!({ "x": x })))
        };
        let a = run_trials(20, 9, Some(1), f);
        let b = run_trials(20, 9, Some(4), f);
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, r)| r.trial == i));
        let s = summarize("t", &a);
        assert_eq!(s.errors, 1);
        assert_eq!(s.passed + s.failed + s.errors, 20);
        assert_eq!(s.exit_code(), 3);
        let mut buf = Vec::new();
        write_ndjson(&mut buf, &a, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.lines().last().unwrap().starts_with("{\"summary\""));
    }
}
