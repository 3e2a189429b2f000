//! Acceptance run: one line per criterion, exit status nonzero on failure.
//! Every suite runs twice, the second time with all windows doubled.

use std::time::{Duration, Instant};

use slice_forge::harness::suites::{run_suites, signatures, Sizes, SuiteOutcome};

const SEED: u64 = 20_240_601;
const GAUSS_BUDGET: Duration = Duration::from_secs(60);
const LIFT_BUDGET: Duration = Duration::from_secs(600);

const TITLES: [&str; 8] = [
    "gauss round trip, n = 2 and 3, 200 points each, window 32",
    "weierstrass correction, kernel rank 1 and 2, 200 each, d <= 4",
    "lifts through eps(2..4) for 5 weight pairs, 50 points each",
    "retraction product and projection equivariance, 100 points x 20 actions",
    "tangent corank 2 on W^(1,0)_(0,1) and 4 on W^(2,0)_(0,2), 20 points each",
    "strata of (2,0)/(0,2), closure bounds, generic strictness >= 45/50",
    "coordinate round trip at N and 2N, 100 points",
    "identical outcomes at doubled precision",
];

fn main() {
    let sizes = Sizes::full();
    let start = Instant::now();
    let base = run_suites(&sizes, SEED, 1, None);
    let elapsed = start.elapsed();
    let doubled = run_suites(&sizes, SEED, 2, None);

    let mut all_ok = true;
    for criterion in 1..=7u32 {
        let parts: Vec<&SuiteOutcome> = base.iter().filter(|(c, _)| *c == criterion).map(|(_, o)| o).collect();
        let mut ok = parts.iter().all(|o| o.ok);
        let mut note: Vec<String> = parts
            .iter()
            .map(|o| {
                let d = if o.detail.is_empty() {
                    String::new()
                } else {
                    format!(" [{}]", o.detail)
                };
                format!("{} {}/{}{d}", o.name, o.passed, o.total)
            })
            .collect();
        let t: Duration = parts.iter().map(|o| o.elapsed).sum();
        let budget = match criterion {
            1 => Some(GAUSS_BUDGET),
            3 => Some(LIFT_BUDGET),
            _ => None,
        };
        if let Some(b) = budget {
            ok &= t < b;
        }
        note.push(format!("{:.1}s", t.as_secs_f64()));
        all_ok &= ok;
        line(criterion, ok, &note.join(", "));
        for o in &parts {
            for f in &o.failures {
                println!("      {f}");
            }
        }
    }
    let same = signatures(&base) == signatures(&doubled);
    let mismatched: Vec<&str> = base
        .iter()
        .zip(&doubled)
        .filter(|((_, a), (_, b))| a.signature != b.signature || a.ok != b.ok)
        .map(|((_, a), _)| a.name.as_str())
        .collect();
    let same = same && mismatched.is_empty();
    all_ok &= same;
    line(
        8,
        same,
        &format!("{} suites compared, differing: {:?}", base.len(), mismatched),
    );
    println!("total {:.1}s at base precision", elapsed.as_secs_f64());
    if !all_ok {
        std::process::exit(1);
    }
}

fn line(criterion: u32, ok: bool, note: &str) {
    println!(
        "criterion {criterion}: {} {} ({note})",
        if ok { "PASS" } else { "FAIL" },
        TITLES[criterion as usize - 1]
    );
}
