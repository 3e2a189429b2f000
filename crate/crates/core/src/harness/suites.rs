//! Property suites over sampled points. Each suite is deterministic in its
//! seed; `scale` multiplies every working window so a rerun at `scale = 2`
//! must reproduce the same outcomes.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::runner::{run_trials, TrialRecord};
use crate::error::{Error, Result};
use crate::loopmat::{gauss_decompose, Coweight, LoopMatrix, Side};
use crate::nilring::{Rational, Ring, RingDescriptor, RingElement, SquareZeroStep};
use crate::slices::{
    closure_bounds, coordinatize, enumerate_strata, in_w_mu, project_pi_mu, random_rational, random_unipotent_poly,
    random_unit_rational, retract_to_w, sample_slice_point_scaled, sample_x_point_scaled, working_precision,
};
use crate::smoothing::{lift_through_tower, tangent_dimension, weierstrass_by_linear_system, weierstrass_correct};
use crate::zseries::ZSeries;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    pub ok: bool,
    /// Per-trial outcomes, compared across precision reruns.
    pub signature: Vec<String>,
    pub failures: Vec<String>,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteOutcome {
    fn from_records(name: &str, records: &[TrialRecord]) -> SuiteOutcome {
        let passed = records.iter().filter(|r| r.ok).count();
        let failures = records
            .iter()
            .filter(|r| !r.ok)
            .take(5)
            .map(|r| match &r.error {
                Some(e) => format!("trial {}: {}: {}", r.trial, e.kind, e.message),
                None => format!("trial {}: {}", r.trial, r.report.clone().unwrap_or(Value::Null)),
            })
            .collect();
        let signature = records
            .iter()
            .map(|r| match (&r.error, &r.report) {
                (Some(e), _) => format!("err:{}", e.kind),
                (None, Some(v)) => v.get("sig").map_or_else(|| r.ok.to_string(), |s| s.to_string()),
                (None, None) => r.ok.to_string(),
            })
            .collect();
        SuiteOutcome {
            name: name.to_string(),
            passed,
            total: records.len(),
            ok: passed == records.len(),
            signature,
            failures,
            detail: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}/{}{}",
            if self.ok { "PASS" } else { "FAIL" },
            self.name,
            self.passed,
            self.total,
            if self.detail.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.detail)
            }
        )
    }
}

/// Trial counts for the suites.
#[derive(Clone, Copy, Debug)]
pub struct Sizes {
    pub gauss: usize,
    pub weierstrass: usize,
    pub lift_points: usize,
    pub retract_points: usize,
    pub retract_actions: usize,
    pub tangent_points: usize,
    pub strata_points: usize,
    pub coordinate_points: usize,
    pub tower: u32,
}

impl Sizes {
    pub fn full() -> Sizes {
        Sizes {
            gauss: 200,
            weierstrass: 200,
            lift_points: 50,
            retract_points: 100,
            retract_actions: 20,
            tangent_points: 20,
            strata_points: 50,
            coordinate_points: 100,
            tower: 4,
        }
    }

    pub fn quick() -> Sizes {
        Sizes {
            gauss: 10,
            weierstrass: 10,
            lift_points: 3,
            retract_points: 5,
            retract_actions: 3,
            tangent_points: 3,
            strata_points: 50,
            coordinate_points: 5,
            tower: 4,
        }
    }
}

/// `(n, λ, μ)` cases for lifting, retraction and coordinates.
pub fn standard_cases() -> Vec<(Coweight, Coweight)> {
    let c = |v: &[i64]| Coweight(v.to_vec());
    vec![
        (c(&[1, 0]), c(&[0, 1])),
        (c(&[2, 0]), c(&[0, 2])),
        (c(&[2, 0]), c(&[1, 1])),
        (c(&[1, 0, 0]), c(&[0, 0, 1])),
        (c(&[1, 1, 0]), c(&[0, 1, 1])),
    ]
}

fn random_laurent(ring: &Ring, lo: i64, hi: i64, rng: &mut ChaCha8Rng) -> ZSeries {
    let coeffs: Vec<Rational> = (lo..=hi).map(|_| random_rational(rng)).collect();
    ZSeries::from_rationals(ring, None, lo, &coeffs)
}

/// Random big-cell point `x·t·y` from shaped factors with entry degrees in
/// `[-3, 3]`; the decomposition must give the factors back.
pub fn gauss_suite(n: usize, trials: usize, seed: u64, scale: i64, jobs: Option<usize>) -> SuiteOutcome {
    let floor = 32 * scale;
    let records = run_trials(trials, seed, jobs, |_, rng| {
        let ring = Ring::rational();
        let mut x = LoopMatrix::identity(&ring, n);
        let mut y = LoopMatrix::identity(&ring, n);
        for i in 0..n {
            for j in i + 1..n {
                x.set(i, j, random_laurent(&ring, -3, 3, rng));
                y.set(j, i, random_laurent(&ring, -3, 3, rng));
            }
        }
        let t = LoopMatrix::diag(
            (0..n)
                .map(|_| {
                    let mut c = vec![random_unit_rational(rng)];
                    c.extend((0..3).map(|_| random_rational(rng)));
                    c.reverse();
                    let d = rng.gen_range(-3..=3);
                    ZSeries::from_rationals(&ring, None, d - 3, &c)
                })
                .collect(),
        )?;
        let g = LoopMatrix::product(&[&x, &t, &y])?;
        let gd = gauss_decompose(&g, Some(floor))?;
        let window_ok = [&gd.x, &gd.t, &gd.y]
            .iter()
            .all(|m| m.prec().is_none_or(|p| p >= floor));
        let ok = window_ok
            && gd.x.eq_on_window(&x)
            && gd.t.eq_on_window(&t)
            && gd.y.eq_on_window(&y)
            && gd.product()?.eq_on_window(&g);
        Ok((ok, json!({ "sig": ok })))
    });
    SuiteOutcome::from_records(&format!("gauss_roundtrip_n{n}"), &records)
}

fn random_element(ring: &Ring, rng: &mut ChaCha8Rng) -> RingElement {
    ring.element((0..ring.dim()).map(|_| random_rational(rng)).collect())
        .expect("right dimension")
}

fn random_kernel_element(step: &SquareZeroStep, nonzero: bool, rng: &mut ChaCha8Rng) -> RingElement {
    let ring = step.total();
    loop {
        let mut e = ring.zero();
        for &b in &step.kernel_basis() {
            e = &e + &ring.basis(b).scale(&random_rational(rng));
        }
        if !nonzero || !e.is_zero() {
            return e;
        }
    }
}

/// Steps whose kernel has rank `r` over ℚ: towers for `r = 1`; for `r = 2`
/// either `fsz(ℚ, 2) → ℚ` or `fsz(eps(2), 1) → eps(2)`.
fn random_step(r: usize, rng: &mut ChaCha8Rng) -> Result<SquareZeroStep> {
    match r {
        1 => SquareZeroStep::eps_tower(rng.gen_range(2..=4)),
        2 if rng.gen_bool(0.5) => SquareZeroStep::free_square_zero(RingDescriptor::Rational, 2),
        2 => SquareZeroStep::free_square_zero(RingDescriptor::eps_tower(2)?, 1),
        _ => Err(Error::Precondition(format!("no step family for kernel rank {r}"))),
    }
}

/// Correctable `D = 1 + x + a`: `x ∈ I[z]` of degree exactly `d ≤ 4` and a
/// random tail known to `z^{−(d+4)·scale}`.
pub fn weierstrass_suite(r: usize, trials: usize, seed: u64, scale: i64, jobs: Option<usize>) -> SuiteOutcome {
    let records = run_trials(trials, seed, jobs, |_, rng| {
        let step = random_step(r, rng)?;
        if step.kernel_rank() != r {
            return Err(Error::Precondition(format!(
                "kernel rank {} != {r}",
                step.kernel_rank()
            )));
        }
        let ring = step.total().clone();
        let d: i64 = rng.gen_range(0..=4);
        let prec = (d + 4) * scale;
        let mut terms = vec![(0, ring.one())];
        for m in 0..=d {
            terms.push((m, random_kernel_element(&step, m == d, rng)));
        }
        for k in 1..=prec {
            terms.push((-k, random_element(&ring, rng)));
        }
        let dd = ZSeries::from_terms(&ring, Some(prec), terms)?;
        let gamma = weierstrass_correct(&dd, &step)?;
        let one = ZSeries::one(&ring, None);
        let reg_ok = gamma.checked_mul(&dd)?.reg() == one;
        let deg_ok = gamma.checked_sub(&one)?.top_degree().is_none_or(|t| t <= d);
        let oracle = weierstrass_by_linear_system(&dd, &step)?;
        let oracle_ok = matches!(&oracle, Some((o, true)) if *o == gamma);
        let ok = reg_ok && deg_ok && oracle_ok;
        Ok((
            ok,
            json!({ "sig": ok, "reg": reg_ok, "degree": deg_ok, "oracle": oracle_ok }),
        ))
    });
    SuiteOutcome::from_records(&format!("weierstrass_rank{r}"), &records)
}

/// Lift sampled points of `𝒳^λ_μ` through `ℚ[ε]/(ε^m)`, `m = 2..=height`.
pub fn lift_suite(
    cases: &[(Coweight, Coweight)],
    points: usize,
    height: u32,
    seed: u64,
    scale: i64,
    jobs: Option<usize>,
) -> SuiteOutcome {
    let records = run_trials(cases.len() * points, seed, jobs, |i, rng| {
        let (lam, mu) = &cases[i / points];
        let point = sample_x_point_scaled(lam, mu, 1, scale, rng)?;
        let reports = lift_through_tower(&point, mu, height, rng)?;
        let flags: Vec<bool> = reports.iter().map(|r| r.success).collect();
        let ok = flags.iter().all(|&f| f) && flags.len() == height as usize - 1;
        Ok((ok, json!({ "sig": flags, "lam": lam, "mu": mu })))
    });
    SuiteOutcome::from_records("lift_tower", &records)
}

/// Retraction round trip and `π_μ` equivariance under `actions` random
/// `(u, v) ∈ U⁺[z] × U⁻[z]`.
pub fn retract_suite(
    cases: &[(Coweight, Coweight)],
    points: usize,
    actions: usize,
    seed: u64,
    scale: i64,
    jobs: Option<usize>,
) -> SuiteOutcome {
    let records = run_trials(points, seed, jobs, |i, rng| {
        let (lam, mu) = &cases[i % cases.len()];
        let n = lam.n();
        let point = sample_x_point_scaled(lam, mu, 1, scale, rng)?;
        let g = &point.g;
        let floor = scale * working_precision(lam, mu, g.max_top_degree().unwrap_or(0));
        let (xp, yp) = project_pi_mu(g, mu, floor)?;
        let w = retract_to_w(&point, mu, floor)?;
        let round_trip = LoopMatrix::product(&[&xp, &w.g, &yp])? == *g;
        let in_slice = in_w_mu(&w.g, mu)? && closure_bounds(&w.g, lam)? && w.witnesses_valid()?;
        let mut equivariant = 0;
        for _ in 0..actions {
            let u = random_unipotent_poly(g.ring(), n, Side::Plus, 2, rng);
            let v = random_unipotent_poly(g.ring(), n, Side::Minus, 2, rng);
            let h = LoopMatrix::product(&[&u, g, &v])?;
            let floor_h = scale * working_precision(lam, mu, h.max_top_degree().unwrap_or(0));
            let (xh, yh) = project_pi_mu(&h, mu, floor_h)?;
            if xh == u.checked_mul(&xp)? && yh == yp.checked_mul(&v)? {
                equivariant += 1;
            }
        }
        let ok = round_trip && in_slice && equivariant == actions;
        Ok((ok, json!({ "sig": [round_trip, in_slice, equivariant] })))
    });
    SuiteOutcome::from_records("retract_product", &records)
}

/// Tangent coranks at sampled points of `𝒲^λ_μ`; all must equal `expected`
/// and be window-stable.
pub fn tangent_suite(
    lam: &Coweight,
    mu: &Coweight,
    expected: usize,
    points: usize,
    seed: u64,
    scale: i64,
    jobs: Option<usize>,
) -> SuiteOutcome {
    let records = run_trials(points, seed, jobs, |_, rng| {
        let point = sample_slice_point_scaled(lam, mu, scale, rng)?;
        let window = scale * working_precision(lam, mu, 0);
        let rep = tangent_dimension(&point, lam, window)?;
        let ok = rep.corank == expected && rep.stable && rep.residue_ok;
        Ok((
            ok,
            json!({ "sig": rep.corank, "unknowns": rep.unknowns, "reference": rep.reference_dimension }),
        ))
    });
    let mut out = SuiteOutcome::from_records(&format!("tangent_{lam}_{mu}"), &records);
    let unstable = records
        .iter()
        .filter(|r| r.error.as_ref().is_some_and(|e| e.kind == "UnstableWindow"))
        .count();
    let coranks: std::collections::BTreeSet<&String> = out.signature.iter().collect();
    out.detail = format!(
        "coranks {:?}, expected {expected}, unstable {unstable}",
        coranks.iter().map(|s| s.as_str()).collect::<Vec<_>>()
    );
    out
}

/// Strata of `𝒲̄^λ_μ`: the index set, closure bounds on every stratum, and
/// generic failure of the smaller bound on the open stratum.
#[allow(clippy::too_many_arguments)]
pub fn strata_suite(
    lam: &Coweight,
    mu: &Coweight,
    expected: &[Coweight],
    points: usize,
    min_strict: usize,
    seed: u64,
    scale: i64,
    jobs: Option<usize>,
) -> SuiteOutcome {
    let strata = match enumerate_strata(lam, mu) {
        Ok(s) => s,
        Err(e) => {
            return SuiteOutcome {
                name: "strata".into(),
                passed: 0,
                total: 1,
                ok: false,
                signature: vec![format!("err:{}", e.kind())],
                failures: vec![e.to_string()],
                detail: String::new(),
                elapsed: Duration::ZERO,
            }
        }
    };
    let index_ok = strata == expected;
    let records = run_trials(strata.len() * points, seed, jobs, |i, rng| {
        let nu = &strata[i / points];
        let point = sample_slice_point_scaled(nu, mu, scale, rng)?;
        let contained = closure_bounds(&point.g, lam)?;
        // the open stratum against the next bound down
        let strict = if nu == lam && strata.len() > 1 {
            Some(!closure_bounds(&point.g, &strata[1])?)
        } else {
            None
        };
        Ok((contained, json!({ "sig": [contained, strict] })))
    });
    let strict_count = records
        .iter()
        .filter(|r| r.report.as_ref().and_then(|v| v["sig"][1].as_bool()).unwrap_or(false))
        .count();
    let mut out = SuiteOutcome::from_records("strata", &records);
    let strict_ok = strata.len() < 2 || strict_count >= min_strict;
    out.ok = out.ok && index_ok && strict_ok;
    out.signature.push(format!("{strata:?}"));
    out.detail = format!(
        "strata {}, open stratum fails the smaller bound {strict_count}/{points}",
        strata.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    );
    out
}

/// Coordinates round trip at window `N` and `2N`.
pub fn coordinate_suite(
    cases: &[(Coweight, Coweight)],
    points: usize,
    seed: u64,
    scale: i64,
    jobs: Option<usize>,
) -> SuiteOutcome {
    let records = run_trials(points, seed, jobs, |i, rng| {
        let (lam, mu) = &cases[i % cases.len()];
        let point = sample_slice_point_scaled(lam, mu, scale, rng)?;
        let coords = coordinatize(&point.g, lam, mu)?;
        let window = scale * working_precision(lam, mu, 0);
        let at_n = coords.reconstruct(window)?.eq_on_window(&point.g);
        let at_2n = coords.reconstruct(2 * window)?.eq_on_window(&point.g);
        let ok = at_n && at_2n;
        Ok((ok, json!({ "sig": ok, "unknowns": coords.unknown_count() })))
    });
    SuiteOutcome::from_records("coordinates", &records)
}

fn timed(criterion: u32, f: impl FnOnce() -> SuiteOutcome) -> (u32, SuiteOutcome) {
    let start = Instant::now();
    let mut out = f();
    out.elapsed = start.elapsed();
    (criterion, out)
}

/// Every suite at the given sizes, tagged with its acceptance criterion.
pub fn run_suites(sizes: &Sizes, seed: u64, scale: i64, jobs: Option<usize>) -> Vec<(u32, SuiteOutcome)> {
    let cases = standard_cases();
    let c = |v: &[i64]| Coweight(v.to_vec());
    let seed_k = |k: u64| seed.wrapping_add(k);
    vec![
        timed(1, || gauss_suite(2, sizes.gauss, seed_k(0), scale, jobs)),
        timed(1, || gauss_suite(3, sizes.gauss, seed_k(1), scale, jobs)),
        timed(2, || weierstrass_suite(1, sizes.weierstrass, seed_k(2), scale, jobs)),
        timed(2, || weierstrass_suite(2, sizes.weierstrass, seed_k(3), scale, jobs)),
        timed(3, || {
            lift_suite(&cases, sizes.lift_points, sizes.tower, seed_k(4), scale, jobs)
        }),
        timed(4, || {
            retract_suite(
                &cases,
                sizes.retract_points,
                sizes.retract_actions,
                seed_k(5),
                scale,
                jobs,
            )
        }),
        timed(5, || {
            tangent_suite(
                &c(&[1, 0]),
                &c(&[0, 1]),
                2,
                sizes.tangent_points,
                seed_k(6),
                scale,
                jobs,
            )
        }),
        timed(5, || {
            tangent_suite(
                &c(&[2, 0]),
                &c(&[0, 2]),
                4,
                sizes.tangent_points,
                seed_k(7),
                scale,
                jobs,
            )
        }),
        timed(6, || {
            let points = sizes.strata_points;
            strata_suite(
                &c(&[2, 0]),
                &c(&[0, 2]),
                &[c(&[2, 0]), c(&[1, 1])],
                points,
                (points * 9).div_ceil(10),
                seed_k(8),
                scale,
                jobs,
            )
        }),
        timed(7, || {
            coordinate_suite(&cases, sizes.coordinate_points, seed_k(9), scale, jobs)
        }),
    ]
}

/// Outcomes that must agree between precision reruns.
pub fn signatures(outcomes: &[(u32, SuiteOutcome)]) -> Vec<(String, Vec<String>)> {
    outcomes
        .iter()
        .map(|(_, o)| (o.name.clone(), o.signature.clone()))
        .collect()
}
