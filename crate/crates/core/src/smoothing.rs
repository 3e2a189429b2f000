//! Lifting points of `𝒳^λ_μ` along square-zero extensions, and exact
//! tangent-space dimensions of slices via dual numbers.

use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::loopmat::{torus_from_gammas, trailing_minor, Coweight, LoopMatrix};
use crate::nilring::{Rational, Ring, RingDescriptor, RingElement, SquareZeroStep};
use crate::slices::{closure_bounds, coordinatize, in_x_mu, random_rational, CertifiedPoint, SliceCoordinates};
use crate::zseries::ZSeries;

fn not_correctable(msg: impl Into<String>) -> Error {
    Error::NotCorrectableShape(msg.into())
}

/// The unique `γ ∈ 1 + I[z]` with `reg(γ·D) = 1`, where `I` is the kernel of
/// `step` and `reg(D) − 1 ∈ I[z]`.
///
/// Writing `D = 1 + x + a` with `x ∈ I[z]` of degree `d` and `a` the
/// negative part, `γ = 1 + y` is found top-down from
/// `y_m = −x_m − Σ_{k>0} a_{−k} y_{m+k}` for `m = d, …, 0`.
pub fn weierstrass_correct(dd: &ZSeries, step: &SquareZeroStep) -> Result<ZSeries> {
    let ring = step.total();
    if !dd.ring().same(ring) {
        return Err(Error::RingMismatch(
            dd.ring().descriptor().to_string(),
            ring.descriptor().to_string(),
        ));
    }
    let one = ZSeries::one(ring, None);
    let x = dd.reg().checked_sub(&one)?;
    if !x.is_in_i_poly(step) {
        return Err(not_correctable(
            "reg(D) - 1 is not a polynomial with kernel coefficients",
        ));
    }
    let Some(d) = x.top_degree() else {
        return Ok(one);
    };
    if dd.prec().is_some_and(|n| n < d) {
        return Err(not_correctable(format!(
            "tail of D known only to z^-{}, need z^-{d}",
            dd.prec().unwrap()
        )));
    }
    let a = dd.negative_part();
    let mut y: Vec<RingElement> = vec![ring.zero(); (d + 1) as usize];
    for m in (0..=d).rev() {
        let mut acc = -&x.coeff_or_zero(m);
        for k in 1..=(d - m) {
            let am = a.coeff_or_zero(-k);
            if !am.is_zero() {
                acc.sub_assign_ref(&(&am * &y[(m + k) as usize]));
            }
        }
        y[m as usize] = acc;
    }
    let gamma = ZSeries::from_terms(ring, None, y.into_iter().enumerate().map(|(m, c)| (m as i64, c)))?;
    gamma.checked_add(&one)
}

/// Independent cross-check of [`weierstrass_correct`]: solve `reg(γD) = 1`
/// as a linear system over ℚ in the `r·(d+1)` kernel coordinates of `γ − 1`.
/// Returns the solution and whether it is unique.
pub fn weierstrass_by_linear_system(dd: &ZSeries, step: &SquareZeroStep) -> Result<Option<(ZSeries, bool)>> {
    let ring = step.total();
    let one = ZSeries::one(ring, None);
    let x = dd.reg().checked_sub(&one)?;
    if !x.is_in_i_poly(step) {
        return Err(not_correctable(
            "reg(D) - 1 is not a polynomial with kernel coefficients",
        ));
    }
    let d = x.top_degree().unwrap_or(0);
    let kernel = step.kernel_basis();
    let dim = ring.dim();
    let unknowns: Vec<(i64, usize)> = (0..=d).flat_map(|m| kernel.iter().map(move |&b| (m, b))).collect();
    if unknowns.is_empty() {
        return Ok(Some((one, true)));
    }
    // every nonnegative degree of γD that can be nonzero
    let top = dd.top_degree().unwrap_or(0).max(d);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for e in 0..=top {
        let base = dd.coeff_or_zero(e);
        let cols: Vec<RingElement> = unknowns
            .iter()
            .map(|&(m, b)| &ring.basis(b) * &dd.coeff_or_zero(e - m))
            .collect();
        for c in 0..dim {
            let target = if e == 0 && c == 0 {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            };
            rows.push(cols.iter().map(|v| v.coords()[c].clone()).collect::<Vec<_>>());
            rhs.push(target - &base.coords()[c]);
        }
    }
    let Some(sol) = linalg::solve(&rows, &rhs) else {
        return Ok(None);
    };
    let unique = linalg::rank(&rows) == unknowns.len();
    let terms = unknowns
        .iter()
        .zip(&sol)
        .filter(|(_, v)| !v.is_zero())
        .map(|(&(m, b), v)| (m, ring.basis(b).scale(v)));
    let gamma = ZSeries::from_terms(ring, None, terms)?.checked_add(&one)?;
    Ok(Some((gamma, unique)))
}

/// `γ(D₁D₂) = γ(D₁)·γ(D₂)`.
pub fn gamma_compatibility_check(d1: &ZSeries, d2: &ZSeries, step: &SquareZeroStep) -> Result<bool> {
    let g12 = weierstrass_correct(&d1.checked_mul(d2)?, step)?;
    let g1 = weierstrass_correct(d1, step)?;
    let g2 = weierstrass_correct(d2, step)?;
    Ok(g12 == g1.checked_mul(&g2)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftFlags {
    /// `g̃` reduces to the input point.
    pub reduces: bool,
    pub in_x_mu: bool,
    pub closure_bounds: bool,
    /// Orbit witness `(t·p′, λ, q′)` of `g̃` checks out.
    pub witness_valid: bool,
    /// Every `γ_k` lies in `1 + I[z]` and corrects its minor.
    pub gammas_correct: bool,
    /// `Δ_k(t) = γ_k`.
    pub torus_matches: bool,
    /// `γ(D_j·D_k) = γ_j·γ_k` for all `j ≤ k`.
    pub gamma_compatible: bool,
}

impl LiftFlags {
    pub fn all(&self) -> bool {
        self.reduces
            && self.in_x_mu
            && self.closure_bounds
            && self.witness_valid
            && self.gammas_correct
            && self.torus_matches
            && self.gamma_compatible
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiftReport {
    pub input: CertifiedPoint,
    pub mu: Coweight,
    pub step: SquareZeroStep,
    pub naive: CertifiedPoint,
    pub gammas: Vec<ZSeries>,
    pub t: LoopMatrix,
    pub lifted: CertifiedPoint,
    pub flags: LiftFlags,
    pub success: bool,
}

/// Random polynomial of degree `≤ deg` with coefficients in the kernel.
fn random_kernel_poly<R: Rng>(step: &SquareZeroStep, deg: u32, rng: &mut R) -> ZSeries {
    let ring = step.total();
    let kernel = step.kernel_basis();
    let terms = (0..=deg as i64).flat_map(|m| {
        kernel
            .iter()
            .map(|&b| (m, ring.basis(b).scale(&random_rational(rng))))
            .collect::<Vec<_>>()
    });
    ZSeries::from_terms(ring, None, terms).expect("same ring")
}

/// `1 + K` with `K` a random kernel-valued polynomial matrix; lies in
/// `G(Ã[z])` and reduces to the identity.
fn random_kernel_perturbation<R: Rng>(step: &SquareZeroStep, n: usize, rng: &mut R) -> LoopMatrix {
    let ring = step.total();
    LoopMatrix::from_fn(ring, n, |i, j| {
        let k = random_kernel_poly(step, 2, rng);
        if i == j {
            k.checked_add(&ZSeries::one(ring, None)).expect("same ring")
        } else {
            k
        }
    })
}

/// Lift a point of `𝒳^λ_μ(A)` to `𝒳^λ_μ(Ã)` along `step`.
///
/// The naive lift `g′ = p′·z^λ·q′` comes from the orbit witness with random
/// kernel perturbations; the minors of `g′` are then corrected by the torus
/// element whose trailing minors are the `γ_k` of [`weierstrass_correct`].
pub fn lift_point<R: Rng>(
    point: &CertifiedPoint,
    mu: &Coweight,
    step: &SquareZeroStep,
    rng: &mut R,
) -> Result<LiftReport> {
    let orbit = point.orbit()?.clone();
    let n = point.g.n();
    if !point.g.ring().same(step.quotient()) {
        return Err(Error::RingMismatch(
            point.g.ring().descriptor().to_string(),
            step.quotient().descriptor().to_string(),
        ));
    }
    if !in_x_mu(&point.g, mu)? {
        return Err(Error::Precondition(format!("input point is not in X_mu for mu = {mu}")));
    }
    let ring = step.total();
    let lam = orbit.lam.clone();
    let p1 = orbit
        .p
        .zero_section(step)?
        .checked_mul(&random_kernel_perturbation(step, n, rng))?;
    let q1 = random_kernel_perturbation(step, n, rng).checked_mul(&orbit.q.zero_section(step)?)?;
    let g1 = LoopMatrix::product(&[&p1, &LoopMatrix::z_power(ring, &lam), &q1])?;
    let naive = CertifiedPoint::with_orbit(g1.clone(), p1.clone(), lam.clone(), q1.clone());

    let dd = (1..=n)
        .map(|k| trailing_minor(&g1, k)?.shift(-mu.trailing_sum(k)))
        .collect::<Result<Vec<_>>>()?;
    let gammas = dd
        .iter()
        .map(|d| weierstrass_correct(d, step))
        .collect::<Result<Vec<_>>>()?;
    let t = torus_from_gammas(&gammas, None)?;
    let g2 = t.checked_mul(&g1)?;
    let lifted = CertifiedPoint::with_orbit(g2.clone(), t.checked_mul(&p1)?, lam.clone(), q1);

    let mut gammas_correct = true;
    for (g, d) in gammas.iter().zip(&dd) {
        let prod = g.checked_mul(d)?;
        let y = g.checked_sub(&ZSeries::one(ring, None))?;
        gammas_correct &= y.is_in_i_poly(step)
            && prod.reg() == ZSeries::one(ring, None)
            && y.top_degree() <= d.reg().checked_sub(&ZSeries::one(ring, None))?.top_degree();
    }
    let mut torus_matches = true;
    for (k, g) in gammas.iter().enumerate() {
        torus_matches &= trailing_minor(&t, k + 1)? == *g;
    }
    let mut gamma_compatible = true;
    for j in 0..n {
        for k in j..n {
            gamma_compatible &= gamma_compatibility_check(&dd[j], &dd[k], step)?;
        }
    }
    let flags = LiftFlags {
        reduces: g2.reduce(step)?.eq_on_window(&point.g),
        in_x_mu: in_x_mu(&g2, mu)?,
        closure_bounds: closure_bounds(&g2, &lam)?,
        witness_valid: lifted.orbit_valid()?,
        gammas_correct,
        torus_matches,
        gamma_compatible,
    };
    Ok(LiftReport {
        input: point.clone(),
        mu: mu.clone(),
        step: step.clone(),
        naive,
        gammas,
        t,
        success: flags.all(),
        flags,
        lifted,
    })
}

/// Lift a rational point successively along `ℚ[ε]/(ε^m) → ℚ[ε]/(ε^{m−1})`
/// for `m = 2, …, height`.
pub fn lift_through_tower<R: Rng>(
    point: &CertifiedPoint,
    mu: &Coweight,
    height: u32,
    rng: &mut R,
) -> Result<Vec<LiftReport>> {
    let mut current = point.clone();
    let mut out = Vec::new();
    for m in 2..=height {
        let step = SquareZeroStep::eps_tower(m)?;
        let report = lift_point(&current, mu, &step, rng)?;
        current = report.lifted.clone();
        out.push(report);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangentReport {
    pub point: LoopMatrix,
    pub lam: Coweight,
    pub mu: Coweight,
    pub window: i64,
    pub unknowns: usize,
    pub constraints: usize,
    pub corank: usize,
    pub corank_doubled: usize,
    pub stable: bool,
    /// The constraints vanish at the base point.
    pub residue_ok: bool,
    /// `⟨λ − μ, 2ρ⟩` from the standard dimension formula for slices; an
    /// external cross-check, not derived here.
    pub reference_dimension: i64,
}

/// `⟨λ − μ, 2ρ⟩` with `2ρ = (n−1, n−3, …, 1−n)`.
pub fn reference_dimension(lam: &Coweight, mu: &Coweight) -> i64 {
    let n = lam.n() as i64;
    lam.0
        .iter()
        .zip(&mu.0)
        .enumerate()
        .map(|(i, (l, m))| (l - m) * (n - 1 - 2 * i as i64))
        .sum()
}

/// Values of every constraint (minor coefficients of `g` and `g⁻¹` in the
/// band of `window` degrees below their bounds) at the given coordinates.
pub fn constraint_values(coords: &SliceCoordinates, window: i64) -> Result<Vec<RingElement>> {
    let lam = &coords.lam;
    let n = coords.n as i64;
    let reach = (1..=coords.n)
        .map(|k| (-lam.smallest_sum(k)).max(lam.largest_sum(k)))
        .max()
        .unwrap_or(0);
    let spread = lam.0.iter().chain(&coords.mu.0).map(|x| x.abs()).sum::<i64>();
    let mut margin = n * (spread + 1);
    for _ in 0..6 {
        match constraint_values_at(coords, window, window + reach + margin) {
            Err(Error::PrecisionExhausted(_)) => margin *= 2,
            other => return other,
        }
    }
    Err(Error::PrecisionExhausted("constraint band out of reach".into()))
}

fn constraint_values_at(coords: &SliceCoordinates, window: i64, prec: i64) -> Result<Vec<RingElement>> {
    let lam = &coords.lam;
    let (g, ginv) = coords.reconstruct_with_inverse(prec)?;
    let mut out = Vec::new();
    for (m, inverse) in [(&g, false), (&ginv, true)] {
        let mut minors: Vec<_> = m.all_minors()?.into_iter().collect();
        minors.sort_by_key(|(key, _)| *key);
        for ((rows, _), s) in minors {
            let k = rows.count_ones() as usize;
            let bound = if inverse {
                -lam.largest_sum(k)
            } else {
                lam.smallest_sum(k)
            };
            let lo = bound - window;
            if !s.is_known(lo) {
                return Err(Error::PrecisionExhausted(format!("minor known only above z^{lo}")));
            }
            for d in lo..bound {
                out.push(s.coeff_or_zero(d));
            }
        }
    }
    Ok(out)
}

fn corank_at(coords: &SliceCoordinates, window: i64) -> Result<(usize, usize, bool)> {
    let base = coords.to_vector();
    let u = base.len();
    let (ring, values): (Ring, Vec<RingElement>) = if u == 0 {
        (Ring::rational(), Vec::new())
    } else {
        let ring = Ring::new(RingDescriptor::free_square_zero(RingDescriptor::Rational, u as u32)?);
        let values = base
            .iter()
            .enumerate()
            .map(|(i, c)| &ring.from_rational(c.residue().clone()) + &ring.basis(i + 1))
            .collect();
        (ring, values)
    };
    let perturbed = coords.with_vector(&ring, &values)?;
    let cons = constraint_values(&perturbed, window)?;
    let residue_ok = cons.iter().all(|c| c.residue().is_zero());
    let rows: Vec<Vec<Rational>> = cons
        .iter()
        .map(|c| c.coords()[1..].to_vec())
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .collect();
    let rank = linalg::rank(&rows);
    Ok((u - rank, cons.len(), residue_ok))
}

/// Tangent dimension of `𝒲̄^λ_μ` at a rational slice point, as the corank
/// of the exact linearization of the truncated constraint system, at
/// windows `N` and `2N`.
pub fn tangent_dimension(point: &CertifiedPoint, lam: &Coweight, window: i64) -> Result<TangentReport> {
    let mu = point.slice()?.mu.clone();
    if !point.g.ring().same(&Ring::rational()) {
        return Err(Error::Precondition("tangent probes need a rational point".into()));
    }
    if !closure_bounds(&point.g, lam)? {
        return Err(Error::Precondition(format!("point fails the closure bounds for {lam}")));
    }
    let coords = coordinatize(&point.g, lam, &mu)?;
    let (corank, constraints, residue_ok) = corank_at(&coords, window)?;
    let (corank_doubled, _, residue_doubled) = corank_at(&coords, 2 * window)?;
    if corank != corank_doubled {
        return Err(Error::UnstableWindow(corank, corank_doubled));
    }
    Ok(TangentReport {
        point: point.g.clone(),
        lam: lam.clone(),
        mu: mu.clone(),
        window,
        unknowns: coords.unknown_count(),
        constraints,
        corank,
        corank_doubled,
        stable: true,
        residue_ok: residue_ok && residue_doubled,
        reference_dimension: reference_dimension(lam, &mu),
    })
}

/// Jacobian column for one coordinate direction, evaluated over
/// `ℚ[ε]/(ε²)` at `c₀ + ε·e_i`.
pub fn jacobian_column(coords: &SliceCoordinates, i: usize, window: i64) -> Result<Vec<Rational>> {
    let ring = Ring::eps(2);
    let values: Vec<RingElement> = coords
        .to_vector()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let v = ring.from_rational(c.residue().clone());
            if i == j {
                &v + &ring.eps_gen()
            } else {
                v
            }
        })
        .collect();
    let perturbed = coords.with_vector(&ring, &values)?;
    Ok(constraint_values(&perturbed, window)?
        .iter()
        .map(|c| c.coords()[1].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilring::int;
    use crate::slices::sample_slice_point;
    use crate::zseries::parse_series;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eps_step() -> SquareZeroStep {
        SquareZeroStep::eps_tower(2).unwrap()
    }

    fn e2(s: &str, prec: Option<i64>) -> ZSeries {
        parse_series(s, &Ring::eps(2), prec).unwrap()
    }

    #[test]
    fn weierstrass_hand_example() {
        let d = e2("1 + eps z + 2z^-1", Some(4));
        let g = weierstrass_correct(&d, &eps_step()).unwrap();
        assert_eq!(g, e2("-eps z + 1 + 2eps", None));
        let prod = g.checked_mul(&d).unwrap();
        assert!(prod.eq_on_window(&e2("1 + 2z^-1 + 4eps z^-1", None)));
    }

    #[test]
    fn weierstrass_trivial_cases() {
        let step = eps_step();
        assert_eq!(
            weierstrass_correct(&e2("1 + 3z^-1", Some(3)), &step).unwrap(),
            e2("1", None)
        );
        let d = e2("1 + eps z^2", None);
        let g = weierstrass_correct(&d, &step).unwrap();
        assert_eq!(g, e2("1 - eps z^2", None));
        assert_eq!(g.checked_mul(&d).unwrap(), e2("1", None));
    }

    #[test]
    fn weierstrass_rejects_bad_shapes() {
        let step = eps_step();
        assert_eq!(
            weierstrass_correct(&e2("1 + z", None), &step).unwrap_err().kind(),
            "NotCorrectableShape"
        );
        assert_eq!(
            weierstrass_correct(&e2("1 + eps z^3 + z^-1", Some(1)), &step)
                .unwrap_err()
                .kind(),
            "NotCorrectableShape"
        );
    }

    #[test]
    fn weierstrass_matches_linear_system() {
        let step = SquareZeroStep::free_square_zero(RingDescriptor::Rational, 2).unwrap();
        let r = step.total().clone();
        let e1 = r.basis(1);
        let e2b = r.basis(2);
        let d = ZSeries::from_terms(
            &r,
            Some(6),
            [
                (0, r.one()),
                (2, e1.scale(&int(3))),
                (1, e2b.clone()),
                (-1, r.from_int(2)),
                (-2, &r.from_int(-1) + &e1),
            ],
        )
        .unwrap();
        let g = weierstrass_correct(&d, &step).unwrap();
        let (oracle, unique) = weierstrass_by_linear_system(&d, &step).unwrap().unwrap();
        assert!(unique);
        assert_eq!(g, oracle);
    }

    #[test]
    fn compatibility_examples() {
        let step = eps_step();
        let d1 = e2("1 + eps z + 2z^-1", Some(6));
        let d2 = e2("1 + eps z^2", None);
        assert!(gamma_compatibility_check(&d1, &d2, &step).unwrap());
        assert!(gamma_compatibility_check(&d1, &e2("1", None), &step).unwrap());
    }

    #[test]
    fn rank_one_correction() {
        // g = 1 + z⁻¹ perturbed by p′ = 1 + εz: γ₁ = 1 − εz undoes it
        let step = eps_step();
        let g1 = e2("1 + eps z", None).checked_mul(&e2("1 + z^-1", None)).unwrap();
        let gamma = weierstrass_correct(&g1, &step).unwrap();
        assert_eq!(gamma, e2("1 - eps z", None));
        assert_eq!(gamma.checked_mul(&g1).unwrap(), e2("1 + z^-1", None));
    }

    #[test]
    fn lift_canonical_point_through_tower() {
        let q = Ring::rational();
        let g = LoopMatrix::from_strs(&q, None, &[&["1", "1"], &["0", "z"]]).unwrap();
        let p = LoopMatrix::from_strs(&q, None, &[&["0", "1"], &["1", "0"]]).unwrap();
        let qm = LoopMatrix::from_strs(&q, None, &[&["0", "1"], &["1", "1"]]).unwrap();
        let point = CertifiedPoint::with_orbit(g, p, Coweight(vec![1, 0]), qm);
        assert!(point.orbit_valid().unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reports = lift_through_tower(&point, &Coweight(vec![0, 1]), 4, &mut rng).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert!(r.success, "{:?}", r.flags);
        }
    }

    #[test]
    fn lift_along_identity_step_changes_nothing() {
        let q = Ring::rational();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let point = sample_slice_point(&Coweight(vec![1, 0]), &Coweight(vec![0, 1]), &mut rng).unwrap();
        let step = SquareZeroStep::identity(RingDescriptor::Rational);
        let r = lift_point(&point, &Coweight(vec![0, 1]), &step, &mut rng).unwrap();
        assert!(r.success);
        assert!(r.gammas.iter().all(|g| *g == ZSeries::one(&q, None)));
        assert_eq!(r.lifted.g, r.naive.g);
    }

    #[test]
    fn tangent_canonical_point() {
        let q = Ring::rational();
        let g = LoopMatrix::from_strs(&q, None, &[&["1", "1"], &["0", "z"]]).unwrap();
        let lam = Coweight(vec![1, 0]);
        let mu = Coweight(vec![0, 1]);
        let p = LoopMatrix::from_strs(&q, None, &[&["0", "1"], &["1", "0"]]).unwrap();
        let qm = LoopMatrix::from_strs(&q, None, &[&["0", "1"], &["1", "1"]]).unwrap();
        let point = crate::slices::retract_to_w(&CertifiedPoint::with_orbit(g, p, lam.clone(), qm), &mu, 8).unwrap();
        let rep = tangent_dimension(&point, &lam, 8).unwrap();
        assert_eq!(rep.unknowns, 3);
        assert_eq!(rep.corank, 2);
        assert!(rep.stable && rep.residue_ok);
        assert_eq!(rep.reference_dimension, 2);
    }

    #[test]
    fn tangent_torus_point_has_no_directions() {
        let lam = Coweight(vec![2, -1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let point = sample_slice_point(&lam, &lam, &mut rng).unwrap();
        let rep = tangent_dimension(&point, &lam, 6).unwrap();
        assert_eq!(rep.unknowns, 0);
        assert_eq!(rep.corank, 0);
    }

    #[test]
    fn one_pass_linearization_matches_dual_numbers() {
        // the ε-part of each constraint at c₀ + Σ e_i ε_i, read off in one
        // pass, agrees with evaluating direction by direction over ℚ[ε]/ε²
        let lam = Coweight(vec![2, 0]);
        let mu = Coweight(vec![0, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let point = sample_slice_point(&lam, &mu, &mut rng).unwrap();
        let coords = coordinatize(&point.g, &lam, &mu).unwrap();
        let u = coords.unknown_count();
        let ring = Ring::new(RingDescriptor::free_square_zero(RingDescriptor::Rational, u as u32).unwrap());
        let values: Vec<RingElement> = coords
            .to_vector()
            .iter()
            .enumerate()
            .map(|(i, c)| &ring.from_rational(c.residue().clone()) + &ring.basis(i + 1))
            .collect();
        let all = constraint_values(&coords.with_vector(&ring, &values).unwrap(), 6).unwrap();
        for i in 0..u {
            let col = jacobian_column(&coords, i, 6).unwrap();
            let from_all: Vec<Rational> = all.iter().map(|c| c.coords()[i + 1].clone()).collect();
            assert_eq!(col, from_all, "direction {i}");
        }
    }

    #[test]
    fn reference_dimension_values() {
        assert_eq!(reference_dimension(&Coweight(vec![1, 0]), &Coweight(vec![0, 1])), 2);
        assert_eq!(reference_dimension(&Coweight(vec![2, 0]), &Coweight(vec![0, 2])), 4);
        assert_eq!(
            reference_dimension(&Coweight(vec![1, 0, 0]), &Coweight(vec![0, 0, 1])),
            4
        );
    }
}
