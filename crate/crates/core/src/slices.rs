//! The spaces `𝒳_μ`, `𝒲_μ`, `𝒳^λ` as predicates on loop matrices, the
//! projection `π_μ`, the retraction onto `𝒲^λ_μ`, finite coordinates on the
//! slice, the stratum index set, and certified samplers.

use std::collections::BTreeSet;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loopmat::{
    gauss_decompose, is_in_g_poly, is_in_t1_tail, is_in_u1_tail, trailing_minor, unipotent_split, Coweight, Gauss,
    LoopMatrix, Side,
};
use crate::nilring::{rat, Rational, Ring, RingElement};
use crate::zseries::ZSeries;

/// `g = p·z^λ·q` with `p, q ∈ G[z]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitWitness {
    pub p: LoopMatrix,
    pub lam: Coweight,
    pub q: LoopMatrix,
}

/// `g = x·z^μ·t·y` with tail-shaped `x`, `t`, `y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceWitness {
    pub x: LoopMatrix,
    pub t: LoopMatrix,
    pub y: LoopMatrix,
    pub mu: Coweight,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitWitness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifiedPoint {
    pub g: LoopMatrix,
    #[serde(default)]
    pub witness: Witness,
}

impl CertifiedPoint {
    pub fn bare(g: LoopMatrix) -> CertifiedPoint {
        CertifiedPoint {
            g,
            witness: Witness::default(),
        }
    }

    pub fn with_orbit(g: LoopMatrix, p: LoopMatrix, lam: Coweight, q: LoopMatrix) -> CertifiedPoint {
        CertifiedPoint {
            g,
            witness: Witness {
                orbit: Some(OrbitWitness { p, lam, q }),
                slice: None,
            },
        }
    }

    pub fn orbit(&self) -> Result<&OrbitWitness> {
        self.witness
            .orbit
            .as_ref()
            .ok_or_else(|| Error::Precondition("point carries no orbit witness".into()))
    }

    pub fn slice(&self) -> Result<&SliceWitness> {
        self.witness
            .slice
            .as_ref()
            .ok_or_else(|| Error::Precondition("point carries no slice witness".into()))
    }

    /// `p, q ∈ G[z]` and `p·z^λ·q = g`.
    pub fn orbit_valid(&self) -> Result<bool> {
        let w = self.orbit()?;
        if !is_in_g_poly(&w.p) || !is_in_g_poly(&w.q) {
            return Ok(false);
        }
        let z = LoopMatrix::z_power(self.g.ring(), &w.lam);
        let prod = LoopMatrix::product(&[&w.p, &z, &w.q])?;
        Ok(prod.eq_on_window(&self.g))
    }

    /// Tail shapes of the factors and `x·z^μ·t·y = g` on the window.
    pub fn slice_valid(&self) -> Result<bool> {
        let w = self.slice()?;
        if !is_in_u1_tail(&w.x, Side::Plus) || !is_in_t1_tail(&w.t) || !is_in_u1_tail(&w.y, Side::Minus) {
            return Ok(false);
        }
        let z = LoopMatrix::z_power(self.g.ring(), &w.mu);
        let prod = LoopMatrix::product(&[&w.x, &z, &w.t, &w.y])?;
        Ok(prod.eq_on_window(&self.g))
    }

    /// Every witness present checks out.
    pub fn witnesses_valid(&self) -> Result<bool> {
        let orbit = self.witness.orbit.is_none() || self.orbit_valid()?;
        let slice = self.witness.slice.is_none() || self.slice_valid()?;
        Ok(orbit && slice)
    }
}

/// `μ ≤ λ`: `λ − μ` is a nonnegative sum of simple coroots.
pub fn dominance_leq(mu: &Coweight, lam: &Coweight) -> bool {
    if mu.n() != lam.n() || mu.total() != lam.total() {
        return false;
    }
    coroot_coefficients(mu, lam).iter().all(|&c| c >= 0)
}

/// `c_j` with `λ − μ = Σ c_j (e_j − e_{j+1})`, for `j < n`.
pub fn coroot_coefficients(mu: &Coweight, lam: &Coweight) -> Vec<i64> {
    let mut acc = 0;
    (0..lam.n().saturating_sub(1))
        .map(|j| {
            acc += lam.0[j] - mu.0[j];
            acc
        })
        .collect()
}

fn check_n(g: &LoopMatrix, c: &Coweight) -> Result<()> {
    if g.n() != c.n() {
        return Err(Error::DimensionMismatch(format!(
            "coweight {c} for a {}×{} matrix",
            g.n(),
            g.n()
        )));
    }
    Ok(())
}

/// `z^{−m_k(μ)}·Δ_k(g) ∈ 1 + z⁻¹A[[z⁻¹]]` for every `k`.
pub fn in_x_mu(g: &LoopMatrix, mu: &Coweight) -> Result<bool> {
    check_n(g, mu)?;
    for k in 1..=g.n() {
        let d = trailing_minor(g, k)?.shift(-mu.trailing_sum(k))?;
        if !d.is_one_plus_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Window that suffices for the shape tests on Gauss factors.
fn shape_floor(mu: &Coweight) -> i64 {
    1 + mu.0.iter().map(|x| x.abs()).sum::<i64>()
}

/// Gauss factors `x`, `z^{−μ}t`, `y` all have tail shape.
pub fn in_w_mu(g: &LoopMatrix, mu: &Coweight) -> Result<bool> {
    check_n(g, mu)?;
    let gd = gauss_decompose(g, Some(shape_floor(mu)))?;
    gauss_in_w(&gd, mu)
}

fn gauss_in_w(gd: &Gauss, mu: &Coweight) -> Result<bool> {
    let shifted = normalized_torus(&gd.t, mu)?;
    Ok(is_in_u1_tail(&gd.x, Side::Plus) && is_in_t1_tail(&shifted) && is_in_u1_tail(&gd.y, Side::Minus))
}

/// `z^{−μ}·t` for diagonal `t`.
fn normalized_torus(t: &LoopMatrix, mu: &Coweight) -> Result<LoopMatrix> {
    let diag = (0..t.n())
        .map(|j| t.get(j, j).shift(-mu.0[j]))
        .collect::<Result<Vec<_>>>()?;
    LoopMatrix::diag(diag)
}

/// Lowest-degree bound check: coefficients strictly below `bound` vanish.
/// On a finite window only degrees `≥ −N` can be inspected.
fn valuation_at_least(s: &ZSeries, bound: i64) -> Result<bool> {
    if let Some(f) = s.floor() {
        if f >= bound {
            return Err(Error::PrecisionExhausted(format!(
                "window floor {f} does not reach below the bound {bound}"
            )));
        }
    }
    Ok(s.low_degree().is_none_or(|d| d >= bound))
}

/// Necessary condition for `g ∈ 𝒳̄^λ`: every `k`-minor of `g` has no terms
/// below `z^{m_k(λ)}` and every `k`-minor of `g⁻¹` none below `z^{−B_k(λ)}`,
/// where `m_k` is the sum of the `k` smallest and `B_k` of the `k` largest
/// entries of `λ`.
pub fn closure_bounds(g: &LoopMatrix, lam: &Coweight) -> Result<bool> {
    check_n(g, lam)?;
    let ginv = match g.inverse(None) {
        Ok(inv) => inv,
        // an exact matrix whose inverse does not terminate has minors of
        // g⁻¹ with terms in arbitrarily low degree
        Err(Error::PrecisionExhausted(_)) if g.is_exact() => return Ok(false),
        Err(e) => return Err(e),
    };
    for (&(rows, _), m) in g.all_minors()?.iter() {
        let k = rows.count_ones() as usize;
        if !valuation_at_least(m, lam.smallest_sum(k))? {
            return Ok(false);
        }
    }
    for (&(rows, _), m) in ginv.all_minors()?.iter() {
        let k = rows.count_ones() as usize;
        if !valuation_at_least(m, -lam.largest_sum(k))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `π_μ(g) = (x_pol, y_pol)`, the polynomial parts of the Gauss factors.
pub fn project_pi_mu(g: &LoopMatrix, mu: &Coweight, floor: i64) -> Result<(LoopMatrix, LoopMatrix)> {
    let (xp, yp, _) = project_with_gauss(g, mu, floor)?;
    Ok((xp, yp))
}

fn project_with_gauss(g: &LoopMatrix, mu: &Coweight, floor: i64) -> Result<(LoopMatrix, LoopMatrix, Gauss)> {
    if !in_x_mu(g, mu)? {
        return Err(Error::Precondition(format!("point is not in X_mu for mu = {mu}")));
    }
    let gd = gauss_decompose(g, Some(floor))?;
    let (x_pol, x_tail) = unipotent_split(&gd.x, Side::Plus)?;
    let (y_pol, y_tail) = unipotent_split(&gd.y, Side::Minus)?;
    Ok((
        x_pol,
        y_pol,
        Gauss {
            x: x_tail,
            t: gd.t,
            y: y_tail,
        },
    ))
}

/// Move a point of `𝒳^λ_μ` into `𝒲^λ_μ` by `g ↦ x_pol⁻¹·g·y_pol⁻¹`, attaching
/// the slice witness and carrying the orbit witness along.
pub fn retract_to_w(point: &CertifiedPoint, mu: &Coweight, floor: i64) -> Result<CertifiedPoint> {
    let orbit = point.orbit()?.clone();
    let (x_pol, y_pol, tails) = project_with_gauss(&point.g, mu, floor)?;
    let x_inv = unipotent_inverse(&x_pol)?;
    let y_inv = unipotent_inverse(&y_pol)?;
    let g = LoopMatrix::product(&[&x_inv, &point.g, &y_inv])?;
    let p = x_inv.checked_mul(&orbit.p)?;
    let q = orbit.q.checked_mul(&y_inv)?;
    let t = normalized_torus(&tails.t, mu)?;
    Ok(CertifiedPoint {
        g,
        witness: Witness {
            orbit: Some(OrbitWitness { p, lam: orbit.lam, q }),
            slice: Some(SliceWitness {
                x: tails.x,
                t,
                y: tails.y,
                mu: mu.clone(),
            }),
        },
    })
}

/// Exact inverse of a polynomial unipotent matrix.
pub fn unipotent_inverse(u: &LoopMatrix) -> Result<LoopMatrix> {
    u.inverse(None)
}

/// Coefficients of the slice point in the finite affine space cut out by
/// the closure bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCoordinates {
    pub n: usize,
    pub lam: Coweight,
    pub mu: Coweight,
    /// `windows[j-1]`: number of `z⁻¹`-coefficients carried by `a_j` and by
    /// every `b_ij`, `c_ji` sharing index `j`.
    pub windows: Vec<usize>,
    /// `a_j = z^{−m(μ)}·Δ_{n−j+1}(g)`, `1 + O(z⁻¹)`.
    pub a: Vec<ZSeries>,
    /// `b_ij = a_j·x_ij`, `i < j`, row-major order.
    pub b: Vec<CoordEntry>,
    /// `c_ji = a_j·y_ji`, `i < j`, same order as `b`.
    pub c: Vec<CoordEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordEntry {
    pub i: usize,
    pub j: usize,
    pub value: ZSeries,
}

/// Window for trailing index `k`: `m_k(μ) − m_k(λ)`.
pub fn coordinate_windows(lam: &Coweight, mu: &Coweight) -> Result<Vec<usize>> {
    let n = lam.n();
    (1..=n)
        .map(|j| {
            let k = n - j + 1;
            let w = mu.trailing_sum(k) - lam.smallest_sum(k);
            usize::try_from(w)
                .map_err(|_| Error::Precondition(format!("negative coordinate window {w}; need mu <= lam")))
        })
        .collect()
}

fn window_check(s: &ZSeries, lo: i64, hi: i64, what: &str) -> Result<ZSeries> {
    if let Some((d, _)) = s.terms().find(|&(d, _)| d < lo || d > hi) {
        return Err(Error::WindowViolation(format!(
            "{what} has a term in degree {d} outside [{lo}, {hi}]"
        )));
    }
    ZSeries::from_terms(s.ring(), None, s.terms().map(|(d, c)| (d, c.clone())))
}

/// Read the coordinates off a point of `𝒲_μ` satisfying the `λ` closure
/// bounds. Coordinates are the exact polynomials `z^{−m}·(minor)`.
pub fn coordinatize(g: &LoopMatrix, lam: &Coweight, mu: &Coweight) -> Result<SliceCoordinates> {
    check_n(g, lam)?;
    check_n(g, mu)?;
    let n = g.n();
    let windows = coordinate_windows(lam, mu)?;
    let mut a = Vec::with_capacity(n);
    for j in 1..=n {
        let k = n - j + 1;
        let d = trailing_minor(g, k)?.shift(-mu.trailing_sum(k))?;
        if !d.coeff_or_zero(0).is_one() {
            return Err(Error::Precondition(format!("a_{j} does not start with 1")));
        }
        a.push(window_check(&d, -(windows[j - 1] as i64), 0, &format!("a_{j}"))?);
    }
    let side = |m: &LoopMatrix, name: &str| -> Result<Vec<CoordEntry>> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                // 0-based i < j; trailing index k = n − j
                let k = n - j;
                let mut rows = vec![i];
                rows.extend(j + 1..n);
                let cols: Vec<usize> = (j..n).collect();
                let v = m.minor0(&rows, &cols)?.shift(-mu.trailing_sum(k))?;
                let w = windows[j] as i64;
                let value = window_check(&v, -w, -1, &format!("{name}_{}{}", i + 1, j + 1))?;
                out.push(CoordEntry {
                    i: i + 1,
                    j: j + 1,
                    value,
                });
            }
        }
        Ok(out)
    };
    let b = side(g, "b")?;
    let c = side(&g.transpose(), "c")?
        .into_iter()
        .map(|e| CoordEntry {
            i: e.j,
            j: e.i,
            value: e.value,
        })
        .collect();
    Ok(SliceCoordinates {
        n,
        lam: lam.clone(),
        mu: mu.clone(),
        windows,
        a,
        b,
        c,
    })
}

impl SliceCoordinates {
    /// Number of scalar unknowns over the base field (times the base
    /// dimension for non-rational coefficient rings).
    pub fn unknown_count(&self) -> usize {
        let n = self.n;
        (1..=n).map(|j| self.windows[j - 1] * (1 + 2 * (j - 1))).sum()
    }

    /// Coefficient slots in a fixed order: `(kind, i, j, degree)`, with
    /// kind 0 for `a_j` (`i = j`), 1 for `b_ij`, 2 for `c_ji`.
    pub fn slots(&self) -> Vec<(u8, usize, usize, i64)> {
        let n = self.n;
        let mut out = Vec::new();
        for j in 1..=n {
            let w = self.windows[j - 1] as i64;
            for d in 1..=w {
                out.push((0, j, j, -d));
            }
            for i in 1..j {
                for d in 1..=w {
                    out.push((1, i, j, -d));
                }
            }
            for i in 1..j {
                for d in 1..=w {
                    out.push((2, j, i, -d));
                }
            }
        }
        out
    }

    fn slot_series(&self, kind: u8, i: usize, j: usize) -> &ZSeries {
        match kind {
            0 => &self.a[j - 1],
            1 => &self.b.iter().find(|e| e.i == i && e.j == j).expect("b entry").value,
            _ => &self.c.iter().find(|e| e.i == i && e.j == j).expect("c entry").value,
        }
    }

    /// Coefficients in slot order (rational rings only).
    pub fn to_vector(&self) -> Vec<RingElement> {
        self.slots()
            .into_iter()
            .map(|(kind, i, j, d)| self.slot_series(kind, i, j).coeff_or_zero(d))
            .collect()
    }

    /// Replace every slot coefficient from `values` (same order as `slots`),
    /// possibly over a different ring.
    pub fn with_vector(&self, ring: &Ring, values: &[RingElement]) -> Result<SliceCoordinates> {
        let slots = self.slots();
        if slots.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} coordinate slots",
                values.len(),
                slots.len()
            )));
        }
        let mut a: Vec<Vec<(i64, RingElement)>> = vec![vec![(0, ring.one())]; self.n];
        let mut b: Vec<CoordEntry> = Vec::new();
        let mut c: Vec<CoordEntry> = Vec::new();
        let mut pending: Vec<(u8, usize, usize, Vec<(i64, RingElement)>)> = Vec::new();
        for ((kind, i, j, d), v) in slots.into_iter().zip(values) {
            if kind == 0 {
                a[j - 1].push((d, v.clone()));
                continue;
            }
            match pending.iter_mut().find(|p| p.0 == kind && p.1 == i && p.2 == j) {
                Some(p) => p.3.push((d, v.clone())),
                None => pending.push((kind, i, j, vec![(d, v.clone())])),
            }
        }
        let a = a
            .into_iter()
            .map(|t| ZSeries::from_terms(ring, None, t))
            .collect::<Result<Vec<_>>>()?;
        for e in &self.b {
            let terms = pending
                .iter()
                .find(|p| p.0 == 1 && p.1 == e.i && p.2 == e.j)
                .map(|p| p.3.clone())
                .unwrap_or_default();
            b.push(CoordEntry {
                i: e.i,
                j: e.j,
                value: ZSeries::from_terms(ring, None, terms)?,
            });
        }
        for e in &self.c {
            let terms = pending
                .iter()
                .find(|p| p.0 == 2 && p.1 == e.i && p.2 == e.j)
                .map(|p| p.3.clone())
                .unwrap_or_default();
            c.push(CoordEntry {
                i: e.i,
                j: e.j,
                value: ZSeries::from_terms(ring, None, terms)?,
            });
        }
        Ok(SliceCoordinates {
            a,
            b,
            c,
            ..self.clone()
        })
    }

    /// `(x, t, y)` with `x_ij = b_ij/a_j`, `t_j = z^{μ_j} a_j/a_{j+1}`,
    /// `y_ji = c_ji/a_j`, and the inverses of the `a_j`, to precision `prec`.
    fn factors(&self, prec: i64) -> Result<(LoopMatrix, Vec<ZSeries>, LoopMatrix, Vec<ZSeries>)> {
        let n = self.n;
        let ring = self.a[0].ring().clone();
        // a little past prec so the products below keep the full window
        let margin = 1 + self.mu.0.iter().map(|x| x.abs()).sum::<i64>();
        let inv: Vec<ZSeries> = self
            .a
            .iter()
            .map(|a| a.inverse(Some(prec + margin)))
            .collect::<Result<_>>()?;
        let mut x = LoopMatrix::identity(&ring, n);
        let mut y = LoopMatrix::identity(&ring, n);
        for e in &self.b {
            x.set(e.i - 1, e.j - 1, e.value.checked_mul(&inv[e.j - 1])?);
        }
        for e in &self.c {
            y.set(e.i - 1, e.j - 1, e.value.checked_mul(&inv[e.i - 1])?);
        }
        let one = ZSeries::one(&ring, None);
        let t = (0..n)
            .map(|j| {
                let next = if j + 1 < n { &inv[j + 1] } else { &one };
                self.a[j].checked_mul(next)?.shift(self.mu.0[j])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((x, t, y, inv))
    }

    /// `g = x·t·y` to precision `prec`.
    pub fn reconstruct(&self, prec: i64) -> Result<LoopMatrix> {
        let (x, t, y, _) = self.factors(prec)?;
        let g = LoopMatrix::product(&[&x, &LoopMatrix::diag(t)?, &y])?;
        Ok(g.truncate(prec))
    }

    /// `g` and `g⁻¹ = y⁻¹·t⁻¹·x⁻¹` to precision `prec`.
    pub fn reconstruct_with_inverse(&self, prec: i64) -> Result<(LoopMatrix, LoopMatrix)> {
        let n = self.n;
        let (x, t, y, inv) = self.factors(prec)?;
        let one = ZSeries::one(x.ring(), None);
        let t_inv = (0..n)
            .map(|j| {
                let next = if j + 1 < n { &self.a[j + 1] } else { &one };
                next.checked_mul(&inv[j])?.shift(-self.mu.0[j])
            })
            .collect::<Result<Vec<_>>>()?;
        let g = LoopMatrix::product(&[&x, &LoopMatrix::diag(t)?, &y])?;
        let g_inv = LoopMatrix::product(&[&neumann_inverse(&y)?, &LoopMatrix::diag(t_inv)?, &neumann_inverse(&x)?])?;
        Ok((g.truncate(prec), g_inv.truncate(prec)))
    }
}

/// `(1 + N)⁻¹ = Σ_{k<n} (−N)^k` for strictly triangular `N`.
fn neumann_inverse(u: &LoopMatrix) -> Result<LoopMatrix> {
    let n = u.n();
    let id = LoopMatrix::identity(u.ring(), n);
    let minus_nil = id.checked_sub(u)?;
    let mut term = id.clone();
    let mut sum = id;
    for _ in 1..n {
        term = term.checked_mul(&minus_nil)?;
        sum = sum.checked_add(&term)?;
    }
    Ok(sum)
}

/// Dominant `ν` with `μ ≤ ν ≤ λ`, shallowest first (by the number of
/// simple coroots subtracted from `λ`), ties by decreasing `ν`.
pub fn enumerate_strata(lam: &Coweight, mu: &Coweight) -> Result<Vec<Coweight>> {
    if !lam.is_dominant() {
        return Err(Error::Precondition(format!("{lam} is not dominant")));
    }
    if !dominance_leq(mu, lam) {
        return Err(Error::Precondition(format!("{mu} is not below {lam}")));
    }
    let n = lam.n();
    let caps = coroot_coefficients(mu, lam);
    let mut found: BTreeSet<(i64, std::cmp::Reverse<Coweight>)> = BTreeSet::new();
    let mut c = vec![0i64; caps.len()];
    loop {
        let mut nu = lam.0.clone();
        for (j, &cj) in c.iter().enumerate() {
            nu[j] -= cj;
            nu[j + 1] += cj;
        }
        let nu = Coweight(nu);
        if nu.is_dominant() && dominance_leq(mu, &nu) {
            found.insert((c.iter().sum(), std::cmp::Reverse(nu)));
        }
        // odometer over 0..=caps
        let mut idx = 0;
        loop {
            if idx == c.len() {
                return Ok(found.into_iter().map(|(_, std::cmp::Reverse(nu))| nu).collect());
            }
            if c[idx] < caps[idx] {
                c[idx] += 1;
                break;
            }
            c[idx] = 0;
            idx += 1;
        }
        let _ = n;
    }
}

/// Working precision for a pipeline on `(λ, μ)` with inputs whose entries
/// reach degree `top`.
pub fn working_precision(lam: &Coweight, mu: &Coweight, top: i64) -> i64 {
    let n = lam.n() as i64;
    n * (lam.max() - mu.min()).max(0) + 8 + n * top.max(0)
}

/// `μ` with `t₀·g ∈ 𝒳_μ` for the constant diagonal `t₀` normalizing the
/// leading minor coefficients; returns `(μ, t₀)`.
pub fn infer_mu(g: &LoopMatrix) -> Result<(Coweight, LoopMatrix)> {
    let n = g.n();
    let ring = g.ring();
    let mut tops = vec![0i64; n + 1];
    let mut leads = vec![ring.one(); n + 1];
    for k in 1..=n {
        let d = trailing_minor(g, k)?;
        let Some(top) = d.top_degree() else {
            return Err(Error::NotInBigCell(k));
        };
        let lead = d.coeff_or_zero(top);
        if !lead.is_unit() {
            return Err(Error::NonUnitLeading(k));
        }
        tops[k] = top;
        leads[k] = lead;
    }
    // μ_{n−k+1} = m_k − m_{k−1}
    let mut mu = vec![0i64; n];
    for k in 1..=n {
        mu[n - k] = tops[k] - tops[k - 1];
    }
    // Δ_k(t₀) = 1/lead_k, so t₀_j = lead_{n−j}/lead_{n−j+1}
    let diag = (1..=n)
        .map(|j| {
            let k = n - j + 1;
            let v = &leads[k - 1] * &leads[k].inv()?;
            Ok(ZSeries::monomial(v, 0, None))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Coweight(mu), LoopMatrix::diag(diag)?))
}

/// A small nonzero rational, numerator in `±1..=3`, denominator `1..=2`.
pub fn random_unit_rational<R: Rng>(rng: &mut R) -> Rational {
    let num = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
    rat(num, rng.gen_range(1..=2))
}

pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
    if rng.gen_bool(0.25) {
        Rational::zero()
    } else {
        random_unit_rational(rng)
    }
}

/// Polynomial in `z` of degree `≤ deg` with small rational coefficients.
pub fn random_poly<R: Rng>(ring: &Ring, deg: u32, rng: &mut R) -> ZSeries {
    let coeffs: Vec<Rational> = (0..=deg).map(|_| random_rational(rng)).collect();
    ZSeries::from_rationals(ring, None, 0, &coeffs)
}

/// Random unipotent upper (plus) or lower (minus) matrix with polynomial
/// entries of degree `≤ deg`.
pub fn random_unipotent_poly<R: Rng>(ring: &Ring, n: usize, side: Side, deg: u32, rng: &mut R) -> LoopMatrix {
    LoopMatrix::from_fn(ring, n, |i, j| {
        let above = match side {
            Side::Plus => i < j,
            Side::Minus => i > j,
        };
        if i == j {
            ZSeries::one(ring, None)
        } else if above {
            random_poly(ring, deg, rng)
        } else {
            ZSeries::zero(ring, None)
        }
    })
}

/// Random constant diagonal with unit entries.
pub fn random_constant_torus<R: Rng>(ring: &Ring, n: usize, rng: &mut R) -> LoopMatrix {
    LoopMatrix::diag(
        (0..n)
            .map(|_| ZSeries::monomial(ring.from_rational(random_unit_rational(rng)), 0, None))
            .collect(),
    )
    .expect("n > 0")
}

/// Random element of `G(ℚ[z])` as `L·D·U`.
pub fn random_g_poly<R: Rng>(ring: &Ring, n: usize, deg: u32, rng: &mut R) -> LoopMatrix {
    let l = random_unipotent_poly(ring, n, Side::Minus, deg, rng);
    let d = random_constant_torus(ring, n, rng);
    let u = random_unipotent_poly(ring, n, Side::Plus, deg, rng);
    LoopMatrix::product(&[&l, &d, &u]).expect("same shape")
}

/// `g = p·z^λ·q` with random `p, q ∈ G[z]` of entry degree `≤ deg_bound`.
pub fn sample_orbit_point<R: Rng>(lam: &Coweight, deg_bound: u32, rng: &mut R) -> Result<CertifiedPoint> {
    if !lam.is_dominant() {
        return Err(Error::Precondition(format!("{lam} is not dominant")));
    }
    let ring = Ring::rational();
    let n = lam.n();
    let p = random_g_poly(&ring, n, deg_bound, rng);
    let q = random_g_poly(&ring, n, deg_bound, rng);
    let g = LoopMatrix::product(&[&p, &LoopMatrix::z_power(&ring, lam), &q])?;
    Ok(CertifiedPoint::with_orbit(g, p, lam.clone(), q))
}

/// `[[0, b], [−1/b, z + a]]` in rows and columns `j, j+1`: a point of
/// `G[z] ∩ 𝒲_{−α_j}`.
fn simple_factor<R: Rng>(ring: &Ring, n: usize, j: usize, rng: &mut R) -> LoopMatrix {
    let b = random_unit_rational(rng);
    let a = Rational::from_integer(rng.gen_range(-2..=2).into());
    let mut m = LoopMatrix::identity(ring, n);
    m.set(j, j, ZSeries::zero(ring, None));
    m.set(j, j + 1, ZSeries::monomial(ring.from_rational(b.clone()), 0, None));
    m.set(
        j + 1,
        j,
        ZSeries::monomial(ring.from_rational(-(Rational::from_integer(1.into()) / b)), 0, None),
    );
    m.set(
        j + 1,
        j + 1,
        ZSeries::from_rationals(ring, None, 0, &[a, Rational::from_integer(1.into())]),
    );
    m
}

/// A certified point of `𝒲^λ_μ` (both witnesses) built as
/// `z^λ·Z₁⋯Z_r` retracted after each factor, then conjugated by a random
/// constant torus element.
pub fn sample_slice_point<R: Rng>(lam: &Coweight, mu: &Coweight, rng: &mut R) -> Result<CertifiedPoint> {
    sample_slice_point_scaled(lam, mu, 1, rng)
}

/// As [`sample_slice_point`], with every internal working window multiplied
/// by `scale`. The sampled point does not depend on `scale`.
pub fn sample_slice_point_scaled<R: Rng>(
    lam: &Coweight,
    mu: &Coweight,
    scale: i64,
    rng: &mut R,
) -> Result<CertifiedPoint> {
    if !lam.is_dominant() || !dominance_leq(mu, lam) || lam.n() != mu.n() {
        return Err(Error::Precondition(format!("need {lam} dominant and {mu} <= {lam}")));
    }
    let ring = Ring::rational();
    let n = lam.n();
    let mut order: Vec<usize> = Vec::new();
    for (j, &c) in coroot_coefficients(mu, lam).iter().enumerate() {
        order.extend(std::iter::repeat_n(j, c as usize));
    }
    order.shuffle(rng);
    let z = LoopMatrix::z_power(&ring, lam);
    let id = LoopMatrix::identity(&ring, n);
    let mut current = CertifiedPoint::with_orbit(z, id.clone(), lam.clone(), id);
    let mut weight = lam.clone();
    for j in order {
        let f = simple_factor(&ring, n, j, rng);
        let orbit = current.orbit()?;
        let g = current.g.checked_mul(&f)?;
        let q = orbit.q.checked_mul(&f)?;
        let next = CertifiedPoint::with_orbit(g, orbit.p.clone(), lam.clone(), q);
        weight.0[j] -= 1;
        weight.0[j + 1] += 1;
        let floor = scale * working_precision(lam, &weight, next.g.max_top_degree().unwrap_or(0));
        current = retract_to_w(&next, &weight, floor)?;
    }
    if current.witness.slice.is_none() {
        current = retract_to_w(&current, mu, scale * working_precision(lam, mu, lam.max()))?;
    }
    let s = random_constant_torus(&ring, n, rng);
    let s_inv = s.inverse(None)?;
    conjugate_point(&current, &s, &s_inv, mu)
}

/// `s·g·s⁻¹` for constant diagonal `s`, witnesses transported.
fn conjugate_point(
    point: &CertifiedPoint,
    s: &LoopMatrix,
    s_inv: &LoopMatrix,
    mu: &Coweight,
) -> Result<CertifiedPoint> {
    let g = LoopMatrix::product(&[s, &point.g, s_inv])?;
    let orbit = point
        .witness
        .orbit
        .as_ref()
        .map(|o| -> Result<OrbitWitness> {
            Ok(OrbitWitness {
                p: s.checked_mul(&o.p)?,
                lam: o.lam.clone(),
                q: o.q.checked_mul(s_inv)?,
            })
        })
        .transpose()?;
    let slice = match &point.witness.slice {
        Some(w) => Some(SliceWitness {
            x: LoopMatrix::product(&[s, &w.x, s_inv])?,
            t: w.t.clone(),
            y: LoopMatrix::product(&[s, &w.y, s_inv])?,
            mu: mu.clone(),
        }),
        None => None,
    };
    Ok(CertifiedPoint {
        g,
        witness: Witness { orbit, slice },
    })
}

/// A certified point of `𝒳^λ_μ` (orbit witness only): `u·w·v` with `w` a
/// sampled slice point, `u ∈ U⁺[z]`, `v ∈ U⁻[z]` of degree `≤ deg`.
pub fn sample_x_point<R: Rng>(lam: &Coweight, mu: &Coweight, deg: u32, rng: &mut R) -> Result<CertifiedPoint> {
    sample_x_point_scaled(lam, mu, deg, 1, rng)
}

pub fn sample_x_point_scaled<R: Rng>(
    lam: &Coweight,
    mu: &Coweight,
    deg: u32,
    scale: i64,
    rng: &mut R,
) -> Result<CertifiedPoint> {
    let w = sample_slice_point_scaled(lam, mu, scale, rng)?;
    let ring = w.g.ring().clone();
    let n = lam.n();
    let u = random_unipotent_poly(&ring, n, Side::Plus, deg, rng);
    let v = random_unipotent_poly(&ring, n, Side::Minus, deg, rng);
    let orbit = w.orbit()?;
    Ok(CertifiedPoint::with_orbit(
        LoopMatrix::product(&[&u, &w.g, &v])?,
        u.checked_mul(&orbit.p)?,
        lam.clone(),
        orbit.q.checked_mul(&v)?,
    ))
}
