//! Truncated Laurent series in `z⁻¹` with exact coefficients.
//!
//! A series is either *exact* (a Laurent polynomial, every coefficient known)
//! or carries a precision `N`: coefficients of `z^d` are known for `d ≥ -N`
//! and unknown below. Degrees `≥ 0` are always known since `N ≥ 0`, which is
//! what makes the membership predicates decidable.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilring::{parse_rational, Rational, Ring, RingDescriptor, RingElement, SquareZeroStep};

#[derive(Clone)]
pub struct ZSeries {
    ring: Ring,
    /// `None` for exact Laurent polynomials.
    prec: Option<i64>,
    /// Degree of `coeffs[0]`.
    lo: i64,
    /// Trimmed: empty, or first and last entries nonzero.
    coeffs: Vec<RingElement>,
}

fn check_prec(prec: Option<i64>, what: &str) -> Result<()> {
    match prec {
        Some(n) if n < 0 => Err(Error::PrecisionExhausted(format!(
            "{what} would leave precision {n} < 0"
        ))),
        _ => Ok(()),
    }
}

impl ZSeries {
    pub fn zero(ring: &Ring, prec: Option<i64>) -> ZSeries {
        ZSeries {
            ring: ring.clone(),
            prec,
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn one(ring: &Ring, prec: Option<i64>) -> ZSeries {
        ZSeries::monomial(ring.one(), 0, prec)
    }

    /// `c·z^d`. Truncated away if `d` is below the window.
    pub fn monomial(c: RingElement, d: i64, prec: Option<i64>) -> ZSeries {
        let ring = c.ring().clone();
        let mut s = ZSeries {
            ring,
            prec,
            lo: d,
            coeffs: vec![c],
        };
        s.normalize();
        s
    }

    pub fn z_power(ring: &Ring, d: i64) -> ZSeries {
        ZSeries::monomial(ring.one(), d, None)
    }

    /// Build from `(degree, coefficient)` pairs; repeated degrees add up.
    pub fn from_terms<I>(ring: &Ring, prec: Option<i64>, terms: I) -> Result<ZSeries>
    where
        I: IntoIterator<Item = (i64, RingElement)>,
    {
        check_prec(prec, "constructing a series")?;
        let mut map: BTreeMap<i64, RingElement> = BTreeMap::new();
        for (d, c) in terms {
            ring.check_same(c.ring())?;
            match map.get_mut(&d) {
                Some(acc) => acc.add_assign_ref(&c),
                None => {
                    map.insert(d, c);
                }
            }
        }
        Ok(ZSeries::from_map(ring, prec, map))
    }

    /// Rational coefficients, `coeffs[i]` at degree `lo + i`.
    pub fn from_rationals(ring: &Ring, prec: Option<i64>, lo: i64, coeffs: &[Rational]) -> ZSeries {
        let coeffs = coeffs.iter().map(|q| ring.from_rational(q.clone())).collect();
        let mut s = ZSeries {
            ring: ring.clone(),
            prec,
            lo,
            coeffs,
        };
        s.normalize();
        s
    }

    fn from_map(ring: &Ring, prec: Option<i64>, map: BTreeMap<i64, RingElement>) -> ZSeries {
        let Some((&lo, _)) = map.iter().next() else {
            return ZSeries::zero(ring, prec);
        };
        let hi = *map.keys().next_back().unwrap();
        let mut coeffs = vec![ring.zero(); (hi - lo + 1) as usize];
        for (d, c) in map {
            coeffs[(d - lo) as usize] = c;
        }
        let mut s = ZSeries {
            ring: ring.clone(),
            prec,
            lo,
            coeffs,
        };
        s.normalize();
        s
    }

    /// Drop coefficients below the window and trim zeros at both ends.
    fn normalize(&mut self) {
        if let Some(n) = self.prec {
            let floor = -n;
            if self.lo < floor {
                let cut = ((floor - self.lo) as usize).min(self.coeffs.len());
                self.coeffs.drain(..cut);
                self.lo = floor;
            }
        }
        while self.coeffs.last().is_some_and(RingElement::is_zero) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.lo = 0;
        } else if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// `None` means exact.
    pub fn prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Lowest degree whose coefficient is known, `None` if all are.
    pub fn floor(&self) -> Option<i64> {
        self.prec.map(|n| -n)
    }

    pub fn is_known(&self, d: i64) -> bool {
        self.prec.is_none_or(|n| d >= -n)
    }

    /// Coefficient of `z^d`, `None` when it lies below the window.
    pub fn coeff(&self, d: i64) -> Option<RingElement> {
        if !self.is_known(d) {
            return None;
        }
        Some(self.coeff_or_zero(d))
    }

    pub(crate) fn coeff_or_zero(&self, d: i64) -> RingElement {
        if d < self.lo || d >= self.lo + self.coeffs.len() as i64 {
            self.ring.zero()
        } else {
            self.coeffs[(d - self.lo) as usize].clone()
        }
    }

    fn coeff_ref(&self, d: i64) -> Option<&RingElement> {
        if d < self.lo {
            return None;
        }
        self.coeffs.get((d - self.lo) as usize)
    }

    /// Nonzero stored coefficients in increasing degree.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &RingElement)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.lo + i as i64, c))
    }

    /// Largest degree with a nonzero coefficient; `None` is minus infinity.
    pub fn top_degree(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.lo + self.coeffs.len() as i64 - 1)
    }

    /// Smallest degree with a nonzero stored coefficient.
    pub fn low_degree(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.lo)
    }

    /// All stored coefficients vanish (the series is zero on its window).
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// No nonzero coefficient in negative degree.
    pub fn is_polynomial(&self) -> bool {
        self.coeffs.is_empty() || self.lo >= 0
    }

    /// Coarsen to precision `n` (never refines).
    pub fn truncate(&self, n: i64) -> ZSeries {
        let prec = Some(self.prec.map_or(n, |p| p.min(n)));
        let mut s = ZSeries { prec, ..self.clone() };
        s.normalize();
        s
    }

    /// Forget the window: treat the stored coefficients as exact.
    pub fn assume_exact(&self) -> ZSeries {
        ZSeries {
            prec: None,
            ..self.clone()
        }
    }

    pub fn checked_add(&self, other: &ZSeries) -> Result<ZSeries> {
        self.combine(other, false)
    }

    pub fn checked_sub(&self, other: &ZSeries) -> Result<ZSeries> {
        self.combine(other, true)
    }

    fn combine(&self, other: &ZSeries, negate: bool) -> Result<ZSeries> {
        self.ring.check_same(&other.ring)?;
        let prec = match (self.prec, other.prec) {
            (None, p) | (p, None) => p,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        if self.is_zero() {
            let o = if negate { other.neg() } else { other.clone() };
            return Ok(o.truncate_opt(prec));
        }
        if other.is_zero() {
            return Ok(self.truncate_opt(prec));
        }
        let lo = self.lo.min(other.lo);
        let hi = self.top_degree().unwrap().max(other.top_degree().unwrap());
        let mut coeffs = vec![self.ring.zero(); (hi - lo + 1) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[(self.lo - lo) as usize + i].add_assign_ref(c);
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            let slot = &mut coeffs[(other.lo - lo) as usize + i];
            if negate {
                slot.sub_assign_ref(c);
            } else {
                slot.add_assign_ref(c);
            }
        }
        let mut s = ZSeries {
            ring: self.ring.clone(),
            prec,
            lo,
            coeffs,
        };
        s.normalize();
        Ok(s)
    }

    fn truncate_opt(&self, prec: Option<i64>) -> ZSeries {
        match prec {
            None => self.clone(),
            Some(n) => self.truncate(n),
        }
    }

    /// Product with sound window tracking: the output precision is
    /// `min(N_a − max(0, top b), N_b − max(0, top a))`.
    pub fn checked_mul(&self, other: &ZSeries) -> Result<ZSeries> {
        self.ring.check_same(&other.ring)?;
        let pos_top = |s: &ZSeries| s.top_degree().map_or(0, |t| t.max(0));
        let from_a = self.prec.map(|n| n - pos_top(other));
        let from_b = other.prec.map(|n| n - pos_top(self));
        let prec = match (from_a, from_b) {
            (None, p) | (p, None) => p,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        check_prec(prec, "multiplication")?;
        if self.is_zero() || other.is_zero() {
            return Ok(ZSeries::zero(&self.ring, prec));
        }
        let lo = self.lo + other.lo;
        let hi = self.top_degree().unwrap() + other.top_degree().unwrap();
        let floor = prec.map_or(lo, |n| lo.max(-n));
        if floor > hi {
            return Ok(ZSeries::zero(&self.ring, prec));
        }
        let mut coeffs = vec![self.ring.zero(); (hi - floor + 1) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let da = self.lo + i as i64;
            for (j, b) in other.coeffs.iter().enumerate() {
                let d = da + other.lo + j as i64;
                if d < floor || b.is_zero() {
                    continue;
                }
                a.mul_acc_into(b, &mut coeffs[(d - floor) as usize]);
            }
        }
        let mut s = ZSeries {
            ring: self.ring.clone(),
            prec,
            lo: floor,
            coeffs,
        };
        s.normalize();
        Ok(s)
    }

    pub fn neg(&self) -> ZSeries {
        ZSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }

    /// Multiply by a ring constant.
    pub fn scale(&self, c: &RingElement) -> Result<ZSeries> {
        self.ring.check_same(c.ring())?;
        let mut s = ZSeries {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            ..self.clone()
        };
        s.normalize();
        Ok(s)
    }

    /// Multiply by `z^k`; the window moves with the coefficients.
    pub fn shift(&self, k: i64) -> Result<ZSeries> {
        let prec = self.prec.map(|n| n - k);
        check_prec(prec, "shift")?;
        let lo = if self.coeffs.is_empty() { 0 } else { self.lo + k };
        Ok(ZSeries {
            prec,
            lo,
            ..self.clone()
        })
    }

    /// Polynomial part (degrees `≥ 0`). Always exact.
    pub fn reg(&self) -> ZSeries {
        let mut s = ZSeries {
            ring: self.ring.clone(),
            prec: None,
            lo: self.lo,
            coeffs: self.coeffs.clone(),
        };
        if s.lo < 0 {
            let cut = ((-s.lo) as usize).min(s.coeffs.len());
            s.coeffs.drain(..cut);
            s.lo = 0;
        }
        s.normalize();
        s
    }

    /// `s − reg(s)`: the part in `z⁻¹A[[z⁻¹]]`.
    pub fn negative_part(&self) -> ZSeries {
        let mut s = self.clone();
        let keep = (-s.lo).clamp(0, s.coeffs.len() as i64) as usize;
        s.coeffs.truncate(keep);
        s.normalize();
        s
    }

    /// Apply a coefficientwise map into another ring (reduction, lifting).
    pub fn map_coeffs<F>(&self, ring: &Ring, f: F) -> Result<ZSeries>
    where
        F: Fn(&RingElement) -> Result<RingElement>,
    {
        let coeffs = self.coeffs.iter().map(f).collect::<Result<Vec<_>>>()?;
        let mut s = ZSeries {
            ring: ring.clone(),
            prec: self.prec,
            lo: self.lo,
            coeffs,
        };
        s.normalize();
        Ok(s)
    }

    pub fn reduce(&self, step: &SquareZeroStep) -> Result<ZSeries> {
        self.ring.check_same(step.total())?;
        self.map_coeffs(step.quotient(), |c| step.reduce(c))
    }

    pub fn zero_section(&self, step: &SquareZeroStep) -> Result<ZSeries> {
        self.ring.check_same(step.quotient())?;
        self.map_coeffs(step.total(), |c| step.zero_section(c))
    }

    /// Equality of all coefficients both sides know.
    pub fn eq_on_window(&self, other: &ZSeries) -> bool {
        if !self.ring.same(&other.ring) {
            return false;
        }
        let floor = match (self.floor(), other.floor()) {
            (None, None) => i64::MIN,
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => a.max(b),
        };
        let lo = self.lo.min(other.lo).max(floor);
        let hi = match (self.top_degree(), other.top_degree()) {
            (None, None) => return true,
            (a, b) => a.max(b).unwrap(),
        };
        (lo..=hi).all(|d| {
            let zero = self.ring.zero();
            let a = self.coeff_ref(d).unwrap_or(&zero);
            let b = other.coeff_ref(d).unwrap_or(&zero);
            a == b
        })
    }

    /// `1 + z⁻¹A[[z⁻¹]]`: constant term one, nothing in positive degree.
    pub fn is_one_plus_negative(&self) -> bool {
        self.top_degree() == Some(0) && self.coeff_or_zero(0).is_one()
    }

    /// Polynomial with every coefficient in the kernel of `step`.
    pub fn is_in_i_poly(&self, step: &SquareZeroStep) -> bool {
        self.ring.same(step.total()) && self.is_polynomial() && self.terms().all(|(_, c)| step.in_kernel(c))
    }

    /// Inverse of a series of the shape `n + c·z^d·(1 + tail)` with `c` a
    /// unit, `tail` of negative degree and `n` a nilpotent-coefficient part
    /// above degree `d`.
    ///
    /// `target` is the precision wanted for an infinite expansion. With
    /// `None`, a finite-precision input yields its natural precision
    /// `N + 2d`, and an exact input must have a terminating inverse.
    pub fn inverse(&self, target: Option<i64>) -> Result<ZSeries> {
        if let Some(t) = target {
            check_prec(Some(t), "inverse")?;
        }
        // Highest unit coefficient.
        let Some(d) = self.terms().filter(|(_, c)| c.is_unit()).map(|(d, _)| d).last() else {
            return Err(Error::NotInvertibleShape("no coefficient is a unit".to_string()));
        };
        let ring = &self.ring;
        let c_inv = self.coeff_or_zero(d).inv()?;

        // tail_j = c⁻¹·coefficient at d − j, j ≥ 1
        let tail_len = (d - self.lo).max(0) as usize;
        let tail: Vec<RingElement> = (1..=tail_len as i64)
            .map(|j| &self.coeff_or_zero(d - j) * &c_inv)
            .collect();
        let tail_nilpotent = tail.iter().all(RingElement::is_nilpotent);

        let (w_coeffs, prec) = match (self.prec, target) {
            (None, _) if tail_nilpotent => (geometric_exact(ring, &tail), None),
            (None, None) => {
                return Err(Error::PrecisionExhausted(
                    "exact series has an infinite inverse; a target precision is required".into(),
                ))
            }
            (Some(n), t) => {
                let natural = n + 2 * d;
                check_prec(Some(natural), "inverse")?;
                let p = t.map_or(natural, |t| t.min(natural));
                (geometric_recurrence(ring, &tail, p - d), Some(p))
            }
            (None, Some(t)) => (geometric_recurrence(ring, &tail, t - d), Some(t)),
        };
        // v⁻¹ = c⁻¹ z^{-d} w, w_j at relative degree -j
        let vinv_terms = w_coeffs
            .into_iter()
            .enumerate()
            .map(|(j, w)| (-d - j as i64, &w * &c_inv));
        let vinv = ZSeries::from_terms(ring, prec, vinv_terms)?;

        let nil = ZSeries::from_terms(
            ring,
            None,
            self.terms().filter(|(k, _)| *k > d).map(|(k, c)| (k, c.clone())),
        )?;
        if nil.is_zero() {
            return Ok(vinv);
        }
        // s⁻¹ = v⁻¹ Σ (−n v⁻¹)^k, finite because n has nilpotent coefficients
        let m = nil.checked_mul(&vinv)?.neg();
        let mut sum = ZSeries::one(ring, None);
        let mut term = ZSeries::one(ring, None);
        loop {
            term = term.checked_mul(&m)?;
            if term.is_zero() {
                break;
            }
            sum = sum.checked_add(&term)?;
        }
        vinv.checked_mul(&sum)
    }
}

/// Coefficients of `(1 + Σ_j t_j z^{-j})⁻¹` for relative degrees `0..=depth`.
fn geometric_recurrence(ring: &Ring, tail: &[RingElement], depth: i64) -> Vec<RingElement> {
    if depth < 0 {
        return Vec::new();
    }
    let depth = depth as usize;
    let mut w: Vec<RingElement> = Vec::with_capacity(depth + 1);
    w.push(ring.one());
    for j in 1..=depth {
        let mut acc = ring.zero();
        for i in 1..=j.min(tail.len()) {
            if tail[i - 1].is_zero() || w[j - i].is_zero() {
                continue;
            }
            tail[i - 1].mul_acc_into(&w[j - i], &mut acc);
        }
        w.push(-&acc);
    }
    w
}

/// Same inverse when every tail coefficient is nilpotent, so the geometric
/// series terminates and the result is exact.
fn geometric_exact(ring: &Ring, tail: &[RingElement]) -> Vec<RingElement> {
    let t = ZSeries::from_terms(ring, None, tail.iter().enumerate().map(|(j, c)| (-(j as i64) - 1, -c)))
        .expect("same ring");
    let mut sum = ZSeries::one(ring, None);
    let mut term = ZSeries::one(ring, None);
    loop {
        term = term.checked_mul(&t).expect("exact product");
        if term.is_zero() {
            break;
        }
        sum = sum.checked_add(&term).expect("same ring");
    }
    let depth = -sum.lo;
    (0..=depth).map(|j| sum.coeff_or_zero(-j)).collect()
}

pub fn s_add(a: &ZSeries, b: &ZSeries) -> Result<ZSeries> {
    a.checked_add(b)
}

pub fn s_neg(a: &ZSeries) -> ZSeries {
    a.neg()
}

pub fn s_mul(a: &ZSeries, b: &ZSeries) -> Result<ZSeries> {
    a.checked_mul(b)
}

pub fn s_inv(s: &ZSeries) -> Result<ZSeries> {
    s.inverse(None)
}

pub fn reg(s: &ZSeries) -> ZSeries {
    s.reg()
}

pub fn top_degree(s: &ZSeries) -> Option<i64> {
    s.top_degree()
}

pub fn is_one_plus_negative(s: &ZSeries) -> bool {
    s.is_one_plus_negative()
}

pub fn is_in_i_poly(s: &ZSeries, step: &SquareZeroStep) -> bool {
    s.is_in_i_poly(step)
}

impl PartialEq for ZSeries {
    fn eq(&self, other: &Self) -> bool {
        self.ring.same(&other.ring) && self.prec == other.prec && self.lo == other.lo && self.coeffs == other.coeffs
    }
}
impl Eq for ZSeries {}

impl std::ops::Add for &ZSeries {
    type Output = ZSeries;
    fn add(self, rhs: &ZSeries) -> ZSeries {
        self.checked_add(rhs).expect("series add")
    }
}

impl std::ops::Sub for &ZSeries {
    type Output = ZSeries;
    fn sub(self, rhs: &ZSeries) -> ZSeries {
        self.checked_sub(rhs).expect("series sub")
    }
}

impl std::ops::Mul for &ZSeries {
    type Output = ZSeries;
    fn mul(self, rhs: &ZSeries) -> ZSeries {
        self.checked_mul(rhs).expect("series mul")
    }
}

impl fmt::Display for ZSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, c) in self.terms().collect::<Vec<_>>().into_iter().rev() {
            let body = c.to_string();
            let single = c.coords().iter().filter(|q| !q.is_zero()).count() == 1;
            let neg = single && body.starts_with('-');
            let mag = if neg { body[1..].to_string() } else { body };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mag = if single { mag } else { format!("({mag})") };
            match d {
                0 => write!(f, "{mag}")?,
                _ => {
                    let zp = if d == 1 { "z".to_string() } else { format!("z^{d}") };
                    if mag == "1" {
                        write!(f, "{zp}")?
                    } else {
                        write!(f, "{mag}{zp}")?
                    }
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(n) = self.prec {
            write!(f, " + O(z^{})", -n - 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for ZSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.ring.descriptor(), self)
    }
}

/// Parse a Laurent polynomial such as `"z^2 + 3 - 5/2 z^-1 + eps*z"`.
/// `eps` (or `e`) is the generator of an eps tower.
pub fn parse_series(expr: &str, ring: &Ring, prec: Option<i64>) -> Result<ZSeries> {
    let bad = |m: &str| Error::Parse(format!("{m} in series {expr:?}"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    // split into signed terms; a sign right after '^' or '(' is an exponent sign
    let mut terms: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    let chars: Vec<char> = s.chars().collect();
    for (i, &ch) in chars.iter().enumerate() {
        let prev = if i > 0 { chars[i - 1] } else { ' ' };
        if (ch == '+' || ch == '-') && prev != '^' && prev != '(' {
            if !cur.is_empty() {
                terms.push((neg, std::mem::take(&mut cur)));
            } else if i > 0 && prev != '+' && prev != '-' {
                return Err(bad("dangling sign"));
            }
            neg = ch == '-';
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        terms.push((neg, cur));
    }
    let mut out = Vec::new();
    for (neg, term) in terms {
        let mut coef = Rational::one();
        let mut zdeg = 0i64;
        let mut epsdeg = 0usize;
        let mut rest = term.as_str();
        while !rest.is_empty() {
            rest = rest.trim_start_matches('*');
            if rest.is_empty() {
                break;
            }
            let (sym, after) = if let Some(a) = rest.strip_prefix("eps") {
                ("eps", a)
            } else if let Some(a) = rest.strip_prefix('e') {
                ("eps", a)
            } else if let Some(a) = rest.strip_prefix('z') {
                ("z", a)
            } else {
                let end = rest
                    .find(|c: char| !(c.is_ascii_digit() || c == '/'))
                    .unwrap_or(rest.len());
                if end == 0 {
                    return Err(bad("unexpected character"));
                }
                coef *= parse_rational(&rest[..end])?;
                rest = &rest[end..];
                continue;
            };
            let (exp, after) = parse_exponent(after).ok_or_else(|| bad("bad exponent"))?;
            match sym {
                "z" => zdeg += exp,
                _ => {
                    if exp < 0 {
                        return Err(bad("negative eps power"));
                    }
                    epsdeg += exp as usize
                }
            }
            rest = after;
        }
        if neg {
            coef = -coef;
        }
        let c = match epsdeg {
            0 => ring.from_rational(coef),
            k => {
                if !matches!(ring.descriptor(), RingDescriptor::EpsTower(_)) {
                    return Err(bad("eps used outside an eps tower"));
                }
                if k >= ring.dim() {
                    ring.zero()
                } else {
                    ring.basis(k).scale(&coef)
                }
            }
        };
        out.push((zdeg, c));
    }
    ZSeries::from_terms(ring, prec, out)
}

fn parse_exponent(s: &str) -> Option<(i64, &str)> {
    let Some(rest) = s.strip_prefix('^') else {
        return Some((1, s));
    };
    let (inner, after) = if let Some(r) = rest.strip_prefix('(') {
        let close = r.find(')')?;
        (&r[..close], &r[close + 1..])
    } else {
        let end = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && c == '-')))
            .map_or(rest.len(), |(i, _)| i);
        (&rest[..end], &rest[end..])
    };
    Some((inner.parse().ok()?, after))
}

struct TermsMap<'a>(&'a ZSeries);

impl Serialize for TermsMap<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(None)?;
        for (d, c) in self.0.terms() {
            map.serialize_entry(&d.to_string(), c)?;
        }
        map.end()
    }
}

impl Serialize for ZSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ZSeries", 3)?;
        st.serialize_field("ring", self.ring.descriptor())?;
        st.serialize_field("prec", &self.prec)?;
        st.serialize_field("coeffs", &TermsMap(self))?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSeries {
    Full {
        ring: RingDescriptor,
        prec: Option<i64>,
        coeffs: BTreeMap<String, RingElement>,
    },
    Expr {
        expr: String,
        #[serde(default)]
        ring: Option<RingDescriptor>,
        #[serde(default)]
        prec: Option<i64>,
    },
}

impl<'de> Deserialize<'de> for ZSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawSeries::deserialize(d)?;
        let res = match raw {
            RawSeries::Full { ring, prec, coeffs } => {
                let ring = Ring::new(ring);
                let terms = coeffs
                    .into_iter()
                    .map(|(k, v)| {
                        let d: i64 = k.parse().map_err(|_| Error::Parse(format!("bad degree key {k:?}")))?;
                        if prec.is_some_and(|n| d < -n) {
                            return Err(Error::Parse(format!("degree {d} below precision window")));
                        }
                        Ok((d, v))
                    })
                    .collect::<Result<Vec<_>>>();
                terms.and_then(|t| ZSeries::from_terms(&ring, prec, t))
            }
            RawSeries::Expr { expr, ring, prec } => {
                let ring = Ring::new(ring.unwrap_or(RingDescriptor::Rational));
                parse_series(&expr, &ring, prec)
            }
        };
        res.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilring::{int, rat};

    fn q() -> Ring {
        Ring::rational()
    }

    fn ser(expr: &str, ring: &Ring, prec: Option<i64>) -> ZSeries {
        parse_series(expr, ring, prec).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let s = ser("z^2 + 3 - 5/2z^-1", &q(), Some(4));
        assert_eq!(s.coeff(2).unwrap().residue(), &int(1));
        assert_eq!(s.coeff(-1).unwrap().residue(), &rat(-5, 2));
        assert_eq!(s.to_string(), "z^2 + 3 - 5/2z^-1 + O(z^-5)");
        let e = ser("eps*z + 1", &Ring::eps(2), None);
        assert_eq!(e.to_string(), "epsz + 1");
    }

    #[test]
    fn product_examples() {
        let a = ser("1 + z^-1", &q(), Some(4));
        let b = ser("1 - z^-1", &q(), Some(4));
        let p = s_mul(&a, &b).unwrap();
        assert!(p.eq_on_window(&ser("1 - z^-2", &q(), None)));
        assert_eq!(p.prec(), Some(4));

        let a = ser("z + 1", &q(), Some(5));
        let b = ser("1 + z^-1", &q(), Some(5));
        let p = s_mul(&a, &b).unwrap();
        assert_eq!(p, ser("z + 2 + z^-1", &q(), Some(4)));

        let r = Ring::eps(2);
        let e = ser("eps*z", &r, None);
        assert!(s_mul(&e, &e).unwrap().is_zero());
    }

    #[test]
    fn product_exhausts_precision() {
        let a = ser("z^3", &q(), Some(2));
        let b = ser("1", &q(), Some(2));
        assert_eq!(s_mul(&a, &b).unwrap_err().kind(), "PrecisionExhausted");
    }

    #[test]
    fn reg_examples() {
        assert_eq!(reg(&ser("z^2 + 3 + 5z^-1", &q(), Some(3))), ser("z^2 + 3", &q(), None));
        assert!(reg(&ser("z^-1", &q(), Some(3))).is_zero());
        let r = Ring::eps(2);
        assert_eq!(reg(&ser("eps z + 1 + 2z^-1", &r, Some(3))), ser("eps z + 1", &r, None));
    }

    #[test]
    fn inverse_examples() {
        let s = ser("1 + z^-1", &q(), Some(3));
        assert_eq!(s_inv(&s).unwrap(), ser("1 - z^-1 + z^-2 - z^-3", &q(), Some(3)));

        let r = Ring::eps(2);
        let s = ser("1 + eps z", &r, None);
        assert_eq!(s_inv(&s).unwrap(), ser("1 - eps z", &r, None));

        // z(1 + 2z^-1) = z + 2 with window 2: inverse z^-1 - 2z^-2 + 4z^-3 - 8z^-4
        let s = ser("z + 2", &q(), Some(2));
        let inv = s_inv(&s).unwrap();
        assert_eq!(inv, ser("z^-1 - 2z^-2 + 4z^-3 - 8z^-4", &q(), Some(4)));
        let one = s_mul(&s, &inv).unwrap();
        assert!(one.eq_on_window(&ZSeries::one(&q(), None)));
    }

    #[test]
    fn inverse_needs_target_for_exact_infinite() {
        let s = ser("z + 2", &q(), None);
        assert_eq!(s_inv(&s).unwrap_err().kind(), "PrecisionExhausted");
        let inv = s.inverse(Some(3)).unwrap();
        assert_eq!(inv, ser("z^-1 - 2z^-2 + 4z^-3", &q(), Some(3)));
    }

    #[test]
    fn inverse_rejects_nilpotent_series() {
        let r = Ring::eps(2);
        let s = ser("eps z + eps", &r, None);
        assert_eq!(s_inv(&s).unwrap_err().kind(), "NotInvertibleShape");
    }

    #[test]
    fn inverse_with_nilpotent_top_and_tail() {
        let r = Ring::eps(3);
        let s = ser("eps z^2 + 3z + eps^2 + 7z^-1", &r, Some(6));
        let inv = s_inv(&s).unwrap();
        let one = s_mul(&s, &inv).unwrap();
        assert!(one.eq_on_window(&ZSeries::one(&r, None)), "{one}");
    }

    #[test]
    fn top_degree_examples() {
        assert_eq!(top_degree(&ser("z^2 + z^-1", &q(), None)), Some(2));
        assert_eq!(top_degree(&ZSeries::zero(&q(), Some(5))), None);
        assert_eq!(top_degree(&ser("eps z^3 + 1", &Ring::eps(2), None)), Some(3));
    }

    #[test]
    fn one_plus_negative_examples() {
        assert!(is_one_plus_negative(&ser("1 + 3z^-1 - z^-2", &q(), Some(4))));
        assert!(!is_one_plus_negative(&ser("1 + eps z", &Ring::eps(2), None)));
        assert!(!is_one_plus_negative(&ser("2 + z^-1", &q(), None)));
    }

    #[test]
    fn i_poly_examples() {
        let step = SquareZeroStep::eps_tower(2).unwrap();
        let r = step.total().clone();
        assert!(is_in_i_poly(&ser("eps z^2 + 3eps", &r, None), &step));
        assert!(!is_in_i_poly(&ser("eps + eps z^-1", &r, None), &step));
        assert!(!is_in_i_poly(&ser("z", &r, None), &step));
    }

    #[test]
    fn shift_moves_window() {
        let s = ser("1 + z^-1", &q(), Some(3));
        let t = s.shift(2).unwrap();
        assert_eq!(t, ser("z^2 + z", &q(), Some(1)));
        assert!(s.shift(4).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = ser("eps z^2 - 3 + 1/2z^-4", &Ring::eps(2), Some(6));
        let j = serde_json::to_string(&s).unwrap();
        let back: ZSeries = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let compact: ZSeries = serde_json::from_str(r#"{"expr":"z + 2 + z^-1","prec":4}"#).unwrap();
        assert_eq!(compact, ser("z + 2 + z^-1", &q(), Some(4)));
    }
}
