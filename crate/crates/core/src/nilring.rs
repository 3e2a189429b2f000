//! Coefficient rings: the rationals and finite-dimensional nilpotent
//! extensions of them, used to model square-zero extensions `Ã → A`.
//!
//! Every ring here is a monomial algebra over ℚ: it has a basis whose first
//! element is `1`, every other basis element is nilpotent, and the product of
//! two basis elements is either another basis element or zero. Arithmetic is
//! driven entirely by that multiplication table.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Parse a rational from `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Canonical `"p/q"` form: `q > 0`, reduced, `"0/1"` for zero.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn rat(p: i64, q: i64) -> Rational {
    BigRational::new(p.into(), q.into())
}

pub fn int(p: i64) -> Rational {
    BigRational::from_integer(p.into())
}

/// Which nilpotent extension of ℚ a ring is.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub enum RingDescriptor {
    Rational,
    /// ℚ[ε]/(ε^m), `m ≥ 2`.
    EpsTower(u32),
    /// `base ⊕ base·e₁ ⊕ … ⊕ base·e_r` with `e_i·e_j = 0`.
    FreeSquareZero(Box<RingDescriptor>, u32),
}

impl RingDescriptor {
    /// `eps_tower(1)` is the rationals.
    pub fn eps_tower(m: u32) -> Result<Self> {
        match m {
            0 => Err(Error::Precondition("eps_tower needs m >= 1".into())),
            1 => Ok(RingDescriptor::Rational),
            m => Ok(RingDescriptor::EpsTower(m)),
        }
    }

    pub fn free_square_zero(base: RingDescriptor, r: u32) -> Result<Self> {
        if r == 0 {
            return Err(Error::Precondition("free_square_zero needs r >= 1".into()));
        }
        Ok(RingDescriptor::FreeSquareZero(Box::new(base), r))
    }

    /// Dimension over ℚ.
    pub fn dim(&self) -> usize {
        match self {
            RingDescriptor::Rational => 1,
            RingDescriptor::EpsTower(m) => *m as usize,
            RingDescriptor::FreeSquareZero(base, r) => base.dim() * (1 + *r as usize),
        }
    }

    /// Parse the compact command-line form: `Q`, `rational`, `eps(3)`,
    /// `eps_tower(3)`, `fsz(Q,2)`, `free_square_zero(eps(2),1)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (d, rest) = parse_descriptor(&s)?;
        if !rest.is_empty() {
            return Err(Error::Parse(format!("trailing input in ring {s:?}")));
        }
        Ok(d)
    }
}

fn parse_descriptor(s: &str) -> Result<(RingDescriptor, &str)> {
    let bad = || Error::Parse(format!("bad ring descriptor {s:?}"));
    for name in ["rational", "Q"] {
        if let Some(rest) = s.strip_prefix(name) {
            return Ok((RingDescriptor::Rational, rest));
        }
    }
    for name in ["eps_tower(", "eps("] {
        if let Some(rest) = s.strip_prefix(name) {
            let close = rest.find(')').ok_or_else(bad)?;
            let m: u32 = rest[..close].parse().map_err(|_| bad())?;
            return Ok((RingDescriptor::eps_tower(m)?, &rest[close + 1..]));
        }
    }
    for name in ["free_square_zero(", "fsz("] {
        if let Some(rest) = s.strip_prefix(name) {
            let (base, rest) = parse_descriptor(rest)?;
            let rest = rest.strip_prefix(',').ok_or_else(bad)?;
            let close = rest.find(')').ok_or_else(bad)?;
            let r: u32 = rest[..close].parse().map_err(|_| bad())?;
            return Ok((RingDescriptor::free_square_zero(base, r)?, &rest[close + 1..]));
        }
    }
    Err(bad())
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingDescriptor::Rational => write!(f, "Q"),
            RingDescriptor::EpsTower(m) => write!(f, "eps({m})"),
            RingDescriptor::FreeSquareZero(b, r) => write!(f, "fsz({b},{r})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawDescriptor {
    Rational,
    EpsTower { m: u32 },
    FreeSquareZero { base: Box<RawDescriptor>, r: u32 },
}

impl TryFrom<RawDescriptor> for RingDescriptor {
    type Error = Error;
    fn try_from(raw: RawDescriptor) -> Result<Self> {
        match raw {
            RawDescriptor::Rational => Ok(RingDescriptor::Rational),
            RawDescriptor::EpsTower { m } => RingDescriptor::eps_tower(m),
            RawDescriptor::FreeSquareZero { base, r } => RingDescriptor::free_square_zero((*base).try_into()?, r),
        }
    }
}

impl From<RingDescriptor> for RawDescriptor {
    fn from(d: RingDescriptor) -> Self {
        match d {
            RingDescriptor::Rational => RawDescriptor::Rational,
            RingDescriptor::EpsTower(m) => RawDescriptor::EpsTower { m },
            RingDescriptor::FreeSquareZero(base, r) => RawDescriptor::FreeSquareZero {
                base: Box::new((*base).into()),
                r,
            },
        }
    }
}

struct RingData {
    desc: RingDescriptor,
    dim: usize,
    table: Vec<Vec<Option<usize>>>,
    labels: Vec<String>,
}

/// A concrete coefficient ring. Cheap to clone.
#[derive(Clone)]
pub struct Ring(Arc<RingData>);

impl Ring {
    pub fn new(desc: RingDescriptor) -> Ring {
        let (table, labels) = build_table(&desc);
        Ring(Arc::new(RingData {
            dim: table.len(),
            desc,
            table,
            labels,
        }))
    }

    pub fn rational() -> Ring {
        Ring::new(RingDescriptor::Rational)
    }

    pub fn eps(m: u32) -> Ring {
        Ring::new(RingDescriptor::eps_tower(m).expect("m >= 1"))
    }

    pub fn descriptor(&self) -> &RingDescriptor {
        &self.0.desc
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Product of basis elements `i` and `j`.
    pub fn basis_product(&self, i: usize, j: usize) -> Option<usize> {
        self.0.table[i][j]
    }

    pub fn zero(&self) -> RingElement {
        RingElement {
            ring: self.clone(),
            coords: vec![Rational::zero(); self.dim()],
        }
    }

    pub fn one(&self) -> RingElement {
        self.from_rational(Rational::one())
    }

    pub fn from_rational(&self, q: Rational) -> RingElement {
        let mut e = self.zero();
        e.coords[0] = q;
        e
    }

    pub fn from_int(&self, k: i64) -> RingElement {
        self.from_rational(int(k))
    }

    pub fn basis(&self, i: usize) -> RingElement {
        let mut e = self.zero();
        e.coords[i] = Rational::one();
        e
    }

    pub fn element(&self, coords: Vec<Rational>) -> Result<RingElement> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "ring {} has dimension {}, got {} coordinates",
                self.descriptor(),
                self.dim(),
                coords.len()
            )));
        }
        Ok(RingElement {
            ring: self.clone(),
            coords,
        })
    }

    /// `ε` in an eps tower (basis element 1).
    pub fn eps_gen(&self) -> RingElement {
        assert!(self.dim() > 1, "ring {} has no nilpotent generator", self.descriptor());
        self.basis(1)
    }

    pub fn same(&self, other: &Ring) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.desc == other.0.desc
    }

    pub(crate) fn check_same(&self, other: &Ring) -> Result<()> {
        if self.same(other) {
            Ok(())
        } else {
            Err(Error::RingMismatch(
                self.descriptor().to_string(),
                other.descriptor().to_string(),
            ))
        }
    }
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}
impl Eq for Ring {}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ring({})", self.descriptor())
    }
}

impl Serialize for Ring {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ring {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Ring::new(RingDescriptor::deserialize(d)?))
    }
}

type Table = Vec<Vec<Option<usize>>>;

fn build_table(desc: &RingDescriptor) -> (Table, Vec<String>) {
    match desc {
        RingDescriptor::Rational => (vec![vec![Some(0)]], vec![String::new()]),
        RingDescriptor::EpsTower(m) => {
            let m = *m as usize;
            let table = (0..m)
                .map(|a| (0..m).map(|b| (a + b < m).then_some(a + b)).collect())
                .collect();
            let labels = (0..m)
                .map(|a| match a {
                    0 => String::new(),
                    1 => "eps".to_string(),
                    a => format!("eps^{a}"),
                })
                .collect();
            (table, labels)
        }
        RingDescriptor::FreeSquareZero(base, r) => {
            let (bt, bl) = build_table(base);
            let d = bt.len();
            let blocks = 1 + *r as usize;
            let dim = d * blocks;
            let mut table = vec![vec![None; dim]; dim];
            for (i, row) in table.iter_mut().enumerate() {
                for (j, slot) in row.iter_mut().enumerate() {
                    let (bi, ji) = (i / d, i % d);
                    let (bj, jj) = (j / d, j % d);
                    if bi > 0 && bj > 0 {
                        continue;
                    }
                    *slot = bt[ji][jj].map(|k| bi.max(bj) * d + k);
                }
            }
            let mut labels = Vec::with_capacity(dim);
            for b in 0..blocks {
                for l in &bl {
                    labels.push(match (b, l.is_empty()) {
                        (0, _) => l.clone(),
                        (b, true) => format!("e{b}"),
                        (b, false) => format!("e{b}*{l}"),
                    });
                }
            }
            (table, labels)
        }
    }
}

/// An element of a [`Ring`], stored by its coordinates in the monomial basis.
#[derive(Clone, PartialEq, Eq)]
pub struct RingElement {
    ring: Ring,
    coords: Vec<Rational>,
}

impl RingElement {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(Zero::is_zero)
    }

    /// Image in the residue field ℚ.
    pub fn residue(&self) -> &Rational {
        &self.coords[0]
    }

    pub fn is_unit(&self) -> bool {
        !self.coords[0].is_zero()
    }

    /// In the nilradical, i.e. residue zero.
    pub fn is_nilpotent(&self) -> bool {
        self.coords[0].is_zero()
    }

    pub fn checked_add(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        Ok(self.add_unchecked(other))
    }

    pub fn checked_sub(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        Ok(RingElement {
            ring: self.ring.clone(),
            coords,
        })
    }

    pub fn checked_mul(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        let mut out = self.ring.zero();
        self.mul_acc_into(other, &mut out);
        Ok(out)
    }

    fn add_unchecked(&self, other: &RingElement) -> RingElement {
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        RingElement {
            ring: self.ring.clone(),
            coords,
        }
    }

    /// `out += self * other`. Rings are assumed equal.
    pub(crate) fn mul_acc_into(&self, other: &RingElement, out: &mut RingElement) {
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coords.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if let Some(k) = self.ring.basis_product(i, j) {
                    out.coords[k] += a * b;
                }
            }
        }
    }

    pub(crate) fn add_assign_ref(&mut self, other: &RingElement) {
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a += b;
        }
    }

    pub(crate) fn sub_assign_ref(&mut self, other: &RingElement) {
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a -= b;
        }
    }

    pub fn scale(&self, q: &Rational) -> RingElement {
        RingElement {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|c| c * q).collect(),
        }
    }

    /// Inverse via the finite geometric series on the nilpotent part:
    /// `a = c(1+u)` with `u` nilpotent, `a⁻¹ = c⁻¹ Σ (-u)^k`.
    pub fn inv(&self) -> Result<RingElement> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let c_inv = self.coords[0].recip();
        let mut neg_u = self.scale(&c_inv);
        neg_u.coords[0] = Rational::zero();
        let neg_u = -&neg_u;
        let mut sum = self.ring.one();
        let mut term = self.ring.one();
        loop {
            term = &term * &neg_u;
            if term.is_zero() {
                break;
            }
            sum.add_assign_ref(&term);
        }
        Ok(sum.scale(&c_inv))
    }
}

impl std::ops::Add for &RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        self.checked_add(rhs).expect("ring mismatch in add")
    }
}

impl std::ops::Sub for &RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        self.checked_sub(rhs).expect("ring mismatch in sub")
    }
}

impl std::ops::Mul for &RingElement {
    type Output = RingElement;
    fn mul(self, rhs: &RingElement) -> RingElement {
        self.checked_mul(rhs).expect("ring mismatch in mul")
    }
}

impl std::ops::Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        RingElement {
            ring: self.ring.clone(),
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

pub fn ring_add(a: &RingElement, b: &RingElement) -> Result<RingElement> {
    a.checked_add(b)
}

pub fn ring_mul(a: &RingElement, b: &RingElement) -> Result<RingElement> {
    a.checked_mul(b)
}

pub fn ring_neg(a: &RingElement) -> RingElement {
    -a
}

pub fn ring_inv(a: &RingElement) -> Result<RingElement> {
    a.inv()
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (q, label) in self.coords.iter().zip(&self.ring.0.labels) {
            if q.is_zero() {
                continue;
            }
            let sign = if q.is_negative() { "-" } else { "+" };
            let mag = q.abs();
            if first {
                if q.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match (label.is_empty(), mag.is_one()) {
                (true, _) => write!(f, "{mag}")?,
                (false, true) => write!(f, "{label}")?,
                (false, false) => write!(f, "{mag}*{label}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

#[derive(Serialize, Deserialize)]
struct RawElement {
    ring: RingDescriptor,
    coords: Vec<String>,
}

impl Serialize for RingElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawElement {
            ring: self.ring.descriptor().clone(),
            coords: self.coords.iter().map(format_rational).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RingElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawElement::deserialize(d)?;
        let coords = raw
            .coords
            .iter()
            .map(|c| parse_rational(c))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Ring::new(raw.ring).element(coords).map_err(D::Error::custom)
    }
}

/// A square-zero extension `Ã → A` between two of our rings, given by where
/// each basis element of `Ã` goes.
#[derive(Clone, Debug)]
pub struct SquareZeroStep {
    total: Ring,
    quotient: Ring,
    projection: Vec<Option<usize>>,
    section: Vec<usize>,
}

impl SquareZeroStep {
    /// Recognizes `eps(m) → eps(m-1)`, `fsz(base, r) → base`, and the
    /// identity step (kernel zero).
    pub fn new(total: RingDescriptor, quotient: RingDescriptor) -> Result<SquareZeroStep> {
        let dim_t = total.dim();
        let projection: Vec<Option<usize>> = if total == quotient {
            (0..dim_t).map(Some).collect()
        } else {
            match &total {
                RingDescriptor::EpsTower(m) if quotient == RingDescriptor::eps_tower(m - 1)? => {
                    (0..dim_t).map(|a| (a + 1 < *m as usize).then_some(a)).collect()
                }
                RingDescriptor::FreeSquareZero(base, _) if **base == quotient => {
                    let d = base.dim();
                    (0..dim_t).map(|a| (a < d).then_some(a)).collect()
                }
                _ => return Err(Error::InvalidStep(format!("no square-zero step {total} -> {quotient}"))),
            }
        };
        let mut section = vec![usize::MAX; quotient.dim()];
        for (i, p) in projection.iter().enumerate() {
            if let Some(j) = p {
                section[*j] = i;
            }
        }
        let step = SquareZeroStep {
            total: Ring::new(total),
            quotient: Ring::new(quotient),
            projection,
            section,
        };
        let kernel = step.kernel_basis();
        for &i in &kernel {
            for &j in &kernel {
                if step.total.basis_product(i, j).is_some() {
                    return Err(Error::InvalidStep("kernel does not square to zero".into()));
                }
            }
        }
        Ok(step)
    }

    /// `ℚ[ε]/(ε^m) → ℚ[ε]/(ε^{m-1})`.
    pub fn eps_tower(m: u32) -> Result<SquareZeroStep> {
        if m < 2 {
            return Err(Error::InvalidStep("eps tower step needs m >= 2".into()));
        }
        SquareZeroStep::new(RingDescriptor::eps_tower(m)?, RingDescriptor::eps_tower(m - 1)?)
    }

    pub fn free_square_zero(base: RingDescriptor, r: u32) -> Result<SquareZeroStep> {
        SquareZeroStep::new(RingDescriptor::free_square_zero(base.clone(), r)?, base)
    }

    pub fn identity(ring: RingDescriptor) -> SquareZeroStep {
        SquareZeroStep::new(ring.clone(), ring).expect("identity step is valid")
    }

    pub fn total(&self) -> &Ring {
        &self.total
    }

    pub fn quotient(&self) -> &Ring {
        &self.quotient
    }

    /// Basis elements of `Ã` spanning the kernel.
    pub fn kernel_basis(&self) -> Vec<usize> {
        (0..self.projection.len())
            .filter(|&i| self.projection[i].is_none())
            .collect()
    }

    pub fn kernel_rank(&self) -> usize {
        self.kernel_basis().len()
    }

    pub fn reduce(&self, a: &RingElement) -> Result<RingElement> {
        self.total.check_same(a.ring())?;
        let mut out = self.quotient.zero();
        for (i, q) in a.coords.iter().enumerate() {
            if let Some(j) = self.projection[i] {
                out.coords[j] = q.clone();
            }
        }
        Ok(out)
    }

    /// Coefficientwise lift. Additive, and a section of `reduce`, but not a
    /// ring map in general: for `eps(m) → eps(m-1)` with `m ≥ 3` the lift of
    /// `ε·ε^{m-2} = 0` is `0` while the product of the lifts is `ε^{m-1}`.
    /// (For `fsz(base, r) → base` the base block is a subring, so there it
    /// happens to be multiplicative.)
    pub fn zero_section(&self, a: &RingElement) -> Result<RingElement> {
        self.quotient.check_same(a.ring())?;
        let mut out = self.total.zero();
        for (j, q) in a.coords.iter().enumerate() {
            out.coords[self.section[j]] = q.clone();
        }
        Ok(out)
    }

    pub fn in_kernel(&self, a: &RingElement) -> bool {
        self.total.same(a.ring())
            && a.coords
                .iter()
                .zip(&self.projection)
                .all(|(q, p)| p.is_none() || q.is_zero())
    }
}

impl Serialize for SquareZeroStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Raw<'a> {
            total: &'a RingDescriptor,
            quotient: &'a RingDescriptor,
        }
        Raw {
            total: self.total.descriptor(),
            quotient: self.quotient.descriptor(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareZeroStep {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            total: RingDescriptor,
            quotient: RingDescriptor,
        }
        let raw = Raw::deserialize(d)?;
        SquareZeroStep::new(raw.total, raw.quotient).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_poly(ring: &Ring, c: &[i64]) -> RingElement {
        let mut coords = vec![Rational::zero(); ring.dim()];
        for (i, v) in c.iter().enumerate() {
            coords[i] = int(*v);
        }
        ring.element(coords).unwrap()
    }

    #[test]
    fn telescoping_product_in_eps3() {
        let r = Ring::eps(3);
        let a = eps_poly(&r, &[1, 1, 0]);
        let b = eps_poly(&r, &[1, -1, 1]);
        assert!((&a * &b).is_one());
    }

    #[test]
    fn eps_squares_to_zero() {
        let r = Ring::eps(2);
        assert!((&r.eps_gen() * &r.eps_gen()).is_zero());
    }

    #[test]
    fn rational_sum() {
        let r = Ring::rational();
        let s = &r.from_rational(rat(2, 3)) + &r.from_rational(rat(1, 6));
        assert_eq!(s.residue(), &rat(5, 6));
    }

    #[test]
    fn mismatched_rings_error() {
        let a = Ring::eps(2).one();
        let b = Ring::eps(3).one();
        assert_eq!(a.checked_add(&b).unwrap_err().kind(), "RingMismatch");
        assert_eq!(ring_mul(&a, &b).unwrap_err().kind(), "RingMismatch");
    }

    #[test]
    fn inverses() {
        let r2 = Ring::eps(2);
        assert_eq!(ring_inv(&eps_poly(&r2, &[1, 1])).unwrap(), eps_poly(&r2, &[1, -1]));
        let r3 = Ring::eps(3);
        assert_eq!(
            ring_inv(&eps_poly(&r3, &[1, 1, 0])).unwrap(),
            eps_poly(&r3, &[1, -1, 1])
        );
        assert_eq!(ring_inv(&r2.eps_gen()).unwrap_err(), Error::NotAUnit);
    }

    #[test]
    fn eps_tower_one_is_rational() {
        assert_eq!(RingDescriptor::eps_tower(1).unwrap(), RingDescriptor::Rational);
        let json = r#"{"kind":"eps_tower","m":1}"#;
        let d: RingDescriptor = serde_json::from_str(json).unwrap();
        assert_eq!(d, RingDescriptor::Rational);
    }

    #[test]
    fn reduce_examples() {
        let s = SquareZeroStep::eps_tower(2).unwrap();
        let a = eps_poly(s.total(), &[3, 5]);
        assert_eq!(s.reduce(&a).unwrap(), Ring::rational().from_int(3));

        let s = SquareZeroStep::eps_tower(3).unwrap();
        let a = eps_poly(s.total(), &[1, 1, 7]);
        assert_eq!(s.reduce(&a).unwrap(), eps_poly(s.quotient(), &[1, 1]));
        assert!(s.in_kernel(&eps_poly(s.total(), &[0, 0, 7])));
        assert!(!s.in_kernel(&eps_poly(s.total(), &[0, 1, 7])));
        assert_eq!(s.kernel_basis(), vec![2]);
    }

    #[test]
    fn zero_section_examples() {
        let s = SquareZeroStep::eps_tower(2).unwrap();
        let lifted = s.zero_section(&Ring::rational().from_int(3)).unwrap();
        assert_eq!(lifted, eps_poly(s.total(), &[3, 0]));
        let s = SquareZeroStep::eps_tower(3).unwrap();
        let lifted = s.zero_section(&eps_poly(s.quotient(), &[1, 1])).unwrap();
        assert_eq!(lifted, eps_poly(s.total(), &[1, 1, 0]));
    }

    #[test]
    fn free_square_zero_layout() {
        let d = RingDescriptor::free_square_zero(RingDescriptor::eps_tower(2).unwrap(), 2).unwrap();
        assert_eq!(d.dim(), 6);
        let r = Ring::new(d);
        // e1 * e2 = 0, e1 * eps = e1*eps
        assert_eq!(r.basis_product(2, 4), None);
        assert_eq!(r.basis_product(2, 1), Some(3));
        assert_eq!(r.basis_product(1, 1), None);
    }

    #[test]
    fn invalid_steps_rejected() {
        assert!(SquareZeroStep::new(RingDescriptor::EpsTower(4), RingDescriptor::Rational).is_err());
        assert!(SquareZeroStep::eps_tower(1).is_err());
    }

    #[test]
    fn descriptor_parsing() {
        assert_eq!(RingDescriptor::parse("Q").unwrap(), RingDescriptor::Rational);
        assert_eq!(RingDescriptor::parse("eps(3)").unwrap(), RingDescriptor::EpsTower(3));
        assert_eq!(
            RingDescriptor::parse("fsz(eps(2), 3)").unwrap(),
            RingDescriptor::free_square_zero(RingDescriptor::EpsTower(2), 3).unwrap()
        );
        assert!(RingDescriptor::parse("eps(2)x").is_err());
    }

    #[test]
    fn rational_strings() {
        assert_eq!(format_rational(&rat(4, -6)), "-2/3");
        assert_eq!(format_rational(&Rational::zero()), "0/1");
        assert_eq!(parse_rational("-2/3").unwrap(), rat(-2, 3));
        assert_eq!(parse_rational("5").unwrap(), int(5));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn element_json_round_trip() {
        let r = Ring::eps(3);
        let a = eps_poly(&r, &[1, -2, 3]).scale(&rat(1, 2));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(
            json,
            r#"{"ring":{"kind":"eps_tower","m":3},"coords":["1/2","-1/1","3/2"]}"#
        );
        let back: RingElement = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
