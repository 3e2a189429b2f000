//! `GL_n` over truncated Laurent series: minors, the Gauss decomposition of
//! the big cell, the polynomial/tail splitting of unipotents, and torus
//! reconstruction from minors.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilring::{Ring, RingDescriptor, SquareZeroStep};
use crate::zseries::{parse_series, ZSeries};

/// Integer `n`-tuple; `P = ℤⁿ` for `GL_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coweight(pub Vec<i64>);

impl Coweight {
    pub fn new(entries: Vec<i64>) -> Coweight {
        Coweight(entries)
    }

    pub fn zero(n: usize) -> Coweight {
        Coweight(vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn is_dominant(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }

    /// `μ_{n−k+1} + ⋯ + μ_n`, the exponent of `Δ_k(z^μ)`.
    pub fn trailing_sum(&self, k: usize) -> i64 {
        self.0[self.n() - k..].iter().sum()
    }

    /// `λ₁ + ⋯ + λ_k`.
    pub fn leading_sum(&self, k: usize) -> i64 {
        self.0[..k].iter().sum()
    }

    /// Sum of the `k` smallest entries.
    pub fn smallest_sum(&self, k: usize) -> i64 {
        let mut v = self.0.clone();
        v.sort_unstable();
        v[..k].iter().sum()
    }

    /// Sum of the `k` largest entries.
    pub fn largest_sum(&self, k: usize) -> i64 {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v[..k].iter().sum()
    }

    pub fn total(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> i64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> i64 {
        self.0.iter().copied().min().unwrap_or(0)
    }

    /// Sorted into weakly decreasing order.
    pub fn dominant_representative(&self) -> Coweight {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        Coweight(v)
    }

    /// Accepts `"1,0,-1"` or `"(1, 0, -1)"`.
    pub fn parse(s: &str) -> Result<Coweight> {
        let t = s.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
        if t.trim().is_empty() {
            return Err(Error::Parse(format!("empty coweight {s:?}")));
        }
        t.split(',')
            .map(|x| {
                x.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad coweight entry {x:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Coweight)
    }
}

impl fmt::Display for Coweight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct LoopMatrix {
    n: usize,
    ring: Ring,
    /// Row-major.
    entries: Vec<ZSeries>,
}

impl LoopMatrix {
    pub fn new(n: usize, entries: Vec<ZSeries>) -> Result<LoopMatrix> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}×{n} matrix",
                entries.len()
            )));
        }
        let ring = entries[0].ring().clone();
        for e in &entries {
            ring.check_same(e.ring())?;
        }
        Ok(LoopMatrix { n, ring, entries })
    }

    pub fn from_fn<F>(ring: &Ring, n: usize, mut f: F) -> LoopMatrix
    where
        F: FnMut(usize, usize) -> ZSeries,
    {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = f(i, j);
                debug_assert!(e.ring().same(ring));
                entries.push(e);
            }
        }
        LoopMatrix {
            n,
            ring: ring.clone(),
            entries,
        }
    }

    /// Parse rows of series expressions (see [`parse_series`]).
    pub fn from_strs(ring: &Ring, prec: Option<i64>, rows: &[&[&str]]) -> Result<LoopMatrix> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch("matrix rows must be square".into()));
            }
            for e in row.iter() {
                entries.push(parse_series(e, ring, prec)?);
            }
        }
        LoopMatrix::new(n, entries)
    }

    pub fn identity(ring: &Ring, n: usize) -> LoopMatrix {
        LoopMatrix::from_fn(ring, n, |i, j| {
            if i == j {
                ZSeries::one(ring, None)
            } else {
                ZSeries::zero(ring, None)
            }
        })
    }

    pub fn diag(diagonal: Vec<ZSeries>) -> Result<LoopMatrix> {
        let n = diagonal.len();
        let Some(first) = diagonal.first() else {
            return Err(Error::DimensionMismatch("empty diagonal".into()));
        };
        let ring = first.ring().clone();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(if i == j {
                    diagonal[i].clone()
                } else {
                    ZSeries::zero(&ring, None)
                });
            }
        }
        LoopMatrix::new(n, entries)
    }

    /// `z^μ = diag(z^{μ_1}, …, z^{μ_n})`.
    pub fn z_power(ring: &Ring, mu: &Coweight) -> LoopMatrix {
        LoopMatrix::diag(mu.0.iter().map(|&d| ZSeries::z_power(ring, d)).collect()).expect("nonempty coweight")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// 0-based entry.
    pub fn get(&self, i: usize, j: usize) -> &ZSeries {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: ZSeries) {
        assert!(s.ring().same(&self.ring), "entry ring mismatch");
        self.entries[i * self.n + j] = s;
    }

    pub fn entries(&self) -> &[ZSeries] {
        &self.entries
    }

    /// Smallest precision among entries; `None` if every entry is exact.
    pub fn prec(&self) -> Option<i64> {
        self.entries.iter().filter_map(ZSeries::prec).min()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(ZSeries::is_exact)
    }

    pub fn max_top_degree(&self) -> Option<i64> {
        self.entries.iter().filter_map(ZSeries::top_degree).max()
    }

    pub fn truncate(&self, n: i64) -> LoopMatrix {
        self.map(|s| s.truncate(n))
    }

    pub fn assume_exact(&self) -> LoopMatrix {
        self.map(ZSeries::assume_exact)
    }

    pub fn map<F: Fn(&ZSeries) -> ZSeries>(&self, f: F) -> LoopMatrix {
        LoopMatrix {
            n: self.n,
            ring: self.ring.clone(),
            entries: self.entries.iter().map(f).collect(),
        }
    }

    fn try_map_ring<F>(&self, ring: &Ring, f: F) -> Result<LoopMatrix>
    where
        F: Fn(&ZSeries) -> Result<ZSeries>,
    {
        Ok(LoopMatrix {
            n: self.n,
            ring: ring.clone(),
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn reduce(&self, step: &SquareZeroStep) -> Result<LoopMatrix> {
        self.try_map_ring(step.quotient(), |s| s.reduce(step))
    }

    pub fn zero_section(&self, step: &SquareZeroStep) -> Result<LoopMatrix> {
        self.try_map_ring(step.total(), |s| s.zero_section(step))
    }

    pub fn transpose(&self) -> LoopMatrix {
        LoopMatrix::from_fn(&self.ring, self.n, |i, j| self.get(j, i).clone())
    }

    fn check_shape(&self, other: &LoopMatrix) -> Result<()> {
        self.ring.check_same(&other.ring)?;
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "{}×{} vs {}×{}",
                self.n, self.n, other.n, other.n
            )));
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &LoopMatrix) -> Result<LoopMatrix> {
        self.check_shape(other)?;
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZSeries::zero(&self.ring, None);
                for l in 0..n {
                    let a = self.get(i, l);
                    let b = other.get(l, j);
                    // exact zeros contribute nothing and cost no precision
                    if (a.is_zero() && a.is_exact()) || (b.is_zero() && b.is_exact()) {
                        continue;
                    }
                    acc = acc.checked_add(&a.checked_mul(b)?)?;
                }
                entries.push(acc);
            }
        }
        Ok(LoopMatrix {
            n,
            ring: self.ring.clone(),
            entries,
        })
    }

    pub fn checked_add(&self, other: &LoopMatrix) -> Result<LoopMatrix> {
        self.check_shape(other)?;
        Ok(LoopMatrix {
            n: self.n,
            ring: self.ring.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.checked_add(b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn checked_sub(&self, other: &LoopMatrix) -> Result<LoopMatrix> {
        self.checked_add(&other.map(ZSeries::neg))
    }

    /// Product of a chain of matrices.
    pub fn product(factors: &[&LoopMatrix]) -> Result<LoopMatrix> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::DimensionMismatch("empty product".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, m| acc.checked_mul(m))
    }

    /// Entrywise equality on the jointly known window.
    pub fn eq_on_window(&self, other: &LoopMatrix) -> bool {
        self.n == other.n && self.entries.iter().zip(&other.entries).all(|(a, b)| a.eq_on_window(b))
    }

    pub fn det(&self) -> Result<ZSeries> {
        let all: Vec<usize> = (0..self.n).collect();
        self.minor0(&all, &all)
    }

    /// Determinant of a submatrix, 0-based sorted index sets.
    pub fn minor0(&self, rows: &[usize], cols: &[usize]) -> Result<ZSeries> {
        if rows.len() != cols.len() || rows.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "minor with {} rows and {} columns",
                rows.len(),
                cols.len()
            )));
        }
        if rows.iter().chain(cols).any(|&i| i >= self.n) {
            return Err(Error::DimensionMismatch("minor index out of range".into()));
        }
        let mut memo: HashMap<u64, ZSeries> = HashMap::new();
        let mask: u64 = cols.iter().fold(0, |m, &c| m | (1 << c));
        self.laplace(rows, mask, &mut memo)
    }

    /// Expansion along the first remaining row, memoized on the column set.
    fn laplace(&self, rows: &[usize], cols: u64, memo: &mut HashMap<u64, ZSeries>) -> Result<ZSeries> {
        if rows.is_empty() {
            return Ok(ZSeries::one(&self.ring, None));
        }
        if let Some(v) = memo.get(&cols) {
            return Ok(v.clone());
        }
        let r = rows[0];
        let mut acc = ZSeries::zero(&self.ring, None);
        let mut sign_neg = false;
        for c in 0..self.n {
            if cols & (1 << c) == 0 {
                continue;
            }
            let e = self.get(r, c);
            if !(e.is_zero() && e.is_exact()) {
                let sub = self.laplace(&rows[1..], cols & !(1 << c), memo)?;
                let term = e.checked_mul(&sub)?;
                acc = if sign_neg {
                    acc.checked_sub(&term)?
                } else {
                    acc.checked_add(&term)?
                };
            }
            sign_neg = !sign_neg;
        }
        memo.insert(cols, acc.clone());
        Ok(acc)
    }

    /// Every `k×k` minor for all `k`, keyed by `(row mask, column mask)`.
    pub fn all_minors(&self) -> Result<HashMap<(u64, u64), ZSeries>> {
        let n = self.n;
        let mut table: HashMap<(u64, u64), ZSeries> = HashMap::new();
        // build by number of rows, expanding along the last chosen row
        let mut prev: Vec<(u64, u64)> = vec![(0, 0)];
        table.insert((0, 0), ZSeries::one(&self.ring, None));
        for _k in 1..=n {
            let mut next: Vec<(u64, u64)> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for &(rm, _) in &prev {
                let start = 64 - rm.leading_zeros() as usize;
                for r in start..n {
                    let rows = rm | (1 << r);
                    if !seen.insert(rows) {
                        continue;
                    }
                    let k = rows.count_ones() as usize;
                    for cols in subsets(n, k) {
                        // expand along the row r (largest in the set)
                        let mut acc = ZSeries::zero(&self.ring, None);
                        let mut pos = 0usize;
                        for c in 0..n {
                            if cols & (1 << c) == 0 {
                                continue;
                            }
                            let e = self.get(r, c);
                            if !(e.is_zero() && e.is_exact()) {
                                let sub = &table[&(rm, cols & !(1 << c))];
                                let term = e.checked_mul(sub)?;
                                // r is the last row, c the pos-th column: sign (−1)^{(k−1)+pos}
                                acc = if (k - 1 + pos) % 2 == 1 {
                                    acc.checked_sub(&term)?
                                } else {
                                    acc.checked_add(&term)?
                                };
                            }
                            pos += 1;
                        }
                        table.insert((rows, cols), acc);
                        next.push((rows, cols));
                    }
                }
            }
            prev = next;
        }
        table.remove(&(0, 0));
        Ok(table)
    }

    /// `g⁻¹ = adj(g)/det(g)`; `target` as in [`ZSeries::inverse`].
    pub fn inverse(&self, target: Option<i64>) -> Result<LoopMatrix> {
        let n = self.n;
        let det = self.det()?;
        let det_inv = det.inverse(target.map(|t| t + self.cofactor_top_margin()))?;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // (g⁻¹)_{ij} = (−1)^{i+j} M_{ji} / det
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let cof = if n == 1 {
                    ZSeries::one(&self.ring, None)
                } else {
                    self.minor0(&rows, &cols)?
                };
                let cof = if (i + j) % 2 == 1 { cof.neg() } else { cof };
                entries.push(cof.checked_mul(&det_inv)?);
            }
        }
        LoopMatrix::new(n, entries)
    }

    /// Crude bound on the positive top degree of any cofactor.
    fn cofactor_top_margin(&self) -> i64 {
        let n = self.n as i64;
        (n - 1).max(0) * self.max_top_degree().unwrap_or(0).max(0)
    }
}

/// All `k`-subsets of `0..n` as bitmasks, increasing.
pub fn subsets(n: usize, k: usize) -> Vec<u64> {
    (0u64..(1 << n)).filter(|m| m.count_ones() as usize == k).collect()
}

pub fn mask_to_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

/// `num / den`, with the inverse of `den` taken far enough that the
/// quotient is known down to `floor` when inputs allow it.
pub(crate) fn divide(num: &ZSeries, den: &ZSeries, floor: Option<i64>) -> Result<ZSeries> {
    let margin = num.top_degree().unwrap_or(0).max(0);
    let inv = den.inverse(floor.map(|f| f + margin))?;
    num.checked_mul(&inv)
}

/// Minor on 1-based `rows`, `cols`.
pub fn generalized_minor(g: &LoopMatrix, rows: &[usize], cols: &[usize]) -> Result<ZSeries> {
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DimensionMismatch("index sets are 1-based".into()));
    }
    let r: Vec<usize> = rows.iter().map(|i| i - 1).collect();
    let c: Vec<usize> = cols.iter().map(|i| i - 1).collect();
    g.minor0(&r, &c)
}

/// `Δ_k`: the minor on rows and columns `n−k+1..n`.
pub fn trailing_minor(g: &LoopMatrix, k: usize) -> Result<ZSeries> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::DimensionMismatch(format!(
            "trailing minor {k} of a {n}×{n} matrix"
        )));
    }
    let idx: Vec<usize> = (n - k..n).collect();
    g.minor0(&idx, &idx)
}

/// `(x, t, y)` with `g = x·t·y`.
#[derive(Clone, Debug)]
pub struct Gauss {
    pub x: LoopMatrix,
    pub t: LoopMatrix,
    pub y: LoopMatrix,
}

impl Gauss {
    pub fn product(&self) -> Result<LoopMatrix> {
        LoopMatrix::product(&[&self.x, &self.t, &self.y])
    }
}

/// Gauss decomposition of the big cell. `floor` is the precision wanted
/// where an inverse has an infinite expansion (required for exact input
/// whose minors are not monomial up to nilpotents).
pub fn gauss_decompose(g: &LoopMatrix, floor: Option<i64>) -> Result<Gauss> {
    let n = g.n();
    let floor = floor.or(g.prec());
    let mut deltas = Vec::with_capacity(n + 1);
    deltas.push(ZSeries::one(g.ring(), None));
    for k in 1..=n {
        let d = trailing_minor(g, k)?;
        // shape test: a unit coefficient must exist
        if !d.terms().any(|(_, c)| c.is_unit()) {
            return Err(Error::NotInBigCell(k));
        }
        deltas.push(d);
    }
    let wrap = |k: usize| {
        move |e: Error| match e {
            Error::NotInvertibleShape(_) => Error::NotInBigCell(k),
            other => other,
        }
    };
    let t_diag = (1..=n)
        .map(|j| divide(&deltas[n - j + 1], &deltas[n - j], floor).map_err(wrap(n - j)))
        .collect::<Result<Vec<_>>>()?;
    let x = upper_factor(g, &deltas, floor)?;
    let y = upper_factor(&g.transpose(), &deltas, floor)?.transpose();
    Ok(Gauss {
        x,
        t: LoopMatrix::diag(t_diag)?,
        y,
    })
}

/// `x_ij = minor(g, {i}∪{j+1..n}, {j..n}) / Δ_{n−j+1}` (1-based), `i < j`.
fn upper_factor(g: &LoopMatrix, deltas: &[ZSeries], floor: Option<i64>) -> Result<LoopMatrix> {
    let n = g.n();
    let ring = g.ring();
    let mut x = LoopMatrix::identity(ring, n);
    for j in 1..n {
        let cols: Vec<usize> = (j..n).collect();
        for i in 0..j {
            let mut rows = vec![i];
            rows.extend(j + 1..n);
            let m = g.minor0(&rows, &cols)?;
            let d = &deltas[n - j];
            x.set(i, j, divide(&m, d, floor).map_err(|_| Error::NotInBigCell(n - j))?);
        }
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Plus => "upper",
            Side::Minus => "lower",
        }
    }
}

fn is_unipotent(u: &LoopMatrix, side: Side) -> bool {
    let n = u.n();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let e = u.get(i, j);
            match (i.cmp(&j), side) {
                (std::cmp::Ordering::Equal, _) => e.is_one_plus_negative() && e.negative_part().is_zero(),
                (std::cmp::Ordering::Greater, Side::Plus) | (std::cmp::Ordering::Less, Side::Minus) => e.is_zero(),
                _ => true,
            }
        })
    })
}

/// `u = u_pol·u_tail` (plus) or `u = u_tail·u_pol` (minus), polynomial
/// part in `U^±[z]` and tail in `U₁^±[[z⁻¹]]`. Returns `(u_pol, u_tail)`.
pub fn unipotent_split(u: &LoopMatrix, side: Side) -> Result<(LoopMatrix, LoopMatrix)> {
    if !is_unipotent(u, side) {
        return Err(Error::NotUnipotent(side.name()));
    }
    // the minus side is the transpose of the plus side with factors swapped
    if side == Side::Minus {
        let (p, t) = unipotent_split(&u.transpose(), Side::Plus)?;
        return Ok((p.transpose(), t.transpose()));
    }
    let n = u.n();
    let ring = u.ring();
    let mut pol = LoopMatrix::identity(ring, n);
    let mut tail = LoopMatrix::identity(ring, n);
    for dist in 1..n {
        for i in 0..n - dist {
            let j = i + dist;
            let mut r = u.get(i, j).clone();
            for l in i + 1..j {
                r = r.checked_sub(&pol.get(i, l).checked_mul(tail.get(l, j))?)?;
            }
            pol.set(i, j, r.reg());
            tail.set(i, j, r.negative_part());
        }
    }
    Ok((pol, tail))
}

/// Diagonal `t` with `Δ_k(t) = γ_k`.
pub fn torus_from_gammas(gammas: &[ZSeries], floor: Option<i64>) -> Result<LoopMatrix> {
    let n = gammas.len();
    let Some(first) = gammas.first() else {
        return Err(Error::DimensionMismatch("no gammas".into()));
    };
    let one = ZSeries::one(first.ring(), None);
    let diag = (1..=n)
        .map(|j| {
            let num = &gammas[n - j];
            let den = if j == n { &one } else { &gammas[n - j - 1] };
            divide(num, den, floor)
        })
        .collect::<Result<Vec<_>>>()?;
    LoopMatrix::diag(diag)
}

pub fn is_unipotent_upper_poly(u: &LoopMatrix) -> bool {
    is_unipotent(u, Side::Plus) && u.entries().iter().all(|e| e.is_exact() && e.is_polynomial())
}

pub fn is_unipotent_lower_poly(u: &LoopMatrix) -> bool {
    is_unipotent(u, Side::Minus) && u.entries().iter().all(|e| e.is_exact() && e.is_polynomial())
}

/// Unipotent of the given side with off-diagonal entries in `z⁻¹A[[z⁻¹]]`.
pub fn is_in_u1_tail(u: &LoopMatrix, side: Side) -> bool {
    let n = u.n();
    is_unipotent(u, side) && (0..n).all(|i| (0..n).all(|j| i == j || u.get(i, j).reg().is_zero()))
}

/// Diagonal with entries in `1 + z⁻¹A[[z⁻¹]]`.
pub fn is_in_t1_tail(t: &LoopMatrix) -> bool {
    let n = t.n();
    (0..n).all(|i| {
        (0..n).all(|j| {
            if i == j {
                t.get(i, j).is_one_plus_negative()
            } else {
                t.get(i, j).is_zero()
            }
        })
    })
}

pub fn is_diagonal(t: &LoopMatrix) -> bool {
    let n = t.n();
    (0..n).all(|i| (0..n).all(|j| i == j || t.get(i, j).is_zero()))
}

/// `g ∈ G(A[z])`: exact polynomial entries and a determinant whose residue
/// is a nonzero constant.
pub fn is_in_g_poly(g: &LoopMatrix) -> bool {
    if !g.entries().iter().all(|e| e.is_exact() && e.is_polynomial()) {
        return false;
    }
    let Ok(det) = g.det() else { return false };
    det.terms()
        .all(|(d, c)| if d == 0 { c.is_unit() } else { c.is_nilpotent() })
        && det.coeff_or_zero(0).is_unit()
}

impl fmt::Display for LoopMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for LoopMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LoopMatrix[{}] {}", self.ring.descriptor(), self)
    }
}

impl Serialize for LoopMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LoopMatrix", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("entries", &self.entries)?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawMatrix {
    Full {
        n: usize,
        entries: Vec<ZSeries>,
    },
    Rows {
        #[serde(default)]
        ring: Option<RingDescriptor>,
        #[serde(default)]
        prec: Option<i64>,
        rows: Vec<Vec<String>>,
    },
}

impl<'de> Deserialize<'de> for LoopMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let res = match RawMatrix::deserialize(d)? {
            RawMatrix::Full { n, entries } => LoopMatrix::new(n, entries),
            RawMatrix::Rows { ring, prec, rows } => {
                let ring = Ring::new(ring.unwrap_or(RingDescriptor::Rational));
                let refs: Vec<Vec<&str>> = rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
                let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
                LoopMatrix::from_strs(&ring, prec, &slices)
            }
        };
        res.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Ring {
        Ring::rational()
    }

    fn m(rows: &[&[&str]]) -> LoopMatrix {
        LoopMatrix::from_strs(&q(), None, rows).unwrap()
    }

    fn s(e: &str) -> ZSeries {
        parse_series(e, &q(), None).unwrap()
    }

    #[test]
    fn minor_examples() {
        let g = m(&[&["1", "0"], &["0", "z"]]);
        assert_eq!(generalized_minor(&g, &[2], &[2]).unwrap(), s("z"));
        let g = m(&[&["1", "1"], &["0", "z"]]);
        assert_eq!(generalized_minor(&g, &[1, 2], &[1, 2]).unwrap(), s("z"));
        let id = LoopMatrix::identity(&q(), 3);
        assert_eq!(generalized_minor(&id, &[1, 3], &[1, 3]).unwrap(), s("1"));
        assert!(generalized_minor(&id, &[1], &[1, 2]).is_err());
    }

    #[test]
    fn trailing_minors_of_z_power() {
        let mu = Coweight(vec![2, -1, 0]);
        let g = LoopMatrix::z_power(&q(), &mu);
        for k in 1..=3 {
            assert_eq!(
                trailing_minor(&g, k).unwrap(),
                ZSeries::z_power(&q(), mu.trailing_sum(k))
            );
        }
        let g = m(&[&["1", "0"], &["0", "z"]]);
        assert_eq!(trailing_minor(&g, 1).unwrap(), s("z"));
        assert_eq!(trailing_minor(&g, 2).unwrap(), s("z"));
    }

    #[test]
    fn all_minors_agree_with_laplace() {
        let g = m(&[&["1", "z", "2"], &["z^-1", "3", "z^2"], &["0", "1/2", "z + 1"]]);
        let table = g.all_minors().unwrap();
        assert_eq!(table.len(), 9 + 9 + 1);
        for (&(r, c), v) in &table {
            assert_eq!(v, &g.minor0(&mask_to_indices(r), &mask_to_indices(c)).unwrap());
        }
    }

    #[test]
    fn gauss_hand_example() {
        let g = m(&[&["1", "z^-1"], &["z^-1", "1 + z^-2"]]);
        let gd = gauss_decompose(&g, Some(10)).unwrap();
        let w = s("1 + z^-2").inverse(Some(12)).unwrap();
        let zinv = s("z^-1");
        assert!(gd.x.get(0, 1).eq_on_window(&(&zinv * &w)));
        assert!(gd.y.get(1, 0).eq_on_window(&(&zinv * &w)));
        assert!(gd.t.get(0, 0).eq_on_window(&w));
        assert!(gd.t.get(1, 1).eq_on_window(&s("1 + z^-2")));
        assert!(gd.product().unwrap().eq_on_window(&g));
        assert!(gd.product().unwrap().prec().unwrap() >= 8);
    }

    #[test]
    fn gauss_triangular_example() {
        let g = m(&[&["1", "1"], &["0", "z"]]);
        let gd = gauss_decompose(&g, None).unwrap();
        assert_eq!(gd.x, m(&[&["1", "z^-1"], &["0", "1"]]));
        assert_eq!(gd.t, m(&[&["1", "0"], &["0", "z"]]));
        assert_eq!(gd.y, LoopMatrix::identity(&q(), 2));
        assert_eq!(gd.product().unwrap(), g);
    }

    #[test]
    fn gauss_rejects_small_cell() {
        let g = m(&[&["0", "1"], &["1", "0"]]);
        assert_eq!(gauss_decompose(&g, Some(4)).unwrap_err(), Error::NotInBigCell(1));
    }

    #[test]
    fn split_examples() {
        let u = m(&[&["1", "z + 2 + z^-1"], &["0", "1"]]);
        let (p, t) = unipotent_split(&u, Side::Plus).unwrap();
        assert_eq!(p, m(&[&["1", "z + 2"], &["0", "1"]]));
        assert_eq!(t, m(&[&["1", "z^-1"], &["0", "1"]]));
        let id = LoopMatrix::identity(&q(), 3);
        let (p, t) = unipotent_split(&id, Side::Minus).unwrap();
        assert_eq!((p, t), (id.clone(), id));
        assert!(unipotent_split(&u, Side::Minus).is_err());
    }

    #[test]
    fn split_three_by_three() {
        let u = m(&[
            &["1", "z + z^-1", "3 - z^-2 + z^2"],
            &["0", "1", "2z^-1 + 5"],
            &["0", "0", "1"],
        ]);
        let (p, t) = unipotent_split(&u, Side::Plus).unwrap();
        assert!(is_unipotent_upper_poly(&p));
        assert!(is_in_u1_tail(&t, Side::Plus));
        assert_eq!(p.checked_mul(&t).unwrap(), u);
        let l = u.transpose();
        let (p, t) = unipotent_split(&l, Side::Minus).unwrap();
        assert!(is_unipotent_lower_poly(&p));
        assert!(is_in_u1_tail(&t, Side::Minus));
        assert_eq!(t.checked_mul(&p).unwrap(), l);
    }

    #[test]
    fn torus_examples() {
        let r = Ring::eps(2);
        let g1 = parse_series("1 - eps z", &r, None).unwrap();
        let t = torus_from_gammas(&[g1.clone(), g1], None).unwrap();
        assert_eq!(
            t,
            LoopMatrix::from_strs(&r, None, &[&["1", "0"], &["0", "1 - eps z"]]).unwrap()
        );
        let t = torus_from_gammas(&[s("z"), s("z")], None).unwrap();
        assert_eq!(t, LoopMatrix::z_power(&q(), &Coweight(vec![0, 1])));
        let ones = vec![s("1"); 3];
        assert_eq!(torus_from_gammas(&ones, None).unwrap(), LoopMatrix::identity(&q(), 3));
    }

    #[test]
    fn predicate_examples() {
        assert!(is_unipotent_upper_poly(&m(&[&["1", "z^2"], &["0", "1"]])));
        let t = LoopMatrix::diag(vec![s("1 + z^-1"), s("1")]).unwrap();
        assert!(is_in_t1_tail(&t));
        let r = Ring::eps(2);
        let g = LoopMatrix::from_strs(&r, None, &[&["1", "z"], &["0", "1 + eps z"]]).unwrap();
        assert!(is_in_g_poly(&g));
        assert!(!is_in_g_poly(&m(&[&["1", "z"], &["0", "z"]])));
    }

    #[test]
    fn inverse_of_polynomial_matrix() {
        let g = m(&[&["1", "z"], &["0", "1"]]);
        let inv = g.inverse(None).unwrap();
        assert_eq!(inv, m(&[&["1", "-z"], &["0", "1"]]));
        let h = m(&[&["z + 1", "1"], &["1", "2"]]);
        let hinv = h.inverse(Some(6)).unwrap();
        let prod = h.checked_mul(&hinv).unwrap();
        assert!(prod.eq_on_window(&LoopMatrix::identity(&q(), 2)));
        assert!(prod.prec().unwrap() >= 6);
    }

    #[test]
    fn coweight_basics() {
        let c = Coweight::parse("(2, 0,-1)").unwrap();
        assert!(c.is_dominant());
        assert_eq!(c.trailing_sum(2), -1);
        assert_eq!(c.leading_sum(2), 2);
        assert_eq!(c.smallest_sum(2), -1);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[2,0,-1]");
    }

    #[test]
    fn json_round_trip_and_rows_form() {
        let g = m(&[&["1", "z + 1/2"], &["z^-1", "3"]]).truncate(4);
        let j = serde_json::to_string(&g).unwrap();
        let back: LoopMatrix = serde_json::from_str(&j).unwrap();
        assert_eq!(back, g);
        let rows: LoopMatrix = serde_json::from_str(r#"{"rows":[["1","1"],["0","z"]]}"#).unwrap();
        assert_eq!(rows, m(&[&["1", "1"], &["0", "z"]]));
    }
}
