//! Unipotent affine maps `T_i x = A_i x + α_i` of the torus `R^r / Z^r` with
//! rational translations.
//!
//! Points are rational. Internally every computation is carried out on the
//! lattice `(1/D) Z^r / Z^r` for a common denominator `D`, which the maps
//! preserve, so all arithmetic is exact integer arithmetic modulo `D`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::finite_system::{FiniteZdSystem, Point};
use crate::text::{content_lines, key_value, parse_num, ParseError};

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffineError {
    #[error("shape: {0}")]
    Shape(String),
    #[error("matrix A{0} is not unipotent")]
    NotUnipotent(usize),
    #[error("integer overflow")]
    Overflow,
    #[error("translation denominator {den} does not divide {q}")]
    DenominatorMismatch { den: i64, q: i64 },
    #[error("lattice has {0} points, above the cap")]
    TooLarge(u128),
}

/// Square integer matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self, AffineError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(AffineError::Shape(format!("matrix with {n} rows is not square")));
        }
        Ok(IntMatrix { n, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).take(self.n).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AffineError> {
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let t = a.checked_mul(other.get(k, j)).ok_or(AffineError::Overflow)?;
                    data[i * n + j] = data[i * n + j].checked_add(t).ok_or(AffineError::Overflow)?;
                }
            }
        }
        Ok(IntMatrix { n, data })
    }

    pub fn minus_identity(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] -= 1;
        }
        m
    }

    fn neg(&self) -> Self {
        IntMatrix { n: self.n, data: self.data.iter().map(|x| -x).collect() }
    }

    fn add(&self, other: &Self) -> Result<Self, AffineError> {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.checked_add(*b).ok_or(AffineError::Overflow))
            .collect::<Result<_, _>>()?;
        Ok(IntMatrix { n: self.n, data })
    }

    /// Smallest `p ≤ n` with `(A - I)^p = 0`.
    pub fn nilpotency_index_of_shift(&self) -> Result<Option<usize>, AffineError> {
        let nmat = self.minus_identity();
        let mut power = IntMatrix::identity(self.n);
        for p in 1..=self.n.max(1) {
            power = power.mul(&nmat)?;
            if power.is_zero() {
                return Ok(Some(p));
            }
        }
        Ok(if self.n == 0 { Some(0) } else { None })
    }

    /// Inverse of a unipotent matrix, `Σ_k (I - A)^k`.
    fn unipotent_inverse(&self) -> Result<Self, AffineError> {
        let neg_shift = self.minus_identity().neg();
        let mut term = IntMatrix::identity(self.n);
        let mut sum = term.clone();
        for _ in 1..self.n {
            term = term.mul(&neg_shift)?;
            sum = sum.add(&term)?;
        }
        Ok(sum)
    }

    /// `M v` for a rational vector.
    pub fn apply_rational(&self, v: &[Rational]) -> Vec<Rational> {
        (0..self.n)
            .map(|i| (0..self.n).fold(Rational::from_integer(0), |acc, j| acc + v[j] * self.get(i, j)))
            .collect()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

fn frac(x: Rational) -> Rational {
    x - x.floor()
}

fn is_integral(v: &[Rational]) -> bool {
    v.iter().all(|x| x.is_integer())
}

/// A point of the torus; every coordinate reduced into `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalTorusPoint {
    coords: Vec<Rational>,
}

impl RationalTorusPoint {
    pub fn new(coords: Vec<Rational>) -> Self {
        RationalTorusPoint { coords: coords.into_iter().map(frac).collect() }
    }

    pub fn zero(r: usize) -> Self {
        RationalTorusPoint { coords: vec![Rational::from_integer(0); r] }
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    /// Least common denominator of the coordinates.
    pub fn denominator(&self) -> i64 {
        self.coords.iter().fold(1, |acc, x| acc.lcm(x.denom()))
    }
}

impl fmt::Display for RationalTorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for RationalTorusPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.coords.iter().map(|x| x.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineZdSystem {
    r: usize,
    mats: Vec<IntMatrix>,
    alphas: Vec<Vec<Rational>>,
}

impl AffineZdSystem {
    /// Checks shapes only; see [`validate_affine`] for the invariants.
    pub fn new(mats: Vec<IntMatrix>, alphas: Vec<Vec<Rational>>) -> Result<Self, AffineError> {
        if mats.is_empty() || mats.len() != alphas.len() {
            return Err(AffineError::Shape("need one translation per matrix, at least one of each".into()));
        }
        let r = mats[0].size();
        if mats.iter().any(|m| m.size() != r) || alphas.iter().any(|a| a.len() != r) {
            return Err(AffineError::Shape(format!("all matrices must be {r}x{r} and translations of length {r}")));
        }
        Ok(AffineZdSystem { r, mats, alphas })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.mats.len()
    }

    /// `A_i`, counted from 1.
    pub fn matrix(&self, i: usize) -> &IntMatrix {
        &self.mats[i - 1]
    }

    pub fn alpha(&self, i: usize) -> &[Rational] {
        &self.alphas[i - 1]
    }

    /// Least common denominator of all translation entries.
    pub fn translation_denominator(&self) -> i64 {
        self.alphas.iter().flatten().fold(1, |acc, x| acc.lcm(x.denom()))
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        match lines.next() {
            Some((_, "affine-system")) => {}
            Some((l, _)) => return Err(ParseError::new(l, "expected header `affine-system`")),
            None => return Err(ParseError::new(1, "empty input")),
        }
        let mut r: Option<usize> = None;
        let mut d: Option<usize> = None;
        let mut mats: Vec<(usize, usize, Vec<Vec<i64>>)> = Vec::new();
        let mut alphas: Vec<(usize, usize, Vec<Rational>)> = Vec::new();
        let mut last = 1;
        for (l, line) in lines {
            last = l;
            let (k, v) = key_value(line).ok_or_else(|| ParseError::new(l, "expected `key = value`"))?;
            if k == "r" && r.is_none() {
                r = Some(parse_num(l, v)?);
            } else if k == "d" && d.is_none() {
                d = Some(parse_num(l, v)?);
            } else if let Some(i) = k.strip_prefix("alpha") {
                let inner = v
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| ParseError::new(l, "expected `[p/q, ...]`"))?;
                let vals = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(|p| parse_num::<Rational>(l, p)).collect::<Result<_, _>>()?
                };
                alphas.push((parse_num(l, i)?, l, vals));
            } else if let Some(i) = k.strip_prefix('A') {
                let rows: Vec<Vec<i64>> =
                    serde_json::from_str(v).map_err(|e| ParseError::new(l, format!("bad matrix: {e}")))?;
                mats.push((parse_num(l, i)?, l, rows));
            } else {
                return Err(ParseError::new(l, format!("unexpected key {k:?}")));
            }
        }
        let r = r.ok_or_else(|| ParseError::new(last, "missing `r`"))?;
        let d = d.ok_or_else(|| ParseError::new(last, "missing `d`"))?;
        let mut m_out: Vec<Option<IntMatrix>> = vec![None; d];
        let mut a_out: Vec<Option<Vec<Rational>>> = vec![None; d];
        for (i, l, rows) in mats {
            if i == 0 || i > d || m_out[i - 1].is_some() {
                return Err(ParseError::new(l, format!("A{i} out of range or repeated")));
            }
            let m = IntMatrix::from_rows(&rows).map_err(|e| ParseError::new(l, e))?;
            if m.size() != r {
                return Err(ParseError::new(l, format!("A{i} is not {r}x{r}")));
            }
            m_out[i - 1] = Some(m);
        }
        for (i, l, vals) in alphas {
            if i == 0 || i > d || a_out[i - 1].is_some() {
                return Err(ParseError::new(l, format!("alpha{i} out of range or repeated")));
            }
            if vals.len() != r {
                return Err(ParseError::new(l, format!("alpha{i} has {} entries, expected {r}", vals.len())));
            }
            a_out[i - 1] = Some(vals);
        }
        let mats = m_out
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| ParseError::new(last, format!("missing A{}", i + 1))))
            .collect::<Result<_, _>>()?;
        let alphas = a_out
            .into_iter()
            .enumerate()
            .map(|(i, a)| a.ok_or_else(|| ParseError::new(last, format!("missing alpha{}", i + 1))))
            .collect::<Result<_, _>>()?;
        AffineZdSystem::new(mats, alphas).map_err(|e| ParseError::new(last, e))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("affine-system\nr = {}\nd = {}\n", self.r, self.d());
        for (i, m) in self.mats.iter().enumerate() {
            s.push_str(&format!("A{} = {m}\n", i + 1));
        }
        for (i, a) in self.alphas.iter().enumerate() {
            let parts: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("alpha{} = [{}]\n", i + 1, parts.join(", ")));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineValidation {
    /// Smallest `p` with `(A_i - I)^p = 0`, or `None`.
    pub nilpotency_index: Vec<Option<usize>>,
    /// First `(i, j)` with `A_i A_j ≠ A_j A_i`.
    pub matrices_do_not_commute: Option<(usize, usize)>,
    /// First `(i, j)` with `(A_i - I) α_j ≢ (A_j - I) α_i`.
    pub translations_do_not_commute: Option<(usize, usize)>,
}

impl AffineValidation {
    pub fn is_valid(&self) -> bool {
        self.nilpotency_index.iter().all(Option::is_some)
            && self.matrices_do_not_commute.is_none()
            && self.translations_do_not_commute.is_none()
    }
}

fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn validate_affine(sys: &AffineZdSystem) -> Result<AffineValidation, AffineError> {
    let nilpotency_index = sys.mats.iter().map(|m| m.nilpotency_index_of_shift()).collect::<Result<_, _>>()?;
    let d = sys.d();
    let mut matrices_do_not_commute = None;
    let mut translations_do_not_commute = None;
    for i in 1..=d {
        for j in i + 1..=d {
            let (a, b) = (sys.matrix(i), sys.matrix(j));
            if matrices_do_not_commute.is_none() && a.mul(b)? != b.mul(a)? {
                matrices_do_not_commute = Some((i, j));
            }
            let lhs = a.minus_identity().apply_rational(sys.alpha(j));
            let rhs = b.minus_identity().apply_rational(sys.alpha(i));
            if translations_do_not_commute.is_none() && !is_integral(&sub(&lhs, &rhs)) {
                translations_do_not_commute = Some((i, j));
            }
        }
    }
    Ok(AffineValidation { nilpotency_index, matrices_do_not_commute, translations_do_not_commute })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatCond {
    /// `(A_1 - I)(A_2 - I) = 0`; only for two generators.
    pub cond1: Option<bool>,
    /// `(A_1 - I) α_2 ≡ (A_2 - I) α_1 ≡ 0`; only for two generators.
    pub cond2: Option<bool>,
    /// `∏_i (A_i - I) = 0`.
    pub cond3: bool,
    /// `∏_{i ≠ j} (A_i - I) α_j ≡ 0` for every `j`.
    pub cond4: bool,
    /// First `j` violating the fourth condition.
    pub cond4_failure: Option<usize>,
}

impl MatCond {
    pub fn holds(&self) -> bool {
        self.cond3 && self.cond4
    }
}

pub fn matcond_check(sys: &AffineZdSystem) -> Result<MatCond, AffineError> {
    let d = sys.d();
    let shifts: Vec<IntMatrix> = sys.mats.iter().map(IntMatrix::minus_identity).collect();
    let product = |skip: Option<usize>| -> Result<IntMatrix, AffineError> {
        shifts
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .try_fold(IntMatrix::identity(sys.r), |acc, (_, m)| acc.mul(m))
    };
    let cond3 = product(None)?.is_zero();
    let mut cond4_failure = None;
    for j in 0..d {
        if !is_integral(&product(Some(j))?.apply_rational(&sys.alphas[j])) {
            cond4_failure = Some(j + 1);
            break;
        }
    }
    let cond4 = cond4_failure.is_none();
    let (cond1, cond2) = if d == 2 { (Some(cond3), Some(cond4)) } else { (None, None) };
    Ok(MatCond { cond1, cond2, cond3, cond4, cond4_failure })
}

/// One generator acting on `(1/den) Z^r`, numerators reduced mod `den`.
#[derive(Debug, Clone)]
struct LatticeMap {
    den: i64,
    fwd: IntMatrix,
    fwd_shift: Vec<i64>,
    inv: IntMatrix,
    inv_shift: Vec<i64>,
}

impl LatticeMap {
    fn new(a: &IntMatrix, alpha: &[Rational], den: i64) -> Result<Self, AffineError> {
        let inv = a.unipotent_inverse()?;
        let scaled: Vec<i64> = alpha.iter().map(|x| (x * den).to_integer().rem_euclid(den)).collect();
        let inv_shift = affine_step(&inv, &vec![0; scaled.len()], &scaled, den)
            .iter()
            .map(|v| (-v).rem_euclid(den))
            .collect();
        Ok(LatticeMap { den, fwd: a.clone(), fwd_shift: scaled, inv, inv_shift })
    }

    fn step(&self, x: &[i64], forward: bool) -> Vec<i64> {
        if forward {
            affine_step(&self.fwd, &self.fwd_shift, x, self.den)
        } else {
            affine_step(&self.inv, &self.inv_shift, x, self.den)
        }
    }

    fn power(&self, k: i64, x: &[i64]) -> Vec<i64> {
        let mut y = x.to_vec();
        for _ in 0..k.unsigned_abs() {
            y = self.step(&y, k > 0);
        }
        y
    }
}

fn affine_step(m: &IntMatrix, shift: &[i64], x: &[i64], den: i64) -> Vec<i64> {
    (0..m.size())
        .map(|i| {
            let s = (0..m.size()).fold(shift[i] as i128, |acc, j| acc + m.get(i, j) as i128 * x[j] as i128);
            s.rem_euclid(den as i128) as i64
        })
        .collect()
}

struct Lattice {
    den: i64,
    maps: Vec<LatticeMap>,
}

impl Lattice {
    fn new(sys: &AffineZdSystem, den: i64) -> Result<Self, AffineError> {
        for (i, m) in sys.mats.iter().enumerate() {
            if m.nilpotency_index_of_shift()?.is_none() {
                return Err(AffineError::NotUnipotent(i + 1));
            }
        }
        let maps = sys.mats.iter().zip(&sys.alphas).map(|(m, a)| LatticeMap::new(m, a, den)).collect::<Result<_, _>>()?;
        Ok(Lattice { den, maps })
    }

    fn for_point(sys: &AffineZdSystem, x: &RationalTorusPoint) -> Result<Self, AffineError> {
        Self::new(sys, sys.translation_denominator().lcm(&x.denominator()))
    }

    fn encode(&self, x: &RationalTorusPoint) -> Vec<i64> {
        x.coords.iter().map(|c| (c * self.den).to_integer().rem_euclid(self.den)).collect()
    }

    fn decode(&self, v: &[i64]) -> RationalTorusPoint {
        RationalTorusPoint::new(v.iter().map(|&n| Rational::new(n, self.den)).collect())
    }

    /// `T_1^{n_1} ⋯ T_d^{n_d} x`, innermost `T_d`.
    fn iterate(&self, n: &[i64], x: &[i64]) -> Vec<i64> {
        self.maps.iter().zip(n).rev().fold(x.to_vec(), |y, (m, &k)| m.power(k, &y))
    }

    /// The alternating sum over proper subsets `I` of `◯_{k ∈ I} T_k^{n_k} x`.
    fn closed_form(&self, n: &[i64], x: &[i64]) -> Vec<i64> {
        let d = n.len();
        let mut acc = vec![0i64; x.len()];
        for mask in 0..(1usize << d) - 1 {
            let sub: Vec<i64> = (0..d).map(|k| if mask >> k & 1 == 1 { n[k] } else { 0 }).collect();
            let term = self.iterate(&sub, x);
            // (-1)^d (-1)^{|I|+1}
            let sign = if (d + mask.count_ones() as usize + 1) % 2 == 0 { 1 } else { -1 };
            for (a, t) in acc.iter_mut().zip(term) {
                *a = (*a + sign * t).rem_euclid(self.den);
            }
        }
        acc
    }
}

impl Lattice {
    /// First `n` in the box where direct iteration and the closed form differ.
    ///
    /// Fills `V[n] = T_1^{n_1} ⋯ T_d^{n_d} x` over the box widened to hold 0,
    /// one generator step per entry; every subset term is `V` at a masked `n`.
    fn sweep(&self, x: &[i64], lo: i64, hi: i64) -> Option<(Vec<i64>, Vec<i64>, Vec<i64>)> {
        let d = self.maps.len();
        let (tlo, thi) = (lo.min(0), hi.max(0));
        let side = (thi - tlo + 1) as usize;
        let total = side.pow(d as u32);
        let stride: Vec<usize> = (0..d).map(|k| side.pow(k as u32)).collect();
        let zero = (-tlo) as usize;
        let index = |n: &[i64]| -> usize { n.iter().zip(&stride).map(|(&v, s)| (v - tlo) as usize * s).sum() };
        let mut table: Vec<Vec<i64>> = vec![Vec::new(); total];
        table[index(&vec![0; d])] = x.to_vec();
        for k in (0..d).rev() {
            // seeds: coordinates below k are zero, coordinate k is zero
            for idx in 0..total {
                let digit = |c: usize| idx / stride[c] % side;
                if (0..=k).any(|c| digit(c) != zero) {
                    continue;
                }
                let mut cur = table[idx].clone();
                for step in 1..=(thi as usize) {
                    cur = self.maps[k].step(&cur, true);
                    table[idx + step * stride[k]] = cur.clone();
                }
                let mut cur = table[idx].clone();
                for step in 1..=(-tlo) as usize {
                    cur = self.maps[k].step(&cur, false);
                    table[idx - step * stride[k]] = cur.clone();
                }
            }
        }
        exponent_box(d, lo, hi).into_iter().find_map(|n| {
            let direct = &table[index(&n)];
            let mut formula = vec![0i64; x.len()];
            for mask in 0..(1usize << d) - 1 {
                let sub: Vec<i64> = (0..d).map(|k| if mask >> k & 1 == 1 { n[k] } else { 0 }).collect();
                let sign = if (d + mask.count_ones() as usize + 1) % 2 == 0 { 1 } else { -1 };
                for (a, t) in formula.iter_mut().zip(&table[index(&sub)]) {
                    *a = (*a + sign * t).rem_euclid(self.den);
                }
            }
            (*direct != formula).then(|| (n, direct.clone(), formula))
        })
    }
}

/// Direct evaluation of `T_1^{n_1} ⋯ T_d^{n_d} x`.
pub fn iterate(sys: &AffineZdSystem, n: &[i64], x: &RationalTorusPoint) -> Result<RationalTorusPoint, AffineError> {
    check_word(sys, n, x)?;
    let lat = Lattice::for_point(sys, x)?;
    Ok(lat.decode(&lat.iterate(n, &lat.encode(x))))
}

/// The inclusion-exclusion expression for `T_1^{n_1} ⋯ T_d^{n_d} x`.
pub fn closed_form(sys: &AffineZdSystem, n: &[i64], x: &RationalTorusPoint) -> Result<RationalTorusPoint, AffineError> {
    check_word(sys, n, x)?;
    let lat = Lattice::for_point(sys, x)?;
    Ok(lat.decode(&lat.closed_form(n, &lat.encode(x))))
}

fn check_word(sys: &AffineZdSystem, n: &[i64], x: &RationalTorusPoint) -> Result<(), AffineError> {
    if n.len() != sys.d() || x.coords.len() != sys.r {
        return Err(AffineError::Shape("word or point has the wrong length".into()));
    }
    Ok(())
}

/// Exponents in `[n_min, n_max]^d`, points on `(1/q) Z^r` for each listed `q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleSpec {
    pub n_min: i64,
    pub n_max: i64,
    pub denominators: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormulaWitness {
    pub n: Vec<i64>,
    pub x: RationalTorusPoint,
    pub direct: RationalTorusPoint,
    pub formula: RationalTorusPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FormulaVerdict {
    /// Conditions hold and the identity held on every sample.
    Holds { samples: u64 },
    /// Conditions hold yet the identity failed.
    Contradiction(FormulaWitness),
    /// Conditions fail and the identity fails at this sample.
    WitnessFound(FormulaWitness),
    /// Conditions fail but no failing sample was found.
    Inconclusive { samples: u64 },
}

impl FormulaVerdict {
    /// The observed behaviour matches what the conditions predict.
    pub fn consistent(&self) -> bool {
        matches!(self, FormulaVerdict::Holds { .. } | FormulaVerdict::WitnessFound(_))
    }
}

const MAX_LATTICE: u128 = 5_000_000;

fn lattice_points(r: usize, q: i64) -> Result<Vec<Vec<i64>>, AffineError> {
    let total = (q as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if total > MAX_LATTICE {
        return Err(AffineError::TooLarge(total));
    }
    Ok((0..total as u64)
        .map(|mut idx| {
            let mut v = vec![0i64; r];
            for slot in v.iter_mut().rev() {
                *slot = (idx % q as u64) as i64;
                idx /= q as u64;
            }
            v
        })
        .collect())
}

fn exponent_box(d: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    (0..d).fold(vec![vec![]], |acc, _| {
        acc.into_iter()
            .flat_map(|v| {
                (lo..=hi).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect()
    })
}

/// Compare the closed form with direct iteration on every sample.
pub fn formula_equivalence_test(sys: &AffineZdSystem, spec: &SampleSpec) -> Result<FormulaVerdict, AffineError> {
    let conditions = matcond_check(sys)?.holds();
    if spec.n_min > spec.n_max {
        return Err(AffineError::Shape("empty exponent range".into()));
    }
    let words = (spec.n_max - spec.n_min + 1).pow(sys.d() as u32) as usize;
    let mut samples = 0u64;
    for &q in &spec.denominators {
        if q < 1 {
            return Err(AffineError::Shape(format!("denominator {q}")));
        }
        let lat = Lattice::new(sys, sys.translation_denominator().lcm(&q))?;
        let scale = lat.den / q;
        let points = lattice_points(sys.r, q)?;
        let found = points.par_iter().find_map_first(|p| {
            let x: Vec<i64> = p.iter().map(|c| c * scale).collect();
            lat.sweep(&x, spec.n_min, spec.n_max).map(|(n, direct, formula)| FormulaWitness {
                n,
                x: lat.decode(&x),
                direct: lat.decode(&direct),
                formula: lat.decode(&formula),
            })
        });
        if let Some(w) = found {
            return Ok(if conditions { FormulaVerdict::Contradiction(w) } else { FormulaVerdict::WitnessFound(w) });
        }
        samples += (points.len() * words) as u64;
    }
    Ok(if conditions { FormulaVerdict::Holds { samples } } else { FormulaVerdict::Inconclusive { samples } })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discretization {
    FullLattice,
    Orbit(RationalTorusPoint),
}

/// A finite system together with the torus point behind each id.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub system: FiniteZdSystem,
    pub points: Vec<RationalTorusPoint>,
}

/// Restrict the maps to `(1/q) Z^r / Z^r` or to one orbit in it.
pub fn discretize(sys: &AffineZdSystem, q: i64, mode: &Discretization) -> Result<DiscreteSystem, AffineError> {
    if q < 1 {
        return Err(AffineError::Shape(format!("denominator {q}")));
    }
    let den = sys.translation_denominator();
    if q % den != 0 {
        return Err(AffineError::DenominatorMismatch { den, q });
    }
    let lat = Lattice::new(sys, q)?;
    let nums: Vec<Vec<i64>> = match mode {
        Discretization::FullLattice => lattice_points(sys.r, q)?,
        Discretization::Orbit(base) => {
            if base.coords.len() != sys.r {
                return Err(AffineError::Shape("base point has the wrong length".into()));
            }
            if q % base.denominator() != 0 {
                return Err(AffineError::DenominatorMismatch { den: base.denominator(), q });
            }
            let start = lat.encode(base);
            let mut seen = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for m in &lat.maps {
                    let y = m.step(&x, true);
                    if seen.insert(y.clone()) {
                        if seen.len() as u128 > MAX_LATTICE {
                            return Err(AffineError::TooLarge(seen.len() as u128));
                        }
                        queue.push_back(y);
                    }
                }
            }
            seen.into_iter().collect()
        }
    };
    let perms = lat
        .maps
        .iter()
        .map(|m| {
            nums.iter()
                .map(|x| nums.binary_search(&m.step(x, true)).expect("lattice is invariant") as Point)
                .collect()
        })
        .collect();
    let system = FiniteZdSystem::new(nums.len(), perms).map_err(|e| AffineError::Shape(e.to_string()))?;
    Ok(DiscreteSystem { system, points: nums.iter().map(|v| lat.decode(v)).collect() })
}
