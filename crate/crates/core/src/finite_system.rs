//! Z^d-systems given by `d` commuting permutations of `{0, …, n-1}`.

use std::collections::{BTreeSet, VecDeque};

use num_integer::Integer;
use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::text::{content_lines, join, key_value, parse_num, ParseError};

/// Point identifier.
pub type Point = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("generator T{generator} is not a bijection of 0..{n}")]
    NotBijective { generator: usize, n: usize },
    #[error("T{i} and T{j} do not commute at point {x}")]
    NotCommuting { i: usize, j: usize, x: Point },
    #[error("generator order overflows u64")]
    OrderOverflow,
    #[error("point {0} out of range")]
    PointOutOfRange(Point),
    #[error("expected {expected} exponents, found {found}")]
    WordLength { expected: usize, found: usize },
    #[error("generator index {0} out of range")]
    GeneratorOutOfRange(usize),
    #[error("system has too many points")]
    TooLarge,
}

/// Permutation data before invariants are checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSystem {
    pub n: usize,
    pub perms: Vec<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutationWitness {
    pub i: usize,
    pub j: usize,
    pub x: Point,
    /// `T_i T_j x`
    pub ij: Point,
    /// `T_j T_i x`
    pub ji: Point,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub n_points: usize,
    pub d: usize,
    pub bijective: Vec<bool>,
    pub commutation_failure: Option<CommutationWitness>,
    pub orders: Option<Vec<u64>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.bijective.iter().all(|&b| b) && self.commutation_failure.is_none() && self.orders.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Cycles {
    // (cycle index, position inside the cycle) for every point
    place: Vec<(u32, u32)>,
    cycles: Vec<Vec<Point>>,
}

impl Cycles {
    fn of(perm: &[Point]) -> Self {
        let mut place = vec![(u32::MAX, 0); perm.len()];
        let mut cycles = Vec::new();
        for start in 0..perm.len() {
            if place[start].0 != u32::MAX {
                continue;
            }
            let id = cycles.len() as u32;
            let mut cyc = Vec::new();
            let mut x = start as Point;
            while place[x as usize].0 == u32::MAX {
                place[x as usize] = (id, cyc.len() as u32);
                cyc.push(x);
                x = perm[x as usize];
            }
            cycles.push(cyc);
        }
        Cycles { place, cycles }
    }

    fn order(&self) -> Option<u64> {
        self.cycles.iter().try_fold(1u64, |acc, c| {
            let l = c.len() as u64;
            let g = acc.gcd(&l);
            acc.checked_mul(l / g)
        })
    }

    fn power(&self, k: u64, x: Point) -> Point {
        let (c, pos) = self.place[x as usize];
        let cyc = &self.cycles[c as usize];
        let len = cyc.len() as u64;
        cyc[((pos as u64 + k % len) % len) as usize]
    }
}

/// A validated system; immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteZdSystem {
    n: usize,
    perms: Vec<Vec<Point>>,
    orders: Vec<u64>,
    cycles: Vec<Cycles>,
}

pub fn validate(raw: &RawSystem) -> ValidationReport {
    let n = raw.n;
    let bijective: Vec<bool> = raw.perms.iter().map(|p| is_bijection(p, n)).collect();
    let mut report = ValidationReport {
        n_points: n,
        d: raw.perms.len(),
        bijective,
        commutation_failure: None,
        orders: None,
    };
    if !report.bijective.iter().all(|&b| b) {
        return report;
    }
    'outer: for i in 0..raw.perms.len() {
        for j in i + 1..raw.perms.len() {
            let (a, b) = (&raw.perms[i], &raw.perms[j]);
            for x in 0..n {
                let ij = a[b[x] as usize];
                let ji = b[a[x] as usize];
                if ij != ji {
                    report.commutation_failure =
                        Some(CommutationWitness { i: i + 1, j: j + 1, x: x as Point, ij, ji });
                    break 'outer;
                }
            }
        }
    }
    report.orders = raw.perms.iter().map(|p| Cycles::of(p).order()).collect();
    report
}

fn is_bijection(p: &[Point], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &y in p {
        if y as usize >= n || seen[y as usize] {
            return false;
        }
        seen[y as usize] = true;
    }
    true
}

impl FiniteZdSystem {
    pub fn new(n: usize, perms: Vec<Vec<Point>>) -> Result<Self, SystemError> {
        Self::from_raw(RawSystem { n, perms })
    }

    pub fn from_raw(raw: RawSystem) -> Result<Self, SystemError> {
        if raw.n >= u32::MAX as usize {
            return Err(SystemError::TooLarge);
        }
        let report = validate(&raw);
        if let Some(g) = report.bijective.iter().position(|&b| !b) {
            return Err(SystemError::NotBijective { generator: g + 1, n: raw.n });
        }
        if let Some(w) = report.commutation_failure {
            return Err(SystemError::NotCommuting { i: w.i, j: w.j, x: w.x });
        }
        let orders = report.orders.ok_or(SystemError::OrderOverflow)?;
        let cycles = raw.perms.iter().map(|p| Cycles::of(p)).collect();
        Ok(FiniteZdSystem { n: raw.n, perms: raw.perms, orders, cycles })
    }

    /// Build from a rule `(generator index from 1, point) -> image`.
    pub fn from_fn(n: usize, d: usize, f: impl Fn(usize, Point) -> Point) -> Result<Self, SystemError> {
        let perms = (1..=d).map(|i| (0..n as Point).map(|x| f(i, x)).collect()).collect();
        Self::new(n, perms)
    }

    /// Rotation of `Z/m` with `T_i x = x + steps[i-1]`.
    pub fn rotation(m: usize, steps: &[i64]) -> Result<Self, SystemError> {
        let m64 = m as i64;
        Self::from_fn(m, steps.len(), |i, x| (x as i64 + steps[i - 1]).rem_euclid(m64) as Point)
    }

    /// Disjoint union; points of `other` are shifted past those of `self`.
    pub fn disjoint_union(&self, other: &Self) -> Result<Self, SystemError> {
        if self.d() != other.d() {
            return Err(SystemError::WordLength { expected: self.d(), found: other.d() });
        }
        let shift = self.n as Point;
        let perms = self
            .perms
            .iter()
            .zip(&other.perms)
            .map(|(a, b)| a.iter().copied().chain(b.iter().map(|y| y + shift)).collect())
            .collect();
        Self::new(self.n + other.n, perms)
    }

    pub fn raw(&self) -> RawSystem {
        RawSystem { n: self.n, perms: self.perms.clone() }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.perms.len()
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    /// Image array of `T_i`, `i` counted from 1.
    pub fn perm(&self, i: usize) -> &[Point] {
        &self.perms[i - 1]
    }

    pub fn points(&self) -> impl Iterator<Item = Point> {
        0..self.n as Point
    }

    pub fn validation_report(&self) -> ValidationReport {
        validate(&self.raw())
    }

    /// `T_i x`.
    pub fn step(&self, i: usize, x: Point) -> Point {
        self.perms[i - 1][x as usize]
    }

    /// `T_i^k x` for any integer `k`.
    pub fn power(&self, i: usize, k: i64, x: Point) -> Point {
        let l = self.orders[i - 1] as i128;
        self.cycles[i - 1].power((k as i128).rem_euclid(l) as u64, x)
    }

    fn check_point(&self, x: Point) -> Result<(), SystemError> {
        if (x as usize) < self.n {
            Ok(())
        } else {
            Err(SystemError::PointOutOfRange(x))
        }
    }

    /// `T_1^{n_1} ⋯ T_d^{n_d} x`.
    pub fn apply_word(&self, n: &[i64], x: Point) -> Result<Point, SystemError> {
        self.check_point(x)?;
        if n.len() != self.d() {
            return Err(SystemError::WordLength { expected: self.d(), found: n.len() });
        }
        Ok(n.iter().enumerate().rev().fold(x, |y, (i, &k)| self.power(i + 1, k, y)))
    }

    /// Orbit of `x` under the whole group, sorted.
    pub fn orbit(&self, x: Point) -> Result<Vec<Point>, SystemError> {
        self.check_point(x)?;
        let gens: Vec<usize> = (1..=self.d()).collect();
        Ok(self.orbit_under(x, &gens))
    }

    fn orbit_under(&self, x: Point, gens: &[usize]) -> Vec<Point> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([x]);
        seen[x as usize] = true;
        let mut out = Vec::new();
        while let Some(y) = queue.pop_front() {
            out.push(y);
            for &i in gens {
                let z = self.step(i, y);
                if !seen[z as usize] {
                    seen[z as usize] = true;
                    queue.push_back(z);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_minimal(&self) -> Minimality {
        if self.n == 0 {
            return Minimality { minimal: true, witness: None, orbit_size: 0 };
        }
        let orbit = self.orbit_under(0, &(1..=self.d()).collect::<Vec<_>>());
        let minimal = orbit.len() == self.n;
        Minimality { minimal, witness: (!minimal).then_some(0), orbit_size: orbit.len() }
    }

    /// Same system with an identity generator inserted at position `j`.
    pub fn with_identity_generator(&self, j: usize) -> Result<Self, SystemError> {
        if j == 0 || j > self.d() + 1 {
            return Err(SystemError::GeneratorOutOfRange(j));
        }
        let mut perms = self.perms.clone();
        perms.insert(j - 1, (0..self.n as Point).collect());
        Self::new(self.n, perms)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let (raw, lines) = parse_raw_with_lines(text)?;
        Self::from_raw(raw).map_err(|e| {
            let line = match &e {
                SystemError::NotBijective { generator, .. } => lines[generator - 1],
                SystemError::NotCommuting { j, .. } => lines[j - 1],
                _ => 1,
            };
            ParseError::new(line, e)
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("finite-system\npoints = {}\nd = {}\n", self.n, self.d());
        for (i, p) in self.perms.iter().enumerate() {
            s.push_str(&format!("T{} = [{}]\n", i + 1, join(p)));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Minimality {
    pub minimal: bool,
    /// A point whose orbit is proper.
    pub witness: Option<Point>,
    pub orbit_size: usize,
}

/// Syntax-level parse; does not check bijectivity or commutation.
pub fn parse_raw(text: &str) -> Result<RawSystem, ParseError> {
    parse_raw_with_lines(text).map(|(raw, _)| raw)
}

fn parse_raw_with_lines(text: &str) -> Result<(RawSystem, Vec<usize>), ParseError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "finite-system")) => {}
        Some((l, _)) => return Err(ParseError::new(l, "expected header `finite-system`")),
        None => return Err(ParseError::new(1, "empty input")),
    }
    let mut n: Option<usize> = None;
    let mut d: Option<usize> = None;
    let mut gens: Vec<(usize, usize, Vec<Point>)> = Vec::new();
    let mut last = 1;
    for (l, line) in lines {
        last = l;
        let (k, v) = key_value(line).ok_or_else(|| ParseError::new(l, "expected `key = value`"))?;
        match k {
            "points" if n.is_none() => n = Some(parse_num(l, v)?),
            "d" if d.is_none() => d = Some(parse_num(l, v)?),
            _ if k.starts_with('T') => {
                let i: usize = parse_num(l, &k[1..])?;
                let img: Vec<Point> = serde_json::from_str(v)
                    .map_err(|e| ParseError::new(l, format!("bad image array: {e}")))?;
                gens.push((i, l, img));
            }
            _ => return Err(ParseError::new(l, format!("unexpected key {k:?}"))),
        }
    }
    let n = n.ok_or_else(|| ParseError::new(last, "missing `points`"))?;
    let d = d.ok_or_else(|| ParseError::new(last, "missing `d`"))?;
    let mut perms: Vec<Option<(usize, Vec<Point>)>> = vec![None; d];
    for (i, l, img) in gens {
        if i == 0 || i > d {
            return Err(ParseError::new(l, format!("generator T{i} outside T1..T{d}")));
        }
        if perms[i - 1].is_some() {
            return Err(ParseError::new(l, format!("T{i} given twice")));
        }
        if img.len() != n {
            return Err(ParseError::new(l, format!("T{i} has {} entries, expected {n}", img.len())));
        }
        perms[i - 1] = Some((l, img));
    }
    let mut out = Vec::with_capacity(d);
    let mut line_of = Vec::with_capacity(d);
    for (i, p) in perms.into_iter().enumerate() {
        let (l, img) = p.ok_or_else(|| ParseError::new(last, format!("missing T{}", i + 1)))?;
        line_of.push(l);
        out.push(img);
    }
    Ok((RawSystem { n, perms: out }, line_of))
}

/// A set of ordered pairs of points of an `n`-point system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairRelation {
    n: usize,
    pairs: BTreeSet<(Point, Point)>,
}

impl PairRelation {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (Point, Point)>) -> Result<Self, SystemError> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x as usize >= n || y as usize >= n) {
            return Err(SystemError::PointOutOfRange(x.max(y)));
        }
        Ok(PairRelation { n, pairs })
    }

    pub fn diagonal(n: usize) -> Self {
        PairRelation { n, pairs: (0..n as Point).map(|x| (x, x)).collect() }
    }

    pub fn full(n: usize) -> Self {
        let pts = 0..n as Point;
        PairRelation { n, pairs: pts.clone().flat_map(|x| pts.clone().map(move |y| (x, y))).collect() }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, x: Point, y: Point) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn is_diagonal(&self) -> bool {
        *self == Self::diagonal(self.n)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        PairRelation { n: self.n, pairs: self.pairs.intersection(&other.pairs).copied().collect() }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("pair-relation n={}\n", self.n);
        for (x, y) in &self.pairs {
            s.push_str(&format!("{x},{y}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| ParseError::new(1, "empty input"))?;
        let attrs = crate::text::header_attrs(hl, header, "pair-relation")?;
        let n = match attrs.as_slice() {
            [("n", v)] => parse_num::<usize>(hl, v)?,
            _ => return Err(ParseError::new(hl, "expected `pair-relation n=<N>`")),
        };
        let mut pairs = BTreeSet::new();
        for (l, line) in lines {
            let v: Vec<Point> = crate::text::parse_list(l, line)?;
            match v.as_slice() {
                &[x, y] if (x as usize) < n && (y as usize) < n => {
                    pairs.insert((x, y));
                }
                &[_, _] => return Err(ParseError::new(l, "point out of range")),
                _ => return Err(ParseError::new(l, "expected `x,y`")),
            }
        }
        Ok(PairRelation { n, pairs })
    }
}

/// Equivariant map between two systems, stored as an image array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorMap {
    pub map: Vec<Point>,
    pub target_points: usize,
}

impl FactorMap {
    pub fn identity(n: usize) -> Self {
        FactorMap { map: (0..n as Point).collect(), target_points: n }
    }

    pub fn apply(&self, x: Point) -> Point {
        self.map[x as usize]
    }

    /// `self` then `next`.
    pub fn then(&self, next: &FactorMap) -> FactorMap {
        FactorMap { map: self.map.iter().map(|&x| next.apply(x)).collect(), target_points: next.target_points }
    }

    /// Image of a relation under `π × π`.
    pub fn push_relation(&self, rel: &PairRelation) -> PairRelation {
        PairRelation {
            n: self.target_points,
            pairs: rel.iter().map(|(x, y)| (self.apply(x), self.apply(y))).collect(),
        }
    }

    /// `{(x, y) : π x = π y}`.
    pub fn kernel(&self) -> PairRelation {
        let n = self.map.len() as Point;
        let pairs = (0..n).flat_map(|x| (0..n).filter(move |&y| self.apply(x) == self.apply(y)).map(move |y| (x, y)));
        PairRelation { n: self.map.len(), pairs: pairs.collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorMapReport {
    pub well_formed: bool,
    pub surjective: bool,
    pub missing_target: Option<Point>,
    /// `(x, i)` with `π(T_i x) ≠ T_i π(x)`.
    pub equivariance_failure: Option<(Point, usize)>,
}

impl FactorMapReport {
    pub fn passed(&self) -> bool {
        self.well_formed && self.surjective && self.equivariance_failure.is_none()
    }
}

pub fn check_factor_map(source: &FiniteZdSystem, target: &FiniteZdSystem, pi: &FactorMap) -> FactorMapReport {
    let well_formed = pi.map.len() == source.n_points()
        && pi.target_points == target.n_points()
        && source.d() == target.d()
        && pi.map.iter().all(|&y| (y as usize) < target.n_points());
    if !well_formed {
        return FactorMapReport { well_formed, surjective: false, missing_target: None, equivariance_failure: None };
    }
    let mut hit = vec![false; target.n_points()];
    for &y in &pi.map {
        hit[y as usize] = true;
    }
    let missing_target = hit.iter().position(|&h| !h).map(|y| y as Point);
    let equivariance_failure = source.points().find_map(|x| {
        (1..=source.d())
            .find(|&i| pi.apply(source.step(i, x)) != target.step(i, pi.apply(x)))
            .map(|i| (x, i))
    });
    FactorMapReport { well_formed, surjective: missing_target.is_none(), missing_target, equivariance_failure }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum QuotientError {
    #[error("relation on {found} points used with a system on {expected} points")]
    SizeMismatch { expected: usize, found: usize },
    #[error("{x} ~ {y} but T{generator} images are not related")]
    NotInvariant { x: Point, y: Point, generator: usize },
}

/// Classes of the equivalence relation generated by `rel`, numbered by
/// smallest member.
pub fn classes(rel: &PairRelation) -> Vec<u32> {
    let mut uf = UnionFind::<u32>::new(rel.n);
    for (x, y) in rel.iter() {
        uf.union(x, y);
    }
    let mut label = vec![u32::MAX; rel.n];
    let mut next_root = vec![u32::MAX; rel.n];
    let mut count = 0;
    for x in 0..rel.n {
        let r = uf.find_mut(x as u32) as usize;
        if next_root[r] == u32::MAX {
            next_root[r] = count;
            count += 1;
        }
        label[x] = next_root[r];
    }
    label
}

/// Quotient by the equivalence relation generated by `rel`.
pub fn quotient(sys: &FiniteZdSystem, rel: &PairRelation) -> Result<(FiniteZdSystem, FactorMap), QuotientError> {
    if rel.n != sys.n_points() {
        return Err(QuotientError::SizeMismatch { expected: sys.n_points(), found: rel.n });
    }
    let label = classes(rel);
    let k = label.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut rep = vec![Point::MAX; k];
    for (x, &c) in label.iter().enumerate() {
        if rep[c as usize] == Point::MAX {
            rep[c as usize] = x as Point;
        }
    }
    for i in 1..=sys.d() {
        for x in sys.points() {
            let r = rep[label[x as usize] as usize];
            if label[sys.step(i, x) as usize] != label[sys.step(i, r) as usize] {
                return Err(QuotientError::NotInvariant { x, y: r, generator: i });
            }
        }
    }
    let perms = (1..=sys.d())
        .map(|i| rep.iter().map(|&r| label[sys.step(i, r) as usize]).collect())
        .collect();
    let q = FiniteZdSystem::new(k, perms).expect("induced action of an invariant relation");
    Ok((q, FactorMap { map: label, target_points: k }))
}
