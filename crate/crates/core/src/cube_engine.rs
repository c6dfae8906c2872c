//! Cube sets `Q_{T_{j_1},…,T_{j_k}}(X)` and `K^{x0}`, the face group, and the
//! combinatorial surgeries on cube points.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::finite_system::{FiniteZdSystem, Point};
use crate::hypercube::{self, FaceSelector, HypercubeError, Vertex, MAX_DIM};
use crate::text::{content_lines, header_attrs, join, parse_list, parse_num, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CubeError {
    #[error(transparent)]
    Hypercube(#[from] HypercubeError),
    #[error("direction list {0:?} is empty, repeated, or out of range")]
    BadDirections(Vec<usize>),
    #[error("enumeration would visit {needed} tuples, above the cap of {cap}")]
    TooLarge { needed: u128, cap: u64 },
    #[error("point {0} out of range")]
    PointOutOfRange(Point),
    #[error("tuple of length {0} is not 2^k for k <= 10")]
    BadLength(usize),
    #[error("cube points have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("faces do not coincide along direction {0}")]
    FaceMismatch(usize),
    #[error("start point is not in the cube set")]
    NotInSet,
}

/// A `2^k`-tuple of points indexed by vertices in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CubePoint(Vec<Point>);

impl CubePoint {
    pub fn new(coords: Vec<Point>) -> Result<Self, CubeError> {
        let len = coords.len();
        if !len.is_power_of_two() || len > 1 << MAX_DIM {
            return Err(CubeError::BadLength(len));
        }
        Ok(CubePoint(coords))
    }

    /// `x^{[k]}`.
    pub fn constant(x: Point, dim: usize) -> Self {
        CubePoint(vec![x; 1 << dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn coords(&self) -> &[Point] {
        &self.0
    }

    pub fn get(&self, v: Vertex) -> Point {
        self.0[v.index()]
    }

    /// Coordinates other than `0⃗`.
    pub fn tail(&self) -> &[Point] {
        &self.0[1..]
    }

    fn same_dim(&self, other: &Self) -> Result<usize, CubeError> {
        if self.dim() == other.dim() {
            Ok(self.dim())
        } else {
            Err(CubeError::DimensionMismatch(self.dim(), other.dim()))
        }
    }
}

impl fmt::Display for CubePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", join(&self.0))
    }
}

/// Cap on `|X| · ∏ L_{j}` for enumerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub max_tuples: u64,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_tuples: 20_000_000 }
    }
}

/// A sorted, duplicate-free set of cube points of dimension `dirs.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubeSet {
    dirs: Vec<usize>,
    points: Vec<CubePoint>,
}

impl CubeSet {
    /// Raw set, e.g. a hand-made fixture.
    pub fn from_points(dirs: Vec<usize>, points: impl IntoIterator<Item = CubePoint>) -> Result<Self, CubeError> {
        let k = dirs.len();
        if k > MAX_DIM {
            return Err(CubeError::BadDirections(dirs));
        }
        let mut points: Vec<CubePoint> = points.into_iter().collect();
        if let Some(p) = points.iter().find(|p| p.dim() != k) {
            return Err(CubeError::DimensionMismatch(k, p.dim()));
        }
        points.par_sort_unstable();
        points.dedup();
        Ok(CubeSet { dirs, points })
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[CubePoint] {
        &self.points
    }

    pub fn contains(&self, p: &CubePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn contains_coords(&self, coords: &[Point]) -> bool {
        self.points.binary_search_by(|p| p.0.as_slice().cmp(coords)).is_ok()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("cube-set d={} dirs={}\n", self.dim(), join(&self.dirs));
        for p in &self.points {
            s.push_str(&join(&p.0));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| ParseError::new(1, "empty input"))?;
        let attrs = header_attrs(hl, header, "cube-set")?;
        let (k, dirs) = match attrs.as_slice() {
            [("d", k), ("dirs", dirs)] => (parse_num::<usize>(hl, k)?, parse_list::<usize>(hl, dirs)?),
            _ => return Err(ParseError::new(hl, "expected `cube-set d=<k> dirs=<j1,...>`")),
        };
        if dirs.len() != k || k > MAX_DIM {
            return Err(ParseError::new(hl, "dirs length differs from d"));
        }
        let mut points = Vec::new();
        for (l, line) in lines {
            let coords: Vec<Point> = parse_list(l, line)?;
            if coords.len() != 1 << k {
                return Err(ParseError::new(l, format!("expected {} coordinates", 1 << k)));
            }
            points.push(CubePoint(coords));
        }
        CubeSet::from_points(dirs, points).map_err(|e| ParseError::new(hl, e))
    }
}

fn check_dirs(sys: &FiniteZdSystem, dirs: &[usize]) -> Result<(), CubeError> {
    let mut seen = HashSet::new();
    let ok = !dirs.is_empty()
        && dirs.len() <= MAX_DIM
        && dirs.iter().all(|&j| j >= 1 && j <= sys.d() && seen.insert(j));
    if ok {
        Ok(())
    } else {
        Err(CubeError::BadDirections(dirs.to_vec()))
    }
}

fn check_size(count: u128, limits: EnumerationLimits) -> Result<(), CubeError> {
    if count > limits.max_tuples as u128 {
        Err(CubeError::TooLarge { needed: count, cap: limits.max_tuples })
    } else {
        Ok(())
    }
}

/// All cubes rooted at `x`, one per exponent vector in `∏ [0, L_{j_l})`.
fn cubes_at(sys: &FiniteZdSystem, dirs: &[usize], x: Point) -> Vec<Vec<Point>> {
    let k = dirs.len();
    let orders: Vec<u64> = dirs.iter().map(|&j| sys.orders()[j - 1]).collect();
    let mut n = vec![0u64; k];
    let mut out = Vec::new();
    loop {
        let mut c = vec![x; 1 << k];
        for l in 0..k {
            let half = 1 << l;
            for e in half..2 * half {
                c[e] = sys.power(dirs[l], n[l] as i64, c[e - half]);
            }
        }
        out.push(c);
        let mut l = 0;
        while l < k {
            n[l] += 1;
            if n[l] < orders[l] {
                break;
            }
            n[l] = 0;
            l += 1;
        }
        if l == k {
            return out;
        }
    }
}

fn tuple_count(sys: &FiniteZdSystem, dirs: &[usize], roots: usize) -> u128 {
    dirs.iter().fold(roots as u128, |acc, &j| acc.saturating_mul(sys.orders()[j - 1] as u128))
}

pub fn enumerate_q(sys: &FiniteZdSystem, dirs: &[usize]) -> Result<CubeSet, CubeError> {
    enumerate_q_with(sys, dirs, EnumerationLimits::default())
}

/// `Q_{T_{j_1},…,T_{j_k}}(X)`; parallel over base points.
pub fn enumerate_q_with(sys: &FiniteZdSystem, dirs: &[usize], limits: EnumerationLimits) -> Result<CubeSet, CubeError> {
    check_dirs(sys, dirs)?;
    check_size(tuple_count(sys, dirs, sys.n_points()), limits)?;
    let mut points: Vec<CubePoint> = (0..sys.n_points() as Point)
        .into_par_iter()
        .flat_map_iter(|x| cubes_at(sys, dirs, x).into_iter().map(CubePoint))
        .collect();
    points.par_sort_unstable();
    points.dedup();
    Ok(CubeSet { dirs: dirs.to_vec(), points })
}

/// `K^{x0}`: cubes rooted at `x0`, stored without the `0⃗` coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedCubeSet {
    root: Point,
    dirs: Vec<usize>,
    points: Vec<Vec<Point>>,
}

impl RootedCubeSet {
    pub fn from_points(root: Point, dirs: Vec<usize>, points: impl IntoIterator<Item = Vec<Point>>) -> Result<Self, CubeError> {
        let width = (1usize << dirs.len()) - 1;
        let mut points: Vec<Vec<Point>> = points.into_iter().collect();
        if let Some(p) = points.iter().find(|p| p.len() != width) {
            return Err(CubeError::BadLength(p.len() + 1));
        }
        points.sort_unstable();
        points.dedup();
        Ok(RootedCubeSet { root, dirs, points })
    }

    pub fn root(&self) -> Point {
        self.root
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<Point>] {
        &self.points
    }

    pub fn contains(&self, tail: &[Point]) -> bool {
        self.points.binary_search_by(|p| p.as_slice().cmp(tail)).is_ok()
    }

    pub fn position(&self, tail: &[Point]) -> Option<usize> {
        self.points.binary_search_by(|p| p.as_slice().cmp(tail)).ok()
    }

    /// Full cube points `(root, tail)`.
    pub fn to_cube_set(&self) -> CubeSet {
        let points = self.points.iter().map(|t| {
            let mut c = Vec::with_capacity(t.len() + 1);
            c.push(self.root);
            c.extend_from_slice(t);
            CubePoint(c)
        });
        CubeSet { dirs: self.dirs.clone(), points: points.collect() }
    }
}

pub fn enumerate_k(sys: &FiniteZdSystem, dirs: &[usize], x0: Point) -> Result<RootedCubeSet, CubeError> {
    enumerate_k_with(sys, dirs, x0, EnumerationLimits::default())
}

pub fn enumerate_k_with(
    sys: &FiniteZdSystem,
    dirs: &[usize],
    x0: Point,
    limits: EnumerationLimits,
) -> Result<RootedCubeSet, CubeError> {
    if x0 as usize >= sys.n_points() {
        return Err(CubeError::PointOutOfRange(x0));
    }
    // An empty direction list gives the single empty tail.
    if !dirs.is_empty() {
        check_dirs(sys, dirs)?;
    }
    check_size(tuple_count(sys, dirs, 1), limits)?;
    let tails = cubes_at(sys, dirs, x0).into_iter().map(|mut c| {
        c.remove(0);
        c
    });
    RootedCubeSet::from_points(x0, dirs.to_vec(), tails)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UcppWitness {
    pub first: CubePoint,
    pub second: CubePoint,
    /// The single vertex where the two points differ.
    pub vertex: String,
}

/// `None` when no two distinct points share `2^k - 1` coordinates.
pub fn ucpp_check(cubes: &CubeSet) -> Option<UcppWitness> {
    let width = 1usize << cubes.dim();
    let mut seen: HashMap<(usize, Vec<Point>), usize> = HashMap::with_capacity(cubes.len() * width);
    for (idx, p) in cubes.points.iter().enumerate() {
        for v in 0..width {
            let mut key = p.0.clone();
            key[v] = Point::MAX;
            if let Some(&other) = seen.get(&(v, key.clone())) {
                return Some(UcppWitness {
                    first: cubes.points[other].clone(),
                    second: p.clone(),
                    vertex: Vertex::raw(cubes.dim(), v).to_string(),
                });
            }
            seen.insert((v, key), idx);
        }
    }
    None
}

/// Coordinates of the face `ε_j = b`, in canonical order.
pub fn face(a: &CubePoint, j: usize, b: bool) -> Result<Vec<Point>, CubeError> {
    let sel = FaceSelector::new(a.dim(), &[(j, b)])?;
    Ok(hypercube::face_vertices(&sel).into_iter().map(|v| a.get(v)).collect())
}

/// Gluing along direction `j`: lower half from `a`, upper half from `b`.
pub fn glue(a: &CubePoint, b: &CubePoint, j: usize) -> Result<CubePoint, CubeError> {
    a.same_dim(b)?;
    if face(a, j, true)? != face(b, j, false)? {
        return Err(CubeError::FaceMismatch(j));
    }
    let m = 1usize << (j - 1);
    Ok(CubePoint((0..a.0.len()).map(|e| if e & m == 0 { a.0[e] } else { b.0[e] }).collect()))
}

/// Which `j`-face of `a` is copied and which side of `b` receives it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InsertSide {
    /// Upper face of `a` replaces the lower face of `b`.
    UpperIntoLower,
    /// Lower face of `a` replaces the upper face of `b`.
    LowerIntoUpper,
}

pub fn insert(a: &CubePoint, b: &CubePoint, j: usize, side: InsertSide) -> Result<CubePoint, CubeError> {
    let d = a.same_dim(b)?;
    hypercube::check_direction(j, d)?;
    let m = 1usize << (j - 1);
    let keep_upper = side == InsertSide::UpperIntoLower;
    let coords = (0..a.0.len())
        .map(|e| if (e & m != 0) == keep_upper { b.0[e] } else { a.0[e ^ m] })
        .collect();
    Ok(CubePoint(coords))
}

/// `y_ε = a_η` where `η_ℓ = ε_{positions[ℓ]}`; lifts a `k`-cube to dimension `d`.
pub fn duplicate(a: &CubePoint, positions: &[usize], d: usize) -> Result<CubePoint, CubeError> {
    if positions.len() != a.dim() {
        return Err(CubeError::DimensionMismatch(a.dim(), positions.len()));
    }
    if d > MAX_DIM {
        return Err(HypercubeError::BadDimension(d).into());
    }
    let mut seen = HashSet::new();
    for &p in positions {
        hypercube::check_direction(p, d)?;
        if !seen.insert(p) {
            return Err(CubeError::BadDirections(positions.to_vec()));
        }
    }
    let coords = (0..1usize << d)
        .map(|e| {
            let eta = positions
                .iter()
                .enumerate()
                .fold(0usize, |acc, (l, &p)| acc | (e >> (p - 1) & 1) << l);
            a.0[eta]
        })
        .collect();
    Ok(CubePoint(coords))
}

/// Restriction to a face, reindexed by the free coordinates in increasing order.
pub fn project(a: &CubePoint, sel: &FaceSelector) -> Result<CubePoint, CubeError> {
    if sel.dim() != a.dim() {
        return Err(CubeError::DimensionMismatch(a.dim(), sel.dim()));
    }
    Ok(CubePoint(hypercube::face_vertices(sel).into_iter().map(|v| a.get(v)).collect()))
}

/// `σ_*(a)_ε = a_{σ(ε)}`.
pub fn permute_digits(sigma: &[usize], a: &CubePoint) -> Result<CubePoint, CubeError> {
    let d = a.dim();
    let coords = Vertex::all(d)
        .map(|v| hypercube::digit_permute(sigma, v).map(|w| a.get(w)))
        .collect::<Result<_, _>>()?;
    Ok(CubePoint(coords))
}

/// `Φ_{j*}(a)_ε = a_{Φ_j(ε)}`.
pub fn reflect_point(j: usize, a: &CubePoint) -> Result<CubePoint, CubeError> {
    hypercube::check_direction(j, a.dim())?;
    let m = 1usize << (j - 1);
    Ok(CubePoint((0..a.0.len()).map(|e| a.0[e ^ m]).collect()))
}

/// `∏_l (T_{j_l}^{[k]})^{face_l} · ∏_i (T_i^{[k]} diagonal)^{diagonal_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaceGroupElement {
    /// Exponent per position of `dirs`.
    pub face: Vec<i64>,
    /// Exponent per generator of the system.
    pub diagonal: Vec<i64>,
}

impl FaceGroupElement {
    pub fn apply(&self, sys: &FiniteZdSystem, dirs: &[usize], a: &CubePoint) -> CubePoint {
        let coords = a
            .0
            .iter()
            .enumerate()
            .map(|(e, &x)| {
                let mut word = self.diagonal.clone();
                for (l, &j) in dirs.iter().enumerate() {
                    if e >> l & 1 == 1 {
                        word[j - 1] += self.face[l];
                    }
                }
                sys.apply_word(&word, x).expect("word sized by system")
            })
            .collect();
        CubePoint(coords)
    }
}

/// Face transformations, diagonal generators, and their inverses.
pub fn face_group_generators(sys: &FiniteZdSystem, dirs: &[usize]) -> Vec<FaceGroupElement> {
    let k = dirs.len();
    let d = sys.d();
    let mut gens = Vec::new();
    for s in [1i64, -1] {
        for l in 0..k {
            let mut face = vec![0; k];
            face[l] = s;
            gens.push(FaceGroupElement { face, diagonal: vec![0; d] });
        }
        for i in 0..d {
            let mut diagonal = vec![0; d];
            diagonal[i] = s;
            gens.push(FaceGroupElement { face: vec![0; k], diagonal });
        }
    }
    gens
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceOrbit {
    pub members: Vec<CubePoint>,
    /// Images that fell outside the cube set; zero for sets closed under the face group.
    pub escaped: usize,
}

/// Breadth-first closure of `start` under the face group, inside `cubes`.
pub fn face_group_orbit(sys: &FiniteZdSystem, cubes: &CubeSet, start: &CubePoint) -> Result<FaceOrbit, CubeError> {
    if !cubes.contains(start) {
        return Err(CubeError::NotInSet);
    }
    let gens = face_group_generators(sys, cubes.dirs());
    let mut seen: HashSet<CubePoint> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    let mut escaped = 0;
    while let Some(p) = queue.pop_front() {
        for g in &gens {
            let q = g.apply(sys, cubes.dirs(), &p);
            if seen.contains(&q) {
                continue;
            }
            if !cubes.contains(&q) {
                escaped += 1;
                continue;
            }
            seen.insert(q.clone());
            queue.push_back(q);
        }
    }
    let mut members: Vec<CubePoint> = seen.into_iter().collect();
    members.sort_unstable();
    Ok(FaceOrbit { members, escaped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot6() -> FiniteZdSystem {
        FiniteZdSystem::rotation(6, &[1, 2]).unwrap()
    }

    fn cp(v: &[Point]) -> CubePoint {
        CubePoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rot6_sizes() {
        let s = rot6();
        assert_eq!(enumerate_q(&s, &[1, 2]).unwrap().len(), 108);
        assert_eq!(enumerate_k(&s, &[1, 2], 0).unwrap().len(), 18);
        let k1 = enumerate_k(&s, &[1], 0).unwrap();
        assert_eq!(k1.points(), (0..6).map(|n| vec![n]).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn identity_and_one_point_systems() {
        let id = FiniteZdSystem::from_fn(4, 2, |_, x| x).unwrap();
        let q = enumerate_q(&id, &[1, 2]).unwrap();
        assert_eq!(q.points(), (0..4).map(|x| CubePoint::constant(x, 2)).collect::<Vec<_>>().as_slice());
        let k = enumerate_k(&id, &[1, 2], 2).unwrap();
        assert_eq!(k.points(), &[vec![2, 2, 2]]);
        let one = FiniteZdSystem::from_fn(1, 3, |_, x| x).unwrap();
        assert_eq!(enumerate_q(&one, &[1, 2, 3]).unwrap().points(), &[CubePoint::constant(0, 3)]);
    }

    #[test]
    fn bad_directions_and_size_cap() {
        let s = rot6();
        assert!(enumerate_q(&s, &[]).is_err());
        assert!(enumerate_q(&s, &[1, 1]).is_err());
        assert!(enumerate_q(&s, &[3]).is_err());
        let small = EnumerationLimits { max_tuples: 100 };
        assert!(matches!(enumerate_q_with(&s, &[1, 2], small), Err(CubeError::TooLarge { needed: 108, .. })));
    }

    #[test]
    fn ucpp_examples() {
        let s = rot6();
        assert_eq!(ucpp_check(&enumerate_q(&s, &[1, 2]).unwrap()), None);
        let raw = CubeSet::from_points(vec![1, 2], [cp(&[0, 0, 0, 0]), cp(&[0, 0, 0, 1])]).unwrap();
        let w = ucpp_check(&raw).unwrap();
        assert_eq!(w.vertex, "11");
        assert_eq!(w.first, cp(&[0, 0, 0, 0]));
        assert_eq!(w.second, cp(&[0, 0, 0, 1]));
    }

    #[test]
    fn glue_examples() {
        let x = CubePoint::constant(3, 2);
        assert_eq!(glue(&x, &x, 1).unwrap(), x);
        assert_eq!(glue(&cp(&[0, 1, 2, 3]), &cp(&[2, 3, 4, 5]), 2).unwrap(), cp(&[0, 1, 4, 5]));
        assert_eq!(glue(&cp(&[0, 1, 2, 3]), &cp(&[2, 3, 4, 5]), 1), Err(CubeError::FaceMismatch(1)));
    }

    #[test]
    fn insert_examples() {
        let a = cp(&[0, 1, 2, 3]);
        assert_eq!(insert(&a, &a, 1, InsertSide::LowerIntoUpper).unwrap(), cp(&[0, 0, 2, 2]));
        assert_eq!(insert(&a, &a, 1, InsertSide::UpperIntoLower).unwrap(), cp(&[1, 1, 3, 3]));
        assert_eq!(insert(&a, &a, 2, InsertSide::LowerIntoUpper).unwrap(), cp(&[0, 1, 0, 1]));
        assert!(insert(&a, &CubePoint::constant(0, 3), 1, InsertSide::UpperIntoLower).is_err());
    }

    #[test]
    fn duplicate_examples() {
        let a = cp(&[7, 9]);
        assert_eq!(duplicate(&a, &[1], 2).unwrap(), cp(&[7, 9, 7, 9]));
        assert_eq!(duplicate(&a, &[2], 2).unwrap(), cp(&[7, 7, 9, 9]));
        let b = cp(&[0, 1, 2, 3]);
        assert_eq!(duplicate(&b, &[1, 2], 2).unwrap(), b);
        assert_eq!(duplicate(&b, &[2, 1], 2).unwrap(), cp(&[0, 2, 1, 3]));
        assert!(duplicate(&b, &[1], 2).is_err());
    }

    #[test]
    fn project_examples() {
        let a = cp(&[0, 1, 2, 3]);
        let sel = FaceSelector::new(2, &[(2, false)]).unwrap();
        assert_eq!(project(&a, &sel).unwrap(), cp(&[0, 1]));
        let sel = FaceSelector::new(2, &[(1, true), (2, true)]).unwrap();
        assert_eq!(project(&a, &sel).unwrap(), cp(&[3]));
    }

    #[test]
    fn point_symmetries() {
        let a = cp(&[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(reflect_point(1, &a).unwrap(), cp(&[1, 0, 3, 2, 5, 4, 7, 6]));
        assert_eq!(permute_digits(&[2, 1, 3], &a).unwrap(), cp(&[0, 2, 1, 3, 4, 6, 5, 7]));
    }

    #[test]
    fn face_orbit_of_diagonal_is_all_of_q() {
        let s = rot6();
        let q = enumerate_q(&s, &[1, 2]).unwrap();
        let orbit = face_group_orbit(&s, &q, &CubePoint::constant(0, 2)).unwrap();
        assert_eq!(orbit.members.len(), 108);
        assert_eq!(orbit.escaped, 0);
        assert_eq!(face_group_orbit(&s, &q, &cp(&[0, 1, 1, 0])), Err(CubeError::NotInSet));
    }

    #[test]
    fn cube_set_text_round_trip() {
        let q = enumerate_q(&rot6(), &[2, 1]).unwrap();
        assert_eq!(CubeSet::parse(&q.to_text()).unwrap(), q);
        assert!(CubeSet::parse("cube-set d=2 dirs=1,2\n0,1,2\n").is_err());
    }
}
