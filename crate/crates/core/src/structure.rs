//! Subgroup relations `Q_H`, their quotients, and the joining decomposition of
//! `K^{x0}` into the factors `Y_j`.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cube_engine::{self, CubeError, RootedCubeSet, UcppWitness};
use crate::finite_system::{quotient, FactorMap, FiniteZdSystem, PairRelation, Point, QuotientError, SystemError};
use crate::hypercube::{self, Vertex};
use crate::proximal::check_equivalence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error("subgroup spec: {0}")]
    BadSubgroup(String),
    #[error("hypotheses unmet: {0}")]
    HypothesesUnmet(String),
}

/// `H ≤ ⟨T_1, …, T_d⟩`, generated by some `T_i` and some words `T^n`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SubgroupSpec {
    pub generators: Vec<usize>,
    pub words: Vec<Vec<i64>>,
}

impl SubgroupSpec {
    pub fn generated_by(generators: &[usize]) -> Self {
        SubgroupSpec { generators: generators.to_vec(), words: Vec::new() }
    }

    /// `{id}`.
    pub fn trivial(d: usize) -> Self {
        SubgroupSpec { generators: Vec::new(), words: vec![vec![0; d]] }
    }

    /// `H_1 H_2`, generated by both lists.
    pub fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.generators.extend(&other.generators);
        out.words.extend(other.words.iter().cloned());
        out
    }

    /// Generators as exponent vectors.
    pub fn as_words(&self, d: usize) -> Result<Vec<Vec<i64>>, StructureError> {
        if self.generators.is_empty() && self.words.is_empty() {
            return Err(StructureError::BadSubgroup("no generators".into()));
        }
        let mut out = Vec::new();
        for &i in &self.generators {
            if i == 0 || i > d {
                return Err(StructureError::BadSubgroup(format!("generator T{i} outside T1..T{d}")));
            }
            let mut w = vec![0; d];
            w[i - 1] = 1;
            out.push(w);
        }
        for w in &self.words {
            if w.len() != d {
                return Err(StructureError::BadSubgroup(format!("word {w:?} has length {}, expected {d}", w.len())));
            }
            out.push(w.clone());
        }
        Ok(out)
    }
}

/// `Q_H(X) = {(x, hx) : h ∈ H}`.
pub fn compute_qh(sys: &FiniteZdSystem, h: &SubgroupSpec) -> Result<PairRelation, StructureError> {
    let words = h.as_words(sys.d())?;
    let mut pairs = Vec::new();
    for x in sys.points() {
        let mut seen = HashSet::from([x]);
        let mut queue = VecDeque::from([x]);
        while let Some(y) = queue.pop_front() {
            pairs.push((x, y));
            for w in &words {
                let z = sys.apply_word(w, y)?;
                if seen.insert(z) {
                    queue.push_back(z);
                }
            }
        }
    }
    Ok(PairRelation::new(sys.n_points(), pairs)?)
}

#[derive(Debug, Clone)]
pub struct Z0HFactor {
    pub system: FiniteZdSystem,
    pub map: FactorMap,
    pub h_acts_trivially: bool,
}

/// `X / Q_H(X)`; `Q_H` is checked to be an invariant equivalence relation.
pub fn maximal_z0h_factor(sys: &FiniteZdSystem, h: &SubgroupSpec) -> Result<Z0HFactor, StructureError> {
    let qh = compute_qh(sys, h)?;
    let verdict = check_equivalence(sys, &qh);
    if !verdict.passed() {
        return Err(StructureError::HypothesesUnmet(format!("Q_H is not an invariant equivalence relation: {verdict:?}")));
    }
    let (system, map) = quotient(sys, &qh)?;
    let words = h.as_words(sys.d())?;
    let h_acts_trivially = words
        .iter()
        .all(|w| system.points().all(|y| system.apply_word(w, y).map(|z| z == y).unwrap_or(false)));
    Ok(Z0HFactor { system, map, h_acts_trivially })
}

/// `Q_H ⊆ ker π` for a factor on which `H` acts trivially; `None` when `H`
/// does not act trivially on the target.
pub fn universality_check(
    sys: &FiniteZdSystem,
    h: &SubgroupSpec,
    target: &FiniteZdSystem,
    pi: &FactorMap,
) -> Result<Option<bool>, StructureError> {
    let words = h.as_words(sys.d())?;
    for w in &words {
        for y in target.points() {
            if target.apply_word(w, y)? != y {
                return Ok(None);
            }
        }
    }
    let qh = compute_qh(sys, h)?;
    let contained = qh.iter().all(|(x, y)| pi.apply(x) == pi.apply(y));
    Ok(Some(contained))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IteratedQuotient {
    pub direct_classes: usize,
    pub iterated_classes: usize,
    pub partitions_equal: bool,
    /// Two points grouped by one construction and separated by the other.
    pub witness: Option<(Point, Point)>,
}

fn canonical_labels(map: &[Point]) -> Vec<Point> {
    let mut relabel: HashMap<Point, Point> = HashMap::new();
    map.iter()
        .map(|&c| {
            let next = relabel.len() as Point;
            *relabel.entry(c).or_insert(next)
        })
        .collect()
}

/// `X / Q_{H1 H2}` against `(X / Q_{H1}) / Q_{H2}`, compared as partitions of `X`.
pub fn iterated_quotient_check(
    sys: &FiniteZdSystem,
    h1: &SubgroupSpec,
    h2: &SubgroupSpec,
) -> Result<IteratedQuotient, StructureError> {
    let direct = maximal_z0h_factor(sys, &h1.join(h2))?;
    let first = maximal_z0h_factor(sys, h1)?;
    let second = maximal_z0h_factor(&first.system, h2)?;
    let composite = first.map.then(&second.map);
    let a = canonical_labels(&direct.map.map);
    let b = canonical_labels(&composite.map);
    let witness = if a == b {
        None
    } else {
        let n = a.len();
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).find(|&(x, y)| (a[x] == a[y]) != (b[x] == b[y]))
            .map(|(x, y)| (x as Point, y as Point))
    };
    Ok(IteratedQuotient {
        direct_classes: direct.system.n_points(),
        iterated_classes: second.system.n_points(),
        partitions_equal: a == b,
        witness,
    })
}

/// `K^{x0}` as a Z^d-system under the face transformations `T_j^{[d]}`.
pub fn face_action_system(sys: &FiniteZdSystem, k: &RootedCubeSet) -> Result<FiniteZdSystem, StructureError> {
    let d = k.dim();
    let mut perms = Vec::with_capacity(d);
    for (pos, &j) in k.dirs().iter().enumerate() {
        let mut perm = Vec::with_capacity(k.len());
        for t in k.points() {
            let image: Vec<Point> = t
                .iter()
                .enumerate()
                .map(|(i, &x)| if (i + 1) >> pos & 1 == 1 { sys.step(j, x) } else { x })
                .collect();
            let idx = k.position(&image).ok_or_else(|| {
                StructureError::HypothesesUnmet("K is not closed under the face transformations".into())
            })?;
            perm.push(idx as Point);
        }
        perms.push(perm);
    }
    Ok(FiniteZdSystem::new(k.len(), perms)?)
}

/// A factor of `Y` obtained by keeping some coordinates of each point.
#[derive(Debug, Clone)]
pub struct Piece {
    /// Kept vertices, in canonical order.
    pub coords: Vec<Vertex>,
    /// Distinct projected tuples; point `i` of `system` is `points[i]`.
    pub points: Vec<Vec<Point>>,
    pub system: FiniteZdSystem,
    /// `Y → piece`.
    pub map: FactorMap,
}

fn project_piece(y: &FiniteZdSystem, k: &RootedCubeSet, coords: Vec<Vertex>) -> Result<Piece, StructureError> {
    let labels: Vec<Vec<Point>> = k.points().iter().map(|t| coords.iter().map(|v| t[v.index() - 1]).collect()).collect();
    let points: Vec<Vec<Point>> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let map: Vec<Point> = labels.iter().map(|l| points.binary_search(l).unwrap() as Point).collect();
    let mut perms = vec![vec![Point::MAX; points.len()]; y.d()];
    for i in 1..=y.d() {
        for x in y.points() {
            let img = map[y.step(i, x) as usize];
            let slot = &mut perms[i - 1][map[x as usize] as usize];
            if *slot != Point::MAX && *slot != img {
                return Err(StructureError::HypothesesUnmet("projection is not equivariant".into()));
            }
            *slot = img;
        }
    }
    let target_points = points.len();
    Ok(Piece { coords, points, system: FiniteZdSystem::new(target_points, perms)?, map: FactorMap { map, target_points } })
}

#[derive(Debug, Clone)]
pub struct JoiningDecomposition {
    pub root: Point,
    pub k: RootedCubeSet,
    /// `K^{x0}` with the face action.
    pub y: FiniteZdSystem,
    /// `Y_j`, coordinates with `ε_j = 0`.
    pub factors: Vec<Piece>,
    /// `Y_{i,j}` for `i < j`, coordinates with `ε_i = ε_j = 0`.
    pub pair_factors: Vec<((usize, usize), Piece)>,
    /// `K^{x0}` of the system with `T_j` removed, for each `j`.
    pub lower_faces: Vec<RootedCubeSet>,
    pub injective: bool,
    pub continuity_point: bool,
    pub trivial_directions: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionSummary {
    pub root: Point,
    pub y_points: usize,
    pub factor_points: Vec<usize>,
    pub pair_factor_points: Vec<(usize, usize, usize)>,
    pub injective: bool,
    pub continuity_point: bool,
    pub trivial_directions: bool,
}

impl JoiningDecomposition {
    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            root: self.root,
            y_points: self.y.n_points(),
            factor_points: self.factors.iter().map(|p| p.system.n_points()).collect(),
            pair_factor_points: self.pair_factors.iter().map(|((i, j), p)| (*i, *j, p.system.n_points())).collect(),
            injective: self.injective,
            continuity_point: self.continuity_point,
            trivial_directions: self.trivial_directions,
        }
    }
}

fn nonzero_vertices(d: usize, keep: impl Fn(Vertex) -> bool) -> Vec<Vertex> {
    Vertex::all(d).skip(1).filter(|&v| keep(v)).collect()
}

fn require_minimal_ucpp(sys: &FiniteZdSystem) -> Result<cube_engine::CubeSet, StructureError> {
    if sys.d() < 2 {
        return Err(StructureError::HypothesesUnmet("needs at least two generators".into()));
    }
    if !sys.is_minimal().minimal {
        return Err(StructureError::HypothesesUnmet("system is not minimal".into()));
    }
    let q = cube_engine::enumerate_q(sys, &(1..=sys.d()).collect::<Vec<_>>())?;
    if let Some(w) = cube_engine::ucpp_check(&q) {
        return Err(StructureError::HypothesesUnmet(format!("no UCPP: {} and {} differ only at {}", w.first, w.second, w.vertex)));
    }
    Ok(q)
}

pub fn decompose(sys: &FiniteZdSystem, x0: Point) -> Result<JoiningDecomposition, StructureError> {
    let q = require_minimal_ucpp(sys)?;
    let d = sys.d();
    let all: Vec<usize> = (1..=d).collect();
    let k = cube_engine::enumerate_k(sys, &all, x0)?;
    let section: Vec<Vec<Point>> =
        q.points().iter().filter(|p| p.coords()[0] == x0).map(|p| p.tail().to_vec()).collect();
    let continuity_point = section.as_slice() == k.points();
    let y = face_action_system(sys, &k)?;

    let mut factors = Vec::with_capacity(d);
    let mut lower_faces = Vec::with_capacity(d);
    for j in 1..=d {
        factors.push(project_piece(&y, &k, nonzero_vertices(d, |v| !v.bit(j)))?);
        let rest: Vec<usize> = all.iter().copied().filter(|&i| i != j).collect();
        lower_faces.push(cube_engine::enumerate_k(sys, &rest, x0)?);
    }
    let mut pair_factors = Vec::new();
    for i in 1..=d {
        for j in i + 1..=d {
            pair_factors.push(((i, j), project_piece(&y, &k, nonzero_vertices(d, |v| !v.bit(i) && !v.bit(j)))?));
        }
    }
    let trivial_directions = factors
        .iter()
        .enumerate()
        .all(|(j, p)| p.system.perm(j + 1).iter().enumerate().all(|(x, &tx)| x as Point == tx));
    let images: HashSet<Vec<Point>> = y.points().map(|p| factors.iter().map(|f| f.map.apply(p)).collect()).collect();
    let injective = images.len() == y.n_points();
    Ok(JoiningDecomposition { root: x0, k, y, factors, pair_factors, lower_faces, injective, continuity_point, trivial_directions })
}

/// Checks that the joining `Y` has UCPP; `None` if it does.
pub fn joining_ucpp(dec: &JoiningDecomposition) -> Result<Option<UcppWitness>, StructureError> {
    let q = cube_engine::enumerate_q(&dec.y, &(1..=dec.y.d()).collect::<Vec<_>>())?;
    Ok(cube_engine::ucpp_check(&q))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorIsomorphism {
    pub j: usize,
    pub k_points: usize,
    pub quotient_points: usize,
    pub lower_points: usize,
    /// The projection of `K` onto `ε_j = 0` is exactly the lower cube set.
    pub image_is_lower: bool,
    /// Same `ε_j = 0` coordinates iff same `Q_{T_j^{[d]}}` class.
    pub partitions_equal: bool,
}

impl FactorIsomorphism {
    pub fn passed(&self) -> bool {
        self.image_is_lower && self.partitions_equal && self.quotient_points == self.lower_points
    }
}

pub fn factor_isomorphism_check(sys: &FiniteZdSystem, x0: Point, j: usize) -> Result<FactorIsomorphism, StructureError> {
    let d = sys.d();
    hypercube::check_direction(j, d).map_err(CubeError::from)?;
    let all: Vec<usize> = (1..=d).collect();
    let k = cube_engine::enumerate_k(sys, &all, x0)?;
    let y = face_action_system(sys, &k)?;
    let factor = maximal_z0h_factor(&y, &SubgroupSpec::generated_by(&[j]))?;
    let rest: Vec<usize> = all.iter().copied().filter(|&i| i != j).collect();
    let lower = cube_engine::enumerate_k(sys, &rest, x0)?;
    let coords = nonzero_vertices(d, |v| !v.bit(j));
    let projected: Vec<Vec<Point>> = k.points().iter().map(|t| coords.iter().map(|v| t[v.index() - 1]).collect()).collect();
    let image: BTreeSet<&Vec<Point>> = projected.iter().collect();
    let image_is_lower = image.len() == lower.len() && image.iter().all(|t| lower.contains(t));
    let by_projection = canonical_labels(
        &projected.iter().map(|t| lower.position(t).map_or(Point::MAX, |i| i as Point)).collect::<Vec<_>>(),
    );
    let by_class = canonical_labels(&factor.map.map);
    Ok(FactorIsomorphism {
        j,
        k_points: k.len(),
        quotient_points: factor.system.n_points(),
        lower_points: lower.len(),
        image_is_lower,
        partitions_equal: by_projection == by_class,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum IndependenceVerdict {
    Holds { members: usize, candidates: usize },
    Violated { x: Vec<Point>, y: Vec<Point> },
    HypothesesUnmet { reason: String },
}

impl IndependenceVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, IndependenceVerdict::Holds { .. })
    }
}

pub fn relative_independence_check(dec: &JoiningDecomposition) -> IndependenceVerdict {
    relative_independence(&dec.k, &dec.lower_faces)
}

/// For every `x ∈ K`, build each `y` that agrees with `x` wherever at least
/// two bits vanish and whose `ε_j = 0` face lies in `lower[j-1]` for every
/// `j`; require such `y` to match a member of `K` away from the vertex `[d]`,
/// which the other coordinates determine.
pub fn relative_independence(k: &RootedCubeSet, lower: &[RootedCubeSet]) -> IndependenceVerdict {
    let d = k.dim();
    if d < 2 {
        return IndependenceVerdict::HypothesesUnmet { reason: "needs dimension at least 2".into() };
    }
    if lower.len() != d || lower.iter().any(|l| l.dim() != d - 1) {
        return IndependenceVerdict::HypothesesUnmet { reason: "lower cube sets do not match".into() };
    }
    if let Some(w) = cube_engine::ucpp_check(&k.to_cube_set()) {
        return IndependenceVerdict::HypothesesUnmet {
            reason: format!("no UCPP: {} and {} differ only at {}", w.first, w.second, w.vertex),
        };
    }
    let full = (1usize << d) - 1;
    // For each j: lower face with the top vertex masked -> admissible top values.
    let options: Vec<HashMap<Vec<Point>, Vec<Point>>> = lower
        .iter()
        .map(|l| {
            let mut m: HashMap<Vec<Point>, Vec<Point>> = HashMap::new();
            for t in l.points() {
                let (top, rest) = t.split_last().expect("nonempty tail");
                m.entry(rest.to_vec()).or_default().push(*top);
            }
            m
        })
        .collect();
    let heads: HashSet<&[Point]> = k.points().iter().map(|t| &t[..full - 1]).collect();

    let outcome: Vec<Result<usize, (Vec<Point>, Vec<Point>)>> = k
        .points()
        .par_iter()
        .map(|x| {
            let mut choices: Vec<&[Point]> = Vec::with_capacity(d);
            for j in 1..=d {
                let key: Vec<Point> = (1..full)
                    .filter(|e| e >> (j - 1) & 1 == 0 && *e != full ^ (1 << (j - 1)))
                    .map(|e| x[e - 1])
                    .collect();
                match options[j - 1].get(&key) {
                    Some(v) => choices.push(v),
                    None => return Err((x.clone(), Vec::new())),
                }
            }
            let mut count = 0;
            let mut idx = vec![0usize; d];
            loop {
                let mut y = x.clone();
                for j in 1..=d {
                    y[(full ^ (1 << (j - 1))) - 1] = choices[j - 1][idx[j - 1]];
                }
                count += 1;
                if !heads.contains(&y[..full - 1]) {
                    return Err((x.clone(), y));
                }
                let mut l = 0;
                while l < d {
                    idx[l] += 1;
                    if idx[l] < choices[l].len() {
                        break;
                    }
                    idx[l] = 0;
                    l += 1;
                }
                if l == d {
                    return Ok(count);
                }
            }
        })
        .collect();
    let mut candidates = 0;
    for o in outcome {
        match o {
            Ok(c) => candidates += c,
            Err((x, y)) => return IndependenceVerdict::Violated { x, y },
        }
    }
    IndependenceVerdict::Holds { members: k.len(), candidates }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot6() -> FiniteZdSystem {
        FiniteZdSystem::rotation(6, &[1, 2]).unwrap()
    }

    #[test]
    fn qh_examples() {
        let s = rot6();
        assert_eq!(compute_qh(&s, &SubgroupSpec::generated_by(&[2])).unwrap().len(), 18);
        assert!(compute_qh(&s, &SubgroupSpec::trivial(2)).unwrap().is_diagonal());
        assert_eq!(compute_qh(&s, &SubgroupSpec::generated_by(&[1])).unwrap(), PairRelation::full(6));
        assert!(compute_qh(&s, &SubgroupSpec::default()).is_err());
        assert!(compute_qh(&s, &SubgroupSpec::generated_by(&[3])).is_err());
        let w = SubgroupSpec { generators: vec![], words: vec![vec![0, 1]] };
        assert_eq!(compute_qh(&s, &w).unwrap(), compute_qh(&s, &SubgroupSpec::generated_by(&[2])).unwrap());
    }

    #[test]
    fn z0h_factors() {
        let s = rot6();
        let f = maximal_z0h_factor(&s, &SubgroupSpec::generated_by(&[2])).unwrap();
        assert_eq!(f.system.n_points(), 2);
        assert!(f.h_acts_trivially);
        assert_eq!(f.system.perm(1), &[1, 0]);
        let f = maximal_z0h_factor(&s, &SubgroupSpec::generated_by(&[1, 2])).unwrap();
        assert_eq!(f.system.n_points(), 1);
        let f = maximal_z0h_factor(&s, &SubgroupSpec::trivial(2)).unwrap();
        assert_eq!(f.system, s);
    }

    #[test]
    fn iterated_quotients() {
        let s = rot6();
        let (t1, t2) = (SubgroupSpec::generated_by(&[1]), SubgroupSpec::generated_by(&[2]));
        let v = iterated_quotient_check(&s, &t1, &t2).unwrap();
        assert!(v.partitions_equal);
        assert_eq!((v.direct_classes, v.iterated_classes), (1, 1));
        let v = iterated_quotient_check(&s, &t2, &t2).unwrap();
        assert!(v.partitions_equal);
        assert_eq!(v.direct_classes, 2);
    }

    #[test]
    fn rot6_decomposition() {
        let dec = decompose(&rot6(), 0).unwrap();
        let s = dec.summary();
        assert_eq!(s.y_points, 18);
        assert_eq!(s.factor_points, vec![3, 6]);
        assert_eq!(s.pair_factor_points, vec![(1, 2, 1)]);
        assert!(s.injective && s.continuity_point && s.trivial_directions);
        assert!(relative_independence_check(&dec).passed());
        assert_eq!(joining_ucpp(&dec).unwrap(), None);
    }

    #[test]
    fn trivial_decompositions() {
        let one = FiniteZdSystem::from_fn(1, 2, |_, x| x).unwrap();
        let dec = decompose(&one, 0).unwrap();
        assert_eq!(dec.summary().factor_points, vec![1, 1]);
        assert!(relative_independence_check(&dec).passed());
        let id = FiniteZdSystem::from_fn(3, 2, |_, x| x).unwrap();
        assert!(matches!(decompose(&id, 0), Err(StructureError::HypothesesUnmet(_))));
    }

    #[test]
    fn factor_isomorphisms() {
        let s = rot6();
        let v = factor_isomorphism_check(&s, 0, 1).unwrap();
        assert!(v.passed());
        assert_eq!((v.k_points, v.quotient_points), (18, 3));
        let v = factor_isomorphism_check(&s, 0, 2).unwrap();
        assert!(v.passed());
        assert_eq!(v.quotient_points, 6);
        let id = FiniteZdSystem::from_fn(3, 2, |_, x| x).unwrap();
        assert!(factor_isomorphism_check(&id, 1, 1).unwrap().passed());
    }

    #[test]
    fn non_ucpp_raw_input_is_not_judged() {
        let k = RootedCubeSet::from_points(0, vec![1, 2], [vec![0, 0, 0], vec![0, 0, 1]]).unwrap();
        let lower = vec![RootedCubeSet::from_points(0, vec![2], [vec![0]]).unwrap(); 2];
        assert!(matches!(relative_independence(&k, &lower), IndependenceVerdict::HypothesesUnmet { .. }));
    }

    #[test]
    fn missing_member_is_a_violation() {
        // ROT6 K with one member dropped: its own faces still admit it.
        let s = rot6();
        let dec = decompose(&s, 0).unwrap();
        let kept: Vec<Vec<Point>> = dec.k.points()[1..].to_vec();
        let k = RootedCubeSet::from_points(0, vec![1, 2], kept).unwrap();
        assert!(matches!(relative_independence(&k, &dec.lower_faces), IndependenceVerdict::Violated { .. }));
    }
}
