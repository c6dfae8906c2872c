//! Directional regionally proximal relations and the five-way characterization.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cube_engine::{self, CubeError, CubePoint, CubeSet, EnumerationLimits};
use crate::finite_system::{check_factor_map, quotient, FactorMap, FiniteZdSystem, PairRelation, Point, QuotientError};
use crate::hypercube::{self, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProximalError {
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error("expected {expected} template coordinates, found {found}")]
    TemplateLength { expected: usize, found: usize },
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error("R is not an equivalence relation: {0:?}")]
    NotEquivalence(Box<EquivalenceVerdict>),
    #[error("factor map is not valid")]
    BadFactorMap,
}

/// `z(x, y, a_*, j)`; `a_star[η - 1]` holds `(a_*)_η` for nonempty `η ⊆ [d-1]`.
pub fn build_z(x: Point, y: Point, a_star: &[Point], j: usize, d: usize) -> Result<CubePoint, ProximalError> {
    let expected = (1usize << (d - 1)) - 1;
    if a_star.len() != expected {
        return Err(ProximalError::TemplateLength { expected, found: a_star.len() });
    }
    let mut z = vec![x; 1 << d];
    z[1 << (j - 1)] = y;
    for (eta, &a) in Vertex::all(d - 1).skip(1).zip(a_star) {
        z[hypercube::embed_face(j, false, eta).map_err(CubeError::from)?.index()] = a;
        z[hypercube::embed_face(j, true, eta).map_err(CubeError::from)?.index()] = a;
    }
    Ok(CubePoint::new(z)?)
}

/// Does `c` match the template of direction position `l`, i.e. agree with its
/// `l`-reflection away from `0⃗` and `{l}`?
fn matches_template(c: &[Point], l: usize) -> bool {
    let m = 1usize << (l - 1);
    (1..c.len()).filter(|e| e & m == 0).all(|e| c[e] == c[e | m])
}

/// `R` at direction position `l` of `cubes` (position `j` when `cubes` is `Q_{T_1,…,T_d}`).
pub fn relation_from_cubes(n_points: usize, cubes: &CubeSet, l: usize) -> PairRelation {
    let m = 1usize << (l - 1);
    let pairs: BTreeSet<(Point, Point)> = cubes
        .points()
        .par_iter()
        .filter(|p| matches_template(p.coords(), l))
        .map(|p| (p.coords()[0], p.coords()[m]))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    PairRelation::new(n_points, pairs).expect("pairs come from the system")
}

/// Everything derived from `Q_{T_1,…,T_d}(X)` that the characterization needs.
#[derive(Debug, Clone)]
pub struct ProximalContext {
    sys: FiniteZdSystem,
    q: CubeSet,
    r_j: Vec<PairRelation>,
    r: PairRelation,
    // range of Q with root x, as Q is sorted by its first coordinate
    by_root: Vec<(usize, usize)>,
    minimal: bool,
}

impl ProximalContext {
    pub fn new(sys: &FiniteZdSystem) -> Result<Self, ProximalError> {
        Self::with_limits(sys, EnumerationLimits::default())
    }

    pub fn with_limits(sys: &FiniteZdSystem, limits: EnumerationLimits) -> Result<Self, ProximalError> {
        let dirs: Vec<usize> = (1..=sys.d()).collect();
        let q = cube_engine::enumerate_q_with(sys, &dirs, limits)?;
        let r_j: Vec<PairRelation> = (1..=sys.d()).map(|j| relation_from_cubes(sys.n_points(), &q, j)).collect();
        let r = r_j.iter().skip(1).fold(r_j[0].clone(), |acc, rel| acc.intersection(rel));
        let mut by_root = vec![(0, 0); sys.n_points()];
        let pts = q.points();
        let mut start = 0;
        while start < pts.len() {
            let x = pts[start].coords()[0];
            let end = start + pts[start..].partition_point(|p| p.coords()[0] == x);
            by_root[x as usize] = (start, end);
            start = end;
        }
        Ok(ProximalContext { sys: sys.clone(), q, r_j, r, by_root, minimal: sys.is_minimal().minimal })
    }

    pub fn system(&self) -> &FiniteZdSystem {
        &self.sys
    }

    pub fn q(&self) -> &CubeSet {
        &self.q
    }

    /// `R_{T_j}`, `j` from 1.
    pub fn r_j(&self, j: usize) -> &PairRelation {
        &self.r_j[j - 1]
    }

    /// `R_{T_1,…,T_d} = ∩_j R_{T_j}`.
    pub fn r(&self) -> &PairRelation {
        &self.r
    }

    pub fn is_minimal(&self) -> bool {
        self.minimal
    }

    /// `{a_* : (x, a_*) ∈ Q}`, sorted.
    pub fn completions(&self, x: Point) -> impl Iterator<Item = &[Point]> + '_ {
        let (a, b) = self.by_root[x as usize];
        self.q.points()[a..b].iter().map(|p| p.tail())
    }

    pub fn characterize(&self, x: Point, y: Point) -> Characterization {
        let d = self.sys.d();
        let c1 = self.r.contains(x, y);
        let mut diag = vec![y; 1 << d];
        diag[0] = x;
        let c2 = self.q.contains_coords(&diag);
        let (mut cx, mut cy) = (self.completions(x).peekable(), self.completions(y).peekable());
        let mut shared = false;
        let mut equal = true;
        loop {
            match (cx.peek(), cy.peek()) {
                (None, None) => break,
                (Some(a), Some(b)) if a == b => {
                    shared = true;
                    cx.next();
                    cy.next();
                }
                (Some(a), Some(b)) => {
                    equal = false;
                    if a < b {
                        cx.next();
                    } else {
                        cy.next();
                    }
                }
                _ => {
                    equal = false;
                    break;
                }
            }
        }
        let c5 = self.r_j.iter().any(|rel| rel.contains(x, y));
        Characterization { conditions: [c1, c2, shared, equal, c5], hypotheses_met: self.minimal }
    }

    /// Characterization of every pair; returns the first pair whose conditions disagree.
    pub fn battery(&self) -> Battery {
        let n = self.sys.n_points() as Point;
        let per_x: Vec<(usize, Option<(Point, Point, Characterization)>)> = (0..n)
            .into_par_iter()
            .map(|x| {
                let mut related = 0;
                for y in 0..n {
                    let c = self.characterize(x, y);
                    if !c.agree() {
                        return (related, Some((x, y, c)));
                    }
                    related += c.conditions[0] as usize;
                }
                (related, None)
            })
            .collect();
        let disagreement = per_x.iter().find_map(|(_, w)| w.clone());
        Battery {
            pairs_checked: (n as usize).pow(2),
            related_pairs: per_x.iter().map(|(r, _)| r).sum(),
            hypotheses_met: self.minimal,
            disagreement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Characterization {
    /// Conditions (1) through (5) in order.
    pub conditions: [bool; 5],
    /// False when the system is not minimal, where agreement is not promised.
    pub hypotheses_met: bool,
}

impl Characterization {
    pub fn agree(&self) -> bool {
        self.conditions.iter().all(|&c| c == self.conditions[0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Battery {
    pub pairs_checked: usize,
    pub related_pairs: usize,
    pub hypotheses_met: bool,
    pub disagreement: Option<(Point, Point, Characterization)>,
}

/// One-off version of [`ProximalContext::characterize`].
pub fn characterize(sys: &FiniteZdSystem, x: Point, y: Point) -> Result<Characterization, ProximalError> {
    Ok(ProximalContext::new(sys)?.characterize(x, y))
}

pub fn compute_r_j(sys: &FiniteZdSystem, j: usize) -> Result<PairRelation, ProximalError> {
    let dirs: Vec<usize> = (1..=sys.d()).collect();
    hypercube::check_direction(j, sys.d()).map_err(CubeError::from)?;
    let q = cube_engine::enumerate_q(sys, &dirs)?;
    Ok(relation_from_cubes(sys.n_points(), &q, j))
}

/// `R_{T_1,…,T_d}(X)`.
pub fn compute_r(sys: &FiniteZdSystem) -> Result<PairRelation, ProximalError> {
    Ok(ProximalContext::new(sys)?.r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReorderedCheck {
    pub j: usize,
    /// Order of the reordered cube, `(T_j, T_1, …)`.
    pub dirs: Vec<usize>,
    pub permutation_maps_onto_q: bool,
    pub relations_equal: bool,
}

impl ReorderedCheck {
    pub fn passed(&self) -> bool {
        self.permutation_maps_onto_q && self.relations_equal
    }
}

/// Recompute `R_{T_j}` in `Q_{T_j, T_1, …, T_{j-1}, T_{j+1}, …}` using the first
/// position there, and compare; the digit permutation relating the two cube
/// sets is checked on the way.
pub fn reordered_check(ctx: &ProximalContext, j: usize) -> Result<ReorderedCheck, ProximalError> {
    let sys = ctx.system();
    let d = sys.d();
    hypercube::check_direction(j, d).map_err(CubeError::from)?;
    let mut dirs = vec![j];
    dirs.extend((1..=d).filter(|&i| i != j));
    let reordered = cube_engine::enumerate_q(sys, &dirs)?;
    let image = reordered
        .points()
        .iter()
        .map(|p| cube_engine::permute_digits(&dirs, p))
        .collect::<Result<Vec<_>, _>>()?;
    let image = CubeSet::from_points((1..=d).collect(), image)?;
    let r_prime = relation_from_cubes(sys.n_points(), &reordered, 1);
    Ok(ReorderedCheck {
        j,
        dirs,
        permutation_maps_onto_q: image == *ctx.q() && reordered.len() == ctx.q().len(),
        relations_equal: r_prime == *ctx.r_j(j),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct EquivalenceVerdict {
    pub not_reflexive: Option<Point>,
    pub not_symmetric: Option<(Point, Point)>,
    pub not_transitive: Option<(Point, Point, Point)>,
    /// `(x, y, i)` with `x ~ y` but not `T_i x ~ T_i y`.
    pub not_invariant: Option<(Point, Point, usize)>,
}

impl EquivalenceVerdict {
    pub fn passed(&self) -> bool {
        *self == Self::default()
    }
}

pub fn check_equivalence(sys: &FiniteZdSystem, rel: &PairRelation) -> EquivalenceVerdict {
    let n = sys.n_points();
    let mut v = EquivalenceVerdict {
        not_reflexive: (0..n as Point).find(|&x| !rel.contains(x, x)),
        not_symmetric: rel.iter().find(|&(x, y)| !rel.contains(y, x)),
        ..Default::default()
    };
    let mut succ: Vec<Vec<Point>> = vec![Vec::new(); n];
    for (x, y) in rel.iter() {
        succ[x as usize].push(y);
    }
    v.not_transitive = rel.iter().find_map(|(x, y)| {
        succ[y as usize].iter().find(|&&z| !rel.contains(x, z)).map(|&z| (x, y, z))
    });
    v.not_invariant = rel.iter().find_map(|(x, y)| {
        (1..=sys.d()).find(|&i| !rel.contains(sys.step(i, x), sys.step(i, y))).map(|i| (x, y, i))
    });
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PushforwardVerdict {
    pub inclusion: bool,
    pub equality: bool,
    /// A pair of `R(X)` not hit, or a pushed pair outside `R(X)`.
    pub witness: Option<(Point, Point)>,
    pub source_related: usize,
    pub target_related: usize,
}

impl PushforwardVerdict {
    pub fn passed(&self) -> bool {
        self.inclusion && self.equality
    }
}

/// Compare `π × π (R(source))` with `R(target)`.
pub fn pushforward_check(
    source: &FiniteZdSystem,
    target: &FiniteZdSystem,
    pi: &FactorMap,
) -> Result<PushforwardVerdict, ProximalError> {
    if !check_factor_map(source, target, pi).passed() {
        return Err(ProximalError::BadFactorMap);
    }
    let r_src = compute_r(source)?;
    let r_tgt = compute_r(target)?;
    let image = pi.push_relation(&r_src);
    let outside = image.iter().find(|&(x, y)| !r_tgt.contains(x, y));
    let missed = r_tgt.iter().find(|&(x, y)| !image.contains(x, y));
    Ok(PushforwardVerdict {
        inclusion: outside.is_none(),
        equality: image == r_tgt,
        witness: outside.or(missed),
        source_related: r_src.len(),
        target_related: r_tgt.len(),
    })
}

#[derive(Debug, Clone)]
pub struct UcppFactor {
    pub system: FiniteZdSystem,
    pub map: FactorMap,
    pub quotient_has_ucpp: bool,
    pub quotient_r_trivial: bool,
}

/// `X / R_{T_1,…,T_d}(X)`, with its own UCPP and `R = Δ` verified.
pub fn maximal_ucpp_factor(sys: &FiniteZdSystem) -> Result<UcppFactor, ProximalError> {
    let r = compute_r(sys)?;
    let verdict = check_equivalence(sys, &r);
    if !verdict.passed() {
        return Err(ProximalError::NotEquivalence(Box::new(verdict)));
    }
    let (system, map) = quotient(sys, &r)?;
    let ctx = ProximalContext::new(&system)?;
    Ok(UcppFactor {
        quotient_has_ucpp: cube_engine::ucpp_check(ctx.q()).is_none(),
        quotient_r_trivial: ctx.r().is_diagonal(),
        system,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot6() -> FiniteZdSystem {
        FiniteZdSystem::rotation(6, &[1, 2]).unwrap()
    }

    #[test]
    fn z_templates() {
        let (x, y, a, b, c) = (10, 11, 1, 2, 3);
        assert_eq!(build_z(x, y, &[a], 1, 2).unwrap().coords(), &[x, y, a, a]);
        assert_eq!(build_z(x, y, &[a], 2, 2).unwrap().coords(), &[x, a, y, a]);
        assert_eq!(build_z(x, y, &[a, b, c], 1, 3).unwrap().coords(), &[x, y, a, a, b, b, c, c]);
        assert_eq!(build_z(x, y, &[a, b, c], 2, 3).unwrap().coords(), &[x, a, y, a, b, c, b, c]);
        assert_eq!(build_z(x, y, &[a, b, c], 3, 3).unwrap().coords(), &[x, a, b, c, y, a, b, c]);
        assert!(build_z(x, y, &[a], 1, 3).is_err());
    }

    #[test]
    fn template_scan_finds_built_points() {
        for j in 1..=3 {
            let z = build_z(4, 5, &[1, 2, 3], j, 3).unwrap();
            assert!(matches_template(z.coords(), j));
            let others = (1..=3).filter(|&i| i != j);
            for i in others {
                assert!(!matches_template(z.coords(), i));
            }
        }
    }

    #[test]
    fn rot6_relations_are_diagonal() {
        let ctx = ProximalContext::new(&rot6()).unwrap();
        assert!(ctx.r_j(1).is_diagonal());
        assert!(ctx.r_j(2).is_diagonal());
        assert!(ctx.r().is_diagonal());
        assert_eq!(ctx.completions(0).count(), 18);
    }

    #[test]
    fn rot6_characterization() {
        let ctx = ProximalContext::new(&rot6()).unwrap();
        assert_eq!(ctx.characterize(0, 0).conditions, [true; 5]);
        assert_eq!(ctx.characterize(0, 1).conditions, [false; 5]);
        let b = ctx.battery();
        assert_eq!(b.disagreement, None);
        assert_eq!(b.related_pairs, 6);
    }

    #[test]
    fn identity_system_relations() {
        let s = FiniteZdSystem::from_fn(3, 2, |_, x| x).unwrap();
        assert!(compute_r_j(&s, 1).unwrap().is_diagonal());
    }

    #[test]
    fn reordering_agrees() {
        let s = FiniteZdSystem::rotation(8, &[1, 2, 4]).unwrap();
        let ctx = ProximalContext::new(&s).unwrap();
        for j in 1..=3 {
            assert!(reordered_check(&ctx, j).unwrap().passed());
        }
    }

    #[test]
    fn equivalence_checks() {
        let s = rot6();
        assert!(check_equivalence(&s, &PairRelation::diagonal(6)).passed());
        let one_way = PairRelation::new(6, (0..6).map(|x| (x, x)).chain([(0, 1)])).unwrap();
        let v = check_equivalence(&s, &one_way);
        assert_eq!(v.not_symmetric, Some((0, 1)));
        let bare = PairRelation::new(6, [(0, 1)]).unwrap();
        assert_eq!(check_equivalence(&s, &bare).not_reflexive, Some(0));
    }

    #[test]
    fn pushforward_examples() {
        let s = rot6();
        let v = pushforward_check(&s, &s, &FactorMap::identity(6)).unwrap();
        assert!(v.passed());
        let point = FiniteZdSystem::from_fn(1, 2, |_, x| x).unwrap();
        let v = pushforward_check(&s, &point, &FactorMap { map: vec![0; 6], target_points: 1 }).unwrap();
        assert!(v.passed());
        let bad = FactorMap { map: vec![0; 6], target_points: 6 };
        assert_eq!(pushforward_check(&s, &s, &bad), Err(ProximalError::BadFactorMap));
    }

    #[test]
    fn ucpp_factor_of_rot6_is_itself() {
        let f = maximal_ucpp_factor(&rot6()).unwrap();
        assert_eq!(f.system, rot6());
        assert!(f.quotient_has_ucpp && f.quotient_r_trivial);
    }
}
