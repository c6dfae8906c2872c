//! Periodic subsets of Z^k, return-time sets of finite systems, joinings, and
//! the realization of a joining as a return-time set of a product system.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cube_engine::{self, CubeError, UcppWitness};
use crate::finite_system::{FiniteZdSystem, Point, SystemError};
use crate::structure::{self, StructureError};
use crate::text::{content_lines, header_attrs, join, parse_list, parse_num, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReturnTimeError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("modulus must be positive")]
    ZeroModulus,
    #[error("residue {0:?} out of range")]
    ResidueOutOfRange(Vec<u64>),
    #[error("periodic set has {0} residues, above the cap")]
    TooLarge(u128),
    #[error("membership depends on axis {0}")]
    AxisNotFree(usize),
    #[error("point {0} out of range")]
    PointOutOfRange(Point),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("hypotheses unmet: {0}")]
    HypothesesUnmet(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

const MAX_RESIDUES: u128 = 50_000_000;

/// A subset of Z^k whose membership depends on `n_i mod m_i` only.
///
/// Always held with componentwise minimal moduli, so `==` is set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicSet {
    moduli: Vec<u64>,
    /// Indexed in lexicographic order of residue vectors, last axis fastest.
    member: Vec<bool>,
}

fn block_size(moduli: &[u64]) -> Result<usize, ReturnTimeError> {
    let total = moduli.iter().fold(1u128, |acc, &m| acc.saturating_mul(m as u128));
    if moduli.iter().any(|&m| m == 0) {
        return Err(ReturnTimeError::ZeroModulus);
    }
    if total > MAX_RESIDUES {
        return Err(ReturnTimeError::TooLarge(total));
    }
    Ok(total as usize)
}

fn decode(moduli: &[u64], mut idx: usize) -> Vec<u64> {
    let mut r = vec![0; moduli.len()];
    for (slot, &m) in r.iter_mut().zip(moduli).rev() {
        *slot = (idx as u64) % m;
        idx /= m as usize;
    }
    r
}

fn encode(moduli: &[u64], n: &[i64]) -> usize {
    n.iter().zip(moduli).fold(0usize, |acc, (&v, &m)| acc * m as usize + v.rem_euclid(m as i64) as usize)
}

impl PeriodicSet {
    fn from_dense(moduli: Vec<u64>, member: Vec<bool>) -> Self {
        let mut s = PeriodicSet { moduli, member };
        s.canonicalize();
        s
    }

    /// Build from residues; each entry must lie below its modulus.
    pub fn new(moduli: Vec<u64>, residues: impl IntoIterator<Item = Vec<u64>>) -> Result<Self, ReturnTimeError> {
        let total = block_size(&moduli)?;
        let mut member = vec![false; total];
        for r in residues {
            if r.len() != moduli.len() || r.iter().zip(&moduli).any(|(a, m)| a >= m) {
                return Err(ReturnTimeError::ResidueOutOfRange(r));
            }
            let n: Vec<i64> = r.iter().map(|&v| v as i64).collect();
            member[encode(&moduli, &n)] = true;
        }
        Ok(Self::from_dense(moduli, member))
    }

    /// `{n : pred(n)}` for a predicate periodic with the given moduli.
    pub fn from_predicate(
        moduli: Vec<u64>,
        pred: impl Fn(&[i64]) -> bool + Sync,
    ) -> Result<Self, ReturnTimeError> {
        let total = block_size(&moduli)?;
        let member = (0..total)
            .into_par_iter()
            .map(|idx| {
                let n: Vec<i64> = decode(&moduli, idx).into_iter().map(|v| v as i64).collect();
                pred(&n)
            })
            .collect();
        Ok(Self::from_dense(moduli, member))
    }

    pub fn full(k: usize) -> Self {
        PeriodicSet { moduli: vec![1; k], member: vec![true] }
    }

    pub fn empty(k: usize) -> Self {
        PeriodicSet { moduli: vec![1; k], member: vec![false] }
    }

    pub fn k(&self) -> usize {
        self.moduli.len()
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Residue vectors of members, in lexicographic order.
    pub fn residues(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        self.member.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| decode(&self.moduli, i))
    }

    pub fn residue_count(&self) -> usize {
        self.member.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.member.iter().all(|&b| b)
    }

    pub fn contains(&self, n: &[i64]) -> bool {
        n.len() == self.k() && self.member[encode(&self.moduli, n)]
    }

    fn canonicalize(&mut self) {
        for axis in 0..self.k() {
            let m = self.moduli[axis];
            let stride: usize = self.moduli[axis + 1..].iter().product::<u64>() as usize;
            let period = (1..=m)
                .filter(|p| m % p == 0)
                .find(|&p| {
                    (0..self.member.len()).all(|idx| {
                        let digit = (idx / stride) as u64 % m;
                        let shifted = if digit + p < m { idx + p as usize * stride } else { idx + p as usize * stride - m as usize * stride };
                        self.member[idx] == self.member[shifted]
                    })
                })
                .unwrap_or(m);
            if period < m {
                let mut moduli = self.moduli.clone();
                moduli[axis] = period;
                let member = (0..self.member.len())
                    .filter(|&idx| ((idx / stride) as u64 % m) < period)
                    .map(|idx| self.member[idx])
                    .collect();
                self.moduli = moduli;
                self.member = member;
            }
        }
    }

    /// The same set over moduli that are multiples of the current ones.
    fn expand(&self, moduli: &[u64]) -> Result<Vec<bool>, ReturnTimeError> {
        debug_assert!(moduli.iter().zip(&self.moduli).all(|(a, b)| a % b == 0));
        let total = block_size(moduli)?;
        Ok((0..total)
            .map(|idx| {
                let n: Vec<i64> = decode(moduli, idx).into_iter().map(|v| v as i64).collect();
                self.member[encode(&self.moduli, &n)]
            })
            .collect())
    }

    fn combine(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self, ReturnTimeError> {
        if self.k() != other.k() {
            return Err(ReturnTimeError::Dimension(format!("{} vs {}", self.k(), other.k())));
        }
        let moduli: Vec<u64> = self.moduli.iter().zip(&other.moduli).map(|(a, b)| a.lcm(b)).collect();
        let a = self.expand(&moduli)?;
        let b = other.expand(&moduli)?;
        Ok(Self::from_dense(moduli, a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self, ReturnTimeError> {
        self.combine(other, |a, b| a && b)
    }

    pub fn union(&self, other: &Self) -> Result<Self, ReturnTimeError> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersects(&self, other: &Self) -> Result<bool, ReturnTimeError> {
        Ok(!self.intersection(other)?.is_empty())
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool, ReturnTimeError> {
        Ok(self.intersection(other)? == *self)
    }

    /// Forget axis `i` (1-based), on which membership must not depend.
    pub fn drop_axis(&self, i: usize) -> Result<Self, ReturnTimeError> {
        if i == 0 || i > self.k() {
            return Err(ReturnTimeError::Dimension(format!("axis {i} of {}", self.k())));
        }
        if self.moduli[i - 1] != 1 {
            return Err(ReturnTimeError::AxisNotFree(i));
        }
        let mut moduli = self.moduli.clone();
        moduli.remove(i - 1);
        Ok(PeriodicSet { moduli, member: self.member.clone() })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("periodic-set k={} moduli={}\n", self.k(), join(&self.moduli));
        for r in self.residues() {
            s.push_str(&join(&r));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| ParseError::new(1, "empty input"))?;
        let attrs = header_attrs(hl, header, "periodic-set")?;
        let (k, moduli) = match attrs.as_slice() {
            [("k", k), ("moduli", m)] => (parse_num::<usize>(hl, k)?, parse_list::<u64>(hl, m)?),
            _ => return Err(ParseError::new(hl, "expected `periodic-set k=<K> moduli=<m1,...>`")),
        };
        if moduli.len() != k {
            return Err(ParseError::new(hl, "moduli length differs from k"));
        }
        let total = block_size(&moduli).map_err(|e| ParseError::new(hl, e))?;
        let mut member = vec![false; total];
        for (l, line) in lines {
            let r: Vec<u64> = parse_list(l, line)?;
            if r.len() != k || r.iter().zip(&moduli).any(|(a, m)| a >= m) {
                return Err(ParseError::new(l, format!("residue {r:?} out of range")));
            }
            let n: Vec<i64> = r.iter().map(|&v| v as i64).collect();
            member[encode(&moduli, &n)] = true;
        }
        Ok(Self::from_dense(moduli, member))
    }
}

impl fmt::Display for PeriodicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let res: Vec<String> = self.residues().map(|r| format!("({})", join(&r))).collect();
        write!(f, "{{{}}} mod ({})", res.join(" "), join(&self.moduli))
    }
}

impl Serialize for PeriodicSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            k: usize,
            moduli: &'a [u64],
            residues: Vec<Vec<u64>>,
        }
        View { k: self.k(), moduli: &self.moduli, residues: self.residues().collect() }.serialize(s)
    }
}

pub fn contains_zero_vector(set: &PeriodicSet) -> bool {
    set.contains(&vec![0; set.k()])
}

fn check_point(sys: &FiniteZdSystem, x: Point) -> Result<(), ReturnTimeError> {
    if x as usize >= sys.n_points() {
        return Err(ReturnTimeError::PointOutOfRange(x));
    }
    Ok(())
}

/// `{n : T_1^{n_1} ⋯ T_d^{n_d} x ∈ U}`.
pub fn return_set(sys: &FiniteZdSystem, x: Point, u: &BTreeSet<Point>) -> Result<PeriodicSet, ReturnTimeError> {
    check_point(sys, x)?;
    if let Some(&bad) = u.iter().find(|&&p| p as usize >= sys.n_points()) {
        return Err(ReturnTimeError::PointOutOfRange(bad));
    }
    let in_u: Vec<bool> = (0..sys.n_points() as Point).map(|p| u.contains(&p)).collect();
    PeriodicSet::from_predicate(sys.orders().to_vec(), |n| in_u[sys.apply_word(n, x).expect("word length") as usize])
}

/// `{n ∈ Z^d : n with coordinate i removed lies in B_i, for every i}`.
pub fn d_joining(sets: &[PeriodicSet]) -> Result<PeriodicSet, ReturnTimeError> {
    let d = sets.len();
    if d < 2 {
        return Err(ReturnTimeError::Dimension("a joining needs at least two sets".into()));
    }
    if let Some(s) = sets.iter().find(|s| s.k() != d - 1) {
        return Err(ReturnTimeError::Dimension(format!("expected dimension {}, got {}", d - 1, s.k())));
    }
    // coordinate c of Z^d sits at position c or c - 1 of B_i
    let moduli: Vec<u64> = (0..d)
        .map(|c| {
            sets.iter()
                .enumerate()
                .filter(|(i, _)| *i != c)
                .fold(1, |acc, (i, s)| acc.lcm(&s.moduli[if c < i { c } else { c - 1 }]))
        })
        .collect();
    PeriodicSet::from_predicate(moduli, |n| {
        sets.iter().enumerate().all(|(i, s)| {
            let rest: Vec<i64> = n.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, &v)| v).collect();
            s.contains(&rest)
        })
    })
}

/// `{n_1 + ⋯ + n_k : n ∈ set}` as a subset of Z.
pub fn phi_image(set: &PeriodicSet) -> Result<PeriodicSet, ReturnTimeError> {
    if set.k() == 0 {
        return Err(ReturnTimeError::Dimension("sum over an empty coordinate list".into()));
    }
    let g = set.moduli.iter().fold(0u64, |acc, m| acc.gcd(m));
    let sums: BTreeSet<u64> = set.residues().map(|r| r.iter().sum::<u64>() % g).collect();
    PeriodicSet::new(vec![g], sums.into_iter().map(|s| vec![s]))
}

#[derive(Debug, Clone, Serialize)]
pub struct JoiningContainment {
    pub x: Point,
    /// `B_j`, return times of `y_j` to itself in `Y_j` with axis `j` dropped.
    pub parts: Vec<PeriodicSet>,
    pub joining: PeriodicSet,
    pub return_set: PeriodicSet,
    pub contained: bool,
    /// The joining is exactly the return set of the lift to itself in `Y`.
    pub joining_is_lift_return_set: bool,
}

impl JoiningContainment {
    pub fn passed(&self) -> bool {
        self.contained && self.joining_is_lift_return_set
    }
}

/// Build the joining below `N(x, U)` from the decomposition rooted at `x`.
pub fn joining_containment_check(
    sys: &FiniteZdSystem,
    x: Point,
    u: &BTreeSet<Point>,
) -> Result<JoiningContainment, ReturnTimeError> {
    check_point(sys, x)?;
    if !u.contains(&x) {
        return Err(ReturnTimeError::HypothesesUnmet(format!("{x} is not in the neighbourhood")));
    }
    let target = return_set(sys, x, u)?;
    let dec = structure::decompose(sys, x)?;
    let d = sys.d();
    let lift = dec.k.position(&vec![x; (1 << d) - 1]).expect("constant cube lies in K") as Point;
    let mut parts = Vec::with_capacity(d);
    for (j, piece) in dec.factors.iter().enumerate() {
        let yj = piece.map.apply(lift);
        parts.push(return_set(&piece.system, yj, &BTreeSet::from([yj]))?.drop_axis(j + 1)?);
    }
    let joining = d_joining(&parts)?;
    let own = return_set(&dec.y, lift, &BTreeSet::from([lift]))?;
    Ok(JoiningContainment {
        x,
        contained: joining.is_subset(&target)?,
        joining_is_lift_return_set: own == joining,
        parts,
        joining,
        return_set: target,
    })
}

/// One input of [`product_system_realization`].
#[derive(Debug, Clone)]
pub struct RealizationInput {
    pub system: FiniteZdSystem,
    pub point: Point,
    pub neighbourhood: BTreeSet<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductRealization {
    #[serde(skip)]
    pub system: FiniteZdSystem,
    /// Product coordinates of each point of `system`.
    pub points: Vec<Vec<Point>>,
    pub point: Point,
    pub neighbourhood: BTreeSet<Point>,
    pub parts: Vec<PeriodicSet>,
    pub joining: PeriodicSet,
    pub return_set: PeriodicSet,
    pub equal: bool,
    pub ucpp_witness: Option<UcppWitness>,
}

impl ProductRealization {
    pub fn passed(&self) -> bool {
        self.equal && self.ucpp_witness.is_none()
    }
}

/// Orbit closure of `(y_1, …, y_d)` in `∏ Y_j` under the diagonal action.
pub fn product_system_realization(inputs: &[RealizationInput]) -> Result<ProductRealization, ReturnTimeError> {
    let d = inputs.len();
    if d < 2 {
        return Err(ReturnTimeError::Malformed("need at least two factors".into()));
    }
    for (j, inp) in inputs.iter().enumerate() {
        if inp.system.d() != d {
            return Err(ReturnTimeError::Malformed(format!("factor {} has {} generators, expected {d}", j + 1, inp.system.d())));
        }
        check_point(&inp.system, inp.point)?;
        if let Some(&bad) = inp.neighbourhood.iter().find(|&&p| p as usize >= inp.system.n_points()) {
            return Err(ReturnTimeError::PointOutOfRange(bad));
        }
        if inp.system.perm(j + 1).iter().enumerate().any(|(x, &y)| x as Point != y) {
            return Err(ReturnTimeError::Malformed(format!("T_{} does not act trivially on factor {}", j + 1, j + 1)));
        }
    }
    let start: Vec<Point> = inputs.iter().map(|i| i.point).collect();
    let step = |i: usize, p: &[Point]| -> Vec<Point> { p.iter().zip(inputs).map(|(&c, inp)| inp.system.step(i, c)).collect() };
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(p) = queue.pop_front() {
        for i in 1..=d {
            let q = step(i, &p);
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    let points: Vec<Vec<Point>> = seen.into_iter().collect();
    let id = |p: &[Point]| points.binary_search_by(|q| q.as_slice().cmp(p)).expect("orbit is closed") as Point;
    let perms = (1..=d).map(|i| points.iter().map(|p| id(&step(i, p))).collect()).collect();
    let system = FiniteZdSystem::new(points.len(), perms)?;
    let point = id(&start);
    let neighbourhood: BTreeSet<Point> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.iter().zip(inputs).all(|(c, inp)| inp.neighbourhood.contains(c)))
        .map(|(i, _)| i as Point)
        .collect();
    let parts = inputs
        .iter()
        .enumerate()
        .map(|(j, inp)| return_set(&inp.system, inp.point, &inp.neighbourhood)?.drop_axis(j + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let joining = d_joining(&parts)?;
    let ret = return_set(&system, point, &neighbourhood)?;
    let q = cube_engine::enumerate_q(&system, &(1..=d).collect::<Vec<_>>())?;
    Ok(ProductRealization {
        ucpp_witness: cube_engine::ucpp_check(&q),
        equal: ret == joining,
        system,
        points,
        point,
        neighbourhood,
        parts,
        joining,
        return_set: ret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot6() -> FiniteZdSystem {
        FiniteZdSystem::rotation(6, &[1, 2]).unwrap()
    }

    #[test]
    fn rot6_return_set_of_origin() {
        let s = return_set(&rot6(), 0, &BTreeSet::from([0])).unwrap();
        assert_eq!(s.moduli(), &[6, 3]);
        assert_eq!(s.residue_count(), 3);
        assert!(s.residues().all(|r| (r[0] + 2 * r[1]) % 6 == 0));
        assert!(return_set(&rot6(), 0, &(0..6).collect()).unwrap().is_full());
        assert!(return_set(&rot6(), 0, &BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn canonical_form_is_minimal() {
        let a = PeriodicSet::new(vec![4, 6], (0..4).flat_map(|i| [vec![i, 0], vec![i, 3]])).unwrap();
        assert_eq!(a.moduli(), &[1, 3]);
        assert_eq!(a.residues().collect::<Vec<_>>(), vec![vec![0, 0]]);
        assert_eq!(PeriodicSet::new(vec![5, 5], []).unwrap(), PeriodicSet::empty(2));
    }

    #[test]
    fn parity_joining_is_empty() {
        let b1 = PeriodicSet::new(vec![2, 2], [vec![0, 0], vec![1, 1]]).unwrap();
        let b2 = PeriodicSet::new(vec![2, 2], [vec![0, 1], vec![1, 0]]).unwrap();
        let j = d_joining(&[b1.clone(), b2, b1]).unwrap();
        assert!(j.is_empty());
        assert!(!contains_zero_vector(&j));
    }

    #[test]
    fn full_inputs_join_to_full() {
        assert!(d_joining(&vec![PeriodicSet::full(2); 3]).unwrap().is_full());
        assert!(d_joining(&[PeriodicSet::full(1), PeriodicSet::full(2)]).is_err());
    }

    #[test]
    fn phi_image_examples() {
        let one = PeriodicSet::new(vec![6, 6], [vec![1, 2]]).unwrap();
        assert_eq!(phi_image(&one).unwrap(), PeriodicSet::new(vec![6], [vec![3]]).unwrap());
        assert!(phi_image(&PeriodicSet::empty(2)).unwrap().is_empty());
        let full = PeriodicSet::from_predicate(vec![2, 3], |_| true).unwrap();
        assert_eq!(phi_image(&full).unwrap(), PeriodicSet::full(1));
    }

    #[test]
    fn text_round_trip() {
        let s = PeriodicSet::new(vec![6, 3], [vec![0, 0], vec![2, 2], vec![4, 1]]).unwrap();
        assert_eq!(PeriodicSet::parse(&s.to_text()).unwrap(), s);
        assert_eq!(PeriodicSet::parse("periodic-set k=1 moduli=2\n3\n").unwrap_err().line, 2);
    }

    #[test]
    fn rot6_containment() {
        let c = joining_containment_check(&rot6(), 0, &BTreeSet::from([0])).unwrap();
        assert!(c.passed());
        assert_eq!(c.parts.len(), 2);
        let point = FiniteZdSystem::rotation(1, &[0, 0]).unwrap();
        assert!(joining_containment_check(&point, 0, &BTreeSet::from([0])).unwrap().passed());
    }

    #[test]
    fn two_rotations_realize_a_product() {
        let a = FiniteZdSystem::rotation(3, &[0, 1]).unwrap();
        let b = FiniteZdSystem::rotation(4, &[1, 0]).unwrap();
        let inputs = [
            RealizationInput { system: a, point: 0, neighbourhood: BTreeSet::from([0]) },
            RealizationInput { system: b, point: 0, neighbourhood: BTreeSet::from([0, 2]) },
        ];
        let r = product_system_realization(&inputs).unwrap();
        assert!(r.passed());
        assert_eq!(r.system.n_points(), 12);
        // B_1 is about n_2 and B_2 about n_1
        assert_eq!(r.return_set.moduli(), &[2, 3]);
    }
}
