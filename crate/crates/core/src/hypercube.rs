//! Vertices and faces of the discrete cube `{0,1}^d`.
//!
//! A vertex `ε = ε_1 ε_2 … ε_d` is stored as an integer whose bit `i - 1`
//! holds `ε_i`. The canonical position of a vertex inside a `2^d`-tuple is
//! that integer, so `00…0` comes first and `ε_1` toggles fastest. Words are
//! written left to right starting with `ε_1`, e.g. `"110"` has `ε_1 = ε_2 = 1`.

use std::fmt;

use thiserror::Error;

/// Largest supported cube dimension.
pub const MAX_DIM: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypercubeError {
    #[error("dimension {0} outside 0..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("direction {j} outside 1..={d}")]
    DirectionOutOfRange { j: usize, d: usize },
    #[error("not a permutation of 1..={0}")]
    NotAPermutation(usize),
    #[error("malformed vertex word {0:?}")]
    BadWord(String),
    #[error("coordinate {0} pinned twice")]
    DuplicatePin(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    bits: u32,
    dim: u8,
}

impl Vertex {
    pub fn new(dim: usize, bits: u32) -> Result<Self, HypercubeError> {
        if dim > MAX_DIM {
            return Err(HypercubeError::BadDimension(dim));
        }
        if dim < 32 && bits >> dim != 0 {
            return Err(HypercubeError::BadWord(format!("{bits:#b}")));
        }
        Ok(Vertex { bits, dim: dim as u8 })
    }

    pub(crate) fn raw(dim: usize, bits: usize) -> Self {
        debug_assert!(dim <= MAX_DIM && bits < 1 << dim);
        Vertex { bits: bits as u32, dim: dim as u8 }
    }

    pub fn zero(dim: usize) -> Result<Self, HypercubeError> {
        Self::new(dim, 0)
    }

    /// The vertex `11…1`, i.e. the subset `[d]`.
    pub fn full(dim: usize) -> Result<Self, HypercubeError> {
        if dim > MAX_DIM {
            return Err(HypercubeError::BadDimension(dim));
        }
        Self::new(dim, (1u32 << dim) - 1)
    }

    /// The singleton `{j}`.
    pub fn unit(dim: usize, j: usize) -> Result<Self, HypercubeError> {
        check_direction(j, dim)?;
        Self::new(dim, 1 << (j - 1))
    }

    /// Parse a word such as `"101"`.
    pub fn parse(word: &str) -> Result<Self, HypercubeError> {
        let mut bits = 0u32;
        for (i, c) in word.chars().enumerate() {
            match c {
                '0' => {}
                '1' if i < 32 => bits |= 1 << i,
                _ => return Err(HypercubeError::BadWord(word.to_string())),
            }
        }
        Self::new(word.chars().count(), bits)
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }

    /// Position in canonical order.
    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// `ε_i`, with `i` counted from 1.
    pub fn bit(self, i: usize) -> bool {
        i >= 1 && i <= self.dim() && self.bits >> (i - 1) & 1 == 1
    }

    pub fn weight(self) -> u32 {
        self.bits.count_ones()
    }

    /// All `2^d` vertices in canonical order.
    pub fn all(dim: usize) -> impl Iterator<Item = Vertex> {
        let d = dim.min(MAX_DIM);
        (0..1usize << d).map(move |b| Vertex::raw(d, b))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.dim() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn check_direction(j: usize, d: usize) -> Result<(), HypercubeError> {
    if j == 0 || j > d {
        Err(HypercubeError::DirectionOutOfRange { j, d })
    } else {
        Ok(())
    }
}

/// A face of `{0,1}^d`: some coordinates pinned to fixed bits, the rest free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceSelector {
    dim: usize,
    mask: u32,
    values: u32,
}

impl FaceSelector {
    /// `pins` lists `(coordinate, bit)` pairs with coordinates in `1..=dim`.
    pub fn new(dim: usize, pins: &[(usize, bool)]) -> Result<Self, HypercubeError> {
        if dim > MAX_DIM {
            return Err(HypercubeError::BadDimension(dim));
        }
        let mut mask = 0u32;
        let mut values = 0u32;
        for &(i, b) in pins {
            check_direction(i, dim)?;
            let m = 1u32 << (i - 1);
            if mask & m != 0 {
                return Err(HypercubeError::DuplicatePin(i));
            }
            mask |= m;
            if b {
                values |= m;
            }
        }
        Ok(FaceSelector { dim, mask, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Free coordinates in increasing order.
    pub fn free(&self) -> Vec<usize> {
        (1..=self.dim).filter(|&i| self.mask >> (i - 1) & 1 == 0).collect()
    }

    pub fn pinned(&self) -> Vec<(usize, bool)> {
        (1..=self.dim)
            .filter(|&i| self.mask >> (i - 1) & 1 == 1)
            .map(|i| (i, self.values >> (i - 1) & 1 == 1))
            .collect()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.dim() == self.dim && v.bits & self.mask == self.values
    }
}

/// `σ(ε)_i = ε_{σ(i)}`; `sigma[i - 1]` holds `σ(i)`.
pub fn digit_permute(sigma: &[usize], v: Vertex) -> Result<Vertex, HypercubeError> {
    let d = v.dim();
    if sigma.len() != d {
        return Err(HypercubeError::DimensionMismatch { expected: d, found: sigma.len() });
    }
    check_permutation(sigma)?;
    let mut bits = 0u32;
    for (i, &s) in sigma.iter().enumerate() {
        if v.bit(s) {
            bits |= 1 << i;
        }
    }
    Ok(Vertex::raw(d, bits as usize))
}

pub(crate) fn check_permutation(sigma: &[usize]) -> Result<(), HypercubeError> {
    let d = sigma.len();
    let mut seen = vec![false; d + 1];
    for &s in sigma {
        if s == 0 || s > d || seen[s] {
            return Err(HypercubeError::NotAPermutation(d));
        }
        seen[s] = true;
    }
    Ok(())
}

/// `Φ_j`: flip coordinate `j`.
pub fn reflect(j: usize, v: Vertex) -> Result<Vertex, HypercubeError> {
    check_direction(j, v.dim())?;
    Ok(Vertex { bits: v.bits ^ (1 << (j - 1)), dim: v.dim })
}

/// `Ψ_j^b`: insert bit `b` at position `j` of a `(d-1)`-word.
pub fn embed_face(j: usize, b: bool, w: Vertex) -> Result<Vertex, HypercubeError> {
    let d = w.dim() + 1;
    if d > MAX_DIM {
        return Err(HypercubeError::BadDimension(d));
    }
    check_direction(j, d)?;
    let low = w.bits & ((1 << (j - 1)) - 1);
    let high = (w.bits >> (j - 1)) << j;
    Ok(Vertex { bits: low | high | (b as u32) << (j - 1), dim: d as u8 })
}

/// Inverse of [`embed_face`]: delete coordinate `j`.
pub fn remove_coordinate(j: usize, v: Vertex) -> Result<Vertex, HypercubeError> {
    check_direction(j, v.dim())?;
    let low = v.bits & ((1 << (j - 1)) - 1);
    let high = (v.bits >> j) << (j - 1);
    Ok(Vertex { bits: low | high, dim: v.dim - 1 })
}

/// Vertices of the face, in canonical order.
pub fn face_vertices(sel: &FaceSelector) -> Vec<Vertex> {
    Vertex::all(sel.dim).filter(|&v| sel.contains(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(w: &str) -> Vertex {
        Vertex::parse(w).unwrap()
    }

    #[test]
    fn words_round_trip() {
        for d in 0..=6 {
            for x in Vertex::all(d) {
                assert_eq!(Vertex::parse(&x.to_string()).unwrap(), x);
            }
        }
        assert_eq!(v("100").index(), 1);
        assert_eq!(v("001").index(), 4);
        assert!(Vertex::parse("10a").is_err());
        assert!(Vertex::parse("00000000000").is_err());
    }

    #[test]
    fn digit_permute_examples() {
        assert_eq!(digit_permute(&[2, 1, 3], v("100")).unwrap(), v("010"));
        assert_eq!(digit_permute(&[1, 2, 3], v("101")).unwrap(), v("101"));
        assert_eq!(digit_permute(&[2, 3, 1], v("110")).unwrap(), v("101"));
        assert!(digit_permute(&[1, 1, 3], v("101")).is_err());
        assert!(digit_permute(&[1, 2], v("101")).is_err());
    }

    // Bit-by-bit on the word itself, independent of the packed representation.
    #[test]
    fn digit_permute_cycle_matches_word_oracle() {
        let sigma = [2, 3, 1];
        for x in Vertex::all(3) {
            let word: Vec<char> = x.to_string().chars().collect();
            let expect: String = (0..3).map(|i| word[sigma[i] - 1]).collect();
            assert_eq!(digit_permute(&sigma, x).unwrap().to_string(), expect);
        }
    }

    fn permutations(d: usize) -> Vec<Vec<usize>> {
        if d == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(d - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, d);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn digit_permute_composition_law() {
        for d in 1..=4 {
            let perms = permutations(d);
            for s in &perms {
                for t in &perms {
                    let st: Vec<usize> = (0..d).map(|i| s[t[i] - 1]).collect();
                    for x in Vertex::all(d) {
                        let lhs = digit_permute(&st, x).unwrap();
                        let rhs = digit_permute(t, digit_permute(s, x).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn reflect_examples_and_involution() {
        assert_eq!(reflect(1, v("00")).unwrap(), v("10"));
        assert_eq!(reflect(2, v("111")).unwrap(), v("101"));
        assert!(reflect(3, v("11")).is_err());
        for d in 1..=6 {
            for j in 1..=d {
                for x in Vertex::all(d) {
                    assert_eq!(reflect(j, reflect(j, x).unwrap()).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn embed_face_examples() {
        assert_eq!(embed_face(1, false, v("11")).unwrap(), v("011"));
        assert_eq!(embed_face(2, true, v("10")).unwrap(), v("110"));
        assert_eq!(embed_face(3, false, v("01")).unwrap(), v("010"));
        assert!(embed_face(4, false, v("01")).is_err());
    }

    #[test]
    fn embed_face_sides_differ_in_one_bit() {
        for d in 1..=6 {
            for j in 1..=d {
                for w in Vertex::all(d - 1) {
                    let a = embed_face(j, false, w).unwrap();
                    let b = embed_face(j, true, w).unwrap();
                    assert_eq!(a.bits ^ b.bits, 1 << (j - 1));
                    assert!(!a.bit(j) && b.bit(j));
                    assert_eq!(remove_coordinate(j, a).unwrap(), w);
                    assert_eq!(remove_coordinate(j, b).unwrap(), w);
                }
            }
        }
    }

    #[test]
    fn face_vertices_examples() {
        let sel = FaceSelector::new(2, &[(1, true)]).unwrap();
        assert_eq!(face_vertices(&sel), vec![v("10"), v("11")]);
        let all = face_vertices(&FaceSelector::new(3, &[]).unwrap());
        assert_eq!(all.len(), 8);
        assert!(all.windows(2).all(|w| w[0].index() < w[1].index()));
        let sel = FaceSelector::new(3, &[(2, false), (3, true)]).unwrap();
        assert_eq!(face_vertices(&sel), vec![v("001"), v("101")]);
        assert_eq!(sel.free(), vec![1]);
        assert!(FaceSelector::new(3, &[(2, false), (2, true)]).is_err());
    }

    #[test]
    fn full_pin_gives_one_vertex() {
        for d in 0..=5 {
            for x in Vertex::all(d) {
                let pins: Vec<_> = (1..=d).map(|i| (i, x.bit(i))).collect();
                let sel = FaceSelector::new(d, &pins).unwrap();
                assert_eq!(face_vertices(&sel), vec![x]);
            }
            let empty = FaceSelector::new(d, &[]).unwrap();
            assert_eq!(face_vertices(&empty).len(), 1 << d);
        }
    }
}
