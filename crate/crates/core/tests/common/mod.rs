//! Fixture loading and brute-force oracles.
//!
//! The oracles only read raw image arrays; they never call the engine.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use dcube::finite_system::FiniteZdSystem;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn load(name: &str) -> FiniteZdSystem {
    let text = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
    FiniteZdSystem::parse(&text).unwrap()
}

pub const MINIMAL: &[&str] = &[
    "rot6.fsys",
    "point.fsys",
    "rot12.fsys",
    "torus4x4.fsys",
    "rot8_d3.fsys",
    "z3sq_d3.fsys",
    "torus4_d3.fsys",
    "example83_q5.fsys",
];

pub const NON_MINIMAL: &[&str] = &["union_z4_z2.fsys", "identity3.fsys"];

pub fn minimal_fixtures() -> Vec<(&'static str, FiniteZdSystem)> {
    MINIMAL.iter().map(|&n| (n, load(n))).collect()
}

/// Image arrays of the generators.
pub fn perms(sys: &FiniteZdSystem) -> Vec<Vec<u32>> {
    (1..=sys.d()).map(|i| sys.perm(i).to_vec()).collect()
}

/// Order of a permutation by iterating until every point returns.
pub fn naive_order(p: &[u32]) -> usize {
    let mut cur: Vec<u32> = (0..p.len() as u32).collect();
    for k in 1.. {
        cur = cur.iter().map(|&x| p[x as usize]).collect();
        if cur.iter().enumerate().all(|(i, &x)| i as u32 == x) {
            return k;
        }
    }
    unreachable!()
}

fn iterate(p: &[u32], k: usize, mut x: u32) -> u32 {
    for _ in 0..k {
        x = p[x as usize];
    }
    x
}

/// The cube `(T^{n·ε} x)_ε`, vertex `ε` at index `Σ ε_i 2^{i-1}`.
pub fn cube(perms: &[Vec<u32>], dirs: &[usize], n: &[usize], x: u32) -> Vec<u32> {
    (0..1usize << dirs.len())
        .map(|e| {
            let mut y = x;
            for (l, &j) in dirs.iter().enumerate() {
                if e >> l & 1 == 1 {
                    y = iterate(&perms[j - 1], n[l], y);
                }
            }
            y
        })
        .collect()
}

fn exponent_vectors(bounds: &[usize]) -> Vec<Vec<usize>> {
    bounds.iter().fold(vec![vec![]], |acc, &b| {
        acc.into_iter()
            .flat_map(|v| {
                (0..b).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect()
    })
}

pub fn oracle_q(perms: &[Vec<u32>], dirs: &[usize]) -> BTreeSet<Vec<u32>> {
    let bounds: Vec<usize> = dirs.iter().map(|&j| naive_order(&perms[j - 1])).collect();
    let n_pts = perms[0].len() as u32;
    let mut out = BTreeSet::new();
    for x in 0..n_pts {
        for n in exponent_vectors(&bounds) {
            out.insert(cube(perms, dirs, &n, x));
        }
    }
    out
}

pub fn oracle_k(perms: &[Vec<u32>], dirs: &[usize], x0: u32) -> BTreeSet<Vec<u32>> {
    oracle_q(perms, dirs).into_iter().filter(|c| c[0] == x0).map(|c| c[1..].to_vec()).collect()
}

/// Pairwise comparison: no two members differ in exactly one coordinate.
pub fn oracle_ucpp(set: &BTreeSet<Vec<u32>>) -> bool {
    let v: Vec<&Vec<u32>> = set.iter().collect();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i].iter().zip(v[j]).filter(|(a, b)| a != b).count() == 1 {
                return false;
            }
        }
    }
    true
}

/// Insert bit `b` at position `j` by string surgery on the word.
fn psi(j: usize, b: char, eta: usize, d: usize) -> usize {
    let mut word: Vec<char> = (0..d - 1).map(|i| if eta >> i & 1 == 1 { '1' } else { '0' }).collect();
    word.insert(j - 1, b);
    word.iter().enumerate().filter(|(_, &c)| c == '1').map(|(i, _)| 1 << i).sum()
}

/// `R_{T_j}` by searching every `a_*` tuple.
pub fn oracle_r_j(perms: &[Vec<u32>], j: usize) -> BTreeSet<(u32, u32)> {
    let d = perms.len();
    let q = oracle_q(perms, &(1..=d).collect::<Vec<_>>());
    let n = perms[0].len();
    let width = (1usize << (d - 1)) - 1;
    let stars = exponent_vectors(&vec![n; width]);
    let mut out = BTreeSet::new();
    for x in 0..n as u32 {
        for y in 0..n as u32 {
            let found = stars.iter().any(|a| {
                let mut z = vec![0u32; 1 << d];
                z[0] = x;
                z[1 << (j - 1)] = y;
                for eta in 1..=width {
                    z[psi(j, '0', eta, d)] = a[eta - 1] as u32;
                    z[psi(j, '1', eta, d)] = a[eta - 1] as u32;
                }
                q.contains(&z)
            });
            if found {
                out.insert((x, y));
            }
        }
    }
    out
}

pub fn diagonal(n: usize) -> BTreeSet<(u32, u32)> {
    (0..n as u32).map(|x| (x, x)).collect()
}
