mod common;

use common::fixture_dir;
use dcube::affine::*;
use dcube::cube_engine::{enumerate_q, ucpp_check};
use proptest::prelude::*;

fn load_affine(name: &str) -> AffineZdSystem {
    AffineZdSystem::parse(&std::fs::read_to_string(fixture_dir().join(name)).unwrap()).unwrap()
}

fn rat(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

/// Polynomial coefficients, lowest degree first.
type Poly = Vec<i64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &Poly, b: &Poly, sign: i64) -> Poly {
    let mut out = vec![0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += sign * y;
    }
    out
}

/// Determinant by cofactor expansion along the first row.
fn det(m: &[Vec<Poly>]) -> Poly {
    if m.len() == 1 {
        return m[0][0].clone();
    }
    let mut acc: Poly = vec![0];
    for c in 0..m.len() {
        let minor: Vec<Vec<Poly>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, p)| p.clone()).collect()).collect();
        let term = poly_mul(&m[0][c], &det(&minor));
        acc = poly_add(&acc, &term, if c % 2 == 0 { 1 } else { -1 });
    }
    acc
}

/// `det(t I - A)`.
fn char_poly(a: &IntMatrix) -> Poly {
    let n = a.size();
    let m: Vec<Vec<Poly>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { vec![-a.get(i, j), 1] } else { vec![-a.get(i, j)] }).collect())
        .collect();
    let mut p = det(&m);
    while p.len() > n + 1 && p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn t_minus_one_pow(r: usize) -> Poly {
    (0..r).fold(vec![1], |acc, _| poly_mul(&acc, &vec![-1, 1]))
}

#[test]
fn unipotence_matches_characteristic_polynomial() {
    let hyperbolic = IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
    let shear = IntMatrix::from_rows(&[vec![1, 5, -3], vec![0, 1, 2], vec![0, 0, 1]]).unwrap();
    // char poly (t-1)^2 but not unipotent would be impossible; this one has eigenvalue -1
    let flip = IntMatrix::from_rows(&[vec![1, 0], vec![0, -1]]).unwrap();
    let mut mats = vec![hyperbolic, shear, flip];
    for name in ["example83.affine", "jordan3.affine", "rot6.affine"] {
        let s = load_affine(name);
        mats.extend((1..=s.d()).map(|i| s.matrix(i).clone()));
    }
    for m in mats {
        let unipotent = m.nilpotency_index_of_shift().unwrap().is_some();
        assert_eq!(unipotent, char_poly(&m) == t_minus_one_pow(m.size()), "{m}");
    }
}

#[test]
fn shift_pair_example_is_valid_and_satisfies_conditions() {
    let s = load_affine("example83.affine");
    let v = validate_affine(&s).unwrap();
    assert!(v.is_valid());
    assert_eq!(v.nilpotency_index, vec![Some(2), Some(2)]);
    let shifted = s.matrix(1).minus_identity().mul(&s.matrix(2).minus_identity()).unwrap();
    assert!(shifted.is_zero());
    let m = matcond_check(&s).unwrap();
    assert_eq!((m.cond1, m.cond2), (Some(true), Some(true)));
    // each translation lies in the fixed space of the other matrix
    let a2a1 = s.matrix(2).minus_identity().apply_rational(s.alpha(1));
    let a1a2 = s.matrix(1).minus_identity().apply_rational(s.alpha(2));
    assert!(a2a1.iter().chain(&a1a2).all(|x| x.is_integer()));
}

#[test]
fn shift_pair_example_closed_form_at_origin() {
    let s = load_affine("example83.affine");
    let x = RationalTorusPoint::zero(6);
    for n1 in -3..=3 {
        for n2 in -3..=3 {
            assert_eq!(closed_form(&s, &[n1, n2], &x).unwrap(), iterate(&s, &[n1, n2], &x).unwrap());
        }
    }
}

#[test]
fn shift_pair_example_formula_on_every_small_lattice() {
    let s = load_affine("example83.affine");
    let spec = SampleSpec { n_min: -3, n_max: 3, denominators: (1..=6).collect() };
    let v = formula_equivalence_test(&s, &spec).unwrap();
    let expected: u64 = (1..=6u64).map(|q| q.pow(6) * 49).sum();
    assert_eq!(v, FormulaVerdict::Holds { samples: expected });
}

#[test]
fn jordan_fixture_fails_with_checkable_witness() {
    let s = load_affine("jordan3.affine");
    assert!(!matcond_check(&s).unwrap().holds());
    let spec = SampleSpec { n_min: 0, n_max: 3, denominators: vec![4] };
    let FormulaVerdict::WitnessFound(w) = formula_equivalence_test(&s, &spec).unwrap() else { panic!() };
    assert_eq!(iterate(&s, &w.n, &w.x).unwrap(), w.direct);
    assert_eq!(closed_form(&s, &w.n, &w.x).unwrap(), w.formula);
    assert_ne!(w.direct, w.formula);
}

#[test]
fn three_generator_rotation_holds() {
    let i = IntMatrix::identity(2);
    let s = AffineZdSystem::new(
        vec![i.clone(), i.clone(), i],
        vec![vec![rat(1, 2), rat(1, 3)], vec![rat(0, 1), rat(2, 3)], vec![rat(1, 6), rat(0, 1)]],
    )
    .unwrap();
    let spec = SampleSpec { n_min: -2, n_max: 2, denominators: vec![1, 2, 3] };
    assert!(matches!(formula_equivalence_test(&s, &spec).unwrap(), FormulaVerdict::Holds { .. }));
}

#[test]
fn shift_pair_example_orbit_discretization_is_minimal_with_ucpp() {
    let s = load_affine("example83.affine");
    let d = discretize(&s, 5, &Discretization::Orbit(RationalTorusPoint::zero(6))).unwrap();
    assert!(d.system.is_minimal().minimal);
    let q = enumerate_q(&d.system, &[1, 2]).unwrap();
    assert_eq!(ucpp_check(&q), None);
    assert_eq!(d.points[0], RationalTorusPoint::zero(6));
}

#[test]
fn transitive_orbit_equals_minimal_on_full_lattice() {
    let s = load_affine("rot6.affine");
    for q in [6, 12] {
        let full = discretize(&s, q, &Discretization::FullLattice).unwrap();
        let minimal = full.system.is_minimal().minimal;
        let orbit = discretize(&s, q, &Discretization::Orbit(RationalTorusPoint::zero(1))).unwrap();
        assert_eq!(minimal, orbit.system.n_points() == full.system.n_points(), "q={q}");
    }
}

#[test]
fn discretized_orbits_of_passing_fixtures_have_ucpp() {
    for (name, q) in [("example83.affine", 5), ("rot6.affine", 6), ("rot6.affine", 12)] {
        let s = load_affine(name);
        assert!(matcond_check(&s).unwrap().holds());
        let d = discretize(&s, q, &Discretization::Orbit(RationalTorusPoint::zero(s.r()))).unwrap();
        let dirs: Vec<usize> = (1..=s.d()).collect();
        assert_eq!(ucpp_check(&enumerate_q(&d.system, &dirs).unwrap()), None, "{name} q={q}");
    }
}

#[test]
fn affine_fixtures_round_trip() {
    for name in ["example83.affine", "jordan3.affine", "rot6.affine"] {
        let s = load_affine(name);
        assert_eq!(AffineZdSystem::parse(&s.to_text()).unwrap(), s);
    }
}

proptest! {
    #[test]
    fn closed_form_ignores_integer_shifts(
        n in prop::collection::vec(-3i64..=3, 2),
        x in prop::collection::vec(0i64..20, 6),
        shift in prop::collection::vec(-2i64..=2, 6),
        alpha_shift in prop::collection::vec(-2i64..=2, 6),
    ) {
        let s = load_affine("example83.affine");
        let p = RationalTorusPoint::new(x.iter().map(|&v| rat(v, 10)).collect());
        let moved = RationalTorusPoint::new(x.iter().zip(&shift).map(|(&v, &k)| rat(v, 10) + k).collect());
        prop_assert_eq!(closed_form(&s, &n, &p).unwrap(), closed_form(&s, &n, &moved).unwrap());
        let alphas: Vec<Vec<Rational>> = (1..=2)
            .map(|i| s.alpha(i).iter().zip(&alpha_shift).map(|(a, &k)| a + k).collect())
            .collect();
        let t = AffineZdSystem::new(vec![s.matrix(1).clone(), s.matrix(2).clone()], alphas).unwrap();
        prop_assert_eq!(closed_form(&s, &n, &p).unwrap(), closed_form(&t, &n, &p).unwrap());
        prop_assert_eq!(iterate(&s, &n, &p).unwrap(), iterate(&t, &n, &p).unwrap());
    }
}
