//! Property batteries behind `verify`: every check applicable to one input.
//!
//! A check that cannot run on the input (wrong hypotheses, too large) is
//! reported as skipped. Errors raised inside a check count as failures.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use serde_json::{json, Value};

use crate::affine::{self, AffineZdSystem, Discretization, FormulaVerdict, RationalTorusPoint, SampleSpec};
use crate::cube_engine::{self, CubePoint, CubeSet, InsertSide};
use crate::finite_system::{check_factor_map, quotient, FactorMap, FiniteZdSystem, PairRelation, Point};
use crate::hypercube::FaceSelector;
use crate::proximal::{self, ProximalContext};
use crate::return_times::{self, PeriodicSet, RealizationInput};
use crate::structure::{self, SubgroupSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    pub detail: Value,
}

impl CheckResult {
    fn new(name: impl Into<String>, status: Status, detail: Value) -> Self {
        CheckResult { name: name.into(), status, detail }
    }

    fn verdict(name: impl Into<String>, ok: bool, detail: Value) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }

    fn skipped(name: impl Into<String>, reason: &str) -> Self {
        Self::new(name, Status::Skipped, json!({ "reason": reason }))
    }
}

/// `Fail` if any check failed, `Pass` otherwise.
pub fn overall(checks: &[CheckResult]) -> Status {
    if checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

/// Run a fallible check; an error becomes a failure carrying its message.
fn run<E: std::fmt::Display>(name: &str, f: impl FnOnce() -> Result<(bool, Value), E>) -> CheckResult {
    match f() {
        Ok((ok, detail)) => CheckResult::verdict(name, ok, detail),
        Err(e) => CheckResult::verdict(name, false, json!({ "error": e.to_string() })),
    }
}

/// A factor map out of a system, with a short label.
#[derive(Debug, Clone)]
pub struct NamedFactor {
    pub label: String,
    pub target: FiniteZdSystem,
    pub map: FactorMap,
}

/// The quotients by `Q_H` for every `H` spanned by a nonempty set of
/// generators, and the map to a point.
pub fn factor_maps(sys: &FiniteZdSystem) -> Result<Vec<NamedFactor>, structure::StructureError> {
    let d = sys.d();
    let mut out = Vec::new();
    for mask in 1u32..1 << d {
        let gens: Vec<usize> = (1..=d).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let f = structure::maximal_z0h_factor(sys, &SubgroupSpec::generated_by(&gens))?;
        out.push(NamedFactor { label: format!("Q_H for H = <{}>", join_gens(&gens)), target: f.system, map: f.map });
    }
    out.push(NamedFactor {
        label: "one point".into(),
        target: FiniteZdSystem::rotation(1, &vec![0; d])?,
        map: FactorMap { map: vec![0; sys.n_points()], target_points: 1 },
    });
    Ok(out)
}

fn join_gens(gens: &[usize]) -> String {
    gens.iter().map(|g| format!("T{g}")).collect::<Vec<_>>().join(",")
}

/// Injective sequences of `1..=d` of every length from 1 to `d`.
fn injective_sequences(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..d {
        frontier = frontier
            .into_iter()
            .flat_map(|s| {
                (1..=d).filter(|i| !s.contains(i)).map(|i| [s.clone(), vec![i]].concat()).collect::<Vec<_>>()
            })
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

const MAX_PERMUTATION_DIM: usize = 4;

fn index_by_face(q: &CubeSet, j: usize, upper: bool) -> HashMap<Vec<Point>, Vec<usize>> {
    let mut m: HashMap<Vec<Point>, Vec<usize>> = HashMap::new();
    for (i, a) in q.points().iter().enumerate() {
        m.entry(cube_engine::face(a, j, upper).expect("direction in range")).or_default().push(i);
    }
    m
}

fn surgery_checks(sys: &FiniteZdSystem, q: &CubeSet, minimal: bool, out: &mut Vec<CheckResult>) {
    let d = sys.d();
    let all: Vec<usize> = (1..=d).collect();

    let missing = sys.points().find(|&x| !q.contains(&CubePoint::constant(x, d)));
    out.push(CheckResult::verdict("constant_cubes", missing.is_none(), json!({ "missing": missing })));

    out.push(run("single_direction_symmetry", || {
        let mut bad = None;
        for j in 1..=d {
            let qj = cube_engine::enumerate_q(sys, &[j])?;
            bad = qj.points().iter().find(|p| !qj.contains_coords(&[p.coords()[1], p.coords()[0]])).map(|p| (j, p.to_string()));
            if bad.is_some() {
                break;
            }
        }
        Ok::<_, cube_engine::CubeError>((bad.is_none(), json!({ "witness": bad })))
    }));

    let gens = cube_engine::face_group_generators(sys, &all);
    let escaped = q
        .points()
        .iter()
        .flat_map(|a| gens.iter().map(move |g| (a, g)))
        .find(|(a, g)| !q.contains(&g.apply(sys, &all, a)))
        .map(|(a, g)| json!({ "point": a.to_string(), "generator": g }));
    out.push(CheckResult::verdict(
        "face_group_closure",
        escaped.is_none(),
        json!({ "generators": gens.len(), "members": q.len(), "witness": escaped }),
    ));

    out.push(run("face_group_orbit", || {
        let orbit = cube_engine::face_group_orbit(sys, q, &CubePoint::constant(0, d))?;
        let ok = orbit.escaped == 0 && (!minimal || orbit.members.len() == q.len());
        Ok::<_, cube_engine::CubeError>((ok, json!({ "orbit": orbit.members.len(), "q": q.len(), "minimal": minimal })))
    }));

    out.push(run("projection", || {
        let mut cache: HashMap<Vec<usize>, CubeSet> = HashMap::new();
        let mut checked = 0usize;
        for code in 0..3usize.pow(d as u32) {
            let pins: Vec<(usize, bool)> = (1..=d)
                .filter_map(|j| match code / 3usize.pow(j as u32 - 1) % 3 {
                    0 => None,
                    t => Some((j, t == 2)),
                })
                .collect();
            let sel = FaceSelector::new(d, &pins)?;
            let free = sel.free();
            if free.is_empty() {
                continue;
            }
            if !cache.contains_key(&free) {
                cache.insert(free.clone(), cube_engine::enumerate_q(sys, &free)?);
            }
            let target = &cache[&free];
            for a in q.points() {
                let p = cube_engine::project(a, &sel)?;
                checked += 1;
                if !target.contains(&p) {
                    return Ok((false, json!({ "point": a.to_string(), "pins": pins, "image": p.to_string() })));
                }
            }
        }
        Ok::<_, cube_engine::CubeError>((true, json!({ "projections": checked })))
    }));

    if d > MAX_PERMUTATION_DIM {
        out.push(CheckResult::skipped("duplication", "dimension above 4"));
        out.push(CheckResult::skipped("digit_permutation", "dimension above 4"));
    } else {
        out.push(run("duplication", || {
            let mut checked = 0usize;
            for positions in injective_sequences(d) {
                for a in cube_engine::enumerate_q(sys, &positions)?.points() {
                    let y = cube_engine::duplicate(a, &positions, d)?;
                    checked += 1;
                    if !q.contains(&y) {
                        return Ok((false, json!({ "positions": positions, "point": a.to_string() })));
                    }
                }
            }
            Ok::<_, cube_engine::CubeError>((true, json!({ "duplicates": checked })))
        }));
        out.push(run("digit_permutation", || {
            let mut perms = 0usize;
            for sigma in injective_sequences(d).into_iter().filter(|s| s.len() == d) {
                let source = cube_engine::enumerate_q(sys, &sigma)?;
                let image: BTreeSet<CubePoint> = source
                    .points()
                    .iter()
                    .map(|a| cube_engine::permute_digits(&sigma, a))
                    .collect::<Result<_, _>>()?;
                perms += 1;
                let onto = image.len() == q.len() && image.iter().all(|p| q.contains(p));
                if image.len() != source.len() || !onto {
                    return Ok((false, json!({ "sigma": sigma, "image": image.len(), "q": q.len() })));
                }
            }
            Ok::<_, cube_engine::CubeError>((true, json!({ "permutations": perms })))
        }));
    }

    out.push(run("reflection", || {
        for j in 1..=d {
            for a in q.points() {
                if !q.contains(&cube_engine::reflect_point(j, a)?) {
                    return Ok((false, json!({ "j": j, "point": a.to_string() })));
                }
            }
        }
        Ok::<_, cube_engine::CubeError>((true, json!({ "directions": d })))
    }));

    out.push(run("gluing", || {
        let mut pairs = 0usize;
        for j in 1..=d {
            let lower = index_by_face(q, j, false);
            for a in q.points() {
                let key = cube_engine::face(a, j, true)?;
                for &bi in lower.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
                    let b = &q.points()[bi];
                    pairs += 1;
                    if !q.contains(&cube_engine::glue(a, b, j)?) {
                        return Ok((false, json!({ "j": j, "a": a.to_string(), "b": b.to_string() })));
                    }
                }
            }
        }
        Ok::<_, cube_engine::CubeError>((true, json!({ "pairs": pairs })))
    }));

    out.push(run("insertion", || {
        let mut pairs = 0usize;
        for j in 1..=d {
            for class in index_by_face(q, j, true).values() {
                for &xi in class {
                    for &yi in class {
                        let (x, y) = (&q.points()[xi], &q.points()[yi]);
                        pairs += 1;
                        if !q.contains(&cube_engine::insert(x, y, j, InsertSide::LowerIntoUpper)?) {
                            return Ok((false, json!({ "j": j, "x": x.to_string(), "y": y.to_string() })));
                        }
                    }
                }
            }
        }
        Ok::<_, cube_engine::CubeError>((true, json!({ "pairs": pairs })))
    }));
}

fn proximal_checks(sys: &FiniteZdSystem, ctx: &ProximalContext, minimal: bool, out: &mut Vec<CheckResult>) {
    let d = sys.d();
    let ucpp = cube_engine::ucpp_check(ctx.q()).is_none();
    let nontrivial: Vec<usize> = (1..=d).filter(|&j| !ctx.r_j(j).is_diagonal()).collect();
    out.push(CheckResult::verdict(
        "r_j_trivial_under_ucpp",
        !ucpp || nontrivial.is_empty(),
        json!({ "ucpp": ucpp, "nontrivial_directions": nontrivial }),
    ));

    out.push(run("reordered_relation", || {
        let mut failed = None;
        for j in 1..=d {
            if !proximal::reordered_check(ctx, j)?.passed() {
                failed = Some(j);
                break;
            }
        }
        Ok::<_, proximal::ProximalError>((failed.is_none(), json!({ "failed_direction": failed })))
    }));

    let r = ctx.r();
    let round = PairRelation::parse(&r.to_text());
    out.push(CheckResult::verdict("relation_round_trip", round.as_ref() == Ok(r), json!({ "pairs": r.len() })));

    if !minimal {
        for name in ["characterization", "symmetry_consequence", "r_equivalence", "maximal_ucpp_factor", "pushforward"] {
            out.push(CheckResult::skipped(name, "system is not minimal"));
        }
        return;
    }

    let b = ctx.battery();
    out.push(CheckResult::verdict(
        "characterization",
        b.hypotheses_met && b.disagreement.is_none(),
        json!({
            "pairs": b.pairs_checked,
            "related": b.related_pairs,
            "disagreement": b.disagreement.as_ref().map(|(x, y, c)| json!({ "x": x, "y": y, "conditions": c.conditions })),
        }),
    ));

    let q = ctx.q();
    let asym = sys
        .points()
        .flat_map(|x| sys.points().map(move |y| (x, y)))
        .find(|&(x, y)| {
            let mut a = vec![y; 1 << d];
            a[0] = x;
            let mut b = vec![x; 1 << d];
            b[0] = y;
            q.contains_coords(&a) != q.contains_coords(&b)
        });
    out.push(CheckResult::verdict("symmetry_consequence", asym.is_none(), json!({ "witness": asym })));

    let eq = proximal::check_equivalence(sys, r);
    out.push(CheckResult::verdict("r_equivalence", eq.passed(), json!(eq)));

    out.push(run("maximal_ucpp_factor", || {
        let f = proximal::maximal_ucpp_factor(sys)?;
        Ok::<_, proximal::ProximalError>((
            f.quotient_has_ucpp && f.quotient_r_trivial,
            json!({ "points": f.system.n_points(), "ucpp": f.quotient_has_ucpp, "r_trivial": f.quotient_r_trivial }),
        ))
    }));

    out.push(run("pushforward", || {
        let maps = factor_maps(sys).map_err(|e| e.to_string())?;
        let mut results = Vec::new();
        let mut ok = true;
        for f in &maps {
            let v = proximal::pushforward_check(sys, &f.target, &f.map).map_err(|e| e.to_string())?;
            ok &= v.passed();
            results.push(json!({ "factor": f.label, "points": f.target.n_points(), "equal": v.equality, "witness": v.witness }));
        }
        Ok::<_, String>((ok, json!(results)))
    }));
}

fn subgroups(d: usize) -> Vec<SubgroupSpec> {
    let mut hs: Vec<SubgroupSpec> = (1..=d).map(|j| SubgroupSpec::generated_by(&[j])).collect();
    hs.push(SubgroupSpec::generated_by(&(1..=d).collect::<Vec<_>>()));
    hs
}

fn structure_checks(sys: &FiniteZdSystem, out: &mut Vec<CheckResult>) {
    let d = sys.d();
    out.push(run("qh_equivalence", || {
        let mut results = Vec::new();
        let mut ok = true;
        for h in subgroups(d) {
            let qh = structure::compute_qh(sys, &h)?;
            let v = proximal::check_equivalence(sys, &qh);
            ok &= v.passed();
            results.push(json!({ "h": join_gens(&h.generators), "pairs": qh.len(), "equivalence": v.passed() }));
        }
        Ok::<_, structure::StructureError>((ok, json!(results)))
    }));

    out.push(run("z0h_factor", || {
        let mut results = Vec::new();
        let mut ok = true;
        for h in subgroups(d) {
            let f = structure::maximal_z0h_factor(sys, &h)?;
            ok &= f.h_acts_trivially && check_factor_map(sys, &f.system, &f.map).passed();
            results.push(json!({ "h": join_gens(&h.generators), "points": f.system.n_points(), "h_trivial": f.h_acts_trivially }));
        }
        Ok::<_, structure::StructureError>((ok, json!(results)))
    }));

    out.push(run("universality", || {
        let maps = factor_maps(sys)?;
        let mut applicable = 0usize;
        let mut failed = None;
        for h in subgroups(d) {
            for f in &maps {
                match structure::universality_check(sys, &h, &f.target, &f.map)? {
                    None => {}
                    Some(true) => applicable += 1,
                    Some(false) => {
                        failed = Some(json!({ "h": join_gens(&h.generators), "factor": f.label }));
                    }
                }
            }
        }
        Ok::<_, structure::StructureError>((failed.is_none(), json!({ "applicable_pairs": applicable, "witness": failed })))
    }));

    out.push(run("iterated_quotient", || {
        let mut ok = true;
        let mut results = Vec::new();
        for i in 1..=d {
            for j in 1..=d {
                if i == j {
                    continue;
                }
                let v = structure::iterated_quotient_check(
                    sys,
                    &SubgroupSpec::generated_by(&[i]),
                    &SubgroupSpec::generated_by(&[j]),
                )?;
                ok &= v.partitions_equal;
                results.push(json!({ "h1": i, "h2": j, "classes": v.direct_classes, "equal": v.partitions_equal }));
            }
        }
        Ok::<_, structure::StructureError>((ok, json!(results)))
    }));

    let dec = match structure::decompose(sys, 0) {
        Ok(dec) => dec,
        Err(e) => {
            out.push(CheckResult::verdict("decomposition", false, json!({ "error": e.to_string() })));
            return;
        }
    };
    let joining_ucpp = structure::joining_ucpp(&dec);
    let s = dec.summary();
    out.push(CheckResult::verdict(
        "decomposition",
        s.injective && s.continuity_point && s.trivial_directions && matches!(joining_ucpp, Ok(None)),
        json!({ "summary": s, "joining_ucpp": matches!(joining_ucpp, Ok(None)) }),
    ));

    out.push(run("factor_isomorphism", || {
        let mut ok = true;
        let mut results = Vec::new();
        for j in 1..=d {
            let f = structure::factor_isomorphism_check(sys, 0, j)?;
            ok &= f.passed();
            results.push(f);
        }
        Ok::<_, structure::StructureError>((ok, json!(results)))
    }));

    let v = structure::relative_independence_check(&dec);
    out.push(CheckResult::verdict("relative_independence", v.passed(), json!(v)));

    return_time_checks(sys, &dec, out);
}

fn return_time_checks(sys: &FiniteZdSystem, dec: &structure::JoiningDecomposition, out: &mut Vec<CheckResult>) {
    let d = sys.d();
    let n = sys.n_points() as Point;
    out.push(run("return_set_word_compat", || {
        let u: BTreeSet<Point> = BTreeSet::from([0]);
        let s = return_times::return_set(sys, 0, &u)?;
        let orders: Vec<u64> = sys.orders().to_vec();
        let total: u64 = orders.iter().product();
        for idx in 0..total {
            let mut rest = idx;
            let w: Vec<i64> = orders
                .iter()
                .map(|&m| {
                    let v = rest % m;
                    rest /= m;
                    v as i64
                })
                .collect();
            if s.contains(&w) != u.contains(&sys.apply_word(&w, 0)?) {
                return Ok((false, json!({ "word": w })));
            }
        }
        Ok::<_, return_times::ReturnTimeError>((true, json!({ "return_set": s, "block": total })))
    }));

    out.push(run("joining_containment", || {
        let mut ok = true;
        let mut results = Vec::new();
        for u in [BTreeSet::from([0]), (0..n).collect()] {
            let c = return_times::joining_containment_check(sys, 0, &u)?;
            ok &= c.passed() && return_times::contains_zero_vector(&c.joining);
            results.push(json!({ "neighbourhood": u.len(), "parts": c.parts, "joining": c.joining, "contained": c.contained }));
        }
        Ok::<_, return_times::ReturnTimeError>((ok, json!(results)))
    }));

    out.push(run("product_realization", || {
        let lift = dec.k.position(&vec![0; (1 << d) - 1]).expect("constant cube") as Point;
        let inputs: Vec<RealizationInput> = dec
            .factors
            .iter()
            .map(|f| {
                let y = f.map.apply(lift);
                RealizationInput { system: f.system.clone(), point: y, neighbourhood: BTreeSet::from([y]) }
            })
            .collect();
        let r = return_times::product_system_realization(&inputs)?;
        Ok::<_, return_times::ReturnTimeError>((
            r.passed(),
            json!({ "points": r.system.n_points(), "joining": r.joining, "return_set_equal": r.equal, "ucpp": r.ucpp_witness.is_none() }),
        ))
    }));
}

pub fn system_battery(sys: &FiniteZdSystem) -> Vec<CheckResult> {
    let d = sys.d();
    let all: Vec<usize> = (1..=d).collect();
    let m = sys.is_minimal();
    let minimal = m.minimal;
    let mut out = vec![CheckResult::new(
        "system",
        Status::Pass,
        json!({ "points": sys.n_points(), "d": d, "orders": sys.orders(), "minimal": minimal }),
    )];

    let noncommuting = (1..=d)
        .flat_map(|i| (i + 1..=d).map(move |j| (i, j)))
        .flat_map(|(i, j)| sys.points().map(move |x| (i, j, x)))
        .find(|&(i, j, x)| sys.step(i, sys.step(j, x)) != sys.step(j, sys.step(i, x)));
    out.push(CheckResult::verdict("commutation", noncommuting.is_none(), json!({ "witness": noncommuting })));

    out.push(CheckResult::verdict(
        "system_round_trip",
        FiniteZdSystem::parse(&sys.to_text()).as_ref() == Ok(sys),
        json!({}),
    ));

    out.push(run("quotient_by_diagonal", || {
        let (target, map) = quotient(sys, &PairRelation::diagonal(sys.n_points()))?;
        Ok::<_, crate::finite_system::QuotientError>((
            check_factor_map(sys, &target, &map).passed() && target.n_points() == sys.n_points(),
            json!({}),
        ))
    }));

    if minimal {
        out.push(run("stabilizer_independent_of_point", || {
            let s0 = return_times::return_set(sys, 0, &BTreeSet::from([0]))?;
            let bad = sys.points().find(|&x| {
                return_times::return_set(sys, x, &BTreeSet::from([x])).map(|s| s != s0).unwrap_or(true)
            });
            Ok::<_, return_times::ReturnTimeError>((bad.is_none(), json!({ "stabilizer": s0, "witness": bad })))
        }));
    } else {
        out.push(CheckResult::skipped("stabilizer_independent_of_point", "system is not minimal"));
    }

    let ctx = match ProximalContext::new(sys) {
        Ok(ctx) => ctx,
        Err(e) => {
            out.push(CheckResult::verdict("cube_census", false, json!({ "error": e.to_string() })));
            return out;
        }
    };
    let q = ctx.q();
    let k = cube_engine::enumerate_k(sys, &all, 0).map(|k| k.len()).ok();
    out.push(CheckResult::new("cube_census", Status::Pass, json!({ "q": q.len(), "k0": k })));

    let w = cube_engine::ucpp_check(q);
    out.push(CheckResult::verdict("ucpp", w.is_none(), json!({ "witness": w })));
    out.push(CheckResult::verdict("cube_set_round_trip", CubeSet::parse(&q.to_text()).as_ref() == Ok(q), json!({})));

    surgery_checks(sys, q, minimal, &mut out);
    proximal_checks(sys, &ctx, minimal, &mut out);

    let structural = [
        "qh_equivalence",
        "z0h_factor",
        "universality",
        "iterated_quotient",
        "decomposition",
        "factor_isomorphism",
        "relative_independence",
        "return_set_word_compat",
        "joining_containment",
        "product_realization",
    ];
    if !minimal {
        out.extend(structural.iter().map(|n| CheckResult::skipped(*n, "system is not minimal")));
    } else if d < 2 {
        out.extend(structural.iter().map(|n| CheckResult::skipped(*n, "needs at least two generators")));
    } else {
        structure_checks(sys, &mut out);
    }
    out
}

const FORMULA_LATTICE_CAP: u64 = 200_000;
const FULL_LATTICE_CAP: u64 = 100_000;

pub fn affine_battery(sys: &AffineZdSystem) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let valid = match affine::validate_affine(sys) {
        Ok(v) => {
            let ok = v.is_valid();
            out.push(CheckResult::verdict("validation", ok, json!(v)));
            ok
        }
        Err(e) => {
            out.push(CheckResult::verdict("validation", false, json!({ "error": e.to_string() })));
            false
        }
    };
    out.push(CheckResult::verdict(
        "affine_round_trip",
        AffineZdSystem::parse(&sys.to_text()).as_ref() == Ok(sys),
        json!({}),
    ));
    let names = ["matrix_conditions", "closed_form_identity", "orbit_discretization", "transitivity_equals_minimality"];
    if !valid {
        out.extend(names.iter().map(|n| CheckResult::skipped(*n, "affine system is not valid")));
        return out;
    }
    out.push(match affine::matcond_check(sys) {
        Ok(m) => CheckResult::new("matrix_conditions", Status::Pass, json!(m)),
        Err(e) => CheckResult::verdict("matrix_conditions", false, json!({ "error": e.to_string() })),
    });

    let r = sys.r() as u32;
    let denominators: Vec<i64> = (1..=6).filter(|&q: &i64| (q as u64).saturating_pow(r) <= FORMULA_LATTICE_CAP).collect();
    let spec = SampleSpec { n_min: -3, n_max: 3, denominators };
    out.push(match affine::formula_equivalence_test(sys, &spec) {
        Ok(v) => {
            let status = match &v {
                FormulaVerdict::Holds { .. } | FormulaVerdict::WitnessFound(_) => Status::Pass,
                FormulaVerdict::Contradiction(_) => Status::Fail,
                FormulaVerdict::Inconclusive { .. } => Status::Inconclusive,
            };
            CheckResult::new("closed_form_identity", status, json!({ "sample": spec, "verdict": v }))
        }
        Err(e) => CheckResult::verdict("closed_form_identity", false, json!({ "error": e.to_string() })),
    });

    let q0 = sys.translation_denominator();
    let origin = RationalTorusPoint::zero(sys.r());
    out.push(run("orbit_discretization", || {
        let dsys = affine::discretize(sys, q0, &Discretization::Orbit(origin.clone())).map_err(|e| e.to_string())?;
        let minimal = dsys.system.is_minimal().minimal;
        let all: Vec<usize> = (1..=sys.d()).collect();
        let cubes = cube_engine::enumerate_q(&dsys.system, &all).map_err(|e| e.to_string())?;
        let ucpp = cube_engine::ucpp_check(&cubes).is_none();
        Ok::<_, String>((minimal && ucpp, json!({ "q": q0, "points": dsys.system.n_points(), "minimal": minimal, "ucpp": ucpp })))
    }));

    if (q0 as u64).saturating_pow(r) > FULL_LATTICE_CAP {
        out.push(CheckResult::skipped("transitivity_equals_minimality", "full lattice above the cap"));
    } else {
        out.push(run("transitivity_equals_minimality", || {
            let full = affine::discretize(sys, q0, &Discretization::FullLattice)?;
            let orbit = affine::discretize(sys, q0, &Discretization::Orbit(origin.clone()))?;
            let minimal = full.system.is_minimal().minimal;
            let transitive = orbit.system.n_points() == full.system.n_points();
            Ok::<_, affine::AffineError>((minimal == transitive, json!({ "lattice": full.system.n_points(), "orbit": orbit.system.n_points() })))
        }));
    }
    out
}

pub fn periodic_battery(set: &PeriodicSet) -> Vec<CheckResult> {
    let mut out = vec![CheckResult::new(
        "periodic_set",
        Status::Pass,
        json!({ "k": set.k(), "moduli": set.moduli(), "residues": set.residue_count(), "contains_zero": return_times::contains_zero_vector(set) }),
    )];
    out.push(CheckResult::verdict("periodic_round_trip", PeriodicSet::parse(&set.to_text()).as_ref() == Ok(set), json!({})));
    out.push(run("canonical_form", || {
        let doubled: Vec<u64> = set.moduli().iter().map(|m| m * 2).collect();
        let again = PeriodicSet::from_predicate(doubled, |n| set.contains(n))?;
        Ok::<_, return_times::ReturnTimeError>((again == *set, json!({})))
    }));
    out.push(run("self_joining", || {
        let copies = vec![set.clone(); set.k() + 1];
        let j = return_times::d_joining(&copies)?;
        let again = PeriodicSet::from_predicate(j.moduli().to_vec(), |n| {
            (0..n.len()).all(|i| {
                let rest: Vec<i64> = n.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, &v)| v).collect();
                set.contains(&rest)
            })
        })?;
        Ok::<_, return_times::ReturnTimeError>((again == j, json!({ "joining": j })))
    }));
    if set.k() == 0 {
        out.push(CheckResult::skipped("phi_image", "dimension zero"));
    } else {
        out.push(run("phi_image", || {
            let img = return_times::phi_image(set)?;
            Ok::<_, return_times::ReturnTimeError>((true, json!({ "image": img })))
        }));
    }
    out
}

pub fn cube_set_battery(set: &CubeSet) -> Vec<CheckResult> {
    let w = cube_engine::ucpp_check(set);
    vec![
        CheckResult::new("cube_set", Status::Pass, json!({ "d": set.dim(), "dirs": set.dirs(), "points": set.len(), "ucpp": w.is_none(), "witness": w })),
        CheckResult::verdict("cube_set_round_trip", CubeSet::parse(&set.to_text()).as_ref() == Ok(set), json!({})),
    ]
}

pub fn relation_battery(rel: &PairRelation) -> Vec<CheckResult> {
    vec![
        CheckResult::new("pair_relation", Status::Pass, json!({ "n": rel.n_points(), "pairs": rel.len(), "diagonal": rel.is_diagonal() })),
        CheckResult::verdict("relation_round_trip", PairRelation::parse(&rel.to_text()).as_ref() == Ok(rel), json!({})),
    ]
}
