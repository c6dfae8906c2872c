//! `dcube`: command-line front end for the cube computations.

mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dcube::affine::{self, AffineZdSystem, Discretization, FormulaVerdict, Rational, RationalTorusPoint, SampleSpec};
use dcube::battery;
use dcube::cube_engine::{self, CubeSet};
use dcube::finite_system::{self, FiniteZdSystem, PairRelation, Point};
use dcube::proximal::{self, ProximalContext};
use dcube::return_times::{self, PeriodicSet};
use dcube::structure::{self, SubgroupSpec};
use dcube::ParseError;

use report::{document, human, Outcome, Report};

#[derive(Parser)]
#[command(name = "dcube", version, about = "Directional cube computations on finite Z^d-systems and affine torus maps")]
struct Cli {
    /// Print a plain-text table instead of JSON.
    #[arg(long, global = true)]
    human: bool,
    /// Worker threads for enumeration; output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate any supported file.
    Validate { path: PathBuf },
    /// Sizes of Q and K, optionally writing Q as a cube set.
    Cubes {
        path: PathBuf,
        /// Directions, comma separated; all by default.
        #[arg(long, value_delimiter = ',')]
        dirs: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        basepoint: Point,
        /// Write Q to this file.
        #[arg(long, value_name = "FILE")]
        dump: Option<PathBuf>,
    },
    /// Unique closing parallelepiped check on a system or a cube-set file.
    Ucpp { path: PathBuf },
    /// The relations R_j and R, with the characterization battery.
    Rpp { path: PathBuf },
    /// Quotient by R or by Q_H.
    Quotient {
        path: PathBuf,
        #[arg(long, value_enum)]
        relation: RelationKind,
        /// Generators spanning H, for `--relation qh`.
        #[arg(long, value_delimiter = ',')]
        gens: Vec<usize>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Joining decomposition rooted at a point, with independence.
    Structure {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        basepoint: Point,
    },
    /// Validation and matrix conditions of an affine system.
    AffineCheck { path: PathBuf },
    /// Closed form against direct iteration on a sample box.
    FormulaTest {
        path: PathBuf,
        /// Exponents range over [-R, R].
        #[arg(long, default_value_t = 3)]
        range: i64,
        /// Lattice denominators, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        q: Vec<i64>,
    },
    /// Restrict an affine system to a finite lattice.
    Discretize {
        path: PathBuf,
        #[arg(long)]
        q: i64,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        /// Whole lattice instead of the orbit of the base point.
        #[arg(long)]
        full: bool,
        /// Base point as comma separated fractions; the origin by default.
        #[arg(long, value_delimiter = ',')]
        base: Vec<String>,
    },
    /// Return times of a point to a set of points.
    ReturnTimes {
        path: PathBuf,
        #[arg(long)]
        point: Point,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        target: Vec<Point>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Joining of periodic sets, one file per axis.
    Joining {
        #[arg(required = true, num_args = 2..)]
        paths: Vec<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Every check applicable to the input.
    Verify { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationKind {
    Rpp,
    Qh,
}

/// Failure before a verdict could be reached.
enum CliError {
    Input(String),
    Hypotheses(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(s) | CliError::Hypotheses(s) => f.write_str(s),
        }
    }
}

fn input<E: fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

impl From<structure::StructureError> for CliError {
    fn from(e: structure::StructureError) -> Self {
        match e {
            structure::StructureError::HypothesesUnmet(s) => CliError::Hypotheses(s),
            other => input(other),
        }
    }
}

impl From<return_times::ReturnTimeError> for CliError {
    fn from(e: return_times::ReturnTimeError) -> Self {
        match e {
            return_times::ReturnTimeError::HypothesesUnmet(s) => CliError::Hypotheses(s),
            return_times::ReturnTimeError::Structure(s) => s.into(),
            other => input(other),
        }
    }
}

impl From<proximal::ProximalError> for CliError {
    fn from(e: proximal::ProximalError) -> Self {
        match e {
            proximal::ProximalError::NotEquivalence(_) => CliError::Hypotheses(e.to_string()),
            other => input(other),
        }
    }
}

type CmdResult = Result<Report, CliError>;

/// Parsed contents of an input file, keyed on its header line.
enum Input {
    System(FiniteZdSystem),
    Affine(AffineZdSystem),
    Periodic(PeriodicSet),
    Cubes(CubeSet),
    Relation(PairRelation),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn header(text: &str) -> &str {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next())
        .unwrap_or("")
}

fn parse_err(path: &Path, e: ParseError) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Input, CliError> {
    let text = read(path)?;
    let p = |e| parse_err(path, e);
    Ok(match header(&text) {
        "finite-system" => Input::System(FiniteZdSystem::parse(&text).map_err(p)?),
        "affine-system" => Input::Affine(AffineZdSystem::parse(&text).map_err(p)?),
        "periodic-set" => Input::Periodic(PeriodicSet::parse(&text).map_err(p)?),
        "cube-set" => Input::Cubes(CubeSet::parse(&text).map_err(p)?),
        "pair-relation" => Input::Relation(PairRelation::parse(&text).map_err(p)?),
        other => return Err(CliError::Input(format!("{}: unknown file kind {other:?}", path.display()))),
    })
}

fn load_system(path: &Path) -> Result<FiniteZdSystem, CliError> {
    match load(path)? {
        Input::System(s) => Ok(s),
        _ => Err(CliError::Input(format!("{}: expected a finite-system file", path.display()))),
    }
}

fn load_affine(path: &Path) -> Result<AffineZdSystem, CliError> {
    match load(path)? {
        Input::Affine(s) => Ok(s),
        _ => Err(CliError::Input(format!("{}: expected an affine-system file", path.display()))),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn check_point(sys: &FiniteZdSystem, x: Point) -> Result<(), CliError> {
    if x as usize >= sys.n_points() {
        return Err(CliError::Input(format!("point {x} out of range")));
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> CmdResult {
    let text = read(path)?;
    if header(&text) == "finite-system" {
        let raw = finite_system::parse_raw(&text).map_err(|e| parse_err(path, e))?;
        let v = finite_system::validate(&raw);
        let ok = v.is_valid();
        return Ok(Report::new(Outcome::from_bool(ok), json!({ "kind": "finite-system", "valid": ok, "report": v })));
    }
    Ok(match load(path)? {
        Input::Affine(s) => {
            let v = affine::validate_affine(&s).map_err(input)?;
            let ok = v.is_valid();
            Report::new(Outcome::from_bool(ok), json!({ "kind": "affine-system", "valid": ok, "report": v }))
        }
        Input::Periodic(s) => Report::new(Outcome::Pass, json!({ "kind": "periodic-set", "valid": true, "set": s })),
        Input::Cubes(c) => Report::new(Outcome::Pass, json!({ "kind": "cube-set", "valid": true, "points": c.len() })),
        Input::Relation(r) => Report::new(Outcome::Pass, json!({ "kind": "pair-relation", "valid": true, "pairs": r.len() })),
        Input::System(_) => unreachable!("handled above"),
    })
}

fn cmd_cubes(path: &Path, dirs: &[usize], basepoint: Point, dump: Option<&Path>) -> CmdResult {
    let sys = load_system(path)?;
    check_point(&sys, basepoint)?;
    let dirs: Vec<usize> = if dirs.is_empty() { (1..=sys.d()).collect() } else { dirs.to_vec() };
    let q = cube_engine::enumerate_q(&sys, &dirs).map_err(input)?;
    let k = cube_engine::enumerate_k(&sys, &dirs, basepoint).map_err(input)?;
    if let Some(f) = dump {
        write(f, &q.to_text())?;
    }
    Ok(Report::new(Outcome::Pass, json!({ "dirs": dirs, "q": q.len(), "basepoint": basepoint, "k": k.len() })))
}

fn cmd_ucpp(path: &Path) -> CmdResult {
    let (q, source) = match load(path)? {
        Input::System(sys) => (cube_engine::enumerate_q(&sys, &(1..=sys.d()).collect::<Vec<_>>()).map_err(input)?, "system"),
        Input::Cubes(c) => (c, "cube-set"),
        _ => return Err(CliError::Input("expected a finite-system or cube-set file".into())),
    };
    let w = cube_engine::ucpp_check(&q);
    Ok(Report::new(Outcome::from_bool(w.is_none()), json!({ "source": source, "ucpp": w.is_none(), "q": q.len(), "witness": w })))
}

fn relation_pairs(r: &PairRelation) -> Vec<(Point, Point)> {
    r.iter().collect()
}

fn cmd_rpp(path: &Path) -> CmdResult {
    let sys = load_system(path)?;
    let ctx = ProximalContext::new(&sys)?;
    let r_j: Vec<_> = (1..=sys.d())
        .map(|j| json!({ "j": j, "diagonal": ctx.r_j(j).is_diagonal(), "pairs": relation_pairs(ctx.r_j(j)) }))
        .collect();
    let b = ctx.battery();
    let body = json!({
        "minimal": ctx.is_minimal(),
        "r_j": r_j,
        "r": { "diagonal": ctx.r().is_diagonal(), "pairs": relation_pairs(ctx.r()) },
        "characterization": {
            "pairs": b.pairs_checked,
            "related": b.related_pairs,
            "hypotheses_met": b.hypotheses_met,
            "agree": b.disagreement.is_none(),
            "disagreement": b.disagreement.as_ref().map(|(x, y, c)| json!({ "x": x, "y": y, "conditions": c.conditions })),
        },
    });
    let outcome = if !b.hypotheses_met {
        Outcome::HypothesesUnmet
    } else {
        Outcome::from_bool(b.disagreement.is_none())
    };
    Ok(Report::new(outcome, body))
}

fn cmd_quotient(path: &Path, relation: RelationKind, gens: &[usize], output: Option<&Path>) -> CmdResult {
    let sys = load_system(path)?;
    let (system, map, body) = match relation {
        RelationKind::Rpp => {
            let f = proximal::maximal_ucpp_factor(&sys)?;
            let ok = f.quotient_has_ucpp && f.quotient_r_trivial;
            let body = json!({ "relation": "rpp", "ucpp": f.quotient_has_ucpp, "r_trivial": f.quotient_r_trivial, "passed": ok });
            (f.system, f.map, body)
        }
        RelationKind::Qh => {
            if gens.is_empty() {
                return Err(CliError::Input("--gens is required for --relation qh".into()));
            }
            let f = structure::maximal_z0h_factor(&sys, &SubgroupSpec::generated_by(gens))?;
            let body = json!({ "relation": "qh", "gens": gens, "h_trivial": f.h_acts_trivially, "passed": f.h_acts_trivially });
            (f.system, f.map, body)
        }
    };
    if let Some(f) = output {
        write(f, &system.to_text())?;
    }
    let passed = body["passed"].as_bool().unwrap_or(false);
    let mut body = body;
    body["points"] = json!(system.n_points());
    body["map"] = json!(map.map);
    Ok(Report::new(Outcome::from_bool(passed), body))
}

fn cmd_structure(path: &Path, basepoint: Point) -> CmdResult {
    let sys = load_system(path)?;
    check_point(&sys, basepoint)?;
    let dec = structure::decompose(&sys, basepoint)?;
    let iso = (1..=sys.d())
        .map(|j| structure::factor_isomorphism_check(&sys, basepoint, j))
        .collect::<Result<Vec<_>, _>>()?;
    let indep = structure::relative_independence_check(&dec);
    let joining_ucpp = structure::joining_ucpp(&dec)?;
    let s = dec.summary();
    let ok = s.injective && iso.iter().all(|f| f.passed()) && indep.passed() && joining_ucpp.is_none();
    Ok(Report::new(
        Outcome::from_bool(ok),
        json!({ "decomposition": s, "joining_ucpp": joining_ucpp.is_none(), "factor_isomorphism": iso, "relative_independence": indep }),
    ))
}

fn cmd_affine_check(path: &Path) -> CmdResult {
    let sys = load_affine(path)?;
    let v = affine::validate_affine(&sys).map_err(input)?;
    if !v.is_valid() {
        return Ok(Report::new(Outcome::Fail, json!({ "valid": false, "validation": v })));
    }
    let m = affine::matcond_check(&sys).map_err(input)?;
    Ok(Report::new(Outcome::Pass, json!({ "valid": true, "validation": v, "conditions": m, "conditions_hold": m.holds() })))
}

fn cmd_formula_test(path: &Path, range: i64, q: &[i64]) -> CmdResult {
    let sys = load_affine(path)?;
    if range < 0 {
        return Err(CliError::Input("--range must be nonnegative".into()));
    }
    if !affine::validate_affine(&sys).map_err(input)?.is_valid() {
        return Err(CliError::Hypotheses("affine system is not valid".into()));
    }
    let m = affine::matcond_check(&sys).map_err(input)?;
    let spec = SampleSpec { n_min: -range, n_max: range, denominators: q.to_vec() };
    let v = affine::formula_equivalence_test(&sys, &spec).map_err(input)?;
    let verdict = match &v {
        FormulaVerdict::Holds { .. } => "identity_holds",
        FormulaVerdict::WitnessFound(_) => "witness_found",
        FormulaVerdict::Contradiction(_) => "contradiction",
        FormulaVerdict::Inconclusive { .. } => "inconclusive",
    };
    Ok(Report::new(
        Outcome::from_bool(v.consistent() || matches!(v, FormulaVerdict::Inconclusive { .. })),
        json!({ "conditions_hold": m.holds(), "sample": spec, "verdict": verdict, "result": v }),
    ))
}

fn parse_base(parts: &[String], r: usize) -> Result<RationalTorusPoint, CliError> {
    if parts.is_empty() {
        return Ok(RationalTorusPoint::zero(r));
    }
    let coords = parts
        .iter()
        .map(|p| p.trim().parse::<Rational>().map_err(|_| CliError::Input(format!("bad fraction {p:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if coords.len() != r {
        return Err(CliError::Input(format!("base point needs {r} coordinates")));
    }
    Ok(RationalTorusPoint::new(coords))
}

fn cmd_discretize(path: &Path, q: i64, output: &Path, full: bool, base: &[String]) -> CmdResult {
    let sys = load_affine(path)?;
    let mode = if full { Discretization::FullLattice } else { Discretization::Orbit(parse_base(base, sys.r())?) };
    let d = affine::discretize(&sys, q, &mode).map_err(input)?;
    write(output, &d.system.to_text())?;
    let m = d.system.is_minimal();
    Ok(Report::new(
        Outcome::Pass,
        json!({ "q": q, "mode": if full { "full" } else { "orbit" }, "points": d.system.n_points(), "minimal": m.minimal, "output": output.display().to_string() }),
    ))
}

fn cmd_return_times(path: &Path, point: Point, target: &[Point], output: Option<&Path>) -> CmdResult {
    let sys = load_system(path)?;
    check_point(&sys, point)?;
    let u: BTreeSet<Point> = target.iter().copied().collect();
    let s = return_times::return_set(&sys, point, &u)?;
    if let Some(f) = output {
        write(f, &s.to_text())?;
    }
    let containment = if u.contains(&point) && sys.d() >= 2 && sys.is_minimal().minimal {
        let c = return_times::joining_containment_check(&sys, point, &u)?;
        json!({ "parts": c.parts, "joining": c.joining, "contained": c.contained, "passed": c.passed() })
    } else {
        json!(null)
    };
    let ok = containment.is_null() || containment["passed"] == json!(true);
    Ok(Report::new(
        Outcome::from_bool(ok),
        json!({ "point": point, "target": u, "return_set": s, "contains_zero": return_times::contains_zero_vector(&s), "joining_containment": containment }),
    ))
}

fn cmd_joining(paths: &[PathBuf], output: Option<&Path>) -> CmdResult {
    let sets = paths
        .iter()
        .map(|p| match load(p)? {
            Input::Periodic(s) => Ok(s),
            _ => Err(CliError::Input(format!("{}: expected a periodic-set file", p.display()))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let j = return_times::d_joining(&sets).map_err(input)?;
    if let Some(f) = output {
        write(f, &j.to_text())?;
    }
    Ok(Report::new(
        Outcome::Pass,
        json!({ "joining": j, "empty": j.is_empty(), "contains_zero": return_times::contains_zero_vector(&j) }),
    ))
}

fn cmd_verify(path: &Path) -> CmdResult {
    let (kind, checks) = match load(path)? {
        Input::System(s) => ("finite-system", battery::system_battery(&s)),
        Input::Affine(s) => ("affine-system", battery::affine_battery(&s)),
        Input::Periodic(s) => ("periodic-set", battery::periodic_battery(&s)),
        Input::Cubes(c) => ("cube-set", battery::cube_set_battery(&c)),
        Input::Relation(r) => ("pair-relation", battery::relation_battery(&r)),
    };
    Ok(Report::checks(checks, json!({ "kind": kind })))
}

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Validate { path } => cmd_validate(path),
        Command::Cubes { path, dirs, basepoint, dump } => cmd_cubes(path, dirs, *basepoint, dump.as_deref()),
        Command::Ucpp { path } => cmd_ucpp(path),
        Command::Rpp { path } => cmd_rpp(path),
        Command::Quotient { path, relation, gens, output } => cmd_quotient(path, *relation, gens, output.as_deref()),
        Command::Structure { path, basepoint } => cmd_structure(path, *basepoint),
        Command::AffineCheck { path } => cmd_affine_check(path),
        Command::FormulaTest { path, range, q } => cmd_formula_test(path, *range, q),
        Command::Discretize { path, q, output, full, base } => cmd_discretize(path, *q, output, *full, base),
        Command::ReturnTimes { path, point, target, output } => cmd_return_times(path, *point, target, output.as_deref()),
        Command::Joining { paths, output } => cmd_joining(paths, output.as_deref()),
        Command::Verify { path } => cmd_verify(path),
    }
}

/// Arguments as given, minus `--threads`, which cannot change the output.
fn command_echo(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
        } else if a == "--threads" {
            skip = true;
        } else if !a.starts_with("--threads=") {
            out.push(a.clone());
        }
    }
    out
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&args);
    let run = || {
        dispatch(&cli.command).unwrap_or_else(|e| match e {
            CliError::Input(msg) => Report::new(Outcome::InputError, json!({ "error": msg })),
            CliError::Hypotheses(msg) => Report::new(Outcome::HypothesesUnmet, json!({ "reason": msg })),
        })
    };
    let report = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Report::new(Outcome::InputError, json!({ "error": format!("thread pool: {e}") })),
        },
        None => run(),
    };
    let doc = document(&command_echo(&args), &report);
    let text = if cli.human {
        human(&doc)
    } else {
        serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
    };
    // a closed pipe on stdout is not an error of the command
    let _ = std::io::stdout().write_all(text.as_bytes());
    if let Some(msg) = doc.get("error").and_then(|v| v.as_str()) {
        eprintln!("error: {msg}");
    }
    ExitCode::from(report.outcome.code() as u8)
}
