//! Subcommand implementations. Each returns the rendered output and the exit
//! code; errors carry their own code.

use std::fmt::Write as _;
use std::io::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use mvcf::cubature::{closed_form_symmap_rule, gauss_cubature, CubatureJson, CubatureRule, ExactnessReport};
use mvcf::jacobi::{build_truncated, common_zeros, commutativity_report, simplicity_check, CommutativityReport, ZeroSetJson};
use mvcf::json::{from_json, to_json, DenseMatrix};
use mvcf::momentrec::{
    continued_fraction_run, parse_point, rational_eval, ExponentialPolynomial, LevelReport, COINCIDENCE_TOL,
};
use mvcf::moments::{definiteness_scan, hankel_schur_test, DefinitenessEntry};
use mvcf::orthopoly::{
    build_monic, recurrence_from_l, recurrence_monic, sign_orthonormal_basis, Flavor, RecurrenceJson,
};
use mvcf::{Error, MomentProvider, MomentTable, Tolerances, WeightDescriptor};

use crate::{Cli, Command, FlavorArg, Format, Global, Method};

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_DEGREE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_COMMUTE: u8 = 4;
pub const EXIT_MULTIPLE: u8 = 5;
pub const EXIT_VERDICT: u8 = 6;
pub const EXIT_POLE: u8 = 7;

/// Rendered output of a successful run.
pub struct Outcome {
    pub body: String,
    pub code: u8,
    pub diagnostic: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, code: 0, diagnostic: None }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DegreeExceeded { .. } => EXIT_DEGREE,
        Error::BadDescriptor(_) | Error::Parse(_) | Error::DimensionMismatch { .. } => EXIT_INPUT,
        Error::CommutativityFailed { .. } => EXIT_COMMUTE,
        Error::MultipleZeros { .. } | Error::DefectiveEigenvector { .. } => EXIT_MULTIPLE,
        Error::PoleHit { .. } => EXIT_POLE,
        Error::LevelFailed { source, .. } => exit_code(source),
        _ => EXIT_OTHER,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string() }
    }
}

type Res<T> = Result<T, Failure>;

/// Write `body` to `--out` atomically (temporary file in the same directory,
/// then rename), or to stdout.
pub fn emit(g: &Global, body: &str) -> std::io::Result<()> {
    match &g.out {
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => std::path::PathBuf::from("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(body.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()
        }
    }
}

/// Provider from `--weight`/`--dim` or `--moments`, reliable through `max_degree`.
fn provider(g: &Global, max_degree: usize) -> Res<MomentProvider> {
    if let Some(path) = &g.moments {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
        let table: MomentTable = from_json(&text)?;
        let p = table.into_provider()?;
        if let Some(d) = g.dim {
            if d != p.dim() {
                return Err(Error::DimensionMismatch { expected: p.dim(), got: d }.into());
            }
        }
        p.check_degree(max_degree)?;
        return Ok(p);
    }
    let Some(text) = &g.weight else {
        return Err(Failure::input("either --weight or --moments is required"));
    };
    let w: WeightDescriptor = text.parse()?;
    let d = match (w.fixed_dim(), g.dim) {
        (Some(fixed), Some(d)) if fixed != d => {
            return Err(Error::BadDescriptor(format!("descriptor fixes d={fixed}, --dim gives {d}")).into())
        }
        (Some(fixed), _) => fixed,
        (None, Some(0)) => return Err(Failure::input("--dim must be positive")),
        (None, Some(d)) => d,
        (None, None) => 1,
    };
    Ok(MomentProvider::from_descriptor(&w, d, max_degree)?)
}

fn require_json(g: &Global, what: &str) -> Res<()> {
    if g.format != Format::Json {
        return Err(Failure::input(format!("{what} output is JSON only")));
    }
    Ok(())
}

fn positive(name: &str, v: usize) -> Res<()> {
    if v == 0 {
        return Err(Failure::input(format!("{name} must be at least 1")));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Res<Outcome> {
    let g = &cli.global;
    let tol = g.tol.resolve().map_err(Failure::input)?;
    match &cli.command {
        Command::Moments { degree } => cmd_moments(g, *degree),
        Command::Orthopoly { degree, flavor } => cmd_orthopoly(g, &tol, *degree, *flavor),
        Command::Zeros { degree } => cmd_zeros(g, &tol, *degree),
        Command::Cubature { degree, method } => cmd_cubature(g, &tol, *degree, *method),
        Command::Recover { levels } => cmd_recover(g, &tol, *levels),
        Command::ConvergentEval { level, z, from } => cmd_convergent_eval(g, &tol, *level, z, from.as_deref()),
        Command::Check { levels } => cmd_check(g, &tol, *levels),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_moments(g: &Global, n: usize) -> Res<Outcome> {
    let p = provider(g, 2 * n)?;
    let table = p.to_table(2 * n)?;
    let body = match g.format {
        Format::Json => to_json(&table),
        Format::Csv => {
            let mut s: String = (1..=table.d).map(|i| format!("alpha_{i},")).collect();
            s.push_str("value\n");
            for e in &table.entries {
                for a in e.alpha.exponents() {
                    let _ = write!(s, "{a},");
                }
                let _ = writeln!(s, "{}", num(e.value));
            }
            s
        }
        Format::Text => table.entries.iter().map(|e| format!("{} {}\n", e.alpha, num(e.value))).collect(),
    };
    Ok(Outcome::ok(body))
}

#[derive(Serialize)]
struct OrthopolyOut {
    weight: String,
    d: usize,
    degree: usize,
    flavor: Flavor,
    signatures: Vec<Vec<f64>>,
    orthogonality_residual: Option<f64>,
    /// `coefficients[k]`: monomials of degree `<= k` by the polynomials of degree `k`.
    coefficients: Vec<DenseMatrix>,
    recurrence: RecurrenceJson,
}

fn cmd_orthopoly(g: &Global, tol: &Tolerances, n: usize, flavor: FlavorArg) -> Res<Outcome> {
    require_json(g, "orthopoly")?;
    positive("--degree", n)?;
    let p = provider(g, 2 * n)?;
    let out = match flavor {
        FlavorArg::SignOrthonormal => {
            let basis = sign_orthonormal_basis(&p, n, tol.def)?;
            let rec = recurrence_from_l(&basis, &p, tol.def)?;
            OrthopolyOut {
                weight: p.descriptor().to_string(),
                d: p.dim(),
                degree: n,
                flavor: Flavor::SignOrthonormal,
                signatures: basis.signature.clone(),
                orthogonality_residual: Some(basis.orthogonality_residual()),
                coefficients: basis.coef.iter().map(DenseMatrix::from).collect(),
                recurrence: (&rec).into(),
            }
        }
        FlavorArg::Monic => {
            let monic = build_monic(&p, n, tol.def)?;
            let rec = recurrence_monic(&monic, tol.def)?;
            OrthopolyOut {
                weight: p.descriptor().to_string(),
                d: p.dim(),
                degree: n,
                flavor: Flavor::Monic,
                signatures: rec.signature.clone(),
                orthogonality_residual: None,
                coefficients: monic.coef.iter().map(DenseMatrix::from).collect(),
                recurrence: (&rec).into(),
            }
        }
    };
    Ok(Outcome::ok(to_json(&out)))
}

#[derive(Serialize)]
struct ZerosOut {
    weight: String,
    d: usize,
    n: usize,
    commutativity: CommutativityReport,
    zeros: ZeroSetJson,
}

fn cmd_zeros(g: &Global, tol: &Tolerances, n: usize) -> Res<Outcome> {
    positive("--degree", n)?;
    let p = provider(g, 2 * n)?;
    let basis = sign_orthonormal_basis(&p, n, tol.def)?;
    let rec = recurrence_from_l(&basis, &p, tol.def)?;
    let tj = build_truncated(&rec, n)?;
    let report = commutativity_report(&tj, tol.comm);
    let mut zs = common_zeros(&tj, &basis, tol, g.seed)?;
    simplicity_check(&mut zs, &basis, &basis.signature, tol.kernel);
    zs.ensure_simple()?;
    let zeros = ZeroSetJson::from(&zs);
    let body = match g.format {
        Format::Json => to_json(&ZerosOut { weight: p.descriptor().to_string(), d: p.dim(), n, commutativity: report, zeros }),
        Format::Csv | Format::Text => {
            let sep = if g.format == Format::Csv { "," } else { " " };
            let mut s = String::new();
            if g.format == Format::Csv {
                let d = p.dim();
                let head: Vec<String> = (1..=d)
                    .map(|i| format!("re_{i}"))
                    .chain((1..=d).map(|i| format!("im_{i}")))
                    .chain(["simple".to_string(), "residual".to_string()])
                    .collect();
                let _ = writeln!(s, "{}", head.join(sep));
            }
            for pt in &zeros.points {
                let cells: Vec<String> = pt
                    .re
                    .iter()
                    .chain(&pt.im)
                    .map(|&v| num(v))
                    .chain([pt.simple.to_string(), num(pt.residual)])
                    .collect();
                let _ = writeln!(s, "{}", cells.join(sep));
            }
            s
        }
    };
    Ok(Outcome::ok(body))
}

#[derive(Serialize)]
struct CubatureOut {
    weight: String,
    d: usize,
    n: usize,
    method: &'static str,
    rule: CubatureJson,
    exactness: ExactnessReport,
}

fn cmd_cubature(g: &Global, tol: &Tolerances, n: usize, method: Method) -> Res<Outcome> {
    positive("--degree", n)?;
    let p = provider(g, 2 * n)?;
    let rule: CubatureRule = match method {
        Method::Pipeline => {
            let basis = sign_orthonormal_basis(&p, n, tol.def)?;
            let rec = recurrence_from_l(&basis, &p, tol.def)?;
            let tj = build_truncated(&rec, n)?;
            let mut zs = common_zeros(&tj, &basis, tol, g.seed)?;
            simplicity_check(&mut zs, &basis, &basis.signature, tol.kernel);
            zs.ensure_simple()?;
            gauss_cubature(&zs, &basis, tol.kernel)?.sorted()
        }
        Method::ClosedForm => {
            let Some(WeightDescriptor::SymMap { base, d, sign }) =
                g.weight.as_deref().map(str::parse::<WeightDescriptor>).transpose()?
            else {
                return Err(Failure::input("--method closed-form needs a symmap weight"));
            };
            closed_form_symmap_rule(base, d, sign, n)?
        }
    };
    let exactness = rule.exactness(&p, 2 * n - 1)?;
    let diagnostic = (exactness.max_rel_dev > tol.cub)
        .then(|| format!("rule misses exactness: relative deviation {:e}", exactness.max_rel_dev));
    let body = match g.format {
        Format::Json => to_json(&CubatureOut {
            weight: p.descriptor().to_string(),
            d: p.dim(),
            n,
            method: match method {
                Method::Pipeline => "pipeline",
                Method::ClosedForm => "closed-form",
            },
            rule: (&rule).into(),
            exactness,
        }),
        Format::Text => rule.to_text(),
        Format::Csv => {
            let d = rule.dim();
            let head: Vec<String> = (1..=d)
                .map(|i| format!("re_{i}"))
                .chain((1..=d).map(|i| format!("im_{i}")))
                .chain(["weight".to_string()])
                .collect();
            let mut s = head.join(",") + "\n";
            for line in rule.to_text().lines().filter(|l| !l.starts_with('#')) {
                s.push_str(&line.replace(' ', ","));
                s.push('\n');
            }
            s
        }
    };
    Ok(Outcome { body, code: 0, diagnostic })
}

#[derive(Serialize)]
struct LevelDiagnostics {
    n: usize,
    nesting_dev: f64,
    gauss_weight_dev: f64,
    probe_dev: Option<f64>,
    fit_condition: f64,
    fit_residual: f64,
}

#[derive(Serialize)]
struct RecoverOut {
    weight: String,
    d: usize,
    mu0: f64,
    levels: Vec<LevelReport>,
    diagnostics: Vec<LevelDiagnostics>,
}

/// Subset of the `recover` output read back by `convergent-eval --from`.
#[derive(Deserialize)]
struct RecoverFile {
    levels: Vec<LevelReport>,
}

fn cmd_recover(g: &Global, tol: &Tolerances, levels: usize) -> Res<Outcome> {
    require_json(g, "recover")?;
    positive("--levels", levels)?;
    let p = provider(g, 2 * levels)?;
    let seq = continued_fraction_run(&p, levels, tol, g.seed)?;
    let out = RecoverOut {
        weight: p.descriptor().to_string(),
        d: seq.dim,
        mu0: seq.mu0,
        levels: seq.levels.iter().map(|l| l.report()).collect(),
        diagnostics: seq
            .levels
            .iter()
            .map(|l| LevelDiagnostics {
                n: l.n,
                nesting_dev: l.nesting_dev,
                gauss_weight_dev: l.gauss_weight_dev,
                probe_dev: l.coincidence.probe_dev,
                fit_condition: l.exp.condition,
                fit_residual: l.exp.fit_residual,
            })
            .collect(),
    };
    let failing = seq.levels.iter().find(|l| l.coincidence.first_mismatch.is_some()).map(|l| l.n);
    let mut outcome = Outcome::ok(to_json(&out));
    if let Some(n) = failing {
        outcome.code = EXIT_VERDICT;
        outcome.diagnostic = Some(format!("level {n} misses coincidence tolerance {COINCIDENCE_TOL:e}"));
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct EvalOut {
    level: usize,
    z: Vec<[f64; 2]>,
    value: [f64; 2],
}

fn cmd_convergent_eval(
    g: &Global,
    tol: &Tolerances,
    level: usize,
    z: &str,
    from: Option<&std::path::Path>,
) -> Res<Outcome> {
    require_json(g, "convergent-eval")?;
    positive("--level", level)?;
    let point = parse_point(z)?;
    let exp: ExponentialPolynomial = match from {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure { code: EXIT_INPUT, message: format!("{}: {e}", path.display()) })?;
            let file: RecoverFile = from_json(&text)?;
            let rep = file
                .levels
                .into_iter()
                .find(|l| l.n == level)
                .ok_or_else(|| Failure::input(format!("{} has no level {level}", path.display())))?;
            rep.into_exponential()?
        }
        None => {
            let p = provider(g, 2 * level)?;
            let mut seq = continued_fraction_run(&p, level, tol, g.seed)?;
            seq.levels.pop().expect("at least one level").exp
        }
    };
    let value: Complex64 = rational_eval(&exp, &point)?;
    let out = EvalOut { level, z: point.iter().map(|c| [c.re, c.im]).collect(), value: [value.re, value.im] };
    Ok(Outcome::ok(to_json(&out)))
}

#[derive(Serialize)]
struct Section<T> {
    verdict: bool,
    first_failing_level: Option<usize>,
    /// Why the section was not evaluated, if it was not.
    skipped: Option<String>,
    levels: Vec<T>,
}

impl<T> Section<T> {
    fn skipped(reason: &str) -> Self {
        Section { verdict: false, first_failing_level: None, skipped: Some(reason.to_string()), levels: Vec::new() }
    }
}

#[derive(Serialize)]
struct HankelLevel {
    n: usize,
    deviation: f64,
    scale: f64,
    verdict: bool,
    /// Two `(alpha, beta)` index pairs with equal `alpha + beta` whose entries disagree most.
    violated_pair: Option<[[Vec<u32>; 2]; 2]>,
}

#[derive(Serialize)]
struct CoincidenceLevel {
    n: usize,
    max_dev: f64,
    first_mismatch_alpha: Option<Vec<u32>>,
    probe_dev: Option<f64>,
    verdict: bool,
}

#[derive(Serialize)]
struct CheckOut {
    weight: String,
    d: usize,
    levels: usize,
    verdict: bool,
    failing_level: Option<usize>,
    definiteness: Section<DefinitenessEntry>,
    commutativity: Section<CommutativityReport>,
    hankel_schur: Section<HankelLevel>,
    coincidence: Section<CoincidenceLevel>,
}

fn first_fail<T>(levels: &[T], ok: impl Fn(&T) -> bool, n: impl Fn(&T) -> usize) -> Option<usize> {
    levels.iter().find(|l| !ok(l)).map(n)
}

fn cmd_check(g: &Global, tol: &Tolerances, levels: usize) -> Res<Outcome> {
    require_json(g, "check")?;
    positive("--levels", levels)?;
    let p = provider(g, 2 * levels)?;
    let entries = definiteness_scan(&p, levels, tol.def)?;
    let def_fail = first_fail(&entries, |e| e.definite, |e| e.n);
    let definiteness = Section { verdict: def_fail.is_none(), first_failing_level: def_fail, skipped: None, levels: entries };

    let mut code = 0;
    let mut diagnostic = None;
    let (commutativity, hankel_schur, coincidence) = if def_fail.is_some() {
        code = EXIT_VERDICT;
        diagnostic = Some(format!("moment matrix M_{} is not definite", def_fail.unwrap_or(0)));
        let why = "moment functional is not definite through the requested level";
        (Section::skipped(why), Section::skipped(why), Section::skipped(why))
    } else {
        let basis = sign_orthonormal_basis(&p, levels, tol.def)?;
        let rec = recurrence_from_l(&basis, &p, tol.def)?;
        let comm: Vec<CommutativityReport> = (1..=levels)
            .map(|n| Ok(commutativity_report(&build_truncated(&rec, n)?, tol.comm)))
            .collect::<Result<_, Error>>()?;
        let comm_fail = first_fail(&comm, |r| r.verdict, |r| r.n);
        let hankel: Vec<HankelLevel> = (1..=levels)
            .map(|n| {
                let r = hankel_schur_test(&p, n, tol.hankel)?;
                Ok(HankelLevel {
                    n,
                    deviation: r.deviation,
                    scale: r.scale,
                    verdict: r.verdict,
                    violated_pair: r.violated_pair.map(|((a, b), (c, d))| {
                        [[a.exponents().to_vec(), b.exponents().to_vec()], [c.exponents().to_vec(), d.exponents().to_vec()]]
                    }),
                })
            })
            .collect::<Result<_, Error>>()?;
        let hankel_fail = first_fail(&hankel, |r| r.verdict, |r| r.n);
        let commutativity = Section { verdict: comm_fail.is_none(), first_failing_level: comm_fail, skipped: None, levels: comm };
        let hankel_schur = Section { verdict: hankel_fail.is_none(), first_failing_level: hankel_fail, skipped: None, levels: hankel };

        let coincidence = if comm_fail.is_some() || hankel_fail.is_some() {
            code = EXIT_COMMUTE;
            let level = comm_fail.into_iter().chain(hankel_fail).min().unwrap_or(0);
            diagnostic = Some(format!("level {level}: the sequence has no associated continued fraction"));
            Section::skipped("commutativity or Hankel-Schur test failed")
        } else {
            match continued_fraction_run(&p, levels, tol, g.seed) {
                Ok(seq) => {
                    let rows: Vec<CoincidenceLevel> = seq
                        .levels
                        .iter()
                        .map(|l| CoincidenceLevel {
                            n: l.n,
                            max_dev: l.coincidence.max_dev,
                            first_mismatch_alpha: l.coincidence.first_mismatch.as_ref().map(|a| a.exponents().to_vec()),
                            probe_dev: l.coincidence.probe_dev,
                            verdict: l.coincidence.first_mismatch.is_none(),
                        })
                        .collect();
                    let fail = first_fail(&rows, |r| r.verdict, |r| r.n);
                    if let Some(n) = fail {
                        code = EXIT_VERDICT;
                        diagnostic = Some(format!("level {n} misses coincidence tolerance {COINCIDENCE_TOL:e}"));
                    }
                    Section { verdict: fail.is_none(), first_failing_level: fail, skipped: None, levels: rows }
                }
                Err(e) => {
                    code = exit_code(&e);
                    let level = match &e {
                        Error::LevelFailed { level, .. } => Some(*level),
                        _ => None,
                    };
                    diagnostic = Some(e.to_string());
                    Section { verdict: false, first_failing_level: level, skipped: Some(e.to_string()), levels: Vec::new() }
                }
            }
        };
        (commutativity, hankel_schur, coincidence)
    };

    let failing_level = [
        definiteness.first_failing_level,
        commutativity.first_failing_level,
        hankel_schur.first_failing_level,
        coincidence.first_failing_level,
    ]
    .into_iter()
    .flatten()
    .min();
    let out = CheckOut {
        weight: p.descriptor().to_string(),
        d: p.dim(),
        levels,
        verdict: code == 0,
        failing_level,
        definiteness,
        commutativity,
        hankel_schur,
        coincidence,
    };
    Ok(Outcome { body: to_json(&out), code, diagnostic })
}
