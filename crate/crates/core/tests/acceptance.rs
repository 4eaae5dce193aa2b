//! Acceptance criteria, one line each:
//!
//! 1. one-dimensional Legendre/Chebyshev regression against closed forms;
//! 2. moment coincidence of the convergents;
//! 3. Gaussian cubature exactness and closed-form agreement;
//! 4. commutativity and Hankel-Schur characterization;
//! 5. the signed Gegenbauer weight;
//! 6. Christoffel-Darboux residuals;
//! 7. invariant suites under a property-test harness.
//!
//! Runs without the libtest harness so the lines are always printed. Every
//! criterion runs even if an earlier one fails; the process exits nonzero if
//! any line reads FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvcf::cubature::{christoffel_darboux_residual, closed_form_symmap_rule, gauss_cubature, kernel, CubatureRule};
use mvcf::families::{pushforward_basis_check, signed_gegenbauer_ops, SymMapFamily};
use mvcf::index::{binomial, dim_total, homogeneous_indices};
use mvcf::jacobi::{build_truncated, common_zeros, commutativity_report, simplicity_check, ZeroSet};
use mvcf::momentrec::{continued_fraction_run, hankel_singular_values};
use mvcf::moments::{hankel_schur_test, moment_matrix};
use mvcf::orthopoly::{recurrence_from_l, sign_orthonormal_basis, PolyBasis, RecurrenceData, SignOrthoBasis};
use mvcf::{graded_monomials, shift_matrix, BaseWeight, MomentProvider, MultiIndex, SymSign, Tolerances, DEFAULT_SEED};

type Outcome = Result<String, String>;

struct Pipeline {
    provider: MomentProvider,
    basis: SignOrthoBasis,
    rec: RecurrenceData,
}

/// Moments, sign-orthonormal basis through `top` and its recurrence.
fn pipeline(desc: &str, d: usize, top: usize) -> Result<Pipeline, String> {
    let w = desc.parse().map_err(|e| format!("{desc}: {e}"))?;
    let provider = MomentProvider::from_descriptor(&w, d, 2 * top + 2).map_err(|e| format!("{desc}: {e}"))?;
    let tol = Tolerances::default();
    let basis = sign_orthonormal_basis(&provider, top, tol.def).map_err(|e| format!("{desc}: {e}"))?;
    let rec = recurrence_from_l(&basis, &provider, tol.def).map_err(|e| format!("{desc}: {e}"))?;
    Ok(Pipeline { provider, basis, rec })
}

fn zeros(p: &Pipeline, n: usize, seed: u64) -> Result<ZeroSet, String> {
    let tol = Tolerances::default();
    let tj = build_truncated(&p.rec, n).map_err(|e| e.to_string())?;
    let mut zs = common_zeros(&tj, &p.basis, &tol, seed).map_err(|e| e.to_string())?;
    simplicity_check(&mut zs, &p.basis, &p.basis.signature, tol.kernel);
    Ok(zs)
}

fn rule(p: &Pipeline, n: usize) -> Result<CubatureRule, String> {
    gauss_cubature(&zeros(p, n, DEFAULT_SEED)?, &p.basis, Tolerances::default().kernel).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Deviation relative to the reference, with a unit floor for values near zero.
fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn random_complex_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    (0..d).map(|_| Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0))).collect()
}

/// Legendre nodes and normalized weights by Newton iteration on the
/// three-term recurrence, independent of the moment pipeline.
fn legendre_reference(n: usize) -> Vec<(f64, f64)> {
    let eval = |t: f64| {
        let (mut p0, mut p1) = (1.0, t);
        for k in 1..n {
            let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
        (p1, dp)
    };
    let mut out: Vec<(f64, f64)> = (1..=n)
        .map(|k| {
            let mut t = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = eval(t);
                let step = p / dp;
                t -= step;
                if step.abs() < 1e-17 {
                    break;
                }
            }
            let (_, dp) = eval(t);
            (t, 1.0 / ((1.0 - t * t) * dp * dp))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn chebyshev_reference(n: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = (1..=n)
        .map(|k| ((std::f64::consts::PI * (2 * k - 1) as f64 / (2 * n) as f64).cos(), 1.0 / n as f64))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Off-diagonal Jacobi entries of the orthonormal recurrence, `x p_k = a_{k+1} p_{k+1} + a_k p_{k-1}`.
fn legendre_a(k: usize) -> f64 {
    let k = k as f64;
    k / (4.0 * k * k - 1.0).sqrt()
}

fn chebyshev_a(k: usize) -> f64 {
    if k == 1 {
        0.5f64.sqrt()
    } else {
        0.5
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (desc, a_ref, nodes_ref) in [
        ("legendre", legendre_a as fn(usize) -> f64, legendre_reference as fn(usize) -> Vec<(f64, f64)>),
        ("chebyshev", chebyshev_a, chebyshev_reference),
    ] {
        let p = pipeline(desc, 1, 8)?;
        for k in 0..8 {
            let a = p.rec.a[k][0][(0, 0)].abs();
            let b = p.rec.b[k][0][(0, 0)];
            let dev = rel(a, a_ref(k + 1)).max(b.abs());
            worst = worst.max(dev);
            ensure(dev <= 1e-10, || format!("{desc}: recurrence at degree {k} off by {dev:.2e}"))?;
        }
        for n in 1..=8 {
            let r = rule(&p, n)?;
            let reference = nodes_ref(n);
            ensure(r.len() == n, || format!("{desc} n={n}: {} nodes", r.len()))?;
            for ((z, w), (t, v)) in r.nodes.iter().zip(&r.weights).zip(&reference) {
                let dev = rel(z[0].re, *t).max(z[0].im.abs()).max((w - v).abs() / v.abs());
                worst = worst.max(dev);
                ensure(dev <= 1e-10, || format!("{desc} n={n}: node {t} off by {dev:.2e}"))?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?} exceeds 1 s"))?;
    Ok(format!("max relative deviation {worst:.2e}, runtime {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    for (desc, d, levels) in [
        ("legendre", 1, 4),
        ("symmap:base=chebyshev,d=2,sign=-0.5", 2, 3),
        ("symmap:base=chebyshev,d=2,sign=+0.5", 2, 3),
    ] {
        let start = Instant::now();
        let w = desc.parse().map_err(|e| format!("{e}"))?;
        let provider = MomentProvider::from_descriptor(&w, d, 2 * levels).map_err(|e| e.to_string())?;
        let seq = continued_fraction_run(&provider, levels, &Tolerances::default(), DEFAULT_SEED)
            .map_err(|e| format!("{desc}: {e}"))?;
        let mut max_dev = 0.0f64;
        let mut probes = Vec::new();
        for l in &seq.levels {
            max_dev = max_dev.max(l.coincidence.max_dev);
            ensure(l.coincidence.max_dev <= 1e-8, || {
                format!("{desc} level {}: deviation {:.2e} at {:?}", l.n, l.coincidence.max_dev, l.coincidence.first_mismatch)
            })?;
            probes.push(format!("{:.1e}", l.coincidence.probe_dev.unwrap_or(f64::NAN)));
        }
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(10), || format!("{desc}: runtime {elapsed:?} exceeds 10 s"))?;
        lines.push(format!("{desc} n<={levels}: max dev {max_dev:.1e}, |alpha|=2n dev [{}]", probes.join(", ")));
    }
    Ok(lines.join("; "))
}

const SYMMAP: [(BaseWeight, SymSign); 4] = [
    (BaseWeight::Chebyshev, SymSign::MinusHalf),
    (BaseWeight::Chebyshev, SymSign::PlusHalf),
    (BaseWeight::Legendre, SymSign::MinusHalf),
    (BaseWeight::Legendre, SymSign::PlusHalf),
];

fn criterion_3() -> Outcome {
    let mut worst_exact = 0.0f64;
    let mut worst_agree = 0.0f64;
    let mut rules = 0;
    for (desc, d, nmax) in [("legendre", 1, 8), ("chebyshev", 1, 8), ("gegenbauer:lambda=0.5,mu=1", 1, 6)] {
        let p = pipeline(desc, d, nmax)?;
        for n in 1..=nmax {
            let r = rule(&p, n)?;
            let rep = r.exactness(&p.provider, 2 * n - 1).map_err(|e| e.to_string())?;
            worst_exact = worst_exact.max(rep.max_rel_dev);
            rules += 1;
            ensure(rep.max_rel_dev <= 1e-9, || format!("{desc} n={n}: exactness {:.2e}", rep.max_rel_dev))?;
        }
    }
    for (base, sign) in SYMMAP {
        let desc = format!("symmap:base={base},d=2,sign={sign}");
        let p = pipeline(&desc, 2, 3)?;
        for n in 1..=3 {
            let eig = rule(&p, n)?;
            let rep = eig.exactness(&p.provider, 2 * n - 1).map_err(|e| e.to_string())?;
            worst_exact = worst_exact.max(rep.max_rel_dev);
            rules += 1;
            ensure(rep.max_rel_dev <= 1e-9, || format!("{desc} n={n}: exactness {:.2e}", rep.max_rel_dev))?;
            let cf = closed_form_symmap_rule(base, 2, sign, n).map_err(|e| e.to_string())?;
            ensure(cf.len() == eig.len(), || format!("{desc} n={n}: {} vs {} nodes", eig.len(), cf.len()))?;
            for k in 0..cf.len() {
                let node = (0..2).map(|j| (eig.nodes[k][j] - cf.nodes[k][j]).norm()).fold(0.0, f64::max);
                let dev = node.max((eig.weights[k] - cf.weights[k]).abs());
                worst_agree = worst_agree.max(dev);
                ensure(dev <= 1e-8, || format!("{desc} n={n}: closed form differs by {dev:.2e} at node {k}"))?;
            }
        }
    }
    Ok(format!("{rules} rules, exactness {worst_exact:.1e}, closed-form agreement {worst_agree:.1e}"))
}

fn criterion_4() -> Outcome {
    let tol = Tolerances::default();
    let mut worst_comm = 0.0f64;
    let mut worst_hankel = 0.0f64;
    for sign in ["-0.5", "+0.5"] {
        let desc = format!("symmap:base=chebyshev,d=2,sign={sign}");
        let p = pipeline(&desc, 2, 3)?;
        for n in 1..=3 {
            let tj = build_truncated(&p.rec, n).map_err(|e| e.to_string())?;
            let rep = commutativity_report(&tj, tol.comm);
            worst_comm = worst_comm.max(rep.max_commutator.max(rep.max_top_block));
            ensure(rep.verdict, || format!("{desc} n={n}: commutator {:.2e}", rep.max_commutator))?;
            let h = hankel_schur_test(&p.provider, n, 1e-9).map_err(|e| e.to_string())?;
            worst_hankel = worst_hankel.max(h.deviation / h.scale);
            ensure(h.verdict, || format!("{desc} n={n}: Hankel deviation {:.2e}", h.deviation / h.scale))?;
        }
    }
    let p = pipeline("legendre", 2, 2)?;
    let h1 = hankel_schur_test(&p.provider, 1, 1e-9).map_err(|e| e.to_string())?;
    let c1 = commutativity_report(&build_truncated(&p.rec, 1).map_err(|e| e.to_string())?, tol.comm);
    ensure(h1.verdict && c1.verdict, || "product Legendre should pass at n=1".into())?;
    let c2 = commutativity_report(&build_truncated(&p.rec, 2).map_err(|e| e.to_string())?, tol.comm);
    let h2 = hankel_schur_test(&p.provider, 2, 1e-9).map_err(|e| e.to_string())?;
    ensure(!c2.verdict, || "product Legendre commutes at n=2".into())?;
    ensure(!h2.verdict, || "product Legendre passes the Hankel test at n=2".into())?;
    let pair = c2.pairs.iter().find(|p| p.commutator > tol.comm || p.top_block > tol.comm).ok_or("no violated pair")?;
    let (x, y) = h2.violated_pair.clone().ok_or("no violated Hankel pair")?;
    Ok(format!(
        "symmap Chebyshev commutator {worst_comm:.1e}, Hankel {worst_hankel:.1e}; product Legendre n=2 violates ({},{}) and {:?}+{:?} vs {:?}+{:?}",
        pair.i,
        pair.j,
        x.0.exponents(),
        x.1.exponents(),
        y.0.exponents(),
        y.1.exponents()
    ))
}

fn criterion_5() -> Outcome {
    let (lambda, mu) = (0.5, 1.0);
    let p = pipeline("gegenbauer:lambda=0.5,mu=1", 1, 6)?;
    ensure(p.basis.has_negative_signature(), || "no -1 signature entry through degree 6".into())?;
    let negatives: Vec<usize> = (0..=6).filter(|&k| p.basis.signature[k][0] < 0.0).collect();
    let mut worst_zero = 0.0f64;
    let mut worst_exact = 0.0f64;
    for n in 1..=6 {
        let zs = zeros(&p, n, DEFAULT_SEED)?;
        ensure(zs.is_complete(), || format!("n={n}: {} zeros", zs.points.len()))?;
        ensure(zs.ensure_simple().is_ok(), || format!("n={n}: zeros are not simple"))?;
        let closed = signed_gegenbauer_ops(lambda, mu, n).map_err(|e| e.to_string())?;
        for (pt, want) in zs.points.iter().zip(&closed.zeros) {
            let t = pt.z[0];
            ensure(pt.is_real() && t.re.abs() <= 1.0 + 1e-12, || format!("n={n}: zero {t} not real in [-1,1]"))?;
            worst_zero = worst_zero.max((t.re - want).abs());
            ensure((t.re - want).abs() <= 1e-7, || format!("n={n}: zero {} vs closed form {want}", t.re))?;
        }
        let r = gauss_cubature(&zs, &p.basis, Tolerances::default().kernel).map_err(|e| e.to_string())?;
        let rep = r.exactness(&p.provider, 2 * n - 1).map_err(|e| e.to_string())?;
        worst_exact = worst_exact.max(rep.max_rel_dev);
        ensure(rep.max_rel_dev <= 1e-8, || format!("n={n}: exactness {:.2e}", rep.max_rel_dev))?;
    }
    Ok(format!(
        "zeros match closed form to {worst_zero:.1e}, negative signature at degrees {negatives:?}, exactness {worst_exact:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let families: [(&str, usize); 8] = [
        ("legendre", 1),
        ("chebyshev", 1),
        ("gegenbauer:lambda=0.5,mu=1", 1),
        ("legendre", 2),
        ("symmap:base=chebyshev,d=2,sign=-0.5", 2),
        ("symmap:base=chebyshev,d=2,sign=+0.5", 2),
        ("symmap:base=legendre,d=2,sign=-0.5", 2),
        ("symmap:base=legendre,d=2,sign=+0.5", 2),
    ];
    let n = 3;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xCD);
    for (desc, d) in families {
        let p = pipeline(desc, d, n + 2)?;
        for _ in 0..20 {
            let x = random_complex_point(&mut rng, d);
            let y = random_complex_point(&mut rng, d);
            for j in 0..d {
                let r = christoffel_darboux_residual(&p.basis, &p.rec, n, &x, &y, j).map_err(|e| e.to_string())?;
                worst = worst.max(r);
                ensure(r <= 1e-9, || format!("{desc} (d={d}) j={}: residual {r:.2e}", j + 1))?;
            }
        }
    }
    Ok(format!("8 families x 20 pairs x every j, max residual {worst:.1e}"))
}

// ---- criterion 7: invariant suites --------------------------------------

const FAMILIES: [(&str, usize, bool); 10] = [
    ("legendre", 1, true),
    ("chebyshev", 1, true),
    ("gegenbauer:lambda=0.5,mu=1", 1, true),
    ("symmap:base=chebyshev,d=2,sign=-0.5", 2, true),
    ("symmap:base=chebyshev,d=2,sign=+0.5", 2, true),
    ("symmap:base=legendre,d=2,sign=-0.5", 2, true),
    ("symmap:base=legendre,d=2,sign=+0.5", 2, true),
    ("legendre", 2, false),
    ("chebyshev", 2, false),
    ("legendre", 3, false),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(fail(msg()))
    }
}

fn index_suite() -> Result<(), TestCaseError> {
    runner(32).run(&(1usize..=4, 0usize..=8), |(d, n)| {
        let g = graded_monomials(d, n);
        for k in 0..=n {
            check(g.block(k).len() == binomial(k + d - 1, d - 1), || format!("block {k} of d={d}"))?;
        }
        for (p, a) in g.indices().iter().enumerate() {
            check(g.position(a) == Some(p), || format!("round trip at {p}"))?;
        }
        if n < 8 {
            let rows = homogeneous_indices(d, n);
            let cols = homogeneous_indices(d, n + 1);
            for i in 0..d {
                let l = shift_matrix(d, n, i);
                for (r, a) in rows.iter().enumerate() {
                    let hits: Vec<usize> = (0..cols.len()).filter(|&col| l[(r, col)] != 0.0).collect();
                    check(hits.len() == 1 && cols[hits[0]] == a.bump(i), || format!("shift row {r}, i={i}"))?;
                }
            }
        }
        Ok(())
    }).map_err(flatten)
}

fn moments_suite() -> Result<(), TestCaseError> {
    runner(16).run(&(0usize..FAMILIES.len(), 1usize..=3), |(f, n)| {
        let (desc, d, _) = FAMILIES[f];
        let p = MomentProvider::from_descriptor(&desc.parse().unwrap(), d, 2 * n).map_err(|e| fail(e.to_string()))?;
        let mm = moment_matrix(&p, n).map_err(|e| fail(e.to_string()))?;
        let idx = mm.basis.indices();
        let mut seen: std::collections::HashMap<MultiIndex, f64> = Default::default();
        for (r, a) in idx.iter().enumerate() {
            for (col, b) in idx.iter().enumerate() {
                let v = mm.full[(r, col)];
                let prev = *seen.entry(a.add(b)).or_insert(v);
                check(prev.to_bits() == v.to_bits(), || format!("{desc}: Hankel entry {:?}", a.add(b)))?;
            }
        }
        if !desc.starts_with("symmap") && !desc.starts_with("gegenbauer") && d > 1 {
            for a in mm.basis.indices() {
                let mut rev = a.exponents().to_vec();
                rev.reverse();
                let x = p.moment(a).unwrap();
                let y = p.moment(&MultiIndex::new(rev)).unwrap();
                check((x - y).abs() <= 1e-13 * x.abs().max(1e-300), || format!("{desc}: permutation at {a:?}"))?;
            }
        }
        Ok(())
    })
    .map_err(flatten)?;
    for base in ["legendre", "chebyshev"] {
        let sym = MomentProvider::from_descriptor(&format!("symmap:base={base},d=1,sign=-0.5").parse().unwrap(), 1, 12)
            .map_err(|e| fail(e.to_string()))?;
        let plain = MomentProvider::from_descriptor(&base.parse().unwrap(), 1, 12).unwrap();
        for k in 0..=12u32 {
            let a = MultiIndex::new(vec![k]);
            let (x, y) = (sym.moment(&a).unwrap(), plain.moment(&a).unwrap());
            check((x - y).abs() <= 1e-13 * y.abs().max(1e-300), || format!("{base}: pushforward at {k}: {x} vs {y}"))?;
        }
    }
    Ok(())
}

fn orthopoly_suite() -> Result<(), TestCaseError> {
    runner(16).run(&(0usize..FAMILIES.len(), 1usize..=5, any::<u64>()), |(f, n, seed)| {
        let (desc, d, _) = FAMILIES[f];
        let n = if d == 3 { n.min(4) } else { n };
        let p = pipeline(desc, d, n).map_err(fail)?;
        let orth = p.basis.orthogonality_residual();
        check(orth <= 1e-10, || format!("{desc} n={n}: orthogonality {orth:.2e}"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let z = random_complex_point(&mut rng, d);
            let direct = p.basis.evaluate(&z);
            let r = p.rec.three_term_residual(&direct, &z);
            check(r <= 1e-9, || format!("{desc} n={n}: three-term residual {r:.2e}"))?;
            let regen = p.rec.evaluate_recursive(&z);
            for (a, b) in direct.iter().zip(&regen) {
                let dev = (a - b).norm() / a.norm().max(1.0);
                check(dev <= 1e-9, || format!("{desc} n={n}: recursive evaluation {dev:.2e}"))?;
            }
        }
        Ok(())
    })
    .map_err(flatten)
}

fn jacobi_and_cubature_suite() -> Result<(), TestCaseError> {
    runner(16).run(&(0usize..7, 1usize..=3, any::<u64>()), |(f, n, seed)| {
        let (desc, d, _) = FAMILIES[f];
        let n = if d == 1 { 2 * n } else { n };
        let p = pipeline(desc, d, n).map_err(fail)?;
        let zs = zeros(&p, n, DEFAULT_SEED).map_err(fail)?;
        check(zs.is_complete() && !zs.any_defective(), || format!("{desc} n={n}: {} zeros", zs.points.len()))?;
        for pt in &zs.points {
            if !pt.is_real() {
                let conj: Vec<Complex64> = pt.z.iter().map(|c| c.conj()).collect();
                let paired = zs.points.iter().any(|q| q.z.iter().zip(&conj).all(|(a, b)| (a - b).norm() <= 1e-8));
                check(paired, || format!("{desc} n={n}: conjugate of {:?} missing", pt.z))?;
            }
        }
        let other = zeros(&p, n, seed).map_err(fail)?;
        for (a, b) in zs.points.iter().zip(&other.points) {
            let dev = a.z.iter().zip(&b.z).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            check(dev <= 1e-8, || format!("{desc} n={n}: seed {seed} moves a zero by {dev:.2e}"))?;
        }
        let r = gauss_cubature(&zs, &p.basis, Tolerances::default().kernel).map_err(|e| fail(e.to_string()))?;
        let rep = r.exactness(&p.provider, 2 * n - 1).map_err(|e| fail(e.to_string()))?;
        check(rep.max_rel_dev <= 1e-9, || format!("{desc} n={n}: exactness {:.2e}", rep.max_rel_dev))?;
        let positive = !desc.starts_with("gegenbauer");
        check(!positive || r.weights.iter().all(|&w| w > 0.0), || format!("{desc} n={n}: non-positive weight"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_complex_point(&mut rng, d);
        let y = random_complex_point(&mut rng, d);
        let (kxy, kyx) = (kernel(&p.basis, n, &x, &y), kernel(&p.basis, n, &y, &x));
        check((kxy - kyx.conj()).norm() <= 1e-12 * kxy.norm().max(1.0), || format!("{desc}: kernel symmetry"))?;
        let coef: Vec<f64> = (0..dim_total(d, 2 * n - 1)).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = graded_monomials(d, 2 * n - 1);
        let value = r.integrate(|z| g.monomials(z).iter().zip(&coef).map(|(m, &w)| m * w).sum());
        check(value.im.abs() <= 1e-10 * value.norm().max(1.0), || format!("{desc}: imaginary part {}", value.im))?;
        Ok(())
    })
    .map_err(flatten)
}

fn momentrec_suite() -> Result<(), TestCaseError> {
    runner(8).run(&(0usize..7, 1usize..=3), |(f, levels)| {
        let (desc, d, _) = FAMILIES[f];
        let levels = if d == 1 { levels + 1 } else { levels };
        let provider = MomentProvider::from_descriptor(&desc.parse().unwrap(), d, 2 * levels).unwrap();
        let seq = continued_fraction_run(&provider, levels, &Tolerances::default(), DEFAULT_SEED)
            .map_err(|e| fail(format!("{desc}: {e}")))?;
        for l in &seq.levels {
            let n = l.n;
            check(l.nesting_dev <= 1e-9, || format!("{desc} n={n}: nesting {:.2e}", l.nesting_dev))?;
            check(l.coincidence.max_dev <= 1e-8, || format!("{desc} n={n}: coincidence {:.2e}", l.coincidence.max_dev))?;
            check(l.gauss_weight_dev <= 1e-8, || format!("{desc} n={n}: Gauss weights {:.2e}", l.gauss_weight_dev))?;
            let im = l.exp.imaginary_residue(2 * n);
            check(im <= 1e-10, || format!("{desc} n={n}: imaginary residue {im:.2e}"))?;
            let sv = hankel_singular_values(&l.provider, n).map_err(|e| fail(e.to_string()))?;
            let r = dim_total(d, n - 1);
            let tail = sv.get(r).copied().unwrap_or(0.0);
            check(tail <= 1e-8 * sv[0], || format!("{desc} n={n}: Hankel rank tail {:.2e}", tail / sv[0]))?;
        }
        Ok(())
    })
    .map_err(flatten)
}

fn families_suite() -> Result<(), TestCaseError> {
    runner(8).run(&(0usize..4, 1usize..=3, any::<u64>()), |(f, n, seed)| {
        let (base, sign) = SYMMAP[f];
        let family = SymMapFamily { base, d: 2, sign };
        let dev = pushforward_basis_check(family, n, seed).map_err(|e| fail(e.to_string()))?;
        check(dev <= 1e-8, || format!("{base} {sign} n={n}: span residual {dev:.2e}"))?;
        Ok(())
    })
    .map_err(flatten)
}

fn flatten(e: TestError<impl std::fmt::Debug>) -> TestCaseError {
    match e {
        TestError::Fail(reason, input) => fail(format!("{reason} (input {input:?})")),
        TestError::Abort(reason) => fail(format!("aborted: {reason}")),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let suites: [(&str, fn() -> Result<(), TestCaseError>); 6] = [
        ("index", index_suite),
        ("moments", moments_suite),
        ("orthopoly", orthopoly_suite),
        ("jacobi+cubature", jacobi_and_cubature_suite),
        ("momentrec", momentrec_suite),
        ("families", families_suite),
    ];
    for (name, suite) in suites {
        suite().map_err(|e| format!("{name}: {e}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("runtime {elapsed:?} exceeds 2 minutes"))?;
    Ok(format!("6 suites green in {elapsed:.2?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1D classical regression", criterion_1),
        ("moment coincidence", criterion_2),
        ("cubature exactness", criterion_3),
        ("commutativity and Hankel-Schur", criterion_4),
        ("signed Gegenbauer weight", criterion_5),
        ("Christoffel-Darboux", criterion_6),
        ("invariant suites", criterion_7),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", k + 1),
            Err(why) => {
                println!("criterion {} FAIL {name}: {why}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
