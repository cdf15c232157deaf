//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use conetri::bench::{run_bench, BenchConfig};
use conetri::bpft::{find_avoiding, run_bpft, TriangulationState};
use conetri::cone::{SimplicialCone, DEFAULT_HILBERT_CAP};
use conetri::format::TriangulationFile;
use conetri::generators::{prime_example, random_cone_where, verify_prime_example_property, ConeSpec};
use conetri::linalg::{determinant, smith_normal_form, solve_rational, IntMatrix, RationalVector};
use conetri::numtheory::{factorize, h_sequence, p_max, threshold_exceeded, threshold_log, Phi};
use conetri::precise::Real;
use conetri::unimodular::{pipeline_finres, prime_transfer, Strategy};
use conetri::verify::{
    audit_bpft_bounds, audit_unimodular_bounds, check_f_triangulation, check_partition, unimodular_exponent, Outcome,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

/// Δ-coordinates of `v` in `root` by solving the linear system directly.
fn coords_oracle(root: &SimplicialCone, v: &[BigInt]) -> Vec<BigRational> {
    solve_rational(root.generators(), &RationalVector::from_integers(v))
        .expect("root is nonsingular")
        .into_inner()
}

/// Dilation of `v` in `root`, or `None` if `v` lies outside.
fn dilation_oracle(root: &SimplicialCone, v: &[BigInt]) -> Option<BigRational> {
    let q = coords_oracle(root, v);
    if q.iter().any(Signed::is_negative) {
        return None;
    }
    Some(q.into_iter().fold(BigRational::zero(), |a, b| a + b))
}

fn is_odd_prime_oracle(z: &BigInt) -> bool {
    if z <= &big(2) {
        return false;
    }
    let mut k = big(2);
    while &k * &k <= *z {
        if (z % &k).is_zero() {
            return false;
        }
        k += 1;
    }
    true
}

/// `φ(n) = ld n − Ω(n)` as `(n, Ω(n))`, from a trial-division oracle.
fn omega_oracle(n: &BigInt) -> u64 {
    let mut n = n.clone();
    let mut count = 0;
    let mut k = big(2);
    while &k * &k <= n {
        while (&n % &k).is_zero() {
            n /= &k;
            count += 1;
        }
        k += 1;
    }
    if n > BigInt::one() {
        count += 1;
    }
    count
}

/// `φ(a) ≤ φ(b) − 1` ⟺ `a · 2^Ω(b) · 2 ≤ b · 2^Ω(a)`.
fn phi_drop_oracle(a: &BigInt, b: &BigInt) -> bool {
    let (oa, ob) = (omega_oracle(a), omega_oracle(b));
    (a << (ob + 1)) <= (b << oa)
}

/// `χ ≤ φ(μ) − 1` ⟺ `2^(χ + 1 + Ω(μ)) ≤ μ`.
fn chi_oracle(chi: i64, mu: &BigInt) -> bool {
    let e = chi + 1 + omega_oracle(mu) as i64;
    if e < 0 {
        true
    } else {
        (BigInt::one() << e as u64) <= *mu
    }
}

struct BpftRun {
    root: SimplicialCone,
    state: TriangulationState,
}

fn criterion_one() -> (Verdict, Vec<BpftRun>) {
    let start = Instant::now();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for i in 0..200u64 {
        let d = if i < 100 { 2 } else { 3 };
        let spec = ConeSpec::random(d, 10_000 + i, 20);
        let root = random_cone_where(&spec, |c| {
            p_max(c.multiplicity()).is_ok_and(|p| threshold_exceeded(&p, d))
        })
        .expect("seeded cone");
        match run_bpft(&root) {
            Ok(state) => {
                if !check_f_triangulation(&state.current_cones(), &threshold_log(d)) {
                    failures.push(format!("seed {} not an f-triangulation", 10_000 + i));
                }
                runs.push(BpftRun { root, state });
            }
            Err(e) => failures.push(format!("seed {}: {e}", 10_000 + i)),
        }
    }
    let elapsed = start.elapsed();
    let in_time = elapsed < Duration::from_secs(300);
    let pieces: usize = runs.iter().map(|r| r.state.current_ids().len()).sum();
    let steps: usize = runs.iter().map(|r| r.state.steps().len()).sum();
    (
        verdict(
            failures.is_empty() && in_time && runs.len() == 200,
            format!(
                "{} runs, {steps} subdivisions, {pieces} final cones, {:.1}s{}",
                runs.len(),
                elapsed.as_secs_f64(),
                if failures.is_empty() {
                    String::new()
                } else {
                    format!("; failures: {:?}", &failures[..failures.len().min(5)])
                }
            ),
        ),
        runs,
    )
}

fn criterion_two(runs: &[BpftRun]) -> Verdict {
    let mut checked = 0;
    let mut violations = 0;
    for run in runs {
        let d = run.root.dimension();
        let mut seen = BTreeSet::new();
        for lc in run.state.ancestry() {
            for (&s, v) in lc.xi.range(0..) {
                if v.iter().all(Zero::is_zero) || !seen.insert((s, v.clone())) {
                    continue;
                }
                checked += 1;
                let bound = BigRational::from_integer(big(d as i64) << s as u64);
                match dilation_oracle(&run.root, v) {
                    Some(dil) if dil <= bound => {}
                    _ => violations += 1,
                }
            }
        }
        let report = &audit_bpft_bounds(&run.state)[0];
        if report.violations > 0 {
            violations += 1;
        }
    }
    verdict(violations == 0, format!("{checked} labeled vectors, {violations} violations"))
}

fn criterion_three(runs: &[BpftRun]) -> Verdict {
    let mut edges = 0;
    let mut cones = 0;
    let mut violations = 0;
    for run in runs {
        let ancestry = run.state.ancestry();
        for (parent, child) in run.state.provenance().edges() {
            edges += 1;
            let (pm, cm) = (ancestry[parent].cone.multiplicity(), ancestry[child].cone.multiplicity());
            let exact = Phi::of(cm).unwrap().le_plus(&Phi::of(pm).unwrap(), -1);
            if !phi_drop_oracle(cm, pm) || !exact {
                violations += 1;
            }
        }
        let mu = run.root.multiplicity();
        for lc in ancestry {
            cones += 1;
            if !chi_oracle(lc.chi(), mu) {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("{edges} edges, {cones} cones, {violations} violations"),
    )
}

fn criterion_four(runs: &[BpftRun]) -> Verdict {
    let mut elements = 0;
    let mut cones = 0;
    let mut violations = 0;
    let cap = BigInt::from(DEFAULT_HILBERT_CAP);
    for run in runs {
        let d = run.root.dimension() as i64;
        let bound = BigRational::new(run.root.multiplicity() * big(d), big(4));
        for lc in run.state.current() {
            if lc.cone.multiplicity() > &cap {
                continue;
            }
            cones += 1;
            let basis = lc.cone.hilbert_basis(DEFAULT_HILBERT_CAP).expect("under cap");
            for h in &basis.elements {
                elements += 1;
                match dilation_oracle(&run.root, h) {
                    Some(dil) if dil <= bound => {}
                    _ => violations += 1,
                }
            }
        }
    }
    verdict(
        violations == 0 && cones > 0,
        format!("{cones} final cones, {elements} Hilbert basis elements, {violations} violations"),
    )
}

fn criterion_five() -> Verdict {
    let mut bad = Vec::new();
    for d in [2usize, 4, 6, 10, 12] {
        let c = prime_example(d).expect("d + 1 prime");
        if !verify_prime_example_property(&c, d) {
            bad.push(d);
        }
        // independent recount: each nonzero class j·(1/(d+1))·(1, …) has coefficient set {1..d}
        let m = (d + 1) as i64;
        for j in 1..m {
            let coeffs: BTreeSet<i64> = (1..=d as i64).map(|k| (j * k).rem_euclid(m)).collect();
            if coeffs != (1..m).collect::<BTreeSet<_>>() {
                bad.push(d);
            }
        }
    }
    verdict(bad.is_empty(), format!("d in {{2,4,6,10,12}}; failing: {bad:?}"))
}

fn criterion_six() -> Verdict {
    let mut failures = Vec::new();
    let mut total = 0;
    for (d, count, min_p, base) in [(2usize, 100u64, 13i64, 20_000u64), (3, 50, 47, 30_000)] {
        for i in 0..count {
            let spec = ConeSpec::random(d, base + i, 20);
            let c = random_cone_where(&spec, |c| p_max(c.multiplicity()).is_ok_and(|p| p >= big(min_p)))
                .expect("seeded cone");
            let p = p_max(c.multiplicity()).unwrap();
            let g = c.quotient_group().unwrap();
            let all: Vec<usize> = (0..d).collect();
            total += 1;
            match find_avoiding(&g, &p, &all) {
                Ok(e) => {
                    let z = e.scaled_coeffs(&p).expect("order p");
                    let point_ok = coords_oracle(&c, &e.lattice_point)
                        .iter()
                        .zip(&z)
                        .all(|(q, zi)| q * BigRational::from_integer(p.clone()) == BigRational::from_integer(zi.clone()));
                    if e.is_zero() || z.iter().any(is_odd_prime_oracle) || !point_ok {
                        failures.push(format!("seed {}: bad element", base + i));
                    }
                }
                Err(err) => failures.push(format!("seed {}: {err}", base + i)),
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!("{total} cones, {} failures {:?}", failures.len(), &failures[..failures.len().min(5)]),
    )
}

fn criterion_seven() -> Verdict {
    let mut transfers = 0;
    let mut violations = Vec::new();
    let mut shrunk = 0;
    for i in 0..50u64 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let spec = ConeSpec::random(d, 40_000 + i, 6).with_mu_range(2, 200);
        let c = random_cone_where(&spec, |_| true).expect("seeded cone");
        let mu = c.multiplicity().clone();
        let primes: Vec<BigInt> = factorize(&mu).unwrap().primes().cloned().collect();
        for p in primes {
            transfers += 1;
            let (pieces, cert) = match prime_transfer(&c, &p) {
                Ok(x) => x,
                Err(e) => {
                    violations.push(format!("seed {} p {p}: {e}", 40_000 + i));
                    continue;
                }
            };
            let p_pow = p.pow(d as u32);
            for (a, w) in cert.coefficient_matrices.iter().zip(&cert.raw_generators) {
                // det((1/p) A) = det(A) / p^d must equal 1/p
                if BigRational::new(determinant(a).unwrap(), p_pow.clone()) != BigRational::new(BigInt::one(), p.clone()) {
                    violations.push(format!("seed {} p {p}: det(A/p) wrong", 40_000 + i));
                }
                if determinant(w).unwrap().abs() * &p != mu {
                    violations.push(format!("seed {} p {p}: mu(D) * p != mu(C)", 40_000 + i));
                }
                for row in w.row_iter() {
                    match dilation_oracle(&c, row) {
                        Some(dil) if &dil <= cert.measured_k.value() => {}
                        _ => violations.push(format!("seed {} p {p}: generator beyond measured k", 40_000 + i)),
                    }
                }
            }
            shrunk += pieces
                .iter()
                .filter(|piece| piece.multiplicity() * &p != mu)
                .count();
            if !check_partition(&c, &pieces, 500, i).is_valid() {
                violations.push(format!("seed {} p {p}: pieces do not partition", 40_000 + i));
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{transfers} transfers, {} violations {:?}; {shrunk} piece(s) with non-primitive raw generators",
            violations.len(),
            &violations[..violations.len().min(5)]
        ),
    )
}

fn criterion_eight() -> Verdict {
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut pieces = 0;
    let mut worst_ratio = f64::MIN;
    for i in 0..100u64 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let spec = ConeSpec::random(d, 50_000 + i, 8).with_mu_range(2, 500);
        let c = random_cone_where(&spec, |_| true).expect("seeded cone");
        for s in Strategy::ALL {
            runs += 1;
            let t = match pipeline_finres(&c, s) {
                Ok(t) => t,
                Err(e) => {
                    failures.push(format!("seed {} {s}: {e}", 50_000 + i));
                    continue;
                }
            };
            pieces += t.len();
            if t.pieces.iter().any(|p| determinant(p.generators()).unwrap().abs() != BigInt::one()) {
                failures.push(format!("seed {} {s}: non-unimodular piece", 50_000 + i));
            }
            let v = check_partition(&c, &t.pieces, 10_000, 50_000 + i);
            if v.covered_once != 10_000 || !v.is_valid() {
                failures.push(format!("seed {} {s}: partition {v:?}", 50_000 + i));
            }
            let report = audit_unimodular_bounds(&t, &c);
            if report.outcome != Outcome::Satisfied {
                failures.push(format!("seed {} {s}: bound violated", 50_000 + i));
            }
            let measured = t
                .pieces
                .iter()
                .flat_map(|p| p.generators().to_rows())
                .filter_map(|g| dilation_oracle(&c, &g))
                .max()
                .unwrap();
            if measured != *t.max_dilation.value() {
                failures.push(format!("seed {} {s}: max dilation mismatch", 50_000 + i));
            }
            let ratio = Real::from_rational(&measured).ln().to_f64()
                - (unimodular_exponent(d).to_f64() * Real::from_int(c.multiplicity().clone()).ln().to_f64()
                    + (d as f64 / 4.0).ln());
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    // implied exponent column of the bench
    let mut rows_checked = 0;
    for d in [2usize, 3] {
        let rows = run_bench(&BenchConfig::new(d, 20, 60_000, 6)).expect("bench runs");
        for row in rows {
            rows_checked += 1;
            let mu: BigInt = row.mu.parse().unwrap();
            let implied = Real::from_decimal(&row.implied_exponent).unwrap();
            let limit = &unimodular_exponent(d)
                + &Real::from_ratio(d as i64, 4).ln().div(&Real::from_int(mu).ln());
            if implied > limit || !row.satisfied {
                failures.push(format!("bench row seed {} {}: implied exponent too large", row.seed, row.method));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{runs} pipeline runs, {pieces} pieces, {rows_checked} bench rows, max ln(measured/bound) = {worst_ratio:.2}; failures {:?}",
            &failures[..failures.len().min(5)]
        ),
    )
}

fn criterion_nine() -> Verdict {
    let mut problems = Vec::new();

    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let phi = runner.run(&(1u64..1_000_000, 1u64..1_000_000), |(a, b)| {
        let (a, b) = (BigInt::from(a), BigInt::from(b));
        let pa = Phi::of(&a).unwrap();
        let pb = Phi::of(&b).unwrap();
        let pab = Phi::of(&(&a * &b)).unwrap();
        let sum = pa.combine(&pb);
        prop_assert!(pab.le_plus(&sum, 0) && sum.le_plus(&pab, 0));
        prop_assert_eq!(pab.eta(), pa.eta() + pb.eta());
        prop_assert!(pa.at_least(0) && pb.at_least(0) && pab.at_least(0));
        prop_assert_eq!(pa.eta(), omega_oracle(&a));
        Ok(())
    });
    if let Err(e) = phi {
        problems.push(format!("phi: {e}"));
    }

    let mut h_bad = 0;
    for d in 1..=16usize {
        for k in 0..=64i64 {
            if h_sequence(d, k) > (BigInt::from(d) << k as u64) {
                h_bad += 1;
            }
        }
    }
    if h_bad > 0 {
        problems.push(format!("h_k: {h_bad} violations"));
    }

    let mut runner = TestRunner::new(Config {
        cases: 1_000,
        failure_persistence: None,
        ..Config::default()
    });
    let snf = runner.run(&(1usize..=5, any::<u64>()), |(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = IntMatrix::new(n, n, (0..n * n).map(|_| BigInt::from(rng.random_range(-30i64..=30))).collect())
            .unwrap();
        match smith_normal_form(&m) {
            Ok(s) => {
                let rebuilt = s.left.mul(&m).unwrap().mul(&s.right).unwrap();
                prop_assert_eq!(rebuilt, s.diagonal_matrix());
                prop_assert!(determinant(&s.left).unwrap().abs().is_one());
                prop_assert!(determinant(&s.right).unwrap().abs().is_one());
                for w in s.diag.windows(2) {
                    prop_assert!(w[0].is_positive() && (&w[1] % &w[0]).is_zero());
                }
                let prod: BigInt = s.diag.iter().product();
                prop_assert_eq!(prod, determinant(&m).unwrap().abs());
            }
            Err(_) => prop_assert!(determinant(&m).unwrap().is_zero()),
        }
        Ok(())
    });
    if let Err(e) = snf {
        problems.push(format!("snf: {e}"));
    }

    let mut files = 0;
    for seed in 0..20u64 {
        let d = 2 + (seed % 2) as usize;
        let c = random_cone_where(&ConeSpec::random(d, 70_000 + seed, 5).with_mu_range(2, 300), |_| true).unwrap();
        for s in Strategy::ALL {
            let render = || {
                let t = pipeline_finres(&c, s).unwrap();
                let reports = vec![audit_unimodular_bounds(&t, &c)];
                TriangulationFile::from_unimodular(&t, &reports).unwrap().to_json()
            };
            let (a, b) = (render(), render());
            let back = TriangulationFile::parse(&a).map(|f| f.to_json());
            files += 1;
            if a != b || back.as_deref() != Ok(a.as_str()) {
                problems.push(format!("file round trip seed {seed} {s}"));
            }
        }
        let state = run_bpft(&c).unwrap();
        let a = TriangulationFile::from_bpft(&state, &audit_bpft_bounds(&state)).unwrap().to_json();
        if TriangulationFile::parse(&a).map(|f| f.to_json()).as_deref() != Ok(a.as_str()) {
            problems.push(format!("bpft file round trip seed {seed}"));
        }
    }

    verdict(
        problems.is_empty(),
        format!("10^4 phi pairs, h_k for d<=16 k<=64, 10^3 SNFs, {files} file round trips; problems {problems:?}"),
    )
}

fn main() {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let (v1, runs) = criterion_one();
    results.push(("1 bounded prime factors triangulation", v1));
    results.push(("2 labeled vector dilation <= d 2^s", criterion_two(&runs)));
    results.push(("3 phi drop per edge and chi bound", criterion_three(&runs)));
    results.push(("4 Hilbert bases within (d/4) mu", criterion_four(&runs)));
    results.push(("5 prime example has no composite-only class", criterion_five()));
    results.push(("6 order-p search avoiding odd primes", criterion_six()));
    results.push(("7 prime transfer exactness", criterion_seven()));
    results.push(("8 unimodular pipeline", criterion_eight()));
    results.push(("9 property suites", criterion_nine()));

    let mut failed = 0;
    for (name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!("criterion {name}: {tag} ({})", v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
