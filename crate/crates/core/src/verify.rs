//! Independent checks of finished triangulations: partition sampling, the
//! f-triangulation predicate and every dilation bound.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bpft::TriangulationState;
use crate::cone::{SimplicialCone, DEFAULT_HILBERT_CAP};
use crate::error::{Error, Result};
use crate::numtheory::{compare_log, constants, h_sequence, p_max, threshold_log, tie_band, Phi};
use crate::precise::Real;
use crate::unimodular::UnimodularTriangulation;

/// A bound or measured value: exact when rational, else a 256-bit real.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Exact(BigRational),
    Approx(Real),
}

impl Quantity {
    pub fn int(n: impl Into<BigInt>) -> Self {
        Quantity::Exact(BigRational::from_integer(n.into()))
    }

    pub fn to_real(&self) -> Real {
        match self {
            Quantity::Exact(q) => Real::from_rational(q),
            Quantity::Approx(r) => r.clone(),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Quantity::Approx(r) => write!(f, "~{}", r.to_decimal(30)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Satisfied,
    Violated,
    Skipped,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Satisfied => "satisfied",
            Outcome::Violated => "violated",
            Outcome::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    /// The bound at the tightest checked item.
    pub bound: Quantity,
    /// The measured value at the tightest checked item.
    pub measured: Quantity,
    pub outcome: Outcome,
    pub checked: usize,
    pub violations: usize,
    pub skipped: usize,
    /// Offending vectors (or multiplicities, as 1-vectors).
    pub witnesses: Vec<Vec<BigInt>>,
    /// Informational reports never count as failures.
    pub informational: bool,
    pub note: String,
}

impl BoundReport {
    pub fn satisfied(&self) -> bool {
        self.outcome != Outcome::Violated
    }

    /// True when this report should fail a run.
    pub fn is_failure(&self) -> bool {
        !self.informational && self.outcome == Outcome::Violated
    }

    fn trivial(name: &str, note: &str) -> Self {
        BoundReport {
            name: name.into(),
            bound: Quantity::int(0),
            measured: Quantity::int(0),
            outcome: Outcome::Satisfied,
            checked: 0,
            violations: 0,
            skipped: 0,
            witnesses: Vec::new(),
            informational: false,
            note: note.into(),
        }
    }
}

const MAX_WITNESSES: usize = 16;

/// Collects exact `measured ≤ bound` checks and keeps the tightest one.
struct Tally {
    name: String,
    checked: usize,
    violations: usize,
    skipped: usize,
    witnesses: Vec<Vec<BigInt>>,
    worst: Option<(BigRational, BigRational, BigRational)>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            violations: 0,
            skipped: 0,
            witnesses: Vec::new(),
            worst: None,
        }
    }

    fn check(&mut self, measured: BigRational, bound: BigRational, witness: impl FnOnce() -> Vec<BigInt>) {
        self.checked += 1;
        if measured > bound {
            self.violations += 1;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
        let ratio = if bound.is_positive() {
            &measured / &bound
        } else if measured.is_positive() {
            BigRational::from_integer(BigInt::from(u64::MAX))
        } else {
            BigRational::zero()
        };
        if self.worst.as_ref().is_none_or(|(r, _, _)| ratio > *r) {
            self.worst = Some((ratio, measured, bound));
        }
    }

    fn finish(self, note: impl Into<String>) -> BoundReport {
        let (bound, measured) = match self.worst {
            Some((_, m, b)) => (Quantity::Exact(b), Quantity::Exact(m)),
            None => (Quantity::int(0), Quantity::int(0)),
        };
        let outcome = if self.violations > 0 {
            Outcome::Violated
        } else if self.checked == 0 && self.skipped > 0 {
            Outcome::Skipped
        } else {
            Outcome::Satisfied
        };
        BoundReport {
            name: self.name,
            bound,
            measured,
            outcome,
            checked: self.checked,
            violations: self.violations,
            skipped: self.skipped,
            witnesses: self.witnesses,
            informational: false,
            note: note.into(),
        }
    }
}

/// True iff every non-unimodular piece has `ln(p_max(μ)) < f_log`.
pub fn check_f_triangulation(pieces: &[SimplicialCone], f_log: &Real) -> bool {
    pieces.iter().all(|c| {
        c.is_unimodular()
            || p_max(c.multiplicity()).is_ok_and(|p| !compare_log(&p, f_log).exceeded)
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub samples: usize,
    pub covered_once: usize,
    pub uncovered: usize,
    pub multiply_covered: usize,
    /// Pieces with a generator outside the root.
    pub containment_failures: usize,
    /// Draws discarded because they hit a wall of some piece.
    pub boundary_redraws: usize,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.uncovered == 0 && self.multiply_covered == 0 && self.containment_failures == 0
    }
}

const SAMPLE_BITS: u32 = 20;
const MAX_REDRAWS: usize = 1_000;

enum Sample {
    Covered(usize),
    Wall,
}

fn count_interior(pieces: &[SimplicialCone], y_small: Option<&[i64]>, y: &[BigInt]) -> Sample {
    let mut hits = 0;
    for piece in pieces {
        let signs = y_small
            .and_then(|s| piece.coordinate_signs_small(s))
            .unwrap_or_else(|| piece.coordinate_signs(y));
        if signs.contains(&Ordering::Equal) {
            return Sample::Wall;
        }
        if signs.iter().all(|s| *s == Ordering::Greater) {
            hits += 1;
        }
    }
    Sample::Covered(hits)
}

/// A partition check as a report: bound and measured are counts of bad
/// samples plus pieces leaving the root.
pub fn partition_report(v: &ValidityReport, seed: u64) -> BoundReport {
    let bad = v.uncovered + v.multiply_covered + v.containment_failures;
    BoundReport {
        name: "partition".into(),
        bound: Quantity::int(0),
        measured: Quantity::int(bad),
        outcome: if v.is_valid() { Outcome::Satisfied } else { Outcome::Violated },
        checked: v.samples,
        violations: bad,
        skipped: v.boundary_redraws,
        witnesses: Vec::new(),
        informational: false,
        note: format!(
            "seed {seed}: {} covered once, {} uncovered, {} multiply covered, {} pieces outside the root",
            v.covered_once, v.uncovered, v.multiply_covered, v.containment_failures
        ),
    }
}

/// Monte Carlo partition check: points `Σ r_i v_i` of the root with
/// `r_i = k_i / 2^20`, `0 < k_i < 2^20`, must lie in the interior of exactly
/// one piece. Points on a wall of any piece are redrawn. Sample `i` uses
/// stream `i` of a ChaCha8 generator seeded with `seed`, so the result is
/// independent of scheduling.
pub fn check_partition(root: &SimplicialCone, pieces: &[SimplicialCone], samples: usize, seed: u64) -> ValidityReport {
    let containment_failures = pieces
        .iter()
        .filter(|p| {
            p.generators()
                .row_iter()
                .any(|g| root.coordinate_signs(g).contains(&Ordering::Less))
        })
        .count();
    let d = root.dimension();
    let gens: Vec<Vec<BigInt>> = root.generators().to_rows();
    let gens_small: Option<Vec<Vec<i64>>> = gens
        .iter()
        .map(|g| g.iter().map(ToPrimitive::to_i64).collect())
        .collect();

    let per_sample = |i: usize| -> (Sample, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for redraw in 0..MAX_REDRAWS {
            let k: Vec<i64> = (0..d).map(|_| rng.random_range(1..(1i64 << SAMPLE_BITS))).collect();
            let small: Option<Vec<i64>> = gens_small.as_ref().and_then(|gs| {
                (0..d)
                    .map(|col| {
                        let mut acc: i128 = 0;
                        for (kj, g) in k.iter().zip(gs) {
                            acc = acc.checked_add(i128::from(*kj) * i128::from(g[col]))?;
                        }
                        i64::try_from(acc).ok()
                    })
                    .collect()
            });
            let y: Vec<BigInt> = match &small {
                Some(s) => s.iter().map(|&v| BigInt::from(v)).collect(),
                None => (0..d)
                    .map(|col| k.iter().zip(&gens).map(|(kj, g)| &g[col] * kj).sum())
                    .collect(),
            };
            if let Sample::Covered(h) = count_interior(pieces, small.as_deref(), &y) {
                return (Sample::Covered(h), redraw);
            }
        }
        (Sample::Wall, MAX_REDRAWS)
    };

    let (once, none, many, redraws) = (0..samples)
        .into_par_iter()
        .map(|i| match per_sample(i) {
            (Sample::Covered(1), r) => (1, 0, 0, r),
            (Sample::Covered(0), r) | (Sample::Wall, r) => (0, 1, 0, r),
            (Sample::Covered(_), r) => (0, 0, 1, r),
        })
        .reduce(|| (0, 0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3));

    ValidityReport {
        samples,
        covered_once: once,
        uncovered: none,
        multiply_covered: many,
        containment_failures,
        boundary_redraws: redraws,
    }
}

/// Facet normals of a cone: `y` is interior iff `y · n_k > 0` for all `k`.
fn facet_normals(c: &SimplicialCone) -> Vec<Vec<BigInt>> {
    let d = c.dimension();
    let rows: Vec<Vec<BigInt>> = (0..d)
        .map(|i| {
            let mut e = vec![BigInt::zero(); d];
            e[i] = BigInt::one();
            c.coordinate_numerators(&e)
        })
        .collect();
    (0..d).map(|k| rows.iter().map(|r| r[k].clone()).collect()).collect()
}

fn normalize(v: Vec<BigInt>) -> Vec<BigInt> {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        v
    } else {
        v.into_iter().map(|x| x / &g).collect()
    }
}

/// Decides whether `{y : a · y > 0 for all a}` is nonempty by Fourier–Motzkin
/// elimination.
fn strict_system_feasible(system: Vec<Vec<BigInt>>, d: usize) -> bool {
    let mut rows: BTreeSet<Vec<BigInt>> = system.into_iter().map(normalize).collect();
    for var in 0..d {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), BTreeSet::new());
        for r in rows {
            match r[var].cmp(&BigInt::zero()) {
                Ordering::Greater => pos.push(r),
                Ordering::Less => neg.push(r),
                Ordering::Equal => {
                    rest.insert(r);
                }
            }
        }
        for a in &pos {
            for b in &neg {
                let (ca, cb) = (-&b[var], a[var].clone());
                let combo: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| x * &ca + y * &cb).collect();
                rest.insert(normalize(combo));
            }
        }
        rows = rest;
    }
    // whatever is left reads 0 > 0
    rows.is_empty()
}

/// Exact overlap test for `d ≤ 3`: every pair of pieces whose interiors
/// intersect.
pub fn overlapping_pairs_exact(pieces: &[SimplicialCone]) -> Result<Vec<(usize, usize)>> {
    let Some(d) = pieces.first().map(SimplicialCone::dimension) else {
        return Ok(Vec::new());
    };
    if d > 3 {
        return Err(Error::Precondition(format!("exact overlap test only for d <= 3, got {d}")));
    }
    let normals: Vec<Vec<Vec<BigInt>>> = pieces.iter().map(facet_normals).collect();
    let pairs: Vec<(usize, usize)> = (0..pieces.len())
        .flat_map(|i| (i + 1..pieces.len()).map(move |j| (i, j)))
        .collect();
    Ok(pairs
        .into_par_iter()
        .filter(|&(i, j)| {
            let mut system = normals[i].clone();
            system.extend(normals[j].iter().cloned());
            strict_system_feasible(system, d)
        })
        .collect())
}

fn d_times_mu_over_4(d: usize, mu: &BigInt) -> BigRational {
    BigRational::new(mu * BigInt::from(d), BigInt::from(4))
}

/// Every check on a finished BPFT run.
///
/// Reports, in order: `xi-dilation-d2s`, `xi-dilation-h`, `phi-drop`,
/// `chi-bound`, `multiplicity-drop`, `generator-dilation`,
/// `hilbert-dilation`, `f-triangulation`.
pub fn audit_bpft_bounds(state: &TriangulationState) -> Vec<BoundReport> {
    audit_bpft_bounds_with_cap(state, DEFAULT_HILBERT_CAP)
}

pub fn audit_bpft_bounds_with_cap(state: &TriangulationState, hilbert_cap: u64) -> Vec<BoundReport> {
    let root = state.root();
    let d = root.dimension();
    let mu = root.multiplicity();
    let ancestry = state.ancestry();

    let mut xi_simple = Tally::new("xi-dilation-d2s");
    let mut xi_h = Tally::new("xi-dilation-h");
    for (s, v) in state.labeled_vectors() {
        let dil = match root.dilation(&v) {
            Ok(x) => x.value().clone(),
            Err(_) => BigRational::from_integer(BigInt::from(u64::MAX)),
        };
        let bound = BigRational::from_integer(BigInt::from(d) << (s as u64));
        xi_simple.check(dil.clone(), bound, || v.clone());
        xi_h.check(dil, BigRational::from_integer(h_sequence(d, s)), || v.clone());
    }

    let mut phi_drop = Tally::new("phi-drop");
    let mut mu_drop = Tally::new("multiplicity-drop");
    let phis: Vec<Option<Phi>> = ancestry.iter().map(|c| Phi::of(c.cone.multiplicity()).ok()).collect();
    for (parent, child) in state.provenance().edges() {
        let pm = ancestry[parent].cone.multiplicity();
        let cm = ancestry[child].cone.multiplicity();
        phi_drop.checked += 1;
        let ok = match (&phis[child], &phis[parent]) {
            (Some(a), Some(b)) => a.le_plus(b, -1),
            _ => false,
        };
        if !ok {
            phi_drop.violations += 1;
            if phi_drop.witnesses.len() < MAX_WITNESSES {
                phi_drop.witnesses.push(vec![pm.clone(), cm.clone()]);
            }
        }
        // μ(child) ≤ μ(parent) − 1
        mu_drop.check(
            BigRational::from_integer(cm.clone()),
            BigRational::from_integer(pm - 1),
            || vec![pm.clone(), cm.clone()],
        );
    }
    let phi_note = "phi(mu(child)) <= phi(mu(parent)) - 1, compared exactly as n*2^eta";

    let mut chi_report = Tally::new("chi-bound");
    let root_phi = Phi::of(mu).ok();
    let mut max_chi = -1i64;
    for c in ancestry {
        let chi = c.chi();
        max_chi = max_chi.max(chi);
        chi_report.checked += 1;
        if !root_phi.as_ref().is_some_and(|r| r.at_least(chi + 1)) {
            chi_report.violations += 1;
            if chi_report.witnesses.len() < MAX_WITNESSES {
                chi_report.witnesses.push(vec![BigInt::from(chi)]);
            }
        }
    }
    let chi_bound = root_phi
        .as_ref()
        .map(|r| &r.to_real() - &Real::one())
        .unwrap_or_else(Real::zero);

    let mut chi_final = chi_report.finish("chi(D) <= phi(mu(C)) - 1 for every cone ever created");
    chi_final.bound = Quantity::Approx(chi_bound);
    chi_final.measured = Quantity::int(max_chi);

    vec![
        xi_simple.finish("labeled vector xi(s) within d 2^s of the root simplex"),
        xi_h.finish("labeled vector xi(s) within h_s of the root simplex"),
        phi_drop.finish(phi_note),
        chi_final,
        mu_drop.finish("multiplicity strictly drops along every edge"),
    ]
    .into_iter()
    .chain(audit_final_cones(root, &state.current_cones(), hilbert_cap))
    .collect()
}

/// Checks on the cones of a finished triangulation that need no history:
/// `generator-dilation` and `hilbert-dilation` against `(d/4)·μ(C)`, and
/// `f-triangulation` against `e^(τd)`.
pub fn audit_final_cones(root: &SimplicialCone, pieces: &[SimplicialCone], hilbert_cap: u64) -> Vec<BoundReport> {
    let d = root.dimension();
    let mu = root.multiplicity();
    let mut gen_report = Tally::new("generator-dilation");
    let mut hilb_report = Tally::new("hilbert-dilation");
    let bound = d_times_mu_over_4(d, mu);
    let outside = || bound.clone() + BigRational::one();
    let trivial = mu.is_one();
    if !trivial {
        for c in pieces {
            for g in c.generators().row_iter() {
                let dil = root.dilation(g).map(|x| x.value().clone());
                gen_report.check(dil.unwrap_or_else(|_| outside()), bound.clone(), || g.to_vec());
            }
        }
        let bases: Vec<Result<Vec<Vec<BigInt>>>> = pieces
            .par_iter()
            .map(|c| c.hilbert_basis(hilbert_cap).map(|h| h.elements))
            .collect();
        for basis in bases {
            match basis {
                Ok(elements) => {
                    for h in elements {
                        let dil = root.dilation(&h).map(|x| x.value().clone());
                        hilb_report.check(dil.unwrap_or_else(|_| outside()), bound.clone(), || h.clone());
                    }
                }
                Err(_) => hilb_report.skipped += 1,
            }
        }
    }

    let f_log = threshold_log(d);
    let f_ok = check_f_triangulation(pieces, &f_log);
    let largest = pieces
        .iter()
        .filter(|c| !c.is_unimodular())
        .filter_map(|c| p_max(c.multiplicity()).ok())
        .max()
        .unwrap_or_else(BigInt::one);
    let f_report = BoundReport {
        name: "f-triangulation".into(),
        bound: Quantity::Approx(f_log.exp()),
        measured: Quantity::int(largest.clone()),
        outcome: if f_ok { Outcome::Satisfied } else { Outcome::Violated },
        checked: pieces.len(),
        violations: usize::from(!f_ok),
        skipped: 0,
        witnesses: if f_ok { Vec::new() } else { vec![vec![largest]] },
        informational: false,
        note: "largest prime factor of any final multiplicity vs e^(tau d)".into(),
    };

    let (gen_final, hilb_final) = if trivial {
        (
            BoundReport::trivial("generator-dilation", "unimodular root"),
            BoundReport::trivial("hilbert-dilation", "unimodular root"),
        )
    } else {
        let skipped = hilb_report.skipped;
        (
            gen_report.finish("final generators within (d/4) mu(C) of the root simplex"),
            hilb_report.finish(if skipped > 0 {
                format!("{skipped} cone(s) above the Hilbert basis cap {hilbert_cap} skipped")
            } else {
                "final Hilbert bases within (d/4) mu(C) of the root simplex".to_string()
            }),
        )
    };
    vec![gen_final, hilb_final, f_report]
}

/// `γd + 2·ld(d) + κ`.
pub fn unimodular_exponent(d: usize) -> Real {
    let c = constants();
    let dr = Real::from_int(d as i64);
    &(&(&c.gamma * &dr) + &dr.ld().mul_int(2)) + &c.kappa
}

/// `ln((d/4) · μ^(γd + 2ld(d) + κ))`.
pub fn unimodular_bound_log(d: usize, mu: &BigInt) -> Real {
    let e = unimodular_exponent(d);
    &Real::from_ratio(d as i64, 4).ln() + &(&e * &Real::from_int(mu.clone()).ln())
}

/// `log_μ(measured)`, or `None` when `μ = 1`.
pub fn implied_exponent(measured: &BigRational, mu: &BigInt) -> Option<Real> {
    if mu <= &BigInt::one() || !measured.is_positive() {
        return None;
    }
    Some(Real::from_rational(measured).ln().div(&Real::from_int(mu.clone()).ln()))
}

/// Largest piece-generator dilation against `(d/4)·μ^(γd+2ld(d)+κ)`,
/// compared in the log domain with a 1e-20 guard band.
pub fn audit_unimodular_bounds(t: &UnimodularTriangulation, root: &SimplicialCone) -> BoundReport {
    audit_unimodular_pieces(root, &t.pieces)
}

pub fn audit_unimodular_pieces(root: &SimplicialCone, pieces: &[SimplicialCone]) -> BoundReport {
    let d = root.dimension();
    let mu = root.multiplicity();
    let non_unimodular: Vec<Vec<BigInt>> = pieces
        .iter()
        .filter(|p| !p.is_unimodular())
        .map(|p| vec![p.multiplicity().clone()])
        .collect();
    let measured = match root.max_generator_dilation(pieces) {
        Ok(m) => m,
        Err(e) => {
            let mut r = BoundReport::trivial("unimodular-dilation", &format!("piece outside the root: {e}"));
            r.outcome = Outcome::Violated;
            r.violations = 1;
            return r;
        }
    };
    let checked = pieces.len();
    if mu.is_one() {
        let mut r = BoundReport::trivial("unimodular-dilation", "unimodular root");
        r.bound = Quantity::Exact(BigRational::new(BigInt::from(d), BigInt::from(4)));
        r.measured = Quantity::Exact(measured.value().clone());
        r.checked = checked;
        return r;
    }
    let bound_log = unimodular_bound_log(d, mu);
    let measured_log = Real::from_rational(measured.value()).ln();
    let diff = &measured_log - &bound_log;
    let band = tie_band();
    let violated = !diff.is_negative() && diff.abs() > band;
    let near = diff.abs() <= band;
    let implied = implied_exponent(measured.value(), mu)
        .map(|e| e.to_decimal(30))
        .unwrap_or_else(|| "n/a".into());
    let mut witnesses: Vec<Vec<BigInt>> = Vec::new();
    if violated {
        for p in pieces {
            for g in p.generators().row_iter() {
                if root.dilation(g).is_ok_and(|x| x == measured) && witnesses.len() < MAX_WITNESSES {
                    witnesses.push(g.to_vec());
                }
            }
        }
    }
    let bad_pieces = non_unimodular.len();
    witnesses.extend(non_unimodular);
    BoundReport {
        name: "unimodular-dilation".into(),
        bound: Quantity::Approx(bound_log.exp()),
        measured: Quantity::Exact(measured.value().clone()),
        outcome: if violated || bad_pieces > 0 { Outcome::Violated } else { Outcome::Satisfied },
        checked,
        violations: usize::from(violated) + bad_pieces,
        skipped: 0,
        witnesses,
        informational: false,
        note: format!(
            "exponent {} ; implied exponent {implied}{}",
            unimodular_exponent(d).to_decimal(6),
            if near { " ; within guard band of the bound" } else { "" }
        ),
    }
}

/// For prime-transfer runs: per piece, the product of
/// `p^(ρ·ld p + ε)` over the primes transferred on its way down stays below
/// `μ(C)^(γd + ε)`, and every such prime is below `e^(τd)`.
pub fn audit_transfer_exponents(t: &UnimodularTriangulation) -> BoundReport {
    let root = &t.root;
    let d = root.dimension();
    let c = constants();
    let mu = root.multiplicity();
    if mu.is_one() || t.transfers.is_empty() {
        return BoundReport::trivial("transfer-exponent", "no transfers");
    }
    let rhs = &(&(&c.gamma * &Real::from_int(d as i64)) + &c.epsilon) * &Real::from_int(mu.clone()).ln();
    let band = tie_band();
    let f_log = threshold_log(d);
    let mut checked = 0;
    let mut violations = 0;
    let mut witnesses = Vec::new();
    let mut worst = Real::zero();
    let mut seen = BTreeSet::new();
    for chain in &t.prime_chains {
        if !seen.insert(chain.clone()) {
            continue;
        }
        checked += 1;
        let mut lhs = Real::zero();
        let mut small = true;
        for p in chain {
            let pr = Real::from_int(p.clone());
            let e = &(&c.rho * &pr.ld()) + &c.epsilon;
            lhs = &lhs + &(&e * &pr.ln());
            small &= !compare_log(p, &f_log).exceeded;
        }
        if lhs > worst {
            worst = lhs.clone();
        }
        let diff = &lhs - &rhs;
        if !small || (!diff.is_negative() && diff.abs() > band) {
            violations += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(chain.clone());
            }
        }
    }
    BoundReport {
        name: "transfer-exponent".into(),
        bound: Quantity::Approx(rhs.exp()),
        measured: Quantity::Approx(worst.exp()),
        outcome: if violations > 0 { Outcome::Violated } else { Outcome::Satisfied },
        checked,
        violations,
        skipped: 0,
        witnesses,
        informational: false,
        note: "product of p^(rho ld p + eps) over transferred primes vs mu(C)^(gamma d + eps)".into(),
    }
}

/// Measured `k` of each transfer against `d²/64 · p^(ρ·ld p + ε)`. The
/// formula belongs to a different desingularizer, so exceeding it is
/// reported but never fails a run.
pub fn audit_transfer_k(t: &UnimodularTriangulation) -> BoundReport {
    let mut r = BoundReport::trivial("transfer-k-formula", "informational");
    r.informational = true;
    let mut worst_ratio: Option<Real> = None;
    for cert in &t.transfers {
        r.checked += 1;
        let formula = cert.k_formula();
        let measured = Real::from_rational(cert.measured_k.value());
        if measured > formula {
            r.violations += 1;
            if r.witnesses.len() < MAX_WITNESSES {
                r.witnesses.push(vec![cert.p.clone()]);
            }
        }
        let ratio = measured.div(&formula);
        if worst_ratio.as_ref().is_none_or(|w| &ratio > w) {
            worst_ratio = Some(ratio);
            r.bound = Quantity::Approx(formula);
            r.measured = Quantity::Exact(cert.measured_k.value().clone());
        }
    }
    if r.violations > 0 {
        r.outcome = Outcome::Violated;
    }
    r
}

/// Every applicable audit of a unimodular triangulation.
pub fn audit_unimodular_all(t: &UnimodularTriangulation) -> Vec<BoundReport> {
    let mut reports = Vec::new();
    if let Some(state) = &t.bpft {
        reports.extend(audit_bpft_bounds(state));
    }
    reports.push(audit_unimodular_bounds(t, &t.root));
    if !t.transfers.is_empty() {
        reports.push(audit_transfer_exponents(t));
        reports.push(audit_transfer_k(t));
    }
    reports
}
