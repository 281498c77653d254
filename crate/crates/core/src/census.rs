//! Feasibility censuses over channel ensembles.
//!
//! A census enumerates (or samples) channel instances for a chosen
//! coordinate system, classifies each through the X-channel or 3-user
//! machinery, and reports per-class counts. Exhaustive censuses produce
//! exact rational fractions and compare them against closed forms: equality
//! for the fractions with exact formulas (degenerate X gains, eigenvector
//! tuples), domination for the lower bounds on alignment-feasible
//! fractions.
//!
//! Enumeration exploits that every classification condition constrains one
//! tuple coordinate at a time given the cross gain: a normalized 3-user
//! census sweeps h̄ and counts admissible direct gains per condition,
//! multiplying the counts instead of visiting all q⁴ tuples. Sampling draws
//! each instance from its own counter-indexed stream of a seeded generator,
//! so results are reproducible and independent of worker scheduling.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fplinalg::element_columns;
use crate::gf::{FieldCtx, GfError, Gfe};
use crate::{ic3, xch};

/// Default cap on the number of instance visits an exhaustive census may
/// make before it must be sampled instead.
pub const DEFAULT_THRESHOLD: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum CensusError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(
        "exhaustive census needs {needed} instance visits, over the limit of \
         {threshold}; sample instead or raise the threshold"
    )]
    TooLargeForExhaustive { needed: u128, threshold: u64 },
    #[error("invalid census request: {0}")]
    BadSpec(String),
}

/// Coordinate system a census enumerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusTarget {
    /// Normalized X-channel gain h over the nonzero field elements.
    XNormalizedH,
    /// Full X-channel gain matrices over nonzero gains (fully connected).
    XFull,
    /// Normalized 3-user tuples (h̄11, h̄22, h̄33, h̄) over all field
    /// elements.
    IcNormalized,
    /// Full 3-user gain matrices over all field elements, zero patterns
    /// included.
    IcFull,
}

impl CensusTarget {
    pub fn as_str(&self) -> &'static str {
        match self {
            CensusTarget::XNormalizedH => "x_normalized_h",
            CensusTarget::XFull => "x_full",
            CensusTarget::IcNormalized => "ic_normalized",
            CensusTarget::IcFull => "ic_full",
        }
    }

    pub fn from_str(s: &str) -> Option<CensusTarget> {
        Some(match s {
            "x_normalized_h" => CensusTarget::XNormalizedH,
            "x_full" => CensusTarget::XFull,
            "ic_normalized" => CensusTarget::IcNormalized,
            "ic_full" => CensusTarget::IcFull,
            _ => return None,
        })
    }

    /// Human-readable description of the enumerated coordinates.
    pub fn coordinates(&self) -> &'static str {
        match self {
            CensusTarget::XNormalizedH => "normalized gain h over GF(p^n) \\ {0}",
            CensusTarget::XFull => "2x2 gain matrices with all gains nonzero",
            CensusTarget::IcNormalized => {
                "normalized tuples (hbar11, hbar22, hbar33, hbar) over GF(p^n)^4"
            }
            CensusTarget::IcFull => "3x3 gain matrices over GF(p^n)^9",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMode {
    Exhaustive,
    Sample { count: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusSpec {
    pub p: u64,
    pub n: usize,
    pub target: CensusTarget,
    pub mode: CensusMode,
    /// Cap on exhaustive instance visits.
    pub threshold: u64,
}

impl CensusSpec {
    pub fn new(p: u64, n: usize, target: CensusTarget, mode: CensusMode) -> CensusSpec {
        CensusSpec { p, n, target, mode, threshold: DEFAULT_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCount {
    pub label: String,
    pub count: u128,
}

/// How a measured fraction is compared against its reference value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
}

impl Relation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Equal => "==",
            Relation::AtLeast => ">=",
        }
    }
}

/// A measured fraction checked against a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name: String,
    pub measured: BigRational,
    pub reference: BigRational,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusReport {
    pub p: u64,
    pub n: usize,
    pub target: CensusTarget,
    pub exhaustive: bool,
    /// Sampling seed, when sampled.
    pub seed: Option<u64>,
    /// Instances covered: the whole domain when exhaustive, the sample
    /// count otherwise.
    pub total: u128,
    /// Per-class counts, sorted by label; zero-count classes are omitted.
    pub classes: Vec<ClassCount>,
    /// Closed-form checks; empty for sampled censuses, which report counts
    /// only.
    pub comparisons: Vec<Comparison>,
    pub coordinates: &'static str,
}

impl CensusReport {
    pub fn count(&self, label: &str) -> u128 {
        self.classes.iter().find(|c| c.label == label).map_or(0, |c| c.count)
    }

    pub fn fraction(&self, label: &str) -> BigRational {
        ratio_u128(self.count(label), self.total)
    }

    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}

// ---------------------------------------------------------------------------
// Closed forms.
// ---------------------------------------------------------------------------

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

fn qpow(p: u64, n: usize) -> BigInt {
    big(p).pow(n as u32)
}

fn ratio_u128(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn one_minus(x: BigRational) -> BigRational {
    BigRational::one() - x
}

/// Σ_{k=1}^{terms} p^{-k}.
fn inverse_power_sum(p: u64, terms: usize) -> BigRational {
    (1..=terms)
        .map(|k| BigRational::new(BigInt::one(), qpow(p, k)))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Fraction of normalized X-channel gains h ∈ GF(p^n) ∖ {0} lying in the
/// base field: (p−1)/(p^n−1). Such gains collapse alignment and cap the
/// linear sum capacity at 1.
pub fn degenerate_fraction(p: u64, n: usize) -> BigRational {
    BigRational::new(big(p - 1), qpow(p, n) - BigInt::one())
}

/// Fraction of normalized 3-user tuples satisfying the eigenvector-scheme
/// conditions (h̄ in the base field, every h̄kk outside): p(p^n−p)³/p^{4n}.
/// Zero for n = 1, where no element lies outside the base field.
pub fn eigen_fraction(p: u64, n: usize) -> BigRational {
    let q = qpow(p, n);
    let outside = &q - big(p);
    BigRational::new(big(p) * (&outside * &outside * &outside), q.pow(4))
}

/// Lower bound on the alignment-feasible fraction of normalized 3-user
/// tuples for n = 3, from counting per-coordinate exclusions coarsely:
/// (1 − 1/p²)(1 − 1/p)³.
pub fn feasible_bound_cubic(p: u64) -> BigRational {
    let direct = one_minus(BigRational::new(BigInt::one(), big(p)));
    one_minus(BigRational::new(BigInt::one(), qpow(p, 2))) * direct.pow(3)
}

/// Lower bound on the alignment-feasible fraction of normalized 3-user
/// tuples for odd n = 2l+1:
/// (1 − l/p^l)·(1 − Σ_{k=1}^{l+1} p^{-k})·(1 − Σ_{k=1}^{l} p^{-k})².
pub fn feasible_bound_odd(p: u64, l: usize) -> BigRational {
    let cross = one_minus(BigRational::new(big(l as u64), qpow(p, l)));
    let first = one_minus(inverse_power_sum(p, l + 1));
    let others = one_minus(inverse_power_sum(p, l));
    cross * first * others.pow(2)
}

/// Sharper variant of [`feasible_bound_odd`] for prime n = 2l+1, where the
/// cross-gain condition reduces to base-field exclusion:
/// (1 − 1/p^{2l})·(1 − Σ_{k=1}^{l+1} p^{-k})·(1 − Σ_{k=1}^{l} p^{-k})².
pub fn feasible_bound_odd_prime(p: u64, l: usize) -> BigRational {
    let cross = one_minus(BigRational::new(BigInt::one(), qpow(p, 2 * l)));
    let first = one_minus(inverse_power_sum(p, l + 1));
    let others = one_minus(inverse_power_sum(p, l));
    cross * first * others.pow(2)
}

/// Lower bound on the alignment-feasible fraction of normalized 3-user
/// tuples for n = 2 and p > 3: (1 − 1/p)³(1 − 3/p).
pub fn feasible_bound_quadratic(p: u64) -> BigRational {
    let direct = one_minus(BigRational::new(BigInt::one(), big(p)));
    direct.pow(3) * one_minus(BigRational::new(big(3), big(p)))
}

/// Fraction of all 3×3 gain matrices with every gain nonzero:
/// ((p^n−1)/p^n)⁹.
pub fn fully_connected_fraction(p: u64, n: usize) -> BigRational {
    let q = qpow(p, n);
    BigRational::new(&q - BigInt::one(), q).pow(9)
}

/// Fraction of all 3×3 gain matrices whose normalization satisfies the
/// eigenvector-scheme conditions. Normalization maps uniform fully
/// connected matrices onto uniform nonzero tuples (each normalized
/// coordinate is an independent monomial in the gains), giving
/// (p−1)(p^n−p)³(p^n−1)⁵/p^{9n}.
pub fn eigen_matrix_fraction(p: u64, n: usize) -> BigRational {
    let q = qpow(p, n);
    let outside = &q - big(p);
    let nonzero = &q - BigInt::one();
    BigRational::new(
        big(p - 1) * (&outside * &outside * &outside) * nonzero.pow(5),
        q.pow(9),
    )
}

// ---------------------------------------------------------------------------
// Enumeration.
// ---------------------------------------------------------------------------

type Counts = BTreeMap<String, u128>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn bump(acc: &mut Counts, label: impl Into<String>, by: u128) {
    if by > 0 {
        *acc.entry(label.into()).or_insert(0) += by;
    }
}

/// Number of instance visits an exhaustive run makes. Normalized 3-user
/// censuses count their per-condition membership sweeps, not the q⁴ tuples
/// the factorized counts cover.
fn exhaustive_visits(target: CensusTarget, q: u128) -> u128 {
    match target {
        CensusTarget::XNormalizedH => q - 1,
        CensusTarget::XFull => (q - 1).pow(4),
        CensusTarget::IcNormalized => q * (1 + 2 * q),
        CensusTarget::IcFull => q.pow(9),
    }
}

/// Size of the enumerated domain (the denominator of exhaustive fractions).
fn domain_size(target: CensusTarget, q: u128) -> u128 {
    match target {
        CensusTarget::XNormalizedH => q - 1,
        CensusTarget::XFull => (q - 1).pow(4),
        CensusTarget::IcNormalized => q.pow(4),
        CensusTarget::IcFull => q.pow(9),
    }
}

/// Runs the census described by `spec`. Exhaustive runs refuse field sizes
/// whose visit count exceeds `spec.threshold` — checked before the field is
/// even built, so oversized requests fail with the size, not a field error.
pub fn run_census(spec: &CensusSpec) -> Result<CensusReport, CensusError> {
    if spec.p < 2 || spec.n == 0 {
        return Err(CensusError::BadSpec(format!(
            "need a prime p ≥ 2 and degree n ≥ 1, got p = {}, n = {}",
            spec.p, spec.n
        )));
    }
    match spec.mode {
        CensusMode::Exhaustive => {
            let q = (spec.p as u128).checked_pow(spec.n as u32).unwrap_or(u128::MAX);
            let needed = exhaustive_visits(spec.target, q);
            if needed > spec.threshold as u128 {
                return Err(CensusError::TooLargeForExhaustive {
                    needed,
                    threshold: spec.threshold,
                });
            }
            let ctx = FieldCtx::new(spec.p, spec.n)?;
            let counts = match spec.target {
                CensusTarget::XNormalizedH => exhaustive_x_normalized(&ctx),
                CensusTarget::XFull => exhaustive_x_full(&ctx),
                CensusTarget::IcNormalized => exhaustive_ic_normalized(&ctx),
                CensusTarget::IcFull => exhaustive_ic_full(&ctx),
            };
            let total = domain_size(spec.target, q);
            let comparisons = build_comparisons(spec, &counts, total);
            Ok(finish(spec, true, None, total, counts, comparisons))
        }
        CensusMode::Sample { count, seed } => {
            if count == 0 {
                return Err(CensusError::BadSpec("sample count must be ≥ 1".into()));
            }
            let ctx = FieldCtx::new(spec.p, spec.n)?;
            let counts = sampled_counts(&ctx, spec.target, count, seed);
            Ok(finish(spec, false, Some(seed), count as u128, counts, Vec::new()))
        }
    }
}

fn finish(
    spec: &CensusSpec,
    exhaustive: bool,
    seed: Option<u64>,
    total: u128,
    counts: Counts,
    comparisons: Vec<Comparison>,
) -> CensusReport {
    let classes =
        counts.into_iter().map(|(label, count)| ClassCount { label, count }).collect();
    CensusReport {
        p: spec.p,
        n: spec.n,
        target: spec.target,
        exhaustive,
        seed,
        total,
        classes,
        comparisons,
        coordinates: spec.target.coordinates(),
    }
}

fn x_label(class: &xch::XClass) -> &'static str {
    class.label()
}

fn classify_x_gain(ctx: &FieldCtx, h: u64) -> &'static str {
    let ch = xch::XChannel::from_labels(ctx.clone(), [[1, 1], [h, 1]])
        .expect("labels below field size");
    x_label(&xch::classify(&ch))
}

fn exhaustive_x_normalized(ctx: &FieldCtx) -> Counts {
    (1..ctx.size())
        .into_par_iter()
        .fold(Counts::new, |mut acc, h| {
            bump(&mut acc, classify_x_gain(ctx, h), 1);
            acc
        })
        .reduce(Counts::new, merge)
}

fn exhaustive_x_full(ctx: &FieldCtx) -> Counts {
    let nz = ctx.size() - 1;
    (0..nz.pow(4))
        .into_par_iter()
        .fold(Counts::new, |mut acc, idx| {
            let mut rest = idx;
            let mut labels = [[0u64; 2]; 2];
            for row in &mut labels {
                for g in row.iter_mut() {
                    *g = 1 + rest % nz;
                    rest /= nz;
                }
            }
            let ch = xch::XChannel::from_labels(ctx.clone(), labels)
                .expect("labels below field size");
            bump(&mut acc, x_label(&xch::classify(&ch)), 1);
            acc
        })
        .reduce(Counts::new, merge)
}

/// Rank test for the mixed power chain {x·h̄^a, …, x·h̄, x} ∪ {h̄^b, …, 1}.
fn chain_spans(ctx: &FieldCtx, x: Gfe, hb: Gfe, own_top: usize, other_top: usize) -> bool {
    let mut elems: Vec<Gfe> =
        (0..=own_top).rev().map(|k| ctx.mul(x, ctx.pow(hb, k as u64))).collect();
    elems.extend((0..=other_top).rev().map(|k| ctx.pow(hb, k as u64)));
    element_columns(ctx, &elems).rank() == ctx.n()
}

/// Exhaustive normalized 3-user census, factorized per cross gain: for each
/// h̄ the conditions constrain each direct gain independently, so counting
/// admissible values per coordinate and multiplying covers all q³ direct
/// tuples with 𝒪(q) membership tests.
fn exhaustive_ic_normalized(ctx: &FieldCtx) -> Counts {
    let q = ctx.size();
    let p = ctx.p();
    let n = ctx.n();
    let cube = (q as u128).pow(3);
    (0..q)
        .into_par_iter()
        .fold(Counts::new, |mut acc, hb_label| {
            let hb = ctx.element(hb_label).expect("label below field size");
            if ctx.in_base_field(hb) {
                let eigen = ((q - p) as u128).pow(3);
                bump(&mut acc, "eigen", eigen);
                bump(&mut acc, "unclassified", cube - eigen);
            } else if n == 2 {
                let m1 = (0..q)
                    .filter(|&x| {
                        let x = ctx.element(x).unwrap();
                        !ctx.in_base_field(x) && !ctx.in_base_field(ctx.mul(hb, x))
                    })
                    .count() as u128;
                let m23 = (0..q)
                    .filter(|&x| {
                        let x = ctx.element(x).unwrap();
                        !ctx.in_base_field(x)
                            && !ctx.in_base_field(ctx.div(hb, x).expect("x nonzero"))
                    })
                    .count() as u128;
                let ext5 = m1 * m23 * m23;
                bump(&mut acc, "ext5", ext5);
                bump(&mut acc, "unclassified", cube - ext5);
            } else if n >= 3 && n % 2 == 1 {
                let l = n / 2;
                let powers: Vec<Gfe> = (0..=l).map(|k| ctx.pow(hb, k as u64)).collect();
                if element_columns(ctx, &powers).rank() < l + 1 {
                    bump(&mut acc, "unclassified", cube);
                } else {
                    let count_ok = |own_top: usize, other_top: usize| {
                        (0..q)
                            .filter(|&x| {
                                let x = ctx.element(x).unwrap();
                                chain_spans(ctx, x, hb, own_top, other_top)
                            })
                            .count() as u128
                    };
                    let c1 = count_ok(l, l - 1);
                    let c23 = count_ok(l - 1, l);
                    let odd = c1 * c23 * c23;
                    bump(&mut acc, "odd_powers", odd);
                    bump(&mut acc, "unclassified", cube - odd);
                }
            } else {
                bump(&mut acc, "unclassified", cube);
            }
            acc
        })
        .reduce(Counts::new, merge)
}

fn exhaustive_ic_full(ctx: &FieldCtx) -> Counts {
    let q = ctx.size();
    let total = q.pow(9);
    (0..total)
        .into_par_iter()
        .fold(Counts::new, |mut acc, idx| {
            let mut rest = idx;
            let mut labels = [[0u64; 3]; 3];
            for row in &mut labels {
                for g in row.iter_mut() {
                    *g = rest % q;
                    rest /= q;
                }
            }
            let ch = ic3::Ic3Channel::from_labels(ctx.clone(), labels)
                .expect("labels below field size");
            bump(&mut acc, ic3::classify(&ch).class.label(), 1);
            acc
        })
        .reduce(Counts::new, merge)
}

fn sampled_counts(ctx: &FieldCtx, target: CensusTarget, count: u64, seed: u64) -> Counts {
    let q = ctx.size();
    (0..count)
        .into_par_iter()
        .fold(Counts::new, |mut acc, i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let label: String = match target {
                CensusTarget::XNormalizedH => {
                    classify_x_gain(ctx, rng.gen_range(1..q)).into()
                }
                CensusTarget::XFull => {
                    let labels: [[u64; 2]; 2] =
                        std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(1..q)));
                    let ch = xch::XChannel::from_labels(ctx.clone(), labels)
                        .expect("labels below field size");
                    x_label(&xch::classify(&ch)).into()
                }
                CensusTarget::IcNormalized => {
                    let direct: [Gfe; 3] = std::array::from_fn(|_| {
                        ctx.element(rng.gen_range(0..q)).unwrap()
                    });
                    let cross = ctx.element(rng.gen_range(0..q)).unwrap();
                    ic3::classify_normalized(ctx, direct, cross).class.label()
                }
                CensusTarget::IcFull => {
                    let labels: [[u64; 3]; 3] =
                        std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(0..q)));
                    let ch = ic3::Ic3Channel::from_labels(ctx.clone(), labels)
                        .expect("labels below field size");
                    ic3::classify(&ch).class.label()
                }
            };
            bump(&mut acc, label, 1);
            acc
        })
        .reduce(Counts::new, merge)
}

// ---------------------------------------------------------------------------
// Closed-form comparisons.
// ---------------------------------------------------------------------------

fn count_of(counts: &Counts, label: &str) -> u128 {
    counts.get(label).copied().unwrap_or(0)
}

fn compare(
    name: &str,
    measured: BigRational,
    relation: Relation,
    reference: BigRational,
) -> Comparison {
    let pass = match relation {
        Relation::Equal => measured == reference,
        Relation::AtLeast => measured >= reference,
    };
    Comparison { name: name.into(), measured, reference, relation, pass }
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).all(|d| n % d != 0)
}

fn build_comparisons(spec: &CensusSpec, counts: &Counts, total: u128) -> Vec<Comparison> {
    let frac = |label: &str| ratio_u128(count_of(counts, label), total);
    let (p, n) = (spec.p, spec.n);
    let mut out = Vec::new();
    match spec.target {
        CensusTarget::XNormalizedH | CensusTarget::XFull => {
            out.push(compare(
                "degenerate_fraction",
                frac("degenerate"),
                Relation::Equal,
                degenerate_fraction(p, n),
            ));
            out.push(compare(
                "aligned_fraction",
                frac("aligned"),
                Relation::Equal,
                one_minus(degenerate_fraction(p, n)),
            ));
        }
        CensusTarget::IcNormalized => {
            out.push(compare(
                "eigen_fraction",
                frac("eigen"),
                Relation::Equal,
                eigen_fraction(p, n),
            ));
            let feasible = |family: &str| {
                ratio_u128(count_of(counts, "eigen") + count_of(counts, family), total)
            };
            if n == 3 {
                out.push(compare(
                    "feasible_vs_cubic_bound",
                    feasible("odd_powers"),
                    Relation::AtLeast,
                    feasible_bound_cubic(p),
                ));
            }
            if n >= 3 && n % 2 == 1 {
                out.push(compare(
                    "feasible_vs_odd_bound",
                    feasible("odd_powers"),
                    Relation::AtLeast,
                    feasible_bound_odd(p, n / 2),
                ));
                if is_prime(n) {
                    out.push(compare(
                        "feasible_vs_prime_degree_bound",
                        feasible("odd_powers"),
                        Relation::AtLeast,
                        feasible_bound_odd_prime(p, n / 2),
                    ));
                }
            }
            if n == 2 && p > 3 {
                out.push(compare(
                    "feasible_vs_quadratic_bound",
                    feasible("ext5"),
                    Relation::AtLeast,
                    feasible_bound_quadratic(p),
                ));
            }
        }
        CensusTarget::IcFull => {
            let fully_connected: u128 = counts
                .iter()
                .filter(|(label, _)| !label.starts_with("zero_case_"))
                .map(|(_, c)| c)
                .sum();
            out.push(compare(
                "fully_connected_fraction",
                ratio_u128(fully_connected, total),
                Relation::Equal,
                fully_connected_fraction(p, n),
            ));
            out.push(compare(
                "eigen_matrix_fraction",
                frac("eigen"),
                Relation::Equal,
                eigen_matrix_fraction(p, n),
            ));
        }
    }
    out
}
