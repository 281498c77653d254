//! The two-source, two-destination crossed ("X") channel over GF(p^n):
//! four independent messages W_ji (source i to destination j), constant
//! channel gains, and exact interference alignment.
//!
//! For a fully connected channel the single normalized gain
//! h = h12·h21/(h11·h22) decides everything: if h lies outside the prime
//! subfield, precoders achieving the optimal sum rate 4/3 exist and are
//! constructed here (scalar beams for n = 3, symbol extension otherwise);
//! if h ∈ F_p every linear scheme is capped at sum rate 1.

use num::rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beam::{column_candidate, full_symbol_beams, scale_col, spans_equal, BeamMatrix};
use crate::fplinalg::{element_columns, stack_vector, MatFp, RankTracker};
use crate::gf::{FieldCtx, GfError, Gfe};
use crate::{Rate, SimReport};

/// Message order used throughout: W11, W12, W21, W22 (W_ji carries data
/// from source i to destination j). Index k ↦ destination k/2, source k%2.
pub const MESSAGE_NAMES: [&str; 4] = ["w11", "w12", "w21", "w22"];

pub const fn message_destination(k: usize) -> usize {
    k / 2
}

pub const fn message_source(k: usize) -> usize {
    k % 2
}

/// Per-level candidate cap for greedy precoder searches.
const SEARCH_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum XchError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("channel has a zero coefficient; normalization needs a fully connected channel")]
    NotFullyConnected,
    #[error("construction conditions not met: {0}")]
    ConditionsNotMet(String),
    #[error("precoder search exhausted: {0}")]
    SearchExhausted(String),
    #[error("scheme does not fit this channel: {0}")]
    BadScheme(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("decoding is ambiguous: {0}")]
    DecodeAmbiguous(String),
}

/// A constant X channel: gains[j][i] is the gain from source i to
/// destination j (0-indexed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XChannel {
    ctx: FieldCtx,
    gains: [[Gfe; 2]; 2],
}

impl XChannel {
    pub fn new(ctx: FieldCtx, gains: [[Gfe; 2]; 2]) -> Result<XChannel, GfError> {
        for row in &gains {
            for g in row {
                ctx.element(g.0)?;
            }
        }
        Ok(XChannel { ctx, gains })
    }

    pub fn from_labels(ctx: FieldCtx, labels: [[u64; 2]; 2]) -> Result<XChannel, GfError> {
        let mut gains = [[Gfe(0); 2]; 2];
        for j in 0..2 {
            for i in 0..2 {
                gains[j][i] = ctx.element(labels[j][i])?;
            }
        }
        Ok(XChannel { ctx, gains })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn gain(&self, dst: usize, src: usize) -> Gfe {
        self.gains[dst][src]
    }

    pub fn gains(&self) -> &[[Gfe; 2]; 2] {
        &self.gains
    }

    pub fn is_fully_connected(&self) -> bool {
        self.gains.iter().flatten().all(|g| g.0 != 0)
    }
}

/// Capacity classification of an X channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XClass {
    /// h12 = h21 = 0, h11, h22 ≠ 0: two parallel direct links, C = 2.
    ParallelDirect,
    /// h11 = h22 = 0, h12, h21 ≠ 0: two parallel crossed links, C = 2.
    ParallelCross,
    /// All gains zero: C = 0.
    Disconnected,
    /// Some other gain is zero: C = 1.
    SingleLink,
    /// Fully connected with h ∉ F_p: C = C_linear = 4/3.
    Aligned { h: Gfe },
    /// Fully connected with h ∈ F_p: C_linear = 1.
    Degenerate { h: Gfe },
}

impl XClass {
    /// The zero-pattern case number (1–4), when some gain is zero.
    pub fn zero_case(&self) -> Option<u8> {
        match self {
            XClass::ParallelDirect => Some(1),
            XClass::ParallelCross => Some(2),
            XClass::Disconnected => Some(3),
            XClass::SingleLink => Some(4),
            _ => None,
        }
    }

    /// Linear sum capacity, in GF(p^n) symbols per channel use.
    pub fn linear_capacity(&self) -> Rate {
        match self {
            XClass::ParallelDirect | XClass::ParallelCross => Rate::new(2, 1),
            XClass::Disconnected => Rate::new(0, 1),
            XClass::SingleLink | XClass::Degenerate { .. } => Rate::new(1, 1),
            XClass::Aligned { .. } => Rate::new(4, 3),
        }
    }

    /// Information-theoretic sum capacity, where known (every case except a
    /// fully connected channel with h ∈ F_p).
    pub fn capacity(&self) -> Option<Rate> {
        match self {
            XClass::Degenerate { .. } => None,
            other => Some(other.linear_capacity()),
        }
    }

    /// Stable bucket label for reports and censuses.
    pub fn label(&self) -> &'static str {
        match self {
            XClass::ParallelDirect => "parallel_direct",
            XClass::ParallelCross => "parallel_cross",
            XClass::Disconnected => "disconnected",
            XClass::SingleLink => "single_link",
            XClass::Aligned { .. } => "aligned",
            XClass::Degenerate { .. } => "degenerate",
        }
    }
}

pub fn classify(ch: &XChannel) -> XClass {
    let z = |j: usize, i: usize| ch.gains[j][i].0 == 0;
    let any_zero = (0..2).any(|j| (0..2).any(|i| z(j, i)));
    if !any_zero {
        let ctx = &ch.ctx;
        let h = normalized_gain(ch).expect("fully connected");
        return if ctx.in_base_field(h) {
            XClass::Degenerate { h }
        } else {
            XClass::Aligned { h }
        };
    }
    if z(0, 0) && z(0, 1) && z(1, 0) && z(1, 1) {
        XClass::Disconnected
    } else if z(0, 1) && z(1, 0) && !z(0, 0) && !z(1, 1) {
        XClass::ParallelDirect
    } else if z(0, 0) && z(1, 1) && !z(0, 1) && !z(1, 0) {
        XClass::ParallelCross
    } else {
        XClass::SingleLink
    }
}

fn normalized_gain(ch: &XChannel) -> Result<Gfe, XchError> {
    if !ch.is_fully_connected() {
        return Err(XchError::NotFullyConnected);
    }
    let f = &ch.ctx;
    let num = f.mul(ch.gains[0][1], ch.gains[1][0]);
    let den = f.mul(ch.gains[0][0], ch.gains[1][1]);
    Ok(f.div(num, den).expect("nonzero denominator"))
}

/// Invertible scalings that reduce a fully connected channel to effective
/// gains [[1, 1], [h, 1]]: each source transmits src_mult[i]·x_i, each
/// destination reads dst_mult[j]·ȳ_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XNormalization {
    pub h: Gfe,
    pub src_mult: [Gfe; 2],
    pub dst_mult: [Gfe; 2],
}

impl XNormalization {
    /// Effective gain table after scaling: [[1, 1], [h, 1]].
    pub fn gains(&self, ctx: &FieldCtx) -> [[Gfe; 2]; 2] {
        [[ctx.one(), ctx.one()], [self.h, ctx.one()]]
    }
}

pub fn normalize(ch: &XChannel) -> Result<XNormalization, XchError> {
    let h = normalized_gain(ch)?;
    let f = &ch.ctx;
    let (h11, h12) = (ch.gains[0][0], ch.gains[0][1]);
    let (_, h22) = (ch.gains[1][0], ch.gains[1][1]);
    let src_mult = [f.one(), f.div(h11, h12).unwrap()];
    let dst_mult = [
        f.inv(h11).unwrap(),
        f.div(h12, f.mul(h11, h22)).unwrap(),
    ];
    let norm = XNormalization { h, src_mult, dst_mult };
    // The scalings must reproduce the [[1,1],[h,1]] gain table exactly.
    let want = norm.gains(f);
    for j in 0..2 {
        for i in 0..2 {
            let eff = f.mul(norm.dst_mult[j], f.mul(ch.gains[j][i], norm.src_mult[i]));
            assert_eq!(eff, want[j][i], "normalization identity violated");
        }
    }
    Ok(norm)
}

/// Construction family used by a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XMode {
    /// n = 3, one scalar beam per message, smallest valid v11.
    ScalarP3,
    /// n = 3, v11 = h so both receivers see the basis {1, h, h²}.
    AltProofP3,
    /// n = 2, three symbol extensions, two streams per message.
    ExtP2,
    /// General n ≥ 3, three symbol extensions, n streams per message.
    GeneralPn,
    /// Fully connected but h ∈ F_p: route one full symbol, sum rate 1.
    DegenerateRate1,
    /// Some gains are zero: plain routing achieves capacity.
    ZeroRouting,
}

impl XMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            XMode::ScalarP3 => "scalar_p3",
            XMode::AltProofP3 => "altproof_p3",
            XMode::ExtP2 => "ext_p2",
            XMode::GeneralPn => "general_pn",
            XMode::DegenerateRate1 => "degenerate_rate1",
            XMode::ZeroRouting => "zero_routing",
        }
    }

    pub fn from_str(s: &str) -> Option<XMode> {
        Some(match s {
            "scalar_p3" => XMode::ScalarP3,
            "altproof_p3" => XMode::AltProofP3,
            "ext_p2" => XMode::ExtP2,
            "general_pn" => XMode::GeneralPn,
            "degenerate_rate1" => XMode::DegenerateRate1,
            "zero_routing" => XMode::ZeroRouting,
            _ => return None,
        })
    }

    /// Whether the scheme's beams live in the normalized channel (gains
    /// [[1,1],[h,1]]) rather than the raw one.
    pub fn normalizes(&self) -> bool {
        !matches!(self, XMode::ZeroRouting)
    }
}

/// Decodability evidence recorded with a scheme: the rank of each
/// destination's signal-space matrix and the number of dimensions its
/// interference collapses into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XCertificates {
    pub rank_s1: usize,
    pub rank_s2: usize,
    pub aligned_dims: [usize; 2],
}

/// A complete linear scheme: per-message precoders over m channel uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XScheme {
    pub ctx: FieldCtx,
    pub mode: XMode,
    /// Zero-pattern case number for ZeroRouting schemes.
    pub zero_case: Option<u8>,
    /// Symbol extension length (channel uses per block).
    pub m: usize,
    /// Streams per message, in [`MESSAGE_NAMES`] order.
    pub streams: [usize; 4],
    pub precoders: [BeamMatrix; 4],
    pub sum_rate: Rate,
    pub certificates: XCertificates,
}

impl XScheme {
    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }
}

fn sum_rate(total_streams: usize, m: usize, n: usize) -> Rate {
    if total_streams == 0 {
        return Rate::new(0, 1);
    }
    Ratio::new(total_streams as u64, (m * n) as u64)
}

// ---------------------------------------------------------------------------
// Receiver-side assembly shared by construct, verify, and simulate.
// ---------------------------------------------------------------------------

/// One destination's decoding system: S = [desired beams | independent
/// basis of the interference space], with effective gains applied.
struct ReceiverSpace {
    s: MatFp,
    /// Column ranges of S holding each desired message's streams.
    desired: Vec<(usize, std::ops::Range<usize>)>,
    aligned_dims: usize,
}

fn receiver_space(
    ctx: &FieldCtx,
    dst: usize,
    gains: &[[Gfe; 2]; 2],
    precoders: &[BeamMatrix; 4],
    m: usize,
) -> ReceiverSpace {
    let dim = m * ctx.n();
    let mut desired_cols: Vec<Vec<u64>> = Vec::new();
    let mut desired = Vec::new();
    for k in 0..4 {
        if message_destination(k) != dst || precoders[k].num_cols() == 0 {
            continue;
        }
        let arrived = precoders[k].scaled(ctx, gains[dst][message_source(k)]);
        let fp = arrived.fp_columns(ctx);
        let start = desired_cols.len();
        for c in 0..fp.cols() {
            desired_cols.push(fp.col(c));
        }
        desired.push((k, start..desired_cols.len()));
    }
    // Interference: remaining messages' arrived beams, reduced to an
    // independent basis (aligned directions appear once).
    let mut tracker = RankTracker::new(ctx.p(), dim);
    let mut interference_basis: Vec<Vec<u64>> = Vec::new();
    for k in 0..4 {
        if message_destination(k) == dst {
            continue;
        }
        let arrived = precoders[k].scaled(ctx, gains[dst][message_source(k)]);
        let fp = arrived.fp_columns(ctx);
        for c in 0..fp.cols() {
            let col = fp.col(c);
            if tracker.insert(&col) {
                interference_basis.push(col);
            }
        }
    }
    let aligned_dims = interference_basis.len();
    let mut cols = desired_cols;
    cols.extend(interference_basis);
    let s = MatFp::from_cols(ctx.p(), dim, &cols);
    ReceiverSpace { s, desired, aligned_dims }
}

fn certify(
    ctx: &FieldCtx,
    gains: &[[Gfe; 2]; 2],
    precoders: &[BeamMatrix; 4],
    m: usize,
) -> Result<(XCertificates, [ReceiverSpace; 2]), XchError> {
    let r1 = receiver_space(ctx, 0, gains, precoders, m);
    let r2 = receiver_space(ctx, 1, gains, precoders, m);
    for (dst, r) in [(1, &r1), (2, &r2)] {
        let rank = r.s.rank();
        if rank < r.s.cols() {
            return Err(XchError::VerifyFailed(format!(
                "destination {dst}: signal space has rank {rank} but {} columns; \
                 desired streams are not resolvable",
                r.s.cols()
            )));
        }
    }
    let certs = XCertificates {
        rank_s1: r1.s.rank(),
        rank_s2: r2.s.rank(),
        aligned_dims: [r1.aligned_dims, r2.aligned_dims],
    };
    Ok((certs, [r1, r2]))
}

// ---------------------------------------------------------------------------
// Constructions.
// ---------------------------------------------------------------------------

fn assemble_scheme(
    ctx: &FieldCtx,
    mode: XMode,
    zero_case: Option<u8>,
    m: usize,
    precoders: [BeamMatrix; 4],
    gains: &[[Gfe; 2]; 2],
) -> Result<XScheme, XchError> {
    let streams = [
        precoders[0].num_cols(),
        precoders[1].num_cols(),
        precoders[2].num_cols(),
        precoders[3].num_cols(),
    ];
    let (certificates, _) = certify(ctx, gains, &precoders, m)?;
    let total: usize = streams.iter().sum();
    Ok(XScheme {
        ctx: ctx.clone(),
        mode,
        zero_case,
        m,
        streams,
        precoders,
        sum_rate: sum_rate(total, m, ctx.n()),
        certificates,
    })
}

/// Routing scheme for a channel with zero gains (capacity-achieving per the
/// zero-pattern case).
pub fn construct_zero(ch: &XChannel) -> Option<XScheme> {
    let class = classify(ch);
    let case = class.zero_case()?;
    let ctx = &ch.ctx;
    let basis = full_symbol_beams(ctx);
    let empty = BeamMatrix::new(1);
    let mut precoders = [empty.clone(), empty.clone(), empty.clone(), empty];
    match class {
        XClass::ParallelDirect => {
            precoders[0] = basis.clone(); // W11 over h11
            precoders[3] = basis; // W22 over h22
        }
        XClass::ParallelCross => {
            precoders[1] = basis.clone(); // W12 over h12
            precoders[2] = basis; // W21 over h21
        }
        XClass::Disconnected => {}
        XClass::SingleLink => {
            let k = (0..4)
                .find(|&k| ch.gains[message_destination(k)][message_source(k)].0 != 0)
                .expect("some gain is nonzero");
            precoders[k] = basis;
        }
        _ => unreachable!("zero_case was Some"),
    }
    assemble_scheme(ctx, XMode::ZeroRouting, Some(case), 1, precoders, ch.gains()).ok()
}

/// Rate-1 fallback for a fully connected channel whose normalized gain sits
/// in the prime subfield: source 1 sends one full symbol, everyone else is
/// silent.
pub fn construct_degenerate(ctx: &FieldCtx, h: Gfe) -> Result<XScheme, XchError> {
    let gains = [[ctx.one(), ctx.one()], [h, ctx.one()]];
    let empty = BeamMatrix::new(1);
    let precoders = [full_symbol_beams(ctx), empty.clone(), empty.clone(), empty];
    assemble_scheme(ctx, XMode::DegenerateRate1, None, 1, precoders, &gains)
}

/// Scalar alignment over a cubic extension: v22 = v21 = 1, v12 = h·v11.
/// The default picks the smallest v11 whose signal spaces are full rank;
/// the alternate picks v11 = h, making both spaces the basis {1, h, h²}.
pub fn construct_p3(ctx: &FieldCtx, h: Gfe, alternate: bool) -> Result<XScheme, XchError> {
    if ctx.n() != 3 {
        return Err(XchError::ConditionsNotMet(format!(
            "scalar alignment needs a cubic extension, got n = {}",
            ctx.n()
        )));
    }
    require_outside_base(ctx, h)?;
    let one = ctx.one();
    let v11 = if alternate {
        h
    } else {
        ctx.nonzero_elements()
            .find(|&v| {
                let hv = ctx.mul(h, v);
                element_columns(ctx, &[v, hv, one]).rank() == 3
                    && element_columns(ctx, &[one, h, hv]).rank() == 3
            })
            .ok_or_else(|| {
                XchError::SearchExhausted("no scalar v11 yields full-rank signal spaces".into())
            })?
    };
    let mode = if alternate { XMode::AltProofP3 } else { XMode::ScalarP3 };
    let precoders = [
        BeamMatrix::from_scalars(&[v11]),
        BeamMatrix::from_scalars(&[ctx.mul(h, v11)]),
        BeamMatrix::from_scalars(&[one]),
        BeamMatrix::from_scalars(&[one]),
    ];
    let gains = [[one, one], [h, one]];
    assemble_scheme(ctx, mode, None, 1, precoders, &gains)
}

fn require_outside_base(ctx: &FieldCtx, h: Gfe) -> Result<(), XchError> {
    if ctx.in_base_field(h) {
        return Err(XchError::ConditionsNotMet(format!(
            "normalized gain {} lies in the prime subfield; alignment is infeasible",
            h.0
        )));
    }
    Ok(())
}

/// The fixed quadratic-extension precoders (entries in {0, 1, s, s+1}) whose
/// signal-space determinants have closed forms. Valid whenever p > 2 and the
/// modulus is s² + c0 (so s² = c with c a quadratic non-residue).
fn p2_fixed_beams(ctx: &FieldCtx) -> (BeamMatrix, BeamMatrix) {
    let (zero, one, s) = (ctx.zero(), ctx.one(), ctx.s());
    let s1 = ctx.add(s, one);
    let v11 = BeamMatrix::from_cols(3, vec![vec![s1, one, zero], vec![s1, s, s]]);
    let v21 = BeamMatrix::from_cols(3, vec![vec![one, s1, s1], vec![zero, s, s1]]);
    (v11, v21)
}

/// When the quadratic extension is F_p[s]/(s² − c) with p odd, returns the
/// two destinations' 6×6 signal-space matrices for the fixed beams, in the
/// digit-major layout (low digit's three uses first), plus c. Their
/// determinants obey |S1| = c·h1² and |S2| = h1²·(c·h1² − h0²).
pub fn p2_certificate_matrices(ctx: &FieldCtx, h: Gfe) -> Option<(MatFp, MatFp, u64)> {
    if ctx.n() != 2 || ctx.p() == 2 || ctx.modulus()[1] != 0 {
        return None;
    }
    let p = ctx.p();
    let c = (p - ctx.modulus()[0]) % p;
    let (v11, v21) = p2_fixed_beams(ctx);
    let stack = |b: &BeamMatrix| -> Vec<Vec<u64>> {
        // Digit-major stacking: [low digit over uses 1..3; high digit over
        // uses 1..3].
        b.cols()
            .iter()
            .map(|col| {
                let digits: Vec<Vec<u64>> = col.iter().map(|&e| ctx.digits(e)).collect();
                let mut v: Vec<u64> = digits.iter().map(|d| d[0]).collect();
                v.extend(digits.iter().map(|d| d[1]));
                v
            })
            .collect()
    };
    let hv11 = v11.scaled(ctx, h);
    let hv21 = v21.scaled(ctx, h);
    let mut s1_cols = stack(&v11);
    s1_cols.extend(stack(&hv11));
    s1_cols.extend(stack(&v21));
    let mut s2_cols = stack(&v21);
    s2_cols.extend(stack(&hv21));
    s2_cols.extend(stack(&hv11));
    let s1 = MatFp::from_cols(p, 6, &s1_cols);
    let s2 = MatFp::from_cols(p, 6, &s2_cols);
    Some((s1, s2, c))
}

/// Alignment over a quadratic extension with three symbol extensions, two
/// streams per message. Odd p with a pure-quadratic modulus uses fixed
/// beams backed by determinant identities; p = 2 (or a modulus with a
/// linear term) falls back to a backtracking search.
pub fn construct_p2(ctx: &FieldCtx, h: Gfe) -> Result<XScheme, XchError> {
    if ctx.n() != 2 {
        return Err(XchError::ConditionsNotMet(format!(
            "symbol-extension alignment over a quadratic extension needs n = 2, got n = {}",
            ctx.n()
        )));
    }
    require_outside_base(ctx, h)?;
    let one = ctx.one();
    let gains = [[one, one], [h, one]];
    if let Some((s1, s2, c)) = p2_certificate_matrices(ctx, h) {
        let p = ctx.p();
        let d = ctx.digits(h);
        let (h0, h1) = (d[0], d[1]);
        let det1 = c * h1 % p * h1 % p;
        let det2 = h1 * h1 % p * ((det1 + p - h0 * h0 % p) % p) % p;
        assert_eq!(s1.det().unwrap(), det1, "quadratic-extension determinant identity");
        assert_eq!(s2.det().unwrap(), det2, "quadratic-extension determinant identity");
        assert!(det1 != 0 && det2 != 0, "h outside F_p makes both determinants nonzero");
        let (v11, v21) = p2_fixed_beams(ctx);
        let precoders = [v11.clone(), v11.scaled(ctx, h), v21.clone(), v21];
        return assemble_scheme(ctx, XMode::ExtP2, None, 3, precoders, &gains);
    }
    // Search path: pick the four beam columns greedily with backtracking.
    // Column k of V11 contributes {v, hv} at destination 1 and {hv} at
    // destination 2; column k of V21 contributes {v} and {v, hv}.
    let (v11, v21) = search_p2_beams(ctx, h)?;
    let precoders = [v11.clone(), v11.scaled(ctx, h), v21.clone(), v21];
    assemble_scheme(ctx, XMode::ExtP2, None, 3, precoders, &gains)
}

fn search_p2_beams(ctx: &FieldCtx, h: Gfe) -> Result<(BeamMatrix, BeamMatrix), XchError> {
    let q = ctx.size();
    let limit = (q * q * q).min(SEARCH_CAP);
    // Levels: v11 column, v21 column, alternating; trackers for both
    // destinations' signal spaces.
    #[derive(Clone, Copy)]
    enum Level {
        V11,
        V21,
    }
    let levels = [Level::V11, Level::V21, Level::V11, Level::V21];
    let mut chosen: Vec<Vec<Gfe>> = Vec::new();
    let mut stack: Vec<(RankTracker, RankTracker, u64)> = Vec::new();
    let mut t1 = RankTracker::new(ctx.p(), 6);
    let mut t2 = RankTracker::new(ctx.p(), 6);
    let mut next = 1u64;
    loop {
        let depth = chosen.len();
        if depth == levels.len() {
            break;
        }
        let mut found = None;
        let mut idx = next;
        while idx < limit {
            let col = column_candidate(ctx, 3, idx);
            let hcol = scale_col(ctx, h, &col);
            let (c1, c2): (Vec<Vec<Gfe>>, Vec<Vec<Gfe>>) = match levels[depth] {
                Level::V11 => (vec![col.clone(), hcol.clone()], vec![hcol.clone()]),
                Level::V21 => (vec![col.clone()], vec![col.clone(), hcol.clone()]),
            };
            let f1: Vec<Vec<u64>> = c1.iter().map(|c| stack_vector(ctx, c)).collect();
            let f2: Vec<Vec<u64>> = c2.iter().map(|c| stack_vector(ctx, c)).collect();
            if t1.extends_by_all(&f1) && t2.extends_by_all(&f2) {
                found = Some((col, f1, f2, idx));
                break;
            }
            idx += 1;
        }
        match found {
            Some((col, f1, f2, idx)) => {
                stack.push((t1.clone(), t2.clone(), idx + 1));
                t1.insert_all(&f1);
                t2.insert_all(&f2);
                chosen.push(col);
                next = 1;
            }
            None => {
                // Backtrack.
                let Some((old1, old2, resume)) = stack.pop() else {
                    return Err(XchError::SearchExhausted(
                        "no quadratic-extension beams found within the candidate cap".into(),
                    ));
                };
                chosen.pop();
                t1 = old1;
                t2 = old2;
                next = resume;
            }
        }
    }
    let v11 = BeamMatrix::from_cols(3, vec![chosen[0].clone(), chosen[2].clone()]);
    let v21 = BeamMatrix::from_cols(3, vec![chosen[1].clone(), chosen[3].clone()]);
    Ok((v11, v21))
}

/// General-extension alignment (n ≥ 3): three symbol extensions, n streams
/// per message, shared beam matrix v with v21 = v22 = v, v11 = g·v,
/// v12 = hg·v. Greedy column construction with backtracking.
pub fn construct_general(ctx: &FieldCtx, h: Gfe) -> Result<XScheme, XchError> {
    let n = ctx.n();
    if n < 3 {
        return Err(XchError::ConditionsNotMet(format!(
            "general symbol-extension alignment needs n ≥ 3, got n = {n}"
        )));
    }
    require_outside_base(ctx, h)?;
    let one = ctx.one();
    // g such that {g, hg, 1} and {1, h, hg} are each independent over F_p.
    let g = ctx
        .nonzero_elements()
        .find(|&g| {
            let hg = ctx.mul(h, g);
            element_columns(ctx, &[g, hg, one]).rank() == 3
                && element_columns(ctx, &[one, h, hg]).rank() == 3
        })
        .ok_or_else(|| {
            XchError::SearchExhausted("no scaling g separates the signal spaces".into())
        })?;
    let hg = ctx.mul(h, g);
    let q = ctx.size();
    let limit = q.saturating_mul(q).saturating_mul(q).min(SEARCH_CAP);
    let dim = 3 * n;
    let mut t1 = RankTracker::new(ctx.p(), dim);
    let mut t2 = RankTracker::new(ctx.p(), dim);
    let mut cols: Vec<Vec<Gfe>> = Vec::new();
    let mut stack: Vec<(RankTracker, RankTracker, u64)> = Vec::new();
    let mut next = 1u64;
    // v1 is the all-ones column; later columns are found by ascending scan.
    let mut forced_first = Some(vec![one, one, one]);
    while cols.len() < n {
        let mut found = None;
        if let Some(first) = forced_first.take() {
            found = try_general_col(ctx, (g, hg, h), &t1, &t2, &first).map(|fs| (first, fs, next));
            if found.is_none() {
                return Err(XchError::SearchExhausted(
                    "the all-ones seed column is not independent".into(),
                ));
            }
        } else {
            let mut idx = next;
            while idx < limit {
                let col = column_candidate(ctx, 3, idx);
                if let Some(fs) = try_general_col(ctx, (g, hg, h), &t1, &t2, &col) {
                    found = Some((col, fs, idx + 1));
                    break;
                }
                idx += 1;
            }
        }
        match found {
            Some((col, (f1, f2), resume)) => {
                stack.push((t1.clone(), t2.clone(), resume));
                t1.insert_all(&f1);
                t2.insert_all(&f2);
                cols.push(col);
                next = 1;
            }
            None => {
                let Some((o1, o2, resume)) = stack.pop() else {
                    return Err(XchError::SearchExhausted(
                        "no beam columns found within the candidate cap".into(),
                    ));
                };
                cols.pop();
                t1 = o1;
                t2 = o2;
                next = resume;
            }
        }
    }
    let v = BeamMatrix::from_cols(3, cols);
    let precoders = [
        v.scaled(ctx, g),
        v.scaled(ctx, hg),
        v.clone(),
        v,
    ];
    let gains = [[one, one], [h, one]];
    assemble_scheme(ctx, XMode::GeneralPn, None, 3, precoders, &gains)
}

type FpCols = (Vec<Vec<u64>>, Vec<Vec<u64>>);

/// Checks that one candidate column extends both destinations' spaces by
/// three dimensions: destination 1 gains {g·v, hg·v, v}, destination 2
/// gains {h·v, hg·v, v}.
fn try_general_col(
    ctx: &FieldCtx,
    (g, hg, h): (Gfe, Gfe, Gfe),
    t1: &RankTracker,
    t2: &RankTracker,
    col: &[Gfe],
) -> Option<FpCols> {
    let gv = stack_vector(ctx, &scale_col(ctx, g, col));
    let hgv = stack_vector(ctx, &scale_col(ctx, hg, col));
    let hv = stack_vector(ctx, &scale_col(ctx, h, col));
    let v = stack_vector(ctx, col);
    let f1 = vec![gv, hgv.clone(), v.clone()];
    let f2 = vec![hv, hgv, v];
    if t1.extends_by_all(&f1) && t2.extends_by_all(&f2) {
        Some((f1, f2))
    } else {
        None
    }
}

/// Builds a capacity-achieving scheme for any channel, dispatching on the
/// zero pattern, the normalized gain, and the extension degree. A forced
/// mode restricts the dispatch (erroring when inapplicable).
pub fn construct(ch: &XChannel, forced: Option<XMode>) -> Result<XScheme, XchError> {
    let ctx = &ch.ctx;
    let class = classify(ch);
    match forced {
        None => match class {
            XClass::Aligned { h } => match ctx.n() {
                2 => construct_p2(ctx, h),
                3 => construct_p3(ctx, h, false),
                _ => construct_general(ctx, h),
            },
            XClass::Degenerate { h } => construct_degenerate(ctx, h),
            _ => construct_zero(ch).ok_or_else(|| {
                XchError::ConditionsNotMet("zero-pattern routing not applicable".into())
            }),
        },
        Some(XMode::ZeroRouting) => construct_zero(ch).ok_or_else(|| {
            XchError::ConditionsNotMet("channel has no zero gains to route around".into())
        }),
        Some(XMode::DegenerateRate1) => {
            let norm = normalize(ch)?;
            construct_degenerate(ctx, norm.h)
        }
        Some(XMode::ScalarP3) => construct_p3(ctx, normalize(ch)?.h, false),
        Some(XMode::AltProofP3) => construct_p3(ctx, normalize(ch)?.h, true),
        Some(XMode::ExtP2) => construct_p2(ctx, normalize(ch)?.h),
        Some(XMode::GeneralPn) => construct_general(ctx, normalize(ch)?.h),
    }
}

// ---------------------------------------------------------------------------
// Verification and simulation.
// ---------------------------------------------------------------------------

fn effective_gains(ch: &XChannel, scheme: &XScheme) -> Result<[[Gfe; 2]; 2], XchError> {
    if scheme.mode.normalizes() {
        Ok(normalize(ch)?.gains(&ch.ctx))
    } else {
        Ok(*ch.gains())
    }
}

fn check_scheme_shape(ch: &XChannel, scheme: &XScheme) -> Result<(), XchError> {
    if scheme.ctx != ch.ctx {
        return Err(XchError::BadScheme(format!(
            "scheme field GF({}^{}) with modulus {} does not match channel field GF({}^{}) with modulus {}",
            scheme.ctx.p(),
            scheme.ctx.n(),
            scheme.ctx.modulus_string(),
            ch.ctx.p(),
            ch.ctx.n(),
            ch.ctx.modulus_string()
        )));
    }
    for (k, pre) in scheme.precoders.iter().enumerate() {
        if pre.num_cols() != scheme.streams[k] {
            return Err(XchError::BadScheme(format!(
                "message {} declares {} streams but its precoder has {} columns",
                MESSAGE_NAMES[k],
                scheme.streams[k],
                pre.num_cols()
            )));
        }
        if pre.uses() != scheme.m {
            return Err(XchError::BadScheme(format!(
                "message {} precoder spans {} uses but the scheme declares m = {}",
                MESSAGE_NAMES[k],
                pre.uses(),
                scheme.m
            )));
        }
        for col in pre.cols() {
            for e in col {
                scheme.ctx.element(e.0)?;
            }
        }
    }
    let declared = sum_rate(scheme.total_streams(), scheme.m, scheme.ctx.n());
    if scheme.sum_rate != declared {
        return Err(XchError::BadScheme(format!(
            "declared sum rate {} does not match {} streams over {} uses",
            scheme.sum_rate,
            scheme.total_streams(),
            scheme.m
        )));
    }
    Ok(())
}

/// Checks a scheme against a channel from scratch: shape, alignment
/// conditions, decodability at both destinations, and agreement with the
/// recorded certificates. Returns the recomputed certificates.
pub fn verify(ch: &XChannel, scheme: &XScheme) -> Result<XCertificates, XchError> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    let gains = effective_gains(ch, scheme)?;
    // Alignment conditions for the full-rate modes: interference from both
    // sources collapses into a shared subspace at each destination.
    if matches!(
        scheme.mode,
        XMode::ScalarP3 | XMode::AltProofP3 | XMode::ExtP2 | XMode::GeneralPn
    ) {
        let h = normalize(ch)?.h;
        if !spans_equal(ctx, &scheme.precoders[3], &scheme.precoders[2]) {
            return Err(XchError::VerifyFailed(
                "interference at destination 1 is not aligned: span(v22) ≠ span(v21)".into(),
            ));
        }
        let hv11 = scheme.precoders[0].scaled(ctx, h);
        if !spans_equal(ctx, &scheme.precoders[1], &hv11) {
            return Err(XchError::VerifyFailed(
                "interference at destination 2 is not aligned: span(v12) ≠ span(h·v11)".into(),
            ));
        }
    }
    let (certs, _) = certify(ctx, &gains, &scheme.precoders, scheme.m)?;
    if certs != scheme.certificates {
        return Err(XchError::VerifyFailed(format!(
            "recorded certificates (ranks {}, {}, aligned {:?}) disagree with recomputed \
             (ranks {}, {}, aligned {:?})",
            scheme.certificates.rank_s1,
            scheme.certificates.rank_s2,
            scheme.certificates.aligned_dims,
            certs.rank_s1,
            certs.rank_s2,
            certs.aligned_dims
        )));
    }
    Ok(certs)
}

fn scalings(ch: &XChannel, scheme: &XScheme) -> Result<([Gfe; 2], [Gfe; 2]), XchError> {
    if scheme.mode.normalizes() {
        let norm = normalize(ch)?;
        Ok((norm.src_mult, norm.dst_mult))
    } else {
        Ok(([ch.ctx.one(); 2], [ch.ctx.one(); 2]))
    }
}

/// Physical path for one block: superpose per-source messages, apply the
/// source scaling, cross the raw channel, apply the destination scaling,
/// then solve each destination's signal space. Returns the decoded blocks
/// in message order.
fn run_block(
    ch: &XChannel,
    scheme: &XScheme,
    scalings: &([Gfe; 2], [Gfe; 2]),
    receivers: &[ReceiverSpace; 2],
    symbols: &[Vec<u64>; 4],
) -> Result<[Vec<u64>; 4], XchError> {
    let ctx = &ch.ctx;
    let (src_mult, dst_mult) = scalings;
    let mut x = [vec![ctx.zero(); scheme.m], vec![ctx.zero(); scheme.m]];
    for k in 0..4 {
        if scheme.streams[k] == 0 {
            continue;
        }
        let contribution = scheme.precoders[k].transmit(ctx, &symbols[k]);
        let src = message_source(k);
        for (acc, &v) in x[src].iter_mut().zip(&contribution) {
            *acc = ctx.add(*acc, v);
        }
    }
    let mut decoded: [Vec<u64>; 4] = std::array::from_fn(|k| vec![0; scheme.streams[k]]);
    for dst in 0..2 {
        let mut y = vec![ctx.zero(); scheme.m];
        for src in 0..2 {
            let gain = ch.gains[dst][src];
            for (u, acc) in y.iter_mut().enumerate() {
                let sent = ctx.mul(src_mult[src], x[src][u]);
                *acc = ctx.add(*acc, ctx.mul(gain, sent));
            }
        }
        for v in y.iter_mut() {
            *v = ctx.mul(dst_mult[dst], *v);
        }
        let stacked = stack_vector(ctx, &y);
        let space = &receivers[dst];
        let z = space.s.solve(&stacked).map_err(|e| {
            XchError::DecodeAmbiguous(format!(
                "destination {} cannot separate its streams: {e}",
                dst + 1
            ))
        })?;
        for (k, range) in &space.desired {
            decoded[*k] = z[range.clone()].to_vec();
        }
    }
    Ok(decoded)
}

/// Encodes the given message blocks (one prime-field digit per stream),
/// sends them through the raw channel (including the normalization
/// scalings), and decodes at both destinations. Returns the decoded blocks
/// in message order; a verified scheme returns them unchanged.
pub fn simulate_messages(
    ch: &XChannel,
    scheme: &XScheme,
    messages: &[Vec<u64>; 4],
) -> Result<[Vec<u64>; 4], XchError> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    for (k, block) in messages.iter().enumerate() {
        if block.len() != scheme.streams[k] {
            return Err(XchError::BadScheme(format!(
                "message {} carries {} streams but {} symbols were supplied",
                MESSAGE_NAMES[k],
                scheme.streams[k],
                block.len()
            )));
        }
        if block.iter().any(|&d| d >= ctx.p()) {
            return Err(XchError::BadScheme(format!(
                "message {} symbols must be digits below p = {}",
                MESSAGE_NAMES[k],
                ctx.p()
            )));
        }
    }
    let gains = effective_gains(ch, scheme)?;
    let scalings = scalings(ch, scheme)?;
    let (_, receivers) = certify(ctx, &gains, &scheme.precoders, scheme.m)?;
    run_block(ch, scheme, &scalings, &receivers, messages)
}

/// Sends random prime-field symbols through the raw channel (including the
/// normalization scalings) and decodes at both destinations; counts trials
/// where any decoded stream differs from what was sent.
pub fn simulate(ch: &XChannel, scheme: &XScheme, trials: u64, seed: u64) -> Result<SimReport, XchError> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    let gains = effective_gains(ch, scheme)?;
    let scalings = scalings(ch, scheme)?;
    let (_, receivers) = certify(ctx, &gains, &scheme.precoders, scheme.m)?;
    let p = ctx.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    for _ in 0..trials {
        let symbols: [Vec<u64>; 4] = std::array::from_fn(|k| {
            (0..scheme.streams[k]).map(|_| rng.gen_range(0..p)).collect()
        });
        match run_block(ch, scheme, &scalings, &receivers, &symbols) {
            Ok(decoded) => {
                if decoded != symbols {
                    failures += 1;
                }
            }
            Err(XchError::DecodeAmbiguous(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SimReport { trials, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u64, n: usize) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    fn uniform(ctx: &FieldCtx, labels: [[u64; 2]; 2]) -> XChannel {
        XChannel::from_labels(ctx.clone(), labels).unwrap()
    }

    fn round_trip(ch: &XChannel, forced: Option<XMode>) -> XScheme {
        let scheme = construct(ch, forced).unwrap();
        verify(ch, &scheme).unwrap();
        let sim = simulate(ch, &scheme, 25, 7).unwrap();
        assert_eq!(sim.failures, 0, "decoding failed for {:?}", scheme.mode);
        scheme
    }

    #[test]
    fn classification_covers_all_zero_patterns() {
        let f = gf(3, 3);
        let cases = [
            ([[1, 0], [0, 2]], XClass::ParallelDirect),
            ([[0, 5], [7, 0]], XClass::ParallelCross),
            ([[0, 0], [0, 0]], XClass::Disconnected),
            ([[1, 2], [3, 0]], XClass::SingleLink),
            ([[0, 2], [0, 1]], XClass::SingleLink),
        ];
        for (labels, want) in cases {
            assert_eq!(classify(&uniform(&f, labels)), want);
        }
        assert_eq!(classify(&uniform(&f, [[1, 0], [0, 2]])).linear_capacity(), Rate::new(2, 1));
        assert_eq!(classify(&uniform(&f, [[0, 0], [0, 0]])).linear_capacity(), Rate::new(0, 1));
        // Fully connected: h = h12·h21/(h11·h22). With all gains 1 except
        // h22 = 2: h = 1/2 = 2 ∈ F_3.
        let degenerate = uniform(&f, [[1, 1], [1, 2]]);
        match classify(&degenerate) {
            XClass::Degenerate { h } => assert_eq!(h, Gfe(2)),
            other => panic!("expected degenerate, got {other:?}"),
        }
        assert_eq!(classify(&degenerate).capacity(), None);
        // h = s (label 3) is outside F_3.
        let aligned = uniform(&f, [[1, 1], [3, 1]]);
        match classify(&aligned) {
            XClass::Aligned { h } => assert_eq!(h, Gfe(3)),
            other => panic!("expected aligned, got {other:?}"),
        }
        assert_eq!(classify(&aligned).linear_capacity(), Rate::new(4, 3));
    }

    #[test]
    fn normalization_reaches_the_reduced_gain_table_exhaustively() {
        // Every fully connected GF(9) channel normalizes to [[1,1],[h,1]];
        // the assertion inside normalize() checks the identity.
        let f = gf(3, 2);
        let mut degenerate = 0u32;
        for h11 in 1..9u64 {
            for h12 in 1..9u64 {
                for h21 in 1..9u64 {
                    for h22 in 1..9u64 {
                        let ch = uniform(&f, [[h11, h12], [h21, h22]]);
                        let norm = normalize(&ch).unwrap();
                        let expect = f
                            .div(f.mul(Gfe(h12), Gfe(h21)), f.mul(Gfe(h11), Gfe(h22)))
                            .unwrap();
                        assert_eq!(norm.h, expect);
                        if f.in_base_field(norm.h) {
                            degenerate += 1;
                        }
                    }
                }
            }
        }
        // Degenerate fraction over nonzero tuples: (p-1)/(p^n-1) = 1/4.
        assert_eq!(degenerate, 8u32.pow(4) / 4);
        assert_eq!(
            normalize(&uniform(&f, [[0, 1], [1, 1]])).unwrap_err(),
            XchError::NotFullyConnected
        );
    }

    #[test]
    fn cubic_scalar_construction_picks_documented_beams() {
        let f = gf(3, 3);
        let h = Gfe(3); // s
        let scheme = construct_p3(&f, h, false).unwrap();
        assert_eq!(scheme.mode, XMode::ScalarP3);
        assert_eq!(scheme.m, 1);
        assert_eq!(scheme.streams, [1, 1, 1, 1]);
        assert_eq!(scheme.sum_rate, Rate::new(4, 3));
        // Smallest admissible v11 for h = s is s itself; then v12 = s².
        assert_eq!(scheme.precoders[0].col(0), &[Gfe(3)]);
        assert_eq!(scheme.precoders[1].col(0), &[Gfe(9)]);
        assert_eq!(scheme.precoders[2].col(0), &[Gfe(1)]);
        assert_eq!(scheme.precoders[3].col(0), &[Gfe(1)]);
        assert_eq!(scheme.certificates.rank_s1, 3);
        assert_eq!(scheme.certificates.rank_s2, 3);
        assert_eq!(scheme.certificates.aligned_dims, [1, 1]);
        // Alternate choice: v11 = h, both signal spaces become {1, h, h²}.
        let alt = construct_p3(&f, h, true).unwrap();
        assert_eq!(alt.precoders[0].col(0), &[h]);
        assert_eq!(alt.precoders[1].col(0), &[f.mul(h, h)]);
        // Degenerate h is rejected.
        assert!(matches!(
            construct_p3(&f, Gfe(2), false),
            Err(XchError::ConditionsNotMet(_))
        ));
    }

    #[test]
    fn cubic_round_trip_for_every_admissible_gain() {
        let f = gf(3, 3);
        for h in 3..27u64 {
            // Normalized channel with gains [[1,1],[h,1]].
            let ch = uniform(&f, [[1, 1], [h, 1]]);
            let scheme = round_trip(&ch, None);
            assert_eq!(scheme.mode, XMode::ScalarP3);
            round_trip(&ch, Some(XMode::AltProofP3));
        }
    }

    #[test]
    fn raw_channel_round_trip_exercises_normalization() {
        let f = gf(3, 3);
        // h = (7·11)/(5·13): verify against direct construction.
        let ch = uniform(&f, [[5, 7], [11, 13]]);
        if let XClass::Aligned { .. } = classify(&ch) {
            let scheme = round_trip(&ch, None);
            assert_eq!(scheme.sum_rate, Rate::new(4, 3));
        } else {
            panic!("channel unexpectedly degenerate");
        }
    }

    #[test]
    fn quadratic_extension_uses_determinant_identities_for_odd_p() {
        let f = gf(3, 2);
        for h in 3..9u64 {
            let h = Gfe(h);
            let (s1, s2, c) = p2_certificate_matrices(&f, h).unwrap();
            assert_eq!(c, 2); // modulus s² + 1 over F_3, so s² = 2.
            let d = f.digits(h);
            let det1 = c * d[1] * d[1] % 3;
            assert_eq!(s1.det().unwrap(), det1);
            assert_eq!(s2.det().unwrap(), d[1] * d[1] % 3 * ((det1 + 3 - d[0] * d[0] % 3) % 3) % 3);
            let ch = uniform(&f, [[1, 1], [h.0, 1]]);
            let scheme = round_trip(&ch, None);
            assert_eq!(scheme.mode, XMode::ExtP2);
            assert_eq!(scheme.m, 3);
            assert_eq!(scheme.streams, [2, 2, 2, 2]);
            assert_eq!(scheme.sum_rate, Rate::new(4, 3));
            assert_eq!(scheme.certificates.rank_s1, 6);
            assert_eq!(scheme.certificates.aligned_dims, [2, 2]);
        }
    }

    #[test]
    fn quadratic_extension_search_handles_p2_and_odd_moduli() {
        // GF(4): no quadratic non-residue exists, so the search path runs.
        let f = gf(2, 2);
        for h in [2u64, 3] {
            assert!(p2_certificate_matrices(&f, Gfe(h)).is_none());
            let ch = uniform(&f, [[1, 1], [h, 1]]);
            let scheme = round_trip(&ch, None);
            assert_eq!(scheme.mode, XMode::ExtP2);
            assert_eq!(scheme.sum_rate, Rate::new(4, 3));
        }
        // A quadratic modulus with a linear term also takes the search path.
        let f = FieldCtx::with_modulus(3, 2, &[1, 1, 2]).unwrap();
        let h = f.element(5).unwrap();
        assert!(!f.in_base_field(h));
        assert!(p2_certificate_matrices(&f, h).is_none());
        let ch = uniform(&f, [[1, 1], [5, 1]]);
        round_trip(&ch, None);
    }

    #[test]
    fn general_extension_round_trips() {
        // GF(81): n = 4 forces the general construction.
        let f = gf(3, 4);
        let ch = uniform(&f, [[1, 1], [3, 1]]);
        let scheme = round_trip(&ch, None);
        assert_eq!(scheme.mode, XMode::GeneralPn);
        assert_eq!(scheme.m, 3);
        assert_eq!(scheme.streams, [4, 4, 4, 4]);
        assert_eq!(scheme.sum_rate, Rate::new(4, 3));
        assert_eq!(scheme.certificates.rank_s1, 12);
        assert_eq!(scheme.certificates.aligned_dims, [4, 4]);
        // Forcing the general mode over a cubic extension also works.
        let f3 = gf(5, 3);
        let ch3 = uniform(&f3, [[1, 1], [5, 1]]);
        let scheme3 = round_trip(&ch3, Some(XMode::GeneralPn));
        assert_eq!(scheme3.streams, [3, 3, 3, 3]);
    }

    #[test]
    fn degenerate_and_zero_channels_get_routing_schemes() {
        let f = gf(3, 3);
        // Degenerate: h = 1/2 = 2 ∈ F_3.
        let ch = uniform(&f, [[1, 1], [1, 2]]);
        let scheme = round_trip(&ch, None);
        assert_eq!(scheme.mode, XMode::DegenerateRate1);
        assert_eq!(scheme.sum_rate, Rate::new(1, 1));
        assert_eq!(scheme.streams, [3, 0, 0, 0]);
        // Zero patterns: scheme rate equals the classified capacity.
        for labels in [
            [[1u64, 0], [0, 2]],
            [[0, 5], [7, 0]],
            [[0, 0], [0, 0]],
            [[1, 2], [3, 0]],
            [[0, 0], [0, 3]],
        ] {
            let ch = uniform(&f, labels);
            let class = classify(&ch);
            let scheme = round_trip(&ch, None);
            assert_eq!(scheme.mode, XMode::ZeroRouting);
            assert_eq!(scheme.zero_case, class.zero_case());
            assert_eq!(scheme.sum_rate, class.linear_capacity());
        }
        // Forcing zero routing on a fully connected channel fails.
        assert!(matches!(
            construct(&uniform(&f, [[1, 1], [3, 1]]), Some(XMode::ZeroRouting)),
            Err(XchError::ConditionsNotMet(_))
        ));
    }

    #[test]
    fn verify_rejects_tampered_schemes() {
        let f = gf(3, 3);
        let ch = uniform(&f, [[1, 1], [3, 1]]);
        let good = construct(&ch, None).unwrap();
        // Rescaling v22 by a prime-field constant keeps the span equality, so
        // the scheme stays valid; moving it off the line breaks alignment.
        let mut rescaled = good.clone();
        rescaled.precoders[3] = BeamMatrix::from_scalars(&[Gfe(2)]);
        verify(&ch, &rescaled).unwrap();
        let mut bad = good.clone();
        bad.precoders[3] = BeamMatrix::from_scalars(&[Gfe(3)]);
        assert!(matches!(verify(&ch, &bad), Err(XchError::VerifyFailed(_))));
        // Corrupt the recorded certificates.
        let mut stale = good.clone();
        stale.certificates.rank_s2 = 2;
        assert!(matches!(verify(&ch, &stale), Err(XchError::VerifyFailed(_))));
        // Mismatched field.
        let other = gf(2, 2);
        let ch2 = uniform(&other, [[1, 1], [2, 1]]);
        assert!(matches!(verify(&ch2, &good), Err(XchError::BadScheme(_))));
        // Lying about the sum rate.
        let mut inflated = good.clone();
        inflated.sum_rate = Rate::new(2, 1);
        assert!(matches!(verify(&ch, &inflated), Err(XchError::BadScheme(_))));
        // Verifying the original still passes.
        verify(&ch, &good).unwrap();
    }

    #[test]
    fn simulate_is_deterministic_for_a_seed() {
        let f = gf(3, 2);
        let ch = uniform(&f, [[1, 1], [5, 1]]);
        let scheme = construct(&ch, None).unwrap();
        let a = simulate(&ch, &scheme, 50, 123).unwrap();
        let b = simulate(&ch, &scheme, 50, 123).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.failures, 0);
    }
}
