//! The 3-user interference channel over GF(p^n): each source k sends one
//! message to destination k while interfering with the other two.
//!
//! Invertible per-user scalings reduce any fully connected channel to four
//! effective gains (h̄11, h̄22, h̄33, h̄) arranged as
//! [[h̄11, 1, 1], [1, h̄22, 1], [1, h̄, h̄33]]; classification and the
//! alignment constructions work on that tuple. Channels with zero gains
//! fall to the zero-pattern analysis in [`zero`]. Every scheme carries rank
//! certificates, verifies from scratch, and replays end to end through the
//! raw channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::beam::{column_candidate, full_symbol_beams, scale_col, spans_equal, BeamMatrix};
use crate::fplinalg::{element_columns, stack_vector, MatFp, RankTracker};
use crate::gf::{FieldCtx, GfError, Gfe};
use crate::{Rate, SimReport};

pub mod zero;

/// Per-level candidate cap for greedy precoder searches.
const SEARCH_CAP: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Ic3Error {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("channel has a zero coefficient; normalization needs a fully connected channel")]
    NotFullyConnected,
    #[error("channel is fully connected; zero-pattern analysis does not apply")]
    FullyConnected,
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

/// A constant 3-user interference channel: gains[j][i] is the gain from
/// source i to destination j (0-indexed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ic3Channel {
    ctx: FieldCtx,
    gains: [[Gfe; 3]; 3],
}

impl Ic3Channel {
    pub fn new(ctx: FieldCtx, gains: [[Gfe; 3]; 3]) -> Result<Ic3Channel, GfError> {
        for row in &gains {
            for g in row {
                ctx.element(g.0)?;
            }
        }
        Ok(Ic3Channel { ctx, gains })
    }

    pub fn from_labels(ctx: FieldCtx, labels: [[u64; 3]; 3]) -> Result<Ic3Channel, GfError> {
        let mut gains = [[Gfe(0); 3]; 3];
        for j in 0..3 {
            for i in 0..3 {
                gains[j][i] = ctx.element(labels[j][i])?;
            }
        }
        Ok(Ic3Channel { ctx, gains })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn gain(&self, dst: usize, src: usize) -> Gfe {
        self.gains[dst][src]
    }

    pub fn gains(&self) -> &[[Gfe; 3]; 3] {
        &self.gains
    }

    pub fn is_fully_connected(&self) -> bool {
        self.gains.iter().flatten().all(|g| g.0 != 0)
    }
}

// ---------------------------------------------------------------------------
// Normalization.
// ---------------------------------------------------------------------------

/// Invertible per-user scalings that reduce a fully connected channel to the
/// effective gain table [[h̄11, 1, 1], [1, h̄22, 1], [1, h̄, h̄33]]: each
/// source transmits src_mult[i]·x_i, each destination reads dst_mult[j]·ȳ_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ic3Normalization {
    /// Normalized direct gains h̄11, h̄22, h̄33.
    pub direct: [Gfe; 3],
    /// Normalized cross gain h̄ (the one cross entry not scaled to 1).
    pub cross: Gfe,
    pub src_mult: [Gfe; 3],
    pub dst_mult: [Gfe; 3],
}

impl Ic3Normalization {
    /// Effective gain table after scaling.
    pub fn gains(&self, ctx: &FieldCtx) -> [[Gfe; 3]; 3] {
        let one = ctx.one();
        [
            [self.direct[0], one, one],
            [one, self.direct[1], one],
            [one, self.cross, self.direct[2]],
        ]
    }
}

pub fn normalize(ch: &Ic3Channel) -> Result<Ic3Normalization, Ic3Error> {
    if !ch.is_fully_connected() {
        return Err(Ic3Error::NotFullyConnected);
    }
    let f = &ch.ctx;
    let g = &ch.gains;
    let mul = |a: Gfe, b: Gfe| f.mul(a, b);
    let div = |a: Gfe, b: Gfe| f.div(a, b).expect("nonzero denominator");
    let (h11, h12, h13) = (g[0][0], g[0][1], g[0][2]);
    let (h21, h22, h23) = (g[1][0], g[1][1], g[1][2]);
    let (h31, h32, h33) = (g[2][0], g[2][1], g[2][2]);
    let direct = [
        div(mul(h11, h23), mul(h13, h21)),
        div(mul(h22, h13), mul(h23, h12)),
        div(mul(h33, h21), mul(h31, h23)),
    ];
    let cross = div(mul(mul(h13, h21), h32), mul(mul(h12, h23), h31));
    let src_mult = [div(mul(h12, h23), mul(h13, h21)), f.one(), div(h12, h13)];
    let dst_mult = [
        f.inv(h12).unwrap(),
        div(h13, mul(h12, h23)),
        div(mul(h13, h21), mul(mul(h12, h23), h31)),
    ];
    let norm = Ic3Normalization { direct, cross, src_mult, dst_mult };
    // The scalings must reproduce the effective gain table exactly.
    let want = norm.gains(f);
    for j in 0..3 {
        for i in 0..3 {
            let eff = f.mul(norm.dst_mult[j], f.mul(g[j][i], norm.src_mult[i]));
            assert_eq!(eff, want[j][i], "normalization identity violated");
        }
    }
    Ok(norm)
}

// ---------------------------------------------------------------------------
// Classification.
// ---------------------------------------------------------------------------

/// One named feasibility condition with its outcome; failed conditions carry
/// the witnessing base-field membership or linear dependence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionReport {
    pub name: String,
    pub holds: bool,
    pub witness: Option<String>,
}

fn outside_base(ctx: &FieldCtx, name: impl Into<String>, value: Gfe) -> ConditionReport {
    let holds = !ctx.in_base_field(value);
    let witness = (!holds).then(|| format!("{} lies in F_{}", ctx.show_poly(value), ctx.p()));
    ConditionReport { name: name.into(), holds, witness }
}

fn inside_base(ctx: &FieldCtx, name: impl Into<String>, value: Gfe) -> ConditionReport {
    let holds = ctx.in_base_field(value);
    let witness = (!holds).then(|| format!("{} lies outside F_{}", ctx.show_poly(value), ctx.p()));
    ConditionReport { name: name.into(), holds, witness }
}

/// Requires the listed elements to be F_p-independent; the witness on
/// failure is an explicit vanishing combination.
fn full_rank(ctx: &FieldCtx, name: impl Into<String>, elements: &[Gfe]) -> ConditionReport {
    let mat = element_columns(ctx, elements);
    let holds = mat.rank() == elements.len();
    let witness = (!holds).then(|| {
        let ker = mat.kernel();
        let combo: Vec<String> = (0..elements.len())
            .filter(|&i| ker[(i, 0)] != 0)
            .map(|i| format!("{}·({})", ker[(i, 0)], ctx.show_poly(elements[i])))
            .collect();
        format!("dependence 0 = {}", combo.join(" + "))
    });
    ConditionReport { name: name.into(), holds, witness }
}

fn descending_powers(ctx: &FieldCtx, h: Gfe, top: usize) -> Vec<Gfe> {
    (0..=top).rev().map(|k| ctx.pow(h, k as u64)).collect()
}

fn eigen_conditions(ctx: &FieldCtx, direct: [Gfe; 3], cross: Gfe) -> Vec<ConditionReport> {
    let mut conds = vec![inside_base(ctx, "hbar in F_p", cross)];
    for (k, &d) in direct.iter().enumerate() {
        conds.push(outside_base(ctx, format!("hbar{0}{0} outside F_p", k + 1), d));
    }
    conds
}

/// The destination-k signal-space chain for the odd-n powers construction:
/// desired beams scaled by h̄kk followed by the interference powers.
fn odd_chain(ctx: &FieldCtx, own: Gfe, cross: Gfe, first: bool) -> Vec<Gfe> {
    let l = ctx.n() / 2;
    let (own_top, other_top) = if first { (l, l - 1) } else { (l - 1, l) };
    let mut chain: Vec<Gfe> = descending_powers(ctx, cross, own_top)
        .iter()
        .map(|&x| ctx.mul(own, x))
        .collect();
    chain.extend(descending_powers(ctx, cross, other_top));
    chain
}

fn odd_conditions(ctx: &FieldCtx, direct: [Gfe; 3], cross: Gfe) -> Vec<ConditionReport> {
    let l = ctx.n() / 2;
    let mut conds = vec![full_rank(
        ctx,
        format!("powers 1..hbar^{l} independent"),
        &descending_powers(ctx, cross, l),
    )];
    for k in 0..3 {
        conds.push(full_rank(
            ctx,
            format!("S{} chain spans GF(p^n)", k + 1),
            &odd_chain(ctx, direct[k], cross, k == 0),
        ));
    }
    conds
}

fn ext5_conditions(ctx: &FieldCtx, direct: [Gfe; 3], cross: Gfe) -> Vec<ConditionReport> {
    let [e1, e2, e3] = direct;
    let quotient = |name: &str, d: Gfe| {
        if d.0 == 0 {
            ConditionReport {
                name: name.into(),
                holds: false,
                witness: Some("denominator is zero".into()),
            }
        } else {
            outside_base(ctx, name, ctx.div(cross, d).unwrap())
        }
    };
    vec![
        outside_base(ctx, "hbar11 outside F_p", e1),
        outside_base(ctx, "hbar*hbar11 outside F_p", ctx.mul(cross, e1)),
        outside_base(ctx, "hbar22 outside F_p", e2),
        quotient("hbar/hbar22 outside F_p", e2),
        outside_base(ctx, "hbar33 outside F_p", e3),
        quotient("hbar/hbar33 outside F_p", e3),
    ]
}

/// Capacity classification of a 3-user channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ic3Class {
    /// Some gain is zero: routing or a one-sided structure applies.
    Zero(zero::ZeroClass),
    /// h̄ ∈ F_p with every h̄kk outside: eigenvector alignment, C = 3/2.
    Eigen,
    /// Odd n = 2l+1 with independent powers of h̄: C_linear = (3l+1)/(2l+1).
    OddPowers { l: usize },
    /// n = 2 with all six quotient conditions: C_linear = 6/5.
    Ext5,
    /// No construction applies; rate 1 is still achievable when fully
    /// connected.
    Unclassified,
}

impl Ic3Class {
    /// Linear sum capacity, in GF(p^n) symbols per channel use, where the
    /// classification determines it.
    pub fn linear_capacity(&self) -> Option<Rate> {
        match self {
            Ic3Class::Zero(zc) => Some(zc.linear_capacity()),
            Ic3Class::Eigen => Some(Rate::new(3, 2)),
            Ic3Class::OddPowers { l } => {
                Some(Rate::new(3 * *l as u64 + 1, 2 * *l as u64 + 1))
            }
            Ic3Class::Ext5 => Some(Rate::new(6, 5)),
            Ic3Class::Unclassified => None,
        }
    }

    /// Information-theoretic sum capacity, where known.
    pub fn capacity(&self) -> Option<Rate> {
        match self {
            Ic3Class::Zero(zc) => zc.capacity(),
            Ic3Class::Eigen => Some(Rate::new(3, 2)),
            _ => None,
        }
    }

    /// Stable bucket label for reports and censuses.
    pub fn label(&self) -> String {
        match self {
            Ic3Class::Zero(zc) => format!("zero_case_{}", zc.case()),
            Ic3Class::Eigen => "eigen".into(),
            Ic3Class::OddPowers { .. } => "odd_powers".into(),
            Ic3Class::Ext5 => "ext5".into(),
            Ic3Class::Unclassified => "unclassified".into(),
        }
    }
}

/// A classification with the per-condition evidence that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ic3Classification {
    pub class: Ic3Class,
    pub conditions: Vec<ConditionReport>,
}

impl Ic3Classification {
    pub fn linear_capacity(&self) -> Option<Rate> {
        self.class.linear_capacity()
    }

    pub fn capacity(&self) -> Option<Rate> {
        self.class.capacity()
    }
}

/// Classifies a normalized gain tuple. The eigenvector test runs first, so
/// tuples with h̄ ∈ F_p land there even when the n = 2 quotient conditions
/// also hold; the remaining family is chosen by the parity of n.
pub fn classify_normalized(ctx: &FieldCtx, direct: [Gfe; 3], cross: Gfe) -> Ic3Classification {
    let eigen = eigen_conditions(ctx, direct, cross);
    if eigen.iter().all(|c| c.holds) {
        return Ic3Classification { class: Ic3Class::Eigen, conditions: eigen };
    }
    let n = ctx.n();
    let mut conditions = eigen;
    if n == 2 {
        let ext5 = ext5_conditions(ctx, direct, cross);
        if ext5.iter().all(|c| c.holds) {
            return Ic3Classification { class: Ic3Class::Ext5, conditions: ext5 };
        }
        conditions.extend(ext5);
    } else if n >= 3 && n % 2 == 1 {
        let odd = odd_conditions(ctx, direct, cross);
        if odd.iter().all(|c| c.holds) {
            return Ic3Classification {
                class: Ic3Class::OddPowers { l: n / 2 },
                conditions: odd,
            };
        }
        conditions.extend(odd);
    }
    Ic3Classification { class: Ic3Class::Unclassified, conditions }
}

/// Classifies a channel end to end: the zero-pattern class when some gain
/// is zero, otherwise the normalized tuple's feasibility class.
pub fn classify(ch: &Ic3Channel) -> Ic3Classification {
    if !ch.is_fully_connected() {
        let zc = zero::classify_zero(ch).expect("channel has a zero gain");
        let conditions = match &zc {
            zero::ZeroClass::Structure(info) => info.condition_reports(&ch.ctx),
            _ => Vec::new(),
        };
        return Ic3Classification { class: Ic3Class::Zero(zc), conditions };
    }
    let norm = normalize(ch).expect("fully connected");
    classify_normalized(&ch.ctx, norm.direct, norm.cross)
}

// ---------------------------------------------------------------------------
// Schemes.
// ---------------------------------------------------------------------------

/// Construction family used by a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ic3Mode {
    /// Even n: all sources share one beam matrix of n/2 scalar columns.
    EigenEven,
    /// Odd n: all sources share one beam matrix of n two-use columns.
    EigenOdd,
    /// Odd n = 2l+1: beams are descending powers of h̄, streams (l+1, l, l).
    OddPowers,
    /// n = 2: five symbol extensions, four streams per source.
    Ext5P2,
    /// Fully connected with no applicable construction: route one full
    /// symbol, sum rate 1.
    DegenerateRate1,
    /// One-sided zero structure: half-dimension beams, sum rate 3/2.
    ZeroStructure,
    /// Other zero patterns: plain routing achieves capacity.
    ZeroRouting,
}

impl Ic3Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ic3Mode::EigenEven => "eigen_even",
            Ic3Mode::EigenOdd => "eigen_odd",
            Ic3Mode::OddPowers => "odd_powers",
            Ic3Mode::Ext5P2 => "ext5_p2",
            Ic3Mode::DegenerateRate1 => "degenerate_rate1",
            Ic3Mode::ZeroStructure => "zero_structure",
            Ic3Mode::ZeroRouting => "zero_routing",
        }
    }

    pub fn from_str(s: &str) -> Option<Ic3Mode> {
        Some(match s {
            "eigen_even" => Ic3Mode::EigenEven,
            "eigen_odd" => Ic3Mode::EigenOdd,
            "odd_powers" => Ic3Mode::OddPowers,
            "ext5_p2" => Ic3Mode::Ext5P2,
            "degenerate_rate1" => Ic3Mode::DegenerateRate1,
            "zero_structure" => Ic3Mode::ZeroStructure,
            "zero_routing" => Ic3Mode::ZeroRouting,
            _ => return None,
        })
    }

    /// Whether the scheme's beams live in the normalized channel rather
    /// than the raw one.
    pub fn normalizes(&self) -> bool {
        !matches!(self, Ic3Mode::ZeroStructure | Ic3Mode::ZeroRouting)
    }
}

/// Decodability evidence recorded with a scheme: the rank of each
/// destination's signal-space matrix and the number of dimensions its
/// interference collapses into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ic3Certificates {
    pub ranks: [usize; 3],
    pub aligned_dims: [usize; 3],
}

/// A complete linear scheme: per-source precoders over m channel uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ic3Scheme {
    pub ctx: FieldCtx,
    pub mode: Ic3Mode,
    /// Zero-pattern case number for zero-routing/structure schemes.
    pub zero_case: Option<u8>,
    /// Structure letter for ZeroStructure schemes.
    pub structure: Option<zero::StructureKind>,
    /// Symbol extension length (channel uses per block).
    pub m: usize,
    /// Streams per source.
    pub streams: [usize; 3],
    pub precoders: [BeamMatrix; 3],
    pub sum_rate: Rate,
    pub certificates: Ic3Certificates,
}

impl Ic3Scheme {
    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }
}

fn sum_rate(total_streams: usize, m: usize, n: usize) -> Rate {
    if total_streams == 0 {
        return Rate::new(0, 1);
    }
    Rate::new(total_streams as u64, (m * n) as u64)
}

// ---------------------------------------------------------------------------
// Receiver-side assembly shared by construct, verify, and simulate.
// ---------------------------------------------------------------------------

/// One destination's decoding system: S = [desired beams | independent
/// basis of the interference space], with effective gains applied.
struct ReceiverSpace {
    s: MatFp,
    /// Column range of S holding the destination's own streams.
    desired: std::ops::Range<usize>,
    aligned_dims: usize,
}

fn receiver_space(
    ctx: &FieldCtx,
    dst: usize,
    gains: &[[Gfe; 3]; 3],
    precoders: &[BeamMatrix; 3],
    m: usize,
) -> ReceiverSpace {
    let dim = m * ctx.n();
    let mut cols: Vec<Vec<u64>> = Vec::new();
    let own = precoders[dst].scaled(ctx, gains[dst][dst]);
    let fp = own.fp_columns(ctx);
    for c in 0..fp.cols() {
        cols.push(fp.col(c));
    }
    let desired = 0..cols.len();
    // Interference: the other sources' arrived beams, reduced to an
    // independent basis (aligned directions appear once, zero links never).
    let mut tracker = RankTracker::new(ctx.p(), dim);
    let mut aligned_dims = 0;
    for src in 0..3 {
        if src == dst {
            continue;
        }
        let arrived = precoders[src].scaled(ctx, gains[dst][src]);
        let fp = arrived.fp_columns(ctx);
        for c in 0..fp.cols() {
            let col = fp.col(c);
            if tracker.insert(&col) {
                cols.push(col);
                aligned_dims += 1;
            }
        }
    }
    ReceiverSpace { s: MatFp::from_cols(ctx.p(), dim, &cols), desired, aligned_dims }
}

fn certify(
    ctx: &FieldCtx,
    gains: &[[Gfe; 3]; 3],
    precoders: &[BeamMatrix; 3],
    m: usize,
) -> Result<(Ic3Certificates, [ReceiverSpace; 3]), Ic3Error> {
    let spaces: [ReceiverSpace; 3] =
        std::array::from_fn(|dst| receiver_space(ctx, dst, gains, precoders, m));
    for (dst, r) in spaces.iter().enumerate() {
        let rank = r.s.rank();
        if rank < r.s.cols() {
            return Err(Ic3Error::VerifyFailed(format!(
                "destination {}: signal space has rank {rank} but {} columns; \
                 desired streams are not resolvable",
                dst + 1,
                r.s.cols()
            )));
        }
    }
    let certs = Ic3Certificates {
        ranks: std::array::from_fn(|d| spaces[d].s.rank()),
        aligned_dims: std::array::from_fn(|d| spaces[d].aligned_dims),
    };
    Ok((certs, spaces))
}

fn assemble(
    ctx: &FieldCtx,
    mode: Ic3Mode,
    zero_case: Option<u8>,
    structure: Option<zero::StructureKind>,
    m: usize,
    precoders: [BeamMatrix; 3],
    gains: &[[Gfe; 3]; 3],
) -> Result<Ic3Scheme, Ic3Error> {
    let streams =
        [precoders[0].num_cols(), precoders[1].num_cols(), precoders[2].num_cols()];
    let (certificates, _) = certify(ctx, gains, &precoders, m)?;
    let total: usize = streams.iter().sum();
    Ok(Ic3Scheme {
        ctx: ctx.clone(),
        mode,
        zero_case,
        structure,
        m,
        streams,
        precoders,
        sum_rate: sum_rate(total, m, ctx.n()),
        certificates,
    })
}

// ---------------------------------------------------------------------------
// Greedy column search with backtracking.
// ---------------------------------------------------------------------------

fn candidate_fits(
    ctx: &FieldCtx,
    trackers: &[RankTracker],
    mults: &[Vec<Gfe>],
    col: &[Gfe],
) -> Option<Vec<Vec<Vec<u64>>>> {
    debug_assert_eq!(trackers.len(), mults.len());
    let per: Vec<Vec<Vec<u64>>> = mults
        .iter()
        .map(|ms| ms.iter().map(|&g| stack_vector(ctx, &scale_col(ctx, g, col))).collect())
        .collect();
    trackers
        .iter()
        .zip(&per)
        .all(|(t, vs)| t.extends_by_all(vs))
        .then_some(per)
}

fn commit(trackers: &mut [RankTracker], per: &[Vec<Vec<u64>>]) {
    for (t, vs) in trackers.iter_mut().zip(per) {
        t.insert_all(vs);
    }
}

/// Maps a scan position to a candidate label index. Spaces small enough to
/// enumerate fully are scanned in ascending label order, which makes an
/// exhausted search a proof of infeasibility. Larger spaces are probed in a
/// fixed pseudorandom order (a SplitMix64-scrambled position, reduced into
/// the space): ascending order would dwell on sparse, degenerate columns,
/// while generic columns — which satisfy generic rank constraints almost
/// surely — appear immediately.
fn candidate_index(space: u128, exhaustive: bool, pos: u64) -> u64 {
    if exhaustive {
        return pos;
    }
    let mut z = pos;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z as u128 % space) as u64
}

/// Chooses `count` m-use beam columns greedily with backtracking.
/// Candidate X at stage `st` is kept when, for every tracker k, the columns
/// `stage_mults(st)[k]·X` jointly extend tracker k's span. A dead end
/// resumes the previous stage's scan. `force_first` pins stage 0 to one
/// candidate (the all-ones column in every construction that uses it).
pub(crate) fn choose_columns(
    ctx: &FieldCtx,
    m: usize,
    count: usize,
    mut trackers: Vec<RankTracker>,
    stage_mults: &dyn Fn(usize) -> Vec<Vec<Gfe>>,
    force_first: Option<Vec<Gfe>>,
    what: &str,
) -> Result<Vec<Vec<Gfe>>, Ic3Error> {
    let q = ctx.size();
    let space = (q as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    let exhaustive = space <= SEARCH_CAP as u128;
    let limit = if exhaustive { space as u64 } else { SEARCH_CAP };
    let mut chosen: Vec<Vec<Gfe>> = Vec::new();
    let mut stack: Vec<(Vec<RankTracker>, u64)> = Vec::new();
    let mut next: u64 = 0;
    loop {
        if chosen.len() == count {
            return Ok(chosen);
        }
        let mults = stage_mults(chosen.len());
        let snapshot = trackers.clone();
        let mut found: Option<(Vec<Gfe>, u64)> = None;
        match (&force_first, chosen.is_empty()) {
            (Some(first), true) => {
                // The seed column has no alternatives: resuming past it
                // exhausts the search.
                if next == 0 {
                    if let Some(per) = candidate_fits(ctx, &trackers, &mults, first) {
                        commit(&mut trackers, &per);
                        found = Some((first.clone(), u64::MAX));
                    }
                }
            }
            _ => {
                let mut idx = next;
                while idx < limit {
                    let col = column_candidate(ctx, m, candidate_index(space, exhaustive, idx));
                    if let Some(per) = candidate_fits(ctx, &trackers, &mults, &col) {
                        commit(&mut trackers, &per);
                        found = Some((col, idx + 1));
                        break;
                    }
                    idx += 1;
                }
            }
        }
        match found {
            Some((col, resume)) => {
                stack.push((snapshot, resume));
                chosen.push(col);
                next = 0;
            }
            None => {
                let Some((snap, resume)) = stack.pop() else {
                    return Err(Ic3Error::SearchExhausted(format!(
                        "{what}: found no column assignment over GF({q}) \
                         satisfying the rank pattern"
                    )));
                };
                trackers = snap;
                chosen.pop();
                next = resume;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Constructions for fully connected channels.
// ---------------------------------------------------------------------------

fn require_all(conditions: &[ConditionReport]) -> Result<(), Ic3Error> {
    let failed: Vec<String> = conditions
        .iter()
        .filter(|c| !c.holds)
        .map(|c| match &c.witness {
            Some(w) => format!("{} ({w})", c.name),
            None => c.name.clone(),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Ic3Error::ConditionsNotMet(failed.join("; ")))
    }
}

/// Eigenvector alignment (h̄ ∈ F_p, every h̄kk outside): all three sources
/// share one beam matrix V whose columns, together with their h̄kk-multiples,
/// stay independent at every destination. Even n uses single-use scalar
/// beams; odd n uses two-use columns.
pub fn construct_eigen(ctx: &FieldCtx, norm: &Ic3Normalization) -> Result<Ic3Scheme, Ic3Error> {
    require_all(&eigen_conditions(ctx, norm.direct, norm.cross))?;
    let n = ctx.n();
    let (m, count, mode) = if n % 2 == 0 {
        (1, n / 2, Ic3Mode::EigenEven)
    } else {
        (2, n, Ic3Mode::EigenOdd)
    };
    let direct = norm.direct;
    let one = ctx.one();
    let trackers = vec![RankTracker::new(ctx.p(), m * n); 3];
    let cols = choose_columns(
        ctx,
        m,
        count,
        trackers,
        &|_| (0..3).map(|k| vec![direct[k], one]).collect(),
        Some(vec![one; m]),
        "eigenvector beams",
    )?;
    let v = BeamMatrix::from_cols(m, cols);
    let precoders = [v.clone(), v.clone(), v];
    assemble(ctx, mode, None, None, m, precoders, &norm.gains(ctx))
}

/// Powers-of-h̄ beams for odd n = 2l+1: source 1 sends the l+1 descending
/// powers h̄^l‥1, sources 2 and 3 send h̄^{l-1}‥1, and interference at each
/// destination collapses into the other sources' power span.
pub fn construct_odd(ctx: &FieldCtx, norm: &Ic3Normalization) -> Result<Ic3Scheme, Ic3Error> {
    let n = ctx.n();
    if n < 3 || n % 2 == 0 {
        return Err(Ic3Error::ConditionsNotMet(format!(
            "powers-of-hbar beams need odd extension degree n ≥ 3, got n = {n}"
        )));
    }
    require_all(&odd_conditions(ctx, norm.direct, norm.cross))?;
    let l = n / 2;
    let v1 = BeamMatrix::from_scalars(&descending_powers(ctx, norm.cross, l));
    let v23 = BeamMatrix::from_scalars(&descending_powers(ctx, norm.cross, l - 1));
    let precoders = [v1, v23.clone(), v23];
    assemble(ctx, Ic3Mode::OddPowers, None, None, 1, precoders, &norm.gains(ctx))
}

/// Five-symbol extension for n = 2: each source sends four streams, two of
/// them reusing other sources' beams so that the eight interference columns
/// at each destination collapse to six.
pub fn construct_p2(ctx: &FieldCtx, norm: &Ic3Normalization) -> Result<Ic3Scheme, Ic3Error> {
    if ctx.n() != 2 {
        return Err(Ic3Error::ConditionsNotMet(format!(
            "the five-extension construction needs n = 2, got n = {}",
            ctx.n()
        )));
    }
    require_all(&ext5_conditions(ctx, norm.direct, norm.cross))?;
    let [e1, e2, e3] = norm.direct;
    let hb = norm.cross;
    let hbi = ctx.inv(hb).expect("conditions force hbar nonzero");
    let one = ctx.one();
    let m = 5;
    // Per-stage multiplier lists per destination tracker: stage order is
    // V1¹, V1², V2¹, V2², V3¹, V3². Each list contains the gains whose
    // products with the candidate must jointly extend that destination's
    // span (desired copies and distinct interference copies).
    let stages: [[Vec<Gfe>; 3]; 6] = [
        [vec![e1, one], vec![one], vec![e3, one]],
        [vec![e1, hbi], vec![ctx.mul(e2, hbi), one], vec![one]],
        [vec![ctx.mul(e1, hb), one], vec![e2, hb], vec![hb]],
        [vec![one], vec![e2, one], vec![e3, hb]],
        [vec![one], vec![e2, one], vec![e3, hb]],
        [vec![e1, one], vec![one], vec![e3, one]],
    ];
    let trackers = vec![RankTracker::new(ctx.p(), m * ctx.n()); 3];
    let cols = choose_columns(
        ctx,
        m,
        6,
        trackers,
        &|st| stages[st].to_vec(),
        Some(vec![one; m]),
        "five-extension beams",
    )?;
    let [c0, c1, c2, c3, c4, c5]: [Vec<Gfe>; 6] = cols.try_into().expect("six stages");
    // Stream 3 and 4 of each source reuse other sources' beams.
    let v1 = BeamMatrix::from_cols(
        m,
        vec![c0.clone(), c1.clone(), scale_col(ctx, hb, &c2), c5.clone()],
    );
    let v2 = BeamMatrix::from_cols(
        m,
        vec![c2, c3.clone(), c4.clone(), scale_col(ctx, hbi, &c1)],
    );
    let v3 = BeamMatrix::from_cols(m, vec![c4, c5, c0, c3]);
    assemble(ctx, Ic3Mode::Ext5P2, None, None, m, [v1, v2, v3], &norm.gains(ctx))
}

/// Rate-1 fallback for a fully connected channel with no applicable
/// construction: source 1 sends one full symbol, everyone else is silent.
pub fn construct_degenerate(
    ctx: &FieldCtx,
    norm: &Ic3Normalization,
) -> Result<Ic3Scheme, Ic3Error> {
    let empty = BeamMatrix::new(1);
    let precoders = [full_symbol_beams(ctx), empty.clone(), empty];
    assemble(ctx, Ic3Mode::DegenerateRate1, None, None, 1, precoders, &norm.gains(ctx))
}

/// Builds the best-known scheme for a channel, or the scheme of a forced
/// mode. Eigen forcing accepts either parity tag and checks it matches the
/// field's degree.
pub fn construct(ch: &Ic3Channel, forced: Option<Ic3Mode>) -> Result<Ic3Scheme, Ic3Error> {
    let ctx = &ch.ctx;
    match forced {
        None => {
            if !ch.is_fully_connected() {
                return zero::construct_zero(ch);
            }
            let norm = normalize(ch)?;
            match classify_normalized(ctx, norm.direct, norm.cross).class {
                Ic3Class::Eigen => construct_eigen(ctx, &norm),
                Ic3Class::OddPowers { .. } => construct_odd(ctx, &norm),
                Ic3Class::Ext5 => construct_p2(ctx, &norm),
                Ic3Class::Unclassified => construct_degenerate(ctx, &norm),
                Ic3Class::Zero(_) => unreachable!("channel is fully connected"),
            }
        }
        Some(mode @ (Ic3Mode::EigenEven | Ic3Mode::EigenOdd)) => {
            let scheme = construct_eigen(ctx, &normalize(ch)?)?;
            if scheme.mode != mode {
                return Err(Ic3Error::ConditionsNotMet(format!(
                    "extension degree {} builds {}, not {}",
                    ctx.n(),
                    scheme.mode.as_str(),
                    mode.as_str()
                )));
            }
            Ok(scheme)
        }
        Some(Ic3Mode::OddPowers) => construct_odd(ctx, &normalize(ch)?),
        Some(Ic3Mode::Ext5P2) => construct_p2(ctx, &normalize(ch)?),
        Some(Ic3Mode::DegenerateRate1) => construct_degenerate(ctx, &normalize(ch)?),
        Some(Ic3Mode::ZeroRouting) => zero::construct_routing(ch),
        Some(Ic3Mode::ZeroStructure) => zero::construct_structure(ch),
    }
}

// ---------------------------------------------------------------------------
// Alignment-depth certificate.
// ---------------------------------------------------------------------------

/// The longest feasible alignment chain for extension degree n:
/// 2n − ⌊n/2⌋ − 1 (= 3l+1 for odd n = 2l+1).
pub const fn alignment_depth(n: usize) -> usize {
    2 * n - n / 2 - 1
}

/// Evidence that alignment chains cannot exceed [`alignment_depth`] on this
/// channel: the powers of h̄ up to l stay independent and the depth-(l+1)
/// desired/interference chain at destination 1 spans the whole field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepthCertificate {
    pub n: usize,
    pub depth: usize,
    pub powers_rank: usize,
    pub chain_rank: usize,
}

pub fn check_alignment_depth(
    ctx: &FieldCtx,
    norm: &Ic3Normalization,
) -> Result<DepthCertificate, Ic3Error> {
    let n = ctx.n();
    if n < 3 || n % 2 == 0 {
        return Err(Ic3Error::ConditionsNotMet(format!(
            "the alignment-depth bound applies to odd extension degree n ≥ 3, got n = {n}"
        )));
    }
    let l = n / 2;
    let powers = full_rank(
        ctx,
        format!("powers 1..hbar^{l} independent"),
        &descending_powers(ctx, norm.cross, l),
    );
    let chain = full_rank(
        ctx,
        "depth chain spans GF(p^n)",
        &odd_chain(ctx, norm.direct[0], norm.cross, true),
    );
    require_all(&[powers, chain])?;
    Ok(DepthCertificate {
        n,
        depth: alignment_depth(n),
        powers_rank: l + 1,
        chain_rank: n,
    })
}

// ---------------------------------------------------------------------------
// Verification and simulation.
// ---------------------------------------------------------------------------

fn effective_gains(ch: &Ic3Channel, scheme: &Ic3Scheme) -> Result<[[Gfe; 3]; 3], Ic3Error> {
    if scheme.mode.normalizes() {
        Ok(normalize(ch)?.gains(&ch.ctx))
    } else {
        Ok(*ch.gains())
    }
}

fn check_scheme_shape(ch: &Ic3Channel, scheme: &Ic3Scheme) -> Result<(), Ic3Error> {
    if scheme.ctx != ch.ctx {
        return Err(Ic3Error::BadScheme(format!(
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
            return Err(Ic3Error::BadScheme(format!(
                "source {} declares {} streams but its precoder has {} columns",
                k + 1,
                scheme.streams[k],
                pre.num_cols()
            )));
        }
        if pre.uses() != scheme.m {
            return Err(Ic3Error::BadScheme(format!(
                "source {} precoder spans {} uses but the scheme declares m = {}",
                k + 1,
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
        return Err(Ic3Error::BadScheme(format!(
            "declared sum rate {} does not match {} streams over {} uses",
            scheme.sum_rate,
            scheme.total_streams(),
            scheme.m
        )));
    }
    Ok(())
}

fn span_contains(ctx: &FieldCtx, container: &BeamMatrix, inner: &BeamMatrix) -> bool {
    container.hstack(inner).rank(ctx) == container.rank(ctx)
}

/// Checks a scheme against a channel from scratch: shape, the mode's
/// alignment identities, decodability at all three destinations, and
/// agreement with the recorded certificates. Returns the recomputed
/// certificates.
pub fn verify(ch: &Ic3Channel, scheme: &Ic3Scheme) -> Result<Ic3Certificates, Ic3Error> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    let gains = effective_gains(ch, scheme)?;
    match scheme.mode {
        Ic3Mode::EigenEven | Ic3Mode::EigenOdd => {
            for k in [1, 2] {
                if !spans_equal(ctx, &scheme.precoders[k], &scheme.precoders[0]) {
                    return Err(Ic3Error::VerifyFailed(format!(
                        "eigenvector alignment broken: span(V{}) ≠ span(V1)",
                        k + 1
                    )));
                }
            }
        }
        Ic3Mode::OddPowers => {
            let hb = normalize(ch)?.cross;
            if !spans_equal(ctx, &scheme.precoders[1], &scheme.precoders[2]) {
                return Err(Ic3Error::VerifyFailed(
                    "interference alignment broken: span(V2) ≠ span(V3)".into(),
                ));
            }
            let v1 = &scheme.precoders[0];
            let scaled = scheme.precoders[1].scaled(ctx, hb);
            for (label, beams) in [("V3", &scheme.precoders[2]), ("h̄·V2", &scaled)] {
                if !span_contains(ctx, v1, beams) {
                    return Err(Ic3Error::VerifyFailed(format!(
                        "interference alignment broken: {label} ⊄ span(V1)"
                    )));
                }
            }
        }
        Ic3Mode::Ext5P2 => {
            if scheme.m != 5 || scheme.streams != [4, 4, 4] {
                return Err(Ic3Error::BadScheme(
                    "five-extension schemes carry four streams per source over five uses"
                        .into(),
                ));
            }
            let hb = normalize(ch)?.cross;
            let hbi = ctx.inv(hb)?;
            let v = &scheme.precoders;
            let identities: [(&str, Vec<Gfe>, Vec<Gfe>); 6] = [
                ("V1[3] = h̄·V2[1]", v[0].col(2).to_vec(), scale_col(ctx, hb, v[1].col(0))),
                ("V1[4] = V3[2]", v[0].col(3).to_vec(), v[2].col(1).to_vec()),
                ("V2[3] = V3[1]", v[1].col(2).to_vec(), v[2].col(0).to_vec()),
                ("V2[4] = h̄⁻¹·V1[2]", v[1].col(3).to_vec(), scale_col(ctx, hbi, v[0].col(1))),
                ("V3[3] = V1[1]", v[2].col(2).to_vec(), v[0].col(0).to_vec()),
                ("V3[4] = V2[2]", v[2].col(3).to_vec(), v[1].col(1).to_vec()),
            ];
            for (name, a, b) in identities {
                if a != b {
                    return Err(Ic3Error::VerifyFailed(format!(
                        "five-extension column identity {name} fails"
                    )));
                }
            }
        }
        Ic3Mode::DegenerateRate1 | Ic3Mode::ZeroStructure | Ic3Mode::ZeroRouting => {}
    }
    let (certs, _) = certify(ctx, &gains, &scheme.precoders, scheme.m)?;
    if certs != scheme.certificates {
        return Err(Ic3Error::VerifyFailed(format!(
            "recorded certificates (ranks {:?}, aligned {:?}) disagree with recomputed \
             (ranks {:?}, aligned {:?})",
            scheme.certificates.ranks,
            scheme.certificates.aligned_dims,
            certs.ranks,
            certs.aligned_dims
        )));
    }
    Ok(certs)
}

fn scalings(ch: &Ic3Channel, scheme: &Ic3Scheme) -> Result<([Gfe; 3], [Gfe; 3]), Ic3Error> {
    if scheme.mode.normalizes() {
        let norm = normalize(ch)?;
        Ok((norm.src_mult, norm.dst_mult))
    } else {
        Ok(([ch.ctx.one(); 3], [ch.ctx.one(); 3]))
    }
}

/// Physical path for one block: superpose per-source streams, apply the
/// source scaling, cross the raw channel, apply the destination scaling,
/// then solve each destination's signal space. Returns the decoded blocks
/// per source.
fn run_block(
    ch: &Ic3Channel,
    scheme: &Ic3Scheme,
    scalings: &([Gfe; 3], [Gfe; 3]),
    receivers: &[ReceiverSpace; 3],
    symbols: &[Vec<u64>; 3],
) -> Result<[Vec<u64>; 3], Ic3Error> {
    let ctx = &ch.ctx;
    let (src_mult, dst_mult) = scalings;
    let mut x: [Vec<Gfe>; 3] = std::array::from_fn(|_| vec![ctx.zero(); scheme.m]);
    for k in 0..3 {
        if scheme.streams[k] == 0 {
            continue;
        }
        let contribution = scheme.precoders[k].transmit(ctx, &symbols[k]);
        for (acc, &v) in x[k].iter_mut().zip(&contribution) {
            *acc = ctx.add(*acc, v);
        }
    }
    let mut decoded: [Vec<u64>; 3] = std::array::from_fn(|k| vec![0; scheme.streams[k]]);
    for dst in 0..3 {
        let mut y = vec![ctx.zero(); scheme.m];
        for src in 0..3 {
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
            Ic3Error::DecodeAmbiguous(format!(
                "destination {} cannot separate its streams: {e}",
                dst + 1
            ))
        })?;
        decoded[dst] = z[space.desired.clone()].to_vec();
    }
    Ok(decoded)
}

/// Encodes the given message blocks (one prime-field digit per stream),
/// sends them through the raw channel (including the normalization
/// scalings), and decodes at all three destinations. Returns the decoded
/// blocks per source; a verified scheme returns them unchanged.
pub fn simulate_messages(
    ch: &Ic3Channel,
    scheme: &Ic3Scheme,
    messages: &[Vec<u64>; 3],
) -> Result<[Vec<u64>; 3], Ic3Error> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    for (k, block) in messages.iter().enumerate() {
        if block.len() != scheme.streams[k] {
            return Err(Ic3Error::BadScheme(format!(
                "source {} carries {} streams but {} symbols were supplied",
                k + 1,
                scheme.streams[k],
                block.len()
            )));
        }
        if block.iter().any(|&d| d >= ctx.p()) {
            return Err(Ic3Error::BadScheme(format!(
                "source {} symbols must be digits below p = {}",
                k + 1,
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
/// normalization scalings) and decodes at all three destinations; counts
/// trials where any decoded stream differs from what was sent.
pub fn simulate(
    ch: &Ic3Channel,
    scheme: &Ic3Scheme,
    trials: u64,
    seed: u64,
) -> Result<SimReport, Ic3Error> {
    check_scheme_shape(ch, scheme)?;
    let ctx = &ch.ctx;
    let gains = effective_gains(ch, scheme)?;
    let scalings = scalings(ch, scheme)?;
    let (_, receivers) = certify(ctx, &gains, &scheme.precoders, scheme.m)?;
    let p = ctx.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    for _ in 0..trials {
        let symbols: [Vec<u64>; 3] = std::array::from_fn(|k| {
            (0..scheme.streams[k]).map(|_| rng.gen_range(0..p)).collect()
        });
        match run_block(ch, scheme, &scalings, &receivers, &symbols) {
            Ok(decoded) => {
                if decoded != symbols {
                    failures += 1;
                }
            }
            Err(Ic3Error::DecodeAmbiguous(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SimReport { trials, failures })
}
