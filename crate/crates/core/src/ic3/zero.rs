//! Zero-pattern analysis for the 3-user interference channel.
//!
//! When some gain is zero the normalization collapses, but the capacity is
//! settled by cruder means almost everywhere: six cases route full symbols
//! through the surviving links, and the seventh — all direct links alive
//! with one-sided interference — admits half-dimension alignment under
//! base-field conditions on a few gain ratios.
//!
//! The one-sided patterns are classified by the shape of the zero set read
//! as a directed "deafness" graph, then relabeled onto a reference pattern
//! per shape; beams are built in the relabeled channel and pulled back.

use crate::beam::{column_candidate, full_symbol_beams, scale_col, BeamMatrix};
use crate::fplinalg::{stack_vector, RankTracker};
use crate::gf::{FieldCtx, Gfe};
use crate::Rate;

use super::{
    assemble, choose_columns, ConditionReport, Ic3Channel, Ic3Error, Ic3Mode, Ic3Scheme,
    SEARCH_CAP,
};

/// Shape of a one-sided zero pattern (case 7), named by the reference
/// pattern the channel relabels onto. Mirror images share a letter: the
/// two-link chain with zeros {h12, h31} relabels onto [`StructureKind::H`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StructureKind {
    /// Zeros {h12, h13, h23}: user 1 hears only itself, user 2 one other.
    D,
    /// Zeros {h12, h23, h31}: a deafness cycle; every destination hears
    /// exactly one interferer. Feasible unconditionally.
    E,
    /// Zeros {h12, h13}: destination 1 hears no interference.
    G,
    /// Zeros {h12, h23}: a two-link chain of deafness.
    H,
    /// Zeros {h12, h32}: source 2 interferes with nobody.
    J,
    /// Zero {h32}: a single deaf link.
    K,
}

impl StructureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StructureKind::D => "D",
            StructureKind::E => "E",
            StructureKind::G => "G",
            StructureKind::H => "H",
            StructureKind::J => "J",
            StructureKind::K => "K",
        }
    }

    pub fn from_str(s: &str) -> Option<StructureKind> {
        Some(match s {
            "D" => StructureKind::D,
            "E" => StructureKind::E,
            "G" => StructureKind::G,
            "H" => StructureKind::H,
            "J" => StructureKind::J,
            "K" => StructureKind::K,
            _ => return None,
        })
    }

    /// Zero positions (dst, src) of the reference pattern.
    fn reference_zeros(&self) -> &'static [(usize, usize)] {
        match self {
            StructureKind::D => &[(0, 1), (0, 2), (1, 2)],
            StructureKind::E => &[(0, 1), (1, 2), (2, 0)],
            StructureKind::G => &[(0, 1), (0, 2)],
            StructureKind::H => &[(0, 1), (1, 2)],
            StructureKind::J => &[(0, 1), (2, 1)],
            StructureKind::K => &[(2, 1)],
        }
    }
}

/// One base-field condition on a gain ratio of a one-sided structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureCondition {
    /// Role of the ratio in the restricted normalization (hbar11 etc.).
    pub name: &'static str,
    pub value: Gfe,
    /// The condition: the value lies outside the base field.
    pub holds: bool,
}

/// A recognized one-sided structure: its shape, the relabeling onto the
/// reference pattern, and the feasibility conditions evaluated there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureInfo {
    pub kind: StructureKind,
    /// Reference user k plays original user relabel[k].
    pub relabel: [usize; 3],
    pub conditions: Vec<StructureCondition>,
}

impl StructureInfo {
    pub fn conditions_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    /// Every conditioned ratio equals 1, so all surviving links can be
    /// scaled to gain 1 and decoding everything caps the sum capacity at 1.
    pub fn all_unit(&self) -> bool {
        self.conditions.iter().all(|c| c.value.0 == 1)
    }

    pub fn linear_capacity(&self) -> Rate {
        if self.conditions_hold() {
            Rate::new(3, 2)
        } else {
            Rate::new(1, 1)
        }
    }

    /// Information-theoretic sum capacity where known: 3/2 when the
    /// conditions hold, 1 when every ratio is 1; otherwise open.
    pub fn capacity(&self) -> Option<Rate> {
        if self.conditions_hold() {
            Some(Rate::new(3, 2))
        } else if self.all_unit() {
            Some(Rate::new(1, 1))
        } else {
            None
        }
    }

    /// Whether the information-theoretic capacity is an open question.
    pub fn capacity_open(&self) -> bool {
        self.capacity().is_none()
    }

    pub fn condition_reports(&self, ctx: &FieldCtx) -> Vec<ConditionReport> {
        self.conditions
            .iter()
            .map(|c| ConditionReport {
                name: format!("{} outside F_p", c.name),
                holds: c.holds,
                witness: (!c.holds)
                    .then(|| format!("{} lies in F_{}", ctx.show_poly(c.value), ctx.p())),
            })
            .collect()
    }
}

/// Capacity classification of a channel with at least one zero gain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ZeroClass {
    /// Case 1: every direct gain is zero; nothing is decodable.
    NoDirect,
    /// Case 2: exactly one direct gain is nonzero; that user routes alone.
    OneDirect { user: usize },
    /// Case 3: exactly one direct gain is zero. The two live users route
    /// together when neither hears the other, otherwise one routes.
    TwoDirect { dead: usize, pair_isolated: bool },
    /// Case 4: all direct gains alive and every cross gain zero; all three
    /// users route.
    CrossFree,
    /// Cases 5–6: all direct gains alive and two users mutually deaf; that
    /// pair routes. `cross_zeros` ≥ 4 is case 5, otherwise case 6.
    MutualPair { pair: [usize; 2], cross_zeros: usize },
    /// Case 7: one-sided interference; alignment or rate 1 by conditions.
    Structure(StructureInfo),
}

impl ZeroClass {
    /// The zero-pattern case number (1–7).
    pub fn case(&self) -> u8 {
        match self {
            ZeroClass::NoDirect => 1,
            ZeroClass::OneDirect { .. } => 2,
            ZeroClass::TwoDirect { .. } => 3,
            ZeroClass::CrossFree => 4,
            ZeroClass::MutualPair { cross_zeros, .. } => {
                if *cross_zeros >= 4 {
                    5
                } else {
                    6
                }
            }
            ZeroClass::Structure(_) => 7,
        }
    }

    /// Linear sum capacity, in GF(p^n) symbols per channel use.
    pub fn linear_capacity(&self) -> Rate {
        match self {
            ZeroClass::NoDirect => Rate::new(0, 1),
            ZeroClass::OneDirect { .. } => Rate::new(1, 1),
            ZeroClass::TwoDirect { pair_isolated, .. } => {
                Rate::new(if *pair_isolated { 2 } else { 1 }, 1)
            }
            ZeroClass::CrossFree => Rate::new(3, 1),
            ZeroClass::MutualPair { .. } => Rate::new(2, 1),
            ZeroClass::Structure(info) => info.linear_capacity(),
        }
    }

    /// Information-theoretic sum capacity, where known (every case except
    /// a structure with failed, non-unit conditions).
    pub fn capacity(&self) -> Option<Rate> {
        match self {
            ZeroClass::Structure(info) => info.capacity(),
            other => Some(other.linear_capacity()),
        }
    }
}

/// Classifies the zero pattern of a channel with at least one zero gain.
pub fn classify_zero(ch: &Ic3Channel) -> Result<ZeroClass, Ic3Error> {
    if ch.is_fully_connected() {
        return Err(Ic3Error::FullyConnected);
    }
    let g = ch.gains();
    let zero = |j: usize, i: usize| g[j][i].0 == 0;
    let dead: Vec<usize> = (0..3).filter(|&k| zero(k, k)).collect();
    match dead.len() {
        3 => Ok(ZeroClass::NoDirect),
        2 => {
            let user = (0..3).find(|k| !dead.contains(k)).unwrap();
            Ok(ZeroClass::OneDirect { user })
        }
        1 => {
            let dead = dead[0];
            let live: Vec<usize> = (0..3).filter(|&k| k != dead).collect();
            let (a, b) = (live[0], live[1]);
            Ok(ZeroClass::TwoDirect { dead, pair_isolated: zero(a, b) && zero(b, a) })
        }
        _ => {
            let cross_zeros = (0..3)
                .flat_map(|j| (0..3).map(move |i| (j, i)))
                .filter(|&(j, i)| j != i && zero(j, i))
                .count();
            if cross_zeros == 6 {
                return Ok(ZeroClass::CrossFree);
            }
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                if zero(i, j) && zero(j, i) {
                    return Ok(ZeroClass::MutualPair { pair: [i, j], cross_zeros });
                }
            }
            Ok(ZeroClass::Structure(identify_structure(ch)))
        }
    }
}

const PERMUTATIONS: [[usize; 3]; 6] =
    [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn relabeled_gains(ch: &Ic3Channel, relabel: [usize; 3]) -> [[Gfe; 3]; 3] {
    std::array::from_fn(|a| std::array::from_fn(|b| ch.gains()[relabel[a]][relabel[b]]))
}

/// Shape-classifies a one-sided zero pattern (1–3 cross zeros, no mutual
/// pair, all direct gains alive) and relabels it onto the reference
/// pattern of its kind.
fn identify_structure(ch: &Ic3Channel) -> StructureInfo {
    let g = ch.gains();
    let zeros: Vec<(usize, usize)> = (0..3)
        .flat_map(|j| (0..3).map(move |i| (j, i)))
        .filter(|&(j, i)| j != i && g[j][i].0 == 0)
        .collect();
    let kind = match zeros[..] {
        [_] => StructureKind::K,
        [(j1, i1), (j2, i2)] => {
            if j1 == j2 {
                StructureKind::G
            } else if i1 == i2 {
                StructureKind::J
            } else {
                StructureKind::H
            }
        }
        _ => {
            let js: Vec<usize> = zeros.iter().map(|z| z.0).collect();
            let is: Vec<usize> = zeros.iter().map(|z| z.1).collect();
            let all_distinct =
                |v: &[usize]| (0..3).all(|k| v.contains(&k));
            if all_distinct(&js) && all_distinct(&is) {
                StructureKind::E
            } else {
                StructureKind::D
            }
        }
    };
    let want = kind.reference_zeros();
    let relabel = PERMUTATIONS
        .into_iter()
        .find(|perm| {
            want.iter().all(|&(a, b)| g[perm[a]][perm[b]].0 == 0)
                && want.len() == zeros.len()
        })
        .expect("every one-sided pattern relabels onto its reference");
    let conditions = structure_conditions(&ch.ctx, kind, &relabeled_gains(ch, relabel));
    StructureInfo { kind, relabel, conditions }
}

/// Base-field conditions on the relabeled gains. The conditioned ratios are
/// the direct gains of the restricted normalization that scales every
/// surviving cross link to 1; each must leave the base field.
fn structure_conditions(
    ctx: &FieldCtx,
    kind: StructureKind,
    g: &[[Gfe; 3]; 3],
) -> Vec<StructureCondition> {
    let ratio = |num: (Gfe, Gfe), den: (Gfe, Gfe)| {
        ctx.div(ctx.mul(num.0, num.1), ctx.mul(den.0, den.1)).expect("nonzero links")
    };
    let cond = |name: &'static str, value: Gfe| StructureCondition {
        name,
        value,
        holds: !ctx.in_base_field(value),
    };
    let hbar11 = || cond("hbar11", ratio((g[0][0], g[1][2]), (g[0][2], g[1][0])));
    let hbar33 = || cond("hbar33", ratio((g[2][2], g[1][0]), (g[1][2], g[2][0])));
    match kind {
        StructureKind::D | StructureKind::H => {
            vec![cond("hbar22", ratio((g[1][1], g[2][0]), (g[1][0], g[2][1])))]
        }
        StructureKind::E => Vec::new(),
        StructureKind::G => vec![
            cond("hbar22", ratio((g[1][1], g[2][0]), (g[1][0], g[2][1]))),
            hbar33(),
        ],
        StructureKind::J => vec![hbar11(), hbar33()],
        StructureKind::K => vec![
            hbar11(),
            cond("hbar22", ratio((g[1][1], g[0][2]), (g[1][2], g[0][1]))),
            hbar33(),
        ],
    }
}

// ---------------------------------------------------------------------------
// Constructions.
// ---------------------------------------------------------------------------

/// Completes the seeds' stacked span with fresh independent m-use columns,
/// scanned by ascending label.
fn complete_span(
    ctx: &FieldCtx,
    m: usize,
    count: usize,
    seeds: &BeamMatrix,
) -> Result<BeamMatrix, Ic3Error> {
    let mut tracker = RankTracker::new(ctx.p(), m * ctx.n());
    for col in seeds.cols() {
        tracker.insert(&stack_vector(ctx, col));
    }
    let limit = ctx.size().saturating_pow(m as u32).min(SEARCH_CAP);
    let mut out = BeamMatrix::new(m);
    let mut idx = 0;
    while idx < limit && out.num_cols() < count {
        let col = column_candidate(ctx, m, idx);
        if tracker.insert(&stack_vector(ctx, &col)) {
            out.push_col(col);
        }
        idx += 1;
    }
    if out.num_cols() < count {
        return Err(Ic3Error::SearchExhausted(
            "span completion ran out of candidates".into(),
        ));
    }
    Ok(out)
}

/// Builds the reference-pattern beams for a one-sided structure whose
/// conditions hold: (uses, per-user beam matrices), users in reference
/// order. Non-cyclic kinds use scalar beams for even n and two-use beams
/// for odd n; the cycle E always time-shares over two uses.
fn build_structure_beams(
    ctx: &FieldCtx,
    kind: StructureKind,
    g: &[[Gfe; 3]; 3],
) -> Result<(usize, [BeamMatrix; 3]), Ic3Error> {
    let n = ctx.n();
    let one = ctx.one();
    let div = |a: Gfe, b: Gfe| ctx.div(a, b).expect("nonzero links");
    if kind == StructureKind::E {
        let zero = ctx.zero();
        let (mut v1, mut v2, mut v3) =
            (BeamMatrix::new(2), BeamMatrix::new(2), BeamMatrix::new(2));
        for k in 0..n {
            let sk = ctx.pow(ctx.s(), k as u64);
            v1.push_col(vec![sk, zero]);
            v2.push_col(vec![zero, sk]);
            v3.push_col(vec![sk, sk]);
        }
        return Ok((2, [v1, v2, v3]));
    }
    let (m, count) = if n % 2 == 0 { (1, n / 2) } else { (2, n) };
    let dim = m * n;
    let fresh = || RankTracker::new(ctx.p(), dim);
    let chain_beams = |values: Vec<Gfe>, what: &str| -> Result<BeamMatrix, Ic3Error> {
        let trackers = vec![fresh(); values.len()];
        let cols = choose_columns(
            ctx,
            m,
            count,
            trackers,
            &|_| values.iter().map(|&v| vec![v, one]).collect(),
            Some(vec![one; m]),
            what,
        )?;
        Ok(BeamMatrix::from_cols(m, cols))
    };
    let seeded = |seeds: &BeamMatrix, gain: Gfe| {
        let mut t = fresh();
        for col in seeds.cols() {
            t.insert(&stack_vector(ctx, &scale_col(ctx, gain, col)));
        }
        t
    };
    let conds = structure_conditions(ctx, kind, g);
    let value = |name: &str| conds.iter().find(|c| c.name == name).unwrap().value;
    match kind {
        StructureKind::D => {
            let v = chain_beams(vec![value("hbar22")], "one-sided beams (D)")?;
            let v2 = v.scaled(ctx, div(g[2][0], g[2][1]));
            let w = complete_span(ctx, m, count, &v.scaled(ctx, g[2][0]))?;
            let v3 = w.scaled(ctx, ctx.inv(g[2][2]).unwrap());
            Ok((m, [v, v2, v3]))
        }
        StructureKind::G => {
            let v = chain_beams(
                vec![value("hbar22"), value("hbar33")],
                "one-sided beams (G)",
            )?;
            let v2 = v.scaled(ctx, div(g[2][0], g[2][1]));
            let v3 = v.scaled(ctx, div(g[1][0], g[1][2]));
            Ok((m, [v, v2, v3]))
        }
        StructureKind::H => {
            let v = chain_beams(vec![value("hbar22")], "one-sided beams (H)")?;
            let v2 = v.scaled(ctx, div(g[2][0], g[2][1]));
            // User 3's beams must stay clear of user 1's signal at
            // destination 1 and of user 1's interference at destination 3.
            let trackers = vec![seeded(&v, g[0][0]), seeded(&v, g[2][0])];
            let cols = choose_columns(
                ctx,
                m,
                count,
                trackers,
                &|_| vec![vec![g[0][2]], vec![g[2][2]]],
                None,
                "one-sided beams (H, user 3)",
            )?;
            Ok((m, [v, v2, BeamMatrix::from_cols(m, cols)]))
        }
        StructureKind::J => {
            let v = chain_beams(
                vec![value("hbar11"), value("hbar33")],
                "one-sided beams (J)",
            )?;
            let v3 = v.scaled(ctx, div(g[1][0], g[1][2]));
            let w = complete_span(ctx, m, count, &v.scaled(ctx, g[1][0]))?;
            let v2 = w.scaled(ctx, ctx.inv(g[1][1]).unwrap());
            Ok((m, [v, v2, v3]))
        }
        StructureKind::K => {
            let v = chain_beams(
                vec![value("hbar11"), value("hbar22"), value("hbar33")],
                "one-sided beams (K)",
            )?;
            let v2 = v.scaled(ctx, div(ctx.mul(g[0][2], g[1][0]), ctx.mul(g[0][1], g[1][2])));
            let v3 = v.scaled(ctx, div(g[1][0], g[1][2]));
            Ok((m, [v, v2, v3]))
        }
        StructureKind::E => unreachable!("handled above"),
    }
}

/// Half-dimension alignment for a one-sided structure whose conditions
/// hold: builds in the relabeled reference pattern, pulls back, and
/// certifies on the raw channel.
pub fn construct_structure(ch: &Ic3Channel) -> Result<Ic3Scheme, Ic3Error> {
    let ZeroClass::Structure(info) = classify_zero(ch)? else {
        return Err(Ic3Error::ConditionsNotMet(
            "the zero pattern routes plainly; no one-sided structure applies".into(),
        ));
    };
    if !info.conditions_hold() {
        let failed: Vec<String> = info
            .conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} = {} lies in F_{}", c.name, ch.ctx().show_poly(c.value), ch.ctx().p()))
            .collect();
        return Err(Ic3Error::ConditionsNotMet(format!(
            "structure {}: {}",
            info.kind.as_str(),
            failed.join("; ")
        )));
    }
    let ctx = ch.ctx();
    let g = relabeled_gains(ch, info.relabel);
    let (m, beams) = build_structure_beams(ctx, info.kind, &g)?;
    let mut precoders: [BeamMatrix; 3] = std::array::from_fn(|_| BeamMatrix::new(m));
    for (k, b) in beams.into_iter().enumerate() {
        precoders[info.relabel[k]] = b;
    }
    assemble(ctx, Ic3Mode::ZeroStructure, Some(7), Some(info.kind), m, precoders, ch.gains())
}

/// Full-symbol routing through the surviving links: capacity-achieving for
/// cases 1–6 and the rate-1 fallback for case 7.
pub fn construct_routing(ch: &Ic3Channel) -> Result<Ic3Scheme, Ic3Error> {
    let class = classify_zero(ch)?;
    let ctx = ch.ctx();
    let basis = full_symbol_beams(ctx);
    let empty = BeamMatrix::new(1);
    let mut precoders = [empty.clone(), empty.clone(), empty];
    match &class {
        ZeroClass::NoDirect => {}
        ZeroClass::OneDirect { user } => precoders[*user] = basis,
        ZeroClass::TwoDirect { dead, pair_isolated } => {
            let live: Vec<usize> = (0..3).filter(|k| k != dead).collect();
            precoders[live[0]] = basis.clone();
            if *pair_isolated {
                precoders[live[1]] = basis;
            }
        }
        ZeroClass::CrossFree => precoders = [basis.clone(), basis.clone(), basis],
        ZeroClass::MutualPair { pair, .. } => {
            precoders[pair[0]] = basis.clone();
            precoders[pair[1]] = basis;
        }
        ZeroClass::Structure(_) => precoders[0] = basis,
    }
    assemble(ctx, Ic3Mode::ZeroRouting, Some(class.case()), None, 1, precoders, ch.gains())
}

/// Builds the capacity-achieving (or best-known) scheme for a channel with
/// zero gains: one-sided structures get aligned beams when their conditions
/// hold, everything else routes.
pub fn construct_zero(ch: &Ic3Channel) -> Result<Ic3Scheme, Ic3Error> {
    match classify_zero(ch)? {
        ZeroClass::Structure(info) if info.conditions_hold() => construct_structure(ch),
        _ => construct_routing(ch),
    }
}
