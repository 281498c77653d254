//! JSON and CSV views of channels, schemes, classifications, and censuses.
//!
//! Documents are plain serde structs, so key order is declaration order and
//! identical inputs serialize byte for byte. Every document carries the
//! field parameters (p, n, modulus digits), making artifacts portable
//! across implementations that pick different canonical moduli.
//!
//! Rates serialize as exact values: a JSON number when integral, the string
//! `"num/den"` otherwise; both forms parse back. Census fractions serialize
//! as reduced `"num/den"` strings, since they routinely exceed what floats
//! represent exactly.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::beam::BeamMatrix;
use crate::census::{CensusReport, Comparison};
use crate::gf::{FieldCtx, GfError};
use crate::ic3::{
    zero::StructureKind, ConditionReport, Ic3Certificates, Ic3Channel, Ic3Classification,
    Ic3Mode, Ic3Scheme,
};
use crate::xch::{XCertificates, XChannel, XClass, XMode, XScheme};
use crate::Rate;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("document does not fit: {0}")]
    Shape(String),
}

fn shape(msg: impl Into<String>) -> SchemaError {
    SchemaError::Shape(msg.into())
}

// ---------------------------------------------------------------------------
// Exact rates in JSON.
// ---------------------------------------------------------------------------

fn rate_to_json<S: Serializer>(rate: &Rate, ser: S) -> Result<S::Ok, S::Error> {
    if *rate.denom() == 1 {
        ser.serialize_u64(*rate.numer())
    } else {
        ser.serialize_str(&format!("{}/{}", rate.numer(), rate.denom()))
    }
}

fn rate_from_json<'de, D: Deserializer<'de>>(de: D) -> Result<Rate, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }
    match Raw::deserialize(de)? {
        Raw::Int(v) => Ok(Rate::new(v, 1)),
        Raw::Text(s) => parse_rate(&s).ok_or_else(|| {
            D::Error::custom(format!("expected a rate like \"4/3\", got {s:?}"))
        }),
    }
}

fn opt_rate_to_json<S: Serializer>(rate: &Option<Rate>, ser: S) -> Result<S::Ok, S::Error> {
    match rate {
        Some(r) => rate_to_json(r, ser),
        None => ser.serialize_none(),
    }
}

fn opt_rate_from_json<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Rate>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Missing,
        Int(u64),
        Text(String),
    }
    match Raw::deserialize(de)? {
        Raw::Missing => Ok(None),
        Raw::Int(v) => Ok(Some(Rate::new(v, 1))),
        Raw::Text(s) => parse_rate(&s).map(Some).ok_or_else(|| {
            D::Error::custom(format!("expected a rate like \"4/3\", got {s:?}"))
        }),
    }
}

/// Parses "a/b" or "a" into an exact rate.
pub fn parse_rate(s: &str) -> Option<Rate> {
    match s.split_once('/') {
        Some((a, b)) => {
            let num = a.trim().parse().ok()?;
            let den: u64 = b.trim().parse().ok()?;
            (den != 0).then(|| Rate::new(num, den))
        }
        None => s.trim().parse().ok().map(|v| Rate::new(v, 1)),
    }
}

/// Renders a rate the way documents do: "4/3", or "2" when integral.
pub fn rate_string(rate: Rate) -> String {
    if *rate.denom() == 1 {
        rate.numer().to_string()
    } else {
        format!("{}/{}", rate.numer(), rate.denom())
    }
}

fn to_pretty<T: Serialize>(doc: &T) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("documents always serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Channels.
// ---------------------------------------------------------------------------

/// The shared channel document: `{"p", "n", "modulus"?, "matrix"}` with
/// gains as element labels and `matrix[j][i]` the gain from source i to
/// destination j. The modulus is listed high-to-low; omitting it selects
/// the canonical modulus for (p, n).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub p: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<Vec<u64>>,
    pub matrix: Vec<Vec<u64>>,
}

impl ChannelDoc {
    pub fn field(&self) -> Result<FieldCtx, SchemaError> {
        Ok(match &self.modulus {
            Some(coeffs) => FieldCtx::with_modulus(self.p, self.n, coeffs)?,
            None => FieldCtx::new(self.p, self.n)?,
        })
    }

    fn matrix_labels<const K: usize>(&self) -> Result<[[u64; K]; K], SchemaError> {
        if self.matrix.len() != K || self.matrix.iter().any(|row| row.len() != K) {
            return Err(shape(format!(
                "expected a {K}x{K} gain matrix, got {} rows of lengths {:?}",
                self.matrix.len(),
                self.matrix.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(std::array::from_fn(|j| std::array::from_fn(|i| self.matrix[j][i])))
    }

    pub fn to_x_channel(&self) -> Result<XChannel, SchemaError> {
        let ctx = self.field()?;
        Ok(XChannel::from_labels(ctx, self.matrix_labels::<2>()?)?)
    }

    pub fn to_ic3_channel(&self) -> Result<Ic3Channel, SchemaError> {
        let ctx = self.field()?;
        Ok(Ic3Channel::from_labels(ctx, self.matrix_labels::<3>()?)?)
    }
}

fn channel_doc(ctx: &FieldCtx, matrix: Vec<Vec<u64>>) -> ChannelDoc {
    ChannelDoc {
        p: ctx.p(),
        n: ctx.n(),
        modulus: Some(ctx.modulus_high_to_low()),
        matrix,
    }
}

pub fn x_channel_doc(ch: &XChannel) -> ChannelDoc {
    let matrix = ch.gains().iter().map(|row| row.iter().map(|g| g.0).collect()).collect();
    channel_doc(ch.ctx(), matrix)
}

pub fn ic3_channel_doc(ch: &Ic3Channel) -> ChannelDoc {
    let matrix = ch.gains().iter().map(|row| row.iter().map(|g| g.0).collect()).collect();
    channel_doc(ch.ctx(), matrix)
}

pub fn channel_doc_from_json(text: &str) -> Result<ChannelDoc, SchemaError> {
    Ok(serde_json::from_str(text)?)
}

pub fn channel_doc_to_json(doc: &ChannelDoc) -> String {
    to_pretty(doc)
}

// ---------------------------------------------------------------------------
// Schemes.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificatesDoc {
    #[serde(rename = "rank_S1")]
    pub rank_s1: usize,
    #[serde(rename = "rank_S2")]
    pub rank_s2: usize,
    #[serde(rename = "rank_S3", default, skip_serializing_if = "Option::is_none")]
    pub rank_s3: Option<usize>,
    pub aligned_dims: Vec<usize>,
}

/// A constructed scheme together with the channel it was built for, so the
/// document alone suffices to re-verify or simulate. Precoders are listed
/// per message (X channel) or per source (3-user), each as columns of
/// element labels over the m channel uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDoc {
    pub p: u64,
    pub n: usize,
    pub modulus: Vec<u64>,
    pub matrix: Vec<Vec<u64>>,
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_case: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
    pub m: usize,
    pub streams: Vec<usize>,
    pub precoders: Vec<Vec<Vec<u64>>>,
    pub certificates: CertificatesDoc,
    #[serde(serialize_with = "rate_to_json", deserialize_with = "rate_from_json")]
    pub sum_rate: Rate,
}

impl SchemeDoc {
    pub fn field(&self) -> Result<FieldCtx, SchemaError> {
        Ok(FieldCtx::with_modulus(self.p, self.n, &self.modulus)?)
    }

    pub fn channel(&self) -> ChannelDoc {
        ChannelDoc {
            p: self.p,
            n: self.n,
            modulus: Some(self.modulus.clone()),
            matrix: self.matrix.clone(),
        }
    }

    fn precoder_matrices<const K: usize>(
        &self,
        ctx: &FieldCtx,
    ) -> Result<[BeamMatrix; K], SchemaError> {
        if self.precoders.len() != K {
            return Err(shape(format!(
                "expected {K} precoders, got {}",
                self.precoders.len()
            )));
        }
        let mut mats = Vec::with_capacity(K);
        for cols in &self.precoders {
            mats.push(BeamMatrix::from_labels(ctx, self.m, cols)?);
        }
        Ok(mats.try_into().expect("length checked above"))
    }

    fn streams_array<const K: usize>(&self) -> Result<[usize; K], SchemaError> {
        self.streams.clone().try_into().map_err(|_| {
            shape(format!("expected {K} stream counts, got {}", self.streams.len()))
        })
    }
}

fn scheme_doc_common(
    ctx: &FieldCtx,
    matrix: Vec<Vec<u64>>,
    mode: &str,
    zero_case: Option<u8>,
    structure: Option<String>,
    m: usize,
    streams: Vec<usize>,
    precoders: Vec<Vec<Vec<u64>>>,
    certificates: CertificatesDoc,
    sum_rate: Rate,
) -> SchemeDoc {
    SchemeDoc {
        p: ctx.p(),
        n: ctx.n(),
        modulus: ctx.modulus_high_to_low(),
        matrix,
        mode: mode.into(),
        zero_case,
        structure,
        m,
        streams,
        precoders,
        certificates,
        sum_rate,
    }
}

pub fn x_scheme_doc(ch: &XChannel, scheme: &XScheme) -> SchemeDoc {
    scheme_doc_common(
        &scheme.ctx,
        x_channel_doc(ch).matrix,
        scheme.mode.as_str(),
        scheme.zero_case,
        None,
        scheme.m,
        scheme.streams.to_vec(),
        scheme.precoders.iter().map(|b| b.to_labels()).collect(),
        CertificatesDoc {
            rank_s1: scheme.certificates.rank_s1,
            rank_s2: scheme.certificates.rank_s2,
            rank_s3: None,
            aligned_dims: scheme.certificates.aligned_dims.to_vec(),
        },
        scheme.sum_rate,
    )
}

pub fn ic3_scheme_doc(ch: &Ic3Channel, scheme: &Ic3Scheme) -> SchemeDoc {
    scheme_doc_common(
        &scheme.ctx,
        ic3_channel_doc(ch).matrix,
        scheme.mode.as_str(),
        scheme.zero_case,
        scheme.structure.map(|k| k.as_str().to_string()),
        scheme.m,
        scheme.streams.to_vec(),
        scheme.precoders.iter().map(|b| b.to_labels()).collect(),
        CertificatesDoc {
            rank_s1: scheme.certificates.ranks[0],
            rank_s2: scheme.certificates.ranks[1],
            rank_s3: Some(scheme.certificates.ranks[2]),
            aligned_dims: scheme.certificates.aligned_dims.to_vec(),
        },
        scheme.sum_rate,
    )
}

/// Rebuilds the X channel and scheme a document describes.
pub fn x_scheme_from_doc(doc: &SchemeDoc) -> Result<(XChannel, XScheme), SchemaError> {
    let ch = doc.channel().to_x_channel()?;
    let mode = XMode::from_str(&doc.mode)
        .ok_or_else(|| shape(format!("unknown X scheme mode {:?}", doc.mode)))?;
    let aligned_dims: [usize; 2] =
        doc.certificates.aligned_dims.clone().try_into().map_err(|_| {
            shape(format!(
                "expected 2 aligned dimensions, got {}",
                doc.certificates.aligned_dims.len()
            ))
        })?;
    let scheme = XScheme {
        ctx: ch.ctx().clone(),
        mode,
        zero_case: doc.zero_case,
        m: doc.m,
        streams: doc.streams_array::<4>()?,
        precoders: doc.precoder_matrices::<4>(ch.ctx())?,
        sum_rate: doc.sum_rate,
        certificates: XCertificates {
            rank_s1: doc.certificates.rank_s1,
            rank_s2: doc.certificates.rank_s2,
            aligned_dims,
        },
    };
    Ok((ch, scheme))
}

/// Rebuilds the 3-user channel and scheme a document describes.
pub fn ic3_scheme_from_doc(doc: &SchemeDoc) -> Result<(Ic3Channel, Ic3Scheme), SchemaError> {
    let ch = doc.channel().to_ic3_channel()?;
    let mode = Ic3Mode::from_str(&doc.mode)
        .ok_or_else(|| shape(format!("unknown 3-user scheme mode {:?}", doc.mode)))?;
    let structure = match &doc.structure {
        Some(s) => Some(
            StructureKind::from_str(s)
                .ok_or_else(|| shape(format!("unknown structure {s:?}")))?,
        ),
        None => None,
    };
    let rank_s3 = doc
        .certificates
        .rank_s3
        .ok_or_else(|| shape("a 3-user scheme needs rank_S3".to_string()))?;
    let aligned_dims: [usize; 3] =
        doc.certificates.aligned_dims.clone().try_into().map_err(|_| {
            shape(format!(
                "expected 3 aligned dimensions, got {}",
                doc.certificates.aligned_dims.len()
            ))
        })?;
    let scheme = Ic3Scheme {
        ctx: ch.ctx().clone(),
        mode,
        zero_case: doc.zero_case,
        structure,
        m: doc.m,
        streams: doc.streams_array::<3>()?,
        precoders: doc.precoder_matrices::<3>(ch.ctx())?,
        sum_rate: doc.sum_rate,
        certificates: Ic3Certificates {
            ranks: [doc.certificates.rank_s1, doc.certificates.rank_s2, rank_s3],
            aligned_dims,
        },
    };
    Ok((ch, scheme))
}

pub fn scheme_doc_from_json(text: &str) -> Result<SchemeDoc, SchemaError> {
    Ok(serde_json::from_str(text)?)
}

pub fn scheme_doc_to_json(doc: &SchemeDoc) -> String {
    to_pretty(doc)
}

// ---------------------------------------------------------------------------
// Classifications.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionDoc {
    pub name: String,
    pub holds: bool,
    /// The dependence that broke the condition; absent when it holds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

fn condition_docs(conditions: &[ConditionReport]) -> Vec<ConditionDoc> {
    conditions
        .iter()
        .map(|c| ConditionDoc {
            name: c.name.clone(),
            holds: c.holds,
            witness: c.witness.clone(),
        })
        .collect()
}

/// Classification report for either channel kind. `C` is the sum capacity
/// when known (`null` marks an open case), `C_linear` the linear sum
/// capacity; both in field symbols per channel use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyDoc {
    pub p: u64,
    pub n: usize,
    pub modulus: Vec<u64>,
    pub class: String,
    #[serde(
        rename = "C",
        serialize_with = "opt_rate_to_json",
        deserialize_with = "opt_rate_from_json"
    )]
    pub capacity: Option<Rate>,
    #[serde(
        rename = "C_linear",
        serialize_with = "opt_rate_to_json",
        deserialize_with = "opt_rate_from_json"
    )]
    pub linear_capacity: Option<Rate>,
    #[serde(rename = "case", default, skip_serializing_if = "Option::is_none")]
    pub zero_case: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<String>,
    /// Normalized gain h, for fully connected X channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionDoc>,
}

pub fn x_classify_doc(ch: &XChannel, class: &XClass) -> ClassifyDoc {
    let h = match class {
        XClass::Aligned { h } | XClass::Degenerate { h } => Some(h.0),
        _ => None,
    };
    ClassifyDoc {
        p: ch.ctx().p(),
        n: ch.ctx().n(),
        modulus: ch.ctx().modulus_high_to_low(),
        class: class.label().into(),
        capacity: class.capacity(),
        linear_capacity: Some(class.linear_capacity()),
        zero_case: class.zero_case(),
        structure: None,
        h,
        conditions: Vec::new(),
    }
}

pub fn ic3_classify_doc(ch: &Ic3Channel, cls: &Ic3Classification) -> ClassifyDoc {
    use crate::ic3::{zero::ZeroClass, Ic3Class};
    let (zero_case, structure) = match &cls.class {
        Ic3Class::Zero(zc) => (
            Some(zc.case()),
            match zc {
                ZeroClass::Structure(info) => Some(info.kind.as_str().to_string()),
                _ => None,
            },
        ),
        _ => (None, None),
    };
    ClassifyDoc {
        p: ch.ctx().p(),
        n: ch.ctx().n(),
        modulus: ch.ctx().modulus_high_to_low(),
        class: cls.class.label(),
        capacity: cls.capacity(),
        linear_capacity: cls.linear_capacity(),
        zero_case,
        structure,
        h: None,
        conditions: condition_docs(&cls.conditions),
    }
}

pub fn classify_doc_to_json(doc: &ClassifyDoc) -> String {
    to_pretty(doc)
}

// ---------------------------------------------------------------------------
// Simulations.
// ---------------------------------------------------------------------------

/// One simulated block: the prime-field digits sent per message and what
/// each intended destination decoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationDoc {
    pub p: u64,
    pub n: usize,
    pub mode: String,
    pub streams: Vec<usize>,
    pub sent: Vec<Vec<u64>>,
    pub decoded: Vec<Vec<u64>>,
    #[serde(rename = "match")]
    pub is_match: bool,
}

pub fn simulation_doc_to_json(doc: &SimulationDoc) -> String {
    to_pretty(doc)
}

/// Message blocks fed into `simulate`: `{"messages": [[digits], ...]}`,
/// one block per message/source, one prime-field digit per stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessagesDoc {
    pub messages: Vec<Vec<u64>>,
}

pub fn messages_doc_from_json(text: &str) -> Result<MessagesDoc, SchemaError> {
    Ok(serde_json::from_str(text)?)
}

// ---------------------------------------------------------------------------
// Censuses.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub label: String,
    pub count: u128,
    /// Exact reduced fraction of the totals, as "num/den".
    pub fraction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub relation: String,
    pub measured: String,
    pub reference: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusDoc {
    pub p: u64,
    pub n: usize,
    pub modulus: Vec<u64>,
    pub target: String,
    pub coordinates: String,
    pub exhaustive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub total: u128,
    pub classes: Vec<ClassRow>,
    pub comparisons: Vec<ComparisonRow>,
}

fn comparison_row(c: &Comparison) -> ComparisonRow {
    ComparisonRow {
        name: c.name.clone(),
        relation: c.relation.as_str().into(),
        measured: c.measured.to_string(),
        reference: c.reference.to_string(),
        pass: c.pass,
    }
}

pub fn census_doc(report: &CensusReport) -> CensusDoc {
    let ctx = FieldCtx::new(report.p, report.n).expect("census ran on a valid field");
    CensusDoc {
        p: report.p,
        n: report.n,
        modulus: ctx.modulus_high_to_low(),
        target: report.target.as_str().into(),
        coordinates: report.coordinates.into(),
        exhaustive: report.exhaustive,
        seed: report.seed,
        total: report.total,
        classes: report
            .classes
            .iter()
            .map(|c| ClassRow {
                label: c.label.clone(),
                count: c.count,
                fraction: ratio_string(c.count, report.total),
            })
            .collect(),
        comparisons: report.comparisons.iter().map(comparison_row).collect(),
    }
}

fn ratio_string(num: u128, den: u128) -> String {
    num::BigRational::new(num.into(), den.into()).to_string()
}

pub fn census_doc_to_json(doc: &CensusDoc) -> String {
    to_pretty(doc)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a census as CSV: one `class` row per observed class, then one
/// `check` row per closed-form comparison.
pub fn census_doc_to_csv(doc: &CensusDoc) -> String {
    let mut out = String::from("kind,label,count,fraction,relation,reference,pass\n");
    for row in &doc.classes {
        out.push_str(&format!(
            "class,{},{},{},,,\n",
            csv_field(&row.label),
            row.count,
            csv_field(&row.fraction)
        ));
    }
    for cmp in &doc.comparisons {
        out.push_str(&format!(
            "check,{},,{},{},{},{}\n",
            csv_field(&cmp.name),
            csv_field(&cmp.measured),
            csv_field(&cmp.relation),
            csv_field(&cmp.reference),
            cmp.pass
        ));
    }
    out
}
