//! Command-line front end for the ffia library.
//!
//! Subcommands: `field` (inspect GF(p^n) and its elements), `xch` and `ic3`
//! (classify / construct / verify / simulate channel schemes), and `census`
//! (enumerate or sample channel ensembles). All output is machine-readable
//! JSON (censuses also render CSV) and deterministic: identical invocations
//! produce identical bytes.
//!
//! Exit codes are a stable contract:
//! 0 success; 1 internal error; 2 usage, parse, or field errors;
//! 3 infeasible (conditions not met, search exhausted, wrong connectivity);
//! 4 verification or closed-form check failed; 5 exhaustive census over
//! the size threshold.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use ffia::census::{
    run_census, CensusError, CensusMode, CensusSpec, CensusTarget, DEFAULT_THRESHOLD,
};
use ffia::fplinalg::rep_matrix;
use ffia::gf::{FieldCtx, GfError};
use ffia::ic3::{self, Ic3Error, Ic3Mode};
use ffia::schema::{
    channel_doc_from_json, census_doc, census_doc_to_csv, census_doc_to_json,
    classify_doc_to_json, ic3_classify_doc, ic3_scheme_doc, ic3_scheme_from_doc,
    messages_doc_from_json, rate_string, scheme_doc_from_json, scheme_doc_to_json,
    simulation_doc_to_json, x_classify_doc, x_scheme_doc, x_scheme_from_doc, SchemaError,
    SimulationDoc,
};
use ffia::xch::{self, XMode, XchError};

#[derive(Parser)]
#[command(
    name = "ffia",
    version,
    about = "Interference alignment over finite fields: classify, construct, \
             verify, simulate, census"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect GF(p^n): modulus, element renderings, representation matrix.
    Field {
        /// Field characteristic (a prime).
        p: u64,
        /// Extension degree.
        n: usize,
        /// Element to render: a label ("22"), digit tuple ("[2,1,1]"), or
        /// polynomial ("2s^2+s+1").
        element: Option<String>,
        /// Modulus digits, high-to-low, comma-separated (e.g. "1,0,2,1");
        /// defaults to the canonical modulus.
        #[arg(long)]
        modulus: Option<String>,
    },
    /// 2-user X channel (four messages).
    Xch {
        #[command(subcommand)]
        action: Action,
    },
    /// 3-user interference channel (three messages).
    Ic3 {
        #[command(subcommand)]
        action: Action,
    },
    /// Enumerate or sample a channel ensemble and count feasibility classes.
    Census(CensusArgs),
}

#[derive(Subcommand)]
enum Action {
    /// Classify a channel document: capacity, class, conditions.
    Classify(IoArgs),
    /// Build a verified alignment scheme for a channel document.
    Construct(ConstructArgs),
    /// Re-verify a scheme document (as emitted by construct).
    Verify(IoArgs),
    /// Send messages through a scheme document and report the decoding.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct IoArgs {
    /// Input document path, or "-" for standard input.
    #[arg(long = "in", value_name = "FILE", default_value = "-")]
    input: String,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Force a construction mode instead of the classifier's choice.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Message digits: a JSON file {"messages": [[digits], ...]} or
    /// "random:SEED" for seeded random blocks.
    #[arg(long, value_name = "FILE|random:SEED")]
    messages: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CensusArgs {
    /// Ensemble: "x" (normalized X gain), "x-full" (all-nonzero 2x2
    /// matrices), "ic3" (normalized 3-user tuples), or "ic3-full" (all 3x3
    /// matrices).
    target: String,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: usize,
    /// Visit the whole ensemble (the default; refused over the threshold).
    #[arg(long, conflicts_with = "sample")]
    exhaustive: bool,
    /// Classify COUNT seeded-random instances instead.
    #[arg(long, value_name = "COUNT")]
    sample: Option<u64>,
    /// Seed for --sample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on exhaustive instance visits.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: u64,
    /// Exit 4 unless every closed-form comparison passes.
    #[arg(long)]
    check: bool,
    /// Base path: writes BASE.json and BASE.csv alongside standard output.
    #[arg(long, value_name = "BASE")]
    out: Option<PathBuf>,
    /// What standard output carries.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

// ---------------------------------------------------------------------------
// Error-to-exit-code mapping.
// ---------------------------------------------------------------------------

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<GfError> for Failure {
    fn from(e: GfError) -> Failure {
        Failure::usage(e.to_string())
    }
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Failure {
        Failure::usage(e.to_string())
    }
}

impl From<XchError> for Failure {
    fn from(e: XchError) -> Failure {
        let code = match &e {
            XchError::Field(_) | XchError::BadScheme(_) => 2,
            XchError::NotFullyConnected
            | XchError::ConditionsNotMet(_)
            | XchError::SearchExhausted(_) => 3,
            XchError::VerifyFailed(_) | XchError::DecodeAmbiguous(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<Ic3Error> for Failure {
    fn from(e: Ic3Error) -> Failure {
        let code = match &e {
            Ic3Error::Field(_) | Ic3Error::BadScheme(_) => 2,
            Ic3Error::NotFullyConnected
            | Ic3Error::FullyConnected
            | Ic3Error::ConditionsNotMet(_)
            | Ic3Error::SearchExhausted(_) => 3,
            Ic3Error::VerifyFailed(_) | Ic3Error::DecodeAmbiguous(_) => 4,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<CensusError> for Failure {
    fn from(e: CensusError) -> Failure {
        let code = match &e {
            CensusError::TooLargeForExhaustive { .. } => 5,
            CensusError::Field(_) | CensusError::BadSpec(_) => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

// ---------------------------------------------------------------------------
// IO helpers.
// ---------------------------------------------------------------------------

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::usage(format!("reading standard input: {e}")))?;
        Ok(text)
    } else {
        fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("reading {path}: {e}")))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::internal(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_digit_list(text: &str) -> Result<Vec<u64>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Failure::usage(format!("bad modulus digit {:?}", part.trim())))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// field
// ---------------------------------------------------------------------------

fn cmd_field(
    p: u64,
    n: usize,
    element: Option<String>,
    modulus: Option<String>,
) -> Result<u8, Failure> {
    let ctx = match modulus {
        Some(text) => FieldCtx::with_modulus(p, n, &parse_digit_list(&text)?)?,
        None => FieldCtx::new(p, n)?,
    };
    let mut doc = json!({
        "p": p,
        "n": n,
        "size": ctx.size(),
        "modulus": ctx.modulus_high_to_low(),
        "modulus_poly": ctx.modulus_string(),
    });
    if let Some(text) = element {
        let a = ctx.parse_element(&text)?;
        let digits_high_to_low: Vec<u64> = ctx.digits(a).into_iter().rev().collect();
        let rep = rep_matrix(&ctx, a);
        let rep_rows: Vec<Vec<u64>> = (0..rep.rows()).map(|i| rep.row(i)).collect();
        let min_poly = ctx.minimal_poly(a);
        doc["element"] = json!({
            "label": a.0,
            "digits": digits_high_to_low,
            "poly": ctx.show_poly(a),
            "rep_matrix": rep_rows,
            "minimal_poly": ffia::gf::poly_string(&min_poly),
            "subfield_degree": min_poly.len() - 1,
            "in_base_field": ctx.in_base_field(a),
        });
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    print!("{text}");
    Ok(0)
}

// ---------------------------------------------------------------------------
// xch / ic3 actions
// ---------------------------------------------------------------------------

/// Builds the message blocks to send: seeded random digits, or a JSON file.
fn materialize_messages<const K: usize>(
    spec: &str,
    streams: &[usize; K],
    p: u64,
) -> Result<[Vec<u64>; K], Failure> {
    if let Some(seed_text) = spec.strip_prefix("random:") {
        let seed: u64 = seed_text
            .parse()
            .map_err(|_| Failure::usage(format!("bad random seed {seed_text:?}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return Ok(std::array::from_fn(|k| {
            (0..streams[k]).map(|_| rng.gen_range(0..p)).collect()
        }));
    }
    let doc = messages_doc_from_json(&read_input(spec)?)?;
    doc.messages.try_into().map_err(|blocks: Vec<Vec<u64>>| {
        Failure::usage(format!("expected {K} message blocks, got {}", blocks.len()))
    })
}

fn run_x_action(action: &Action) -> Result<u8, Failure> {
    match action {
        Action::Classify(io) => {
            let ch = channel_doc_from_json(&read_input(&io.input)?)?.to_x_channel()?;
            let doc = x_classify_doc(&ch, &xch::classify(&ch));
            emit(&io.out, &classify_doc_to_json(&doc))?;
            Ok(0)
        }
        Action::Construct(args) => {
            let ch =
                channel_doc_from_json(&read_input(&args.io.input)?)?.to_x_channel()?;
            let forced = match &args.mode {
                Some(name) => Some(XMode::from_str(name).ok_or_else(|| {
                    Failure::usage(format!("unknown X scheme mode {name:?}"))
                })?),
                None => None,
            };
            let scheme = xch::construct(&ch, forced)?;
            xch::verify(&ch, &scheme)?;
            emit(&args.io.out, &scheme_doc_to_json(&x_scheme_doc(&ch, &scheme)))?;
            Ok(0)
        }
        Action::Verify(io) => {
            let doc = scheme_doc_from_json(&read_input(&io.input)?)?;
            let (ch, scheme) = x_scheme_from_doc(&doc)?;
            let certs = xch::verify(&ch, &scheme)?;
            print_verify_report(
                scheme.mode.as_str(),
                scheme.sum_rate,
                &[certs.rank_s1, certs.rank_s2],
                &certs.aligned_dims,
                &io.out,
            )
        }
        Action::Simulate(args) => {
            let doc = scheme_doc_from_json(&read_input(&args.io.input)?)?;
            let (ch, scheme) = x_scheme_from_doc(&doc)?;
            let sent =
                materialize_messages::<4>(&args.messages, &scheme.streams, ch.ctx().p())?;
            let decoded = xch::simulate_messages(&ch, &scheme, &sent)?;
            let is_match = decoded == sent;
            let sim = SimulationDoc {
                p: ch.ctx().p(),
                n: ch.ctx().n(),
                mode: scheme.mode.as_str().into(),
                streams: scheme.streams.to_vec(),
                sent: sent.to_vec(),
                decoded: decoded.to_vec(),
                is_match,
            };
            emit(&args.io.out, &simulation_doc_to_json(&sim))?;
            Ok(if is_match { 0 } else { 4 })
        }
    }
}

fn run_ic3_action(action: &Action) -> Result<u8, Failure> {
    match action {
        Action::Classify(io) => {
            let ch = channel_doc_from_json(&read_input(&io.input)?)?.to_ic3_channel()?;
            let doc = ic3_classify_doc(&ch, &ic3::classify(&ch));
            emit(&io.out, &classify_doc_to_json(&doc))?;
            Ok(0)
        }
        Action::Construct(args) => {
            let ch =
                channel_doc_from_json(&read_input(&args.io.input)?)?.to_ic3_channel()?;
            let forced = match &args.mode {
                Some(name) => Some(Ic3Mode::from_str(name).ok_or_else(|| {
                    Failure::usage(format!("unknown 3-user scheme mode {name:?}"))
                })?),
                None => None,
            };
            let scheme = ic3::construct(&ch, forced)?;
            ic3::verify(&ch, &scheme)?;
            emit(&args.io.out, &scheme_doc_to_json(&ic3_scheme_doc(&ch, &scheme)))?;
            Ok(0)
        }
        Action::Verify(io) => {
            let doc = scheme_doc_from_json(&read_input(&io.input)?)?;
            let (ch, scheme) = ic3_scheme_from_doc(&doc)?;
            let certs = ic3::verify(&ch, &scheme)?;
            print_verify_report(
                scheme.mode.as_str(),
                scheme.sum_rate,
                &certs.ranks,
                &certs.aligned_dims,
                &io.out,
            )
        }
        Action::Simulate(args) => {
            let doc = scheme_doc_from_json(&read_input(&args.io.input)?)?;
            let (ch, scheme) = ic3_scheme_from_doc(&doc)?;
            let sent =
                materialize_messages::<3>(&args.messages, &scheme.streams, ch.ctx().p())?;
            let decoded = ic3::simulate_messages(&ch, &scheme, &sent)?;
            let is_match = decoded == sent;
            let sim = SimulationDoc {
                p: ch.ctx().p(),
                n: ch.ctx().n(),
                mode: scheme.mode.as_str().into(),
                streams: scheme.streams.to_vec(),
                sent: sent.to_vec(),
                decoded: decoded.to_vec(),
                is_match,
            };
            emit(&args.io.out, &simulation_doc_to_json(&sim))?;
            Ok(if is_match { 0 } else { 4 })
        }
    }
}

fn print_verify_report(
    mode: &str,
    sum_rate: ffia::Rate,
    ranks: &[usize],
    aligned_dims: &[usize],
    out: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut certificates = serde_json::Map::new();
    for (k, rank) in ranks.iter().enumerate() {
        certificates.insert(format!("rank_S{}", k + 1), json!(rank));
    }
    certificates.insert("aligned_dims".into(), json!(aligned_dims));
    let doc = json!({
        "pass": true,
        "mode": mode,
        "sum_rate": rate_string(sum_rate),
        "certificates": certificates,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    emit(out, &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// census
// ---------------------------------------------------------------------------

fn parse_target(name: &str) -> Result<CensusTarget, Failure> {
    match name {
        "x" => Ok(CensusTarget::XNormalizedH),
        "x-full" => Ok(CensusTarget::XFull),
        "ic3" => Ok(CensusTarget::IcNormalized),
        "ic3-full" => Ok(CensusTarget::IcFull),
        other => CensusTarget::from_str(other).ok_or_else(|| {
            Failure::usage(format!(
                "unknown census target {other:?}; use x, x-full, ic3, or ic3-full"
            ))
        }),
    }
}

fn cmd_census(args: &CensusArgs) -> Result<u8, Failure> {
    let target = parse_target(&args.target)?;
    let mode = match args.sample {
        Some(count) => {
            if args.check {
                return Err(Failure::usage(
                    "--check needs exhaustive counts; drop --sample or --check",
                ));
            }
            CensusMode::Sample { count, seed: args.seed }
        }
        None => CensusMode::Exhaustive,
    };
    let spec = CensusSpec {
        p: args.p,
        n: args.n,
        target,
        mode,
        threshold: args.threshold,
    };
    let report = run_census(&spec)?;
    let doc = census_doc(&report);
    let json_text = census_doc_to_json(&doc);
    let csv_text = census_doc_to_csv(&doc);
    if let Some(base) = &args.out {
        let mut json_path = base.as_os_str().to_owned();
        json_path.push(".json");
        let mut csv_path = base.as_os_str().to_owned();
        csv_path.push(".csv");
        fs::write(&json_path, &json_text)
            .map_err(|e| Failure::internal(format!("writing census JSON: {e}")))?;
        fs::write(&csv_path, &csv_text)
            .map_err(|e| Failure::internal(format!("writing census CSV: {e}")))?;
    }
    match args.format {
        Format::Json => print!("{json_text}"),
        Format::Csv => print!("{csv_text}"),
    }
    if args.check && !report.all_pass() {
        let failed: Vec<&str> = report
            .comparisons
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        return Err(Failure {
            code: 4,
            message: format!("closed-form checks failed: {}", failed.join(", ")),
        });
    }
    Ok(0)
}

// ---------------------------------------------------------------------------

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Field { p, n, element, modulus } => {
            cmd_field(*p, *n, element.clone(), modulus.clone())
        }
        Command::Xch { action } => run_x_action(action),
        Command::Ic3 { action } => run_ic3_action(action),
        Command::Census(args) => cmd_census(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
