//! CSV and JSON writers. All real numbers are written with six decimals;
//! rows keep the order of the tables they come from.

use std::io::Write;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use serde_json::json;

use super::{BiasRow, DeltaTable, ReportError, TopKRecord};
use crate::agreement::{AgreementEntry, KStats};
use crate::runs::ApdSelection;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}', expected csv or json")),
        }
    }
}

/// Six-decimal rendering; negative zero prints as `0.000000`.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

fn round6(x: f64) -> f64 {
    fmt6(x).parse().expect("formatted float parses")
}

fn ser6<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round6(*x))
}

fn ser6_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_some(&round6(*x)),
        None => s.serialize_none(),
    }
}

/// Identity of one input corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    pub path: String,
    pub sha256: String,
    pub instances: usize,
    pub skipped_records: usize,
}

/// Run settings echoed into JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ReportMetadata {
    pub command: String,
    pub inputs: Vec<InputInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub k_specs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combine: Option<String>,
    pub tie: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub transform: String,
    pub punctuation_zeroed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn finish<W: Write>(mut out: W) -> Result<(), ReportError> {
    out.flush()?;
    Ok(())
}

fn write_json<W: Write>(mut out: W, value: &serde_json::Value) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    finish(out)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn csv_finish<W: Write>(w: csv::Writer<W>) -> Result<(), ReportError> {
    let out = w
        .into_inner()
        .map_err(|e| ReportError::Io(e.into_error()))?;
    finish(out)
}

#[derive(Serialize)]
struct KStatsOut<'a> {
    method: &'a str,
    #[serde(serialize_with = "ser6")]
    mean: f64,
    #[serde(serialize_with = "ser6")]
    sd: f64,
    fallbacks: usize,
}

impl<'a> From<&'a KStats> for KStatsOut<'a> {
    fn from(k: &'a KStats) -> Self {
        Self {
            method: &k.method,
            mean: k.mean,
            sd: k.sd,
            fallbacks: k.fallbacks,
        }
    }
}

#[derive(Serialize)]
struct EntryOut<'a> {
    selector_a: &'a str,
    selector_b: &'a str,
    k_spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    combine: Option<String>,
    #[serde(serialize_with = "ser6")]
    mean_agreement: f64,
    n_instances: usize,
    skipped: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    k_stats: Vec<KStatsOut<'a>>,
}

/// Pairwise agreement entries; dynamic entries carry per-method k mean/sd.
pub fn write_agreement<W: Write>(
    entries: &[AgreementEntry],
    metadata: &ReportMetadata,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    match format {
        Format::Json => {
            let rows: Vec<EntryOut> = entries
                .iter()
                .map(|e| EntryOut {
                    selector_a: &e.selector_a,
                    selector_b: &e.selector_b,
                    k_spec: e.k_spec.to_string(),
                    combine: e.combine.map(|c| c.to_string()),
                    mean_agreement: e.mean_agreement,
                    n_instances: e.n_instances,
                    skipped: e.skipped,
                    k_stats: e.k_stats.iter().map(KStatsOut::from).collect(),
                })
                .collect();
            write_json(out, &json!({ "metadata": metadata, "entries": rows }))
        }
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record([
                "selector_a",
                "selector_b",
                "k_spec",
                "combine",
                "mean_agreement",
                "n_instances",
                "skipped",
                "k_mean_a",
                "k_sd_a",
                "k_mean_b",
                "k_sd_b",
            ])?;
            for e in entries {
                let stat = |i: usize| -> [String; 2] {
                    e.k_stats
                        .get(i)
                        .map(|k| [fmt6(k.mean), fmt6(k.sd)])
                        .unwrap_or_default()
                };
                let [ma, sa] = stat(0);
                let [mb, sb] = stat(1);
                w.write_record([
                    e.selector_a.clone(),
                    e.selector_b.clone(),
                    e.k_spec.to_string(),
                    e.combine.map(|c| c.to_string()).unwrap_or_default(),
                    fmt6(e.mean_agreement),
                    e.n_instances.to_string(),
                    e.skipped.to_string(),
                    ma,
                    sa,
                    mb,
                    sb,
                ])?;
            }
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct DeltaOut<'a> {
    method: &'a str,
    reference: &'a str,
    fixed_k: usize,
    #[serde(serialize_with = "ser6")]
    mean_agreement_fixed: f64,
    #[serde(serialize_with = "ser6")]
    mean_agreement_dynamic: f64,
    #[serde(serialize_with = "ser6")]
    delta: f64,
}

/// The delta column is the difference of the two rounded agreement columns,
/// so it can be recomputed exactly from the file.
pub fn write_delta<W: Write>(
    table: &DeltaTable,
    metadata: &ReportMetadata,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    let rows: Vec<DeltaOut> = table
        .rows
        .iter()
        .map(|r| {
            let (fixed, dynamic) = (
                round6(r.mean_agreement_fixed),
                round6(r.mean_agreement_dynamic),
            );
            DeltaOut {
                method: &r.method,
                reference: &r.reference,
                fixed_k: r.fixed_k,
                mean_agreement_fixed: fixed,
                mean_agreement_dynamic: dynamic,
                delta: dynamic - fixed,
            }
        })
        .collect();
    match format {
        Format::Json => write_json(out, &json!({ "metadata": metadata, "rows": rows })),
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record([
                "method",
                "reference",
                "fixed_k",
                "mean_agreement_fixed",
                "mean_agreement_dynamic",
                "delta",
            ])?;
            for r in &rows {
                w.write_record([
                    r.method.to_owned(),
                    r.reference.to_owned(),
                    r.fixed_k.to_string(),
                    fmt6(r.mean_agreement_fixed),
                    fmt6(r.mean_agreement_dynamic),
                    fmt6(r.delta),
                ])?;
            }
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct BiasOut {
    bin_lo: usize,
    bin_hi: usize,
    k_spec: String,
    #[serde(serialize_with = "ser6")]
    mean_agreement: f64,
    n_instances: usize,
    n_pairs: usize,
}

/// Long format, one row per (length bin, k).
pub fn write_bias<W: Write>(
    rows: &[BiasRow],
    metadata: &ReportMetadata,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    let rows: Vec<BiasOut> = rows
        .iter()
        .map(|r| BiasOut {
            bin_lo: r.bin.lo,
            bin_hi: r.bin.hi,
            k_spec: r.k_spec.to_string(),
            mean_agreement: r.mean_agreement,
            n_instances: r.n_instances,
            n_pairs: r.n_pairs,
        })
        .collect();
    match format {
        Format::Json => write_json(out, &json!({ "metadata": metadata, "rows": rows })),
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record([
                "bin_lo",
                "bin_hi",
                "k_spec",
                "mean_agreement",
                "n_instances",
                "n_pairs",
            ])?;
            for r in &rows {
                w.write_record([
                    r.bin_lo.to_string(),
                    r.bin_hi.to_string(),
                    r.k_spec.clone(),
                    fmt6(r.mean_agreement),
                    r.n_instances.to_string(),
                    r.n_pairs.to_string(),
                ])?;
            }
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct ApdOut<'a> {
    run_id: &'a str,
    #[serde(serialize_with = "ser6_opt")]
    apd: Option<f64>,
    selected: bool,
}

/// One row per run in `order`, flagging the selected run.
pub fn write_apd<W: Write>(
    selection: &ApdSelection,
    order: &[String],
    metadata: &ReportMetadata,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    let rows: Vec<ApdOut> = order
        .iter()
        .map(|id| ApdOut {
            run_id: id,
            apd: selection.scores.get(id).copied(),
            selected: *id == selection.selected,
        })
        .collect();
    match format {
        Format::Json => write_json(
            out,
            &json!({ "metadata": metadata, "runs": rows, "selected": selection.selected }),
        ),
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["run_id", "apd", "selected"])?;
            for r in &rows {
                w.write_record([
                    r.run_id.to_owned(),
                    r.apd.map(fmt6).unwrap_or_default(),
                    r.selected.to_string(),
                ])?;
            }
            csv_finish(w)
        }
    }
}

#[derive(Serialize)]
struct TopKOut<'a> {
    instance_id: &'a str,
    method: &'a str,
    k_spec: String,
    k: usize,
    fallback: bool,
    indices: &'a [usize],
    tokens: &'a [String],
}

/// CSV has one row per selected token; JSON one object per selection.
pub fn write_topk<W: Write>(
    records: &[TopKRecord],
    metadata: &ReportMetadata,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    match format {
        Format::Json => {
            let rows: Vec<TopKOut> = records
                .iter()
                .map(|r| TopKOut {
                    instance_id: &r.instance_id,
                    method: &r.method,
                    k_spec: r.k_spec.to_string(),
                    k: r.k,
                    fallback: r.fallback_used,
                    indices: &r.indices,
                    tokens: &r.tokens,
                })
                .collect();
            write_json(out, &json!({ "metadata": metadata, "selections": rows }))
        }
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record([
                "instance_id",
                "method",
                "k_spec",
                "k",
                "fallback",
                "index",
                "token",
            ])?;
            for r in records {
                let spec = r.k_spec.to_string();
                for (index, token) in r.indices.iter().zip(&r.tokens) {
                    w.write_record([
                        r.instance_id.as_str(),
                        r.method.as_str(),
                        spec.as_str(),
                        &r.k.to_string(),
                        &r.fallback_used.to_string(),
                        &index.to_string(),
                        token.as_str(),
                    ])?;
                }
            }
            csv_finish(w)
        }
    }
}

/// Result of checking one corpus file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub path: String,
    pub sha256: String,
    pub instances: usize,
    pub methods: Vec<String>,
    pub annotated: usize,
    pub skipped_records: usize,
    pub min_len: usize,
    pub max_len: usize,
    #[serde(serialize_with = "ser6")]
    pub mean_len: f64,
}

pub fn write_validation<W: Write>(
    summary: &ValidationSummary,
    format: Format,
    out: W,
) -> Result<(), ReportError> {
    match format {
        Format::Json => write_json(out, &serde_json::to_value(summary)?),
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(["field", "value"])?;
            let rows = [
                ("path", summary.path.clone()),
                ("sha256", summary.sha256.clone()),
                ("instances", summary.instances.to_string()),
                ("methods", summary.methods.join(";")),
                ("annotated", summary.annotated.to_string()),
                ("skipped_records", summary.skipped_records.to_string()),
                ("min_len", summary.min_len.to_string()),
                ("max_len", summary.max_len.to_string()),
                ("mean_len", fmt6(summary.mean_len)),
            ];
            for (k, v) in rows {
                w.write_record([k, v.as_str()])?;
            }
            csv_finish(w)
        }
    }
}
