//! File formats: body specs and flow configs in, reports, traces and support samples out.

use std::fs;
use std::path::{Path, PathBuf};

use gaussflow_core::flow::{FlowConfig, FlowTrace, Snapshot};
use gaussflow_core::{BodySpec, FunctionalReport, Point, SupportField};
use serde_json::{json, Map, Value};

use crate::error::{LabError, LabResult};

/// Column order of the trace CSV.
pub const TRACE_HEADER: [&str; 16] = [
    "t",
    "t_over_T",
    "volume",
    "entropy",
    "E_m1",
    "E_m2",
    "E_m3",
    "pinching",
    "min_gauss",
    "stability_gap",
    "stability_ratio",
    "soliton_residual",
    "ck0",
    "ck1",
    "ck2",
    "dt",
];

/// Accepts a path to a JSON file or the JSON text itself.
pub fn read_spec(source: &str) -> LabResult<BodySpec> {
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else {
        fs::read_to_string(source).map_err(|e| LabError::io(source, e))?
    };
    serde_json::from_str(&text).map_err(|source| LabError::Json { what: "body spec".into(), source })
}

pub fn read_config(path: &Path) -> LabResult<FlowConfig> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let config: FlowConfig =
        serde_json::from_str(&text).map_err(|source| LabError::Json { what: "flow config".into(), source })?;
    config.validate()?;
    Ok(config)
}

pub fn create_dir(dir: &Path) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_text(path, &text)
}

fn point(p: &Point, n: usize) -> Value {
    json!(p.coords(n))
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Flat JSON object for a report. `E_m{k}`/`e_m{k}` hold `E_p`, `e_p` for `p = −k`.
pub fn report_json(report: &FunctionalReport) -> Value {
    let n = report.dimension;
    let mut map = Map::new();
    let mut put = |key: &str, value: Value| {
        map.insert(key.to_string(), value);
    };
    put("dimension", json!(n));
    put("volume", number(report.volume));
    put("scale", number(report.scale));
    put("E", number(report.entropy.value));
    put("e", point(&report.entropy.point, n));
    for (k, opt) in report.entropies_p.iter().enumerate() {
        put(&format!("E_m{}", k + 1), number(opt.value));
        put(&format!("e_m{}", k + 1), point(&opt.point, n));
    }
    put("santalo", point(&report.santalo_point, n));
    put("diameter", number(report.diameter));
    put("r_minus", number(report.inradius));
    put("incenter", point(&report.incenter, n));
    put("r_plus", number(report.circumradius));
    put("circumcenter", point(&report.circumcenter, n));
    put("pinching", number(report.pinching));
    put("chain_ok", json!(report.chain.holds()));
    put("chain_margin", number(report.chain.min_margin()));
    put("chain_terms", Value::Array(report.chain.terms.iter().map(|x| number(*x)).collect()));
    put("blaschke_santalo_margin", number(report.blaschke_santalo_margin));
    put("vitale_margin", number(report.vitale_margin));
    put("stability_epsilon", number(report.stability.epsilon));
    put("stability_gap", number(report.stability.gap));
    put("stability_ratio", report.stability.ratio.map_or(Value::Null, number));
    put("lemma_stab_epsilon", number(report.lemma.epsilon));
    put("lemma_stab_lhs", number(report.lemma.lhs));
    put("lemma_stab_rhs", number(report.lemma.rhs));
    put("r_bracket", json!([number(report.lemma.r), number(report.lemma.r_lower), number(report.lemma.r_upper)]));
    put("failing_checks", json!(report.failing_checks()));
    Value::Object(map)
}

/// One parsed trace row; empty cells become `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow(pub Vec<Option<f64>>);

impl TraceRow {
    pub fn get(&self, column: &str) -> Option<f64> {
        let index = TRACE_HEADER.iter().position(|c| *c == column)?;
        self.0[index]
    }
}

pub fn snapshot_row(snap: &Snapshot) -> TraceRow {
    let p = |k: usize| snap.entropies_p.get(k).copied();
    let ck = |k: usize| snap.ck.get(k).copied();
    TraceRow(vec![
        Some(snap.t),
        Some(snap.t_over_t),
        Some(snap.volume),
        snap.entropy,
        p(0),
        p(1),
        p(2),
        snap.pinching,
        snap.min_gauss,
        snap.stability_gap,
        snap.stability_ratio,
        snap.soliton_residual,
        ck(0),
        ck(1),
        ck(2),
        Some(snap.dt),
    ])
}

fn csv_writer(path: &Path) -> LabResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| LabError::Csv { path: path.into(), source })
}

pub fn write_trace_csv(path: &Path, trace: &FlowTrace) -> LabResult<()> {
    let err = |source| LabError::Csv { path: path.into(), source };
    let mut writer = csv_writer(path)?;
    writer.write_record(TRACE_HEADER).map_err(err)?;
    for snap in &trace.snapshots {
        let row = snapshot_row(snap);
        writer.write_record(row.0.iter().map(|v| v.map_or(String::new(), |x| x.to_string()))).map_err(err)?;
    }
    writer.flush().map_err(|e| LabError::io(path, e))
}

pub fn read_trace_csv(path: &Path) -> LabResult<Vec<TraceRow>> {
    let err = |source| LabError::Csv { path: path.into(), source };
    let malformed = |reason: String| LabError::Trace { path: path.into(), reason };
    let mut reader = csv::Reader::from_path(path).map_err(err)?;
    let header = reader.headers().map_err(err)?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(err)?;
        let cells = record
            .iter()
            .map(|cell| {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|_| malformed(format!("bad number {cell:?}")))
                }
            })
            .collect::<LabResult<Vec<_>>>()?;
        rows.push(TraceRow(cells));
    }
    Ok(rows)
}

/// Sidecar JSON describing a flow run.
pub fn trace_metadata(spec: &BodySpec, trace: &FlowTrace, grid_nodes: usize) -> Value {
    json!({
        "spec": spec,
        "config": trace.config,
        "dimension": trace.config.dimension,
        "resolution": trace.config.resolution(),
        "nodes": grid_nodes,
        "extinction_estimate": number(trace.extinction.time),
        "inradius_bound": number(trace.extinction.inradius_bound),
        "inradius_bound_holds": trace.extinction.bound_holds(),
        "initial_volume": number(trace.initial_volume),
        "steps": trace.steps,
        "snapshots": trace.snapshots.len(),
        "termination": trace.termination,
        "columns": TRACE_HEADER,
    })
}

/// Node coordinates and support values, one node per row.
pub fn write_support_csv(path: &Path, field: &SupportField) -> LabResult<()> {
    let err = |source| LabError::Csv { path: path.into(), source };
    let n = field.dimension();
    let mut writer = csv_writer(path)?;
    let header: &[&str] = if n == 2 { &["u1", "u2", "s"] } else { &["u1", "u2", "u3", "s"] };
    writer.write_record(header).map_err(err)?;
    for (u, s) in field.grid().nodes().iter().zip(field.values()) {
        let mut record: Vec<String> = u.coords(n).iter().map(|x| x.to_string()).collect();
        record.push(s.to_string());
        writer.write_record(&record).map_err(err)?;
    }
    writer.flush().map_err(|e| LabError::io(path, e))
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
