//! CSV and JSON artifacts.
//!
//! Numbers are written with 12 significant digits ([`fmt_num`]) so golden
//! files stay stable across platforms. Every writer has a matching reader.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::privacy::{PrivacyCurve, PrivacyMethod};
use crate::sim::{ExperimentResult, MeanTrace, ResolvedParams, RunSummary};

pub const TRACE_HEADER: [&str; 7] = ["config_label", "b", "c", "eta", "run_id", "t", "cum_empirical_regret"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "config_label",
    "b",
    "c",
    "eta",
    "mean_final_regret",
    "stderr_final_regret",
    "runtime_seconds",
];
pub const CURVE_HEADER: [&str; 7] = ["method", "T", "N", "b", "c", "delta", "epsilon"];

/// Formats like C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..12).contains(&exp) {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to the value [`fmt_num`] would print.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub config_label: String,
    pub b: u64,
    pub c: f64,
    pub eta: f64,
    /// Run index, or `mean` for run-averaged rows.
    pub run_id: String,
    pub t: u64,
    pub cum_empirical_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config_label: String,
    pub b: u64,
    pub c: f64,
    pub eta: f64,
    pub mean_final_regret: f64,
    pub stderr_final_regret: f64,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub method: PrivacyMethod,
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(rename = "N")]
    pub num_arms: usize,
    pub b: u64,
    pub c: f64,
    pub delta: f64,
    /// Empty where the method gives no guarantee at this δ.
    pub epsilon: Option<f64>,
}

fn param_fields(p: &ResolvedParams) -> [String; 4] {
    [p.label.clone(), p.b.to_string(), fmt_num(p.c), fmt_num(p.eta)]
}

/// Per-run downsampled traces.
pub fn write_traces<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for run in &result.run_traces {
        let p = &result.summaries[run.config_index].params;
        let [label, b, c, eta] = param_fields(p);
        for (t, r) in run.t.iter().zip(&run.cum_empirical_regret) {
            w.write_record([&label, &b, &c, &eta, &run.run_id.to_string(), &t.to_string(), &fmt_num(*r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Run-averaged traces, `run_id = mean`.
pub fn write_mean_traces<W: Write>(out: W, traces: &[MeanTrace]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for tr in traces {
        let [label, b, c, eta] = param_fields(&tr.params);
        for (t, r) in tr.t.iter().zip(&tr.cum_empirical_regret) {
            w.write_record([&label, &b, &c, &eta, "mean", &t.to_string(), &fmt_num(*r)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_traces<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    read_rows(input)
}

pub fn write_summaries<W: Write>(out: W, summaries: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        let [label, b, c, eta] = param_fields(&s.params);
        w.write_record([
            label,
            b,
            c,
            eta,
            fmt_num(s.mean_final_regret),
            fmt_num(s.stderr_final_regret),
            fmt_num(s.runtime_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summaries<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    read_rows(input)
}

pub fn write_curves_csv<W: Write>(out: W, curves: &[PrivacyCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for curve in curves {
        for p in &curve.points {
            w.write_record([
                curve.method.as_str().to_string(),
                curve.horizon.to_string(),
                curve.num_arms.to_string(),
                curve.b.to_string(),
                fmt_num(curve.c),
                fmt_num(p.delta),
                p.epsilon.map(fmt_num).unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv<R: Read>(input: R) -> Result<Vec<CurveRow>> {
    read_rows(input)
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn write_curve_json<W: Write>(mut out: W, curve: &PrivacyCurve) -> Result<()> {
    let mut rounded = curve.clone();
    rounded.c = round_sig(rounded.c);
    for p in &mut rounded.points {
        p.delta = round_sig(p.delta);
        p.epsilon = p.epsilon.map(round_sig);
    }
    rounded.metadata.eta = rounded.metadata.eta.map(round_sig);
    serde_json::to_writer_pretty(&mut out, &rounded)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_curve_json<R: Read>(input: R) -> Result<PrivacyCurve> {
    Ok(serde_json::from_reader(input)?)
}

fn read_rows<R: Read, T: serde::de::DeserializeOwned>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
