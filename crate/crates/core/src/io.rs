//! CSV and text serialisation of traces, clusters and trial summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::experiment::CurvatureRow;
use crate::metrics::{AggregateReport, Distribution, TrialSummary};
use crate::planner::Plan;
use crate::sim::SimulationTrace;

pub const TRACE_COLUMNS: [&str; 17] = [
    "step",
    "time_s",
    "vehicle_id",
    "role",
    "x_m",
    "y_m",
    "phi_rad",
    "v_mps",
    "a_mps2",
    "lane",
    "c_av",
    "c_vir",
    "decision_flag",
    "planner_status",
    "selected_m",
    "selected_n",
    "u_total",
];

pub const CANDIDATE_COLUMNS: [&str; 24] = [
    "m", "n", "x_e", "t_e", "u_yx", "u_xt", "u_risk", "u_total", "feasibility", "selected", "x_start", "t_start",
    "yx_c0", "yx_c1", "yx_c2", "yx_c3", "yx_c4", "yx_c5", "xt_c0", "xt_c1", "xt_c2", "xt_c3", "xt_c4", "xt_c5",
];

pub const TRIAL_COLUMNS: [&str; 10] = [
    "trial",
    "param_value",
    "outcome",
    "decision_time_s",
    "ttc_at_initiation_s",
    "min_ttc_after_decision_s",
    "mean_velocity_mps",
    "max_abs_curvature",
    "mean_abs_curvature",
    "controller",
];

pub const CURVATURE_COLUMNS: [&str; 4] = ["kind", "max_abs_curvature", "mean_abs_curvature", "length_m"];

/// Nine significant digits, `%.9g` style.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

pub fn write_trace<W: Write>(out: &mut W, trace: &SimulationTrace) -> Result<()> {
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for r in &trace.records {
        let (m, n, u) = match r.selected {
            Some(s) => (s.m.to_string(), s.n.to_string(), fmt_sig(s.u_total)),
            None => Default::default(),
        };
        for v in &r.vehicles {
            let s = &v.state;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                fmt_sig(r.time),
                v.id,
                v.role.as_str(),
                fmt_sig(s.x),
                fmt_sig(s.y),
                fmt_sig(s.phi),
                fmt_sig(s.v),
                fmt_sig(s.a),
                v.lane.as_str(),
                fmt_sig(r.c_av),
                fmt_sig(r.c_vir),
                u8::from(r.decision),
                r.status.as_str(),
                m,
                n,
                u,
            )?;
        }
    }
    Ok(())
}

pub fn write_candidates<W: Write>(out: &mut W, plan: &Plan<f64>) -> Result<()> {
    writeln!(out, "{}", CANDIDATE_COLUMNS.join(","))?;
    for (i, c) in plan.candidates.iter().enumerate() {
        let mut fields = vec![
            c.m_index.to_string(),
            c.n_index.to_string(),
            fmt_sig(c.x_e),
            fmt_sig(c.t_e),
            fmt_sig(c.u_yx),
            fmt_sig(c.u_xt),
            fmt_sig(c.u_risk),
            fmt_sig(c.u_total),
            c.feasibility.as_str().to_string(),
            u8::from(plan.selected == Some(i)).to_string(),
            fmt_sig(c.x_start),
            fmt_sig(c.t_start),
        ];
        fields.extend(c.s_yx.coeffs.iter().chain(&c.s_xt.coeffs).map(|&v| fmt_sig(v)));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// One row per trial; `param_value` is empty outside sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow<'a> {
    pub trial: u64,
    pub param_value: Option<f64>,
    pub controller: &'a str,
    pub summary: TrialSummary,
}

pub fn write_trials<W: Write>(out: &mut W, rows: &[TrialRow]) -> Result<()> {
    writeln!(out, "{}", TRIAL_COLUMNS.join(","))?;
    for r in rows {
        let s = &r.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial,
            opt(r.param_value),
            s.outcome.as_str(),
            opt(s.decision_time),
            opt(s.ttc_at_initiation),
            opt(s.min_ttc_after_decision),
            fmt_sig(s.mean_velocity),
            opt(s.max_abs_curvature),
            opt(s.mean_abs_curvature),
            r.controller,
        )?;
    }
    Ok(())
}

pub fn write_curvature<W: Write>(out: &mut W, rows: &[CurvatureRow]) -> Result<()> {
    writeln!(out, "{}", CURVATURE_COLUMNS.join(","))?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.kind.as_str(), fmt_sig(r.max_abs), fmt_sig(r.mean_abs), fmt_sig(r.length))?;
    }
    Ok(())
}

fn write_distribution<W: Write>(out: &mut W, name: &str, d: &Distribution) -> Result<()> {
    writeln!(
        out,
        "{name}: n={} excluded={} mean={} median={} std={} min={} max={}",
        d.count,
        d.excluded,
        fmt_sig(d.mean),
        fmt_sig(d.median),
        fmt_sig(d.std),
        fmt_sig(d.min),
        fmt_sig(d.max),
    )?;
    Ok(())
}

pub fn write_summary<W: Write>(out: &mut W, title: &str, report: &AggregateReport) -> Result<()> {
    writeln!(out, "[{title}]")?;
    writeln!(out, "trials: {}", report.trials)?;
    writeln!(
        out,
        "outcomes: merged={} timeout={} collision={}",
        report.merged, report.timeouts, report.collisions
    )?;
    write_distribution(out, "decision_time_s", &report.decision_time)?;
    write_distribution(out, "ttc_at_initiation_s", &report.ttc_at_initiation)?;
    write_distribution(out, "min_ttc_after_decision_s", &report.min_ttc_after_decision)?;
    write_distribution(out, "mean_velocity_mps", &report.mean_velocity)?;
    write_distribution(out, "max_abs_curvature", &report.max_abs_curvature)?;
    write_distribution(out, "mean_abs_curvature", &report.mean_abs_curvature)?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}
