//! Report files: summary JSON, profile and schedule CSVs, protocol trace
//! and sweep tables.
//!
//! CSV numbers carry 6 significant digits. JSON keeps full precision.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csv::{Terminator, WriterBuilder};
use serde::Serialize;

use crate::coordinator::{Evaluation, SimulationReport, TraceEntry};
use crate::error::Result;
use crate::plan::EngagementPlan;
use crate::sweep::SweepOutcome;

/// `v` rounded to 6 significant digits, in the shortest form that parses
/// back to the rounded value.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("scientific notation parses");
    rounded.to_string()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// Keeps file names portable.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Columns `slot, minutes, x, x_hat, x_tilde`, one row per slot: demanded
/// aggregate, after the shiftable phase, after the thermostat phase.
pub fn write_profiles_csv(path: &Path, report: &SimulationReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["slot", "minutes", "x", "x_hat", "x_tilde"])?;
    let p = &report.profiles;
    for t in 0..report.slots {
        w.write_record([
            t.to_string(),
            fmt_sig(t as f64 * report.dt_minutes),
            fmt_sig(p.initial[t]),
            fmt_sig(p.after_shiftable[t]),
            fmt_sig(p.after_thermostat[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per device.
pub fn write_schedule_csv(path: &Path, report: &SimulationReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "customer",
        "class",
        "kind",
        "rated_kw",
        "preferred_start_slot",
        "start_slot",
        "delay_slots",
        "max_delay_slots",
        "states",
        "set_point_f",
        "severity_f",
        "eligible",
        "duration_budget_slots",
        "denied_slots",
        "max_deviation_f",
        "throttled",
    ])?;
    for c in &report.customers {
        for s in &c.shiftables {
            w.write_record([
                c.id.to_string(),
                s.class.clone(),
                "shiftable".into(),
                fmt_sig(s.rated_kw),
                s.preferred_start_slot.to_string(),
                s.start_slot.to_string(),
                s.delay_slots.to_string(),
                s.max_delay_slots.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        for th in &c.thermostats {
            let throttled = th
                .throttled
                .iter()
                .map(|(t, k)| format!("{t}:{k}"))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                c.id.to_string(),
                th.class.clone(),
                match th.kind {
                    crate::plan::ThermalKind::Cooling => "cooling".into(),
                    crate::plan::ThermalKind::Heating => "heating".into(),
                },
                fmt_sig(th.rated_kw),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                th.num_states.to_string(),
                fmt_sig(th.set_point_f),
                fmt_sig(th.severity_f),
                th.eligible.to_string(),
                th.duration_budget_slots.to_string(),
                th.denied_slots.to_string(),
                fmt_sig(th.max_deviation_f),
                throttled,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    plan: &'a str,
    seed: u64,
    terms: &'a EngagementPlan,
    report: &'a SimulationReport,
}

pub fn write_summary_json(
    path: &Path,
    plan_name: &str,
    seed: u64,
    plan: &EngagementPlan,
    report: &SimulationReport,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(
        &mut w,
        &Summary {
            plan: plan_name,
            seed,
            terms: plan,
            report,
        },
    )?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// One JSON object per protocol message.
pub fn write_trace_jsonl(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in trace {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the four per-plan files into `dir` and returns their paths.
pub fn write_run(
    dir: &Path,
    plan_name: &str,
    seed: u64,
    plan: &EngagementPlan,
    eval: &Evaluation,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(plan_name);
    let summary = dir.join(format!("summary_{stem}.json"));
    let profiles = dir.join(format!("profiles_{stem}.csv"));
    let schedule = dir.join(format!("schedule_{stem}.csv"));
    let trace = dir.join(format!("trace_{stem}.jsonl"));
    write_summary_json(&summary, plan_name, seed, plan, &eval.report)?;
    write_profiles_csv(&profiles, &eval.report)?;
    write_schedule_csv(&schedule, &eval.report)?;
    write_trace_jsonl(&trace, &eval.trace)?;
    Ok(vec![summary, profiles, schedule, trace])
}

/// Long-format sweep table, one row per point. Per thermostat class `C`:
/// `n_C` eligible devices, `severity_ave_C` mean severity and
/// `theta_ave_C` mean realized worst deviation over eligible devices.
pub fn write_sweep_csv(path: &Path, outcome: &SweepOutcome) -> Result<()> {
    let classes: BTreeSet<&String> = outcome.rows.iter().flat_map(|r| r.classes.keys()).collect();
    let mut header: Vec<String> = vec!["point".into()];
    header.extend(outcome.fields.iter().cloned());
    // A states axis already supplies the column.
    let states_column = !outcome.fields.iter().any(|f| f == "states");
    if states_column {
        header.push("states".into());
    }
    header.extend(
        [
            "mode",
            "peak_before_kw",
            "peak_after_shiftable_kw",
            "peak_after_thermostat_kw",
            "percent_peak_reduction",
        ]
        .map(String::from),
    );
    for c in &classes {
        header.push(format!("n_{c}"));
        header.push(format!("severity_ave_{c}"));
        header.push(format!("theta_ave_{c}"));
    }
    let mut w = csv_writer(path)?;
    w.write_record(&header)?;
    for r in &outcome.rows {
        let mut rec = vec![r.point.to_string()];
        rec.extend(r.values.iter().map(|v| fmt_sig(*v)));
        if states_column {
            rec.push(r.states.map(|k| k.to_string()).unwrap_or_default());
        }
        rec.push(r.mode.map(|m| m.to_string()).unwrap_or_default());
        for v in [
            r.peak_before_kw,
            r.peak_after_shiftable_kw,
            r.peak_after_thermostat_kw,
            r.percent_peak_reduction,
        ] {
            rec.push(fmt_sig(v));
        }
        for c in &classes {
            match r.classes.get(*c) {
                Some(s) => {
                    rec.push(s.eligible.to_string());
                    rec.push(fmt_sig(s.mean_severity_f));
                    rec.push(fmt_sig(s.mean_realized_deviation_f));
                }
                None => rec.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
