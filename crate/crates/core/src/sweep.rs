//! Cartesian parameter sweeps over one plan on one seeded community.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::community::Community;
use crate::config::{Override, ScenarioConfig};
use crate::coordinator::{evaluate_plan, ClassStats, EvaluationOptions};
use crate::error::{Error, Result};
use crate::plan::PlanMode;

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    /// One value per axis field, in column order.
    pub values: Vec<f64>,
    /// Thermostat state count, when shared by every device.
    pub states: Option<usize>,
    pub mode: Option<PlanMode>,
    pub peak_before_kw: f64,
    pub peak_after_shiftable_kw: f64,
    pub peak_after_thermostat_kw: f64,
    pub final_peak_kw: f64,
    pub percent_peak_reduction: f64,
    pub classes: BTreeMap<String, ClassStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub plan: String,
    /// Axis field names, one per value column.
    pub fields: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Evaluates every point of `[sweep]`. `workers` bounds the thread count;
/// `None` uses rayon's default. Rows come back in point order regardless.
pub fn run_sweep(cfg: &ScenarioConfig, workers: Option<usize>) -> Result<SweepOutcome> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "the sweep command needs a [sweep] table"))?;
    let points = cfg.sweep_overrides(sweep).map_err(first_error)?;
    let (_, base) = cfg
        .plan_spec(&sweep.plan)
        .ok_or_else(|| Error::config("sweep.plan", format!("no plan named {:?}", sweep.plan)))?;
    let community = cfg.build_community()?;
    let options = cfg.run.options();
    let fields: Vec<String> = sweep
        .axes
        .iter()
        .flat_map(|a| a.all_fields().into_iter().map(String::from))
        .collect();

    let eval = |(i, point): (usize, &Vec<Override>)| -> Result<SweepRow> {
        let mut spec = base.clone();
        let mut states = None;
        let mut values = Vec::with_capacity(point.len());
        for o in point {
            match o {
                Override::States(k) => {
                    states = Some(*k);
                    values.push(*k as f64);
                }
                Override::Term { value, .. } => {
                    o.apply_to_plan(&mut spec);
                    values.push(*value);
                }
            }
        }
        let community = match states {
            Some(k) => community.with_states(k)?,
            None => community.clone(),
        };
        let plan = spec.build(&community.classes(), &format!("sweep point {i}"))?;
        evaluate_point(i, values, &community, &plan, &options)
    };

    let rows: Result<Vec<SweepRow>> = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::config("--workers", e.to_string()))?;
            pool.install(|| points.par_iter().enumerate().map(eval).collect())
        }
        None => points.par_iter().enumerate().map(eval).collect(),
    };
    Ok(SweepOutcome {
        plan: sweep.plan.clone(),
        fields,
        rows: rows?,
    })
}

fn evaluate_point(
    point: usize,
    values: Vec<f64>,
    community: &Community,
    plan: &crate::plan::EngagementPlan,
    options: &EvaluationOptions,
) -> Result<SweepRow> {
    let r = evaluate_plan(community, plan, options)?.report;
    Ok(SweepRow {
        point,
        values,
        states: community.uniform_states(),
        mode: plan.mode(),
        peak_before_kw: r.peak_before_kw,
        peak_after_shiftable_kw: r.peak_after_shiftable_kw,
        peak_after_thermostat_kw: r.peak_after_thermostat_kw,
        final_peak_kw: r.final_peak_kw,
        percent_peak_reduction: r.percent_peak_reduction,
        classes: r.classes,
    })
}

fn first_error(mut errs: Vec<Error>) -> Error {
    errs.swap_remove(0)
}
