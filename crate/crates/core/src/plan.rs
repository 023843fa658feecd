//! Customer engagement plans.
//!
//! A plan fixes, per flexible load class, how much the operator may
//! inconvenience a customer: a maximum start delay for shiftable loads, and
//! for thermostat loads a maximum duration below full power plus a
//! temperature-deviation rule. The deviation rule is either constant (CDP)
//! or proportional to the distance between the customer's set point and the
//! plan's reference temperature (PDP).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Whether a thermostat load cools (AC) or heats (WH).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalKind {
    Cooling,
    Heating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    Shiftable,
    Thermostat(ThermalKind),
}

impl fmt::Display for LoadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadKind::Shiftable => f.write_str("shiftable"),
            LoadKind::Thermostat(ThermalKind::Cooling) => f.write_str("thermostat-cooling"),
            LoadKind::Thermostat(ThermalKind::Heating) => f.write_str("thermostat-heating"),
        }
    }
}

/// A flexible load class such as `AC` or `CD`, tagged with its kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoadClassId {
    pub name: String,
    pub kind: LoadKind,
}

impl LoadClassId {
    pub fn new(name: impl Into<String>, kind: LoadKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn shiftable(name: impl Into<String>) -> Self {
        Self::new(name, LoadKind::Shiftable)
    }

    pub fn cooling(name: impl Into<String>) -> Self {
        Self::new(name, LoadKind::Thermostat(ThermalKind::Cooling))
    }

    pub fn heating(name: impl Into<String>) -> Self {
        Self::new(name, LoadKind::Thermostat(ThermalKind::Heating))
    }

    pub fn thermal_kind(&self) -> Option<ThermalKind> {
        match self.kind {
            LoadKind::Thermostat(k) => Some(k),
            LoadKind::Shiftable => None,
        }
    }
}

impl fmt::Display for LoadClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftablePlanTerm {
    pub max_delay_minutes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Cdp,
    Pdp,
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanMode::Cdp => f.write_str("CDP"),
            PlanMode::Pdp => f.write_str("PDP"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DeviationRule {
    /// Constant cap on the deviation, clipped by the reference temperature.
    Cdp { max_deviation_f: f64 },
    /// Deviation scaled by `beta` from the set point's distance to the
    /// reference temperature.
    Pdp { beta: f64 },
}

impl DeviationRule {
    pub fn mode(&self) -> PlanMode {
        match self {
            DeviationRule::Cdp { .. } => PlanMode::Cdp,
            DeviationRule::Pdp { .. } => PlanMode::Pdp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermostatPlanTerm {
    pub max_duration_minutes: u32,
    pub reference_temp_f: f64,
    pub rule: DeviationRule,
}

impl ThermostatPlanTerm {
    pub fn cdp(max_duration_minutes: u32, max_deviation_f: f64, reference_temp_f: f64) -> Self {
        Self {
            max_duration_minutes,
            reference_temp_f,
            rule: DeviationRule::Cdp { max_deviation_f },
        }
    }

    pub fn pdp(max_duration_minutes: u32, beta: f64, reference_temp_f: f64) -> Self {
        Self {
            max_duration_minutes,
            reference_temp_f,
            rule: DeviationRule::Pdp { beta },
        }
    }

    /// Inconvenience severity: the largest deviation from `set_point_f` the
    /// customer agrees to under this term. Always nonnegative.
    pub fn severity(&self, set_point_f: f64, kind: ThermalKind) -> f64 {
        // Room the reference leaves in the direction the device drifts when
        // throttled: upwards for cooling, downwards for heating.
        let headroom = match kind {
            ThermalKind::Cooling => self.reference_temp_f - set_point_f,
            ThermalKind::Heating => set_point_f - self.reference_temp_f,
        };
        match self.rule {
            DeviationRule::Cdp { max_deviation_f } => headroom.min(max_deviation_f).max(0.0),
            DeviationRule::Pdp { beta } => beta * headroom.max(0.0),
        }
    }

    /// A load is eligible for control only when its severity is positive.
    pub fn is_eligible(&self, set_point_f: f64, kind: ThermalKind) -> bool {
        self.severity(set_point_f, kind) > 0.0
    }

    fn check(&self, class: &str) -> Result<()> {
        if !self.reference_temp_f.is_finite() {
            return Err(Error::config(
                format!("plan.terms.{class}.reference_temp_f"),
                "must be finite",
            ));
        }
        match self.rule {
            DeviationRule::Cdp { max_deviation_f } => {
                if !(max_deviation_f.is_finite() && max_deviation_f >= 0.0) {
                    return Err(Error::config(
                        format!("plan.terms.{class}.max_deviation_f"),
                        format!("must be a nonnegative number, got {max_deviation_f}"),
                    ));
                }
            }
            DeviationRule::Pdp { beta } => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(Error::config(
                        format!("plan.terms.{class}.beta"),
                        format!("must satisfy 0 < beta <= 1, got {beta}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanTerm {
    Shiftable(ShiftablePlanTerm),
    Thermostat(ThermostatPlanTerm),
}

/// A validated engagement plan keyed by class name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementPlan {
    mode: Option<PlanMode>,
    terms: BTreeMap<String, (LoadClassId, PlanTerm)>,
}

impl EngagementPlan {
    /// Builds a plan. Rejects terms whose type disagrees with the class kind,
    /// duplicate classes, out-of-range parameters and mixed CDP/PDP terms.
    pub fn new(terms: impl IntoIterator<Item = (LoadClassId, PlanTerm)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut mode: Option<PlanMode> = None;
        for (class, term) in terms {
            match (&class.kind, &term) {
                (LoadKind::Shiftable, PlanTerm::Shiftable(_)) => {}
                (LoadKind::Thermostat(_), PlanTerm::Thermostat(t)) => {
                    t.check(&class.name)?;
                    let m = t.rule.mode();
                    match mode {
                        None => mode = Some(m),
                        Some(existing) if existing != m => {
                            return Err(Error::config(
                                format!("plan.terms.{}", class.name),
                                format!("mixed plan modes: {existing} and {m} in one plan"),
                            ));
                        }
                        Some(_) => {}
                    }
                }
                _ => {
                    return Err(Error::config(
                        format!("plan.terms.{}", class.name),
                        format!("term type does not match {} class", class.kind),
                    ));
                }
            }
            if map.contains_key(&class.name) {
                return Err(Error::config(
                    format!("plan.terms.{}", class.name),
                    "class listed more than once",
                ));
            }
            map.insert(class.name.clone(), (class, term));
        }
        Ok(Self { mode, terms: map })
    }

    /// `None` for plans without thermostat terms.
    pub fn mode(&self) -> Option<PlanMode> {
        self.mode
    }

    pub fn term(&self, class: &str) -> Option<&PlanTerm> {
        self.terms.get(class).map(|(_, t)| t)
    }

    pub fn class(&self, class: &str) -> Option<&LoadClassId> {
        self.terms.get(class).map(|(c, _)| c)
    }

    pub fn shiftable_term(&self, class: &str) -> Option<&ShiftablePlanTerm> {
        match self.term(class) {
            Some(PlanTerm::Shiftable(t)) => Some(t),
            _ => None,
        }
    }

    pub fn thermostat_term(&self, class: &str) -> Option<&ThermostatPlanTerm> {
        match self.term(class) {
            Some(PlanTerm::Thermostat(t)) => Some(t),
            _ => None,
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = &LoadClassId> {
        self.terms.values().map(|(c, _)| c)
    }

    /// Every budget must be a whole number of slots on `grid`.
    pub fn check_grid(&self, grid: &TimeGrid) -> Vec<Error> {
        let mut out = Vec::new();
        for (name, (_, term)) in &self.terms {
            let (field, minutes) = match term {
                PlanTerm::Shiftable(t) => ("max_delay_minutes", t.max_delay_minutes),
                PlanTerm::Thermostat(t) => ("max_duration_minutes", t.max_duration_minutes),
            };
            if grid.slots_for_minutes(minutes).is_none() {
                out.push(Error::config(
                    format!("plan.terms.{name}.{field}"),
                    format!(
                        "{minutes} min is not a multiple of the {} min slot length",
                        grid.dt_minutes()
                    ),
                ));
            }
        }
        out
    }
}
