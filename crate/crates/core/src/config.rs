//! TOML scenario files.
//!
//! A scenario names a time grid and seed, a community (either a generator
//! spec under `[community]` or explicit `[[customers]]`), one or more
//! `[[plans]]`, run options and an optional `[sweep]`. See
//! `docs/scenario.md` for the full schema.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::community::{
    build_thermostat, generate_community, Community, CommunityConfig, Customer, DemandWindows, ShiftableLoad,
    ThermalModelSpec,
};
use crate::coordinator::{CustomerOrder, EvaluationOptions, PhaseOrder};
use crate::curve::LoadCurve;
use crate::error::{Error, Result};
use crate::grid::{LoadProfile, TimeGrid};
use crate::plan::{
    EngagementPlan, LoadClassId, LoadKind, PlanMode, PlanTerm, ShiftablePlanTerm, ThermalKind, ThermostatPlanTerm,
};

fn fahrenheit() -> String {
    "F".into()
}

fn default_slots() -> usize {
    288
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Only `"F"` is accepted; every temperature in the file is Fahrenheit.
    #[serde(default = "fahrenheit")]
    pub temperature_unit: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_slots")]
    pub slots: usize,
    /// Optional 288-row load-shape CSV, relative to the scenario file.
    #[serde(default)]
    pub curve: Option<PathBuf>,
    #[serde(default)]
    pub community: Option<CommunityConfig>,
    #[serde(default)]
    pub customers: Vec<CustomerSpec>,
    #[serde(default)]
    pub plans: Vec<PlanSpec>,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory of the scenario file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseLoadSpec {
    Constant(f64),
    Profile(Vec<f64>),
}

impl Default for BaseLoadSpec {
    fn default() -> Self {
        BaseLoadSpec::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomerSpec {
    /// Defaults to the customer's position in the file.
    #[serde(default)]
    pub id: Option<usize>,
    #[serde(default)]
    pub base_load_kw: BaseLoadSpec,
    #[serde(default)]
    pub shiftable: Vec<ShiftableDeviceSpec>,
    #[serde(default)]
    pub thermostat: Vec<ThermostatDeviceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftableDeviceSpec {
    pub class: String,
    pub rated_kw: f64,
    pub duration_minutes: u32,
    pub preferred_start_minutes: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermostatDeviceSpec {
    pub class: String,
    pub rated_kw: f64,
    pub states: usize,
    pub set_point_f: f64,
    /// Half-open `[start, end)` demand windows in minutes after midnight.
    #[serde(default)]
    pub windows_minutes: Vec<[u32; 2]>,
    pub thermal: ThermalModelSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Shiftable,
    Cooling,
    Heating,
}

impl From<TermKind> for LoadKind {
    fn from(k: TermKind) -> Self {
        match k {
            TermKind::Shiftable => LoadKind::Shiftable,
            TermKind::Cooling => LoadKind::Thermostat(ThermalKind::Cooling),
            TermKind::Heating => LoadKind::Thermostat(ThermalKind::Heating),
        }
    }
}

/// One class's terms. Shiftable classes take `max_delay_minutes`;
/// thermostat classes take a duration, a reference temperature and either
/// `max_deviation_f` (CDP) or `beta` (PDP).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Needed only for classes absent from the community.
    #[serde(default)]
    pub kind: Option<TermKind>,
    #[serde(default)]
    pub max_delay_minutes: Option<u32>,
    #[serde(default)]
    pub max_duration_minutes: Option<u32>,
    #[serde(default)]
    pub reference_temp_f: Option<f64>,
    #[serde(default)]
    pub max_deviation_f: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSpec {
    pub name: String,
    pub mode: PlanMode,
    #[serde(default)]
    pub terms: BTreeMap<String, TermSpec>,
}

impl PlanSpec {
    /// Builds the plan, resolving class kinds from `classes` when the term
    /// does not state one. `path` prefixes error field paths.
    pub fn build(&self, classes: &BTreeMap<String, LoadKind>, path: &str) -> Result<EngagementPlan> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (name, t) in &self.terms {
            let p = format!("{path}.terms.{name}");
            let known = classes.get(name).copied();
            let kind = match (t.kind.map(LoadKind::from), known) {
                (Some(k), Some(c)) if k != c => {
                    return Err(Error::config(
                        format!("{p}.kind"),
                        format!("declared {k}, community has {c}"),
                    ));
                }
                (Some(k), _) | (None, Some(k)) => k,
                (None, None) if t.max_delay_minutes.is_some() => LoadKind::Shiftable,
                (None, None) => {
                    return Err(Error::config(
                        format!("{p}.kind"),
                        "class is not in the community; state kind = \"cooling\" or \"heating\"",
                    ));
                }
            };
            let term = match kind {
                LoadKind::Shiftable => {
                    for (field, set) in [
                        ("max_duration_minutes", t.max_duration_minutes.is_some()),
                        ("reference_temp_f", t.reference_temp_f.is_some()),
                        ("max_deviation_f", t.max_deviation_f.is_some()),
                        ("beta", t.beta.is_some()),
                    ] {
                        if set {
                            return Err(Error::config(format!("{p}.{field}"), "not a shiftable term"));
                        }
                    }
                    let max_delay_minutes = t
                        .max_delay_minutes
                        .ok_or_else(|| Error::config(format!("{p}.max_delay_minutes"), "missing"))?;
                    PlanTerm::Shiftable(ShiftablePlanTerm { max_delay_minutes })
                }
                LoadKind::Thermostat(_) => {
                    if t.max_delay_minutes.is_some() {
                        return Err(Error::config(format!("{p}.max_delay_minutes"), "not a thermostat term"));
                    }
                    let dur = t
                        .max_duration_minutes
                        .ok_or_else(|| Error::config(format!("{p}.max_duration_minutes"), "missing"))?;
                    let reference = t
                        .reference_temp_f
                        .ok_or_else(|| Error::config(format!("{p}.reference_temp_f"), "missing"))?;
                    if !reference.is_finite() {
                        return Err(Error::config(format!("{p}.reference_temp_f"), "must be finite"));
                    }
                    let term = match self.mode {
                        PlanMode::Cdp => {
                            if t.beta.is_some() {
                                return Err(Error::config(format!("{p}.beta"), "beta belongs to PDP plans"));
                            }
                            let dev = t
                                .max_deviation_f
                                .ok_or_else(|| Error::config(format!("{p}.max_deviation_f"), "missing"))?;
                            ThermostatPlanTerm::cdp(dur, dev, reference)
                        }
                        PlanMode::Pdp => {
                            if t.max_deviation_f.is_some() {
                                return Err(Error::config(
                                    format!("{p}.max_deviation_f"),
                                    "max_deviation_f belongs to CDP plans",
                                ));
                            }
                            let beta = t.beta.ok_or_else(|| Error::config(format!("{p}.beta"), "missing"))?;
                            ThermostatPlanTerm::pdp(dur, beta, reference)
                        }
                    };
                    PlanTerm::Thermostat(term)
                }
            };
            terms.push((LoadClassId::new(name.clone(), kind), term));
        }
        EngagementPlan::new(terms).map_err(|e| rebase(e, path))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub customer_order: CustomerOrder,
    #[serde(default)]
    pub phase_order: PhaseOrder,
    /// Plans evaluated by `run`; all plans when absent.
    #[serde(default)]
    pub plans: Option<Vec<String>>,
}

impl RunSpec {
    pub fn options(&self) -> EvaluationOptions {
        EvaluationOptions {
            customer_order: self.customer_order.clone(),
            phase_order: self.phase_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Scalar(f64),
    Tuple(Vec<f64>),
}

/// One sweep dimension. `field` (or several `fields` moved together) is
/// `"states"` or `"<class>.<term field>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub fields: Vec<String>,
    pub values: Vec<AxisValue>,
}

impl AxisSpec {
    pub fn all_fields(&self) -> Vec<&str> {
        self.field.iter().chain(&self.fields).map(String::as_str).collect()
    }

    /// Values of point `i`, one per field.
    pub fn point(&self, i: usize) -> Vec<f64> {
        match &self.values[i] {
            AxisValue::Scalar(v) => vec![*v; self.all_fields().len()],
            AxisValue::Tuple(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Name of the plan the axes modify.
    pub plan: String,
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory, relative to the scenario file. `--out-dir` wins.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// One resolved sweep override.
#[derive(Debug, Clone, PartialEq)]
pub enum Override {
    States(usize),
    Term {
        class: String,
        field: TermField,
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermField {
    MaxDelayMinutes,
    MaxDurationMinutes,
    ReferenceTempF,
    MaxDeviationF,
    Beta,
}

impl TermField {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "max_delay_minutes" => TermField::MaxDelayMinutes,
            "max_duration_minutes" => TermField::MaxDurationMinutes,
            "reference_temp_f" => TermField::ReferenceTempF,
            "max_deviation_f" => TermField::MaxDeviationF,
            "beta" => TermField::Beta,
            _ => return None,
        })
    }

    fn is_minutes(self) -> bool {
        matches!(self, TermField::MaxDelayMinutes | TermField::MaxDurationMinutes)
    }
}

/// Parses `"states"` or `"<class>.<field>"` with value `v`.
pub fn parse_override(field: &str, v: f64) -> std::result::Result<Override, String> {
    if field == "states" {
        if v.fract() != 0.0 || !(2.0..=255.0).contains(&v) {
            return Err(format!("states must be a whole number in 2..=255, got {v}"));
        }
        return Ok(Override::States(v as usize));
    }
    let (class, name) = field
        .split_once('.')
        .ok_or_else(|| format!("unknown field {field:?}; use \"states\" or \"<class>.<term field>\""))?;
    let f = TermField::parse(name).ok_or_else(|| format!("unknown term field {name:?}"))?;
    if f.is_minutes() && (v.fract() != 0.0 || v < 0.0 || v > f64::from(u32::MAX)) {
        return Err(format!("{name} must be a whole number of minutes, got {v}"));
    }
    Ok(Override::Term {
        class: class.to_string(),
        field: f,
        value: v,
    })
}

impl Override {
    /// Applies a term override to `plan`; `States` is left to the caller.
    pub fn apply_to_plan(&self, plan: &mut PlanSpec) {
        if let Override::Term { class, field, value } = self {
            let t = plan.terms.entry(class.clone()).or_default();
            match field {
                TermField::MaxDelayMinutes => t.max_delay_minutes = Some(*value as u32),
                TermField::MaxDurationMinutes => t.max_duration_minutes = Some(*value as u32),
                TermField::ReferenceTempF => t.reference_temp_f = Some(*value),
                TermField::MaxDeviationF => t.max_deviation_f = Some(*value),
                TermField::Beta => t.beta = Some(*value),
            }
        }
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        let mut cfg =
            Self::from_toml_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        if self.slots == 0 || 1440 % self.slots != 0 {
            return Err(Error::config("slots", "must divide the 1440 minutes of a day"));
        }
        TimeGrid::new(self.slots)
    }

    pub fn load_curve(&self) -> Result<LoadCurve> {
        match &self.curve {
            Some(p) => {
                LoadCurve::from_csv_path(&self.base_dir.join(p)).map_err(|e| Error::config("curve", e.to_string()))
            }
            None => Ok(LoadCurve::bundled()),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir
            .join(self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out")))
    }

    /// Builds the community: generated from `[community]`, or the explicit
    /// `[[customers]]`.
    pub fn build_community(&self) -> Result<Community> {
        let grid = self.grid()?;
        match &self.community {
            Some(spec) => {
                if !self.customers.is_empty() {
                    return Err(Error::config(
                        "customers",
                        "give either [community] or [[customers]], not both",
                    ));
                }
                generate_community(spec, &self.load_curve()?, grid, self.seed)
            }
            None => {
                let customers = self
                    .customers
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(i, &grid))
                    .collect::<Result<Vec<_>>>()?;
                let mut ids = BTreeSet::new();
                for c in &customers {
                    if !ids.insert(c.id) {
                        return Err(Error::config("customers", format!("duplicate customer id {}", c.id)));
                    }
                }
                Community::new(grid, customers)
            }
        }
    }

    pub fn plan_spec(&self, name: &str) -> Option<(usize, &PlanSpec)> {
        self.plans.iter().enumerate().find(|(_, p)| p.name == name)
    }

    /// Plans selected by `[run].plans`, in file order when unspecified.
    pub fn run_plans(&self) -> Result<Vec<(usize, &PlanSpec)>> {
        match &self.run.plans {
            None => Ok(self.plans.iter().enumerate().collect()),
            Some(names) => names
                .iter()
                .map(|n| {
                    self.plan_spec(n)
                        .ok_or_else(|| Error::config("run.plans", format!("no plan named {n:?}")))
                })
                .collect(),
        }
    }

    /// Every problem found in the scenario, each naming its field.
    pub fn validate(&self) -> Vec<Error> {
        let mut errs = Vec::new();
        if self.temperature_unit != "F" {
            errs.push(Error::config(
                "temperature_unit",
                format!("only \"F\" is supported, got {:?}", self.temperature_unit),
            ));
        }
        let grid = match self.grid() {
            Ok(g) => g,
            Err(e) => {
                errs.push(e);
                return errs;
            }
        };
        if let Some(spec) = &self.community {
            errs.extend(spec.validate(&grid));
            if let Err(e) = self.load_curve() {
                errs.push(e);
            }
        }
        let mut names = BTreeSet::new();
        for (i, p) in self.plans.iter().enumerate() {
            if !names.insert(p.name.as_str()) {
                errs.push(Error::config(
                    format!("plans[{i}].name"),
                    format!("duplicate plan name {:?}", p.name),
                ));
            }
        }
        if let Err(e) = self.run_plans() {
            errs.push(e);
        }
        if let Err(e) = self.run.customer_order.check() {
            errs.push(e);
        }
        let sweep_points = match &self.sweep {
            Some(s) => match self.sweep_overrides(s) {
                Ok(points) => points,
                Err(mut e) => {
                    errs.append(&mut e);
                    Vec::new()
                }
            },
            None => Vec::new(),
        };
        if !errs.is_empty() {
            return errs;
        }

        let community = match self.build_community() {
            Ok(c) => c,
            Err(e) => {
                errs.push(e);
                return errs;
            }
        };
        if let Err(e) = self.run.customer_order.resolve(&community.customers) {
            errs.push(e);
        }
        let classes = community.classes();
        for (i, p) in self.plans.iter().enumerate() {
            let path = format!("plans[{i}]");
            errs.extend(check_plan(&community, &classes, p, &path));
        }
        if let Some(s) = &self.sweep {
            if let Some((i, base)) = self.plan_spec(&s.plan) {
                let mut seen = BTreeSet::new();
                for point in &sweep_points {
                    let mut p = base.clone();
                    for o in point {
                        o.apply_to_plan(&mut p);
                    }
                    for e in check_plan(&community, &classes, &p, &format!("sweep (plan plans[{i}])")) {
                        let msg = e.to_string();
                        if seen.insert(msg) {
                            errs.push(e);
                        }
                    }
                }
            }
        }
        errs
    }

    /// Resolved overrides for every sweep point, in row-major order (last
    /// axis fastest).
    pub fn sweep_overrides(&self, sweep: &SweepSpec) -> std::result::Result<Vec<Vec<Override>>, Vec<Error>> {
        let mut errs = Vec::new();
        if self.plan_spec(&sweep.plan).is_none() {
            errs.push(Error::config("sweep.plan", format!("no plan named {:?}", sweep.plan)));
        }
        if sweep.axes.is_empty() {
            errs.push(Error::config("sweep.axes", "at least one axis is required"));
        }
        let mut axes = Vec::with_capacity(sweep.axes.len());
        for (a, axis) in sweep.axes.iter().enumerate() {
            let path = format!("sweep.axes[{a}]");
            let fields = axis.all_fields();
            if fields.is_empty() {
                errs.push(Error::config(format!("{path}.field"), "missing"));
                continue;
            }
            if axis.values.is_empty() {
                errs.push(Error::config(format!("{path}.values"), "must not be empty"));
                continue;
            }
            let mut points = Vec::with_capacity(axis.values.len());
            for v in 0..axis.values.len() {
                let vals = axis.point(v);
                if vals.len() != fields.len() {
                    errs.push(Error::config(
                        format!("{path}.values[{v}]"),
                        format!("{} values for {} fields", vals.len(), fields.len()),
                    ));
                    continue;
                }
                let mut point = Vec::with_capacity(fields.len());
                for (f, x) in fields.iter().zip(vals) {
                    match parse_override(f, x) {
                        Ok(o) => point.push(o),
                        Err(m) => errs.push(Error::config(format!("{path}.values[{v}]"), m)),
                    }
                }
                points.push(point);
            }
            axes.push(points);
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let mut out: Vec<Vec<Override>> = vec![Vec::new()];
        for axis in axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |p| {
                        let mut v = prefix.clone();
                        v.extend(p.iter().cloned());
                        v
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// Moves a `plan.`-rooted field path under `path`.
fn rebase(e: Error, path: &str) -> Error {
    match e {
        Error::Config { path: p, message } => match p.strip_prefix("plan") {
            Some(rest) => Error::config(format!("{path}{rest}"), message),
            None => Error::config(p, message),
        },
        other => other,
    }
}

/// Plan build errors, grid divisibility and the midnight rule for one plan.
fn check_plan(community: &Community, classes: &BTreeMap<String, LoadKind>, spec: &PlanSpec, path: &str) -> Vec<Error> {
    let plan = match spec.build(classes, path) {
        Ok(p) => p,
        Err(e) => return vec![e],
    };
    let mut errs: Vec<Error> = plan
        .check_grid(&community.grid)
        .into_iter()
        .map(|e| rebase(e, path))
        .collect();
    if !errs.is_empty() {
        return errs;
    }
    errs.extend(check_spill_over(community, &plan, path));
    errs
}

/// Every shiftable run delayed by its full budget must still end by
/// midnight.
pub fn check_spill_over(community: &Community, plan: &EngagementPlan, path: &str) -> Vec<Error> {
    let slots = community.grid.len();
    let mut reported = BTreeSet::new();
    let mut errs = Vec::new();
    for c in &community.customers {
        for s in &c.shiftables {
            let Some(term) = plan.shiftable_term(&s.class.name) else {
                continue;
            };
            let Some(delay) = community.grid.slots_for_minutes(term.max_delay_minutes) else {
                continue;
            };
            let end = s.preferred_start_slot + s.duration_slots + delay;
            if end > slots && reported.insert(s.class.name.clone()) {
                errs.push(Error::config(
                    format!("{path}.terms.{}.max_delay_minutes", s.class.name),
                    format!(
                        "customer {}: preferred start {} + {} run slots + {delay} delay slots = {end} > {slots}; a delayed run would spill past midnight",
                        c.id, s.preferred_start_slot, s.duration_slots
                    ),
                ));
            }
        }
    }
    errs
}

impl CustomerSpec {
    pub fn build(&self, index: usize, grid: &TimeGrid) -> Result<Customer> {
        let path = format!("customers[{index}]");
        let slots = grid.len();
        let base = match &self.base_load_kw {
            BaseLoadSpec::Constant(v) => LoadProfile::new(vec![*v; slots]),
            BaseLoadSpec::Profile(v) => {
                if v.len() != slots {
                    return Err(Error::config(
                        format!("{path}.base_load_kw"),
                        format!("{} values for {slots} slots", v.len()),
                    ));
                }
                LoadProfile::new(v.clone())
            }
        }
        .map_err(|e| Error::config(format!("{path}.base_load_kw"), e.to_string()))?;
        let to_slots = |field: String, minutes: u32| {
            grid.slots_for_minutes(minutes).ok_or_else(|| {
                Error::config(
                    field,
                    format!(
                        "{minutes} min is not a multiple of the {} min slot length",
                        grid.dt_minutes()
                    ),
                )
            })
        };
        let mut shiftables = Vec::with_capacity(self.shiftable.len());
        for (i, s) in self.shiftable.iter().enumerate() {
            let p = format!("{path}.shiftable[{i}]");
            if !(s.rated_kw.is_finite() && s.rated_kw > 0.0) {
                return Err(Error::config(format!("{p}.rated_kw"), "must be positive"));
            }
            let duration_slots = to_slots(format!("{p}.duration_minutes"), s.duration_minutes)?;
            let start = to_slots(format!("{p}.preferred_start_minutes"), s.preferred_start_minutes)?;
            if duration_slots == 0 || start + duration_slots > slots {
                return Err(Error::config(
                    format!("{p}.duration_minutes"),
                    "run must be nonempty and end by midnight",
                ));
            }
            shiftables.push(ShiftableLoad {
                class: LoadClassId::shiftable(s.class.clone()),
                rated_kw: s.rated_kw,
                duration_slots,
                preferred_start_slot: start,
            });
        }
        let mut thermostats = Vec::with_capacity(self.thermostat.len());
        for (i, th) in self.thermostat.iter().enumerate() {
            let p = format!("{path}.thermostat[{i}]");
            if !(th.rated_kw.is_finite() && th.rated_kw > 0.0) {
                return Err(Error::config(format!("{p}.rated_kw"), "must be positive"));
            }
            if !th.set_point_f.is_finite() {
                return Err(Error::config(format!("{p}.set_point_f"), "must be finite"));
            }
            let mut intervals = Vec::with_capacity(th.windows_minutes.len());
            for (w, [a, b]) in th.windows_minutes.iter().enumerate() {
                let s = to_slots(format!("{p}.windows_minutes[{w}]"), *a)?;
                let e = to_slots(format!("{p}.windows_minutes[{w}]"), *b)?;
                if e <= s {
                    return Err(Error::config(
                        format!("{p}.windows_minutes[{w}]"),
                        "end must follow start",
                    ));
                }
                intervals.push((s, e));
            }
            let windows = DemandWindows::new(intervals, slots).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(format!("{p}.windows_minutes"), message),
                other => other,
            })?;
            let load = build_thermostat(
                &th.class,
                th.rated_kw,
                th.states,
                th.set_point_f,
                windows,
                &th.thermal,
                grid,
            )
            .map_err(|e| Error::config(format!("{p}.thermal"), e.to_string()))?;
            thermostats.push(load);
        }
        let customer = Customer {
            id: self.id.unwrap_or(index),
            base_load: base,
            shiftables,
            thermostats,
        };
        let mut seen = BTreeMap::new();
        for class in customer
            .shiftables
            .iter()
            .map(|s| &s.class)
            .chain(customer.thermostats.iter().map(|t| &t.class))
        {
            if let Some(k) = seen.insert(class.name.clone(), class.kind) {
                if k != class.kind {
                    return Err(Error::config(
                        path,
                        format!("class {} used for both {k} and {} devices", class.name, class.kind),
                    ));
                }
            }
        }
        Ok(customer)
    }
}

impl CustomerOrder {
    /// Checks that need no community.
    pub fn check(&self) -> Result<()> {
        if let CustomerOrder::Explicit(ids) = self {
            let unique: BTreeSet<_> = ids.iter().collect();
            if unique.len() != ids.len() {
                return Err(Error::config("run.customer_order", "customer ids repeat"));
            }
        }
        Ok(())
    }
}
