//! Operator/home-controller protocol and plan evaluation.
//!
//! The operator walks the customers in a fixed order, once per load
//! category. Each home controller receives the current aggregated profile,
//! reschedules its own devices locally, and returns the updated aggregate.
//! A [`ProfileMessage`] is the only thing exchanged; set points, device
//! records and schedules stay inside the home.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::community::{aggregate, Community, Customer};
use crate::constraints::{check_shift, check_thermostat};
use crate::error::{Error, Result};
use crate::grid::{LoadProfile, TimeGrid};
use crate::plan::{EngagementPlan, LoadKind, PlanTerm, ThermalKind};
use crate::shiftable;
use crate::thermostat::{self, DeviceBudget, ThermostatResult};
use crate::units::POWER_TOL_KW;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Shiftable,
    Thermostat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseOrder {
    #[default]
    ShiftableFirst,
    ThermostatFirst,
}

impl PhaseOrder {
    pub fn phases(self) -> [Phase; 2] {
        match self {
            PhaseOrder::ShiftableFirst => [Phase::Shiftable, Phase::Thermostat],
            PhaseOrder::ThermostatFirst => [Phase::Thermostat, Phase::Shiftable],
        }
    }
}

/// Order in which the operator visits customers.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomerOrder {
    #[default]
    Generation,
    Reverse,
    /// Customer ids in visiting order; must be a permutation of all ids.
    Explicit(Vec<usize>),
    Shuffle {
        seed: u64,
    },
}

impl CustomerOrder {
    /// Indexes into `customers` in visiting order.
    pub fn resolve(&self, customers: &[Customer]) -> Result<Vec<usize>> {
        let n = customers.len();
        let mut idx: Vec<usize> = (0..n).collect();
        match self {
            CustomerOrder::Generation => {}
            CustomerOrder::Reverse => idx.reverse(),
            CustomerOrder::Shuffle { seed } => idx.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed)),
            CustomerOrder::Explicit(ids) => {
                let by_id: BTreeMap<usize, usize> = customers.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
                let mut seen = vec![false; n];
                idx.clear();
                for id in ids {
                    let i = *by_id
                        .get(id)
                        .ok_or_else(|| Error::config("run.customer_order", format!("unknown customer id {id}")))?;
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(Error::config(
                            "run.customer_order",
                            format!("customer id {id} listed twice"),
                        ));
                    }
                    idx.push(i);
                }
                if idx.len() != n {
                    return Err(Error::config(
                        "run.customer_order",
                        format!("lists {} of {n} customers", idx.len()),
                    ));
                }
            }
        }
        Ok(idx)
    }
}

/// The only payload crossing the operator/home boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMessage {
    pub profile: LoadProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToHome,
    ToGrid,
}

/// One protocol message, as logged by the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phase: Phase,
    pub customer_id: usize,
    pub direction: Direction,
    pub profile_digest: String,
    pub peak: f64,
}

/// A home controller answers aggregate profiles with updated aggregates.
pub trait HomeController {
    fn customer_id(&self) -> usize;
    fn handle(&mut self, phase: Phase, message: &ProfileMessage) -> Result<ProfileMessage>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRecord {
    pub class: String,
    pub rated_kw: f64,
    pub duration_slots: usize,
    pub preferred_start_slot: usize,
    pub start_slot: usize,
    pub delay_slots: usize,
    pub max_delay_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatRecord {
    pub class: String,
    pub kind: ThermalKind,
    pub rated_kw: f64,
    pub num_states: usize,
    pub set_point_f: f64,
    pub severity_f: f64,
    pub eligible: bool,
    pub demanded_slots: usize,
    pub duration_budget_slots: usize,
    pub denied_slots: usize,
    pub max_deviation_f: f64,
    pub mean_deviation_f: f64,
    /// `(slot, state)` for every demanded slot below full power.
    pub throttled: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerRecord {
    pub id: usize,
    pub shiftables: Vec<ShiftRecord>,
    pub thermostats: Vec<ThermostatRecord>,
}

/// In-process home controller for one customer.
pub struct Home<'a> {
    customer: &'a Customer,
    grid: TimeGrid,
    max_delays: Vec<usize>,
    budgets: Vec<DeviceBudget>,
    starts: Vec<usize>,
    shift_total: LoadProfile,
    thermo_results: Option<Vec<ThermostatResult>>,
    thermo_total: LoadProfile,
}

impl<'a> Home<'a> {
    /// `customer` must only own devices with plan terms (see
    /// [`Community::fold_unplanned`]).
    pub fn new(customer: &'a Customer, plan: &EngagementPlan, grid: TimeGrid) -> Result<Self> {
        let slots = grid.len();
        let mut max_delays = Vec::with_capacity(customer.shiftables.len());
        let mut shift_total = LoadProfile::zeros(slots);
        for s in &customer.shiftables {
            let term = plan.shiftable_term(&s.class.name).ok_or_else(|| {
                Error::config(
                    format!("plan.terms.{}", s.class.name),
                    "no shiftable term for this class",
                )
            })?;
            let max = grid.slots_for_minutes(term.max_delay_minutes).ok_or_else(|| {
                Error::config(
                    format!("plan.terms.{}.max_delay_minutes", s.class.name),
                    "not a whole number of slots",
                )
            })?;
            if s.preferred_start_slot + s.duration_slots + max > slots {
                return Err(Error::config(
                    format!("plan.terms.{}.max_delay_minutes", s.class.name),
                    format!(
                        "customer {}: start {} + {} run slots + {max} delay slots exceeds {slots} slots; delayed runs may not spill past midnight",
                        customer.id, s.preferred_start_slot, s.duration_slots
                    ),
                ));
            }
            max_delays.push(max);
            shift_total.add_assign(&s.demanded_profile(slots));
        }
        let mut budgets = Vec::with_capacity(customer.thermostats.len());
        let mut thermo_total = LoadProfile::zeros(slots);
        for th in &customer.thermostats {
            let term = plan.thermostat_term(&th.class.name).ok_or_else(|| {
                Error::config(
                    format!("plan.terms.{}", th.class.name),
                    "no thermostat term for this class",
                )
            })?;
            if plan.class(&th.class.name).map(|c| c.kind) != Some(th.class.kind) {
                return Err(Error::config(
                    format!("plan.terms.{}", th.class.name),
                    format!("plan declares a different kind than the {} device", th.class.kind),
                ));
            }
            let duration_slots = grid.slots_for_minutes(term.max_duration_minutes).ok_or_else(|| {
                Error::config(
                    format!("plan.terms.{}.max_duration_minutes", th.class.name),
                    "not a whole number of slots",
                )
            })?;
            budgets.push(DeviceBudget {
                severity: term.severity(th.set_point_f, th.thermal_kind()),
                duration_slots,
            });
            thermo_total.add_assign(&th.demanded_profile());
        }
        Ok(Self {
            customer,
            grid,
            max_delays,
            budgets,
            starts: customer.shiftables.iter().map(|s| s.preferred_start_slot).collect(),
            shift_total,
            thermo_results: None,
            thermo_total,
        })
    }

    fn schedule_shiftables(&mut self, aggregate: &LoadProfile) -> Result<LoadProfile> {
        let mut background = aggregate.clone();
        background.sub_assign(&self.shift_total);
        let r = shiftable::schedule_customer(
            self.customer.id,
            &background,
            &self.customer.shiftables,
            &self.max_delays,
        )?;
        let slots = self.grid.len();
        let mut new_total = LoadProfile::zeros(slots);
        for (i, s) in self.customer.shiftables.iter().enumerate() {
            self.starts[i] = s.preferred_start_slot + r.delays[i];
            new_total.add_assign(&s.profile_at(self.starts[i], slots));
        }
        let mut out = aggregate.clone();
        out.apply_change(&self.shift_total, &new_total);
        self.shift_total = new_total;
        Ok(out)
    }

    fn schedule_thermostats(&mut self, aggregate: &LoadProfile) -> Result<LoadProfile> {
        let mut background = aggregate.clone();
        background.sub_assign(&self.thermo_total);
        let r = thermostat::schedule_customer(
            self.customer.id,
            &background,
            &self.customer.thermostats,
            &self.budgets,
            &self.grid,
        )?;
        let mut new_total = LoadProfile::zeros(self.grid.len());
        for d in &r.devices {
            new_total.add_assign(&d.profile);
        }
        let mut out = aggregate.clone();
        out.apply_change(&self.thermo_total, &new_total);
        self.thermo_total = new_total;
        self.thermo_results = Some(r.devices);
        Ok(out)
    }

    /// Verifies every engagement constraint on the home's final schedule.
    pub fn check_constraints(&self) -> Result<()> {
        let slots = self.grid.len();
        for (i, s) in self.customer.shiftables.iter().enumerate() {
            check_shift(self.customer.id, s, self.starts[i], self.max_delays[i], slots)?;
        }
        for (i, th) in self.customer.thermostats.iter().enumerate() {
            let states = match &self.thermo_results {
                Some(r) => r[i].states.clone(),
                None => crate::community::StateMatrix::full_power(&th.windows, th.num_states),
            };
            let b = self.budgets[i];
            check_thermostat(self.customer.id, th, &states, b.severity, b.duration_slots, &self.grid)?;
        }
        Ok(())
    }

    /// Local schedule record; never sent to the operator during the protocol.
    pub fn record(&self) -> CustomerRecord {
        let shiftables = self
            .customer
            .shiftables
            .iter()
            .enumerate()
            .map(|(i, s)| ShiftRecord {
                class: s.class.name.clone(),
                rated_kw: s.rated_kw,
                duration_slots: s.duration_slots,
                preferred_start_slot: s.preferred_start_slot,
                start_slot: self.starts[i],
                delay_slots: self.starts[i] - s.preferred_start_slot,
                max_delay_slots: self.max_delays[i],
            })
            .collect();
        let thermostats = self
            .customer
            .thermostats
            .iter()
            .enumerate()
            .map(|(i, th)| {
                let b = self.budgets[i];
                let demanded = th.windows.len();
                let (denied, max_dev, mean_dev, throttled) = match &self.thermo_results {
                    Some(r) => {
                        let d = &r[i];
                        let sum: f64 = th.windows.slots().map(|t| d.deviations[t]).sum();
                        let throttled = th
                            .windows
                            .slots()
                            .filter_map(|t| d.states.state(t).filter(|&k| k != th.num_states).map(|k| (t, k)))
                            .collect();
                        let mean = if demanded > 0 { sum / demanded as f64 } else { 0.0 };
                        (d.denied_slots, d.max_deviation(), mean, throttled)
                    }
                    None => (0, 0.0, 0.0, Vec::new()),
                };
                ThermostatRecord {
                    class: th.class.name.clone(),
                    kind: th.thermal_kind(),
                    rated_kw: th.rated_kw,
                    num_states: th.num_states,
                    set_point_f: th.set_point_f,
                    severity_f: b.severity,
                    eligible: b.severity > 0.0,
                    demanded_slots: demanded,
                    duration_budget_slots: b.duration_slots,
                    denied_slots: denied,
                    max_deviation_f: max_dev,
                    mean_deviation_f: mean_dev,
                    throttled,
                }
            })
            .collect();
        CustomerRecord {
            id: self.customer.id,
            shiftables,
            thermostats,
        }
    }
}

impl HomeController for Home<'_> {
    fn customer_id(&self) -> usize {
        self.customer.id
    }

    fn handle(&mut self, phase: Phase, message: &ProfileMessage) -> Result<ProfileMessage> {
        let profile = match phase {
            Phase::Shiftable => self.schedule_shiftables(&message.profile)?,
            Phase::Thermostat => self.schedule_thermostats(&message.profile)?,
        };
        Ok(ProfileMessage { profile })
    }
}

/// Sequential pass of one phase over the homes in `order`.
pub fn run_phase<H: HomeController>(
    phase: Phase,
    start: &LoadProfile,
    homes: &mut [H],
    order: &[usize],
    trace: &mut Vec<TraceEntry>,
) -> Result<LoadProfile> {
    let mut current = ProfileMessage { profile: start.clone() };
    for &i in order {
        let home = &mut homes[i];
        let id = home.customer_id();
        trace.push(TraceEntry {
            phase,
            customer_id: id,
            direction: Direction::ToHome,
            profile_digest: current.profile.digest(),
            peak: current.profile.peak(),
        });
        current = home.handle(phase, &current)?;
        trace.push(TraceEntry {
            phase,
            customer_id: id,
            direction: Direction::ToGrid,
            profile_digest: current.profile.digest(),
            peak: current.profile.peak(),
        });
    }
    Ok(current.profile)
}

pub fn run_phase_shiftable<H: HomeController>(
    x: &LoadProfile,
    homes: &mut [H],
    order: &[usize],
    trace: &mut Vec<TraceEntry>,
) -> Result<LoadProfile> {
    run_phase(Phase::Shiftable, x, homes, order, trace)
}

pub fn run_phase_thermostat<H: HomeController>(
    x: &LoadProfile,
    homes: &mut [H],
    order: &[usize],
    trace: &mut Vec<TraceEntry>,
) -> Result<LoadProfile> {
    run_phase(Phase::Thermostat, x, homes, order, trace)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    pub customer_order: CustomerOrder,
    pub phase_order: PhaseOrder,
}

/// Per thermostat class summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub kind: ThermalKind,
    pub devices: usize,
    /// Devices with positive severity.
    pub eligible: usize,
    /// Mean severity over eligible devices.
    pub mean_severity_f: f64,
    /// Mean over eligible devices of the largest realized deviation in the
    /// demanded slots.
    pub mean_realized_deviation_f: f64,
    /// Mean over eligible devices of the average deviation across demanded
    /// slots.
    pub mean_slot_deviation_f: f64,
    pub denied_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfiles {
    /// Demanded aggregate before any intervention.
    pub initial: LoadProfile,
    pub after_shiftable: LoadProfile,
    pub after_thermostat: LoadProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub slots: usize,
    pub dt_minutes: f64,
    pub homes: usize,
    pub phase_order: PhaseOrder,
    pub peak_before_kw: f64,
    pub peak_after_shiftable_kw: f64,
    pub peak_after_thermostat_kw: f64,
    pub final_peak_kw: f64,
    pub percent_peak_reduction: f64,
    pub energy_before_kwh: f64,
    pub energy_after_kwh: f64,
    pub classes: BTreeMap<String, ClassStats>,
    pub profiles: PhaseProfiles,
    pub customers: Vec<CustomerRecord>,
}

impl SimulationReport {
    pub fn final_profile(&self) -> &LoadProfile {
        match self.phase_order {
            PhaseOrder::ShiftableFirst => &self.profiles.after_thermostat,
            PhaseOrder::ThermostatFirst => &self.profiles.after_shiftable,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: SimulationReport,
    pub trace: Vec<TraceEntry>,
}

/// Checks that community and plan agree on class kinds.
pub fn check_consistency(community: &Community, plan: &EngagementPlan) -> Result<()> {
    let classes = community.classes();
    for class in plan.classes() {
        if let Some(kind) = classes.get(&class.name) {
            if *kind != class.kind {
                return Err(Error::config(
                    format!("plan.terms.{}", class.name),
                    format!("plan treats {} as {}, community has {}", class.name, class.kind, kind),
                ));
            }
        }
    }
    if let Some(e) = plan.check_grid(&community.grid).into_iter().next() {
        return Err(e);
    }
    Ok(())
}

/// Runs both phases for `plan` on `community` and checks every constraint
/// and report invariant on the result.
pub fn evaluate_plan(community: &Community, plan: &EngagementPlan, options: &EvaluationOptions) -> Result<Evaluation> {
    check_consistency(community, plan)?;
    let community = community.fold_unplanned(plan);
    let grid = community.grid;
    let x = aggregate(&community);
    let mut homes = community
        .customers
        .iter()
        .map(|c| Home::new(c, plan, grid))
        .collect::<Result<Vec<_>>>()?;
    let order = options.customer_order.resolve(&community.customers)?;

    let mut trace = Vec::with_capacity(4 * homes.len());
    let [first, second] = options.phase_order.phases();
    let mid = run_phase(first, &x, &mut homes, &order, &mut trace)?;
    let last = run_phase(second, &mid, &mut homes, &order, &mut trace)?;

    for h in &homes {
        h.check_constraints()?;
    }

    let peak_before = x.peak();
    let (after_shiftable, after_thermostat) = match options.phase_order {
        PhaseOrder::ShiftableFirst => (mid, last),
        PhaseOrder::ThermostatFirst => (last, mid),
    };
    let final_profile = match options.phase_order {
        PhaseOrder::ShiftableFirst => &after_thermostat,
        PhaseOrder::ThermostatFirst => &after_shiftable,
    };
    let mid_peak = match options.phase_order {
        PhaseOrder::ShiftableFirst => after_shiftable.peak(),
        PhaseOrder::ThermostatFirst => after_thermostat.peak(),
    };
    let final_peak = final_profile.peak();
    if mid_peak > peak_before + POWER_TOL_KW || final_peak > mid_peak + POWER_TOL_KW {
        return Err(Error::InvalidModel(format!(
            "peak increased across phases: {peak_before} -> {mid_peak} -> {final_peak}"
        )));
    }
    let energy_before = x.energy_kwh(&grid);
    let energy_shift = after_shiftable.energy_kwh(&grid);
    let energy_thermo = after_thermostat.energy_kwh(&grid);
    let energy_after = final_profile.energy_kwh(&grid);
    let tol = 1e-9 * energy_before.max(1.0);
    let shift_in = match options.phase_order {
        PhaseOrder::ShiftableFirst => energy_before,
        PhaseOrder::ThermostatFirst => energy_thermo,
    };
    if (energy_shift - shift_in).abs() > tol || energy_after > energy_before + tol {
        return Err(Error::InvalidModel(format!(
            "energy accounting broken: {energy_before} -> shift {energy_shift}, thermostat {energy_thermo}"
        )));
    }
    let percent = if peak_before > 0.0 {
        100.0 * (peak_before - final_peak) / peak_before
    } else {
        0.0
    };

    let customers: Vec<CustomerRecord> = homes.iter().map(Home::record).collect();
    let mut classes: BTreeMap<String, ClassStats> = BTreeMap::new();
    for class in plan.classes() {
        if let LoadKind::Thermostat(kind) = class.kind {
            if matches!(plan.term(&class.name), Some(PlanTerm::Thermostat(_))) {
                classes.insert(
                    class.name.clone(),
                    ClassStats {
                        kind,
                        devices: 0,
                        eligible: 0,
                        mean_severity_f: 0.0,
                        mean_realized_deviation_f: 0.0,
                        mean_slot_deviation_f: 0.0,
                        denied_slots: 0,
                    },
                );
            }
        }
    }
    for rec in customers.iter().flat_map(|c| &c.thermostats) {
        let s = classes.get_mut(&rec.class).expect("thermostats are planned");
        s.devices += 1;
        s.denied_slots += rec.denied_slots;
        if rec.eligible {
            s.eligible += 1;
            s.mean_severity_f += rec.severity_f;
            s.mean_realized_deviation_f += rec.max_deviation_f;
            s.mean_slot_deviation_f += rec.mean_deviation_f;
        }
    }
    for s in classes.values_mut() {
        if s.eligible > 0 {
            let n = s.eligible as f64;
            s.mean_severity_f /= n;
            s.mean_realized_deviation_f /= n;
            s.mean_slot_deviation_f /= n;
        }
    }

    let report = SimulationReport {
        slots: grid.len(),
        dt_minutes: grid.dt_minutes(),
        homes: community.customers.len(),
        phase_order: options.phase_order,
        peak_before_kw: peak_before,
        peak_after_shiftable_kw: after_shiftable.peak(),
        peak_after_thermostat_kw: after_thermostat.peak(),
        final_peak_kw: final_peak,
        percent_peak_reduction: percent,
        energy_before_kwh: energy_before,
        energy_after_kwh: energy_after,
        classes,
        profiles: PhaseProfiles {
            initial: x,
            after_shiftable,
            after_thermostat,
        },
        customers,
    };
    Ok(Evaluation { report, trace })
}
