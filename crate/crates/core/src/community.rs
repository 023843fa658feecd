//! The residential community: customers, their devices, and the aggregated
//! load profile they produce.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::LoadCurve;
use crate::error::{Error, Result};
use crate::grid::{LoadProfile, TimeGrid};
use crate::plan::{EngagementPlan, LoadClassId, LoadKind, PlanTerm, ThermalKind};
use crate::thermal::{AcParams, TankSpec, ThermalModel, WhParams, MIN_EER};

/// Slots in which a thermostat load is demanded, as sorted disjoint
/// half-open intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandWindows {
    intervals: Vec<(usize, usize)>,
    #[serde(skip)]
    mask: Vec<bool>,
}

impl DemandWindows {
    pub fn new(mut intervals: Vec<(usize, usize)>, slots: usize) -> Result<Self> {
        intervals.retain(|(s, e)| e > s);
        intervals.sort_unstable();
        let mut mask = vec![false; slots];
        for &(s, e) in &intervals {
            if e > slots {
                return Err(Error::config(
                    "windows",
                    format!("window [{s}, {e}) extends past slot {slots}"),
                ));
            }
            for m in &mut mask[s..e] {
                if *m {
                    return Err(Error::config("windows", format!("window [{s}, {e}) overlaps another")));
                }
                *m = true;
            }
        }
        Ok(Self { intervals, mask })
    }

    pub fn empty(slots: usize) -> Self {
        Self {
            intervals: Vec::new(),
            mask: vec![false; slots],
        }
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.mask.get(slot).copied().unwrap_or(false)
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.intervals.iter().flat_map(|&(s, e)| s..e)
    }

    pub fn len(&self) -> usize {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Operating state per slot for one thermostat load: a `T x K` binary matrix
/// stored row-wise as the index of the single active state (1-based), or
/// `None` for an all-zero row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMatrix {
    states: usize,
    rows: Vec<Option<u8>>,
}

impl StateMatrix {
    /// Every demanded slot at full power `K`, every other row empty.
    pub fn full_power(windows: &DemandWindows, states: usize) -> Self {
        let rows = windows.mask().iter().map(|&d| d.then_some(states as u8)).collect();
        Self { states, rows }
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn state(&self, slot: usize) -> Option<usize> {
        self.rows[slot].map(usize::from)
    }

    pub fn set(&mut self, slot: usize, state: usize) {
        assert!(
            (1..=self.states).contains(&state),
            "state {state} outside 1..={}",
            self.states
        );
        self.rows[slot] = Some(state as u8);
    }

    /// Entry `c^k(t)` of the binary matrix.
    pub fn entry(&self, slot: usize, state: usize) -> bool {
        self.rows[slot] == Some(state as u8)
    }

    /// Number of active states in row `slot` (0 or 1 by construction).
    pub fn row_sum(&self, slot: usize) -> usize {
        (1..=self.states).filter(|&k| self.entry(slot, k)).count()
    }

    /// Demanded slots not at full power.
    pub fn denied_slots(&self, windows: &DemandWindows) -> usize {
        windows.slots().filter(|&t| self.state(t) != Some(self.states)).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftableLoad {
    pub class: LoadClassId,
    pub rated_kw: f64,
    pub duration_slots: usize,
    pub preferred_start_slot: usize,
}

impl ShiftableLoad {
    /// Power drawn when started at `start`; zero outside the run.
    pub fn profile_at(&self, start: usize, slots: usize) -> LoadProfile {
        let mut v = vec![0.0; slots];
        let end = (start + self.duration_slots).min(slots);
        for x in &mut v[start.min(slots)..end] {
            *x = self.rated_kw;
        }
        LoadProfile::from_raw(v)
    }

    pub fn demanded_profile(&self, slots: usize) -> LoadProfile {
        self.profile_at(self.preferred_start_slot, slots)
    }

    pub fn energy_kwh(&self, grid: &TimeGrid) -> f64 {
        self.rated_kw * self.duration_slots as f64 * grid.dt_hours()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatLoad {
    pub class: LoadClassId,
    pub rated_kw: f64,
    pub num_states: usize,
    pub set_point_f: f64,
    pub windows: DemandWindows,
    pub thermal: ThermalModel,
}

impl ThermostatLoad {
    /// Power in state `k` (1-based).
    pub fn power_at_state(&self, k: usize) -> f64 {
        (k - 1) as f64 / (self.num_states - 1) as f64 * self.rated_kw
    }

    pub fn thermal_kind(&self) -> ThermalKind {
        match self.thermal {
            ThermalModel::Ac(_) => ThermalKind::Cooling,
            ThermalModel::Wh(_) => ThermalKind::Heating,
        }
    }

    /// Full rated power across the demand windows.
    pub fn demanded_profile(&self) -> LoadProfile {
        LoadProfile::from_raw(
            self.windows
                .mask()
                .iter()
                .map(|&d| if d { self.rated_kw } else { 0.0 })
                .collect(),
        )
    }

    /// Power profile realized by a state matrix.
    pub fn profile_for(&self, states: &StateMatrix) -> LoadProfile {
        LoadProfile::from_raw(
            (0..states.len())
                .map(|t| match states.state(t) {
                    Some(k) if self.windows.contains(t) => self.power_at_state(k),
                    _ => 0.0,
                })
                .collect(),
        )
    }

    pub fn energy_kwh(&self, grid: &TimeGrid) -> f64 {
        self.rated_kw * self.windows.len() as f64 * grid.dt_hours()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: usize,
    pub base_load: LoadProfile,
    pub shiftables: Vec<ShiftableLoad>,
    pub thermostats: Vec<ThermostatLoad>,
}

impl Customer {
    /// Base load plus every device at its demanded profile.
    pub fn demanded_total(&self) -> LoadProfile {
        let mut total = self.base_load.clone();
        let slots = total.len();
        for s in &self.shiftables {
            total.add_assign(&s.demanded_profile(slots));
        }
        for th in &self.thermostats {
            total.add_assign(&th.demanded_profile());
        }
        total
    }

    pub fn daily_energy_kwh(&self, grid: &TimeGrid) -> f64 {
        self.demanded_total().energy_kwh(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub grid: TimeGrid,
    pub customers: Vec<Customer>,
}

impl Community {
    pub fn new(grid: TimeGrid, customers: Vec<Customer>) -> Result<Self> {
        for c in &customers {
            if c.base_load.len() != grid.len() {
                return Err(Error::config(
                    format!("customers[{}].base_load", c.id),
                    format!("length {} does not match {} slots", c.base_load.len(), grid.len()),
                ));
            }
            for th in &c.thermostats {
                if th.windows.mask().len() != grid.len() {
                    return Err(Error::config(
                        format!("customers[{}].{}", c.id, th.class),
                        "demand window built for a different grid",
                    ));
                }
            }
        }
        Ok(Self { grid, customers })
    }

    /// Classes present in the community, by name.
    pub fn classes(&self) -> BTreeMap<String, LoadKind> {
        let mut out = BTreeMap::new();
        for c in &self.customers {
            for s in &c.shiftables {
                out.insert(s.class.name.clone(), s.class.kind);
            }
            for th in &c.thermostats {
                out.insert(th.class.name.clone(), th.class.kind);
            }
        }
        out
    }

    /// Moves every device whose class has no plan term into its owner's base
    /// load (shiftables at their preferred start, thermostats at full power).
    pub fn fold_unplanned(&self, plan: &EngagementPlan) -> Community {
        let mut out = self.clone();
        for c in &mut out.customers {
            let slots = c.base_load.len();
            let (keep, fold): (Vec<_>, Vec<_>) = std::mem::take(&mut c.shiftables)
                .into_iter()
                .partition(|s| matches!(plan.term(&s.class.name), Some(PlanTerm::Shiftable(_))));
            for s in fold {
                c.base_load.add_assign(&s.demanded_profile(slots));
            }
            c.shiftables = keep;
            let (keep, fold): (Vec<_>, Vec<_>) = std::mem::take(&mut c.thermostats)
                .into_iter()
                .partition(|th| matches!(plan.term(&th.class.name), Some(PlanTerm::Thermostat(_))));
            for th in fold {
                c.base_load.add_assign(&th.demanded_profile());
            }
            c.thermostats = keep;
        }
        out
    }

    /// Overrides the state count of every thermostat load.
    pub fn with_states(&self, states: usize) -> Result<Community> {
        if states < 2 {
            return Err(Error::InvalidModel(format!(
                "a throttled device needs at least 2 states, got {states}"
            )));
        }
        let mut out = self.clone();
        for c in &mut out.customers {
            for th in &mut c.thermostats {
                th.num_states = states;
            }
        }
        Ok(out)
    }

    /// The state count shared by all thermostat loads, if uniform.
    pub fn uniform_states(&self) -> Option<usize> {
        let mut it = self
            .customers
            .iter()
            .flat_map(|c| c.thermostats.iter().map(|t| t.num_states));
        let first = it.next()?;
        it.all(|k| k == first).then_some(first)
    }
}

/// Aggregated demanded profile of the community: every base load plus every
/// device at its demanded (unscheduled) profile.
pub fn aggregate(community: &Community) -> LoadProfile {
    let mut total = LoadProfile::zeros(community.grid.len());
    for c in &community.customers {
        total.add_assign(&c.demanded_total());
    }
    total
}

/// Closed range `[lo, hi]` given as a two-element list in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RangeRepr", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Point(f64),
    Pair([f64; 2]),
}

impl From<RangeRepr> for Range {
    fn from(r: RangeRepr) -> Self {
        match r {
            RangeRepr::Point(v) => Range { lo: v, hi: v },
            RangeRepr::Pair([lo, hi]) => Range { lo, hi },
        }
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn check(&self, path: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::config(path, format!("invalid range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    /// Uniform draw from the integers inside the range.
    fn sample_lattice(&self, rng: &mut impl Rng) -> f64 {
        let lo = self.lo.ceil() as i64;
        let hi = self.hi.floor() as i64;
        rng.random_range(lo..=hi) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftableClassSpec {
    pub class: String,
    pub rated_kw: f64,
    pub duration_minutes: u32,
    /// Fraction of homes owning the device.
    #[serde(default = "one")]
    pub ownership: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ThermalSpec {
    Ac {
        alpha_kwh_per_f: Range,
        #[serde(default = "default_eer")]
        eer: f64,
    },
    Wh {
        #[serde(flatten)]
        tank: TankSpec,
    },
}

impl ThermalSpec {
    pub fn kind(&self) -> ThermalKind {
        match self {
            ThermalSpec::Ac { .. } => ThermalKind::Cooling,
            ThermalSpec::Wh { .. } => ThermalKind::Heating,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermostatClassSpec {
    pub class: String,
    pub rated_kw: f64,
    pub states: usize,
    pub set_point_f: Range,
    /// Number of separate demand windows per day.
    pub instances: [usize; 2],
    /// Length of each demand window.
    pub instance_minutes: [u32; 2],
    /// Minimum idle time between two windows of the same device.
    #[serde(default = "default_gap")]
    pub min_gap_minutes: u32,
    #[serde(default = "one")]
    pub ownership: f64,
    pub thermal: ThermalSpec,
}

fn one() -> f64 {
    1.0
}

fn default_eer() -> f64 {
    10.0
}

fn default_gap() -> u32 {
    30
}

/// Parameters of the synthetic community generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityConfig {
    pub homes: usize,
    #[serde(default = "default_target")]
    pub target_daily_kwh: f64,
    /// Per-home energy target is drawn from `target * (1 ± jitter)`.
    #[serde(default = "default_jitter")]
    pub energy_jitter: f64,
    /// Exponent applied to the curve when weighting device start times.
    #[serde(default = "default_sharpness")]
    pub window_sharpness: f64,
    /// Tail of the day kept free after each shiftable run so delays never
    /// cross midnight.
    #[serde(default = "default_reserve")]
    pub shift_reserve_minutes: u32,
    /// Defaults to the clothes dryer and dish washer of the standard mix.
    #[serde(default = "default_shiftables")]
    pub shiftable: Vec<ShiftableClassSpec>,
    /// Defaults to the air conditioner and water heater of the standard mix.
    #[serde(default = "default_thermostats")]
    pub thermostat: Vec<ThermostatClassSpec>,
}

fn default_target() -> f64 {
    41.0
}

fn default_jitter() -> f64 {
    0.05
}

fn default_sharpness() -> f64 {
    DEFAULT_WINDOW_SHARPNESS
}

fn default_reserve() -> u32 {
    240
}

fn default_shiftables() -> Vec<ShiftableClassSpec> {
    vec![
        ShiftableClassSpec {
            class: "CD".into(),
            rated_kw: 3.1,
            duration_minutes: 120,
            ownership: 1.0,
        },
        ShiftableClassSpec {
            class: "DW".into(),
            rated_kw: 1.8,
            duration_minutes: 90,
            ownership: 1.0,
        },
    ]
}

fn default_thermostats() -> Vec<ThermostatClassSpec> {
    vec![
        ThermostatClassSpec {
            class: "AC".into(),
            rated_kw: 5.0,
            states: 5,
            set_point_f: Range::new(68.0, 76.0),
            instances: [1, 1],
            instance_minutes: [240, 240],
            min_gap_minutes: default_gap(),
            ownership: 1.0,
            thermal: ThermalSpec::Ac {
                alpha_kwh_per_f: Range::new(2.0, 3.0),
                eer: 10.0,
            },
        },
        ThermostatClassSpec {
            class: "WH".into(),
            rated_kw: 2.5,
            states: 5,
            set_point_f: Range::new(104.0, 120.0),
            instances: [2, 3],
            instance_minutes: [60, 120],
            min_gap_minutes: default_gap(),
            ownership: 1.0,
            thermal: ThermalSpec::Wh {
                tank: TankSpec::default(),
            },
        },
    ]
}

/// Start-time weighting exponent that brings a 1000-home default community
/// close to a 3.7 MW evening peak on the bundled curve.
pub const DEFAULT_WINDOW_SHARPNESS: f64 = 2.0;

impl CommunityConfig {
    /// Standard appliance mix (AC, WH, CD and DW in every home).
    pub fn with_default_devices(homes: usize) -> Self {
        Self {
            homes,
            target_daily_kwh: default_target(),
            energy_jitter: default_jitter(),
            window_sharpness: default_sharpness(),
            shift_reserve_minutes: default_reserve(),
            shiftable: default_shiftables(),
            thermostat: default_thermostats(),
        }
    }

    /// Checks everything that can be checked before sampling.
    pub fn validate(&self, grid: &TimeGrid) -> Vec<Error> {
        let mut errs = Vec::new();
        let t = grid.len();
        let slots = |path: String, minutes: u32, errs: &mut Vec<Error>| -> Option<usize> {
            let s = grid.slots_for_minutes(minutes);
            if s.is_none() {
                errs.push(Error::config(
                    path,
                    format!(
                        "{minutes} min is not a multiple of the {} min slot length",
                        grid.dt_minutes()
                    ),
                ));
            }
            s
        };
        if !(self.target_daily_kwh.is_finite() && self.target_daily_kwh > 0.0) {
            errs.push(Error::config("community.target_daily_kwh", "must be positive"));
        }
        if !(0.0..=0.1).contains(&self.energy_jitter) {
            errs.push(Error::config("community.energy_jitter", "must lie in [0, 0.1]"));
        }
        if !(self.window_sharpness.is_finite() && self.window_sharpness >= 0.0) {
            errs.push(Error::config("community.window_sharpness", "must be nonnegative"));
        }
        let reserve = slots(
            "community.shift_reserve_minutes".into(),
            self.shift_reserve_minutes,
            &mut errs,
        );
        let mut names = std::collections::BTreeSet::new();
        let mut max_flex_kwh = 0.0;
        let mut crossing: Option<String> = None;
        let budget = self.target_daily_kwh * 1.1;

        for (i, s) in self.shiftable.iter().enumerate() {
            let path = format!("community.shiftable[{i}]");
            if !names.insert(s.class.clone()) {
                errs.push(Error::config(
                    format!("{path}.class"),
                    format!("duplicate class {}", s.class),
                ));
            }
            if !(s.rated_kw.is_finite() && s.rated_kw > 0.0) {
                errs.push(Error::config(format!("{path}.rated_kw"), "must be positive"));
            }
            if !(0.0..=1.0).contains(&s.ownership) {
                errs.push(Error::config(format!("{path}.ownership"), "must lie in [0, 1]"));
            }
            let dur = slots(format!("{path}.duration_minutes"), s.duration_minutes, &mut errs);
            if let (Some(d), Some(r)) = (dur, reserve) {
                if d == 0 {
                    errs.push(Error::config(format!("{path}.duration_minutes"), "must be positive"));
                } else if d + r > t {
                    errs.push(Error::config(
                        format!("{path}.duration_minutes"),
                        format!(
                            "class {}: run of {d} slots plus {r} reserved delay slots spills past midnight ({t} slots)",
                            s.class
                        ),
                    ));
                }
            }
            max_flex_kwh += s.rated_kw * f64::from(s.duration_minutes) / 60.0;
            if crossing.is_none() && max_flex_kwh > budget {
                crossing = Some(s.class.clone());
            }
        }
        for (i, th) in self.thermostat.iter().enumerate() {
            let path = format!("community.thermostat[{i}]");
            if !names.insert(th.class.clone()) {
                errs.push(Error::config(
                    format!("{path}.class"),
                    format!("duplicate class {}", th.class),
                ));
            }
            if !(th.rated_kw.is_finite() && th.rated_kw > 0.0) {
                errs.push(Error::config(format!("{path}.rated_kw"), "must be positive"));
            }
            if th.states < 2 {
                errs.push(Error::config(format!("{path}.states"), "must be at least 2"));
            }
            if !(0.0..=1.0).contains(&th.ownership) {
                errs.push(Error::config(format!("{path}.ownership"), "must lie in [0, 1]"));
            }
            if let Err(e) = th.set_point_f.check(&format!("{path}.set_point_f")) {
                errs.push(e);
            } else if th.set_point_f.lo.ceil() > th.set_point_f.hi.floor() {
                errs.push(Error::config(
                    format!("{path}.set_point_f"),
                    "range contains no whole-degree set point",
                ));
            }
            let [nlo, nhi] = th.instances;
            if nlo > nhi {
                errs.push(Error::config(
                    format!("{path}.instances"),
                    "lower bound exceeds upper bound",
                ));
            }
            let [mlo, mhi] = th.instance_minutes;
            let dlo = slots(format!("{path}.instance_minutes"), mlo, &mut errs);
            let dhi = slots(format!("{path}.instance_minutes"), mhi, &mut errs);
            let gap = slots(format!("{path}.min_gap_minutes"), th.min_gap_minutes, &mut errs);
            if let (Some(dlo), Some(dhi), Some(gap)) = (dlo, dhi, gap) {
                if dlo == 0 || dlo > dhi {
                    errs.push(Error::config(
                        format!("{path}.instance_minutes"),
                        "window length range must be positive and ordered",
                    ));
                } else if nhi * (dhi + gap) > t + gap {
                    errs.push(Error::config(
                        format!("{path}.instances"),
                        format!("class {}: {nhi} windows of {dhi} slots cannot fit in one day", th.class),
                    ));
                }
            }
            match &th.thermal {
                ThermalSpec::Ac { alpha_kwh_per_f, eer } => {
                    if let Err(e) = alpha_kwh_per_f.check(&format!("{path}.thermal.alpha_kwh_per_f")) {
                        errs.push(e);
                    } else if alpha_kwh_per_f.lo <= 0.0 {
                        errs.push(Error::config(
                            format!("{path}.thermal.alpha_kwh_per_f"),
                            "must be positive",
                        ));
                    }
                    if eer.is_nan() || *eer < MIN_EER {
                        errs.push(Error::config(
                            format!("{path}.thermal.eer"),
                            format!("must be at least {MIN_EER}"),
                        ));
                    }
                }
                ThermalSpec::Wh { tank } => {
                    if tank.inlet_temp_f >= th.set_point_f.lo {
                        errs.push(Error::config(
                            format!("{path}.thermal.inlet_temp_f"),
                            "must be below every set point",
                        ));
                    }
                    for (field, v) in [
                        ("volume_gal", tank.volume_gal),
                        ("area_ft2", tank.area_ft2),
                        ("resistance", tank.resistance),
                        ("water_heat_kwh_per_gal_f", tank.water_heat_kwh_per_gal_f),
                    ] {
                        if !(v.is_finite() && v > 0.0) {
                            errs.push(Error::config(format!("{path}.thermal.{field}"), "must be positive"));
                        }
                    }
                }
            }
            max_flex_kwh += th.rated_kw * (nhi as f64) * f64::from(mhi) / 60.0;
            if crossing.is_none() && max_flex_kwh > budget {
                crossing = Some(th.class.clone());
            }
        }
        if let Some(class) = crossing {
            errs.push(Error::config(
                "community",
                format!(
                    "class {class}: flexible devices can demand {max_flex_kwh:.1} kWh per home, above the {budget:.1} kWh ceiling (target + 10%)"
                ),
            ));
        }
        errs
    }
}

/// Samples a start slot in `0..=latest` with weight `(mean curve over the
/// run)^sharpness`, skipping starts rejected by `allowed`.
fn sample_start(
    rng: &mut impl Rng,
    curve: &[f64],
    duration: usize,
    latest: usize,
    sharpness: f64,
    allowed: impl Fn(usize) -> bool,
) -> Option<usize> {
    let weights: Vec<f64> = (0..=latest)
        .map(|s| {
            if !allowed(s) {
                return 0.0;
            }
            let mean = curve[s..s + duration].iter().sum::<f64>() / duration as f64;
            mean.powf(sharpness)
        })
        .collect();
    let dist = WeightedIndex::new(&weights).ok()?;
    Some(dist.sample(rng))
}

/// Builds a thermostat load with a thermal model calibrated so that
/// full-power operation holds the set point across its demand windows.
pub fn build_thermostat(
    class: &str,
    rated_kw: f64,
    states: usize,
    set_point_f: f64,
    windows: DemandWindows,
    thermal: &ThermalModelSpec,
    grid: &TimeGrid,
) -> Result<ThermostatLoad> {
    if states < 2 {
        return Err(Error::InvalidModel(format!(
            "{class}: a throttled device needs at least 2 states, got {states}"
        )));
    }
    let (kind, model) = match *thermal {
        ThermalModelSpec::Ac { alpha_kwh_per_f, eer } => (
            ThermalKind::Cooling,
            ThermalModel::Ac(AcParams::calibrated(alpha_kwh_per_f, eer, rated_kw, windows.mask())?),
        ),
        ThermalModelSpec::Wh(tank) => (
            ThermalKind::Heating,
            ThermalModel::Wh(WhParams::calibrated(tank, rated_kw, set_point_f, windows.mask(), grid)?),
        ),
    };
    Ok(ThermostatLoad {
        class: LoadClassId::new(class, LoadKind::Thermostat(kind)),
        rated_kw,
        num_states: states,
        set_point_f,
        windows,
        thermal: model,
    })
}

/// Concrete per-device thermal parameters (after sampling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ThermalModelSpec {
    Ac { alpha_kwh_per_f: f64, eer: f64 },
    Wh(TankSpec),
}

/// Generates a seeded synthetic community.
///
/// Device start times follow the curve shape, set points are whole degrees
/// drawn uniformly from each class's band, and each home's base load is the
/// curve shape scaled to whatever energy its devices leave of its daily
/// target (never negative).
pub fn generate_community(config: &CommunityConfig, curve: &LoadCurve, grid: TimeGrid, seed: u64) -> Result<Community> {
    if let Some(e) = config.validate(&grid).into_iter().next() {
        return Err(e);
    }
    let t = grid.len();
    let shape = curve.resample(t);
    let shape_energy: f64 = shape.iter().sum::<f64>() * grid.dt_hours();
    let reserve = grid.slots_for_minutes(config.shift_reserve_minutes).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut customers = Vec::with_capacity(config.homes);

    for id in 0..config.homes {
        let jitter = if config.energy_jitter > 0.0 {
            rng.random_range(-config.energy_jitter..=config.energy_jitter)
        } else {
            0.0
        };
        let target = config.target_daily_kwh * (1.0 + jitter);

        let mut shiftables = Vec::new();
        for spec in &config.shiftable {
            if rng.random::<f64>() >= spec.ownership {
                continue;
            }
            let duration = grid.slots_for_minutes(spec.duration_minutes).unwrap_or(0);
            let latest = t - duration - reserve;
            let start = sample_start(&mut rng, &shape, duration, latest, config.window_sharpness, |_| true)
                .ok_or_else(|| {
                    Error::config(format!("community.shiftable.{}", spec.class), "no feasible start time")
                })?;
            shiftables.push(ShiftableLoad {
                class: LoadClassId::shiftable(spec.class.clone()),
                rated_kw: spec.rated_kw,
                duration_slots: duration,
                preferred_start_slot: start,
            });
        }

        let mut thermostats = Vec::new();
        for spec in &config.thermostat {
            if rng.random::<f64>() >= spec.ownership {
                continue;
            }
            let set_point = spec.set_point_f.sample_lattice(&mut rng);
            let count = rng.random_range(spec.instances[0]..=spec.instances[1]);
            let dlo = grid.slots_for_minutes(spec.instance_minutes[0]).unwrap_or(1);
            let dhi = grid.slots_for_minutes(spec.instance_minutes[1]).unwrap_or(1);
            let gap = grid.slots_for_minutes(spec.min_gap_minutes).unwrap_or(0);
            let mut taken = vec![false; t];
            let mut intervals = Vec::with_capacity(count);
            for _ in 0..count {
                let dur = rng.random_range(dlo..=dhi);
                let free = |s: usize| {
                    let lo = s.saturating_sub(gap);
                    let hi = (s + dur + gap).min(t);
                    !taken[lo..hi].iter().any(|&x| x)
                };
                let Some(start) = sample_start(&mut rng, &shape, dur, t - dur, config.window_sharpness, free) else {
                    break;
                };
                for x in &mut taken[start..start + dur] {
                    *x = true;
                }
                intervals.push((start, start + dur));
            }
            let windows = DemandWindows::new(intervals, t)?;
            let thermal = match &spec.thermal {
                ThermalSpec::Ac { alpha_kwh_per_f, eer } => ThermalModelSpec::Ac {
                    alpha_kwh_per_f: alpha_kwh_per_f.sample(&mut rng),
                    eer: *eer,
                },
                ThermalSpec::Wh { tank } => ThermalModelSpec::Wh(*tank),
            };
            thermostats.push(build_thermostat(
                &spec.class,
                spec.rated_kw,
                spec.states,
                set_point,
                windows,
                &thermal,
                &grid,
            )?);
        }

        let flex_kwh: f64 = shiftables.iter().map(|s| s.energy_kwh(&grid)).sum::<f64>()
            + thermostats.iter().map(|th| th.energy_kwh(&grid)).sum::<f64>();
        let base_kwh = (target - flex_kwh).max(0.0);
        let scale = base_kwh / shape_energy;
        let base_load = LoadProfile::from_raw(shape.iter().map(|v| v * scale).collect());
        customers.push(Customer {
            id,
            base_load,
            shiftables,
            thermostats,
        });
    }
    Community::new(grid, customers)
}
