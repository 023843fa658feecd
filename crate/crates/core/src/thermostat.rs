//! Peak-driven throttling of thermostat loads.
//!
//! For each device the scheduler picks the `t_dur` highest slots of the
//! background profile inside the device's demand window and switches the
//! device off there. While the temperature bound is broken anywhere in the
//! window, it raises the power state one step at a time, starting from the
//! lowest of those peaks and moving up only once that slot is back at full
//! power.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::community::{DemandWindows, StateMatrix, ThermostatLoad};
use crate::error::{Error, Result};
use crate::grid::{LoadProfile, TimeGrid};
use crate::thermal::simulate_into;
use crate::units::TEMP_TOL_F;

/// Largest device count for which every order is enumerated.
pub const MAX_ORDER_DEVICES: usize = 8;

/// The `count` slots of `window` with the largest `profile` values, largest
/// first, ties to the earlier slot.
pub fn find_local_peaks(profile: &LoadProfile, window: &DemandWindows, count: usize) -> Vec<usize> {
    let mut slots: Vec<usize> = window.slots().collect();
    slots.sort_by(|&a, &b| profile[b].total_cmp(&profile[a]).then(a.cmp(&b)));
    slots.truncate(count);
    slots
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatResult {
    pub states: StateMatrix,
    /// End-of-slot temperature for every slot of the day.
    pub temperatures: Vec<f64>,
    /// `|temperature - set point|` on demanded slots, 0 elsewhere.
    pub deviations: Vec<f64>,
    pub denied_slots: usize,
    /// Peak slots chosen for throttling, largest first.
    pub peaks: Vec<usize>,
    /// Power drawn per slot under `states`.
    pub profile: LoadProfile,
    /// Number of single-step state raises performed.
    pub escalations: usize,
}

impl ThermostatResult {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

fn violates(load: &ThermostatLoad, temps: &[f64], severity: f64) -> bool {
    load.windows
        .slots()
        .any(|t| (temps[t] - load.set_point_f).abs() > severity + TEMP_TOL_F)
}

fn finish(
    load: &ThermostatLoad,
    states: StateMatrix,
    temperatures: Vec<f64>,
    peaks: Vec<usize>,
    escalations: usize,
) -> ThermostatResult {
    let deviations = (0..temperatures.len())
        .map(|t| {
            if load.windows.contains(t) {
                (temperatures[t] - load.set_point_f).abs()
            } else {
                0.0
            }
        })
        .collect();
    ThermostatResult {
        denied_slots: states.denied_slots(&load.windows),
        profile: load.profile_for(&states),
        states,
        temperatures,
        deviations,
        peaks,
        escalations,
    }
}

/// Throttles one thermostat load against `background` (the aggregate without
/// this device). A device with zero severity or zero duration budget runs at
/// full power throughout its windows.
pub fn control_device(
    customer_id: usize,
    background: &LoadProfile,
    load: &ThermostatLoad,
    severity: f64,
    duration_slots: usize,
    grid: &TimeGrid,
) -> Result<ThermostatResult> {
    let full = load.num_states;
    let mut states = StateMatrix::full_power(&load.windows, full);
    let mut temps = Vec::with_capacity(grid.len());
    if severity <= 0.0 || duration_slots == 0 {
        simulate_into(load, &states, load.set_point_f, grid, &mut temps);
        return Ok(finish(load, states, temps, Vec::new(), 0));
    }

    let count = duration_slots.min(load.windows.len());
    let peaks = find_local_peaks(background, &load.windows, count);
    for &t in &peaks {
        states.set(t, 1);
    }
    // Escalation walks the peak vector from its least significant end.
    let mut cursor = peaks.len();
    let mut escalations = 0;
    loop {
        simulate_into(load, &states, load.set_point_f, grid, &mut temps);
        if !violates(load, &temps, severity) {
            break;
        }
        while cursor > 0 && states.state(peaks[cursor - 1]) == Some(full) {
            cursor -= 1;
        }
        if cursor == 0 {
            return Err(Error::NonConvergence {
                customer: customer_id,
                device: load.class.name.clone(),
            });
        }
        let slot = peaks[cursor - 1];
        let k = states.state(slot).expect("peak slots are demanded");
        states.set(slot, k + 1);
        escalations += 1;
    }
    Ok(finish(load, states, temps, peaks, escalations))
}

/// Per-device inputs for [`schedule_customer`].
#[derive(Debug, Clone, Copy)]
pub struct DeviceBudget {
    pub severity: f64,
    pub duration_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerThermostatResult {
    /// Results indexed like the input devices.
    pub devices: Vec<ThermostatResult>,
    pub order: Vec<usize>,
    pub peak: f64,
    /// Background plus every device at its controlled profile.
    pub profile: LoadProfile,
}

/// Controls one customer's thermostat loads against `background` (the
/// aggregate with all of the customer's thermostat demand removed).
///
/// Devices with zero severity or duration are added back at full power
/// first; every order of the remaining devices is then tried and the lowest
/// final peak wins, ties going to the lexicographically first order.
pub fn schedule_customer(
    customer_id: usize,
    background: &LoadProfile,
    devices: &[ThermostatLoad],
    budgets: &[DeviceBudget],
    grid: &TimeGrid,
) -> Result<CustomerThermostatResult> {
    assert_eq!(devices.len(), budgets.len());
    let (controlled, fixed): (Vec<usize>, Vec<usize>) =
        (0..devices.len()).partition(|&i| budgets[i].severity > 0.0 && budgets[i].duration_slots > 0);
    if controlled.len() > MAX_ORDER_DEVICES {
        return Err(Error::TooManyDevices {
            customer: customer_id,
            what: "thermostat",
            count: controlled.len(),
            limit: MAX_ORDER_DEVICES,
        });
    }

    let mut results: Vec<Option<ThermostatResult>> = vec![None; devices.len()];
    let mut base = background.clone();
    for &i in &fixed {
        let r = control_device(customer_id, &base, &devices[i], 0.0, 0, grid)?;
        base.add_assign(&r.profile);
        results[i] = Some(r);
    }

    // (order, per-device results, final profile, peak)
    type Candidate = (Vec<usize>, Vec<(usize, ThermostatResult)>, LoadProfile, f64);
    let mut best: Option<Candidate> = None;
    for order in controlled.iter().copied().permutations(controlled.len()) {
        let mut h = base.clone();
        let mut run = Vec::with_capacity(order.len());
        for &i in &order {
            let r = control_device(
                customer_id,
                &h,
                &devices[i],
                budgets[i].severity,
                budgets[i].duration_slots,
                grid,
            )?;
            h.add_assign(&r.profile);
            run.push((i, r));
        }
        let peak = h.peak();
        if best.as_ref().is_none_or(|b| peak < b.3) {
            best = Some((order, run, h, peak));
        }
    }
    let (order, run, profile, peak) = best.expect("at least the empty order is enumerated");
    for (i, r) in run {
        results[i] = Some(r);
    }
    Ok(CustomerThermostatResult {
        devices: results
            .into_iter()
            .map(|r| r.expect("every device scheduled"))
            .collect(),
        order,
        peak,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::{build_thermostat, ThermalModelSpec};

    fn lp(v: &[f64]) -> LoadProfile {
        LoadProfile::from_raw(v.to_vec())
    }

    #[test]
    fn peaks_examples() {
        let p = lp(&[1.0, 9.0, 3.0, 7.0]);
        let all = DemandWindows::new(vec![(0, 4)], 4).unwrap();
        assert_eq!(find_local_peaks(&p, &all, 2), vec![1, 3]);
        assert_eq!(find_local_peaks(&p, &all, 4), vec![1, 3, 2, 0]);
        let flat = lp(&[2.0; 6]);
        let w = DemandWindows::new(vec![(1, 5)], 6).unwrap();
        assert_eq!(find_local_peaks(&flat, &w, 3), vec![1, 2, 3]);
        assert!(find_local_peaks(&p, &DemandWindows::empty(4), 2).is_empty());
    }

    fn ac(states: usize, window: (usize, usize), slots: usize, alpha: f64) -> (ThermostatLoad, TimeGrid) {
        let grid = TimeGrid::new(slots).unwrap();
        let w = DemandWindows::new(vec![window], slots).unwrap();
        let load = build_thermostat(
            "AC",
            5.0,
            states,
            72.0,
            w,
            &ThermalModelSpec::Ac {
                alpha_kwh_per_f: alpha,
                eer: 10.0,
            },
            &grid,
        )
        .unwrap();
        (load, grid)
    }

    #[test]
    fn zero_severity_leaves_device_at_full_power() {
        let (load, grid) = ac(3, (2, 8), 12, 2.0);
        let bg = lp(&[1.0; 12]);
        let r = control_device(0, &bg, &load, 0.0, 4, &grid).unwrap();
        assert_eq!(r.denied_slots, 0);
        assert_eq!(r.profile, load.demanded_profile());
        assert!(r.max_deviation() < 1e-12);
    }

    #[test]
    fn two_state_slack_severity_denies_top_peaks() {
        let (load, grid) = ac(2, (0, 6), 6, 2.0);
        let bg = lp(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let r = control_device(0, &bg, &load, 100.0, 3, &grid).unwrap();
        assert_eq!(r.peaks, vec![5, 4, 2]);
        assert_eq!(r.denied_slots, 3);
        for t in 0..6 {
            let off = [5, 4, 2].contains(&t);
            assert_eq!(r.states.state(t), Some(if off { 1 } else { 2 }));
        }
    }

    #[test]
    fn three_state_single_escalation() {
        // 24 slots (1 h each) with a 3-slot window; alpha chosen so one hour
        // fully off warms the room by 1 °F: rise = gain/alpha.
        let grid = TimeGrid::new(24).unwrap();
        let w = DemandWindows::new(vec![(10, 13)], 24).unwrap();
        let gain = 10.0 * 5.0 * 1000.0 / crate::units::BTU_PER_KWH;
        let load = build_thermostat(
            "AC",
            5.0,
            3,
            72.0,
            w,
            &ThermalModelSpec::Ac {
                alpha_kwh_per_f: gain,
                eer: 10.0,
            },
            &grid,
        )
        .unwrap();
        let mut bg = vec![0.0; 24];
        bg[10] = 9.0;
        bg[11] = 5.0;
        bg[12] = 7.0;
        // Two slots off would warm 2 °F; with a 1.5 °F bound the lower
        // peak (slot 12) must rise one step to half power: 1 + 0.5 = 1.5.
        let r = control_device(0, &lp(&bg), &load, 1.5, 2, &grid).unwrap();
        assert_eq!(r.peaks, vec![10, 12]);
        assert_eq!(r.states.state(10), Some(1));
        assert_eq!(r.states.state(12), Some(2));
        assert_eq!(r.states.state(11), Some(3));
        assert_eq!(r.escalations, 1);
        assert!((r.profile[12] - 2.5).abs() < 1e-12);
        assert!((r.max_deviation() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn single_device_customer_matches_control_device() {
        let (load, grid) = ac(3, (2, 10), 12, 2.0);
        let bg = lp(&[1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 2.0, 1.0, 7.0, 3.0, 0.0, 0.0]);
        let budget = DeviceBudget {
            severity: 1.0,
            duration_slots: 4,
        };
        let r = schedule_customer(0, &bg, std::slice::from_ref(&load), &[budget], &grid).unwrap();
        let direct = control_device(0, &bg, &load, 1.0, 4, &grid).unwrap();
        assert_eq!(r.devices[0], direct);
        let mut expect = bg.clone();
        expect.add_assign(&direct.profile);
        assert_eq!(r.profile, expect);
    }

    #[test]
    fn all_ineligible_returns_background_plus_full_power() {
        let (load, grid) = ac(3, (2, 10), 12, 2.0);
        let bg = lp(&[1.0; 12]);
        let budget = DeviceBudget {
            severity: 0.0,
            duration_slots: 4,
        };
        let r = schedule_customer(0, &bg, std::slice::from_ref(&load), &[budget], &grid).unwrap();
        let mut expect = bg.clone();
        expect.add_assign(&load.demanded_profile());
        assert_eq!(r.profile, expect);
        assert!(r.order.is_empty());
    }
}
