//! Checks for the engagement constraints on final schedules.
//!
//! * shift: `0 <= start - preferred <= max delay`
//! * one state: every demanded slot runs in exactly one state
//! * duration: demanded slots below full power stay within the budget
//! * severity: output temperature stays within the severity of the set point
//!   on every demanded slot
//!
//! Temperatures are re-simulated from the state matrix, not taken from the
//! scheduler's own bookkeeping.

use crate::community::{ShiftableLoad, StateMatrix, ThermostatLoad};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::thermal::simulate_temperature;
use crate::units::TEMP_TOL_F;

pub fn check_shift(
    customer: usize,
    load: &ShiftableLoad,
    start_slot: usize,
    max_delay_slots: usize,
    slots: usize,
) -> Result<()> {
    let violation = |detail: String| Error::ConstraintViolation {
        constraint: "shift delay",
        customer,
        device: load.class.name.clone(),
        slot: start_slot,
        detail,
    };
    if start_slot < load.preferred_start_slot {
        return Err(violation(format!(
            "starts before preferred slot {}",
            load.preferred_start_slot
        )));
    }
    let delay = start_slot - load.preferred_start_slot;
    if delay > max_delay_slots {
        return Err(violation(format!("delay {delay} exceeds budget {max_delay_slots}")));
    }
    if start_slot + load.duration_slots > slots {
        return Err(violation("run crosses midnight".into()));
    }
    Ok(())
}

/// Checks the one-state, duration and severity constraints for one device.
pub fn check_thermostat(
    customer: usize,
    load: &ThermostatLoad,
    states: &StateMatrix,
    severity: f64,
    duration_slots: usize,
    grid: &TimeGrid,
) -> Result<()> {
    let device = || load.class.name.clone();
    if states.len() != grid.len() || states.num_states() != load.num_states {
        return Err(Error::ConstraintViolation {
            constraint: "one state",
            customer,
            device: device(),
            slot: 0,
            detail: "state matrix shape does not match the device".into(),
        });
    }
    for t in load.windows.slots() {
        let rows = states.row_sum(t);
        if rows != 1 {
            return Err(Error::ConstraintViolation {
                constraint: "one state",
                customer,
                device: device(),
                slot: t,
                detail: format!("{rows} active states in a demanded slot"),
            });
        }
    }
    let denied: Vec<usize> = load
        .windows
        .slots()
        .filter(|&t| !states.entry(t, load.num_states))
        .collect();
    if denied.len() > duration_slots {
        return Err(Error::ConstraintViolation {
            constraint: "inconvenience duration",
            customer,
            device: device(),
            slot: denied[duration_slots],
            detail: format!("{} slots below full power, budget {duration_slots}", denied.len()),
        });
    }
    let temps = simulate_temperature(load, states, load.set_point_f, grid);
    for t in load.windows.slots() {
        let dev = (temps[t] - load.set_point_f).abs();
        if dev > severity + TEMP_TOL_F {
            return Err(Error::ConstraintViolation {
                constraint: "inconvenience severity",
                customer,
                device: device(),
                slot: t,
                detail: format!("deviation {dev:.6} F exceeds severity {severity:.6} F"),
            });
        }
    }
    Ok(())
}
