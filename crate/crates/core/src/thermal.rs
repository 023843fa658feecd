//! Thermal models for power-throttled thermostat loads.
//!
//! A thermostat load with `K` states draws `(k-1)/(K-1)` of its rated power
//! in state `k`. Given the power drawn in each slot, the models below advance
//! room temperature (AC) or tank water temperature (WH) one slot at a time.
//!
//! Sign convention: cooling capacity lowers room temperature, so the AC step
//! subtracts it from the heat gain.

use serde::{Deserialize, Serialize};

use crate::community::{StateMatrix, ThermostatLoad};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::units::{btu_per_hr_to_kw, MINUTES_PER_HOUR, WATER_KWH_PER_GAL_F, WATTS_PER_KW};

/// Lowest EER allowed for an AC unit.
pub const MIN_EER: f64 = 8.0;

/// Power drawn in state `k` (1-based) of a `states`-state device.
pub fn throttle_power(k: usize, states: usize, rated_kw: f64) -> Result<f64> {
    if states < 2 {
        return Err(Error::InvalidModel(format!(
            "a throttled device needs at least 2 states, got {states}"
        )));
    }
    if k == 0 || k > states {
        return Err(Error::InvalidModel(format!("state {k} outside 1..={states}")));
    }
    Ok((k - 1) as f64 / (states - 1) as f64 * rated_kw)
}

/// Cooling capacity in BTU/hr for `q_kw` of electrical input.
pub fn cooling_capacity(eer: f64, q_kw: f64) -> f64 {
    eer * q_kw * WATTS_PER_KW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcParams {
    /// Energy needed to raise the room by 1 °F.
    pub alpha_kwh_per_f: f64,
    pub eer: f64,
    /// Heat gain rate of the house per slot, kW.
    pub heat_gain_kw: Vec<f64>,
}

impl AcParams {
    /// Parameters whose heat gain exactly cancels full-power cooling inside
    /// the demand window, so full-power operation holds the set point. The
    /// gain is zero outside the window.
    pub fn calibrated(alpha_kwh_per_f: f64, eer: f64, rated_kw: f64, demand: &[bool]) -> Result<Self> {
        let mut params = Self {
            alpha_kwh_per_f,
            eer,
            heat_gain_kw: Vec::new(),
        };
        params.check()?;
        let full = params.cooling_kw(rated_kw);
        params.heat_gain_kw = demand.iter().map(|&d| if d { full } else { 0.0 }).collect();
        Ok(params)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.alpha_kwh_per_f.is_finite() && self.alpha_kwh_per_f > 0.0) {
            return Err(Error::InvalidModel(format!(
                "alpha must be positive, got {}",
                self.alpha_kwh_per_f
            )));
        }
        if !(self.eer.is_finite() && self.eer >= MIN_EER) {
            return Err(Error::InvalidModel(format!(
                "EER must be at least {MIN_EER}, got {}",
                self.eer
            )));
        }
        Ok(())
    }

    pub fn cooling_capacity(&self, q_kw: f64) -> f64 {
        cooling_capacity(self.eer, q_kw)
    }

    /// Cooling capacity as a thermal rate in kW.
    pub fn cooling_kw(&self, q_kw: f64) -> f64 {
        btu_per_hr_to_kw(self.cooling_capacity(q_kw))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhParams {
    pub tank_volume_gal: f64,
    pub tank_area_ft2: f64,
    /// Thermal resistance of the tank wall, h·ft²·°F/BTU.
    pub tank_resistance: f64,
    pub inlet_temp_f: f64,
    /// Hot water draw per slot as a rate, gal/min.
    pub flow_gal_per_min: Vec<f64>,
    pub ambient_temp_f: Vec<f64>,
    /// Heat needed to raise one gallon by 1 °F, kWh.
    pub water_heat_kwh_per_gal_f: f64,
}

/// Tank geometry and water supply, before a draw profile is attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TankSpec {
    pub volume_gal: f64,
    pub area_ft2: f64,
    pub resistance: f64,
    pub inlet_temp_f: f64,
    pub ambient_temp_f: f64,
    pub water_heat_kwh_per_gal_f: f64,
}

impl Default for TankSpec {
    fn default() -> Self {
        Self {
            volume_gal: 60.0,
            area_ft2: 30.0,
            resistance: 12.0,
            inlet_temp_f: 55.0,
            ambient_temp_f: 70.0,
            water_heat_kwh_per_gal_f: WATER_KWH_PER_GAL_F,
        }
    }
}

impl WhParams {
    /// Parameters whose hot-water draw inside the demand window exactly
    /// absorbs full heating power at the set point (net of standing loss).
    /// No water is drawn outside the window.
    pub fn calibrated(
        tank: TankSpec,
        rated_kw: f64,
        set_point_f: f64,
        demand: &[bool],
        grid: &TimeGrid,
    ) -> Result<Self> {
        let mut params = Self {
            tank_volume_gal: tank.volume_gal,
            tank_area_ft2: tank.area_ft2,
            tank_resistance: tank.resistance,
            inlet_temp_f: tank.inlet_temp_f,
            flow_gal_per_min: vec![0.0; demand.len()],
            ambient_temp_f: vec![tank.ambient_temp_f; demand.len()],
            water_heat_kwh_per_gal_f: tank.water_heat_kwh_per_gal_f,
        };
        if set_point_f <= tank.inlet_temp_f {
            return Err(Error::InvalidModel(format!(
                "water heater set point {set_point_f} F must exceed inlet temperature {} F",
                tank.inlet_temp_f
            )));
        }
        let loss = params.standing_loss_kw(set_point_f, tank.ambient_temp_f);
        if loss >= rated_kw {
            return Err(Error::InvalidModel(format!(
                "standing loss {loss:.3} kW at set point exceeds rated power {rated_kw} kW"
            )));
        }
        let dt_min = grid.dt_minutes();
        let draw_gal = (rated_kw - loss) * (dt_min / MINUTES_PER_HOUR)
            / (params.water_heat_kwh_per_gal_f * (set_point_f - tank.inlet_temp_f));
        let rate = draw_gal / dt_min;
        for (f, &d) in params.flow_gal_per_min.iter_mut().zip(demand) {
            if d {
                *f = rate;
            }
        }
        params.check(grid)?;
        Ok(params)
    }

    pub fn check(&self, grid: &TimeGrid) -> Result<()> {
        for (name, v) in [
            ("tank volume", self.tank_volume_gal),
            ("tank area", self.tank_area_ft2),
            ("tank resistance", self.tank_resistance),
            ("water heat constant", self.water_heat_kwh_per_gal_f),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive, got {v}")));
            }
        }
        let dt = grid.dt_minutes();
        for (t, f) in self.flow_gal_per_min.iter().enumerate() {
            if *f < 0.0 || f * dt > self.tank_volume_gal {
                return Err(Error::InvalidModel(format!(
                    "slot {t}: draw of {} gal exceeds the {} gal tank",
                    f * dt,
                    self.tank_volume_gal
                )));
            }
        }
        Ok(())
    }

    /// Heat lost through the tank wall, kW.
    pub fn standing_loss_kw(&self, water_f: f64, ambient_f: f64) -> f64 {
        btu_per_hr_to_kw(self.tank_area_ft2 * (water_f - ambient_f) / self.tank_resistance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalModel {
    Ac(AcParams),
    Wh(WhParams),
}

/// Room temperature after one slot. `demanded` gates the cooling term.
pub fn ac_step(theta_f: f64, q_kw: f64, params: &AcParams, slot: usize, demanded: bool, dt_hours: f64) -> f64 {
    let cooling = if demanded { params.cooling_kw(q_kw) } else { 0.0 };
    theta_f + dt_hours * (params.heat_gain_kw[slot] - cooling) / params.alpha_kwh_per_f
}

/// Tank water temperature after one slot: mixing with inlet water, electric
/// heating, standing loss.
pub fn wh_step(theta_f: f64, q_kw: f64, params: &WhParams, slot: usize, dt_minutes: f64) -> f64 {
    let v = params.tank_volume_gal;
    let draw = params.flow_gal_per_min[slot] * dt_minutes;
    let mixed = (theta_f * (v - draw) + params.inlet_temp_f * draw) / v;
    let loss = params.standing_loss_kw(theta_f, params.ambient_temp_f[slot]);
    mixed + (q_kw - loss) * (dt_minutes / MINUTES_PER_HOUR) / (params.water_heat_kwh_per_gal_f * v)
}

/// Output temperature of `load` in every slot when operated per `states`.
///
/// Entry `t` is the temperature at the end of slot `t`. At the start of each
/// contiguous demand segment the temperature is reset to `initial_f`; outside
/// demand the device draws nothing.
pub fn simulate_temperature(load: &ThermostatLoad, states: &StateMatrix, initial_f: f64, grid: &TimeGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    simulate_into(load, states, initial_f, grid, &mut out);
    out
}

pub(crate) fn simulate_into(
    load: &ThermostatLoad,
    states: &StateMatrix,
    initial_f: f64,
    grid: &TimeGrid,
    out: &mut Vec<f64>,
) {
    out.clear();
    let dt_min = grid.dt_minutes();
    let dt_h = grid.dt_hours();
    let demand = load.windows.mask();
    let mut theta = initial_f;
    for t in 0..grid.len() {
        let demanded = demand[t];
        if demanded && (t == 0 || !demand[t - 1]) {
            theta = initial_f;
        }
        let q = match states.state(t) {
            Some(k) if demanded => load.power_at_state(k),
            _ => 0.0,
        };
        theta = match &load.thermal {
            ThermalModel::Ac(p) => ac_step(theta, q, p, t, demanded, dt_h),
            ThermalModel::Wh(p) => wh_step(theta, q, p, t, dt_min),
        };
        out.push(theta);
    }
}
