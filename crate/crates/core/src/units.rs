//! Unit conversion constants.
//!
//! The simulator works in kW, kWh, °F, minutes and gallons. Everything that
//! crosses between those and BTU lives here.

/// BTU in one kWh.
pub const BTU_PER_KWH: f64 = 3412.14;

/// Watts per kW. EER is defined per watt of electrical input.
pub const WATTS_PER_KW: f64 = 1000.0;

/// BTU/hr in one ton of refrigeration.
pub const BTU_PER_HR_PER_TON: f64 = 12_000.0;

/// Mass of one US gallon of water, in pounds.
pub const WATER_LB_PER_GAL: f64 = 8.33;

/// Energy to raise one gallon of water by 1 °F, in kWh (8.33 BTU).
pub const WATER_KWH_PER_GAL_F: f64 = WATER_LB_PER_GAL / BTU_PER_KWH;

pub const MINUTES_PER_DAY: u32 = 1440;
pub const MINUTES_PER_HOUR: f64 = 60.0;

/// Absolute tolerance for comparing temperatures against a deviation bound.
pub const TEMP_TOL_F: f64 = 1e-9;

/// Absolute tolerance for comparing aggregated power values.
pub const POWER_TOL_KW: f64 = 1e-9;

/// Converts a thermal rate in BTU/hr to kW.
pub fn btu_per_hr_to_kw(btu_per_hr: f64) -> f64 {
    btu_per_hr / BTU_PER_KWH
}

pub fn kw_to_btu_per_hr(kw: f64) -> f64 {
    kw * BTU_PER_KWH
}

pub fn btu_per_hr_to_tons(btu_per_hr: f64) -> f64 {
    btu_per_hr / BTU_PER_HR_PER_TON
}
