//! Greedy peak-minimizing placement of shiftable loads.
//!
//! Each device is tried at every delay within its budget on top of the
//! running profile and left where the resulting peak is smallest. The pass
//! is repeated for every order of the customer's devices and the order with
//! the lowest final peak wins.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::community::ShiftableLoad;
use crate::error::{Error, Result};
use crate::grid::LoadProfile;

/// Largest device count for which every order is enumerated.
pub const MAX_ORDER_DEVICES: usize = 8;

/// Rotates right by one slot: `out[t] = in[t-1 mod T]`.
pub fn circular_shift(profile: &LoadProfile) -> LoadProfile {
    shift_by(profile, 1)
}

/// `delay` applications of [`circular_shift`].
pub fn shift_by(profile: &LoadProfile, delay: usize) -> LoadProfile {
    let mut v = profile.values().to_vec();
    if !v.is_empty() {
        let d = delay % v.len();
        v.rotate_right(d);
    }
    LoadProfile::from_raw(v)
}

fn peak_with(background: &LoadProfile, device: &LoadProfile, delay: usize) -> f64 {
    let n = background.len();
    let bg = background.values();
    let dev = device.values();
    (0..n)
        .map(|t| bg[t] + dev[(t + n - delay % n) % n])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best delay in `0..=max_delay_slots` for `device` (given at its preferred
/// position) on top of `background`, and the combined profile. Ties go to
/// the smallest delay.
pub fn place_device(background: &LoadProfile, device: &LoadProfile, max_delay_slots: usize) -> (usize, LoadProfile) {
    let mut best = (0, peak_with(background, device, 0));
    for l in 1..=max_delay_slots {
        let peak = peak_with(background, device, l);
        if peak < best.1 {
            best = (l, peak);
        }
    }
    let mut out = background.clone();
    out.add_assign(&shift_by(device, best.0));
    (best.0, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    /// Chosen delay per device, in slots, indexed like the input devices.
    pub delays: Vec<usize>,
    /// Winning device order (indexes into the input devices).
    pub order: Vec<usize>,
    /// Peak of `profile`.
    pub peak: f64,
    /// Background plus every device at its chosen start.
    pub profile: LoadProfile,
}

/// One greedy pass over `devices` in the given order.
fn greedy_pass(
    background: &LoadProfile,
    devices: &[LoadProfile],
    max_delays: &[usize],
    order: &[usize],
) -> (Vec<usize>, LoadProfile) {
    let mut delays = vec![0; devices.len()];
    let mut y = background.clone();
    for &i in order {
        let (l, next) = place_device(&y, &devices[i], max_delays[i]);
        delays[i] = l;
        y = next;
    }
    (delays, y)
}

/// Schedules one customer's shiftable devices against `background` (the
/// aggregate with the customer's own shiftables removed).
///
/// Every device order is tried; the lowest final peak wins, ties going to
/// the lexicographically first order.
pub fn schedule_customer(
    customer_id: usize,
    background: &LoadProfile,
    devices: &[ShiftableLoad],
    max_delays: &[usize],
) -> Result<ShiftResult> {
    assert_eq!(devices.len(), max_delays.len());
    if devices.len() > MAX_ORDER_DEVICES {
        return Err(Error::TooManyDevices {
            customer: customer_id,
            what: "shiftable",
            count: devices.len(),
            limit: MAX_ORDER_DEVICES,
        });
    }
    let slots = background.len();
    for (d, &max) in devices.iter().zip(max_delays) {
        debug_assert!(
            d.preferred_start_slot + d.duration_slots + max <= slots,
            "shiftable run would cross midnight"
        );
    }
    let profiles: Vec<LoadProfile> = devices.iter().map(|d| d.demanded_profile(slots)).collect();

    let mut best: Option<ShiftResult> = None;
    for order in (0..devices.len()).permutations(devices.len()) {
        let (delays, profile) = greedy_pass(background, &profiles, max_delays, &order);
        let peak = profile.peak();
        if best.as_ref().is_none_or(|b| peak < b.peak) {
            best = Some(ShiftResult {
                delays,
                order,
                peak,
                profile,
            });
        }
    }
    Ok(best.expect("at least the empty order is enumerated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::LoadClassId;

    fn lp(v: &[f64]) -> LoadProfile {
        LoadProfile::from_raw(v.to_vec())
    }

    #[test]
    fn shift_examples() {
        assert_eq!(circular_shift(&lp(&[1.0, 2.0, 3.0])), lp(&[3.0, 1.0, 2.0]));
        let p = lp(&[1.0, 0.0, 4.0, 2.0]);
        assert_eq!(shift_by(&p, 4), p);
        assert_eq!(circular_shift(&p).sum(), p.sum());
    }

    #[test]
    fn place_device_examples() {
        let (l, out) = place_device(&lp(&[5.0, 1.0, 1.0]), &lp(&[2.0, 0.0, 0.0]), 2);
        assert_eq!(l, 1);
        assert_eq!(out.peak(), 5.0);
        assert_eq!(out, lp(&[5.0, 3.0, 1.0]));

        let (l, out) = place_device(&lp(&[0.0, 3.0, 0.0]), &lp(&[0.0, 2.0, 0.0]), 0);
        assert_eq!(l, 0);
        assert_eq!(out, lp(&[0.0, 5.0, 0.0]));

        let (l, _) = place_device(&lp(&[1.0; 6]), &lp(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]), 3);
        assert_eq!(l, 0);
    }

    fn dev(power: f64, start: usize, dur: usize) -> ShiftableLoad {
        ShiftableLoad {
            class: LoadClassId::shiftable("X"),
            rated_kw: power,
            duration_slots: dur,
            preferred_start_slot: start,
        }
    }

    #[test]
    fn single_device_matches_place_device() {
        let bg = lp(&[1.0, 4.0, 1.0, 0.0, 0.0, 2.0]);
        let d = dev(2.0, 1, 2);
        let r = schedule_customer(0, &bg, &[d.clone()], &[3]).unwrap();
        let (l, out) = place_device(&bg, &d.demanded_profile(6), 3);
        assert_eq!(r.delays, vec![l]);
        assert_eq!(r.profile, out);
    }

    #[test]
    fn no_devices_returns_background() {
        let bg = lp(&[1.0, 2.0]);
        let r = schedule_customer(0, &bg, &[], &[]).unwrap();
        assert_eq!(r.profile, bg);
        assert!(r.delays.is_empty());
    }

    #[test]
    fn order_matters_and_best_order_wins() {
        // Device 0 alone prefers slot 0; placed first it blocks device 1,
        // which can only sit at slot 0 or 1.
        let bg = lp(&[0.0, 0.0, 1.0, 0.0]);
        let a = dev(1.0, 0, 1);
        let b = dev(1.0, 0, 2);
        let r = schedule_customer(0, &bg, &[a, b], &[3, 1]).unwrap();
        assert_eq!(r.peak, 1.0);
        assert_eq!(r.profile.sum(), bg.sum() + 3.0);
    }

    #[test]
    fn too_many_devices_rejected() {
        let bg = LoadProfile::zeros(40);
        let devs: Vec<_> = (0..9).map(|i| dev(1.0, i, 1)).collect();
        let err = schedule_customer(3, &bg, &devs, &[0; 9]).unwrap_err();
        assert!(matches!(
            err,
            Error::TooManyDevices {
                customer: 3,
                count: 9,
                ..
            }
        ));
    }
}
