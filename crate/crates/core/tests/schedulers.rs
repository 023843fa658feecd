mod common;

use common::{
    exhaustive_thermostat, joint_optimum, on_off_peak, sequential_optimum, tiny_shift_case, tiny_thermo_case, Job,
};
use peakplan::community::{build_thermostat, DemandWindows, StateMatrix, ThermalModelSpec};
use peakplan::constraints::{check_shift, check_thermostat};
use peakplan::grid::LoadProfile;
use peakplan::shiftable::{self, circular_shift, place_device, shift_by};
use peakplan::thermostat::{self, control_device, find_local_peaks, DeviceBudget};
use peakplan::TimeGrid;
use proptest::prelude::*;

fn lp(v: &[f64]) -> LoadProfile {
    LoadProfile::new(v.to_vec()).unwrap()
}

#[test]
fn greedy_can_miss_the_joint_optimum() {
    // Either order places the 2 kW run first or second and still ends at
    // 3.5 kW; delaying the 1 kW run by two slots and the 2 kW run by one
    // reaches 3.0 kW.
    let bg = [1.0, 0.5, 0.0, 0.5];
    let jobs = [
        Job {
            power: 2.0,
            start: 0,
            duration: 3,
            max_delay: 1,
        },
        Job {
            power: 1.0,
            start: 0,
            duration: 2,
            max_delay: 2,
        },
    ];
    let loads: Vec<_> = jobs.iter().map(|j| j.load("X")).collect();
    let r = shiftable::schedule_customer(0, &lp(&bg), &loads, &[1, 2]).unwrap();
    assert_eq!(r.peak, 3.5);
    assert_eq!(sequential_optimum(&bg, &jobs), 3.5);
    assert_eq!(joint_optimum(&bg, &jobs), 3.0);
}

#[test]
fn shiftable_matches_sequential_oracle_and_bounds_joint_optimum() {
    for seed in 0..500 {
        let case = tiny_shift_case(seed);
        let mut aggregate = vec![0.0; case.slots];
        for (base, jobs) in &case.customers {
            for (t, b) in base.iter().enumerate() {
                aggregate[t] += b;
            }
            for j in jobs {
                for t in j.start..j.start + j.duration {
                    aggregate[t] += j.power;
                }
            }
        }
        for (cid, (_, jobs)) in case.customers.iter().enumerate() {
            let mut bg = aggregate.clone();
            for j in jobs {
                for t in j.start..j.start + j.duration {
                    bg[t] -= j.power;
                }
            }
            let loads: Vec<_> = jobs.iter().map(|j| j.load("X")).collect();
            let delays: Vec<_> = jobs.iter().map(|j| j.max_delay).collect();
            let r = shiftable::schedule_customer(cid, &lp(&bg), &loads, &delays).unwrap();
            let seq = sequential_optimum(&bg, jobs);
            let opt = joint_optimum(&bg, jobs);
            assert!(
                (r.peak - seq).abs() <= 1e-9,
                "seed {seed} customer {cid}: {} vs {seq}",
                r.peak
            );
            assert!(r.peak >= opt - 1e-9, "seed {seed}: heuristic below optimum");
            for (i, l) in loads.iter().enumerate() {
                check_shift(cid, l, l.preferred_start_slot + r.delays[i], delays[i], case.slots).unwrap();
            }
            aggregate = r.profile.into_values();
        }
    }
}

#[test]
fn place_device_worked_examples() {
    let (l, out) = place_device(&lp(&[5.0, 1.0, 1.0]), &lp(&[2.0, 0.0, 0.0]), 2);
    assert_eq!((l, out), (1, lp(&[5.0, 3.0, 1.0])));
    let (l, out) = place_device(&lp(&[1.0, 1.0, 1.0, 4.0]), &lp(&[3.0, 3.0, 0.0, 0.0]), 0);
    assert_eq!((l, out), (0, lp(&[4.0, 4.0, 1.0, 4.0])));
}

#[test]
fn local_peaks_order_and_ties() {
    let w = DemandWindows::new(vec![(1, 6)], 8).unwrap();
    let p = lp(&[9.0, 3.0, 5.0, 5.0, 1.0, 4.0, 9.0, 0.0]);
    assert_eq!(find_local_peaks(&p, &w, 3), vec![2, 3, 5]);
    assert_eq!(find_local_peaks(&p, &w, 10).len(), 5);
    assert!(find_local_peaks(&p, &w, 0).is_empty());
}

#[test]
fn thermostat_bounded_by_exhaustive_search() {
    for states in [2, 3] {
        for seed in 0..300 {
            let c = tiny_thermo_case(seed, states);
            let bg = lp(&c.background);
            let r = control_device(0, &bg, &c.load, c.severity, c.duration, &c.grid).unwrap();
            check_thermostat(0, &c.load, &r.states, c.severity, c.duration, &c.grid).unwrap();
            let mut total = bg.clone();
            total.add_assign(&r.profile);
            let opt = exhaustive_thermostat(&c.background, &c.load, c.severity, c.duration, &c.grid)
                .expect("full power is always feasible");
            assert!(
                total.peak() >= opt - 1e-9,
                "K={states} seed {seed}: {} < {opt}",
                total.peak()
            );
        }
    }
}

#[test]
fn two_state_with_slack_matches_on_off_oracle() {
    for seed in 0..300 {
        let mut c = tiny_thermo_case(seed, 2);
        c.severity = 1e6;
        let window: Vec<usize> = c.load.windows.slots().collect();
        let bg = lp(&c.background);
        let r = control_device(0, &bg, &c.load, c.severity, c.duration, &c.grid).unwrap();
        let mut total = bg.clone();
        total.add_assign(&r.profile);
        let oracle = on_off_peak(&c.background, &window, c.load.rated_kw, c.duration);
        assert_eq!(total.peak(), oracle, "seed {seed}");
        assert_eq!(r.escalations, 0);
    }
}

#[test]
fn thermostat_customer_with_ineligible_device_keeps_it_at_full_power() {
    let grid = TimeGrid::new(24).unwrap();
    let w = DemandWindows::new(vec![(10, 14)], 24).unwrap();
    let spec = ThermalModelSpec::Ac {
        alpha_kwh_per_f: 2.0,
        eer: 10.0,
    };
    let ac = build_thermostat("AC", 5.0, 3, 72.0, w.clone(), &spec, &grid).unwrap();
    let bg = LoadProfile::constant(24, 1.0);
    let r = thermostat::schedule_customer(
        0,
        &bg,
        &[ac.clone(), ac.clone()],
        &[
            DeviceBudget {
                severity: 0.0,
                duration_slots: 4,
            },
            DeviceBudget {
                severity: 100.0,
                duration_slots: 4,
            },
        ],
        &grid,
    )
    .unwrap();
    assert_eq!(r.devices[0].states, StateMatrix::full_power(&w, 3));
    assert_eq!(r.devices[0].profile, ac.demanded_profile());
    assert_eq!(r.devices[1].denied_slots, 4);
    assert_eq!(r.order, vec![1]);
}

proptest! {
    #[test]
    fn circular_shift_preserves_energy_and_period(v in prop::collection::vec(0.0..10.0f64, 1..40), d in 0usize..100) {
        let p = lp(&v);
        let s = shift_by(&p, d);
        prop_assert!((s.sum() - p.sum()).abs() < 1e-9);
        prop_assert_eq!(shift_by(&p, v.len()), p.clone());
        prop_assert_eq!(circular_shift(&shift_by(&p, d)), shift_by(&p, d + 1));
    }

    #[test]
    fn place_device_never_worse_than_no_delay(
        bg in prop::collection::vec(0.0..10.0f64, 12),
        power in 0.5..5.0f64,
        start in 0usize..6,
        dur in 1usize..4,
        max_delay in 0usize..4,
    ) {
        let mut dev = vec![0.0; 12];
        for x in &mut dev[start..start + dur] {
            *x = power;
        }
        let bg = lp(&bg);
        let dev = lp(&dev);
        let (l, out) = place_device(&bg, &dev, max_delay);
        prop_assert!(l <= max_delay);
        let mut undelayed = bg.clone();
        undelayed.add_assign(&dev);
        prop_assert!(out.peak() <= undelayed.peak());
        prop_assert!((out.sum() - undelayed.sum()).abs() < 1e-9);
    }
}
