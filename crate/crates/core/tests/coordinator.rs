use peakplan::community::{build_thermostat, DemandWindows, ShiftableLoad, ThermalModelSpec};
use peakplan::coordinator::{CustomerOrder, Direction, EvaluationOptions, Phase, PhaseOrder};
use peakplan::plan::{LoadClassId, PlanTerm, ShiftablePlanTerm, ThermostatPlanTerm};
use peakplan::thermal::TankSpec;
use peakplan::units::POWER_TOL_KW;
use peakplan::{
    evaluate_plan, generate_community, Community, CommunityConfig, Customer, EngagementPlan, LoadCurve, LoadProfile,
    TimeGrid,
};

fn shift_term(minutes: u32) -> PlanTerm {
    PlanTerm::Shiftable(ShiftablePlanTerm {
        max_delay_minutes: minutes,
    })
}

fn cdp_plan(delay: u32, duration: u32, dev: f64, ac_ref: f64, wh_ref: f64) -> EngagementPlan {
    EngagementPlan::new([
        (LoadClassId::shiftable("CD"), shift_term(delay)),
        (LoadClassId::shiftable("DW"), shift_term(delay)),
        (
            LoadClassId::cooling("AC"),
            PlanTerm::Thermostat(ThermostatPlanTerm::cdp(duration, dev, ac_ref)),
        ),
        (
            LoadClassId::heating("WH"),
            PlanTerm::Thermostat(ThermostatPlanTerm::cdp(duration, dev, wh_ref)),
        ),
    ])
    .unwrap()
}

fn community(homes: usize, slots: usize, seed: u64) -> Community {
    let grid = TimeGrid::new(slots).unwrap();
    generate_community(
        &CommunityConfig::with_default_devices(homes),
        &LoadCurve::bundled(),
        grid,
        seed,
    )
    .unwrap()
}

fn cd(start: usize, duration: usize, kw: f64) -> ShiftableLoad {
    ShiftableLoad {
        class: LoadClassId::shiftable("CD"),
        rated_kw: kw,
        duration_slots: duration,
        preferred_start_slot: start,
    }
}

#[test]
fn three_customer_hand_fold() {
    // Two-hour slots. Every customer demands a 2 kW run at midnight for two
    // slots and may wait up to two slots.
    let grid = TimeGrid::new(12).unwrap();
    let customers = (0..3)
        .map(|id| Customer {
            id,
            base_load: LoadProfile::zeros(12),
            shiftables: vec![cd(0, 2, 2.0)],
            thermostats: Vec::new(),
        })
        .collect();
    let c = Community::new(grid, customers).unwrap();
    let plan = EngagementPlan::new([(LoadClassId::shiftable("CD"), shift_term(240))]).unwrap();
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    // First customer sees 4 kW left behind and moves clear of it. The other
    // two then tie across every delay and keep their preferred start.
    let delays: Vec<usize> = e.report.customers.iter().map(|r| r.shiftables[0].delay_slots).collect();
    assert_eq!(delays, vec![2, 0, 0]);
    let mut expected = [0.0; 12];
    expected[..4].copy_from_slice(&[4.0, 4.0, 2.0, 2.0]);
    assert_eq!(e.report.profiles.after_shiftable.values(), &expected[..]);
    assert_eq!(e.report.peak_before_kw, 6.0);
    assert_eq!(e.report.final_peak_kw, 4.0);
}

#[test]
fn single_customer_matches_direct_scheduler_calls() {
    let c = community(1, 96, 3);
    let plan = cdp_plan(120, 60, 4.0, 80.0, 100.0);
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    let cu = &c.customers[0];
    let slots = 96;

    let mut bg = cu.base_load.clone();
    for th in &cu.thermostats {
        bg.add_assign(&th.demanded_profile());
    }
    let delays = vec![120 / 15; cu.shiftables.len()];
    let s = peakplan::shiftable::schedule_customer(0, &bg, &cu.shiftables, &delays).unwrap();
    for i in 0..slots {
        assert!(
            (s.profile[i] - e.report.profiles.after_shiftable[i]).abs() <= POWER_TOL_KW,
            "slot {i}"
        );
    }

    let mut bg = cu.base_load.clone();
    for (i, sh) in cu.shiftables.iter().enumerate() {
        bg.add_assign(&sh.profile_at(sh.preferred_start_slot + s.delays[i], slots));
    }
    let budgets: Vec<_> = cu
        .thermostats
        .iter()
        .map(|th| peakplan::thermostat::DeviceBudget {
            severity: plan
                .thermostat_term(&th.class.name)
                .unwrap()
                .severity(th.set_point_f, th.thermal_kind()),
            duration_slots: 4,
        })
        .collect();
    let t = peakplan::thermostat::schedule_customer(0, &bg, &cu.thermostats, &budgets, &c.grid).unwrap();
    for i in 0..slots {
        assert!(
            (t.profile[i] - e.report.final_profile()[i]).abs() <= POWER_TOL_KW,
            "slot {i}"
        );
    }
}

#[test]
fn ineligible_thermostats_leave_thermostat_phase_inert() {
    let c = community(20, 96, 8);
    // References below every cooling set point and above every heating one.
    let plan = cdp_plan(120, 60, 4.0, 60.0, 130.0);
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    assert_eq!(e.report.profiles.after_thermostat, e.report.profiles.after_shiftable);
    for s in e.report.classes.values() {
        assert_eq!(s.eligible, 0);
        assert_eq!(s.denied_slots, 0);
    }
}

#[test]
fn runs_are_deterministic_and_conserve_shiftable_energy() {
    let c = community(40, 288, 21);
    let plan = cdp_plan(120, 60, 4.0, 78.0, 100.0);
    let a = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    let b = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.trace, b.trace);
    let r = &a.report;
    assert!((r.profiles.after_shiftable.sum() - r.profiles.initial.sum()).abs() <= 1e-9 * r.profiles.initial.sum());
    assert!(r.energy_after_kwh <= r.energy_before_kwh + 1e-9);
    assert!(r.peak_after_shiftable_kw <= r.peak_before_kw + POWER_TOL_KW);
    assert!(r.final_peak_kw <= r.peak_after_shiftable_kw + POWER_TOL_KW);
}

#[test]
fn trace_is_a_chain_of_aggregate_profiles() {
    let c = community(10, 96, 4);
    let plan = cdp_plan(60, 60, 2.0, 78.0, 100.0);
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    assert_eq!(e.trace.len(), 4 * 10);
    for pair in e.trace.windows(2) {
        if pair[0].direction == Direction::ToGrid && pair[0].phase == pair[1].phase {
            assert_eq!(pair[0].profile_digest, pair[1].profile_digest);
        }
    }
    let first = &e.trace[0];
    assert_eq!(first.profile_digest, e.report.profiles.initial.digest());
    let last_shift = e.trace.iter().rfind(|t| t.phase == Phase::Shiftable).unwrap();
    assert_eq!(last_shift.profile_digest, e.report.profiles.after_shiftable.digest());
    let last = e.trace.last().unwrap();
    assert_eq!(last.profile_digest, e.report.final_profile().digest());
    // Nothing but the digest and peak of the aggregate is recorded.
    let json = serde_json::to_value(first).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["customer_id", "direction", "peak", "phase", "profile_digest"]);
}

#[test]
fn phase_order_and_customer_order_variants_stay_feasible() {
    let c = community(30, 96, 9);
    let plan = cdp_plan(120, 60, 4.0, 78.0, 100.0);
    let mut ids: Vec<usize> = c.customers.iter().map(|x| x.id).collect();
    ids.rotate_left(7);
    for customer_order in [
        CustomerOrder::Generation,
        CustomerOrder::Reverse,
        CustomerOrder::Explicit(ids.clone()),
        CustomerOrder::Shuffle { seed: 5 },
    ] {
        for phase_order in [PhaseOrder::ShiftableFirst, PhaseOrder::ThermostatFirst] {
            let e = evaluate_plan(
                &c,
                &plan,
                &EvaluationOptions {
                    customer_order: customer_order.clone(),
                    phase_order,
                },
            )
            .unwrap();
            let r = &e.report;
            assert!(r.final_peak_kw <= r.peak_before_kw + POWER_TOL_KW);
            assert_eq!(r.phase_order, phase_order);
            let visited: Vec<usize> = e
                .trace
                .iter()
                .take(c.customers.len() * 2)
                .step_by(2)
                .map(|t| t.customer_id)
                .collect();
            if let CustomerOrder::Explicit(v) = &customer_order {
                assert_eq!(&visited, v);
            }
        }
    }
    let bad = CustomerOrder::Explicit(vec![0, 0]);
    assert!(evaluate_plan(
        &c,
        &plan,
        &EvaluationOptions {
            customer_order: bad,
            ..Default::default()
        }
    )
    .is_err());
}

#[test]
fn thermostat_records_respect_budgets() {
    let c = community(100, 96, 17);
    let plan = cdp_plan(120, 60, 2.0, 78.0, 100.0);
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    for cu in &e.report.customers {
        for s in &cu.shiftables {
            assert!(s.delay_slots <= s.max_delay_slots);
            assert!(s.start_slot + s.duration_slots <= 96);
        }
        for th in &cu.thermostats {
            assert!(th.denied_slots <= th.duration_budget_slots);
            assert!(th.max_deviation_f <= th.severity_f + 1e-9);
            if !th.eligible {
                assert!(th.throttled.is_empty());
            }
        }
    }
}

#[test]
fn explicit_heater_customer() {
    let grid = TimeGrid::new(24).unwrap();
    let w = DemandWindows::new(vec![(6, 8)], 24).unwrap();
    let wh = build_thermostat(
        "WH",
        2.5,
        5,
        120.0,
        w,
        &ThermalModelSpec::Wh(TankSpec {
            volume_gal: 80.0,
            ..TankSpec::default()
        }),
        &grid,
    )
    .unwrap();
    let c = Community::new(
        grid,
        vec![Customer {
            id: 7,
            base_load: LoadProfile::constant(24, 1.0),
            shiftables: Vec::new(),
            thermostats: vec![wh],
        }],
    )
    .unwrap();
    let plan = EngagementPlan::new([(
        LoadClassId::heating("WH"),
        PlanTerm::Thermostat(ThermostatPlanTerm::pdp(120, 0.5, 100.0)),
    )])
    .unwrap();
    let e = evaluate_plan(&c, &plan, &EvaluationOptions::default()).unwrap();
    let rec = &e.report.customers[0].thermostats[0];
    assert_eq!(rec.severity_f, 10.0);
    assert!(rec.denied_slots <= 2);
    assert!(rec.max_deviation_f <= 10.0);
    // Full power only holds temperature, so the lost heat is never made up
    // and the second slot has to run at rated power.
    assert_eq!(rec.throttled, vec![(6, 2)]);
    assert_eq!(e.report.final_profile()[6], 1.625);
    assert_eq!(e.report.final_peak_kw, 3.5);
}
