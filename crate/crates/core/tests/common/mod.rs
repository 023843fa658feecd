//! Independent reference searches and instance generators shared by the
//! integration tests. Nothing here calls the schedulers under test.

#![allow(dead_code)]

use peakplan::community::{
    build_thermostat, DemandWindows, ShiftableLoad, StateMatrix, ThermalModelSpec, ThermostatLoad,
};
use peakplan::plan::LoadClassId;
use peakplan::thermal::{ac_step, wh_step, TankSpec, ThermalModel};
use peakplan::TimeGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A shiftable device in oracle terms.
#[derive(Debug, Clone, Copy)]
pub struct Job {
    pub power: f64,
    pub start: usize,
    pub duration: usize,
    pub max_delay: usize,
}

impl Job {
    pub fn load(&self, class: &str) -> ShiftableLoad {
        ShiftableLoad {
            class: LoadClassId::shiftable(class),
            rated_kw: self.power,
            duration_slots: self.duration,
            preferred_start_slot: self.start,
        }
    }
}

fn peak_of(background: &[f64], jobs: &[Job], delays: &[usize]) -> f64 {
    let mut y = background.to_vec();
    for (j, &d) in jobs.iter().zip(delays) {
        for t in j.start + d..j.start + d + j.duration {
            y[t] += j.power;
        }
    }
    y.into_iter().fold(0.0, f64::max)
}

/// Smallest peak over every combination of delays.
pub fn joint_optimum(background: &[f64], jobs: &[Job]) -> f64 {
    let mut delays = vec![0; jobs.len()];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(peak_of(background, jobs, &delays));
        let mut i = 0;
        loop {
            if i == jobs.len() {
                return best;
            }
            if delays[i] < jobs[i].max_delay {
                delays[i] += 1;
                break;
            }
            delays[i] = 0;
            i += 1;
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Places jobs one at a time in `order`, each at the delay giving the
/// lowest running peak (earliest on ties), and returns the final peak,
/// minimized over all orders.
pub fn sequential_optimum(background: &[f64], jobs: &[Job]) -> f64 {
    let mut best = f64::INFINITY;
    for order in permutations(jobs.len()) {
        let mut y = background.to_vec();
        for &i in &order {
            let j = jobs[i];
            let mut pick = (0, f64::INFINITY);
            for d in 0..=j.max_delay {
                let mut z = y.clone();
                for t in j.start + d..j.start + d + j.duration {
                    z[t] += j.power;
                }
                let p = z.iter().copied().fold(0.0, f64::max);
                if p < pick.1 {
                    pick = (d, p);
                }
            }
            for t in j.start + pick.0..j.start + pick.0 + j.duration {
                y[t] += j.power;
            }
        }
        best = best.min(y.iter().copied().fold(0.0, f64::max));
    }
    best
}

/// One tiny shiftable community: per customer a base profile and jobs.
#[derive(Debug, Clone)]
pub struct TinyShiftCase {
    pub slots: usize,
    pub customers: Vec<(Vec<f64>, Vec<Job>)>,
}

/// T in 4..=12, 1-2 customers with 1-2 jobs each, powers on a 0.5 kW
/// lattice, durations 1-3, delay budgets 0-3 clipped so no run crosses
/// midnight, base loads on a 0.5 kW lattice up to 5 kW.
pub fn tiny_shift_case(seed: u64) -> TinyShiftCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = rng.random_range(4..=12);
    let n_customers = rng.random_range(1..=2);
    let customers = (0..n_customers)
        .map(|_| {
            let base: Vec<f64> = (0..slots)
                .map(|_| f64::from(rng.random_range(0..=10u8)) * 0.5)
                .collect();
            let n_jobs = rng.random_range(1..=2);
            let jobs = (0..n_jobs)
                .map(|_| {
                    let duration = rng.random_range(1..=3usize);
                    let start = rng.random_range(0..=slots - duration);
                    let room = slots - duration - start;
                    Job {
                        power: f64::from(rng.random_range(1..=8u8)) * 0.5,
                        start,
                        duration,
                        max_delay: rng.random_range(0..=3usize).min(room),
                    }
                })
                .collect();
            (base, jobs)
        })
        .collect();
    TinyShiftCase { slots, customers }
}

/// Every state matrix over the demanded slots that keeps at most
/// `duration` slots below full power and within `severity`, returning the
/// smallest peak of `background` plus the device.
pub fn exhaustive_thermostat(
    background: &[f64],
    load: &ThermostatLoad,
    severity: f64,
    duration: usize,
    grid: &TimeGrid,
) -> Option<f64> {
    let slots: Vec<usize> = load.windows.slots().collect();
    let k = load.num_states;
    let total = k.pow(slots.len() as u32);
    let mut best: Option<f64> = None;
    for code in 0..total {
        let mut c = code;
        let mut states = StateMatrix::full_power(&load.windows, k);
        for &t in &slots {
            states.set(t, c % k + 1);
            c /= k;
        }
        if !feasible(load, &states, severity, duration, grid) {
            continue;
        }
        let mut peak: f64 = 0.0;
        for (t, b) in background.iter().enumerate() {
            let p = match states.state(t) {
                Some(s) => (s - 1) as f64 / (k - 1) as f64 * load.rated_kw,
                None => 0.0,
            };
            peak = peak.max(b + p);
        }
        best = Some(best.map_or(peak, |b: f64| b.min(peak)));
    }
    best
}

/// End-of-slot temperatures over demanded slots, restarting each demand
/// segment from the set point. Non-demanded slots read as the set point.
pub fn demanded_temperatures(load: &ThermostatLoad, states: &StateMatrix, grid: &TimeGrid) -> Vec<f64> {
    let mut out = vec![load.set_point_f; grid.len()];
    let mut theta = load.set_point_f;
    for t in 0..grid.len() {
        if !load.windows.contains(t) {
            continue;
        }
        if t == 0 || !load.windows.contains(t - 1) {
            theta = load.set_point_f;
        }
        let k = states.state(t).expect("demanded slots carry a state");
        let q = (k - 1) as f64 / (load.num_states - 1) as f64 * load.rated_kw;
        theta = match &load.thermal {
            ThermalModel::Ac(p) => ac_step(theta, q, p, t, true, grid.dt_hours()),
            ThermalModel::Wh(p) => wh_step(theta, q, p, t, grid.dt_minutes()),
        };
        out[t] = theta;
    }
    out
}

/// Duration and severity budgets, checked slot by slot.
pub fn feasible(load: &ThermostatLoad, states: &StateMatrix, severity: f64, duration: usize, grid: &TimeGrid) -> bool {
    let k = load.num_states;
    let denied = load.windows.slots().filter(|&t| states.state(t) != Some(k)).count();
    let temps = demanded_temperatures(load, states, grid);
    denied <= duration
        && load
            .windows
            .slots()
            .all(|t| (temps[t] - load.set_point_f).abs() <= severity + peakplan::units::TEMP_TOL_F)
}

/// Two-state device with enough severity that any OFF pattern is allowed:
/// switch off on the `duration` highest background slots (earliest first on
/// ties) and report the resulting peak.
pub fn on_off_peak(background: &[f64], window: &[usize], rated_kw: f64, duration: usize) -> f64 {
    let mut ranked = window.to_vec();
    ranked.sort_by(|&a, &b| background[b].partial_cmp(&background[a]).unwrap().then(a.cmp(&b)));
    let off: Vec<usize> = ranked.into_iter().take(duration).collect();
    background
        .iter()
        .enumerate()
        .map(|(t, b)| {
            if window.contains(&t) && !off.contains(&t) {
                b + rated_kw
            } else {
                *b
            }
        })
        .fold(0.0, f64::max)
}

/// Tiny thermostat case: one device with a window of at most 6 slots on a
/// 24-slot day.
#[derive(Debug, Clone)]
pub struct TinyThermoCase {
    pub grid: TimeGrid,
    pub background: Vec<f64>,
    pub load: ThermostatLoad,
    pub severity: f64,
    pub duration: usize,
}

pub fn tiny_thermo_case(seed: u64, states: usize) -> TinyThermoCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::new(24).unwrap();
    let len = rng.random_range(1..=6usize);
    let start = rng.random_range(0..=24 - len);
    let windows = DemandWindows::new(vec![(start, start + len)], 24).unwrap();
    let background: Vec<f64> = (0..24).map(|_| f64::from(rng.random_range(0..=12u8)) * 0.5).collect();
    let cooling = rng.random_bool(0.5);
    let (class, rated, set_point, spec) = if cooling {
        (
            "AC",
            5.0,
            f64::from(rng.random_range(68..=76u8)),
            ThermalModelSpec::Ac {
                alpha_kwh_per_f: rng.random_range(0.5..3.0),
                eer: 10.0,
            },
        )
    } else {
        (
            "WH",
            2.5,
            f64::from(rng.random_range(104..=120u8)),
            ThermalModelSpec::Wh(TankSpec {
                volume_gal: rng.random_range(25.0..60.0),
                ..TankSpec::default()
            }),
        )
    };
    let load = build_thermostat(class, rated, states, set_point, windows, &spec, &grid).unwrap();
    TinyThermoCase {
        grid,
        background,
        load,
        severity: f64::from(rng.random_range(1..=16u8)) * 0.5,
        duration: rng.random_range(0..=len),
    }
}
