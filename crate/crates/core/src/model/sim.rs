use serde::{Deserialize, Serialize};

use super::params::SystemParams;
use super::schedule::FailureSchedule;
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// State of the system at one sample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub scaled_time: f64,
    pub slot: u64,
    pub raw_max_queue: u64,
    pub scaled_max_queue: f64,
    pub per_server_queues: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub frames: Vec<TrajectoryFrame>,
    pub params: SystemParams,
    pub seed_info: Option<StreamKey>,
    pub init_snapshot: Vec<u64>,
    /// Slots at which some indicator of a server was zero, summed over servers.
    pub event_count: u64,
}

impl SimulationResult {
    pub fn max_path(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.raw_max_queue).collect()
    }
}

pub(crate) fn check_inputs(params: &SystemParams, horizon: u64, init: &[u64], samples: &[u64]) -> Result<()> {
    if init.len() != params.n_servers {
        return Err(Error::InitLength {
            expected: params.n_servers,
            found: init.len(),
        });
    }
    if samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::arg("sample_slots", "must be sorted"));
    }
    if let Some(&last) = samples.last() {
        if last > horizon {
            return Err(Error::arg(
                "sample_slots",
                format!("slot {last} beyond horizon {horizon}"),
            ));
        }
    }
    Ok(())
}

/// Runs one server through its merged failure events and writes the queue
/// length at each sample slot into `out`. Returns the number of event slots
/// processed up to the last sample.
///
/// Between events both indicators equal one, so the queue is constant;
/// an arrival failure alone lowers the queue by one (reflected at zero), a
/// service failure alone raises it by one, and a coincident pair leaves it
/// unchanged.
#[inline]
pub(crate) fn run_server(
    init: u64,
    arrivals: &[u64],
    mut services: impl Iterator<Item = u64>,
    samples: &[u64],
    mut record: impl FnMut(usize, u64),
) -> u64 {
    let mut q = init;
    let mut ai = 0usize;
    let mut s_next = services.next().unwrap_or(u64::MAX);
    let mut k = 0usize;
    let mut events = 0u64;
    let last = match samples.last() {
        Some(&l) => l,
        None => return 0,
    };
    loop {
        let a_next = arrivals.get(ai).copied().unwrap_or(u64::MAX);
        let next = a_next.min(s_next);
        while k < samples.len() && samples[k] < next {
            record(k, q);
            k += 1;
        }
        if next > last {
            break;
        }
        if a_next == next {
            ai += 1;
            if s_next == next {
                s_next = services.next().unwrap_or(u64::MAX);
            } else {
                q = q.saturating_sub(1);
            }
        } else {
            q += 1;
            s_next = services.next().unwrap_or(u64::MAX);
        }
        events += 1;
    }
    events
}

fn frames_from(
    params: &SystemParams,
    samples: &[u64],
    max: &[u64],
    per_server: Option<Vec<Vec<u64>>>,
) -> Vec<TrajectoryFrame> {
    let clock = params.clock();
    samples
        .iter()
        .enumerate()
        .map(|(k, &slot)| TrajectoryFrame {
            scaled_time: if clock > 0.0 { slot as f64 / clock } else { 0.0 },
            slot,
            raw_max_queue: max[k],
            scaled_max_queue: params.scale_queue(max[k]),
            per_server_queues: per_server.as_ref().map(|m| m.iter().map(|row| row[k]).collect()),
        })
        .collect()
}

/// Slot-by-slot Lindley recursion `Q_i(n) = max(Q_i(n-1) + a_n - s_{i,n}, 0)`.
pub fn simulate_slots(
    params: &SystemParams,
    schedule: &FailureSchedule,
    init: &[u64],
    sample_slots: &[u64],
    per_server: bool,
) -> Result<SimulationResult> {
    schedule.validate()?;
    check_inputs(params, schedule.horizon_slots, init, sample_slots)?;
    if schedule.n_servers() != params.n_servers {
        return Err(Error::arg(
            "schedule",
            format!("has {} servers, params have {}", schedule.n_servers(), params.n_servers),
        ));
    }
    let n = params.n_servers;
    let mut q = init.to_vec();
    let mut a_cur = 0usize;
    let mut s_cur = vec![0usize; n];
    let mut k = 0usize;
    let mut max = vec![0u64; sample_slots.len()];
    let mut rows = vec![vec![0u64; sample_slots.len()]; if per_server { n } else { 0 }];
    let mut events = 0u64;
    let mut record = |k: usize, q: &[u64]| {
        max[k] = q.iter().copied().max().unwrap_or(0);
        if per_server {
            for (row, &v) in rows.iter_mut().zip(q) {
                row[k] = v;
            }
        }
    };
    while k < sample_slots.len() && sample_slots[k] == 0 {
        record(k, &q);
        k += 1;
    }
    let last = sample_slots.last().copied().unwrap_or(0);
    for slot in 1..=last {
        let a_fail = schedule.arrival_failure_slots.get(a_cur) == Some(&slot);
        if a_fail {
            a_cur += 1;
        }
        let a = u64::from(!a_fail);
        for i in 0..n {
            let s_fail = schedule.service_failure_slots[i].get(s_cur[i]) == Some(&slot);
            if s_fail {
                s_cur[i] += 1;
            }
            if a_fail || s_fail {
                events += 1;
            }
            let s = u64::from(!s_fail);
            q[i] = (q[i] + a).saturating_sub(s);
        }
        while k < sample_slots.len() && sample_slots[k] == slot {
            record(k, &q);
            k += 1;
        }
    }
    Ok(SimulationResult {
        frames: frames_from(params, sample_slots, &max, per_server.then_some(rows)),
        params: *params,
        seed_info: None,
        init_snapshot: init.to_vec(),
        event_count: events,
    })
}

/// Event-driven realisation of the same recursion: only slots in the union
/// of failure sets are visited.
pub fn simulate_events(
    params: &SystemParams,
    schedule: &FailureSchedule,
    init: &[u64],
    sample_slots: &[u64],
    per_server: bool,
) -> Result<SimulationResult> {
    schedule.validate()?;
    check_inputs(params, schedule.horizon_slots, init, sample_slots)?;
    if schedule.n_servers() != params.n_servers {
        return Err(Error::arg(
            "schedule",
            format!("has {} servers, params have {}", schedule.n_servers(), params.n_servers),
        ));
    }
    let mut max = vec![0u64; sample_slots.len()];
    let mut rows = Vec::new();
    let mut events = 0u64;
    for (i, &q0) in init.iter().enumerate() {
        let mut row = vec![0u64; if per_server { sample_slots.len() } else { 0 }];
        events += run_server(
            q0,
            &schedule.arrival_failure_slots,
            schedule.service_failure_slots[i].iter().copied(),
            sample_slots,
            |k, q| {
                max[k] = max[k].max(q);
                if per_server {
                    row[k] = q;
                }
            },
        );
        if per_server {
            rows.push(row);
        }
    }
    Ok(SimulationResult {
        frames: frames_from(params, sample_slots, &max, per_server.then_some(rows)),
        params: *params,
        seed_info: None,
        init_snapshot: init.to_vec(),
        event_count: events,
    })
}
