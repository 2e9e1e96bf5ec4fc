use super::params::SystemParams;
use super::schedule::{arrival_failures, service_failures};
use super::sim::{check_inputs, run_server, SimulationResult, TrajectoryFrame};
use crate::error::{Error, Result};
use crate::initcond::{sample_initial, InitialConditionSpec};
use crate::rng::{StreamKey, Substream};

/// Simulates one replication on the scaled clock `t -> floor(t N^(1+2c) ln N)`.
///
/// Service failures are streamed per server and never stored, so memory is
/// linear in the number of arrival failures. The realisation equals
/// `simulate_events` on `generate_schedule(params, last_slot, key)`.
pub fn simulate_scaled(
    params: &SystemParams,
    t_grid: &[f64],
    init_spec: &InitialConditionSpec,
    key: &StreamKey,
    per_server: bool,
) -> Result<SimulationResult> {
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::arg("t_grid", "must be sorted"));
    }
    let slots = t_grid.iter().map(|&t| params.slot_for(t)).collect::<Result<Vec<_>>>()?;
    let horizon = slots.last().copied().unwrap_or(0);
    let init = sample_initial(init_spec, params.n_servers, &mut key.stream(Substream::InitialCondition))?;
    check_inputs(params, horizon, &init, &slots)?;

    let arrivals: Vec<u64> = arrival_failures(params, horizon, key).collect();
    let mut max = vec![0u64; slots.len()];
    let mut rows = Vec::new();
    let mut events = 0u64;
    for (i, &q0) in init.iter().enumerate() {
        let mut row = vec![0u64; if per_server { slots.len() } else { 0 }];
        events += run_server(q0, &arrivals, service_failures(params, horizon, key, i), &slots, |k, q| {
            max[k] = max[k].max(q);
            if per_server {
                row[k] = q;
            }
        });
        if per_server {
            rows.push(row);
        }
    }
    let frames = t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| TrajectoryFrame {
            scaled_time: t,
            slot: slots[k],
            raw_max_queue: max[k],
            scaled_max_queue: params.scale_queue(max[k]),
            per_server_queues: per_server.then(|| rows.iter().map(|r| r[k]).collect()),
        })
        .collect();
    Ok(SimulationResult {
        frames,
        params: *params,
        seed_info: Some(*key),
        init_snapshot: init,
        event_count: events,
    })
}
