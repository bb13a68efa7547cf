//! Fluid-flow engine: flows drain volume through shared resources at
//! max-min fair rates, recomputed whenever a flow starts or finishes.

use super::SimError;

/// Relative tolerance for treating remaining volume as drained.
const DRAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub resources: Vec<usize>,
    /// Coordinates to push through every resource.
    pub volume: f64,
    /// Fixed delay between draining and completion.
    pub delay: f64,
    /// Flows that must complete before this one starts.
    pub deps: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub start: f64,
    pub drained: f64,
    pub finish: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineRun {
    pub records: Vec<FlowRecord>,
    /// Largest aggregate rate seen on each audit group.
    pub group_peak: Vec<f64>,
    /// Total volume carried by each audit group.
    pub group_volume: Vec<f64>,
    pub completion: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    capacity: Vec<f64>,
    group: Vec<usize>,
    groups: usize,
    flows: Vec<FlowSpec>,
}

/// Max-min fair rates by progressive filling. Flows without resources get an
/// infinite rate.
pub fn max_min_rates(capacity: &[f64], flows: &[Vec<usize>]) -> Vec<f64> {
    let mut rate = vec![0.0; flows.len()];
    let mut frozen: Vec<bool> = flows.iter().map(|r| r.is_empty()).collect();
    for (f, r) in flows.iter().enumerate() {
        if r.is_empty() {
            rate[f] = f64::INFINITY;
        }
    }
    let mut remaining = capacity.to_vec();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); capacity.len()];
    for (f, rs) in flows.iter().enumerate() {
        for &r in rs {
            users[r].push(f);
        }
    }
    loop {
        let mut level = f64::INFINITY;
        for (r, us) in users.iter().enumerate() {
            let live = us.iter().filter(|&&f| !frozen[f]).count();
            if live > 0 {
                level = level.min(remaining[r] / live as f64);
            }
        }
        if level.is_infinite() {
            break;
        }
        let level = level.max(0.0);
        for f in 0..flows.len() {
            if !frozen[f] {
                rate[f] += level;
                for &r in &flows[f] {
                    remaining[r] -= level;
                }
            }
        }
        let mut progressed = false;
        for (r, us) in users.iter().enumerate() {
            if remaining[r] <= 1e-12 * capacity[r] {
                for &f in us {
                    if !frozen[f] {
                        frozen[f] = true;
                        progressed = true;
                    }
                }
            }
        }
        if !progressed {
            break;
        }
    }
    rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Waiting,
    Active(f64),
    Delayed(f64),
    Done,
}

impl Engine {
    /// Engine whose resources report into `groups` audit groups.
    pub fn new(groups: usize) -> Engine {
        Engine { groups, ..Engine::default() }
    }

    pub fn add_resource(&mut self, capacity: f64, group: usize) -> usize {
        assert!(group < self.groups, "audit group out of range");
        self.capacity.push(capacity);
        self.group.push(group);
        self.capacity.len() - 1
    }

    pub fn add_flow(&mut self, spec: FlowSpec) -> usize {
        self.flows.push(spec);
        self.flows.len() - 1
    }

    /// Audit group of every resource.
    pub fn resource_groups(&self) -> &[usize] {
        &self.group
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn run(&self) -> Result<EngineRun, SimError> {
        let nf = self.flows.len();
        let mut state = vec![State::Waiting; nf];
        let mut rec = vec![FlowRecord { start: f64::NAN, drained: f64::NAN, finish: f64::NAN }; nf];
        let mut group_peak = vec![0.0; self.groups];
        let mut group_volume = vec![0.0; self.groups];
        let mut now = 0.0;
        let mut done = 0;
        while done < nf {
            // start every flow whose dependencies completed, settling instant ones
            loop {
                let mut changed = false;
                for f in 0..nf {
                    if state[f] == State::Waiting && self.flows[f].deps.iter().all(|&d| state[d] == State::Done) {
                        rec[f].start = now;
                        state[f] = State::Active(self.flows[f].volume);
                        changed = true;
                    }
                    if let State::Active(left) = state[f] {
                        if left <= 0.0 || self.flows[f].resources.is_empty() {
                            rec[f].drained = now;
                            state[f] = State::Delayed(now + self.flows[f].delay);
                            changed = true;
                        }
                    }
                    if let State::Delayed(until) = state[f] {
                        if until <= now {
                            rec[f].finish = now;
                            state[f] = State::Done;
                            done += 1;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if done == nf {
                break;
            }
            let active: Vec<usize> = (0..nf).filter(|&f| matches!(state[f], State::Active(_))).collect();
            let paths: Vec<Vec<usize>> = active.iter().map(|&f| self.flows[f].resources.clone()).collect();
            let rates = max_min_rates(&self.capacity, &paths);
            let mut dt = f64::INFINITY;
            for (i, &f) in active.iter().enumerate() {
                if let State::Active(left) = state[f] {
                    if rates[i] > 0.0 {
                        dt = dt.min(left / rates[i]);
                    }
                }
            }
            for s in &state {
                if let State::Delayed(until) = *s {
                    dt = dt.min(until - now);
                }
            }
            if !dt.is_finite() {
                return Err(SimError::Deadlock);
            }
            let mut load = vec![0.0; self.groups];
            for (i, &f) in active.iter().enumerate() {
                for &r in &self.flows[f].resources {
                    load[self.group[r]] += rates[i];
                }
            }
            for g in 0..self.groups {
                group_peak[g] = f64::max(group_peak[g], load[g]);
                group_volume[g] += load[g] * dt;
            }
            now += dt;
            for (i, &f) in active.iter().enumerate() {
                if let State::Active(left) = state[f] {
                    let rest = left - rates[i] * dt;
                    let tol = DRAIN_TOL * self.flows[f].volume.max(1.0);
                    state[f] = State::Active(if rest <= tol { 0.0 } else { rest });
                }
            }
            for s in &mut state {
                if let State::Delayed(until) = *s {
                    if until - now <= DRAIN_TOL * now.max(1.0) {
                        *s = State::Delayed(now);
                    }
                }
            }
        }
        let completion = rec.iter().map(|r| r.finish).fold(0.0, f64::max);
        Ok(EngineRun { records: rec, group_peak, group_volume, completion })
    }
}
