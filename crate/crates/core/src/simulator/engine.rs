use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use super::trace::{EventKind, SimTrace, StepPath};
use super::{realize, Servers, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Completion {
    at: f64,
    initial: bool,
}

impl Eq for Completion {}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Completion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.at.total_cmp(&other.at).then(self.initial.cmp(&other.initial))
    }
}

/// Simulates the FCFS queue with `n` servers.
pub fn simulate_gg_n(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    if cfg.servers == Servers::Infinite {
        return Err(SimError::Config("simulate_gg_n needs a finite server count".into()));
    }
    simulate(cfg)
}

/// Simulates the infinite-server queue: every customer enters service on arrival.
pub fn simulate_gg_inf(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    if cfg.servers != Servers::Infinite {
        return Err(SimError::Config("simulate_gg_inf needs the infinite-server flag".into()));
    }
    simulate(cfg)
}

/// Runs the event loop for either server regime.
///
/// Simultaneous events form one composite event: completions at the epoch
/// are counted first, arrivals join the queue, and then customers are
/// admitted from the head of the queue while servers are free. A customer
/// with zero service requirement passes through without occupying a
/// server, so admission continues past it; it stops as soon as the freed
/// servers are refilled by customers with positive requirement.
pub fn simulate(cfg: &SimConfig) -> Result<SimTrace, SimError> {
    let real = realize(cfg)?;
    let horizon = cfg.horizon;
    let capacity = cfg.servers.count();

    let mut busy: Busy = BinaryHeap::new();
    let mut qtilde = 0i64;
    for &r in &real.residuals {
        if r > 0.0 {
            busy.push(Reverse(Completion { at: r, initial: true }));
            qtilde += 1;
        }
    }
    // waiting customers, identified by their index into `real.services`
    let mut queue: VecDeque<usize> = (0..cfg.queued0).collect();
    let mut next_customer = cfg.queued0;
    let mut next_arrival = 0usize;

    let mut tau = Vec::with_capacity(real.services.len());
    let mut served = Vec::with_capacity(real.services.len());
    let mut in_system = cfg.q0() as i64 - (real.residuals.len() as i64 - qtilde);
    let mut entered = 0i64;
    let mut arrived = 0i64;

    let mut times = Vec::new();
    let mut kinds = Vec::new();
    let (mut qv, mut av, mut qtv, mut ev) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut processed = 0u64;

    let mut t = 0.0f64;
    let mut kind = EventKind::Init;
    loop {
        // arrivals at this epoch join the queue behind everyone already waiting
        while next_arrival < real.arrivals.len() && real.arrivals[next_arrival] == t {
            queue.push_back(next_customer);
            next_customer += 1;
            next_arrival += 1;
            arrived += 1;
            in_system += 1;
        }
        let mut free = capacity.map(|n| n as i64 - busy.len() as i64);
        while let Some(&c) = queue.front() {
            if free.is_some_and(|f| f <= 0) {
                break;
            }
            queue.pop_front();
            processed += 1;
            if processed > cfg.event_budget {
                return Err(SimError::AdmissionCascade(cfg.event_budget));
            }
            let eta = real.services[c];
            let done = t + eta;
            tau.push(t);
            served.push(eta);
            entered += 1;
            if done <= t {
                in_system -= 1;
            } else {
                busy.push(Reverse(Completion { at: done, initial: false }));
                if let Some(f) = free.as_mut() {
                    *f -= 1;
                }
            }
        }
        times.push(t);
        kinds.push(kind);
        qv.push(in_system);
        av.push(entered);
        qtv.push(qtilde);
        ev.push(arrived);

        let na = real.arrivals.get(next_arrival).copied().unwrap_or(f64::INFINITY);
        let nd = busy.peek().map_or(f64::INFINITY, |c| c.0.at);
        let next = na.min(nd);
        if next > horizon {
            break;
        }
        processed += 1;
        if processed > cfg.event_budget {
            return Err(SimError::AdmissionCascade(cfg.event_budget));
        }
        t = next;
        let mut departed = false;
        while busy.peek().is_some_and(|c| c.0.at == t) {
            let Reverse(c) = busy.pop().unwrap();
            if c.initial {
                qtilde -= 1;
            }
            in_system -= 1;
            departed = true;
        }
        kind = match (na == t, departed) {
            (true, true) => EventKind::ArrivalDeparture,
            (true, false) => EventKind::Arrival,
            _ => EventKind::Departure,
        };
    }

    let times_for = |v: Vec<i64>| StepPath::new(times.clone(), v);
    Ok(SimTrace {
        servers: cfg.servers,
        in_service0: cfg.in_service0,
        queued0: cfg.queued0,
        horizon,
        q: times_for(qv),
        a: times_for(av),
        qtilde: times_for(qtv),
        e: times_for(ev),
        event_kinds: kinds,
        event_times: times,
        tau,
        service_times: served,
        residuals: real.residuals,
        arrival_epochs: real.arrivals,
    })
}

type Busy = BinaryHeap<Reverse<Completion>>;
