use super::Servers;

/// Integer-valued right-continuous step path: `values[k]` holds on
/// `[times[k], times[k+1])`, and the path is 0 before `times[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    times: Vec<f64>,
    values: Vec<i64>,
}

impl StepPath {
    pub fn new(times: Vec<f64>, values: Vec<i64>) -> Self {
        assert_eq!(times.len(), values.len(), "step path times and values differ in length");
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]), "step path times must increase");
        StepPath { times, values }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> i64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            0
        } else {
            self.values[i - 1]
        }
    }

    pub fn eval_left(&self, t: f64) -> i64 {
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            0
        } else {
            self.values[i - 1]
        }
    }

    /// `inf{t : path(t) ≥ i}` for `i = 1, …, path(∞)`, for a nondecreasing path.
    pub fn first_passage_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (&t, &v) in self.times.iter().zip(&self.values) {
            while (out.len() as i64) < v {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Init,
    Arrival,
    Departure,
    ArrivalDeparture,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Init => "init",
            EventKind::Arrival => "arrival",
            EventKind::Departure => "departure",
            EventKind::ArrivalDeparture => "arrival+departure",
        }
    }
}

/// Event-level record of one run on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub servers: Servers,
    pub in_service0: usize,
    pub queued0: usize,
    pub horizon: f64,
    pub event_times: Vec<f64>,
    pub event_kinds: Vec<EventKind>,
    /// Number in system.
    pub q: StepPath,
    /// Entries into service after time 0− (initially waiting customers included).
    pub a: StepPath,
    /// Initial in-service customers still in service.
    pub qtilde: StepPath,
    /// Exogenous arrivals.
    pub e: StepPath,
    /// Entry-to-service epochs, in order of entry.
    pub tau: Vec<f64>,
    /// Service requirement of the customer entering at `tau[i]`.
    pub service_times: Vec<f64>,
    /// Residual service times of the initial in-service customers.
    pub residuals: Vec<f64>,
    pub arrival_epochs: Vec<f64>,
}

impl SimTrace {
    /// Number of customers in service at `t`.
    pub fn in_service(&self, t: f64) -> i64 {
        let qt = self.q.eval(t);
        match self.servers {
            Servers::Finite(n) => qt.min(n as i64),
            Servers::Infinite => qt,
        }
    }
}

fn count_le(sorted: &[f64], t: f64) -> i64 {
    sorted.partition_point(|&x| x <= t) as i64
}

/// Every time at which either side of the system equations may change.
fn check_times(trace: &SimTrace, completions: &[f64]) -> Vec<f64> {
    let mut times: Vec<f64> = trace
        .event_times
        .iter()
        .chain(&trace.arrival_epochs)
        .chain(&trace.residuals)
        .chain(completions)
        .chain(trace.q.times())
        .chain(trace.a.times())
        .copied()
        .filter(|&t| (0.0..=trace.horizon).contains(&t))
        .collect();
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Largest absolute residual of the system equations over all change
/// points of the trace. Entry epochs are recovered from the `A` path as
/// `τᵢ = inf{t : A(t) ≥ i}`, so hand-built traces are checked on the same
/// footing as simulated ones. All arithmetic is on integers.
pub fn verify_system_equations(trace: &SimTrace) -> i64 {
    let tau = trace.a.first_passage_times();
    if tau.len() > trace.service_times.len() {
        return i64::MAX;
    }
    let mut completions: Vec<f64> = tau.iter().zip(&trace.service_times).map(|(t, s)| t + s).collect();
    completions.sort_by(f64::total_cmp);
    let mut residuals = trace.residuals.clone();
    residuals.sort_by(f64::total_cmp);
    let mut arrivals = trace.arrival_epochs.clone();
    arrivals.sort_by(f64::total_cmp);
    let queued0 = trace.queued0 as i64;
    let n = trace.servers.count().map(|n| n as i64);

    let mut worst = 0i64;
    for t in check_times(trace, &completions) {
        let q = trace.q.eval(t);
        let a = trace.a.eval(t);
        let qtilde_rhs = residuals.len() as i64 - count_le(&residuals, t);
        let e = count_le(&arrivals, t);
        let departed = count_le(&completions, t);
        let q_rhs = queued0 + qtilde_rhs + e - departed;
        let a_rhs = queued0 + e - n.map_or(0, |n| (q - n).max(0));
        worst = worst
            .max((q - q_rhs).abs())
            .max((a - a_rhs).abs())
            .max((trace.qtilde.eval(t) - qtilde_rhs).abs())
            .max((trace.e.eval(t) - e).abs());
    }
    worst
}

/// Largest gap, over event times, between the number of busy servers
/// implied by the entry and completion records and `min(Q, n)`.
pub fn work_conservation_defect(trace: &SimTrace) -> i64 {
    let mut completions: Vec<f64> = trace.tau.iter().zip(&trace.service_times).map(|(t, s)| t + s).collect();
    completions.sort_by(f64::total_cmp);
    trace
        .event_times
        .iter()
        .map(|&t| {
            let busy = trace.qtilde.eval(t) + trace.a.eval(t) - count_le(&completions, t);
            (busy - trace.in_service(t)).abs()
        })
        .max()
        .unwrap_or(0)
}
