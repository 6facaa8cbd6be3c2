use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::ids::NodeId;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    /// A harvesting message left `src`.
    Send,
    /// A harvesting message reached `dst`.
    Recv,
    /// A confirmation left `src` (the dataset's receiver).
    Confirm,
    /// A confirmation reached `dst` (the dataset's sender).
    Confirmed,
    Lost,
    Timeout,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Send => "send",
            TraceEvent::Recv => "recv",
            TraceEvent::Confirm => "confirm",
            TraceEvent::Confirmed => "confirmed",
            TraceEvent::Lost => "lost",
            TraceEvent::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "send" => TraceEvent::Send,
            "recv" => TraceEvent::Recv,
            "confirm" => TraceEvent::Confirm,
            "confirmed" => TraceEvent::Confirmed,
            "lost" => TraceEvent::Lost,
            "timeout" => TraceEvent::Timeout,
            _ => return None,
        })
    }

    /// Node charged with the bytes, if the event counts toward overhead.
    pub fn charged(self, src: NodeId, dst: NodeId) -> Option<NodeId> {
        match self {
            TraceEvent::Send | TraceEvent::Confirm => Some(src),
            TraceEvent::Recv | TraceEvent::Confirmed => Some(dst),
            TraceEvent::Lost | TraceEvent::Timeout => None,
        }
    }
}

/// Header line of message traces.
pub const TRACE_HEADER: &str = "time,event,src,dst,bytes,series_count,slot_count,method";

/// Byte accounting for harvesting traffic, optionally mirrored to a trace.
#[derive(Debug, Clone)]
pub struct Meter {
    method: &'static str,
    from: SimTime,
    until: SimTime,
    per_node: Vec<u64>,
    pairs: BTreeSet<(NodeId, NodeId)>,
    datasets_sent: u64,
    datasets_received: u64,
    trace: Option<String>,
}

impl Meter {
    /// Counts only events in `[from, until)`.
    pub fn new(method: &'static str, nodes: usize, from: SimTime, until: SimTime, trace: bool) -> Self {
        Meter {
            method,
            from,
            until,
            per_node: vec![0; nodes],
            pairs: BTreeSet::new(),
            datasets_sent: 0,
            datasets_received: 0,
            trace: trace.then(|| format!("{TRACE_HEADER}\n")),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn log(&mut self, now: SimTime, ev: TraceEvent, src: NodeId, dst: NodeId, bytes: u64, series: usize, slots: usize) {
        if let Some(t) = &mut self.trace {
            let _ = writeln!(t, "{now},{},{src},{dst},{bytes},{series},{slots},{}", ev.as_str(), self.method);
        }
        if now < self.from || now >= self.until {
            return;
        }
        if let Some(n) = ev.charged(src, dst) {
            self.per_node[n.idx()] += bytes;
            if src != dst {
                self.pairs.insert((src.min(dst), src.max(dst)));
            }
        }
        match ev {
            TraceEvent::Send => self.datasets_sent += 1,
            TraceEvent::Recv => self.datasets_received += 1,
            _ => {}
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.per_node.iter().sum()
    }

    pub fn per_node(&self) -> &[u64] {
        &self.per_node
    }

    /// Distinct unordered node pairs that exchanged counted traffic.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn messages_sent(&self) -> u64 {
        self.datasets_sent
    }

    pub fn messages_received(&self) -> u64 {
        self.datasets_received
    }

    pub fn trace(&self) -> Option<&str> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<String> {
        self.trace.take()
    }

    pub fn window(&self) -> (SimTime, SimTime) {
        (self.from, self.until)
    }
}

/// Independent overhead fold over a trace: total counted bytes of events in
/// `[from, until)`.
pub fn fold_trace_bytes(trace: &str, from: SimTime, until: SimTime) -> Result<u64, String> {
    let mut total = 0u64;
    for (i, line) in trace.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 7 {
            return Err(format!("trace line {}: expected at least 7 fields", i + 1));
        }
        let secs: f64 = f[0].parse().map_err(|_| format!("trace line {}: bad time", i + 1))?;
        let ev = TraceEvent::parse(f[1]).ok_or_else(|| format!("trace line {}: unknown event `{}`", i + 1, f[1]))?;
        let bytes: u64 = f[4].parse().map_err(|_| format!("trace line {}: bad byte count", i + 1))?;
        let t = SimTime::from_secs_f64(secs);
        if t >= from && t < until && matches!(ev, TraceEvent::Send | TraceEvent::Recv | TraceEvent::Confirm | TraceEvent::Confirmed) {
            total += bytes;
        }
    }
    Ok(total)
}
