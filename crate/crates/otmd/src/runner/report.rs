use serde::{Deserialize, Serialize};

/// Network totals after one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Number of completed steps.
    pub step: u64,
    pub in_network: f64,
    /// Cumulative vehicles injected at sources.
    pub entered: f64,
    /// Cumulative vehicles discharged at sinks.
    pub exited: f64,
    /// Vehicles waiting in source queues.
    pub queued: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub steps: Vec<StepMetrics>,
}

impl RunMetrics {
    /// Largest `|entered - exited - in_network|` over all steps.
    pub fn max_conservation_error(&self) -> f64 {
        self.steps
            .iter()
            .map(|m| (m.entered - m.exited - m.in_network).abs())
            .fold(0.0, f64::max)
    }
}

/// min / mean / max / total of per-step durations, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub total: f64,
}

impl DurationStats {
    pub fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let total: f64 = samples.iter().sum();
        Self {
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            mean: total / samples.len() as f64,
            max: samples.iter().copied().fold(0.0, f64::max),
            total,
        }
    }
}

/// Wall-clock breakdown of one worker, in seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkerTiming {
    pub index: u32,
    /// Reading input and building the engine.
    pub load: f64,
    /// Opening transport connections.
    pub connect: f64,
    /// Building decoder maps.
    pub decoders: f64,
    /// Exchanging and cross-checking decoder maps.
    pub establish: f64,
    pub setup: f64,
    /// Per-step time inside the exchange.
    pub comm: DurationStats,
    /// Time in the two model phases, encoding and decoding.
    pub compute: f64,
    /// Time spent collecting state dumps.
    pub output: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub mode: String,
    pub n: u32,
    pub steps: u64,
    pub workers: Vec<WorkerTiming>,
    /// Whole run as seen by the caller.
    pub wall: f64,
}

impl TimingReport {
    pub fn max_setup(&self) -> f64 {
        self.workers.iter().map(|w| w.setup).fold(0.0, f64::max)
    }

    pub fn max_comm(&self) -> f64 {
        self.workers.iter().map(|w| w.comm.total).fold(0.0, f64::max)
    }

    pub fn max_compute(&self) -> f64 {
        self.workers.iter().map(|w| w.compute).fold(0.0, f64::max)
    }
}

/// Message lengths seen on one directed channel during a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub worker: u32,
    pub neighbor: u32,
    pub send_slots: usize,
    pub recv_slots: usize,
    pub messages: u64,
    /// Smallest and largest length of sent and received messages.
    pub sent_lengths: Option<(usize, usize)>,
    pub received_lengths: Option<(usize, usize)>,
}

impl ChannelReport {
    pub fn new(worker: u32, neighbor: u32, send_slots: usize, recv_slots: usize) -> Self {
        Self {
            worker,
            neighbor,
            send_slots,
            recv_slots,
            messages: 0,
            sent_lengths: None,
            received_lengths: None,
        }
    }

    pub fn observe(&mut self, sent: usize, received: usize) {
        let widen = |r: Option<(usize, usize)>, v: usize| Some(r.map_or((v, v), |(a, b)| (a.min(v), b.max(v))));
        self.sent_lengths = widen(self.sent_lengths, sent);
        self.received_lengths = widen(self.received_lengths, received);
        self.messages += 1;
    }

    /// Every message had exactly the decoder map's length.
    pub fn is_fixed_size(&self) -> bool {
        let exact = |r: Option<(usize, usize)>, n: usize| r.is_none_or(|(a, b)| a == n && b == n);
        exact(self.sent_lengths, self.send_slots) && exact(self.received_lengths, self.recv_slots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let s = DurationStats::of(&[1.0, 3.0, 2.0]);
        assert_eq!((s.min, s.mean, s.max, s.total), (1.0, 2.0, 3.0, 6.0));
        assert_eq!(DurationStats::of(&[]), DurationStats::default());
    }

    #[test]
    fn channel_lengths() {
        let mut c = ChannelReport::new(0, 1, 4, 2);
        assert!(c.is_fixed_size());
        c.observe(4, 2);
        c.observe(4, 2);
        assert!(c.is_fixed_size());
        c.observe(3, 2);
        assert!(!c.is_fixed_size());
        assert_eq!(c.sent_lengths, Some((3, 4)));
    }
}
