use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::AgentId;
use crate::agents::AgentClass;

const CLASSES: usize = AgentClass::ALL.len();

#[derive(Clone, Debug, PartialEq)]
struct FrameSample {
    time: f64,
    speed_sum: [f64; CLASSES],
    count: [u32; CLASSES],
}

/// Per-class speeds and jam removals, accumulated frame by frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRecorder {
    samples: Vec<FrameSample>,
    /// First and last recorded time of every agent.
    presence: BTreeMap<AgentId, (f64, f64)>,
    jams: Vec<(f64, AgentId)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimMetrics {
    /// Mean speed per class (indexed by [`AgentClass::index`]); None when
    /// the class never appeared in the window.
    pub avg_speed: [Option<f64>; CLASSES],
    pub congestion_factor: f64,
    pub agents_present: usize,
    pub jammed: usize,
}

impl SimMetrics {
    pub fn speed(&self, class: AgentClass) -> Option<f64> {
        self.avg_speed[class.index()]
    }
}

impl MetricsRecorder {
    pub fn record_frame(&mut self, time: f64, agents: impl IntoIterator<Item = (AgentId, AgentClass, f64)>) {
        let mut s = FrameSample { time, speed_sum: [0.0; CLASSES], count: [0; CLASSES] };
        for (id, class, speed) in agents {
            s.speed_sum[class.index()] += speed;
            s.count[class.index()] += 1;
            self.presence.entry(id).and_modify(|e| e.1 = time).or_insert((time, time));
        }
        self.samples.push(s);
    }

    pub fn record_jam(&mut self, time: f64, id: AgentId) {
        self.jams.push((time, id));
    }

    /// Metrics over `[from, to]` (inclusive).
    pub fn window(&self, from: f64, to: f64) -> SimMetrics {
        let mut sum = [0.0; CLASSES];
        let mut count = [0u64; CLASSES];
        for s in self.samples.iter().filter(|s| s.time >= from && s.time <= to) {
            for c in 0..CLASSES {
                sum[c] += s.speed_sum[c];
                count[c] += s.count[c] as u64;
            }
        }
        let avg_speed = core::array::from_fn(|c| (count[c] > 0).then(|| sum[c] / count[c] as f64));
        let present = self.presence.values().filter(|(a, b)| *a <= to && *b >= from).count();
        let jammed = self.jams.iter().filter(|(t, _)| *t >= from && *t <= to).count();
        SimMetrics {
            avg_speed,
            congestion_factor: if present > 0 { (jammed as f64 / present as f64).min(1.0) } else { 0.0 },
            agents_present: present,
            jammed,
        }
    }

    /// Metrics over the trailing `window` seconds.
    pub fn trailing(&self, window: f64) -> SimMetrics {
        let end = self.samples.last().map_or(0.0, |s| s.time);
        self.window(end - window, end)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.time)
    }
}
