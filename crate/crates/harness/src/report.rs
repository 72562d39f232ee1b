use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub sent: u64,
    pub delivered: u64,
    pub duplicates: u64,
    pub gaps: u64,
    pub leaks: u64,
    /// Transcripts whose order or content disagrees with the reference.
    #[serde(default)]
    pub mismatches: u64,
    #[serde(default)]
    pub rejections: u64,
    #[serde(default)]
    pub server_errors: u64,
    #[serde(default)]
    pub other_errors: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub p50: f64,
    pub p99: f64,
    pub samples: usize,
}

impl Latency {
    /// Nearest-rank percentiles over millisecond samples.
    pub fn from_samples(mut ms: Vec<f64>) -> Self {
        if ms.is_empty() {
            return Latency::default();
        }
        ms.sort_by(f64::total_cmp);
        let rank = |p: f64| {
            let idx = ((p / 100.0) * ms.len() as f64).ceil() as usize;
            ms[idx.clamp(1, ms.len()) - 1]
        };
        Latency { p50: rank(50.0), p99: rank(99.0), samples: ms.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub pass: bool,
    pub counters: Counters,
    pub latency_ms: Latency,
    /// Human-readable reasons for any failed scenario-specific check.
    pub failures: Vec<String>,
    pub elapsed_ms: u64,
}

impl Report {
    /// `pass` is derived, never set directly: all counters that indicate a
    /// fault must be zero and no scenario check may have failed.
    pub fn new(
        scenario: &str,
        counters: Counters,
        latency_ms: Latency,
        failures: Vec<String>,
        elapsed_ms: u64,
    ) -> Self {
        let c = &counters;
        let clean = c.duplicates == 0
            && c.gaps == 0
            && c.leaks == 0
            && c.mismatches == 0
            && c.rejections == 0
            && c.server_errors == 0
            && c.other_errors == 0;
        Report {
            scenario: scenario.to_owned(),
            pass: clean && failures.is_empty(),
            counters,
            latency_ms,
            failures,
            elapsed_ms,
        }
    }
}
