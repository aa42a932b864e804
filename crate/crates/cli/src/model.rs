//! Analytic performance models: the ideal speedup bound for a partly
//! parallel program, and a memory hierarchy latency table that converts
//! cycle costs to nanoseconds at a given clock.

use mck_core::{Error, Result};

/// Ideal speedup bound `1 / (1 - f)` for a program whose fraction `f` of
/// work parallelizes perfectly, on unlimited processors.
pub fn amdahl_bound(parallel_fraction: f64) -> Result<f64> {
    if !parallel_fraction.is_finite() || parallel_fraction < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "parallel fraction must be between 0 and 1, got {parallel_fraction}"
        )));
    }
    if parallel_fraction >= 1.0 {
        return Err(Error::InvalidArgument(
            "fully parallel fraction has unbounded ideal speedup".into(),
        ));
    }
    Ok(1.0 / (1.0 - parallel_fraction))
}

/// One tier of the memory hierarchy with its access cost range in cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyLevel {
    pub name: &'static str,
    pub min_cycles: f64,
    pub max_cycles: f64,
}

/// Cycle costs for each tier plus the clock used to express them in time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyModel {
    clock_ghz: f64,
    levels: Vec<LatencyLevel>,
}

const REFERENCE_LEVELS: [LatencyLevel; 6] = [
    LatencyLevel { name: "registers", min_cycles: 0.0, max_cycles: 1.0 },
    LatencyLevel { name: "l1", min_cycles: 1.0, max_cycles: 2.0 },
    LatencyLevel { name: "l2", min_cycles: 5.0, max_cycles: 5.0 },
    LatencyLevel { name: "l3", min_cycles: 10.0, max_cycles: 20.0 },
    LatencyLevel { name: "ram", min_cycles: 100.0, max_cycles: 1000.0 },
    LatencyLevel { name: "disk", min_cycles: 1e6, max_cycles: 1e6 },
];

/// Clock of the reference machine the cycle table was taken from.
pub const REFERENCE_CLOCK_GHZ: f64 = 2.53;

impl LatencyModel {
    /// The reference cycle table at a caller-chosen clock.
    pub fn new(clock_ghz: f64) -> Result<LatencyModel> {
        if !clock_ghz.is_finite() || clock_ghz <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "clock must be a positive frequency in GHz, got {clock_ghz}"
            )));
        }
        Ok(LatencyModel {
            clock_ghz,
            levels: REFERENCE_LEVELS.to_vec(),
        })
    }

    /// The reference table at the reference clock.
    pub fn reference() -> LatencyModel {
        LatencyModel::new(REFERENCE_CLOCK_GHZ).expect("reference clock is valid")
    }

    pub fn clock_ghz(&self) -> f64 {
        self.clock_ghz
    }

    /// Duration of one cycle in nanoseconds.
    pub fn ns_per_cycle(&self) -> f64 {
        1.0 / self.clock_ghz
    }

    /// Converts a cycle count to nanoseconds at this model's clock.
    pub fn cycles_to_ns(&self, cycles: f64) -> f64 {
        cycles / self.clock_ghz
    }

    pub fn levels(&self) -> &[LatencyLevel] {
        &self.levels
    }

    pub fn level(&self, name: &str) -> Result<&LatencyLevel> {
        self.levels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown memory level {name:?}")))
    }

    /// Nanosecond range for one tier.
    pub fn level_ns(&self, name: &str) -> Result<(f64, f64)> {
        let level = self.level(name)?;
        Ok((
            self.cycles_to_ns(level.min_cycles),
            self.cycles_to_ns(level.max_cycles),
        ))
    }

    /// Human readable table.
    pub fn table_text(&self) -> String {
        let mut out = format!(
            "memory level latencies at {} GHz (1 cycle = {:.4} ns)\n{:<10} {:>12} {:>14}\n",
            self.clock_ghz,
            self.ns_per_cycle(),
            "level",
            "cycles",
            "nanoseconds"
        );
        for l in &self.levels {
            let cycles = if l.min_cycles == l.max_cycles {
                format!("{}", l.max_cycles)
            } else {
                format!("{}-{}", l.min_cycles, l.max_cycles)
            };
            let ns = if l.min_cycles == l.max_cycles {
                format!("{:.4}", self.cycles_to_ns(l.max_cycles))
            } else {
                format!(
                    "{:.4}-{:.4}",
                    self.cycles_to_ns(l.min_cycles),
                    self.cycles_to_ns(l.max_cycles)
                )
            };
            out.push_str(&format!("{:<10} {:>12} {:>14}\n", l.name, cycles, ns));
        }
        out
    }
}
