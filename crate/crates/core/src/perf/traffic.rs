use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isa::MicroOpTrace;

/// Span reserved for each address region.
pub const REGION_SPAN: u64 = 1 << 40;
pub const LINE_BYTES: u64 = 64;

/// Address regions of the modeled memory image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Activations,
    Weights,
    Outputs,
    /// 16-bit partial accumulators of the streaming AP plan.
    Partials,
    /// Memory-resident LUTs of the baseline.
    Lut,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Activations,
        Region::Weights,
        Region::Outputs,
        Region::Partials,
        Region::Lut,
    ];

    pub fn base(self) -> u64 {
        (self as u64 + 1) * REGION_SPAN
    }

    pub fn of(addr: u64) -> Option<Region> {
        Self::ALL
            .into_iter()
            .find(|r| addr >= r.base() && addr < r.base() + REGION_SPAN)
    }

    pub fn addr(self, offset: u64) -> u64 {
        debug_assert!(offset < REGION_SPAN);
        self.base() + offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ActivationRead,
    WeightRead,
    LutRead,
    LutWrite,
    OutputRead,
    OutputWrite,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ActivationRead,
        Category::WeightRead,
        Category::LutRead,
        Category::LutWrite,
        Category::OutputRead,
        Category::OutputWrite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::ActivationRead => "activation_read",
            Category::WeightRead => "weight_read",
            Category::LutRead => "lut_read",
            Category::LutWrite => "lut_write",
            Category::OutputRead => "output_read",
            Category::OutputWrite => "output_write",
        }
    }

    pub fn classify(addr: u64, write: bool) -> Option<Category> {
        Some(match (Region::of(addr)?, write) {
            (Region::Activations, false) => Category::ActivationRead,
            (Region::Weights, false) => Category::WeightRead,
            (Region::Outputs | Region::Partials, false) => Category::OutputRead,
            (Region::Outputs | Region::Partials, true) => Category::OutputWrite,
            (Region::Lut, false) => Category::LutRead,
            (Region::Lut, true) => Category::LutWrite,
            (Region::Activations | Region::Weights, true) => return None,
        })
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    /// Exact bytes moved.
    #[default]
    Payload,
    /// 64-byte line touches.
    Line64,
}

impl fmt::Display for CountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountingMode::Payload => "payload",
            CountingMode::Line64 => "line64",
        })
    }
}

impl FromStr for CountingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "payload" => Ok(CountingMode::Payload),
            "line64" => Ok(CountingMode::Line64),
            other => Err(Error::InvalidConfig(format!("unknown counting mode {other:?}"))),
        }
    }
}

/// Number of 64-byte lines touched by `[addr, addr + bytes)`.
pub fn lines_touched(addr: u64, bytes: u64) -> u64 {
    if bytes == 0 {
        return 0;
    }
    (addr + bytes - 1) / LINE_BYTES - addr / LINE_BYTES + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub addr: u64,
    pub bytes: u32,
    pub write: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    bytes: u64,
    requests: u64,
    lines: u64,
}

/// Load/store log. Accesses are classified as they are recorded; the full
/// access list is kept only on request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryLog {
    tallies: [Tally; 6],
    unclassified: u64,
    first_unclassified: Option<Access>,
    accesses: Option<Vec<Access>>,
}

impl MemoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn keeping_accesses() -> Self {
        Self {
            accesses: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn record(&mut self, addr: u64, bytes: u32, write: bool) {
        let access = Access { addr, bytes, write };
        match Category::classify(addr, write) {
            Some(c) => {
                let t = &mut self.tallies[c as usize];
                t.bytes += u64::from(bytes);
                t.requests += 1;
                t.lines += lines_touched(addr, u64::from(bytes));
            }
            None => {
                self.unclassified += 1;
                self.first_unclassified.get_or_insert(access);
            }
        }
        if let Some(list) = &mut self.accesses {
            list.push(access);
        }
    }

    pub fn read(&mut self, region: Region, offset: u64, bytes: u32) {
        self.record(region.addr(offset), bytes, false);
    }

    pub fn write(&mut self, region: Region, offset: u64, bytes: u32) {
        self.record(region.addr(offset), bytes, true);
    }

    pub fn accesses(&self) -> Option<&[Access]> {
        self.accesses.as_deref()
    }

    pub fn access_count(&self) -> u64 {
        self.tallies.iter().map(|t| t.requests).sum::<u64>() + self.unclassified
    }

    /// Append another log recorded after this one.
    pub fn merge(&mut self, other: MemoryLog) {
        for (a, b) in self.tallies.iter_mut().zip(other.tallies) {
            a.bytes += b.bytes;
            a.requests += b.requests;
            a.lines += b.lines;
        }
        self.unclassified += other.unclassified;
        if self.first_unclassified.is_none() {
            self.first_unclassified = other.first_unclassified;
        }
        if let (Some(mine), Some(theirs)) = (&mut self.accesses, other.accesses) {
            mine.extend(theirs);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub bytes: u64,
    pub requests: u64,
}

/// Traffic by category under one counting mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrafficReport {
    pub mode: CountingMode,
    counters: [Counter; 6],
}

impl TrafficReport {
    pub fn new(mode: CountingMode) -> Self {
        Self {
            mode,
            counters: [Counter::default(); 6],
        }
    }

    pub fn get(&self, c: Category) -> Counter {
        self.counters[c as usize]
    }

    pub fn bytes(&self, c: Category) -> u64 {
        self.get(c).bytes
    }

    pub fn requests(&self, c: Category) -> u64 {
        self.get(c).requests
    }

    pub fn add(&mut self, c: Category, bytes: u64, requests: u64) {
        let x = &mut self.counters[c as usize];
        x.bytes += bytes;
        x.requests += requests;
    }

    pub fn total_bytes(&self) -> u64 {
        self.counters.iter().map(|c| c.bytes).sum()
    }

    pub fn total_requests(&self) -> u64 {
        self.counters.iter().map(|c| c.requests).sum()
    }

    pub fn lut_bytes(&self) -> u64 {
        self.bytes(Category::LutRead) + self.bytes(Category::LutWrite)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, Counter)> + '_ {
        Category::ALL.into_iter().map(|c| (c, self.get(c)))
    }

    /// Sum of two reports in the same mode.
    pub fn combined(mut self, other: &TrafficReport) -> Self {
        debug_assert_eq!(self.mode, other.mode);
        for (c, x) in other.iter() {
            self.add(c, x.bytes, x.requests);
        }
        self
    }
}

/// Build a report from a run's log. With a trace, every load/store micro-op
/// must have a logged access and vice versa.
pub fn collect_traffic(log: &MemoryLog, trace: Option<&MicroOpTrace>, mode: CountingMode) -> Result<TrafficReport> {
    if log.unclassified > 0 {
        let a = log.first_unclassified.expect("counted with first access");
        return Err(Error::UnclassifiedAccess {
            addr: a.addr,
            bytes: a.bytes,
        });
    }
    if let Some(trace) = trace {
        if trace.memory_uops() != log.access_count() {
            return Err(Error::IncompleteLog {
                log: log.access_count(),
                trace: trace.memory_uops(),
            });
        }
    }
    let mut report = TrafficReport::new(mode);
    for c in Category::ALL {
        let t = log.tallies[c as usize];
        let bytes = match mode {
            CountingMode::Payload => t.bytes,
            CountingMode::Line64 => t.lines * LINE_BYTES,
        };
        report.add(c, bytes, t.requests);
    }
    Ok(report)
}

/// Fraction of bytes that are LUT reads or writes.
pub fn tlut_share(r: &TrafficReport) -> Result<f64> {
    match r.total_bytes() {
        0 => Err(Error::ZeroTraffic),
        total => Ok(r.lut_bytes() as f64 / total as f64),
    }
}

pub fn reduction_ratio(baseline: &TrafficReport, tsar: &TrafficReport) -> Result<f64> {
    match tsar.total_bytes() {
        0 => Err(Error::ZeroTraffic),
        total => Ok(baseline.total_bytes() as f64 / total as f64),
    }
}
