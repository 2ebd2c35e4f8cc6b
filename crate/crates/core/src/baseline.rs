//! Memory-resident ternary LUT kernel: per block of `g` activations, all
//! `3^g` dot products are written to a table in memory and each output
//! channel gathers one entry per block through a packed index stream.

use crate::error::{Error, Result};
use crate::perf::traffic::{collect_traffic, CountingMode, MemoryLog, Region, TrafficReport};
use crate::quant::{AccumulatorMatrix, AccumulatorVector, QuantizedActivations, TernaryMatrix};

/// Indices per weight-stream word, so a word is `index_bits` bytes.
pub const WORD_INDICES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub g: usize,
    pub lut_entry_bits: u32,
    pub index_bits: u32,
    pub lut_entries_padded: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self::new(3).expect("g = 3 is valid")
    }
}

impl BaselineConfig {
    pub fn new(g: usize) -> Result<Self> {
        if !(1..=5).contains(&g) {
            return Err(Error::InvalidConfig(format!("baseline block size {g} outside 1..=5")));
        }
        let patterns = 3usize.pow(g as u32);
        let index_bits = patterns.next_power_of_two().trailing_zeros();
        Ok(Self {
            g,
            lut_entry_bits: 16,
            index_bits,
            lut_entries_padded: 1 << index_bits,
        })
    }

    pub fn patterns(&self) -> usize {
        3usize.pow(self.g as u32)
    }

    pub fn bits_per_weight(&self) -> f64 {
        f64::from(self.index_bits) / self.g as f64
    }

    pub fn table_bytes(&self) -> usize {
        self.lut_entries_padded * (self.lut_entry_bits as usize / 8)
    }

    /// Bytes of the `index`-th word of a stream holding `total` indices.
    pub fn word_bytes(&self, index: usize, total: usize) -> usize {
        let held = (total - index * WORD_INDICES).min(WORD_INDICES);
        (held * self.index_bits as usize).div_ceil(8)
    }
}

/// Base-3 index of a ternary pattern; digit 0 is -1, 1 is 0, 2 is +1 and
/// the first element is the least significant digit.
pub fn encode_pattern(block: &[i8]) -> Result<usize> {
    block.iter().enumerate().rev().try_fold(0usize, |idx, (index, &w)| {
        if !(-1..=1).contains(&w) {
            return Err(Error::NotTernary { index, value: w });
        }
        Ok(idx * 3 + (w + 1) as usize)
    })
}

pub fn decode_pattern(mut idx: usize, g: usize) -> Vec<i8> {
    (0..g)
        .map(|_| {
            let d = (idx % 3) as i8 - 1;
            idx /= 3;
            d
        })
        .collect()
}

/// One padded table of 16-bit entries per activation block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryLut {
    cfg: BaselineConfig,
    entries: Vec<i16>,
}

impl MemoryLut {
    pub fn blocks(&self) -> usize {
        self.entries.len() / self.cfg.lut_entries_padded
    }

    pub fn table(&self, block: usize) -> &[i16] {
        let n = self.cfg.lut_entries_padded;
        &self.entries[block * n..(block + 1) * n]
    }

    pub fn entry(&self, block: usize, idx: usize) -> i16 {
        self.table(block)[idx]
    }
}

/// Build the tables for one activation row, logging the activation reads
/// and table writes.
pub fn build_memory_lut(a: &QuantizedActivations, cfg: &BaselineConfig, log: &mut MemoryLog) -> MemoryLut {
    build_row(a.values(), 0, cfg, log)
}

fn build_row(a: &[i8], act_offset: usize, cfg: &BaselineConfig, log: &mut MemoryLog) -> MemoryLut {
    let blocks = a.len().div_ceil(cfg.g);
    let mut entries = vec![0i16; blocks * cfg.lut_entries_padded];
    let patterns: Vec<Vec<i8>> = (0..cfg.patterns()).map(|idx| decode_pattern(idx, cfg.g)).collect();
    for b in 0..blocks {
        let start = b * cfg.g;
        let valid = &a[start..(start + cfg.g).min(a.len())];
        log.read(Region::Activations, (act_offset + start) as u64, valid.len() as u32);
        let table = &mut entries[b * cfg.lut_entries_padded..][..cfg.patterns()];
        for (e, pattern) in table.iter_mut().zip(&patterns) {
            *e = pattern
                .iter()
                .zip(valid)
                .map(|(&w, &x)| i16::from(w) * i16::from(x))
                .sum();
        }
        log.write(Region::Lut, (b * cfg.table_bytes()) as u64, cfg.table_bytes() as u32);
    }
    MemoryLut { cfg: *cfg, entries }
}

/// Weight matrix as a dense bit stream of pattern indices, row-major over
/// (channel, block).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineWeights {
    pub rows: usize,
    pub cols: usize,
    pub cfg: BaselineConfig,
    bytes: Vec<u8>,
}

impl BaselineWeights {
    pub fn blocks(&self) -> usize {
        self.cols.div_ceil(self.cfg.g)
    }

    pub fn indices(&self) -> usize {
        self.rows * self.blocks()
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn words(&self) -> usize {
        self.indices().div_ceil(WORD_INDICES)
    }

    fn index(&self, i: usize) -> usize {
        let bits = self.cfg.index_bits as usize;
        let pos = i * bits;
        // An index spans at most two bytes.
        let lo = usize::from(self.bytes[pos / 8]);
        let hi = self.bytes.get(pos / 8 + 1).copied().map_or(0, usize::from);
        ((hi << 8 | lo) >> (pos % 8)) & ((1 << bits) - 1)
    }
}

pub fn pack_indices(w: &TernaryMatrix, cfg: &BaselineConfig) -> BaselineWeights {
    let blocks = w.cols().div_ceil(cfg.g);
    let bits = cfg.index_bits as usize;
    let mut bytes = vec![0u8; (w.rows() * blocks * bits).div_ceil(8)];
    let mut block = vec![0i8; cfg.g];
    for r in 0..w.rows() {
        for b in 0..blocks {
            for (i, x) in block.iter_mut().enumerate() {
                let c = b * cfg.g + i;
                *x = if c < w.cols() { w.get(r, c) } else { 0 };
            }
            let idx = encode_pattern(&block).expect("ternary matrix");
            let pos = (r * blocks + b) * bits;
            for k in 0..bits {
                if idx >> k & 1 == 1 {
                    bytes[(pos + k) / 8] |= 1 << ((pos + k) % 8);
                }
            }
        }
    }
    BaselineWeights {
        rows: w.rows(),
        cols: w.cols(),
        cfg: *cfg,
        bytes,
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub output: AccumulatorMatrix,
    pub log: MemoryLog,
    /// Table entries built plus lookups plus memory accesses.
    pub cycles: u64,
}

impl BaselineRun {
    pub fn traffic(&self, mode: CountingMode) -> Result<TrafficReport> {
        collect_traffic(&self.log, None, mode)
    }
}

fn gemv_row(wts: &BaselineWeights, a: &[i8], row: usize, log: &mut MemoryLog, out: &mut [i32]) -> Result<u64> {
    let cfg = &wts.cfg;
    let lut = build_row(a, row * wts.cols, cfg, log);
    let blocks = wts.blocks();
    let total = wts.indices();
    let mut lookups = 0u64;
    for (j, y) in out.iter_mut().enumerate() {
        let mut acc = 0i64;
        for b in 0..blocks {
            let i = j * blocks + b;
            if i.is_multiple_of(WORD_INDICES) {
                let word = i / WORD_INDICES;
                let bytes = cfg.word_bytes(word, total);
                log.read(Region::Weights, (word * cfg.index_bits as usize) as u64, bytes as u32);
            }
            let idx = wts.index(i);
            log.read(Region::Lut, (b * cfg.table_bytes() + idx * 2) as u64, 2);
            acc += i64::from(lut.entry(b, idx));
            lookups += 1;
        }
        *y = i32::try_from(acc).map_err(|_| Error::AccumulatorOverflow)?;
        log.write(Region::Outputs, ((row * wts.rows + j) * 4) as u64, 4);
    }
    Ok(lookups + (blocks * cfg.patterns()) as u64)
}

pub fn baseline_gemm(w: &TernaryMatrix, rows: &[QuantizedActivations], cfg: &BaselineConfig) -> Result<BaselineRun> {
    if rows.is_empty() {
        return Err(Error::InvalidShape("GEMM needs at least one activation row".into()));
    }
    let wts = pack_indices(w, cfg);
    let mut log = MemoryLog::new();
    let mut output = AccumulatorMatrix::zeros(rows.len(), w.rows());
    let mut work = 0;
    for (n, a) in rows.iter().enumerate() {
        if a.len() != w.cols() {
            return Err(Error::DimensionMismatch {
                expected: w.cols(),
                found: a.len(),
            });
        }
        work += gemv_row(&wts, a.values(), n, &mut log, output.row_mut(n))?;
    }
    let cycles = work + log.access_count();
    Ok(BaselineRun { output, log, cycles })
}

pub fn baseline_gemv(
    w: &TernaryMatrix,
    a: &QuantizedActivations,
    cfg: &BaselineConfig,
) -> Result<(AccumulatorVector, BaselineRun)> {
    let run = baseline_gemm(w, std::slice::from_ref(a), cfg)?;
    Ok((run.output.to_vector(0), run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perf::traffic::Category;
    use crate::quant::reference_gemv;

    #[test]
    fn default_config() {
        let c = BaselineConfig::default();
        assert_eq!((c.index_bits, c.lut_entries_padded), (5, 32));
        assert!((c.bits_per_weight() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pattern_encoding() {
        assert_eq!(encode_pattern(&[1, -1, 0]).unwrap(), 11);
        assert_eq!(decode_pattern(11, 3), vec![1, -1, 0]);
        assert_eq!(encode_pattern(&[0, 0, 0]).unwrap(), 13);
        for idx in 0..27 {
            assert_eq!(encode_pattern(&decode_pattern(idx, 3)).unwrap(), idx);
        }
    }

    #[test]
    fn table_example() {
        let a = QuantizedActivations::from_ints(vec![1, 2, 4]).unwrap();
        let mut log = MemoryLog::new();
        let lut = build_memory_lut(&a, &BaselineConfig::default(), &mut log);
        assert_eq!(lut.entry(0, 11), -1);
        assert_eq!(lut.entry(0, 13), 0);
        assert!(lut.table(0)[27..].iter().all(|&e| e == 0));
    }

    #[test]
    fn tiny_shape_counters() {
        let w = TernaryMatrix::new(4, 12, (0..48).map(|i| (i % 3) as i8 - 1).collect(), 1.0).unwrap();
        let a = QuantizedActivations::from_ints((0..12).map(|i| i as i8 * 9 - 50).collect()).unwrap();
        let (y, run) = baseline_gemv(&w, &a, &BaselineConfig::default()).unwrap();
        assert_eq!(y, reference_gemv(&w, &a).unwrap());
        let r = run.traffic(CountingMode::Payload).unwrap();
        assert_eq!(r.bytes(Category::LutRead), 32);
        assert_eq!(r.bytes(Category::WeightRead), 10);
        assert_eq!(r.bytes(Category::LutWrite), 256);
        assert_eq!(r.bytes(Category::ActivationRead), 12);
        assert_eq!(r.bytes(Category::OutputWrite), 16);
    }
}
