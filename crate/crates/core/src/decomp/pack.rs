use crate::decomp::block::BlockIndices;
use crate::decomp::config::{ConfigId, KernelConfig};
use crate::error::{Error, Result};
use crate::quant::TernaryMatrix;

pub const STREAM_MAGIC: &[u8; 8] = b"TSARPKW1";
pub const HEADER_BYTES: usize = 32;

/// Compile-time weight layout consumed by TGEMV.
///
/// Ordering: output tile (`m` channels), then K group (`k` inputs, one
/// TGEMV operand), then channel `j` within the tile, then block `t`; each
/// block contributes `c` dense bits followed by `c` sparse bits. Bit `n` of
/// the stream is bit `n % 8` of byte `n / 8`, so channel `j` occupies lane
/// `j` of the operand register(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedWeightStream {
    config: KernelConfig,
    rows: usize,
    cols: usize,
    padded_rows: usize,
    padded_cols: usize,
    payload: Vec<u8>,
}

fn round_up(v: usize, unit: usize) -> usize {
    v.div_ceil(unit) * unit
}

fn read_bits(bytes: &[u8], pos: usize, n: u32) -> u64 {
    if pos.is_multiple_of(8) && n.is_multiple_of(8) {
        let at = pos / 8;
        return bytes[at..at + n as usize / 8]
            .iter()
            .rev()
            .fold(0u64, |v, &b| v << 8 | u64::from(b));
    }
    let mut v = 0u64;
    for i in 0..n as usize {
        let p = pos + i;
        v |= u64::from(bytes[p / 8] >> (p % 8) & 1) << i;
    }
    v
}

fn write_bits(bytes: &mut [u8], pos: usize, n: u32, v: u64) {
    if pos.is_multiple_of(8) && n.is_multiple_of(8) {
        let at = pos / 8;
        for (i, b) in bytes[at..at + n as usize / 8].iter_mut().enumerate() {
            *b = (v >> (8 * i)) as u8;
        }
        return;
    }
    for i in 0..n as usize {
        let p = pos + i;
        if v >> i & 1 == 1 {
            bytes[p / 8] |= 1 << (p % 8);
        } else {
            bytes[p / 8] &= !(1 << (p % 8));
        }
    }
}

impl PackedWeightStream {
    /// Assemble from raw parts, checking that the padding and payload
    /// length are consistent with the configuration.
    pub fn from_parts(
        config: KernelConfig,
        rows: usize,
        cols: usize,
        padded_rows: usize,
        padded_cols: usize,
        payload: Vec<u8>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!("packed shape {rows}x{cols} is empty")));
        }
        let (m, k) = (config.outputs_per_insn(), config.inputs_per_insn());
        if padded_rows != round_up(rows, m) || padded_cols != round_up(cols, k) {
            return Err(Error::Format(format!(
                "padded shape {padded_rows}x{padded_cols} inconsistent with {rows}x{cols} under {config}"
            )));
        }
        let expected = padded_rows * padded_cols / 4;
        if payload.len() != expected {
            return Err(Error::PayloadLength {
                expected,
                found: payload.len(),
            });
        }
        Ok(Self {
            config,
            rows,
            cols,
            padded_rows,
            padded_cols,
            payload,
        })
    }

    pub fn config(&self) -> KernelConfig {
        self.config
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn padded_rows(&self) -> usize {
        self.padded_rows
    }

    pub fn padded_cols(&self) -> usize {
        self.padded_cols
    }

    /// Number of `m`-channel output tiles.
    pub fn tiles(&self) -> usize {
        self.padded_rows / self.config.outputs_per_insn()
    }

    /// Number of `k`-input groups.
    pub fn groups(&self) -> usize {
        self.padded_cols / self.config.inputs_per_insn()
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Mutable payload access, used by fault-injection tests.
    pub fn payload_mut(&mut self) -> &mut [u8] {
        &mut self.payload
    }

    pub fn payload_bits(&self) -> usize {
        self.payload.len() * 8
    }

    /// Byte offset of the TGEMV operand for `(tile, group)`.
    pub fn operand_offset(&self, tile: usize, group: usize) -> usize {
        (tile * self.groups() + group) * self.config.weight_operand_bytes()
    }

    pub fn operand(&self, tile: usize, group: usize) -> &[u8] {
        let off = self.operand_offset(tile, group);
        &self.payload[off..off + self.config.weight_operand_bytes()]
    }

    fn lane_pos(&self, row: usize, group: usize) -> usize {
        let m = self.config.outputs_per_insn();
        self.operand_offset(row / m, group) * 8 + (row % m) * self.config.lane_bits() as usize
    }

    /// Serialized form: 32-byte header followed by the payload.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let id = self
            .config
            .id()
            .ok_or_else(|| Error::Format(format!("{} has no serialization identifier", self.config)))?;
        let mut out = Vec::with_capacity(HEADER_BYTES + self.payload.len());
        out.extend_from_slice(STREAM_MAGIC);
        out.push(id.byte());
        for v in [self.padded_rows, self.padded_cols, self.rows, self.cols] {
            let v = u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.resize(HEADER_BYTES, 0);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format(format!("stream of {} bytes has no header", bytes.len())));
        }
        if &bytes[..8] != STREAM_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let id =
            ConfigId::from_byte(bytes[8]).ok_or_else(|| Error::Format(format!("unknown config id {}", bytes[8])))?;
        let word = |i: usize| {
            let o = 9 + 4 * i;
            u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
        };
        if bytes[25..HEADER_BYTES].iter().any(|&b| b != 0) {
            return Err(Error::Format("reserved header bytes are not zero".into()));
        }
        Self::from_parts(
            id.config(),
            word(2),
            word(3),
            word(0),
            word(1),
            bytes[HEADER_BYTES..].to_vec(),
        )
    }
}

/// Encode `w` into the TGEMV stream layout, zero-padding K and M.
pub fn pack_weights(w: &TernaryMatrix, cfg: KernelConfig) -> PackedWeightStream {
    let (m, k, c) = (cfg.outputs_per_insn(), cfg.inputs_per_insn(), cfg.block_size());
    let padded_rows = round_up(w.rows(), m);
    let padded_cols = round_up(w.cols(), k);
    let mut stream = PackedWeightStream {
        config: cfg,
        rows: w.rows(),
        cols: w.cols(),
        padded_rows,
        padded_cols,
        payload: vec![0; padded_rows * padded_cols / 4],
    };
    // Zero weights set both bits; padding decodes to zero.
    let zero_pair = (1u64 << (2 * c)) - 1;
    for row in 0..padded_rows {
        let values = (row < w.rows()).then(|| w.row(row));
        for group in 0..stream.groups() {
            let mut lane = 0u64;
            for t in 0..cfg.blocks() {
                let col0 = group * k + t * c;
                let pair = match values {
                    Some(v) => (0..c).fold(0u64, |pair, i| {
                        let (dense, sparse) = match v.get(col0 + i).copied().unwrap_or(0) {
                            -1 => (0, 0),
                            0 => (1, 1),
                            1 => (1, 0),
                            _ => unreachable!("ternary matrix holds ternary values"),
                        };
                        pair | dense << i | sparse << (c + i)
                    }),
                    None => zero_pair,
                };
                lane |= pair << (t * 2 * c);
            }
            let pos = stream.lane_pos(row, group);
            write_bits(&mut stream.payload, pos, cfg.lane_bits(), lane);
        }
    }
    stream
}

/// Decode the full padded matrix. Fails on a containment violation in any
/// lane or on a padding position that does not decode to zero.
pub fn unpack_weights(p: &PackedWeightStream) -> Result<TernaryMatrix> {
    let cfg = p.config;
    let (k, c) = (cfg.inputs_per_insn(), cfg.block_size());
    let expected = p.padded_rows * p.padded_cols / 4;
    if p.payload.len() != expected {
        return Err(Error::PayloadLength {
            expected,
            found: p.payload.len(),
        });
    }
    let mut values = vec![0i8; p.padded_rows * p.padded_cols];
    for row in 0..p.padded_rows {
        for group in 0..p.groups() {
            let lane = read_bits(&p.payload, p.lane_pos(row, group), cfg.lane_bits());
            for t in 0..cfg.blocks() {
                let pair = lane >> (t * 2 * c);
                let dense = (pair & ((1 << c) - 1)) as u8;
                let sparse = (pair >> c & ((1 << c) - 1)) as u8;
                let col0 = group * k + t * c;
                let block = BlockIndices::new(c, dense, sparse)
                    .map_err(|_| Error::PackedContainment { row, col: col0 })?
                    .recompose();
                for (i, &v) in block.iter().enumerate() {
                    let col = col0 + i;
                    if v != 0 && (row >= p.rows || col >= p.cols) {
                        return Err(Error::NonZeroPadding { row, col });
                    }
                    values[row * p.padded_cols + col] = v;
                }
            }
        }
    }
    TernaryMatrix::new(p.padded_rows, p.padded_cols, values, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::config::{CONFIG_A, CONFIG_B};

    #[test]
    fn all_zero_matrix_packs_to_all_ones_pairs() {
        let p = pack_weights(&TernaryMatrix::zeros(16, 8).unwrap(), CONFIG_A);
        assert_eq!(p.payload_bits(), 256);
        assert!(p.payload().iter().all(|&b| b == 0xff));
    }

    #[test]
    fn single_row_example() {
        let w = TernaryMatrix::new(1, 2, vec![1, -1], 1.0).unwrap();
        let p = pack_weights(&w, CONFIG_A);
        assert_eq!((p.padded_rows(), p.padded_cols()), (16, 8));
        // channel 0 lane: block 0 = dense 0b01, sparse 0b00; blocks 1..3 zero blocks
        let lane0 = u16::from_le_bytes([p.payload()[0], p.payload()[1]]);
        assert_eq!(lane0 & 0xf, 0b0001);
        assert_eq!(lane0 >> 4, 0xfff);
        assert!(p.payload()[2..].iter().all(|&b| b == 0xff));

        let u = unpack_weights(&p).unwrap();
        assert_eq!(u, w.zero_padded(16, 8).unwrap().with_unit_scale());
    }

    #[test]
    fn zero_payload_is_rejected_when_padding_exists() {
        let good = pack_weights(&TernaryMatrix::zeros(3, 5).unwrap(), CONFIG_A);
        let zeros = vec![0u8; good.payload().len()];
        let p = PackedWeightStream::from_parts(CONFIG_A, 3, 5, 16, 8, zeros).unwrap();
        assert!(matches!(unpack_weights(&p), Err(Error::NonZeroPadding { .. })));

        // without padding an all-zero payload is every weight at -1
        let p = PackedWeightStream::from_parts(CONFIG_A, 16, 8, 16, 8, vec![0; 32]).unwrap();
        assert!(unpack_weights(&p).unwrap().values().iter().all(|&v| v == -1));
    }

    #[test]
    fn containment_violation_detected() {
        let mut p = pack_weights(&TernaryMatrix::new(16, 8, vec![-1; 128], 1.0).unwrap(), CONFIG_A);
        // set sparse bit 0 of channel 0 block 0 while its dense bit is clear
        p.payload_mut()[0] |= 0b0100;
        assert_eq!(unpack_weights(&p), Err(Error::PackedContainment { row: 0, col: 0 }));
    }

    #[test]
    fn payload_length_checked() {
        assert_eq!(
            PackedWeightStream::from_parts(CONFIG_B, 16, 16, 16, 16, vec![0; 63]),
            Err(Error::PayloadLength {
                expected: 64,
                found: 63
            })
        );
    }

    #[test]
    fn serialization_header_layout() {
        let w = TernaryMatrix::new(1, 2, vec![1, -1], 1.0).unwrap();
        let p = pack_weights(&w, CONFIG_B);
        let bytes = p.to_bytes().unwrap();
        assert_eq!(&bytes[..8], b"TSARPKW1");
        assert_eq!(bytes[8], 2);
        assert_eq!(&bytes[9..13], &16u32.to_le_bytes());
        assert_eq!(&bytes[13..17], &16u32.to_le_bytes());
        assert_eq!(&bytes[17..21], &1u32.to_le_bytes());
        assert_eq!(&bytes[21..25], &2u32.to_le_bytes());
        assert!(bytes[25..32].iter().all(|&b| b == 0));
        assert_eq!(bytes.len(), 32 + 64);
        assert_eq!(PackedWeightStream::from_bytes(&bytes).unwrap(), p);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(PackedWeightStream::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(PackedWeightStream::from_bytes(&bad).is_err());
        assert!(PackedWeightStream::from_bytes(&bytes[..40]).is_err());
    }

    #[test]
    fn custom_config_cannot_serialize() {
        let neon = KernelConfig::new(2, 4, 8, 128).unwrap();
        let p = pack_weights(&TernaryMatrix::zeros(8, 8).unwrap(), neon);
        assert!(p.to_bytes().is_err());
        assert_eq!(unpack_weights(&p).unwrap(), TernaryMatrix::zeros(8, 8).unwrap());
    }
}
