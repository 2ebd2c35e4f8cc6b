use std::fmt;
use std::str::FromStr;

use crate::decomp::{ConfigId, KernelConfig};
use crate::error::{Error, Result};
use crate::isa::{RegGroup, RegMask, VReg, NUM_REGISTERS};
use crate::quant::GemvShape;

/// Input channels accumulated in 16 bits between spills. `256 * 127`
/// still fits in an `i16`.
pub const K_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dataflow {
    /// Activation-persistent, one accumulator live.
    ApMin,
    /// Activation-persistent, every free register holds an accumulator tile.
    ApMax,
    /// Output-persistent.
    Op,
}

impl Dataflow {
    pub const ALL: [Dataflow; 3] = [Dataflow::ApMin, Dataflow::ApMax, Dataflow::Op];

    pub fn name(self) -> &'static str {
        match self {
            Dataflow::ApMin => "ap-min",
            Dataflow::ApMax => "ap-max",
            Dataflow::Op => "op",
        }
    }
}

impl fmt::Display for Dataflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataflow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown dataflow {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelId {
    pub dataflow: Dataflow,
    pub config: ConfigId,
}

impl KernelId {
    /// All six kernels, in selection tie-break order.
    pub const ALL: [KernelId; 6] = [
        KernelId::new(Dataflow::ApMin, ConfigId::A),
        KernelId::new(Dataflow::ApMin, ConfigId::B),
        KernelId::new(Dataflow::ApMax, ConfigId::A),
        KernelId::new(Dataflow::ApMax, ConfigId::B),
        KernelId::new(Dataflow::Op, ConfigId::A),
        KernelId::new(Dataflow::Op, ConfigId::B),
    ];

    pub const fn new(dataflow: Dataflow, config: ConfigId) -> Self {
        Self { dataflow, config }
    }

    pub fn kernel_config(self) -> KernelConfig {
        self.config.config()
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.dataflow, self.config.letter().to_ascii_lowercase())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    /// `ap-min-a`, `op-b`, ...
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel {s:?}")))
    }
}

/// Fixed register assignment of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterMap {
    pub lut: VReg,
    pub weights: VReg,
    pub activations: VReg,
    first_acc: u8,
    accs: u8,
}

impl RegisterMap {
    pub fn for_config(id: ConfigId) -> Self {
        let r = |i| VReg::new(i).expect("static register");
        match id {
            ConfigId::A => Self {
                lut: r(0),
                activations: r(2),
                weights: r(3),
                first_acc: 4,
                accs: 12,
            },
            ConfigId::B => Self {
                lut: r(0),
                weights: r(8),
                activations: r(10),
                first_acc: 11,
                accs: 5,
            },
        }
    }

    /// Accumulators available beyond the LUT, weight and activation registers.
    pub fn max_accumulators(&self) -> usize {
        self.accs as usize
    }

    pub fn accumulator(&self, i: usize) -> VReg {
        assert!(i < self.max_accumulators(), "accumulator {i} outside the register map");
        VReg::new(self.first_acc + i as u8).expect("in range")
    }

    pub fn mask(&self, cfg: &KernelConfig) -> RegMask {
        let accs = RegMask((((1u32 << self.accs) - 1) << self.first_acc) as u16);
        self.lut_group(cfg)
            .mask()
            .union(self.weight_group(cfg).mask())
            .union(RegMask::of(self.activations))
            .union(accs)
    }

    pub fn lut_group(&self, cfg: &KernelConfig) -> RegGroup {
        RegGroup::new(self.lut, cfg.lut_registers() as u8).expect("aligned LUT group")
    }

    pub fn weight_group(&self, cfg: &KernelConfig) -> RegGroup {
        RegGroup::new(self.weights, cfg.weight_registers() as u8).expect("aligned weight group")
    }

    /// Groups are disjoint and fit the register file.
    pub fn validate(&self, cfg: &KernelConfig) -> Result<()> {
        let parts = [
            self.lut_group(cfg).mask(),
            self.weight_group(cfg).mask(),
            RegMask::of(self.activations),
            RegMask((((1u32 << self.accs) - 1) << self.first_acc) as u16),
        ];
        if self.first_acc as usize + self.accs as usize > NUM_REGISTERS {
            return Err(Error::RegisterOverlap("accumulators exceed V15".into()));
        }
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                if a.intersects(*b) {
                    return Err(Error::RegisterOverlap(format!("{a} and {b}")));
                }
            }
        }
        Ok(())
    }
}

/// Loop order of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Per row, passes over `tiles_per_pass` output tiles, each with its own
    /// accumulator held across the whole K loop.
    Blocked { tiles_per_pass: usize },
    /// Per row, one accumulator per TGEMV, 16-bit partials streamed through
    /// memory between groups of a chunk.
    Streaming,
    /// Per output tile, blocks of up to `rows_per_block` activation rows
    /// sharing each loaded weight operand.
    RowBlocked { rows_per_block: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelPlan {
    pub kernel: KernelId,
    pub shape: GemvShape,
    pub padded_k: usize,
    pub padded_m: usize,
    /// TGEMV input groups along K.
    pub groups: usize,
    /// Output tiles along M.
    pub tiles: usize,
    /// Groups per chunk between spills.
    pub chunk_groups: usize,
    pub chunks: usize,
    pub schedule: Schedule,
    pub regs: RegisterMap,
}

impl KernelPlan {
    pub fn new(kernel: KernelId, shape: GemvShape) -> Result<Self> {
        Self::with_chunk(kernel, shape, K_CHUNK)
    }

    /// Plan with an explicit K-chunk. Chunks above [`K_CHUNK`] are accepted
    /// here so that overflow faults can be provoked.
    pub fn with_chunk(kernel: KernelId, shape: GemvShape, chunk_inputs: usize) -> Result<Self> {
        let cfg = kernel.kernel_config();
        let (k, m) = (cfg.inputs_per_insn(), cfg.outputs_per_insn());
        if chunk_inputs == 0 || !chunk_inputs.is_multiple_of(k) {
            return Err(Error::InvalidConfig(format!(
                "K-chunk {chunk_inputs} is not a positive multiple of {k}"
            )));
        }
        if shape.n == 0 || shape.k == 0 || shape.m == 0 {
            return Err(Error::InvalidShape(shape.to_string()));
        }
        let regs = RegisterMap::for_config(kernel.config);
        regs.validate(&cfg)?;
        let groups = shape.k.div_ceil(k);
        let tiles = shape.m.div_ceil(m);
        let chunk_groups = chunk_inputs / k;
        let schedule = match kernel.dataflow {
            Dataflow::ApMin if tiles == 1 => Schedule::Blocked { tiles_per_pass: 1 },
            Dataflow::ApMin => Schedule::Streaming,
            Dataflow::ApMax => Schedule::Blocked {
                tiles_per_pass: regs.max_accumulators(),
            },
            Dataflow::Op => Schedule::RowBlocked {
                rows_per_block: regs.max_accumulators(),
            },
        };
        Ok(Self {
            kernel,
            shape,
            padded_k: groups * k,
            padded_m: tiles * m,
            groups,
            tiles,
            chunk_groups,
            chunks: groups.div_ceil(chunk_groups),
            schedule,
            regs,
        })
    }

    pub fn config(&self) -> KernelConfig {
        self.kernel.kernel_config()
    }

    /// Passes per row for blocked schedules, 1 otherwise.
    pub fn passes(&self) -> usize {
        match self.schedule {
            Schedule::Blocked { tiles_per_pass } => self.tiles.div_ceil(tiles_per_pass),
            _ => 1,
        }
    }

    pub fn row_blocks(&self) -> usize {
        match self.schedule {
            Schedule::RowBlocked { rows_per_block } => self.shape.n.div_ceil(rows_per_block),
            _ => self.shape.n,
        }
    }

    pub fn tlut_calls(&self) -> u64 {
        let (n, g, t) = (self.shape.n as u64, self.groups as u64, self.tiles as u64);
        match self.schedule {
            Schedule::Streaming => n * g,
            Schedule::Blocked { .. } => n * self.passes() as u64 * g,
            Schedule::RowBlocked { .. } => n * t * g,
        }
    }

    pub fn tgemv_calls(&self) -> u64 {
        (self.shape.n * self.tiles * self.groups) as u64
    }

    /// Unpadded activations in group `g`.
    pub fn valid_inputs(&self, g: usize) -> usize {
        let k = self.config().inputs_per_insn();
        (self.shape.k - g * k).min(k)
    }

    /// Unpadded output channels in tile `t`.
    pub fn valid_outputs(&self, t: usize) -> usize {
        let m = self.config().outputs_per_insn();
        (self.shape.m - t * m).min(m)
    }

    pub fn chunk_of(&self, g: usize) -> usize {
        g / self.chunk_groups
    }

    pub fn starts_chunk(&self, g: usize) -> bool {
        g.is_multiple_of(self.chunk_groups)
    }

    pub fn ends_chunk(&self, g: usize) -> bool {
        g % self.chunk_groups == self.chunk_groups - 1 || g + 1 == self.groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize, k: usize, m: usize) -> GemvShape {
        GemvShape::new(n, k, m).unwrap()
    }

    #[test]
    fn kernel_names_round_trip() {
        let names: Vec<String> = KernelId::ALL.iter().map(|k| k.to_string()).collect();
        assert_eq!(names, ["ap-min-a", "ap-min-b", "ap-max-a", "ap-max-b", "op-a", "op-b"]);
        for k in KernelId::ALL {
            assert_eq!(k.to_string().parse::<KernelId>().unwrap(), k);
        }
        assert!("ap-mid-a".parse::<KernelId>().is_err());
    }

    #[test]
    fn register_maps_fit() {
        for id in ConfigId::ALL {
            let map = RegisterMap::for_config(id);
            map.validate(&id.config()).unwrap();
            assert_eq!(map.mask(&id.config()).count(), 16);
        }
        assert_eq!(RegisterMap::for_config(ConfigId::A).max_accumulators(), 12);
        assert_eq!(RegisterMap::for_config(ConfigId::B).max_accumulators(), 5);
    }

    #[test]
    fn plan_geometry() {
        let p = KernelPlan::new(KernelId::new(Dataflow::ApMax, ConfigId::A), shape(1, 2560, 6912)).unwrap();
        assert_eq!((p.groups, p.tiles, p.chunk_groups, p.chunks), (320, 432, 32, 10));
        assert_eq!(p.passes(), 36);
        assert_eq!(p.tlut_calls(), 36 * 320);
        let p = KernelPlan::new(KernelId::new(Dataflow::ApMin, ConfigId::B), shape(1, 12, 4)).unwrap();
        assert_eq!(p.schedule, Schedule::Blocked { tiles_per_pass: 1 });
        assert_eq!((p.padded_k, p.padded_m, p.valid_inputs(0)), (16, 16, 12));
        assert!(p.ends_chunk(0));
    }

    #[test]
    fn ap_issues_fewer_tluts_than_op() {
        let s = shape(1, 512, 64);
        for c in ConfigId::ALL {
            let ap = KernelPlan::new(KernelId::new(Dataflow::ApMin, c), s).unwrap();
            let op = KernelPlan::new(KernelId::new(Dataflow::Op, c), s).unwrap();
            assert!(ap.tlut_calls() < op.tlut_calls());
            assert_eq!(ap.tlut_calls(), ap.groups as u64);
            assert_eq!(op.tlut_calls(), (op.tiles * op.groups) as u64);
        }
    }

    #[test]
    fn chunk_must_divide() {
        let k = KernelId::new(Dataflow::Op, ConfigId::B);
        assert!(KernelPlan::with_chunk(k, shape(1, 16, 16), 24).is_err());
        assert!(KernelPlan::with_chunk(k, shape(1, 16, 16), 512).is_ok());
        assert!(KernelPlan::new(k, GemvShape { n: 0, k: 16, m: 16 }).is_err());
    }
}
