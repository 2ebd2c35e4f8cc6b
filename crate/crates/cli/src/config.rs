use std::collections::BTreeSet;

use tsar_core::decomp::ConfigId;
use tsar_core::kernels::{select_kernel, Dataflow, KernelId};
use tsar_core::perf::{CostModel, CountingMode};
use tsar_core::quant::GemvShape;

use crate::args::{Common, ConfigArg, FormatArg, KernelArg, ModeArg};
use crate::error::CliError;
use crate::presets::{builtin, load_preset_file, ShapePreset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    /// Every kernel matching the config filter.
    All,
    Dataflow(Dataflow),
    Auto,
}

/// Resolved command configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub shapes: Vec<GemvShape>,
    pub kernel: KernelChoice,
    pub config: Option<ConfigId>,
    pub baseline: bool,
    pub seed: u64,
    pub mode: CountingMode,
    pub model: CostModel,
    pub threads_max: u32,
    pub format: FormatArg,
}

impl RunConfig {
    pub fn from_args(c: &Common, default_preset: Option<&str>) -> Result<Self, CliError> {
        let mut presets = builtin();
        let mut file_presets = Vec::new();
        if let Some(path) = &c.preset_file {
            file_presets = load_preset_file(path)?;
            presets.extend(file_presets.iter().cloned());
        }
        let find = |name: &str| -> Result<&ShapePreset, CliError> {
            presets.iter().rev().find(|p| p.name == name).ok_or_else(|| {
                let known: BTreeSet<_> = presets.iter().map(|p| p.name.as_str()).collect();
                CliError::Config(format!("unknown preset {name:?}; known: {known:?}"))
            })
        };
        let mut shapes = Vec::new();
        for name in &c.presets {
            shapes.extend(find(name)?.shapes.iter().copied());
        }
        for s in &c.shapes {
            shapes.push(s.parse::<GemvShape>()?);
        }
        if shapes.is_empty() {
            if !file_presets.is_empty() {
                shapes.extend(file_presets.iter().flat_map(|p| p.shapes.iter().copied()));
            } else if let Some(name) = default_preset {
                shapes.extend(find(name)?.shapes.iter().copied());
            } else {
                return Err(CliError::Config("no shape given; use --shape or --preset".into()));
            }
        }
        let model = CostModel::new(1.0, c.bw, 1)?;
        if c.threads_max == 0 {
            return Err(CliError::Config("--threads-max must be at least 1".into()));
        }
        Ok(Self {
            shapes,
            kernel: match c.kernel {
                None => KernelChoice::All,
                Some(KernelArg::ApMin) => KernelChoice::Dataflow(Dataflow::ApMin),
                Some(KernelArg::ApMax) => KernelChoice::Dataflow(Dataflow::ApMax),
                Some(KernelArg::Op) => KernelChoice::Dataflow(Dataflow::Op),
                Some(KernelArg::Auto) => KernelChoice::Auto,
            },
            config: c.config.map(config_id),
            baseline: c.baseline,
            seed: c.seed,
            mode: match c.mode {
                ModeArg::Payload => CountingMode::Payload,
                ModeArg::Line64 => CountingMode::Line64,
            },
            model,
            threads_max: c.threads_max,
            format: c.format,
        })
    }

    /// Kernels to run on `shape`, in tie-break order.
    pub fn kernels_for(&self, shape: GemvShape) -> Vec<KernelId> {
        let config_ok = |k: &KernelId| self.config.is_none_or(|c| k.config == c);
        match self.kernel {
            KernelChoice::All => KernelId::ALL.into_iter().filter(config_ok).collect(),
            KernelChoice::Dataflow(d) => KernelId::ALL
                .into_iter()
                .filter(|k| k.dataflow == d)
                .filter(config_ok)
                .collect(),
            KernelChoice::Auto => {
                let pick = select_kernel(shape, &self.model);
                match self.config {
                    Some(c) if pick.config != c => {
                        // Best kernel within the requested configuration.
                        let pool: Vec<_> = KernelId::ALL.into_iter().filter(config_ok).collect();
                        vec![best_of(&pool, shape, &self.model)]
                    }
                    _ => vec![pick],
                }
            }
        }
    }
}

fn best_of(pool: &[KernelId], shape: GemvShape, model: &CostModel) -> KernelId {
    let cost = |k: KernelId| tsar_core::kernels::kernel_cost(k, shape, model);
    let mut best = pool[0];
    for &k in &pool[1..] {
        if cost(k) < cost(best) {
            best = k;
        }
    }
    best
}

pub fn config_id(c: ConfigArg) -> ConfigId {
    match c {
        ConfigArg::A => ConfigId::A,
        ConfigArg::B => ConfigId::B,
    }
}
