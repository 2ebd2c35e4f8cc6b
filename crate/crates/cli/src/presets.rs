use std::path::Path;

use serde::Deserialize;
use tsar_core::quant::GemvShape;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapePreset {
    pub name: String,
    pub shapes: Vec<GemvShape>,
}

fn shape(n: usize, k: usize, m: usize) -> GemvShape {
    GemvShape::new(n, k, m).expect("built-in shapes are positive")
}

pub fn builtin() -> Vec<ShapePreset> {
    let p = |name: &str, shapes: Vec<GemvShape>| ShapePreset {
        name: name.into(),
        shapes,
    };
    vec![
        p(
            "small",
            vec![
                shape(1, 8, 16),
                shape(1, 16, 16),
                shape(1, 12, 4),
                shape(4, 16, 16),
                shape(2, 300, 70),
                shape(3, 520, 130),
            ],
        ),
        p("bitnet-2b-proj", vec![shape(1, 2560, 6912), shape(1, 6912, 2560)]),
        p(
            "bitnet-2b-prefill",
            vec![shape(128, 2560, 6912), shape(128, 6912, 2560)],
        ),
        p("mobile-large", vec![shape(1, 8192, 45568)]),
    ]
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    #[serde(default)]
    preset: Vec<PresetEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetEntry {
    name: String,
    shapes: Vec<String>,
}

/// `[[preset]]` tables with a `name` and `shapes = ["NxKxM", ...]`.
pub fn parse_preset_file(text: &str) -> Result<Vec<ShapePreset>, CliError> {
    let file: PresetFile = toml::from_str(text).map_err(|e| CliError::Config(format!("preset file: {e}")))?;
    if file.preset.is_empty() {
        return Err(CliError::Config("preset file defines no presets".into()));
    }
    file.preset
        .into_iter()
        .map(|e| {
            if e.shapes.is_empty() {
                return Err(CliError::Config(format!("preset {:?} has no shapes", e.name)));
            }
            let shapes = e
                .shapes
                .iter()
                .map(|s| s.parse::<GemvShape>())
                .collect::<Result<_, _>>()
                .map_err(|err| CliError::Config(format!("preset {:?}: {err}", e.name)))?;
            Ok(ShapePreset { name: e.name, shapes })
        })
        .collect()
}

pub fn load_preset_file(path: &Path) -> Result<Vec<ShapePreset>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_preset_file(&text)
}
