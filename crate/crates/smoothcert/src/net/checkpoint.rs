//! JSON checkpoints: one document per model with a schema version, layer
//! dims, flat row-major parameters, head bounds (generators only), and the
//! seed the model was initialized from.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::core::rng_stream;
use crate::error::{Error, Result};
use crate::net::generator::{GeneratorBounds, NoiseGenNet};
use crate::net::mlp::Mlp;

pub const SCHEMA_VERSION: u32 = 1;

const KIND_CLASSIFIER: &str = "classifier";
const KIND_GENERATOR: &str = "noise_generator";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    schema_version: u32,
    kind: String,
    layer_dims: Vec<usize>,
    parameters: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<GeneratorBounds>,
    seed: u64,
}

fn read(path: &Path, expected_kind: &str) -> Result<CheckpointFile> {
    let raw = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&raw)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint schema_version {}",
            file.schema_version
        )));
    }
    if file.kind != expected_kind {
        return Err(Error::Format(format!(
            "expected a {expected_kind} checkpoint, found {}",
            file.kind
        )));
    }
    Ok(file)
}

fn write(path: &Path, file: &CheckpointFile) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, serde_json::to_string_pretty(file)?)?;
    Ok(())
}

pub fn save_classifier(f: &Mlp, seed: u64, path: &Path) -> Result<()> {
    write(
        path,
        &CheckpointFile {
            schema_version: SCHEMA_VERSION,
            kind: KIND_CLASSIFIER.into(),
            layer_dims: f.layer_dims().to_vec(),
            parameters: f.params_flat(),
            bounds: None,
            seed,
        },
    )
}

pub fn load_classifier(path: &Path) -> Result<Mlp> {
    let file = read(path, KIND_CLASSIFIER)?;
    Mlp::from_flat(&file.layer_dims, &file.parameters)
}

pub fn save_generator(g: &NoiseGenNet, seed: u64, path: &Path) -> Result<()> {
    write(
        path,
        &CheckpointFile {
            schema_version: SCHEMA_VERSION,
            kind: KIND_GENERATOR.into(),
            layer_dims: g.trunk_dims().to_vec(),
            parameters: g.params_flat(),
            bounds: Some(g.bounds()),
            seed,
        },
    )
}

pub fn load_generator(path: &Path) -> Result<NoiseGenNet> {
    let file = read(path, KIND_GENERATOR)?;
    let bounds = file
        .bounds
        .ok_or_else(|| Error::Format("generator checkpoint is missing bounds".into()))?;
    if file.layer_dims.len() < 2 {
        return Err(Error::Format("generator trunk needs at least 2 dims".into()));
    }
    let input_dim = file.layer_dims[0];
    let hidden = &file.layer_dims[1..];
    // Any in-range init scale works; parameters are overwritten next.
    let sigma_init = 0.5 * (bounds.scale_lo + bounds.scale_hi);
    let mut g = NoiseGenNet::new(input_dim, hidden, bounds, sigma_init, &mut rng_stream(0, 0))?;
    g.set_params_flat(&file.parameters)?;
    Ok(g)
}
