//! Synthetic datasets and the CSV dataset format (`x_0..x_{d-1},label`).

use std::path::Path;

use crate::core::{rng_stream, Label, NoiseFamily, Vector};
use crate::error::{Error, Result};

/// Which side of an experiment a dataset feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// A labeled set of vectors with a consistent dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub split: Split,
    inputs: Vec<Vector>,
    labels: Vec<Label>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        split: Split,
        inputs: Vec<Vector>,
        labels: Vec<Label>,
        num_classes: usize,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::ConfigError("dataset must be non-empty".into()));
        }
        if inputs.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: labels.len(),
            });
        }
        if num_classes < 2 {
            return Err(Error::ConfigError("need at least 2 classes".into()));
        }
        let dim = inputs[0].dim();
        if inputs.iter().any(|x| x.dim() != dim) {
            return Err(Error::ConfigError("inconsistent input dims".into()));
        }
        if labels.iter().any(|l| l.index() >= num_classes) {
            return Err(Error::OutOfRange("label exceeds num_classes".into()));
        }
        Ok(Self {
            name: name.into(),
            split,
            inputs,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].dim()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input(&self, i: usize) -> &Vector {
        &self.inputs[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector, Label)> {
        self.inputs.iter().zip(self.labels.iter().copied())
    }

    /// Owned (input, label) pairs, the shape the trainer takes.
    pub fn pairs(&self) -> Vec<(Vector, Label)> {
        self.iter().map(|(x, y)| (x.clone(), y)).collect()
    }

    /// Replaces the inputs (e.g. with attacked versions), keeping labels.
    pub fn with_inputs(&self, inputs: Vec<Vector>, name: impl Into<String>) -> Result<Self> {
        Self::new(
            name,
            self.split,
            inputs,
            self.labels.clone(),
            self.num_classes,
        )
    }
}

/// Class centers on a regular simplex with pairwise distance `separation`,
/// expressed in `dim` coordinates (requires `dim >= num_classes - 1`).
///
/// The construction centers the canonical simplex and rotates it into the
/// first `num_classes - 1` coordinates via Gram-Schmidt on the complement
/// of the all-ones direction.
pub fn simplex_centers(num_classes: usize, dim: usize, separation: f64) -> Result<Vec<Vec<f64>>> {
    if num_classes < 2 {
        return Err(Error::ConfigError("need at least 2 classes".into()));
    }
    if dim < num_classes - 1 {
        return Err(Error::ConfigError(format!(
            "dim {dim} too small for {num_classes} equidistant centers"
        )));
    }
    let k = num_classes;
    // Centered vertices v_i = e_i - 1/k in R^k, pairwise distance sqrt(2).
    // Build an orthonormal basis of the hyperplane orthogonal to (1,..,1).
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k - 1);
    for b in 0..k - 1 {
        // start from e_b, remove the all-ones component and prior basis vectors
        let mut v = vec![0.0; k];
        v[b] = 1.0;
        let mean = 1.0 / k as f64;
        for entry in v.iter_mut() {
            *entry -= mean;
        }
        for prev in &basis {
            let dot: f64 = v.iter().zip(prev.iter()).map(|(a, c)| a * c).sum();
            for (entry, c) in v.iter_mut().zip(prev.iter()) {
                *entry -= dot * c;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for entry in v.iter_mut() {
            *entry /= norm;
        }
        basis.push(v);
    }

    let scale = separation / std::f64::consts::SQRT_2;
    let mut centers = Vec::with_capacity(k);
    for i in 0..k {
        let mut coords = vec![0.0; dim];
        for (b, axis) in basis.iter().enumerate() {
            // coordinate of (e_i - 1/k) along the axis
            let mean: f64 = axis.iter().sum::<f64>() / k as f64;
            coords[b] = scale * (axis[i] - mean);
        }
        centers.push(coords);
    }
    Ok(centers)
}

/// Gaussian blobs: `points_per_class` draws of N(center_c, noise_std^2 I)
/// for each class, centers on a scaled simplex, deterministic per seed.
pub fn make_blobs(
    num_classes: usize,
    points_per_class: usize,
    dim: usize,
    class_separation: f64,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if points_per_class == 0 {
        return Err(Error::ConfigError("points_per_class must be positive".into()));
    }
    if !(class_separation > 0.0 && noise_std > 0.0) {
        return Err(Error::ConfigError(
            "class_separation and noise_std must be positive".into(),
        ));
    }
    let centers = simplex_centers(num_classes, dim, class_separation)?;
    let mut stream = rng_stream(seed, 0xB10B);
    let mut inputs = Vec::with_capacity(num_classes * points_per_class);
    let mut labels = Vec::with_capacity(num_classes * points_per_class);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..points_per_class {
            let point: Vec<f64> = center
                .iter()
                .map(|c| {
                    c + noise_std
                        * crate::noise::standard_variate(NoiseFamily::Gaussian, &mut stream)
                })
                .collect();
            inputs.push(Vector::new(point)?);
            labels.push(Label::new(class, num_classes)?);
        }
    }
    Dataset::new(
        format!("blobs-k{num_classes}-d{dim}-s{class_separation}"),
        Split::Train,
        inputs,
        labels,
        num_classes,
    )
}

/// Writes a dataset as CSV with header `x_0,..,x_{d-1},label`.
pub fn save_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..dataset.dim() {
        out.push_str(&format!("x_{i},"));
    }
    out.push_str("label\n");
    for (x, y) in dataset.iter() {
        for v in x.as_slice() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", y.index()));
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a dataset CSV; a `x_0,...` header row is accepted and skipped.
pub fn load_dataset_csv(path: &Path, split: Split) -> Result<Dataset> {
    let raw = std::fs::read_to_string(path)?;
    let mut inputs = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with("x_0") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Format(format!(
                "line {}: need at least one feature and a label",
                lineno + 1
            )));
        }
        let mut entries = Vec::with_capacity(fields.len() - 1);
        for f in &fields[..fields.len() - 1] {
            entries.push(f.parse::<f64>().map_err(|e| {
                Error::Format(format!("line {}: bad feature {f:?}: {e}", lineno + 1))
            })?);
        }
        let label: usize = fields[fields.len() - 1].parse().map_err(|e| {
            Error::Format(format!("line {}: bad label: {e}", lineno + 1))
        })?;
        inputs.push(Vector::new(entries)?);
        labels.push(label);
    }
    if inputs.is_empty() {
        return Err(Error::Format("dataset file has no rows".into()));
    }
    let num_classes = labels.iter().max().unwrap() + 1;
    let num_classes = num_classes.max(2);
    let labels = labels
        .into_iter()
        .map(|l| Label::new(l, num_classes))
        .collect::<Result<Vec<_>>>()?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, split, inputs, labels, num_classes)
}
