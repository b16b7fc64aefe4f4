//! Synthetic two-domain classification tasks.

use dwmd_core::SampleMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const SOURCE_STREAM: u64 = 0;
const TARGET_STREAM: u64 = 1;

/// Centre of the two-moons layout; target rotation is about this point.
pub const MOONS_CENTRE: [f64; 2] = [0.5, 0.25];

/// Samples with 0-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: SampleMatrix,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: SampleMatrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != samples.samples() {
            return Err(invalid(
                "labels",
                format!("{} labels for {} samples", labels.len(), samples.samples()),
            ));
        }
        Ok(Self { samples, labels })
    }

    pub fn classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// Labeled source and target domains. Target labels are for evaluation only.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPair {
    pub source: Dataset,
    pub target: Dataset,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| invalid("noise", e.to_string()))
}

fn moons_domain(m: usize, angle: f64, noise: f64, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let half = m / 2;
    let jitter = normal(noise)?;
    let (sin, cos) = angle.sin_cos();
    let mut data = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(m);
    for class in 0..2 {
        for i in 0..half {
            let t = std::f64::consts::PI * i as f64 / (half - 1) as f64;
            let (x, y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            let x = x + jitter.sample(rng) - MOONS_CENTRE[0];
            let y = y + jitter.sample(rng) - MOONS_CENTRE[1];
            data.push(cos * x - sin * y + MOONS_CENTRE[0]);
            data.push(sin * x + cos * y + MOONS_CENTRE[1]);
            labels.push(class);
        }
    }
    Dataset::new(SampleMatrix::from_vec(m, 2, data)?, labels)
}

/// Two interleaved half circles per domain, `m / 2` points per class on an
/// even grid of angles plus Gaussian jitter. The target is the same layout
/// rotated by `rotation_deg` about [`MOONS_CENTRE`], with its own jitter.
pub fn gen_moons(m: usize, rotation_deg: f64, noise: f64, seed: u64) -> Result<DomainPair> {
    if m < 40 || !m.is_multiple_of(2) {
        return Err(invalid("m", format!("{m} must be even and >= 40")));
    }
    if !(0.0..=90.0).contains(&rotation_deg) {
        return Err(invalid("rotation", format!("{rotation_deg} is outside [0, 90] degrees")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(invalid("noise", format!("{noise} must be finite and >= 0")));
    }
    let source = moons_domain(m, 0.0, noise, &mut stream_rng(seed, SOURCE_STREAM))?;
    let target = moons_domain(m, rotation_deg.to_radians(), noise, &mut stream_rng(seed, TARGET_STREAM))?;
    Ok(DomainPair { source, target })
}

fn blobs(m: usize, d: usize, offset: &[f64], scale: &[f64], rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let unit = normal(1.0)?;
    let mut data = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let class = i % 2;
        let centre = if class == 0 { -1.0 } else { 1.0 };
        for j in 0..d {
            data.push(scale[j] * (centre + unit.sample(rng)) + offset[j]);
        }
        labels.push(class);
    }
    Dataset::new(SampleMatrix::from_vec(m, d, data)?, labels)
}

/// Two unit-variance Gaussian classes centred at `-1` and `+1` in every
/// dimension. Target points are `scale * x + offset` per dimension, so the
/// per-dimension mean gap between domains is `offset`.
pub fn gen_gaussian_shift(m: usize, offset: &[f64], scale: &[f64], seed: u64) -> Result<DomainPair> {
    let d = offset.len();
    if d == 0 || scale.len() != d {
        return Err(invalid(
            "offset/scale",
            format!("need equal nonzero lengths, got {} and {}", d, scale.len()),
        ));
    }
    if m < 2 || !m.is_multiple_of(2) {
        return Err(invalid("m", format!("{m} must be even and >= 2")));
    }
    if let Some(s) = scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(invalid("scale", format!("entry {s} must be positive")));
    }
    if offset.iter().any(|o| !o.is_finite()) {
        return Err(invalid("offset", "entries must be finite"));
    }
    let ones = vec![1.0; d];
    let zeros = vec![0.0; d];
    let source = blobs(m, d, &zeros, &ones, &mut stream_rng(seed, SOURCE_STREAM))?;
    let target = blobs(m, d, offset, scale, &mut stream_rng(seed, TARGET_STREAM))?;
    Ok(DomainPair { source, target })
}

/// Task description as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Moons {
        m: usize,
        rotation: f64,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    GaussianShift {
        m: usize,
        offset: Vec<f64>,
        scale: Vec<f64>,
    },
    Csv {
        source: std::path::PathBuf,
        target: std::path::PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
    },
}

fn default_noise() -> f64 {
    0.1
}

fn default_label_column() -> String {
    "label".into()
}

impl Task {
    /// Builds the domain pair; `seed` drives the synthetic generators.
    pub fn load(&self, seed: u64) -> Result<DomainPair> {
        match self {
            Task::Moons { m, rotation, noise } => gen_moons(*m, *rotation, *noise, seed),
            Task::GaussianShift { m, offset, scale } => gen_gaussian_shift(*m, offset, scale, seed),
            Task::Csv { source, target, label_column } => {
                let load = |p: &std::path::Path| -> Result<Dataset> {
                    let loaded = crate::csvio::load_csv(p, Some(label_column))?;
                    Dataset::new(loaded.samples, loaded.labels.unwrap_or_default())
                };
                Ok(DomainPair { source: load(source)?, target: load(target)? })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moons_are_balanced_and_deterministic() {
        let a = gen_moons(100, 30.0, 0.1, 4).unwrap();
        let b = gen_moons(100, 30.0, 0.1, 4).unwrap();
        assert_eq!(a, b);
        for d in [&a.source, &a.target] {
            assert_eq!(d.labels.iter().filter(|&&y| y == 0).count(), 50);
            assert_eq!(d.labels.iter().filter(|&&y| y == 1).count(), 50);
        }
        assert_ne!(a, gen_moons(100, 30.0, 0.1, 5).unwrap());
    }

    #[test]
    fn noiseless_unrotated_moons_coincide() {
        let p = gen_moons(40, 0.0, 0.0, 9).unwrap();
        assert_eq!(p.source, p.target);
        // grid endpoints of the outer moon
        assert_eq!(p.source.samples.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn rotation_preserves_distance_to_centre() {
        let p = gen_moons(40, 90.0, 0.0, 1).unwrap();
        for i in 0..40 {
            let r = |row: &[f64]| (row[0] - MOONS_CENTRE[0]).hypot(row[1] - MOONS_CENTRE[1]);
            assert!((r(p.source.samples.row(i)) - r(p.target.samples.row(i))).abs() < 1e-12);
        }
        // (1, 0) rotated a quarter turn about (0.5, 0.25)
        let first = p.target.samples.row(0);
        assert!((first[0] - 0.75).abs() < 1e-12 && (first[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn generator_arguments_are_checked() {
        assert!(gen_moons(38, 0.0, 0.1, 1).is_err());
        assert!(gen_moons(41, 0.0, 0.1, 1).is_err());
        assert!(gen_moons(40, 91.0, 0.1, 1).is_err());
        assert!(gen_moons(40, 10.0, -1.0, 1).is_err());
        assert!(gen_gaussian_shift(10, &[0.0, 1.0], &[1.0], 1).is_err());
        assert!(gen_gaussian_shift(10, &[0.0], &[0.0], 1).is_err());
        assert!(gen_gaussian_shift(11, &[0.0], &[1.0], 1).is_err());
    }

    #[test]
    fn gaussian_target_follows_the_affine_map() {
        let p = gen_gaussian_shift(2000, &[3.0, 0.0], &[1.0, 2.0], 2).unwrap();
        let mean = |d: &Dataset, j: usize| d.samples.column(j).sum::<f64>() / 2000.0;
        assert!((mean(&p.target, 0) - 3.0).abs() < 0.1);
        assert!(mean(&p.target, 1).abs() < 0.2);
        assert!(mean(&p.source, 0).abs() < 0.1);
    }
}
