//! Seeded two-domain place datasets.
//!
//! Every place is a cluster in feature space. Cluster centers are standard
//! normal. The latent attribute directions are supported on the leading
//! `attribute_dims` coordinates only, and within-place variation is confined
//! to the remaining ones, so all images of one place share their latent
//! attribute strengths bit-exactly while their raw features still differ. The
//! test domain applies `gain·f + offset` to every coordinate and adds
//! isotropic gaussian noise; with zero noise every latent strength of a test
//! image is a strictly increasing affine function of its training strength.
//!
//! Random numbers come from ChaCha8 seeded with `seed`, so the output is a
//! pure function of the [`SyntheticSpec`].

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attribute_model::{AttributeModel, PairConstraint, Relation};
use crate::error::{Error, Result};
use crate::features::{dot, FeatureVector, Pose};
use crate::place_partition::PlaceGrid;

/// Names used for the first six latent attributes.
pub const ATTRIBUTE_NAMES: [&str; 6] = [
    "natural",
    "open",
    "perspective",
    "large-objects",
    "diagonal-plane",
    "close-depth",
];

/// Side length of one place cell, in meters.
pub const CELL_SIZE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainShift {
    pub monotone_gain: f64,
    pub monotone_offset: f64,
    pub noise_sigma: f64,
}

impl DomainShift {
    pub fn none() -> Self {
        DomainShift {
            monotone_gain: 1.0,
            monotone_offset: 0.0,
            noise_sigma: 0.0,
        }
    }
}

fn default_cluster_spread() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_places: usize,
    pub images_per_place: usize,
    pub feature_dim: usize,
    pub num_attributes: usize,
    pub domain_shift: DomainShift,
    pub seed: u64,
    /// Standard deviation of within-place variation on the non-attribute
    /// coordinates.
    #[serde(default = "default_cluster_spread")]
    pub cluster_spread: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_places == 0
            || self.images_per_place == 0
            || self.feature_dim == 0
            || self.num_attributes == 0
        {
            return Err(Error::Config(
                "synthetic counts must all be at least 1".into(),
            ));
        }
        let s = &self.domain_shift;
        if !(s.monotone_gain.is_finite() && s.monotone_gain > 0.0) {
            return Err(Error::Config("monotone_gain must be positive".into()));
        }
        if !s.monotone_offset.is_finite() {
            return Err(Error::Config("monotone_offset must be finite".into()));
        }
        if !(s.noise_sigma.is_finite() && s.noise_sigma >= 0.0) {
            return Err(Error::Config("noise_sigma must be non-negative".into()));
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread >= 0.0) {
            return Err(Error::Config("cluster_spread must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: Vec<FeatureVector>,
    /// Same ids and poses as `train`, in the same order, after the shift.
    pub test: Vec<FeatureVector>,
    pub latent_models: Vec<AttributeModel>,
    pub grid: PlaceGrid,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Coordinates that carry attribute signal: at least `num_attributes` and at
/// least half of the feature dimension.
pub fn attribute_dims(spec: &SyntheticSpec) -> usize {
    spec.num_attributes
        .max(spec.feature_dim.div_ceil(2))
        .min(spec.feature_dim)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let dim = spec.feature_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let active = attribute_dims(spec);
    let mut directions = Vec::with_capacity(spec.num_attributes);
    for _ in 0..spec.num_attributes {
        let mut w = gaussian_vec(&mut rng, active);
        normalize(&mut w);
        w.resize(dim, 0.0);
        directions.push(w);
    }

    let cols = (spec.num_places as f64).sqrt().ceil() as u32;
    let rows = (spec.num_places as u32).div_ceil(cols);
    let grid = PlaceGrid::new(
        (0.0, CELL_SIZE * cols as f64),
        (0.0, CELL_SIZE * rows as f64),
        cols,
        rows,
    )?;

    let shift = spec.domain_shift;
    let mut train = Vec::with_capacity(spec.num_places * spec.images_per_place);
    let mut test = Vec::with_capacity(train.capacity());
    for place in 0..spec.num_places {
        let center = gaussian_vec(&mut rng, dim);
        let (col, row) = ((place as u32 % cols) as f64, (place as u32 / cols) as f64);
        for i in 0..spec.images_per_place {
            let mut values = center.clone();
            for x in &mut values[active..] {
                *x += spec.cluster_spread * rng.sample::<f64, _>(StandardNormal);
            }
            let pose = Pose::new(
                CELL_SIZE * (col + rng.random_range(0.1..0.9)),
                CELL_SIZE * (row + rng.random_range(0.1..0.9)),
            );
            let shifted: Vec<f64> = values
                .iter()
                .map(|x| {
                    let noise = if shift.noise_sigma > 0.0 {
                        shift.noise_sigma * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    shift.monotone_gain * x + shift.monotone_offset + noise
                })
                .collect();
            let id = format!("p{place:03}_{i:03}");
            test.push(FeatureVector::new(id.clone(), shifted, Some(pose))?);
            train.push(FeatureVector::new(id, values, Some(pose))?);
        }
    }

    let latent_models = directions
        .into_iter()
        .enumerate()
        .map(|(j, w)| {
            let name = ATTRIBUTE_NAMES
                .get(j)
                .map_or_else(|| format!("attr{j}"), |s| s.to_string());
            AttributeModel::from_weights(name, w)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SyntheticData {
        train,
        test,
        latent_models,
        grid,
    })
}

/// Draws `per_attribute` labelled pairs per latent attribute from the
/// training images, ordered by latent strength. Equal strengths (same place)
/// become `~` pairs.
pub fn sample_pairs(
    data: &SyntheticData,
    per_attribute: usize,
    seed: u64,
) -> Result<Vec<PairConstraint>> {
    let n = data.train.len();
    if n < 2 {
        return Err(Error::Config("need at least two training images".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_attribute * data.latent_models.len());
    for model in &data.latent_models {
        let strengths: Vec<f64> = data
            .train
            .iter()
            .map(|f| model.strength(f))
            .collect::<Result<_>>()?;
        for _ in 0..per_attribute {
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let (a, b, rel) = match strengths[i].partial_cmp(&strengths[j]) {
                Some(Ordering::Less) => (j, i, Relation::AStronger),
                Some(Ordering::Greater) => (i, j, Relation::AStronger),
                _ => (i, j, Relation::Similar),
            };
            out.push(PairConstraint::new(
                &model.attribute_name,
                &data.train[a].id,
                &data.train[b].id,
                rel,
            )?);
        }
    }
    Ok(out)
}
