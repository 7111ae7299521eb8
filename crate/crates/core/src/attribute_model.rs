//! Linear relative-attribute rankers trained from pairwise comparisons.
//!
//! Each attribute gets a weight vector `w`; the strength of an image with
//! features `f` is `w·f`. Training minimizes
//!
//! ```text
//! ½‖w‖² + C·Σ_stronger max(0, 1 − w·(f_a − f_b)) + C·Σ_similar |w·(f_a − f_b)|
//! ```
//!
//! by full-batch subgradient descent with a fixed step. Subgradient steps do
//! not decrease the objective monotonically, so the trainer keeps the best
//! iterate seen and the recorded objective trace is the best-so-far value.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{common_dim, dot, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    /// `id_a` shows the attribute more strongly than `id_b`.
    #[serde(rename = ">")]
    AStronger,
    /// Both images show the attribute to a similar degree.
    #[serde(rename = "~")]
    Similar,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AStronger => ">",
            Relation::Similar => "~",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            ">" => Some(Relation::AStronger),
            "~" => Some(Relation::Similar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairConstraint {
    pub attribute_name: String,
    pub id_a: String,
    pub id_b: String,
    pub relation: Relation,
}

impl PairConstraint {
    pub fn new(
        attribute_name: impl Into<String>,
        id_a: impl Into<String>,
        id_b: impl Into<String>,
        relation: Relation,
    ) -> Result<Self> {
        let c = PairConstraint {
            attribute_name: attribute_name.into(),
            id_a: id_a.into(),
            id_b: id_b.into(),
            relation,
        };
        if c.id_a == c.id_b {
            return Err(Error::input(format!(
                "constraint compares {:?} with itself",
                c.id_a
            )));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_objective: f64,
    pub pairwise_accuracy: f64,
}

/// A trained linear ranking function for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeModel {
    pub attribute_name: String,
    pub weights: Vec<f64>,
    pub training_meta: TrainingMeta,
}

impl AttributeModel {
    /// Wraps a known weight vector, e.g. a latent direction from a generator.
    pub fn from_weights(attribute_name: impl Into<String>, weights: Vec<f64>) -> Result<Self> {
        let attribute_name = attribute_name.into();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::input(format!(
                "model {attribute_name:?} has non-finite weights"
            )));
        }
        Ok(AttributeModel {
            attribute_name,
            weights,
            training_meta: TrainingMeta {
                iterations: 0,
                final_objective: 0.0,
                pairwise_accuracy: 0.0,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Attribute strength `w·f` of an image.
    pub fn strength(&self, image: &FeatureVector) -> Result<f64> {
        self.strength_of(&image.values).map_err(|_| {
            Error::input(format!(
                "model {:?} has dimension {}, image {:?} has {}",
                self.attribute_name,
                self.dim(),
                image.id,
                image.dim()
            ))
        })
    }

    pub(crate) fn strength_of(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::input("dimension mismatch"));
        }
        Ok(dot(&self.weights, values))
    }
}

/// Free-function form of [`AttributeModel::strength`].
pub fn strength(model: &AttributeModel, image: &FeatureVector) -> Result<f64> {
    model.strength(image)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Weight of the pairwise loss terms relative to the regularizer.
    pub c: f64,
    pub max_iterations: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            c: 1.0,
            max_iterations: 1000,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::input("learning rate must be positive and finite"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::input("C must be positive and finite"));
        }
        if self.max_iterations == 0 {
            return Err(Error::input("max iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Feature differences `f_a − f_b` for the constraints of one attribute.
struct PairDiffs {
    dim: usize,
    stronger: Vec<f64>,
    similar: Vec<f64>,
}

impl PairDiffs {
    fn build(
        index: &HashMap<&str, &FeatureVector>,
        dim: usize,
        constraints: &[&PairConstraint],
    ) -> Result<Self> {
        let mut out = PairDiffs {
            dim,
            stronger: Vec::new(),
            similar: Vec::new(),
        };
        for c in constraints {
            let a = lookup(index, &c.id_a)?;
            let b = lookup(index, &c.id_b)?;
            let dst = match c.relation {
                Relation::AStronger => &mut out.stronger,
                Relation::Similar => &mut out.similar,
            };
            dst.extend(a.values.iter().zip(&b.values).map(|(x, y)| x - y));
        }
        Ok(out)
    }

    fn objective(&self, w: &[f64], c: f64) -> f64 {
        let reg = 0.5 * dot(w, w);
        let hinge: f64 = self
            .stronger
            .chunks_exact(self.dim)
            .map(|d| (1.0 - dot(w, d)).max(0.0))
            .sum();
        let similar: f64 = self
            .similar
            .chunks_exact(self.dim)
            .map(|d| dot(w, d).abs())
            .sum();
        reg + c * (hinge + similar)
    }

    fn subgradient(&self, w: &[f64], c: f64, grad: &mut [f64]) {
        grad.copy_from_slice(w);
        for d in self.stronger.chunks_exact(self.dim) {
            if dot(w, d) < 1.0 {
                for (g, x) in grad.iter_mut().zip(d) {
                    *g -= c * x;
                }
            }
        }
        for d in self.similar.chunks_exact(self.dim) {
            let s = dot(w, d);
            let sign = if s > 0.0 {
                1.0
            } else if s < 0.0 {
                -1.0
            } else {
                continue;
            };
            for (g, x) in grad.iter_mut().zip(d) {
                *g += c * sign * x;
            }
        }
    }
}

fn index_corpus(corpus: &[FeatureVector]) -> Result<HashMap<&str, &FeatureVector>> {
    let mut index = HashMap::with_capacity(corpus.len());
    for f in corpus {
        if index.insert(f.id.as_str(), f).is_some() {
            return Err(Error::input(format!("duplicate image id {:?}", f.id)));
        }
    }
    Ok(index)
}

fn lookup<'a>(index: &HashMap<&str, &'a FeatureVector>, id: &str) -> Result<&'a FeatureVector> {
    index
        .get(id)
        .copied()
        .ok_or_else(|| Error::input(format!("constraint references unknown image id {id:?}")))
}

/// Output of [`train_with_trace`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: AttributeModel,
    /// Best objective value after each iteration; entry 0 is the objective
    /// at the zero initialization.
    pub objective_trace: Vec<f64>,
}

/// Trains one attribute model. All constraints must name the same attribute.
pub fn train(
    corpus: &[FeatureVector],
    constraints: &[PairConstraint],
    config: &TrainConfig,
) -> Result<AttributeModel> {
    train_with_trace(corpus, constraints, config).map(|o| o.model)
}

pub fn train_with_trace(
    corpus: &[FeatureVector],
    constraints: &[PairConstraint],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let name = match constraints.first() {
        Some(c) => c.attribute_name.clone(),
        None => return Err(Error::input("no constraints supplied")),
    };
    if let Some(other) = constraints.iter().find(|c| c.attribute_name != name) {
        return Err(Error::input(format!(
            "constraints mix attributes {name:?} and {:?}",
            other.attribute_name
        )));
    }
    if !constraints
        .iter()
        .any(|c| c.relation == Relation::AStronger)
    {
        return Err(Error::input(format!(
            "attribute {name:?} has no stronger-than constraints"
        )));
    }
    let dim = common_dim(corpus)?.ok_or_else(|| Error::input("empty training corpus"))?;
    let index = index_corpus(corpus)?;
    let refs: Vec<&PairConstraint> = constraints.iter().collect();
    let diffs = PairDiffs::build(&index, dim, &refs)?;

    let c = config.c;
    let mut w = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut best_w = w.clone();
    let mut best = diffs.objective(&w, c);
    let mut trace = Vec::with_capacity(config.max_iterations + 1);
    trace.push(best);

    for iter in 0..config.max_iterations {
        diffs.subgradient(&w, c, &mut grad);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= config.learning_rate * gi;
        }
        let f = diffs.objective(&w, c);
        if !f.is_finite() {
            return Err(Error::Numerical(format!(
                "objective became non-finite at iteration {} while training {name:?}",
                iter + 1
            )));
        }
        if f < best {
            best = f;
            best_w.copy_from_slice(&w);
        }
        trace.push(best);
    }

    let mut model = AttributeModel {
        attribute_name: name,
        weights: best_w,
        training_meta: TrainingMeta {
            iterations: config.max_iterations,
            final_objective: best,
            pairwise_accuracy: 0.0,
        },
    };
    model.training_meta.pairwise_accuracy = pairwise_accuracy(&model, constraints, corpus)?;
    Ok(TrainOutcome {
        model,
        objective_trace: trace,
    })
}

/// Fraction of the model's stronger-than constraints it orders correctly.
///
/// Only constraints naming the model's attribute are counted, and similar
/// pairs are left out of the denominator.
pub fn pairwise_accuracy(
    model: &AttributeModel,
    constraints: &[PairConstraint],
    corpus: &[FeatureVector],
) -> Result<f64> {
    let index = index_corpus(corpus)?;
    let mut total = 0usize;
    let mut correct = 0usize;
    for c in constraints {
        if c.attribute_name != model.attribute_name || c.relation != Relation::AStronger {
            continue;
        }
        let a = model.strength(lookup(&index, &c.id_a)?)?;
        let b = model.strength(lookup(&index, &c.id_b)?)?;
        total += 1;
        if a > b {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::input(format!(
            "no stronger-than constraints for attribute {:?}",
            model.attribute_name
        )));
    }
    Ok(correct as f64 / total as f64)
}

/// Splits constraints by attribute name, in name order.
pub fn group_by_attribute(constraints: &[PairConstraint]) -> BTreeMap<String, Vec<PairConstraint>> {
    let mut groups: BTreeMap<String, Vec<PairConstraint>> = BTreeMap::new();
    for c in constraints {
        groups
            .entry(c.attribute_name.clone())
            .or_default()
            .push(c.clone());
    }
    groups
}
