//! Descriptor databases, exhaustive retrieval and the repeated-sampling
//! mAP evaluation protocol.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribute_model::AttributeModel;
use crate::error::{Error, Result};
use crate::features::{common_dim, FeatureVector};
use crate::place_partition::{sample_classes_with, PlaceGrid, PlaceLabel};
use crate::rank_descriptor::{
    check_layout, DescriptorBuilder, PrototypeSet, RankDescriptor, RankMatrix,
};
use crate::similarity::{brs_ranks, l1, rrs_ranks, DissimilarityScore, Method};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbEntry {
    pub image_id: String,
    pub label: PlaceLabel,
    pub ranks: RankMatrix,
}

/// Immutable collection of labelled rank descriptors sharing one attribute
/// list and one prototype list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorDatabase {
    domain_tag: String,
    attribute_names: Vec<String>,
    prototype_ids: Vec<String>,
    entries: Vec<DbEntry>,
    // entry indices sorted by image id, the tie-break order for queries
    by_id: Vec<usize>,
}

impl DescriptorDatabase {
    pub fn new(
        domain_tag: impl Into<String>,
        attribute_names: Vec<String>,
        prototype_ids: Vec<String>,
        entries: Vec<DbEntry>,
    ) -> Result<Self> {
        if attribute_names.is_empty() || prototype_ids.is_empty() {
            return Err(Error::input(
                "database needs at least one attribute and prototype",
            ));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.ranks.rows() != attribute_names.len() || e.ranks.cols() != prototype_ids.len() + 1
            {
                return Err(Error::input(format!(
                    "entry {:?} has a {}×{} descriptor, expected {}×{}",
                    e.image_id,
                    e.ranks.rows(),
                    e.ranks.cols(),
                    attribute_names.len(),
                    prototype_ids.len() + 1
                )));
            }
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::input(format!("duplicate image id {:?}", e.image_id)));
            }
        }
        let mut by_id: Vec<usize> = (0..entries.len()).collect();
        by_id.sort_by(|&a, &b| entries[a].image_id.cmp(&entries[b].image_id));
        Ok(DescriptorDatabase {
            domain_tag: domain_tag.into(),
            attribute_names,
            prototype_ids,
            entries,
            by_id,
        })
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    pub fn with_domain_tag(mut self, tag: impl Into<String>) -> Self {
        self.domain_tag = tag.into();
        self
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn prototype_ids(&self) -> &[String] {
        &self.prototype_ids
    }

    pub fn entries(&self) -> &[DbEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Descriptor of entry `i`, with the database's identity lists attached.
    pub fn descriptor(&self, i: usize) -> RankDescriptor {
        RankDescriptor::new(
            self.attribute_names.clone(),
            self.prototype_ids.clone(),
            self.entries[i].ranks.clone(),
        )
        .expect("entry shapes are validated on construction")
    }

    /// Entry indices ordered by ascending (score, image id).
    fn order_by_rank_score(&self, q: &RankMatrix, method: Method) -> Vec<(usize, u32)> {
        let score = match method {
            Method::Brs => brs_ranks,
            Method::Rrs => rrs_ranks,
            Method::AbsL1 => unreachable!("callers reject ABS_L1"),
        };
        let mut scored: Vec<(usize, u32)> = self
            .by_id
            .iter()
            .map(|&i| (i, score(q, &self.entries[i].ranks)))
            .collect();
        // stable: equal scores keep id order
        scored.sort_by_key(|&(_, s)| s);
        scored
    }
}

/// Describes every image against `prototypes` and labels it by its pose.
pub fn build_database(
    models: &[AttributeModel],
    prototypes: &PrototypeSet,
    images: &[FeatureVector],
    grid: &PlaceGrid,
) -> Result<DescriptorDatabase> {
    grid.validate()?;
    let builder = DescriptorBuilder::new(models, prototypes)?;
    let entries = images
        .iter()
        .map(|img| {
            let label = label_of(grid, img)?;
            Ok(DbEntry {
                image_id: img.id.clone(),
                label,
                ranks: builder.rank_matrix(img)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DescriptorDatabase::new(
        "",
        builder.attribute_names().to_vec(),
        builder.prototype_ids().to_vec(),
        entries,
    )
}

fn label_of(grid: &PlaceGrid, img: &FeatureVector) -> Result<PlaceLabel> {
    let pose = img
        .pose
        .ok_or_else(|| Error::input(format!("image {:?} has no pose", img.id)))?;
    grid.cell_of(pose)
}

/// Database ids ordered from most to least similar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub ranked_ids: Vec<String>,
    pub scores: Vec<DissimilarityScore>,
}

/// Exhaustive linear scan. `k = None` returns every entry. Ties are broken by
/// ascending image id.
pub fn query(
    db: &DescriptorDatabase,
    q: &RankDescriptor,
    method: Method,
    k: Option<usize>,
) -> Result<RetrievalResult> {
    if !method.uses_ranks() {
        return Err(Error::input(format!(
            "{method} does not compare rank descriptors"
        )));
    }
    check_layout(
        &db.attribute_names,
        &db.prototype_ids,
        q.attribute_names(),
        q.prototype_ids(),
    )?;
    let order = db.order_by_rank_score(q.ranks(), method);
    let take = k.unwrap_or(order.len()).min(order.len());
    let (ranked_ids, scores) = order[..take]
        .iter()
        .map(|&(i, s)| {
            (
                db.entries[i].image_id.clone(),
                DissimilarityScore {
                    value: s as f64,
                    method,
                },
            )
        })
        .unzip();
    Ok(RetrievalResult { ranked_ids, scores })
}

/// Average precision of a ranked list: the mean, over relevant items, of the
/// precision at each relevant item's rank. Every relevant item must appear in
/// `ranked_ids`.
pub fn average_precision<T: Eq + Hash>(ranked_ids: &[T], relevant: &HashSet<T>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::input("relevant set is empty"));
    }
    let ap = ap_from_flags(
        ranked_ids.iter().map(|id| relevant.contains(id)),
        relevant.len(),
    );
    let found = ranked_ids
        .iter()
        .filter(|id| relevant.contains(*id))
        .count();
    if found != relevant.len() {
        return Err(Error::input(format!(
            "{} of {} relevant ids are missing from the ranking",
            relevant.len() - found,
            relevant.len()
        )));
    }
    Ok(ap)
}

fn ap_from_flags(flags: impl IntoIterator<Item = bool>, num_relevant: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, rel) in flags.into_iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    sum / num_relevant as f64
}

/// Which images the query side describes itself against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPrototypes {
    /// The query-domain images carrying the sampled prototypes' ids, so both
    /// sides rank against the same places seen in their own domain.
    #[default]
    Matched,
    /// The training-domain prototypes themselves.
    Training,
}

fn default_max_resample_attempts() -> usize {
    100
}

fn default_prototypes_per_class() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub num_trials: usize,
    pub classes_per_trial: usize,
    #[serde(default = "default_prototypes_per_class")]
    pub prototypes_per_class: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub query_prototypes: QueryPrototypes,
    #[serde(default = "default_max_resample_attempts")]
    pub max_resample_attempts: usize,
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.num_trials == 0 {
            return Err(Error::Config("num_trials must be at least 1".into()));
        }
        if self.classes_per_trial == 0 {
            return Err(Error::Config("classes_per_trial must be at least 1".into()));
        }
        if self.prototypes_per_class == 0 {
            return Err(Error::Config(
                "prototypes_per_class must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.max_resample_attempts == 0 {
            return Err(Error::Config(
                "max_resample_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-method outcome of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    /// mAP of each trial, in trial order.
    pub per_trial_map: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single trial.
    pub std: f64,
    pub config_fingerprint: String,
}

impl ExperimentReport {
    pub fn from_trials(
        method: Method,
        per_trial_map: Vec<f64>,
        config_fingerprint: String,
    ) -> Self {
        let (mean, std) = mean_std(&per_trial_map);
        ExperimentReport {
            method,
            per_trial_map,
            mean,
            std,
            config_fingerprint,
        }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Hex SHA-256 of the canonical JSON of the settings and grid.
pub fn config_fingerprint(settings: &ExperimentSettings, grid: &PlaceGrid) -> String {
    let doc = serde_json::json!({ "settings": settings, "grid": grid });
    hex::encode(Sha256::digest(doc.to_string().as_bytes()))
}

struct LabelledSet<'a> {
    images: &'a [FeatureVector],
    labels: Vec<PlaceLabel>,
    by_class: BTreeMap<PlaceLabel, Vec<usize>>,
}

impl<'a> LabelledSet<'a> {
    fn new(images: &'a [FeatureVector], grid: &PlaceGrid, what: &str) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::Config(format!("{what} image set is empty")));
        }
        let mut ids = HashSet::with_capacity(images.len());
        let labels = images
            .iter()
            .map(|img| {
                if !ids.insert(img.id.as_str()) {
                    return Err(Error::input(format!(
                        "duplicate {what} image id {:?}",
                        img.id
                    )));
                }
                label_of(grid, img)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut by_class: BTreeMap<PlaceLabel, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            by_class.entry(*l).or_default().push(i);
        }
        Ok(LabelledSet {
            images,
            labels,
            by_class,
        })
    }
}

struct Protocol<'a> {
    train: LabelledSet<'a>,
    test: LabelledSet<'a>,
    models: &'a [AttributeModel],
    grid: &'a PlaceGrid,
    settings: &'a ExperimentSettings,
    test_by_id: HashMap<&'a str, usize>,
    // per class, training images usable as prototypes
    eligible: BTreeMap<PlaceLabel, Vec<usize>>,
}

impl<'a> Protocol<'a> {
    fn sample_trial_classes(&self, trial: usize, rng: &mut ChaCha8Rng) -> Result<Vec<PlaceLabel>> {
        let candidates: BTreeSet<PlaceLabel> = self
            .eligible
            .iter()
            .filter(|(_, v)| v.len() >= self.settings.prototypes_per_class)
            .map(|(l, _)| *l)
            .collect();
        for _ in 0..self.settings.max_resample_attempts {
            let classes =
                sample_classes_with(self.grid, &candidates, self.settings.classes_per_trial, rng)?;
            if classes.iter().all(|c| self.test.by_class.contains_key(c)) {
                return Ok(classes);
            }
        }
        Err(Error::ResamplingExhausted {
            trial,
            attempts: self.settings.max_resample_attempts,
        })
    }

    fn run_trial(&self, trial: usize) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.settings.seed);
        rng.set_stream(trial as u64);
        let classes = self.sample_trial_classes(trial, &mut rng)?;
        let per_class = self.settings.prototypes_per_class;

        let mut train_protos = Vec::with_capacity(classes.len() * per_class);
        for c in &classes {
            let pool = &self.eligible[c];
            let mut picks: Vec<usize> = index::sample(&mut rng, pool.len(), per_class).into_vec();
            picks.sort_unstable();
            train_protos.extend(
                picks
                    .into_iter()
                    .map(|i| self.train.images[pool[i]].clone()),
            );
        }
        let query_protos = match self.settings.query_prototypes {
            QueryPrototypes::Training => train_protos.clone(),
            QueryPrototypes::Matched => train_protos
                .iter()
                .map(|p| self.test.images[self.test_by_id[p.id.as_str()]].clone())
                .collect(),
        };
        let note = format!("trial {trial}");
        let db_builder =
            DescriptorBuilder::new(self.models, &PrototypeSet::new(train_protos, note.clone())?)?;
        let query_builder =
            DescriptorBuilder::new(self.models, &PrototypeSet::new(query_protos, note)?)?;

        let in_trial = |set: &LabelledSet<'_>| -> Vec<usize> {
            let mut idx: Vec<usize> = classes
                .iter()
                .flat_map(|c| set.by_class[c].iter().copied())
                .collect();
            idx.sort_unstable();
            idx
        };
        let db_idx = in_trial(&self.train);
        let query_idx = in_trial(&self.test);

        let entries = db_idx
            .iter()
            .map(|&i| {
                Ok(DbEntry {
                    image_id: self.train.images[i].id.clone(),
                    label: self.train.labels[i],
                    ranks: db_builder.rank_matrix(&self.train.images[i])?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let db = DescriptorDatabase::new(
            "train",
            db_builder.attribute_names().to_vec(),
            db_builder.prototype_ids().to_vec(),
            entries,
        )?;
        let relevant_count: HashMap<PlaceLabel, usize> = classes
            .iter()
            .map(|c| (*c, self.train.by_class[c].len()))
            .collect();

        let mut ap_sums = vec![0.0; self.settings.methods.len()];
        for &qi in &query_idx {
            let query = &self.test.images[qi];
            let label = self.test.labels[qi];
            let n_rel = relevant_count[&label];
            let q_ranks = if self.settings.methods.iter().any(|m| m.uses_ranks()) {
                Some(query_builder.rank_matrix(query)?)
            } else {
                None
            };
            for (slot, &method) in self.settings.methods.iter().enumerate() {
                let ap = if method.uses_ranks() {
                    let order = db.order_by_rank_score(q_ranks.as_ref().unwrap(), method);
                    ap_from_flags(
                        order.iter().map(|&(i, _)| db.entries[i].label == label),
                        n_rel,
                    )
                } else {
                    let order = order_by_l1(self.train.images, &db_idx, query);
                    ap_from_flags(order.iter().map(|&i| self.train.labels[i] == label), n_rel)
                };
                ap_sums[slot] += ap;
            }
        }
        Ok(ap_sums
            .into_iter()
            .map(|s| s / query_idx.len() as f64)
            .collect())
    }
}

/// Image indices ordered by ascending (L1 distance, image id).
fn order_by_l1(images: &[FeatureVector], idx: &[usize], query: &FeatureVector) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = idx
        .iter()
        .map(|&i| (i, l1(&images[i].values, &query.values)))
        .collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| images[a.0].id.cmp(&images[b.0].id))
    });
    scored.into_iter().map(|(i, _)| i).collect()
}

/// Runs the repeated place-sampling evaluation.
///
/// Each trial samples `classes_per_trial` place classes, draws
/// `prototypes_per_class` training prototypes from each, builds a database
/// from the training images of those classes and scores every test image of
/// those classes as a query. Relevant entries share the query's place label.
/// Trials run in parallel; each draws from its own ChaCha8 stream, so the
/// result does not depend on scheduling.
pub fn run_experiment(
    train: &[FeatureVector],
    test: &[FeatureVector],
    models: &[AttributeModel],
    grid: &PlaceGrid,
    settings: &ExperimentSettings,
) -> Result<Vec<ExperimentReport>> {
    settings.validate()?;
    grid.validate()?;
    let mut methods_seen = HashSet::new();
    if let Some(m) = settings.methods.iter().find(|m| !methods_seen.insert(**m)) {
        return Err(Error::Config(format!("method {m} listed twice")));
    }
    if settings.methods.iter().any(|m| m.uses_ranks()) && models.is_empty() {
        return Err(Error::Config(
            "rank methods need at least one attribute model".into(),
        ));
    }
    let train_set = LabelledSet::new(train, grid, "training")?;
    let test_set = LabelledSet::new(test, grid, "test")?;
    common_dim(train.iter().chain(test))?;

    let test_by_id: HashMap<&str, usize> = test
        .iter()
        .enumerate()
        .map(|(i, f)| (f.id.as_str(), i))
        .collect();
    let eligible: BTreeMap<PlaceLabel, Vec<usize>> = train_set
        .by_class
        .iter()
        .map(|(l, idx)| {
            let usable = idx
                .iter()
                .copied()
                .filter(|&i| match settings.query_prototypes {
                    QueryPrototypes::Training => true,
                    QueryPrototypes::Matched => test_by_id.contains_key(train[i].id.as_str()),
                })
                .collect::<Vec<_>>();
            (*l, usable)
        })
        .collect();

    let k = settings.classes_per_trial;
    let sampleable = eligible
        .values()
        .filter(|v| v.len() >= settings.prototypes_per_class)
        .count();
    if k > sampleable {
        return Err(Error::Config(format!(
            "{k} classes per trial requested but only {sampleable} training classes hold \
             {} usable prototype(s)",
            settings.prototypes_per_class
        )));
    }
    if k > test_set.by_class.len() {
        return Err(Error::Config(format!(
            "{k} classes per trial requested but test images occupy only {} classes",
            test_set.by_class.len()
        )));
    }

    let protocol = Protocol {
        train: train_set,
        test: test_set,
        models,
        grid,
        settings,
        test_by_id,
        eligible,
    };
    let outcomes: Vec<Result<Vec<f64>>> = (0..settings.num_trials)
        .into_par_iter()
        .map(|t| protocol.run_trial(t))
        .collect();
    let mut per_method = vec![Vec::with_capacity(settings.num_trials); settings.methods.len()];
    for outcome in outcomes {
        for (slot, map) in outcome?.into_iter().enumerate() {
            per_method[slot].push(map);
        }
    }
    let fingerprint = config_fingerprint(settings, grid);
    Ok(settings
        .methods
        .iter()
        .zip(per_method)
        .map(|(&m, maps)| ExperimentReport::from_trials(m, maps, fingerprint.clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Pose;

    fn img(id: &str, values: &[f64], x: f64, y: f64) -> FeatureVector {
        FeatureVector::new(id, values.to_vec(), Some(Pose::new(x, y))).unwrap()
    }

    fn unit_grid() -> PlaceGrid {
        PlaceGrid::new((0.0, 3.0), (0.0, 1.0), 3, 1).unwrap()
    }

    fn ids(v: &[&str]) -> HashSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ranked(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ap_examples() {
        let r = ranked(&["a", "b", "c"]);
        let ap = average_precision(&r, &ids(&["a", "c"])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(average_precision(&r, &ids(&["a", "b"])).unwrap(), 1.0);
        assert_eq!(average_precision(&r, &ids(&["c"])).unwrap(), 1.0 / 3.0);
        assert!(matches!(
            average_precision(&r, &HashSet::new()),
            Err(Error::Input(_))
        ));
        assert!(average_precision(&r, &ids(&["z"])).is_err());
    }

    #[test]
    fn database_labels_and_clamps() {
        let models = [AttributeModel::from_weights("a", vec![1.0, 0.5]).unwrap()];
        let protos = PrototypeSet::new(vec![img("p", &[0.0, 0.0], 0.5, 0.5)], "").unwrap();
        let images = [
            img("x", &[1.0, 0.0], 0.5, 0.5),
            img("y", &[-1.0, 0.0], 1.5, 0.5),
            img("z", &[0.0, 2.0], 3.0, 1.0),
        ];
        let db = build_database(&models, &protos, &images, &unit_grid()).unwrap();
        let labels: Vec<_> = db.entries().iter().map(|e| e.label.0).collect();
        assert_eq!(labels, [0, 1, 2]);
    }

    #[test]
    fn database_requires_poses_inside_workspace() {
        let models = [AttributeModel::from_weights("a", vec![1.0]).unwrap()];
        let protos = PrototypeSet::new(vec![img("p", &[0.0], 0.5, 0.5)], "").unwrap();
        let no_pose = [FeatureVector::new("x", vec![1.0], None).unwrap()];
        assert!(matches!(
            build_database(&models, &protos, &no_pose, &unit_grid()),
            Err(Error::Input(_))
        ));
        let outside = [img("x", &[1.0], 4.0, 0.5)];
        assert!(matches!(
            build_database(&models, &protos, &outside, &unit_grid()),
            Err(Error::OutOfWorkspace { .. })
        ));
        let dup = [img("x", &[1.0], 0.5, 0.5), img("x", &[2.0], 0.5, 0.5)];
        assert!(build_database(&models, &protos, &dup, &unit_grid()).is_err());
    }

    fn two_entry_db() -> DescriptorDatabase {
        let names = vec!["a".to_string()];
        let protos = vec!["p1".to_string(), "p2".to_string()];
        let entries = vec![
            DbEntry {
                image_id: "far".into(),
                label: PlaceLabel(0),
                ranks: RankMatrix::from_rows(vec![vec![3, 1, 2]]).unwrap(),
            },
            DbEntry {
                image_id: "near".into(),
                label: PlaceLabel(1),
                ranks: RankMatrix::from_rows(vec![vec![2, 1, 3]]).unwrap(),
            },
        ];
        DescriptorDatabase::new("t", names, protos, entries).unwrap()
    }

    #[test]
    fn query_orders_by_score_then_id() {
        let db = two_entry_db();
        let q = RankDescriptor::new(
            db.attribute_names().to_vec(),
            db.prototype_ids().to_vec(),
            RankMatrix::from_rows(vec![vec![1, 2, 3]]).unwrap(),
        )
        .unwrap();
        let top = query(&db, &q, Method::Rrs, Some(1)).unwrap();
        assert_eq!(top.ranked_ids, ["near"]);
        assert_eq!(top.scores[0].value, 2.0);
        let all = query(&db, &q, Method::Rrs, None).unwrap();
        assert_eq!(all.ranked_ids, ["near", "far"]);
        assert_eq!(all.scores[1].value, 4.0);
        // BRS: both differ by... far |1-3| = 2, near |1-2| = 1
        let brs = query(&db, &q, Method::Brs, None).unwrap();
        assert_eq!(brs.ranked_ids, ["near", "far"]);
        assert!(query(&db, &q, Method::AbsL1, None).is_err());
    }

    #[test]
    fn identical_descriptor_ranks_first() {
        let db = two_entry_db();
        let q = db.descriptor(0);
        let r = query(&db, &q, Method::Brs, None).unwrap();
        assert_eq!(r.ranked_ids[0], "far");
        assert_eq!(r.scores[0].value, 0.0);
    }

    #[test]
    fn query_rejects_foreign_descriptor() {
        let db = two_entry_db();
        let q = RankDescriptor::new(
            db.attribute_names().to_vec(),
            vec!["p1".into()],
            RankMatrix::from_rows(vec![vec![1, 2]]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            query(&db, &q, Method::Brs, None),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn mean_std_uses_sample_variance() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
    }

    fn self_match_settings(methods: Vec<Method>) -> ExperimentSettings {
        ExperimentSettings {
            num_trials: 1,
            classes_per_trial: 1,
            prototypes_per_class: 1,
            seed: 3,
            methods,
            query_prototypes: QueryPrototypes::Matched,
            max_resample_attempts: 10,
        }
    }

    #[test]
    fn single_class_self_match_is_perfect() {
        let images = [
            img("a", &[1.0, 0.0], 0.2, 0.5),
            img("b", &[0.0, 1.0], 0.4, 0.5),
            img("c", &[0.5, 0.5], 0.6, 0.5),
        ];
        let models = [
            AttributeModel::from_weights("u", vec![1.0, 0.0]).unwrap(),
            AttributeModel::from_weights("v", vec![0.3, -1.0]).unwrap(),
        ];
        let settings = self_match_settings(vec![Method::Brs, Method::Rrs]);
        let reports = run_experiment(&images, &images, &models, &unit_grid(), &settings).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.per_trial_map, [1.0]);
            assert_eq!((r.mean, r.std), (1.0, 0.0));
            assert_eq!(r.config_fingerprint.len(), 64);
        }
    }

    #[test]
    fn missing_test_class_exhausts_resampling() {
        let train = [img("a", &[1.0], 1.5, 0.5), img("b", &[2.0], 2.5, 0.5)];
        let test = [img("a", &[1.0], 0.5, 0.5), img("b", &[2.0], 1.5, 0.5)];
        let models = [AttributeModel::from_weights("u", vec![1.0]).unwrap()];
        let settings = ExperimentSettings {
            num_trials: 4,
            classes_per_trial: 2,
            ..self_match_settings(vec![Method::Brs])
        };
        // both sets occupy two classes, but class 2 never has test queries
        let err = run_experiment(&train, &test, &models, &unit_grid(), &settings).unwrap_err();
        match err {
            Error::ResamplingExhausted { .. } => assert_eq!(err.exit_code(), 4),
            Error::Config(_) => panic!("expected resampling to be attempted"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn too_many_classes_is_a_config_error() {
        let train = [img("a", &[1.0], 0.5, 0.5)];
        let models = [AttributeModel::from_weights("u", vec![1.0]).unwrap()];
        let settings = ExperimentSettings {
            classes_per_trial: 2,
            ..self_match_settings(vec![Method::Brs])
        };
        assert!(matches!(
            run_experiment(&train, &train, &models, &unit_grid(), &settings),
            Err(Error::Config(_))
        ));
        let no_methods = self_match_settings(vec![]);
        assert!(run_experiment(&train, &train, &models, &unit_grid(), &no_methods).is_err());
        let twice = self_match_settings(vec![Method::Brs, Method::Brs]);
        assert!(run_experiment(&train, &train, &models, &unit_grid(), &twice).is_err());
    }

    #[test]
    fn matched_prototypes_need_counterparts() {
        let train = [img("a", &[1.0], 0.5, 0.5)];
        let test = [img("q", &[1.0], 0.5, 0.5)];
        let models = [AttributeModel::from_weights("u", vec![1.0]).unwrap()];
        let settings = self_match_settings(vec![Method::Brs]);
        assert!(matches!(
            run_experiment(&train, &test, &models, &unit_grid(), &settings),
            Err(Error::Config(_))
        ));
        let shared = ExperimentSettings {
            query_prototypes: QueryPrototypes::Training,
            ..settings
        };
        let r = run_experiment(&train, &test, &models, &unit_grid(), &shared).unwrap();
        assert_eq!(r[0].per_trial_map, [1.0]);
    }
}
