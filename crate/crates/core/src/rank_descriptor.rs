//! Rank-matrix image descriptors.
//!
//! For every attribute model the query and each of the `N` prototypes get a
//! strength relative to the query (`prototype score − query score`, so the
//! query sits at exactly zero). Sorting that list in descending order and
//! reading off 1-based positions gives one row of ranks; stacking the rows of
//! all `M` attributes yields the `M×(N+1)` descriptor. Column 0 is always the
//! query.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attribute_model::AttributeModel;
use crate::error::{Error, Result};
use crate::features::{common_dim, FeatureVector};

/// Largest prototype count whose ranks still fit in a `u16`.
pub const MAX_PROTOTYPES: usize = u16::MAX as usize - 1;

/// The ordered reference images every descriptor is computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    prototypes: Vec<FeatureVector>,
    pub source_note: String,
}

impl PrototypeSet {
    pub fn new(prototypes: Vec<FeatureVector>, source_note: impl Into<String>) -> Result<Self> {
        if prototypes.is_empty() {
            return Err(Error::input("prototype set is empty"));
        }
        if prototypes.len() > MAX_PROTOTYPES {
            return Err(Error::input(format!(
                "{} prototypes exceed the limit of {MAX_PROTOTYPES}",
                prototypes.len()
            )));
        }
        let mut seen = HashSet::new();
        for p in &prototypes {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::input(format!("duplicate prototype id {:?}", p.id)));
            }
        }
        common_dim(&prototypes)?;
        Ok(PrototypeSet {
            prototypes,
            source_note: source_note.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.prototypes[0].dim()
    }

    pub fn prototypes(&self) -> &[FeatureVector] {
        &self.prototypes
    }

    pub fn ids(&self) -> Vec<String> {
        self.prototypes.iter().map(|p| p.id.clone()).collect()
    }
}

/// Strengths of (query, p_1, …, p_N) relative to the query under one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthList {
    pub attribute_index: usize,
    values: Vec<f64>,
}

impl StrengthList {
    /// `values[0]` must be exactly zero and every entry finite.
    pub fn new(attribute_index: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::input(
                "strength list needs the query and at least one prototype",
            ));
        }
        if values.len() > MAX_PROTOTYPES + 1 {
            return Err(Error::input("strength list too long"));
        }
        if values[0] != 0.0 {
            return Err(Error::input("query entry of a strength list must be 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("strength list has non-finite entries"));
        }
        Ok(StrengthList {
            attribute_index,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// How equal strengths are ordered when ranking.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[non_exhaustive]
pub enum TiePolicy {
    /// Equal strengths keep their original order, so the query wins ties.
    #[default]
    StableIndex,
}

/// Strength list for one attribute: `values[i] = s(p_i) − s(q)`, `values[0] = 0`.
///
/// A negative entry means the query shows the attribute more strongly than
/// that prototype.
pub fn strength_list(
    model: &AttributeModel,
    query: &FeatureVector,
    prototypes: &PrototypeSet,
) -> Result<StrengthList> {
    let q = model.strength(query)?;
    let mut values = Vec::with_capacity(prototypes.len() + 1);
    values.push(0.0);
    for p in prototypes.prototypes() {
        values.push(model.strength(p)? - q);
    }
    StrengthList::new(0, values)
}

/// 1-based descending ranks of a strength list.
pub fn rank_row(list: &StrengthList, tie_policy: TiePolicy) -> Vec<u16> {
    let mut out = vec![0u16; list.values.len()];
    rank_into(&list.values, tie_policy, &mut out);
    out
}

fn rank_into(values: &[f64], tie_policy: TiePolicy, out: &mut [u16]) {
    let TiePolicy::StableIndex = tie_policy;
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Entries are finite, so partial_cmp is total here and treats -0 == +0.
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("finite strengths")
            .then(a.cmp(&b))
    });
    for (pos, &idx) in order.iter().enumerate() {
        out[idx] = (pos + 1) as u16;
    }
}

/// Row-major `rows × cols` matrix of ranks; `cols = N + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u16>,
}

impl RankMatrix {
    /// Validates that every row is a permutation of `1..=cols`.
    pub fn from_rows(rows: Vec<Vec<u16>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::input("rank matrix has no rows"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::input("rank matrix rows have unequal lengths"));
        }
        let data = rows.into_iter().flatten().collect();
        Self::from_flat(m, cols, data)
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<u16>) -> Result<Self> {
        if rows == 0 || !(2..=MAX_PROTOTYPES + 1).contains(&cols) {
            return Err(Error::input(format!(
                "invalid rank matrix shape {rows}×{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::input(
                "rank matrix data length does not match its shape",
            ));
        }
        let mut seen = vec![false; cols + 1];
        for (j, row) in data.chunks_exact(cols).enumerate() {
            seen.iter_mut().for_each(|s| *s = false);
            for &r in row {
                let r = r as usize;
                if r == 0 || r > cols || seen[r] {
                    return Err(Error::input(format!(
                        "row {j} is not a permutation of 1..={cols}"
                    )));
                }
                seen[r] = true;
            }
        }
        Ok(RankMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[u16] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<u16>> {
        self.data
            .chunks_exact(self.cols)
            .map(<[u16]>::to_vec)
            .collect()
    }

    /// Compact layout: `M` and `N` as little-endian `u32`, then every rank as
    /// a little-endian `u16`, row-major.
    pub fn to_compact_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 2 * self.data.len());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&((self.cols - 1) as u32).to_le_bytes());
        for r in &self.data {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    /// Parses the compact layout from the front of `bytes`, returning the
    /// matrix and the number of bytes consumed.
    pub fn from_compact_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let header = |at: usize| -> Result<usize> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
                .ok_or_else(|| Error::format("truncated rank matrix header"))
        };
        let m = header(0)?;
        let n = header(4)?;
        let len = m
            .checked_mul(n + 1)
            .and_then(|c| c.checked_mul(2))
            .ok_or_else(|| Error::format("rank matrix shape overflows"))?;
        let body = bytes
            .get(8..8 + len)
            .ok_or_else(|| Error::format("truncated rank matrix body"))?;
        let data = body
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect();
        let matrix = Self::from_flat(m, n + 1, data).map_err(|e| Error::format(e.to_string()))?;
        Ok((matrix, 8 + len))
    }
}

/// The `M×(N+1)` rank matrix of one image plus the identity of the attributes
/// and prototypes it was computed against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DescriptorDoc", into = "DescriptorDoc")]
pub struct RankDescriptor {
    attribute_names: Vec<String>,
    prototype_ids: Vec<String>,
    ranks: RankMatrix,
}

#[derive(Serialize, Deserialize)]
struct DescriptorDoc {
    attribute_names: Vec<String>,
    prototype_ids: Vec<String>,
    ranks: Vec<Vec<u16>>,
}

impl TryFrom<DescriptorDoc> for RankDescriptor {
    type Error = Error;

    fn try_from(doc: DescriptorDoc) -> Result<Self> {
        let ranks = RankMatrix::from_rows(doc.ranks)?;
        RankDescriptor::new(doc.attribute_names, doc.prototype_ids, ranks)
    }
}

impl From<RankDescriptor> for DescriptorDoc {
    fn from(d: RankDescriptor) -> Self {
        DescriptorDoc {
            ranks: d.ranks.to_rows(),
            attribute_names: d.attribute_names,
            prototype_ids: d.prototype_ids,
        }
    }
}

impl RankDescriptor {
    pub fn new(
        attribute_names: Vec<String>,
        prototype_ids: Vec<String>,
        ranks: RankMatrix,
    ) -> Result<Self> {
        if ranks.rows() != attribute_names.len() {
            return Err(Error::input(format!(
                "descriptor has {} rows but {} attribute names",
                ranks.rows(),
                attribute_names.len()
            )));
        }
        if ranks.cols() != prototype_ids.len() + 1 {
            return Err(Error::input(format!(
                "descriptor has {} columns but {} prototype ids",
                ranks.cols(),
                prototype_ids.len()
            )));
        }
        Ok(RankDescriptor {
            attribute_names,
            prototype_ids,
            ranks,
        })
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn prototype_ids(&self) -> &[String] {
        &self.prototype_ids
    }

    pub fn ranks(&self) -> &RankMatrix {
        &self.ranks
    }

    pub fn into_ranks(self) -> RankMatrix {
        self.ranks
    }

    /// Number of attributes `M`.
    pub fn num_attributes(&self) -> usize {
        self.ranks.rows()
    }

    /// Number of prototypes `N`.
    pub fn num_prototypes(&self) -> usize {
        self.ranks.cols() - 1
    }

    /// The query's own rank under attribute `j` (column 0).
    pub fn query_rank(&self, j: usize) -> u16 {
        self.ranks.row(j)[0]
    }

    /// Errors unless both descriptors were built from the same attributes and
    /// prototypes, in the same order.
    pub fn check_compatible(&self, other: &RankDescriptor) -> Result<()> {
        check_layout(
            &self.attribute_names,
            &self.prototype_ids,
            &other.attribute_names,
            &other.prototype_ids,
        )
    }
}

pub(crate) fn check_layout(
    names_a: &[String],
    protos_a: &[String],
    names_b: &[String],
    protos_b: &[String],
) -> Result<()> {
    if names_a != names_b {
        return Err(Error::input(format!(
            "attribute sets differ: {names_a:?} vs {names_b:?}"
        )));
    }
    if protos_a != protos_b {
        return Err(Error::input(format!(
            "prototype sets differ ({} vs {} prototypes)",
            protos_a.len(),
            protos_b.len()
        )));
    }
    Ok(())
}

impl fmt::Display for RankDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, name) in self.attribute_names.iter().enumerate() {
            write!(f, "{name}:")?;
            for r in self.ranks.row(j) {
                write!(f, " {r}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Precomputes prototype scores so that many queries can be described
/// against one (models, prototypes) pair.
#[derive(Debug, Clone)]
pub struct DescriptorBuilder<'a> {
    models: &'a [AttributeModel],
    attribute_names: Vec<String>,
    prototype_ids: Vec<String>,
    // models.len() × N scores, row-major.
    prototype_scores: Vec<f64>,
}

impl<'a> DescriptorBuilder<'a> {
    pub fn new(models: &'a [AttributeModel], prototypes: &PrototypeSet) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::input("at least one attribute model is required"));
        }
        let dim = models[0].dim();
        if let Some(m) = models.iter().find(|m| m.dim() != dim) {
            return Err(Error::input(format!(
                "model {:?} has dimension {}, expected {dim}",
                m.attribute_name,
                m.dim()
            )));
        }
        if prototypes.dim() != dim {
            return Err(Error::input(format!(
                "prototypes have dimension {}, models expect {dim}",
                prototypes.dim()
            )));
        }
        let mut prototype_scores = Vec::with_capacity(models.len() * prototypes.len());
        for m in models {
            for p in prototypes.prototypes() {
                prototype_scores.push(m.strength(p)?);
            }
        }
        Ok(DescriptorBuilder {
            models,
            attribute_names: models.iter().map(|m| m.attribute_name.clone()).collect(),
            prototype_ids: prototypes.ids(),
            prototype_scores,
        })
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn prototype_ids(&self) -> &[String] {
        &self.prototype_ids
    }

    /// Rank matrix of one query, without the identity lists.
    pub fn rank_matrix(&self, query: &FeatureVector) -> Result<RankMatrix> {
        let n = self.prototype_ids.len();
        let cols = n + 1;
        let mut data = vec![0u16; self.models.len() * cols];
        let mut values = vec![0.0; cols];
        for (j, model) in self.models.iter().enumerate() {
            let q = model.strength(query)?;
            let scores = &self.prototype_scores[j * n..(j + 1) * n];
            values[0] = 0.0;
            for (v, s) in values[1..].iter_mut().zip(scores) {
                *v = s - q;
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite strength for {:?} under {:?}",
                    query.id, model.attribute_name
                )));
            }
            rank_into(
                &values,
                TiePolicy::StableIndex,
                &mut data[j * cols..(j + 1) * cols],
            );
        }
        Ok(RankMatrix {
            rows: self.models.len(),
            cols,
            data,
        })
    }

    pub fn describe(&self, query: &FeatureVector) -> Result<RankDescriptor> {
        Ok(RankDescriptor {
            attribute_names: self.attribute_names.clone(),
            prototype_ids: self.prototype_ids.clone(),
            ranks: self.rank_matrix(query)?,
        })
    }
}

/// Builds the full descriptor of `query`: row `j` is
/// `rank_row(strength_list(models[j], query, prototypes))`.
pub fn build_descriptor(
    models: &[AttributeModel],
    query: &FeatureVector,
    prototypes: &PrototypeSet,
) -> Result<RankDescriptor> {
    DescriptorBuilder::new(models, prototypes)?.describe(query)
}
