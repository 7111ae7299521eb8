//! Grid-based place partitioning of a rectangular workspace.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Pose;

/// Place class: index of a grid cell, `row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlaceLabel(pub u32);

impl fmt::Display for PlaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaceGrid {
    /// (min, max) in meters.
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub cols: u32,
    pub rows: u32,
}

impl PlaceGrid {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), cols: u32, rows: u32) -> Result<Self> {
        let grid = PlaceGrid {
            x_range,
            y_range,
            cols,
            rows,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The 10×10 grid over [−740, 130] × [−330, 120] m used for the NCLT campus.
    pub fn nclt() -> Self {
        PlaceGrid {
            x_range: (-740.0, 130.0),
            y_range: (-330.0, 120.0),
            cols: 10,
            rows: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_axis = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && hi > lo;
        if !ok_axis(self.x_range) || !ok_axis(self.y_range) {
            return Err(Error::Config(format!(
                "workspace ranges must satisfy min < max: x {:?}, y {:?}",
                self.x_range, self.y_range
            )));
        }
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::Config(
                "grid needs at least one row and column".into(),
            ));
        }
        if (self.cols as u64) * (self.rows as u64) > u32::MAX as u64 {
            return Err(Error::Config("grid has too many cells".into()));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> u32 {
        self.cols * self.rows
    }

    pub fn contains(&self, pose: Pose) -> bool {
        (self.x_range.0..=self.x_range.1).contains(&pose.x)
            && (self.y_range.0..=self.y_range.1).contains(&pose.y)
    }

    /// Place label of the cell containing `pose`.
    ///
    /// Interior cell boundaries belong to the higher-index cell; the max-x and
    /// max-y edges are clamped into the last column/row.
    pub fn cell_of(&self, pose: Pose) -> Result<PlaceLabel> {
        if !self.contains(pose) {
            return Err(Error::OutOfWorkspace {
                x: pose.x,
                y: pose.y,
            });
        }
        let col = axis_cell(pose.x, self.x_range, self.cols);
        let row = axis_cell(pose.y, self.y_range, self.rows);
        Ok(PlaceLabel(row * self.cols + col))
    }

    /// (col, row) of a label.
    pub fn cell_coords(&self, label: PlaceLabel) -> (u32, u32) {
        (label.0 % self.cols, label.0 / self.cols)
    }
}

fn axis_cell(v: f64, (lo, hi): (f64, f64), cells: u32) -> u32 {
    let width = (hi - lo) / cells as f64;
    let k = ((v - lo) / width).floor();
    (k.max(0.0) as u32).min(cells - 1)
}

/// Free-function form of [`PlaceGrid::cell_of`].
pub fn cell_of(grid: &PlaceGrid, pose: Pose) -> Result<PlaceLabel> {
    grid.cell_of(pose)
}

/// Draws `k` distinct labels uniformly from `occupied`, deterministically per
/// seed. The result is sorted.
pub fn sample_classes(
    grid: &PlaceGrid,
    occupied: &BTreeSet<PlaceLabel>,
    k: usize,
    seed: u64,
) -> Result<Vec<PlaceLabel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_classes_with(grid, occupied, k, &mut rng)
}

pub(crate) fn sample_classes_with(
    grid: &PlaceGrid,
    occupied: &BTreeSet<PlaceLabel>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<PlaceLabel>> {
    if let Some(bad) = occupied.iter().find(|l| l.0 >= grid.num_classes()) {
        return Err(Error::input(format!(
            "label {bad} is outside a grid of {} classes",
            grid.num_classes()
        )));
    }
    if k > occupied.len() {
        return Err(Error::input(format!(
            "cannot sample {k} classes from {} occupied cells",
            occupied.len()
        )));
    }
    let pool: Vec<PlaceLabel> = occupied.iter().copied().collect();
    let mut picked: Vec<PlaceLabel> = index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}
