//! Dissimilarities between rank descriptors, and the raw-feature baseline.
//!
//! BRS compares only the queries' own ranks (column 0 of each row); RRS sums
//! absolute rank differences over the whole matrix. Both are L1 distances on
//! integer vectors, so both are pseudometrics and lower means more similar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank_descriptor::{RankDescriptor, RankMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Binary relative strength: query-rank column only.
    #[serde(rename = "BRS")]
    Brs,
    /// Ranked relative strength: the full rank matrix.
    #[serde(rename = "RRS")]
    Rrs,
    /// L1 distance on raw absolute features.
    #[serde(rename = "ABS_L1")]
    AbsL1,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Brs, Method::Rrs, Method::AbsL1];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Brs => "BRS",
            Method::Rrs => "RRS",
            Method::AbsL1 => "ABS_L1",
        }
    }

    /// True for the methods that compare rank descriptors.
    pub fn uses_ranks(self) -> bool {
        !matches!(self, Method::AbsL1)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BRS" => Ok(Method::Brs),
            "RRS" => Ok(Method::Rrs),
            "ABS_L1" | "ABS-L1" => Ok(Method::AbsL1),
            _ => Err(Error::input(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityScore {
    pub value: f64,
    pub method: Method,
}

/// BRS on raw matrices of equal shape.
pub fn brs_ranks(a: &RankMatrix, b: &RankMatrix) -> u32 {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    (0..a.rows())
        .map(|j| (a.row(j)[0] as i32 - b.row(j)[0] as i32).unsigned_abs())
        .sum()
}

/// RRS on raw matrices of equal shape.
pub fn rrs_ranks(a: &RankMatrix, b: &RankMatrix) -> u32 {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs())
        .sum()
}

pub fn brs(a: &RankDescriptor, b: &RankDescriptor) -> Result<DissimilarityScore> {
    a.check_compatible(b)?;
    Ok(DissimilarityScore {
        value: brs_ranks(a.ranks(), b.ranks()) as f64,
        method: Method::Brs,
    })
}

pub fn rrs(a: &RankDescriptor, b: &RankDescriptor) -> Result<DissimilarityScore> {
    a.check_compatible(b)?;
    Ok(DissimilarityScore {
        value: rrs_ranks(a.ranks(), b.ranks()) as f64,
        method: Method::Rrs,
    })
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// L1 distance between two absolute feature vectors (e.g. semantic histograms).
pub fn abs_l1(a: &[f64], b: &[f64]) -> Result<DissimilarityScore> {
    if a.len() != b.len() {
        return Err(Error::input(format!(
            "feature lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(DissimilarityScore {
        value: l1(a, b),
        method: Method::AbsL1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(rows: Vec<Vec<u16>>) -> RankDescriptor {
        let m = rows.len();
        let n = rows[0].len() - 1;
        RankDescriptor::new(
            (0..m).map(|j| format!("a{j}")).collect(),
            (0..n).map(|i| format!("p{i}")).collect(),
            RankMatrix::from_rows(rows).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn brs_uses_query_column() {
        let a = desc(vec![vec![3, 1, 2], vec![1, 2, 3]]);
        let b = desc(vec![vec![1, 2, 3], vec![2, 1, 3]]);
        assert_eq!(brs(&a, &b).unwrap().value, 3.0);
        assert_eq!(brs(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn brs_maximum_is_m_times_n() {
        let top: Vec<u16> = (1..=9).collect();
        let bottom: Vec<u16> = std::iter::once(9).chain(1..=8).collect();
        let a = desc(vec![top; 6]);
        let b = desc(vec![bottom; 6]);
        assert_eq!(brs(&a, &b).unwrap().value, 48.0);
    }

    #[test]
    fn rrs_sums_full_matrix() {
        let a = desc(vec![vec![1, 2, 3]]);
        let b = desc(vec![vec![2, 1, 3]]);
        let s = rrs(&a, &b).unwrap();
        assert_eq!(s.value, 2.0);
        assert_eq!(s.method, Method::Rrs);
        assert_eq!(rrs(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn mismatched_descriptors_are_rejected() {
        let a = desc(vec![vec![1, 2, 3]]);
        let b = desc(vec![vec![1, 2]]);
        assert!(matches!(brs(&a, &b), Err(Error::Input(_))));
        assert!(matches!(rrs(&a, &b), Err(Error::Input(_))));
        let renamed = RankDescriptor::new(
            vec!["other".into()],
            vec!["p0".into(), "p1".into()],
            a.ranks().clone(),
        )
        .unwrap();
        assert!(rrs(&a, &renamed).is_err());
    }

    #[test]
    fn abs_l1_examples() {
        assert_eq!(
            abs_l1(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap().value,
            2.0
        );
        assert_eq!(abs_l1(&[0.2, 0.8], &[0.2, 0.8]).unwrap().value, 0.0);
        assert_eq!(abs_l1(&[0.5, 0.5], &[0.0, 1.0]).unwrap().value, 1.0);
        assert!(abs_l1(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{m}\""));
        }
        assert!("cosine".parse::<Method>().is_err());
    }
}
