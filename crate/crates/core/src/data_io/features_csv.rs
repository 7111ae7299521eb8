use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Pose};

/// Reads a feature CSV: header `id,x,y,f0,…` or `id,f0,…`.
pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_features(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_features<R: Read>(reader: R) -> Result<Vec<FeatureVector>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::format(format!("unreadable header: {e}")))?
        .clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.first() != Some(&"id") {
        return Err(Error::format("first column must be `id`"));
    }
    let has_pose = cols.get(1) == Some(&"x");
    let first_feature = if has_pose {
        if cols.get(2) != Some(&"y") {
            return Err(Error::format("column `x` must be followed by `y`"));
        }
        3
    } else {
        1
    };
    let dim = cols.len() - first_feature;
    if dim == 0 {
        return Err(Error::format("no feature columns"));
    }
    for (k, name) in cols[first_feature..].iter().enumerate() {
        if *name != format!("f{k}") {
            return Err(Error::format(format!(
                "feature column {k} is named {name:?}, expected \"f{k}\""
            )));
        }
    }

    let parse = |line: u64, field: &str| -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| Error::format(format!("line {line}: {field:?} is not a number")))?;
        if !v.is_finite() {
            return Err(Error::format(format!(
                "line {line}: non-finite value {field:?}"
            )));
        }
        Ok(v)
    };

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::format(format!("malformed row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols.len() {
            return Err(Error::format(format!(
                "line {line}: {} fields, header has {}",
                record.len(),
                cols.len()
            )));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::format(format!("line {line}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::format(format!("line {line}: duplicate id {id:?}")));
        }
        let pose = if has_pose {
            Some(Pose::new(
                parse(line, &record[1])?,
                parse(line, &record[2])?,
            ))
        } else {
            None
        };
        let values = record
            .iter()
            .skip(first_feature)
            .map(|f| parse(line, f))
            .collect::<Result<Vec<_>>>()?;
        out.push(FeatureVector { id, values, pose });
    }
    Ok(out)
}

/// Writes vectors in the CSV layout read by [`read_features`]. Pose columns
/// are written only when every vector has a pose.
pub fn write_features<W: Write>(writer: W, features: &[FeatureVector]) -> Result<()> {
    let dim = features.first().map_or(0, FeatureVector::dim);
    if features.iter().any(|f| f.dim() != dim) {
        return Err(Error::input("cannot write vectors of mixed dimension"));
    }
    let with_pose = !features.is_empty() && features.iter().all(|f| f.pose.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    if with_pose {
        header.extend(["x".to_string(), "y".to_string()]);
    }
    header.extend((0..dim).map(|k| format!("f{k}")));
    let to_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(to_err)?;
    for f in features {
        let mut row = vec![f.id.clone()];
        if with_pose {
            let p = f.pose.expect("checked above");
            row.push(p.x.to_string());
            row.push(p.y.to_string());
        }
        row.extend(f.values.iter().map(f64::to_string));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(path: impl AsRef<Path>, features: &[FeatureVector]) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_features(file, features)
}
