use std::io::{Read, Write};
use std::path::Path;

use crate::attribute_model::{PairConstraint, Relation};
use crate::error::{Error, Result};

/// Reads a pair-constraint CSV `attribute,id_a,id_b,relation`. A header line
/// with exactly those names is optional.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<PairConstraint>> {
    read_pairs(std::fs::File::open(path)?)
}

pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<PairConstraint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (n, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::format(format!("malformed row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(Error::format(format!(
                "line {line}: expected 4 fields, found {}",
                record.len()
            )));
        }
        if n == 0 && record.iter().eq(["attribute", "id_a", "id_b", "relation"]) {
            continue;
        }
        let relation = Relation::from_symbol(&record[3]).ok_or_else(|| {
            Error::format(format!(
                "line {line}: relation {:?} is not `>` or `~`",
                &record[3]
            ))
        })?;
        if record[0].is_empty() {
            return Err(Error::format(format!("line {line}: empty attribute name")));
        }
        let c = PairConstraint::new(&record[0], &record[1], &record[2], relation)
            .map_err(|e| Error::format(format!("line {line}: {e}")))?;
        out.push(c);
    }
    Ok(out)
}

pub fn save_pairs(path: impl AsRef<Path>, pairs: &[PairConstraint]) -> Result<()> {
    write_pairs(std::io::BufWriter::new(std::fs::File::create(path)?), pairs)
}

pub fn write_pairs<W: Write>(writer: W, pairs: &[PairConstraint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["attribute", "id_a", "id_b", "relation"])
        .map_err(io)?;
    for p in pairs {
        w.write_record([
            p.attribute_name.as_str(),
            &p.id_a,
            &p.id_b,
            p.relation.symbol(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let pairs = vec![
            PairConstraint::new("open", "a", "b", Relation::AStronger).unwrap(),
            PairConstraint::new("close-depth", "c", "a", Relation::Similar).unwrap(),
        ];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);
    }

    #[test]
    fn parses_with_and_without_header() {
        let with = "attribute,id_a,id_b,relation\nopen,a,b,>\nopen,b,c,~\n";
        let without = "open,a,b,>\nopen,b,c,~\n";
        let a = read_pairs(with.as_bytes()).unwrap();
        assert_eq!(a, read_pairs(without.as_bytes()).unwrap());
        assert_eq!(a[0].relation, Relation::AStronger);
        assert_eq!(a[1].relation, Relation::Similar);
    }

    #[test]
    fn rejects_bad_rows() {
        for bad in ["open,a,b,<\n", "open,a,a,>\n", "open,a,b\n", ",a,b,>\n"] {
            assert!(
                matches!(read_pairs(bad.as_bytes()), Err(Error::Format(_))),
                "{bad:?}"
            );
        }
    }
}
