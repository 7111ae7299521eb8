//! Binary descriptor-database files.
//!
//! All integers are little-endian. Strings are a `u32` byte length followed
//! by UTF-8 bytes.
//!
//! ```text
//! magic        4 bytes  "RADB"
//! version      u32      1
//! M, N         u32, u32
//! domain_tag   string
//! attributes   M strings
//! prototypes   N strings
//! count        u32
//! entries      count × (image_id string, label u32, rank matrix)
//! checksum     32 bytes SHA-256 of everything above
//! ```
//!
//! Each rank matrix uses the compact descriptor layout: `M`, `N` as `u32`,
//! then `M·(N+1)` `u16` ranks, row-major.

use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::place_partition::PlaceLabel;
use crate::rank_descriptor::RankMatrix;
use crate::retrieval_eval::{DbEntry, DescriptorDatabase};

pub const MAGIC: [u8; 4] = *b"RADB";
pub const VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u32::try_from(s.len()).map_err(|_| Error::input("string too long"))?;
    put_u32(out, len);
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn len_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::input(format!("too many {what}")))
}

pub fn encode_database(db: &DescriptorDatabase) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, len_u32(db.attribute_names().len(), "attributes")?);
    put_u32(&mut out, len_u32(db.prototype_ids().len(), "prototypes")?);
    put_str(&mut out, db.domain_tag())?;
    for name in db.attribute_names() {
        put_str(&mut out, name)?;
    }
    for id in db.prototype_ids() {
        put_str(&mut out, id)?;
    }
    put_u32(&mut out, len_u32(db.len(), "entries")?);
    for e in db.entries() {
        put_str(&mut out, &e.image_id)?;
        put_u32(&mut out, e.label.0);
        out.extend_from_slice(&e.ranks.to_compact_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("database file is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::format("string is not valid UTF-8"))
    }
}

pub fn decode_database(bytes: &[u8]) -> Result<DescriptorDatabase> {
    if bytes.len() < MAGIC.len() + 4 + CHECKSUM_LEN {
        return Err(Error::format("database file is truncated"));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::format("not a descriptor database (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::format(format!(
            "unsupported database version {version}, expected {VERSION}"
        )));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(Error::format("database checksum mismatch"));
    }

    let mut cur = Cursor {
        bytes: body,
        pos: 8,
    };
    let m = cur.u32()? as usize;
    let n = cur.u32()? as usize;
    let domain_tag = cur.string()?;
    let attribute_names = (0..m).map(|_| cur.string()).collect::<Result<Vec<_>>>()?;
    let prototype_ids = (0..n).map(|_| cur.string()).collect::<Result<Vec<_>>>()?;
    let count = cur.u32()? as usize;
    let mut entries = Vec::with_capacity(count.min(body.len()));
    for _ in 0..count {
        let image_id = cur.string()?;
        let label = PlaceLabel(cur.u32()?);
        let (ranks, used) = RankMatrix::from_compact_bytes(&body[cur.pos..])?;
        cur.pos += used;
        if ranks.rows() != m || ranks.cols() != n + 1 {
            return Err(Error::format(format!(
                "entry {image_id:?} is {}×{}, header says {m}×{}",
                ranks.rows(),
                ranks.cols(),
                n + 1
            )));
        }
        entries.push(DbEntry {
            image_id,
            label,
            ranks,
        });
    }
    if cur.pos != body.len() {
        return Err(Error::format("trailing bytes after database entries"));
    }
    DescriptorDatabase::new(domain_tag, attribute_names, prototype_ids, entries)
        .map_err(|e| Error::format(e.to_string()))
}

pub fn write_database<W: Write>(mut writer: W, db: &DescriptorDatabase) -> Result<()> {
    writer.write_all(&encode_database(db)?)?;
    writer.flush()?;
    Ok(())
}

pub fn read_database<R: Read>(mut reader: R) -> Result<DescriptorDatabase> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_database(&bytes)
}

pub fn save_database(path: impl AsRef<Path>, db: &DescriptorDatabase) -> Result<()> {
    std::fs::write(path, encode_database(db)?)?;
    Ok(())
}

pub fn load_database(path: impl AsRef<Path>) -> Result<DescriptorDatabase> {
    decode_database(&std::fs::read(path)?)
}
