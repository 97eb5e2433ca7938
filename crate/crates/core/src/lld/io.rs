//! LLD matrix persistence: a compact little-endian binary file and a CSV layout.
//!
//! Binary layout: `b"SERLLD01"`, then u32 frame_ms, u32 frames, u32 features,
//! the length-prefixed clip id, each length-prefixed feature name, and finally
//! `frames × features` f64 values row-major.

use std::fs;
use std::path::Path;

use super::{LldError, LldMatrix};

const MAGIC: &[u8; 8] = b"SERLLD01";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LldError + '_ {
    move |source| LldError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn write_lld(path: impl AsRef<Path>, m: &LldMatrix) -> Result<(), LldError> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(64 + m.values.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&m.frame_ms.to_le_bytes());
    out.extend_from_slice(&(m.num_frames as u32).to_le_bytes());
    out.extend_from_slice(&(m.num_features() as u32).to_le_bytes());
    put_str(&mut out, &m.clip_id);
    for name in &m.feature_names {
        put_str(&mut out, name);
    }
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(io_err(path))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LldError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| LldError::Format("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, LldError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, LldError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| LldError::Format("invalid utf-8".into()))
    }
}

pub fn read_lld(path: impl AsRef<Path>) -> Result<LldMatrix, LldError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    if r.take(8)? != MAGIC {
        return Err(LldError::Format(format!(
            "{} is not an LLD file",
            path.display()
        )));
    }
    let frame_ms = r.u32()?;
    let frames = r.u32()? as usize;
    let features = r.u32()? as usize;
    let clip_id = r.string()?;
    let names = (0..features)
        .map(|_| r.string())
        .collect::<Result<Vec<_>, _>>()?;
    let values = r
        .take(frames * features * 8)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if r.pos != bytes.len() {
        return Err(LldError::Format("trailing bytes".into()));
    }
    Ok(LldMatrix::new(values, frames, names, frame_ms, clip_id))
}

/// Header row of feature names, one row per frame, 17 significant digits.
pub fn write_lld_csv(path: impl AsRef<Path>, m: &LldMatrix) -> Result<(), LldError> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(&m.feature_names)?;
    for t in 0..m.num_frames {
        w.write_record(m.row(t).iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush().map_err(io_err(path.as_ref()))?;
    Ok(())
}

/// Read an LLD CSV of any width, e.g. externally extracted descriptor sets.
/// The clip id is the file stem.
pub fn read_lld_csv(path: impl AsRef<Path>, frame_ms: u32) -> Result<LldMatrix, LldError> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut values = Vec::new();
    let mut frames = 0;
    for (line, record) in r.records().enumerate() {
        let record = record?;
        for cell in record.iter() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                LldError::Format(format!(
                    "{}: non-numeric cell {cell:?} in row {}",
                    path.display(),
                    line + 1
                ))
            })?;
            values.push(v);
        }
        frames += 1;
    }
    let clip_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(LldMatrix::new(values, frames, names, frame_ms, clip_id))
}
