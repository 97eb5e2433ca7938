//! Named-tensor checkpoint files.
//!
//! Layout (little-endian): `b"SERCKPT\0"`, u32 format version, u32 entry count,
//! then per entry: u32 name length, UTF-8 name, u32 rank, u64 per dimension,
//! and the f64 values row-major.

use std::io::{Read, Write};
use std::path::Path;

use super::{NnError, Tensor};

const MAGIC: &[u8; 8] = b"SERCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint(mut w: impl Write, tensors: &[(String, Tensor)]) -> Result<(), NnError> {
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.ndim() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N], NnError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => NnError::Checkpoint("truncated checkpoint".into()),
        _ => NnError::Io(e),
    })?;
    Ok(buf)
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Vec<(String, Tensor)>, NnError> {
    if &read_exact::<8>(&mut r)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_exact(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let count = u32::from_le_bytes(read_exact(&mut r)?);
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|_| NnError::Checkpoint("truncated checkpoint".into()))?;
        let name = String::from_utf8(name)
            .map_err(|_| NnError::Checkpoint("invalid tensor name".into()))?;
        let rank = u32::from_le_bytes(read_exact(&mut r)?) as usize;
        let shape = (0..rank)
            .map(|_| Ok(u64::from_le_bytes(read_exact(&mut r)?) as usize))
            .collect::<Result<Vec<_>, NnError>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| Ok(f64::from_le_bytes(read_exact(&mut r)?)))
            .collect::<Result<Vec<_>, NnError>>()?;
        out.push((name, Tensor::new(shape, data)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NnError::Checkpoint("trailing bytes".into()));
    }
    Ok(out)
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    tensors: &[(String, Tensor)],
) -> Result<(), NnError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, tensors)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Vec<(String, Tensor)>, NnError> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(bytes.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<(String, Tensor)> {
        vec![
            (
                "0.dense.weight".into(),
                Tensor::from_fn(&[2, 3], |i| i as f64 * -0.1),
            ),
            (
                "0.dense.bias".into(),
                Tensor::new(vec![3], vec![f64::MIN_POSITIVE, 1e300, -0.0]).unwrap(),
            ),
        ]
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &sample()).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for ((n1, t1), (n2, t2)) in back.iter().zip(sample().iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.shape(), t2.shape());
            assert!(t1
                .data()
                .iter()
                .zip(t2.data())
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &sample()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(NnError::Checkpoint(_))
        ));
        let mut bad = buf.clone();
        bad[8] = 99;
        assert!(matches!(
            read_checkpoint(bad.as_slice()),
            Err(NnError::Checkpoint(_))
        ));
        assert!(matches!(
            read_checkpoint(&buf[..buf.len() - 1]),
            Err(NnError::Checkpoint(_))
        ));
    }
}
