//! Binary container for encoding grids.
//!
//! ```text
//! offset  size  field
//! 0       6     magic "WEFPE1"
//! 6       2     format version, u16 LE (= 1)
//! 8       4     rows, u32 LE
//! 12      4     cols, u32 LE
//! 16      8·n   rows·cols float64 LE, row-major
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::encoding::EncodingGrid;
use crate::{Error, Result};

pub const MAGIC: &[u8; 6] = b"WEFPE1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

pub fn encoded_len(rows: usize, cols: usize) -> usize {
    HEADER_LEN + 8 * rows * cols
}

pub fn encode(grid: &EncodingGrid) -> Result<Vec<u8>> {
    let rows =
        u32::try_from(grid.rows()).map_err(|_| Error::Format("row count exceeds u32".into()))?;
    let cols =
        u32::try_from(grid.cols()).map_err(|_| Error::Format("column count exceeds u32".into()))?;
    let mut out = Vec::with_capacity(encoded_len(grid.rows(), grid.cols()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for x in grid.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<EncodingGrid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..6] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes for {rows} x {cols}, found {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EncodingGrid::new(rows, cols, data)
}

pub fn read(path: &Path) -> Result<EncodingGrid> {
    decode(&fs::read(path)?)
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Argument(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn write(path: &Path, grid: &EncodingGrid) -> Result<()> {
    write_atomic(path, &encode(grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let g =
            EncodingGrid::new(2, 3, vec![1.0, -0.0, f64::MIN_POSITIVE, 1e300, -2.5, 0.1]).unwrap();
        let b = encode(&g).unwrap();
        assert_eq!(b.len(), 16 + 48);
        assert_eq!(&b[..6], b"WEFPE1");
        assert_eq!(&b[6..8], &[1, 0]);
        assert_eq!(&b[8..12], &[2, 0, 0, 0]);
        assert_eq!(&b[12..16], &[3, 0, 0, 0]);
        let back = decode(&b).unwrap();
        assert_eq!(back.shape(), (2, 3));
        for (a, b) in g.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed() {
        let g = EncodingGrid::zeros(1, 1);
        let b = encode(&g).unwrap();
        assert!(decode(&b[..10]).is_err());
        assert!(decode(&b[..20]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = b;
        bad[6] = 2;
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn atomic_write_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.wef");
        let g = EncodingGrid::random_normal(4, 5, 9);
        write(&path, &g).unwrap();
        assert_eq!(read(&path).unwrap(), g);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
