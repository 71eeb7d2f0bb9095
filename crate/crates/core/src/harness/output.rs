//! CSV tables and binary field snapshots.
//!
//! Floats are written with 17 significant digits so that parsing a table back
//! reproduces every value exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::field::WaveField;
use crate::grid::Grid1D;
use crate::{Error, Result};

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header row and rows of floats.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let io = |e: csv::Error| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    };
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`].
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let parse = |m: String| Error::Parse {
        path: path.into(),
        message: m,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| parse(e.to_string()))?;
    let header = r
        .headers()
        .map_err(|e| parse(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse(e.to_string()))?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// One row per node: `x,rho,J`.
pub fn write_profile(path: &Path, grid: &Grid1D, rho: &[f64], current: &[f64]) -> Result<()> {
    let rows = grid
        .nodes()
        .into_iter()
        .zip(rho)
        .zip(current)
        .map(|((x, r), j)| vec![x, *r, *j]);
    write_table(path, &["x", "rho", "J"], rows)
}

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}

const FIELD_MAGIC: &[u8; 6] = b"TDSCF1";
const CLASSICAL_MAGIC: &[u8; 6] = b"CLASS1";

/// One field in a snapshot file, optionally followed by a classical `(y, eta)`.
#[derive(Clone, Debug)]
pub struct SnapshotBlock {
    pub t: f64,
    pub field: WaveField,
    pub classical: Option<(f64, f64)>,
}

/// Writes blocks to a temporary sibling and renames it into place.
pub fn write_snapshot(path: &Path, blocks: &[SnapshotBlock]) -> Result<()> {
    ensure_parent(path)?;
    let tmp = temp_sibling(path);
    let result = (|| -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        for b in blocks {
            let g = b.field.grid();
            w.write_all(FIELD_MAGIC)?;
            w.write_all(&(g.n() as u64).to_le_bytes())?;
            for v in [g.a(), g.b(), b.field.scale(), b.t] {
                w.write_all(&v.to_le_bytes())?;
            }
            for z in &b.field.values {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
            if let Some((y, eta)) = b.classical {
                w.write_all(CLASSICAL_MAGIC)?;
                w.write_all(&y.to_le_bytes())?;
                w.write_all(&eta.to_le_bytes())?;
            }
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn temp_sibling(path: &Path) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let unique = COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}-{unique}", std::process::id()));
    path.with_file_name(name)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, len: usize) -> Option<&[u8]> {
        let s = self.bytes.get(self.pos..self.pos + len)?;
        self.pos += len;
        Some(s)
    }

    fn f64(&mut self) -> Option<f64> {
        Some(f64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }

    fn done(&self) -> bool {
        self.pos >= self.bytes.len()
    }
}

pub fn read_snapshot(path: &Path) -> Result<Vec<SnapshotBlock>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Parse {
        path: path.into(),
        message: m.to_string(),
    };
    let truncated = || bad("truncated snapshot");
    let mut cur = Cursor { bytes: &bytes, pos: 0 };
    let mut blocks: Vec<SnapshotBlock> = Vec::new();
    while !cur.done() {
        let magic = cur.take(6).ok_or_else(truncated)?;
        if magic == CLASSICAL_MAGIC {
            let y = cur.f64().ok_or_else(truncated)?;
            let eta = cur.f64().ok_or_else(truncated)?;
            let last = blocks.last_mut().ok_or_else(|| bad("classical record before any field"))?;
            last.classical = Some((y, eta));
        } else if magic == FIELD_MAGIC {
            let n = u64::from_le_bytes(cur.take(8).ok_or_else(truncated)?.try_into().expect("8 bytes")) as usize;
            let mut head = [0.0; 4];
            for h in &mut head {
                *h = cur.f64().ok_or_else(truncated)?;
            }
            let [a, b, scale, t] = head;
            if n == 0 || n > 1 << 24 {
                return Err(bad("implausible sample count"));
            }
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let re = cur.f64().ok_or_else(truncated)?;
                let im = cur.f64().ok_or_else(truncated)?;
                values.push(Complex64::new(re, im));
            }
            let grid = Grid1D::with_points(a, b, n).map_err(|e| bad(&e.to_string()))?;
            let field = WaveField::new(values, &grid, scale).map_err(|e| bad(&e.to_string()))?;
            blocks.push(SnapshotBlock {
                t,
                field,
                classical: None,
            });
        } else {
            return Err(bad("unknown record magic"));
        }
    }
    Ok(blocks)
}
