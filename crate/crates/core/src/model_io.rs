//! Embedding file format and CSV mirror.
//!
//! Binary layout, all little-endian: magic `V2V1`, symbol count (u64),
//! dimension (u32), arity (u32), the symbol table's combination tuples
//! (arity u16 levels per symbol), then the center rows and the context rows
//! as float32.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::Error;
use crate::fmt::sig_digits;
use crate::model::EmbeddingModel;
use crate::symbol::SymbolTable;
use crate::volume::write_atomic;
use crate::Result;

const MAGIC: &[u8; 4] = b"V2V1";

pub fn save_embedding(path: &Path, model: &EmbeddingModel) -> Result<()> {
    let table = model.table();
    let n = table.len();
    let dim = model.dim();
    let arity = table.arity();
    let mut buf = Vec::with_capacity(4 + 16 + n * arity * 2 + n * dim * 8);
    buf.extend_from_slice(MAGIC);
    buf.write_u64::<LittleEndian>(n as u64).unwrap();
    buf.write_u32::<LittleEndian>(dim as u32).unwrap();
    buf.write_u32::<LittleEndian>(arity as u32).unwrap();
    for id in 0..n as u32 {
        for &level in table.combination(id) {
            buf.write_u16::<LittleEndian>(level).unwrap();
        }
    }
    for store in [model.centers(), model.contexts()] {
        for row in 0..n {
            for j in 0..dim {
                buf.write_f32::<LittleEndian>(store.get(row, j) as f32).unwrap();
            }
        }
    }
    write_atomic(path, &buf)
}

pub fn load_embedding(path: &Path) -> Result<EmbeddingModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = std::io::Cursor::new(&bytes);
    let mut magic = [0u8; 4];
    std::io::Read::read_exact(&mut cur, &mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::Data(format!(
            "{}: bad magic {:?}, expected V2V1",
            path.display(),
            magic
        )));
    }
    let io_err = |e: std::io::Error| Error::io(path, e);
    let n = cur.read_u64::<LittleEndian>().map_err(io_err)? as usize;
    let dim = cur.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    let arity = cur.read_u32::<LittleEndian>().map_err(io_err)? as usize;
    if n == 0 || dim == 0 || arity == 0 {
        return Err(Error::Data(format!(
            "{}: degenerate header (n={n}, dim={dim}, arity={arity})",
            path.display()
        )));
    }
    let mut combos = Vec::with_capacity(n * arity);
    for _ in 0..n * arity {
        combos.push(cur.read_u16::<LittleEndian>().map_err(io_err)?);
    }
    // The file stores no per-variable level counts; reconstruct nominal
    // radices from the observed maxima so key packing stays consistent.
    let mut radices = vec![1u16; arity];
    for combo in combos.chunks_exact(arity) {
        for (r, &l) in radices.iter_mut().zip(combo) {
            *r = (*r).max(l.saturating_add(1));
        }
    }
    let table = Arc::new(SymbolTable::from_combinations(arity, radices, combos)?);
    let mut read_rows = || -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(dim);
            for _ in 0..dim {
                row.push(f64::from(cur.read_f32::<LittleEndian>().map_err(io_err)?));
            }
            rows.push(row);
        }
        Ok(rows)
    };
    let centers = read_rows()?;
    let contexts = read_rows()?;
    if cur.position() != bytes.len() as u64 {
        return Err(Error::Data(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() as u64 - cur.position()
        )));
    }
    // The format does not record the epoch count; a file on disk is the
    // product of a finished run, so the loaded model counts as trained.
    EmbeddingModel::from_parts(table, dim, centers, contexts, 1)
}

/// Human-readable mirror: one row per symbol with its label, both vectors.
pub fn export_embedding_csv(path: &Path, model: &EmbeddingModel) -> Result<()> {
    let table = model.table();
    let dim = model.dim();
    let mut out = String::new();
    out.push_str("symbol");
    for j in 0..dim {
        out.push_str(&format!(",center_{j}"));
    }
    for j in 0..dim {
        out.push_str(&format!(",context_{j}"));
    }
    out.push('\n');
    for id in 0..table.len() {
        out.push_str(&table.label(id as u32));
        for j in 0..dim {
            out.push(',');
            out.push_str(&sig_digits(model.centers().get(id, j), 6));
        }
        for j in 0..dim {
            out.push(',');
            out.push_str(&sig_digits(model.contexts().get(id, j), 6));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model() -> EmbeddingModel {
        let table = Arc::new(
            SymbolTable::from_combinations(2, vec![4, 4], vec![0, 0, 1, 2, 3, 3]).unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = init_model(table, 5, &mut rng).unwrap();
        model.contexts().set_row(1, &[0.5, -0.25, 0.125, 0.0, 1.0]);
        model
    }

    #[test]
    fn binary_round_trip_preserves_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.v2v");
        let model = sample_model();
        save_embedding(&path, &model).unwrap();
        let loaded = load_embedding(&path).unwrap();
        assert_eq!(loaded.symbol_count(), 3);
        assert_eq!(loaded.dim(), 5);
        assert!(loaded.table().same_combinations(model.table()));
        for r in 0..3 {
            for j in 0..5 {
                let orig = model.centers().get(r, j) as f32;
                assert_eq!(loaded.centers().get(r, j), f64::from(orig));
                let orig = model.contexts().get(r, j) as f32;
                assert_eq!(loaded.contexts().get(r, j), f64::from(orig));
            }
        }
    }

    #[test]
    fn magic_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.v2v");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_embedding(&path), Err(Error::Data(_))));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.v2v");
        save_embedding(&path, &sample_model()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_embedding(&path).is_err());
    }

    #[test]
    fn csv_mirror_lists_every_symbol() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.csv");
        export_embedding_csv(&path, &sample_model()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0_0,"));
        assert!(lines[3].starts_with("3_3,"));
    }
}
