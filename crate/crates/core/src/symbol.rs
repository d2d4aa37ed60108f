//! Symbols: discretized scalar values (univariate) or scalar-value
//! combinations (multivariate) treated as vocabulary items.
//!
//! Only combinations actually observed in the data enter the table; ids are
//! assigned densely in first-occurrence scan order, which makes a build
//! deterministic for fixed input volumes.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Error;
use crate::volume::{Dims, QuantizedVolume};
use crate::Result;

/// Hash key for a level combination. Combinations whose mixed-radix value
/// fits in 64 bits are packed into a single integer; wider ones fall back to
/// the tuple itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ComboKey {
    Packed(u64),
    Wide(Box<[u16]>),
}

fn fits_packed(radices: &[u16]) -> bool {
    let mut acc: u128 = 1;
    for &r in radices {
        acc = acc.saturating_mul(u128::from(r.max(1)));
        if acc > u128::from(u64::MAX) {
            return false;
        }
    }
    true
}

fn pack(levels: &[u16], radices: &[u16]) -> u64 {
    let mut acc: u64 = 0;
    for (&l, &r) in levels.iter().zip(radices) {
        acc = acc * u64::from(r.max(1)) + u64::from(l);
    }
    acc
}

/// Vocabulary of observed level combinations.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    /// Number of variables each combination spans.
    arity: usize,
    /// Level count per variable, in variable order.
    radices: Vec<u16>,
    /// Combination tuple per symbol id (flattened, `arity` levels per id).
    combos: Vec<u16>,
    /// Occurrence count per symbol over everything scanned into the table.
    freq: Vec<u64>,
    /// Total voxels scanned.
    total: u64,
    map: HashMap<ComboKey, u32>,
    packed: bool,
}

impl SymbolTable {
    /// Number of symbols `|C|`.
    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn radices(&self) -> &[u16] {
        &self.radices
    }

    /// Aggregate frequency per symbol across all scanned volumes.
    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    /// Total voxel count scanned into the table.
    pub fn total_voxels(&self) -> u64 {
        self.total
    }

    /// The level tuple behind a symbol id.
    pub fn combination(&self, id: u32) -> &[u16] {
        let i = id as usize * self.arity;
        &self.combos[i..i + self.arity]
    }

    /// Look up the id of a combination, if observed.
    pub fn lookup(&self, levels: &[u16]) -> Option<u32> {
        debug_assert_eq!(levels.len(), self.arity);
        let key = if self.packed {
            ComboKey::Packed(pack(levels, &self.radices))
        } else {
            ComboKey::Wide(levels.into())
        };
        self.map.get(&key).copied()
    }

    /// Human-readable label: levels joined by underscores, e.g. `3_17`.
    pub fn label(&self, id: u32) -> String {
        self.combination(id)
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join("_")
    }

    /// Rebuild a table from stored tuples (used when loading an embedding
    /// file). Frequencies are unknown in that context and read as zero.
    pub fn from_combinations(arity: usize, radices: Vec<u16>, combos: Vec<u16>) -> Result<Self> {
        if arity == 0 || combos.len() % arity != 0 {
            return Err(Error::Data(format!(
                "combination data length {} is not a multiple of arity {arity}",
                combos.len()
            )));
        }
        if radices.len() != arity {
            return Err(Error::Data("radix list does not match arity".into()));
        }
        let count = combos.len() / arity;
        let packed = fits_packed(&radices);
        let mut map = HashMap::with_capacity(count);
        for id in 0..count {
            let levels = &combos[id * arity..(id + 1) * arity];
            let key = if packed {
                ComboKey::Packed(pack(levels, &radices))
            } else {
                ComboKey::Wide(levels.into())
            };
            if map.insert(key, id as u32).is_some() {
                return Err(Error::Data(format!("duplicate combination at id {id}")));
            }
        }
        Ok(SymbolTable {
            arity,
            radices,
            combos,
            freq: vec![0; count],
            total: 0,
            map,
            packed,
        })
    }

    /// True when both tables enumerate the same combinations in the same order.
    pub fn same_combinations(&self, other: &SymbolTable) -> bool {
        self.arity == other.arity && self.combos == other.combos
    }
}

/// A volume with one symbol id per voxel, plus the id frequencies within
/// this volume (which can differ from the shared table's aggregate counts).
#[derive(Debug, Clone)]
pub struct SymbolVolume {
    dims: Dims,
    ids: Vec<u32>,
    table: Arc<SymbolTable>,
    freq: Vec<u64>,
}

impl SymbolVolume {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    /// Per-symbol voxel counts within this volume.
    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    /// Voxel count `T`.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn id_at(&self, idx: usize) -> u32 {
        self.ids[idx]
    }

    /// Assemble a symbol volume from per-voxel ids against an existing table
    /// (used for predicted volumes). Frequencies are recounted.
    pub fn from_ids(dims: Dims, ids: Vec<u32>, table: Arc<SymbolTable>) -> Result<Self> {
        if ids.len() != dims.len() {
            return Err(Error::Parameter(format!(
                "id data length {} does not match dims {dims}",
                ids.len()
            )));
        }
        let mut freq = vec![0u64; table.len()];
        for &id in &ids {
            let slot = freq.get_mut(id as usize).ok_or_else(|| {
                Error::Parameter(format!("symbol id {id} out of range for table"))
            })?;
            *slot += 1;
        }
        Ok(SymbolVolume {
            dims,
            ids,
            table,
            freq,
        })
    }
}

/// Incrementally builds one shared table over a sequence of volumes.
struct TableBuilder {
    arity: usize,
    radices: Vec<u16>,
    combos: Vec<u16>,
    freq: Vec<u64>,
    total: u64,
    map: HashMap<ComboKey, u32>,
    packed: bool,
}

impl TableBuilder {
    fn new(radices: Vec<u16>) -> Self {
        let packed = fits_packed(&radices);
        TableBuilder {
            arity: radices.len(),
            radices,
            combos: Vec::new(),
            freq: Vec::new(),
            total: 0,
            map: HashMap::new(),
            packed,
        }
    }

    fn scan(&mut self, member: &[&QuantizedVolume]) -> Result<Vec<u32>> {
        let dims = member[0].dims();
        for q in member {
            if q.dims() != dims {
                return Err(Error::Parameter(format!(
                    "volumes disagree on dims: {} vs {}",
                    q.dims(),
                    dims
                )));
            }
        }
        let n = dims.len();
        let mut ids = Vec::with_capacity(n);
        let mut levels = vec![0u16; self.arity];
        for idx in 0..n {
            for (slot, q) in levels.iter_mut().zip(member) {
                *slot = q.levels()[idx];
            }
            let key = if self.packed {
                ComboKey::Packed(pack(&levels, &self.radices))
            } else {
                ComboKey::Wide(levels.as_slice().into())
            };
            let next = self.freq.len() as u32;
            let id = *self.map.entry(key).or_insert_with(|| {
                self.combos.extend_from_slice(&levels);
                self.freq.push(0);
                next
            });
            self.freq[id as usize] += 1;
            self.total += 1;
            ids.push(id);
        }
        Ok(ids)
    }

    fn finish(self) -> SymbolTable {
        SymbolTable {
            arity: self.arity,
            radices: self.radices,
            combos: self.combos,
            freq: self.freq,
            total: self.total,
            map: self.map,
            packed: self.packed,
        }
    }
}

fn radices_of(member: &[&QuantizedVolume]) -> Result<Vec<u16>> {
    if member.is_empty() {
        return Err(Error::Parameter("symbolize needs at least one variable".into()));
    }
    Ok(member.iter().map(|q| q.level_count()).collect())
}

/// Build a symbol table and symbol volume from one aligned set of quantized
/// variables (one `QuantizedVolume` per variable, identical dims).
pub fn symbolize(variables: &[&QuantizedVolume]) -> Result<(Arc<SymbolTable>, SymbolVolume)> {
    let (table, mut volumes) = symbolize_collection(&[variables])?;
    Ok((table, volumes.pop().expect("one member in, one out")))
}

/// Build one shared table over a collection of members (each member is an
/// aligned set of quantized variables). Members are scanned in order, so
/// symbol ids are dense in first-occurrence order across the collection.
pub fn symbolize_collection(
    members: &[&[&QuantizedVolume]],
) -> Result<(Arc<SymbolTable>, Vec<SymbolVolume>)> {
    if members.is_empty() {
        return Err(Error::Parameter("collection is empty".into()));
    }
    let radices = radices_of(members[0])?;
    for m in members {
        if radices_of(m)? != radices {
            return Err(Error::Parameter(
                "collection members disagree on variable count or level count".into(),
            ));
        }
    }
    let mut builder = TableBuilder::new(radices);
    let mut per_member = Vec::with_capacity(members.len());
    for m in members {
        per_member.push(builder.scan(m)?);
    }
    let table = Arc::new(builder.finish());
    let volumes = members
        .iter()
        .zip(per_member)
        .map(|(m, ids)| {
            let mut freq = vec![0u64; table.len()];
            for &id in &ids {
                freq[id as usize] += 1;
            }
            SymbolVolume {
                dims: m[0].dims(),
                ids,
                table: Arc::clone(&table),
                freq,
            }
        })
        .collect();
    Ok((table, volumes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{quantize, Dims, Volume};
    use proptest::prelude::*;

    fn qv(dims: (usize, usize, usize), levels: Vec<u16>, r: u16) -> QuantizedVolume {
        QuantizedVolume::from_levels(Dims::new(dims.0, dims.1, dims.2).unwrap(), levels, r).unwrap()
    }

    #[test]
    fn univariate_dense_levels_give_identity_like_table() {
        let r = 4;
        let q = qv((4, 1, 1), vec![0, 1, 2, 3], r);
        let (table, sv) = symbolize(&[&q]).unwrap();
        assert_eq!(table.len(), r as usize);
        for id in 0..r {
            assert_eq!(table.combination(id as u32), &[id]);
        }
        assert_eq!(sv.ids(), &[0, 1, 2, 3]);
    }

    #[test]
    fn bivariate_hand_enumeration() {
        let a = qv((2, 1, 1), vec![0, 1], 2);
        let b = qv((2, 1, 1), vec![0, 1], 2);
        let (table, sv) = symbolize(&[&a, &b]).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.combination(0), &[0, 0]);
        assert_eq!(table.combination(1), &[1, 1]);
        assert_eq!(sv.ids(), &[0, 1]);
        assert_eq!(table.label(1), "1_1");
    }

    #[test]
    fn dim_mismatch_rejected() {
        let a = qv((2, 1, 1), vec![0, 1], 2);
        let b = qv((1, 2, 1), vec![0, 1], 2);
        assert!(symbolize(&[&a, &b]).is_err());
    }

    #[test]
    fn abc_counting_oracle() {
        // Counting oracle: |C| <= R for a univariate field and frequencies
        // partition the voxel count.
        let dims = Dims::new(64, 64, 64).unwrap();
        let s1 = crate::abc::gen_abc_s1(&crate::abc::AbcParams::classic(0.0), dims).unwrap();
        let q = quantize(&s1, 256).unwrap();
        let (table, sv) = symbolize(&[&q]).unwrap();
        assert!(table.len() <= 256);
        assert_eq!(table.frequencies().iter().sum::<u64>(), 64 * 64 * 64);
        assert_eq!(sv.frequencies(), table.frequencies());
    }

    #[test]
    fn shared_table_accumulates_members() {
        let a = qv((2, 1, 1), vec![0, 1], 4);
        let b = qv((2, 1, 1), vec![1, 3], 4);
        let (table, vols) = symbolize_collection(&[&[&a][..], &[&b][..]]).unwrap();
        assert_eq!(table.len(), 3); // 0, 1, 3
        assert_eq!(table.total_voxels(), 4);
        assert_eq!(table.frequencies(), &[1, 2, 1]);
        assert_eq!(vols[0].frequencies(), &[1, 1, 0]);
        assert_eq!(vols[1].frequencies(), &[0, 1, 1]);
    }

    #[test]
    fn wide_keys_used_when_packing_overflows() {
        // Five variables at 65535 levels each overflow a u64 key.
        let vols: Vec<QuantizedVolume> =
            (0..5).map(|i| qv((2, 1, 1), vec![i as u16, 60000], 65535)).collect();
        let refs: Vec<&QuantizedVolume> = vols.iter().collect();
        let (table, sv) = symbolize(&refs).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(sv.ids(), &[0, 1]);
        assert_eq!(table.combination(0), &[0, 1, 2, 3, 4]);
    }

    proptest! {
        /// Inverse lookup reproduces the per-voxel level tuples exactly, and
        /// frequencies are invariant under voxel reordering.
        #[test]
        fn roundtrip_and_permutation_invariance(
            levels_a in proptest::collection::vec(0u16..6, 8..40),
            levels_b in proptest::collection::vec(0u16..6, 8..40),
            seed in 0u64..1000,
        ) {
            let n = levels_a.len().min(levels_b.len());
            let a: Vec<u16> = levels_a[..n].to_vec();
            let b: Vec<u16> = levels_b[..n].to_vec();
            let qa = qv((n, 1, 1), a.clone(), 6);
            let qb = qv((n, 1, 1), b.clone(), 6);
            let (table, sv) = symbolize(&[&qa, &qb]).unwrap();
            for (idx, &id) in sv.ids().iter().enumerate() {
                prop_assert_eq!(table.combination(id), &[a[idx], b[idx]]);
                prop_assert_eq!(table.lookup(&[a[idx], b[idx]]), Some(id));
            }
            prop_assert_eq!(table.frequencies().iter().sum::<u64>(), n as u64);

            // Permute voxels of both variables with the same permutation.
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pa: Vec<u16> = perm.iter().map(|&i| a[i]).collect();
            let pb: Vec<u16> = perm.iter().map(|&i| b[i]).collect();
            let (ptable, _) = symbolize(&[&qv((n, 1, 1), pa, 6), &qv((n, 1, 1), pb, 6)]).unwrap();
            // Ids may differ (scan order), but the multiset of (combo, freq) matches.
            let mut lhs: Vec<(Vec<u16>, u64)> = (0..table.len() as u32)
                .map(|id| (table.combination(id).to_vec(), table.frequencies()[id as usize]))
                .collect();
            let mut rhs: Vec<(Vec<u16>, u64)> = (0..ptable.len() as u32)
                .map(|id| (ptable.combination(id).to_vec(), ptable.frequencies()[id as usize]))
                .collect();
            lhs.sort();
            rhs.sort();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn quantize_then_symbolize_volume() {
        let v = Volume::new(
            Dims::new(4, 1, 1).unwrap(),
            vec![0.0, 0.25, 0.5, 1.0],
        )
        .unwrap();
        let q = quantize(&v, 4).unwrap();
        let (table, sv) = symbolize(&[&q]).unwrap();
        assert_eq!(sv.ids().len(), 4);
        assert_eq!(table.len(), 4);
    }
}
