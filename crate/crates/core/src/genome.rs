//! Gene arrays, their 240-bit hex encoding, and Cattribute detection.
//!
//! A gene is a 240-bit integer split into 48 five-bit cells. Cell 0 holds the
//! least-significant five bits, cell 47 the most-significant five.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const CELLS: usize = 48;
pub const GROUPS: usize = 12;
pub const GROUP_SIZE: usize = 4;
pub const MAX_CELL_VALUE: u8 = 31;
pub const GENE_HEX_LEN: usize = 60;
const GENE_BYTES: usize = 30;

static DEFAULT_REGISTRY: &str = include_str!("../data/cattributes.json");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenomeError {
    #[error("gene hex must be {GENE_HEX_LEN} characters, got {0}")]
    HexLength(usize),
    #[error("gene hex is malformed: {0}")]
    HexFormat(String),
    #[error("cell {index} holds {value}, outside 0..=31")]
    CellRange { index: usize, value: u8 },
    #[error("cattribute {0:?} has no constraints")]
    EmptyCattribute(String),
    #[error("cattribute {name:?} constrains cell {cell} twice")]
    DuplicateCell { name: String, cell: usize },
    #[error("cattribute {name:?} constraint ({cell}, {value}) is out of range")]
    ConstraintRange { name: String, cell: usize, value: u8 },
    #[error("duplicate cattribute name {0:?}")]
    DuplicateName(String),
    #[error("cattribute registry: {0}")]
    Registry(String),
}

/// 48 trait cells, each in `0..=31`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneArray([u8; CELLS]);

impl GeneArray {
    pub const ZERO: GeneArray = GeneArray([0; CELLS]);

    pub fn new(cells: [u8; CELLS]) -> Result<Self, GenomeError> {
        if let Some((index, &value)) = cells.iter().enumerate().find(|(_, &v)| v > MAX_CELL_VALUE) {
            return Err(GenomeError::CellRange { index, value });
        }
        Ok(GeneArray(cells))
    }

    /// Every cell set to `value`. Panics if `value > 31`.
    pub fn splat(value: u8) -> Self {
        assert!(value <= MAX_CELL_VALUE, "cell value {value} out of range");
        GeneArray([value; CELLS])
    }

    pub fn cells(&self) -> &[u8; CELLS] {
        &self.0
    }

    pub fn get(&self, index: usize) -> u8 {
        self.0[index]
    }

    /// Sets one cell. Panics on an out-of-range value.
    pub fn set(&mut self, index: usize, value: u8) {
        assert!(value <= MAX_CELL_VALUE, "cell value {value} out of range");
        self.0[index] = value;
    }

    pub fn group(&self, group: usize) -> [u8; GROUP_SIZE] {
        let start = group * GROUP_SIZE;
        self.0[start..start + GROUP_SIZE].try_into().unwrap()
    }

    pub(crate) fn swap_cells(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }

    pub fn to_hex(&self) -> String {
        encode_gene(self)
    }
}

impl fmt::Debug for GeneArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneArray({})", encode_gene(self))
    }
}

impl fmt::Display for GeneArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_gene(self))
    }
}

impl FromStr for GeneArray {
    type Err = GenomeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_gene(s)
    }
}

impl Serialize for GeneArray {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&encode_gene(self))
    }
}

impl<'de> Deserialize<'de> for GeneArray {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<GeneArray, D::Error> {
        let s = String::deserialize(deserializer)?;
        decode_gene(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a 60-character hex gene (either case) into its cells.
pub fn decode_gene(hex_str: &str) -> Result<GeneArray, GenomeError> {
    if hex_str.len() != GENE_HEX_LEN {
        return Err(GenomeError::HexLength(hex_str.len()));
    }
    let mut bytes = [0u8; GENE_BYTES];
    hex::decode_to_slice(hex_str, &mut bytes)
        .map_err(|e| GenomeError::HexFormat(e.to_string()))?;

    let bit = |b: usize| (bytes[GENE_BYTES - 1 - b / 8] >> (b % 8)) & 1;
    let mut cells = [0u8; CELLS];
    for (i, cell) in cells.iter_mut().enumerate() {
        *cell = (0..5).map(|t| bit(5 * i + t) << t).sum();
    }
    Ok(GeneArray(cells))
}

/// Lowercase, zero-padded 60-character hex.
pub fn encode_gene(gene: &GeneArray) -> String {
    let mut bytes = [0u8; GENE_BYTES];
    for (i, &cell) in gene.0.iter().enumerate() {
        for t in 0..5 {
            if (cell >> t) & 1 == 1 {
                let b = 5 * i + t;
                bytes[GENE_BYTES - 1 - b / 8] |= 1 << (b % 8);
            }
        }
    }
    hex::encode(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCattribute", into = "RawCattribute")]
pub struct Cattribute {
    name: String,
    constraints: Vec<(usize, u8)>,
}

#[derive(Serialize, Deserialize)]
struct RawCattribute {
    name: String,
    constraints: Vec<(usize, u8)>,
}

impl TryFrom<RawCattribute> for Cattribute {
    type Error = GenomeError;
    fn try_from(raw: RawCattribute) -> Result<Self, Self::Error> {
        Cattribute::new(raw.name, raw.constraints)
    }
}

impl From<Cattribute> for RawCattribute {
    fn from(c: Cattribute) -> Self {
        RawCattribute { name: c.name, constraints: c.constraints }
    }
}

impl Cattribute {
    pub fn new(name: impl Into<String>, constraints: Vec<(usize, u8)>) -> Result<Self, GenomeError> {
        let name = name.into();
        if constraints.is_empty() {
            return Err(GenomeError::EmptyCattribute(name));
        }
        let mut seen = HashSet::new();
        for &(cell, value) in &constraints {
            if cell >= CELLS || value > MAX_CELL_VALUE {
                return Err(GenomeError::ConstraintRange { name, cell, value });
            }
            if !seen.insert(cell) {
                return Err(GenomeError::DuplicateCell { name, cell });
            }
        }
        Ok(Cattribute { name, constraints })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn constraints(&self) -> &[(usize, u8)] {
        &self.constraints
    }

    pub fn matches(&self, gene: &GeneArray) -> bool {
        self.constraints.iter().all(|&(cell, value)| gene.get(cell) == value)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Cattribute>", into = "Vec<Cattribute>")]
pub struct CattributeRegistry {
    entries: Vec<Cattribute>,
}

impl TryFrom<Vec<Cattribute>> for CattributeRegistry {
    type Error = GenomeError;
    fn try_from(entries: Vec<Cattribute>) -> Result<Self, Self::Error> {
        CattributeRegistry::new(entries)
    }
}

impl From<CattributeRegistry> for Vec<Cattribute> {
    fn from(r: CattributeRegistry) -> Self {
        r.entries
    }
}

impl CattributeRegistry {
    pub fn new(entries: Vec<Cattribute>) -> Result<Self, GenomeError> {
        let mut names = HashSet::new();
        for c in &entries {
            if !names.insert(c.name.as_str()) {
                return Err(GenomeError::DuplicateName(c.name.clone()));
            }
        }
        Ok(CattributeRegistry { entries })
    }

    /// The bundled registry: "driver", "dominator" and synthetic mutant traits.
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, GenomeError> {
        serde_json::from_str(json).map_err(|e| GenomeError::Registry(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GenomeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GenomeError::Registry(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn entries(&self) -> &[Cattribute] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Cattribute> {
        self.entries.iter().find(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn without(&self, name: &str) -> Self {
        CattributeRegistry {
            entries: self.entries.iter().filter(|c| c.name != name).cloned().collect(),
        }
    }
}

/// Names of every registry entry whose constraints all hold for `gene`.
pub fn cattributes(gene: &GeneArray, registry: &CattributeRegistry) -> BTreeSet<String> {
    registry
        .entries
        .iter()
        .filter(|c| c.matches(gene))
        .map(|c| c.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gene_with(pairs: &[(usize, u8)]) -> GeneArray {
        let mut g = GeneArray::ZERO;
        for &(i, v) in pairs {
            g.set(i, v);
        }
        g
    }

    #[test]
    fn zero_hex_decodes_to_zero_cells() {
        assert_eq!(decode_gene(&"0".repeat(60)).unwrap(), GeneArray::ZERO);
    }

    #[test]
    fn low_bits_fill_cell_zero_first() {
        // 0x2f = 0b1_01111: cell 0 takes the low five bits, cell 1 the sixth.
        let hex = format!("{}2f", "0".repeat(58));
        let g = decode_gene(&hex).unwrap();
        assert_eq!(g.get(0), 15);
        assert_eq!(g.get(1), 1);
        assert!(g.cells()[2..].iter().all(|&c| c == 0));
    }

    #[test]
    fn encode_single_cells() {
        assert_eq!(encode_gene(&GeneArray::ZERO), "0".repeat(60));
        assert_eq!(encode_gene(&gene_with(&[(0, 15)])), format!("{}f", "0".repeat(59)));
        assert_eq!(encode_gene(&gene_with(&[(47, 31)])), format!("f8{}", "0".repeat(58)));
    }

    #[test]
    fn malformed_hex_is_rejected() {
        assert_eq!(decode_gene("abc"), Err(GenomeError::HexLength(3)));
        assert!(matches!(decode_gene(&"g".repeat(60)), Err(GenomeError::HexFormat(_))));
        assert!(decode_gene(&"F".repeat(60)).is_ok());
    }

    #[test]
    fn gene_array_rejects_large_cells() {
        let mut cells = [0u8; CELLS];
        cells[7] = 32;
        assert_eq!(GeneArray::new(cells), Err(GenomeError::CellRange { index: 7, value: 32 }));
    }

    #[test]
    fn named_cattributes_from_market_observation() {
        let reg = CattributeRegistry::builtin();
        let driver = gene_with(&[(0, 15), (36, 23)]);
        assert!(cattributes(&driver, &reg).contains("driver"));
        let dominator = gene_with(&[(0, 28), (28, 23)]);
        assert!(cattributes(&dominator, &reg).contains("dominator"));
        assert!(cattributes(&GeneArray::ZERO, &reg).is_empty());
    }

    #[test]
    fn registry_validation() {
        assert!(matches!(Cattribute::new("x", vec![]), Err(GenomeError::EmptyCattribute(_))));
        assert!(matches!(
            Cattribute::new("x", vec![(1, 2), (1, 3)]),
            Err(GenomeError::DuplicateCell { cell: 1, .. })
        ));
        assert!(matches!(
            Cattribute::new("x", vec![(48, 0)]),
            Err(GenomeError::ConstraintRange { .. })
        ));
        let a = Cattribute::new("a", vec![(0, 1)]).unwrap();
        assert!(matches!(
            CattributeRegistry::new(vec![a.clone(), a]),
            Err(GenomeError::DuplicateName(_))
        ));
        assert!(CattributeRegistry::from_json(r#"[{"name":"a","constraints":[]}]"#).is_err());
    }

    #[test]
    fn registry_json_round_trip() {
        let reg = CattributeRegistry::builtin();
        let json = serde_json::to_string(&reg).unwrap();
        assert_eq!(CattributeRegistry::from_json(&json).unwrap(), reg);
    }

    fn arb_gene() -> impl Strategy<Value = GeneArray> {
        prop::array::uniform32(0u8..32)
            .prop_flat_map(|a| prop::array::uniform16(0u8..32).prop_map(move |b| (a, b)))
            .prop_map(|(a, b)| {
                let mut cells = [0u8; CELLS];
                cells[..32].copy_from_slice(&a);
                cells[32..].copy_from_slice(&b);
                GeneArray::new(cells).unwrap()
            })
    }

    proptest! {
        #[test]
        fn hex_round_trips(g in arb_gene()) {
            let hex = encode_gene(&g);
            prop_assert_eq!(hex.len(), GENE_HEX_LEN);
            prop_assert_eq!(decode_gene(&hex).unwrap(), g);
            prop_assert_eq!(encode_gene(&decode_gene(&hex.to_uppercase()).unwrap()), hex);
        }

        #[test]
        fn removing_entries_never_adds_names(g in arb_gene(), drop in 0usize..10) {
            let reg = CattributeRegistry::builtin();
            let name = reg.entries()[drop % reg.len()].name().to_string();
            let full = cattributes(&g, &reg);
            let reduced = cattributes(&g, &reg.without(&name));
            prop_assert!(reduced.is_subset(&full));
        }
    }
}
