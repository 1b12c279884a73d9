use serde::Serialize;

use crate::error::Result;
use crate::model::FactorKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub kind: FactorKind,
    pub label: String,
    pub dim_n: usize,
    pub admissible: bool,
    pub reason: String,
}

/// Dimension and admissibility of a base factor. A factor is admissible
/// when it has complex dimension at least two and is not a complex quadric.
pub fn lookup(kind: FactorKind) -> CatalogEntry {
    let dim_n = kind.complex_dim();
    let (admissible, reason) = if kind.is_quadric() {
        (false, "complex quadric excluded")
    } else if dim_n < 2 {
        (false, "dimension < 2")
    } else {
        (true, "ok")
    };
    CatalogEntry { kind, label: kind.label(), dim_n, admissible, reason: reason.to_string() }
}

/// Name-based lookup; unknown names give `UnknownType`.
pub fn catalog_lookup(kind: &str, params: &[usize]) -> Result<CatalogEntry> {
    FactorKind::from_name(kind, params).map(lookup)
}

/// Small instances of every type, for the `catalog` listing.
pub fn catalog_table() -> Vec<CatalogEntry> {
    let mut rows = Vec::new();
    for n in 2..=8usize {
        for p in 1..n {
            let q = n - p;
            if p <= q {
                rows.push(lookup(FactorKind::Grassmannian { p, q }));
            }
        }
    }
    rows.extend((2..=6).map(|n| lookup(FactorKind::SpOverU { n })));
    rows.extend((3..=8).map(|n| lookup(FactorKind::SoOverU { n })));
    rows.push(lookup(FactorKind::EIII));
    rows.push(lookup(FactorKind::EVII));
    rows.extend((3..=6).map(|n| lookup(FactorKind::Quadric { n })));
    rows
}
