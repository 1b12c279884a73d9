//! Hermitian symmetric factors: the type catalog, explicit Chevalley bases
//! for Grassmannians, and brute-force verification of the invariant Chern
//! tensors on Calabi–Eckmann type models.

pub mod catalog;
pub mod chern;
pub mod roots;

pub use catalog::{catalog_lookup, catalog_table, CatalogEntry};
pub use chern::{verify_chern_tensors, CERealization};
pub use roots::{grassmannian_realization, verify_root_identities, RootRealization};
