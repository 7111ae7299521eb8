//! File formats and the synthetic two-domain generator.
//!
//! | file | format |
//! |------|--------|
//! | features | CSV, header `id[,x,y],f0,…,f{D-1}` |
//! | pair constraints | CSV `attribute,id_a,id_b,relation`, relation `>` or `~` |
//! | attribute model | JSON `{attribute_name, weights, training_meta}` |
//! | descriptor | JSON `{attribute_names, prototype_ids, ranks}` |
//! | database | binary, see [`database`] |
//! | report | JSON list of reports; optional CSV `trial,method,map` |
//!
//! Loaders reject malformed input rather than repairing it.

pub mod database;
mod features_csv;
mod models;
mod pairs;
mod reports;
pub mod synthetic;

pub use database::{load_database, read_database, save_database, write_database};
pub use features_csv::{load_features, read_features, save_features, write_features};
pub use models::{load_model, load_models_dir, save_model, save_models};
pub use pairs::{load_pairs, read_pairs, save_pairs, write_pairs};
pub use reports::{save_reports, write_trial_csv};
pub use synthetic::{generate_synthetic, sample_pairs, DomainShift, SyntheticData, SyntheticSpec};
