pub mod audit;
pub mod control;
pub mod direct;
pub mod error;
pub mod fixpoint;
pub mod mappings;
pub mod report;
pub mod spaces;

pub use error::{Error, Result};
pub use report::{AuditEntry, AuditReport, Status, Witness};
pub use spaces::{SpaceSpec, Vector};
