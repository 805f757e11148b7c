//! Constraint families, the finite intersection property, and the witness
//! constructions behind the fine-ultrafilter theorems.

pub mod constraint;
pub mod fip;
pub mod ordinal;
pub mod powerset;
pub mod superreg;

pub use constraint::{constraint_membership, fineness_base, Constraint, Family, FilterBase};
pub use fip::{check_fip, Budget, FipResult};
pub use ordinal::{ordinal_witness, OrdinalSpec};
pub use powerset::{lift, powerset_prefilter_stage, powerset_witness_extend, PowerOrder};
pub use superreg::{superreg_witness, RatioPair};
