//! Named systems, system files and the worked-example verifications.

pub mod file;
pub mod registry;
pub mod verify;

pub use file::{export_system, load_system_file, load_system_file_with, SystemFile};
pub use registry::{load, named, NamedSystem};
pub use verify::{verify, verify_shortword_example, verify_wsc_example, ClaimResult, VerificationReport};
