//! Active automaton learning from a frozen recurrent model: an Angluin-style
//! learner whose membership queries go to the model's classifier and whose
//! equivalence queries go through a refinable finite abstraction of the
//! model's continuous state space, backstopped by random probing.

mod abstraction;
mod budget;
mod error;
mod extract;
mod lstar;
mod partition;
#[cfg(test)]
pub(crate) mod stubs;
mod table;
mod teacher;

pub use abstraction::{build_abstract_automaton, shortest_disagreement, AbstractAutomaton};
pub use budget::ExtractionBudget;
pub use error::ExtractError;
pub use extract::{extract_dfa_from_dcsa, Extraction, ExtractionLog};
pub use lstar::{lstar, ExactTeacher, LstarOutcome, Teacher};
pub use partition::Partition;
pub use table::ObservationTable;
pub use teacher::{DcsaTeacher, TeacherStats};
