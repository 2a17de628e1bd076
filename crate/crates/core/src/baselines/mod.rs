//! Reference aggregators: majority voting, Dawid-Skene EM and Karger's iterative method.

pub mod dawid_skene;
pub mod karger;
pub mod majority;

pub use dawid_skene::{dawid_skene, DawidSkeneParams, DawidSkeneState};
pub use karger::{karger_iterative, KargerParams, KargerState};
pub use majority::majority_vote;
