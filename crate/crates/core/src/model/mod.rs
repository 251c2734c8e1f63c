//! Systems, switching signals, weighted systems and words.

mod hausdorff;
pub mod io;
mod signal;
mod system;
mod weighted;
mod word;

pub use hausdorff::hausdorff_distance;
pub use signal::{flow, Segment, SwitchingSignal};
pub use system::{ImpulsiveSystem, Mode};
pub use weighted::{instantiate, lift, shift, Atom, FamilyTail, Letter, Origin, WeightedSystem};
pub use word::Word;
