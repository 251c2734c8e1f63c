//! Invariant subspaces, flags and boundedness of jump products.

mod invariant;
mod jumps;
mod kernel;

pub use invariant::{invariant_flag, is_irreducible, FlagDecomposition, Irreducibility, WITNESS_TOL};
pub use jumps::{jump_products_bounded, products_up_to, JumpBound};
pub use kernel::check_jump_kernel;
