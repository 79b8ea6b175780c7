//! Exact computation of Bruinier-Funke pairings between weight 3/2 theta
//! series of shifted ternary lattices and unary theta functions.
//!
//! The coefficient domain is [`exact_arith::CycloScalar`]; q-expansions live
//! in [`qseries::QExpansion`]. Expansions at cusps are obtained by replaying
//! S/T words through exact transformation laws.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod bf_pairing;
pub mod exact_arith;
pub mod mock_eichler;
pub mod modular_group;
pub mod par;
pub mod qseries;
pub mod theta_forms;
