//! Exact-arithmetic computation of Wiles defects, three independent ways:
//!
//! * abstract linear algebra over the p-adic integers for congruence modules
//!   and cotangent spaces of finite flat reduced local O-algebras
//!   ([`congruence`]);
//! * explicit cotangent lattices of framed/unipotent/Steinberg local
//!   deformation rings at a generic Steinberg augmentation, with their
//!   closed-form relative lengths ([`localdef`]);
//! * tame local invariants of semistable elliptic curves at multiplicative
//!   primes, computed from the unit part of the Tate period ([`tamedefect`]).
//!
//! The [`scan`] module ingests elliptic-curve tables and reproduces the
//! defect scan over squarefree conductors; the `wdl` binary exposes the CLI.
//!
//! Everything is computed over the rationals or residue rings — no floats,
//! no approximations. Lengths of finite modules are p-adic valuations
//! obtained from generator matrices of lattices over Z localized at p.

pub mod arith;
pub mod congruence;
pub mod elliptic;
pub mod error;
pub mod localdef;
pub mod plattice;
pub mod scan;
pub mod tamedefect;

pub use arith::{PAdicVal, SignedVal};
pub use error::WdlError;
pub use plattice::PLattice;
