//! Quantum bouncer dynamics under conservative and entropic gravity.
//!
//! This crate models ultra-cold neutrons bouncing above a mirror in Earth's
//! gravity, in two ways: the ordinary conservative Liouville equation, and a
//! Lindblad master equation in which the linear potential is replaced by a
//! displacement-type dissipator with a single dimensionless coupling `sigma`.
//! Everything is expressed in the truncated Airy eigenbasis of the bouncer,
//! so the state is a small complex density matrix and all operators are dense
//! `n x n` matrices built from semi-infinite Airy overlap integrals.
//!
//! On top of the propagator the crate provides the gravity-resonance-
//! spectroscopy measurement model (oscillating mirror drive, flight times,
//! relative transmission), an order-constrained chi-square fit of transmission
//! data over a `(sigma, velocity)` grid, and closed-form predictions
//! (energy-gain rates, Diosi-Penrose comparison, storage bounds, mass-scaled
//! decoherence times).
//!
//! The crate is `no_std` (with `alloc`); all I/O, file formats and the CLI
//! live in the companion `qbounce-cli` crate.

#![no_std]
// Validation throughout uses the NaN-rejecting `!(x > 0.0)` spelling; the
// negated comparison is the point, not an accident.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod airy;
pub mod basis;
pub mod constants;
pub mod dynamics;
pub mod experiment;
pub mod fitting;
pub mod linalg;
pub mod nnls;
pub mod predictions;
pub mod quadrature;
