//! Solvers for atomic-splittable routing games on parallel links.
//!
//! A game instance is a set of parallel links with monomial latency
//! functions `a·f^d + b` and a set of players, each controlling a
//! splittable flow volume over an accessible subset of the links.
//! The library computes:
//!
//! * socially optimal flows ([`waterfill::social_optimum`],
//!   [`equilibria::global_optimum`]),
//! * Wardrop and Nash-Cournot equilibria ([`equilibria`]),
//! * leader-follower (Stackelberg) solutions where the leader is selfish
//!   ([`stackelberg`]),
//! * worst-case price ratios, closed-form two-link analysis, and a
//!   property-fuzzing harness ([`analysis2link`]),
//! * constructive strategy allocators and cost-bound calculators
//!   ([`bounds`]).
//!
//! All solvers are deterministic pure functions over immutable inputs.

pub mod analysis2link;
pub mod bounds;
pub mod cli;
pub mod equilibria;
pub mod model;
pub mod rng;
pub mod stackelberg;
pub mod waterfill;
