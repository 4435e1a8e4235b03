//! Synthesis of optimal strategies for agents with a "trembling hand":
//! action instructions that slip with known probability, pursuing LTLf goals
//! in deterministic or adversarial nondeterministic domains.
//!
//! The pipeline is: parse the goal ([`ltlf`]), compile it to an automaton
//! ([`dfa`]), abstract the domain and slip model into an MDP with set-valued
//! transitions ([`abstraction`]), then solve the product with robust value
//! iteration ([`product`]). [`sim`] executes strategies with sampled slips
//! and [`coassembly`] generates the block co-assembly benchmark.

pub mod abstraction;
pub mod coassembly;
pub mod dfa;
pub mod domain;
pub mod ltlf;
pub mod product;
pub mod sim;
