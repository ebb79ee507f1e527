//! Skill- and willingness-aware assignment of volunteers to tasks.
//!
//! Text goes in through [`corpus`], becomes canonical skills and preference
//! cues in [`extraction`], and is scored pair by pair with [`similarity`] and
//! [`willingness`]. [`assignment`] turns scores into a capacity-respecting
//! matching, [`metrics`] measures it, and [`ledger`] records it in a
//! tamper-evident log. [`pipeline`] strings the stages together.
//!
//! The guide in `book/` walks through each stage with runnable examples.

pub mod assignment;
pub mod config;
pub mod corpus;
pub mod extraction;
pub mod ledger;
pub mod manifest;
pub mod metrics;
pub mod ontology;
pub mod pipeline;
pub mod similarity;
pub mod willingness;

// Book chapters run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ontology.md")]
    mod ontology {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/similarity.md")]
    mod similarity {}
    #[doc = include_str!("../../../book/src/willingness.md")]
    mod willingness {}
    #[doc = include_str!("../../../book/src/utility.md")]
    mod utility {}
    #[doc = include_str!("../../../book/src/assignment.md")]
    mod assignment {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/ledger.md")]
    mod ledger {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
