//! Allocation of one good with costly verification and no transfers.
//!
//! Distributions and contractions live in [`dist`], the single-agent
//! threshold and mechanism in [`threshold`] and [`mechanism`], designed
//! information in [`design`], and the favored-agent mechanism for several
//! agents in [`multi`]. [`oracle`] re-solves small instances as linear
//! programs. The guide in `book/` is compiled as doc-tests.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod design;
pub mod dist;
pub mod error;
pub mod mechanism;
pub mod montecarlo;
pub mod multi;
pub mod oracle;
pub mod poly;
pub mod robust;
pub mod simplex;
pub mod threshold;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/threshold.md")]
    mod threshold {}
    #[doc = include_str!("../../../book/src/information_design.md")]
    mod information_design {}
    #[doc = include_str!("../../../book/src/robust.md")]
    mod robust {}
    #[doc = include_str!("../../../book/src/multi_agent.md")]
    mod multi_agent {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
