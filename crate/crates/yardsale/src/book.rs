//! Runs the guide's code listings as doc-tests, keeping `book/` and the
//! crate from drifting apart. `cargo test --doc` picks these up; nothing
//! here exists outside doctest collection.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub struct BookIntroduction;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/exchange-rules.md")]
pub struct BookExchangeRules;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/inequality-metrics.md")]
pub struct BookInequalityMetrics;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/taxation.md")]
pub struct BookTaxation;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
pub struct BookExperiments;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub struct BookCli;
