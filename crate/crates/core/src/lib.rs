//! Corpus analytics for geotagged social-media records.
//!
//! The crate covers the full batch pipeline: parsing raw JSONL records and
//! resolving them to US states ([`ingest`]), text cleaning and mergeable
//! 1-gram counts ([`textprep`]), lexicon-based compound sentiment
//! ([`lexicon`]), state-year panel construction ([`panel`]), correlation /
//! cross-correlation / changepoint statistics ([`stats`]), rank-turbulence
//! divergence and word shifts ([`allotax`]), and account-composition
//! summaries ([`accounts`]).

pub mod accounts;
pub mod allotax;
pub mod ingest;
pub mod lexicon;
pub mod panel;
pub mod ranks;
pub mod stats;
pub mod textprep;
