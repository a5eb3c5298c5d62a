//! A deterministic laboratory for CryptoKitties-style breeding.
//!
//! The crate reimplements the gene determination algorithm, simulates the
//! chain clock, cooldowns and Dutch auctions around it, and measures how
//! predictable on-chain randomness and auction collusion skew a market toward
//! informed and wealthy players. Two countermeasures are modeled: jointly
//! committed randomness and a bid-delay window on auctions.

pub mod digest;
pub mod eth;
pub mod exec;
pub mod genescience;
pub mod genome;
pub mod chain;
pub mod prediction;
pub mod randomness;
pub mod auction;
pub mod market;

pub use digest::{sha256, Digest};
pub use eth::Eth;
pub use exec::Execution;
pub use genescience::{mix_genes, BitStream, MutationContext};
pub use genome::{cattributes, decode_gene, encode_gene, Cattribute, CattributeRegistry, GeneArray};
