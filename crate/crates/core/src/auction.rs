//! Dutch auctions, the seller/bidder collusion experiment, and the bid-delay
//! window countermeasure.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{AgentId, KittyId};
use crate::eth::Eth;
use crate::exec::Execution;

pub type ListingId = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuctionError {
    #[error("invalid listing: {0}")]
    InvalidListing(String),
    #[error("block {block} is before the auction starts at {start}")]
    BeforeStart { block: u64, start: u64 },
    #[error("bidding opens at block {opens_at}")]
    BeforeDelayWindow { opens_at: u64 },
    #[error("bid of {funds} Eth is below the current price {price} Eth")]
    InsufficientFunds { price: Eth, funds: Eth },
    #[error("listing already sold")]
    AlreadySold,
    #[error("listing was cancelled")]
    Cancelled,
    #[error("sellers cannot bid on their own listing")]
    SellerBid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListingKind {
    Standard,
    /// Sells one breeding with the kitty; ownership stays with the seller.
    Siring,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListingState {
    Open,
    Sold { buyer: AgentId, price: Eth, block: u64 },
    Cancelled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub id: ListingId,
    pub kitty_id: KittyId,
    pub seller: AgentId,
    pub start_price: Eth,
    pub end_price: Eth,
    pub start_block: u64,
    pub duration_blocks: u64,
    pub kind: ListingKind,
    pub bid_delay_blocks: u64,
    pub state: ListingState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sale {
    pub listing_id: ListingId,
    pub kitty_id: KittyId,
    pub kind: ListingKind,
    pub seller: AgentId,
    pub buyer: AgentId,
    pub price: Eth,
    pub block: u64,
}

impl Sale {
    /// Moves the price from buyer to seller.
    pub fn settle(&self, buyer_balance: &mut Eth, seller_balance: &mut Eth) {
        debug_assert!(*buyer_balance >= self.price);
        *buyer_balance -= self.price;
        *seller_balance += self.price;
    }
}

#[allow(clippy::too_many_arguments)]
impl Listing {
    pub fn new(
        id: ListingId,
        kitty_id: KittyId,
        seller: AgentId,
        start_price: Eth,
        end_price: Eth,
        start_block: u64,
        duration_blocks: u64,
        kind: ListingKind,
        bid_delay_blocks: u64,
    ) -> Result<Self, AuctionError> {
        if end_price.is_negative() {
            return Err(AuctionError::InvalidListing("prices must be non-negative".into()));
        }
        if start_price < end_price {
            return Err(AuctionError::InvalidListing("start price below end price".into()));
        }
        if duration_blocks == 0 {
            return Err(AuctionError::InvalidListing("duration must be positive".into()));
        }
        Ok(Listing {
            id,
            kitty_id,
            seller,
            start_price,
            end_price,
            start_block,
            duration_blocks,
            kind,
            bid_delay_blocks,
            state: ListingState::Open,
        })
    }

    pub fn is_open(&self) -> bool {
        self.state == ListingState::Open
    }

    /// First block at which a bid is accepted.
    pub fn opens_at(&self) -> u64 {
        self.start_block + self.bid_delay_blocks
    }

    /// Linear decay from start to end price, clamped after the duration and
    /// rounded half-up to the nearest wei.
    pub fn current_price(&self, block: u64) -> Result<Eth, AuctionError> {
        if block < self.start_block {
            return Err(AuctionError::BeforeStart { block, start: self.start_block });
        }
        let elapsed = (block - self.start_block).min(self.duration_blocks) as i128;
        let d = self.duration_blocks as i128;
        let drop = (self.start_price - self.end_price).wei();
        // drop * elapsed / d without overflowing: split drop into q*d + r.
        let (q, r) = (drop / d, drop % d);
        let decayed = q * elapsed + (r * elapsed + d / 2) / d;
        Ok(self.start_price - Eth::from_wei(decayed))
    }

    pub fn bid(&mut self, bidder: AgentId, block: u64, funds: Eth) -> Result<Sale, AuctionError> {
        match self.state {
            ListingState::Sold { .. } => return Err(AuctionError::AlreadySold),
            ListingState::Cancelled => return Err(AuctionError::Cancelled),
            ListingState::Open => {}
        }
        if bidder == self.seller {
            return Err(AuctionError::SellerBid);
        }
        if block < self.opens_at() {
            return Err(AuctionError::BeforeDelayWindow { opens_at: self.opens_at() });
        }
        let price = self.current_price(block)?;
        if funds < price {
            return Err(AuctionError::InsufficientFunds { price, funds });
        }
        self.state = ListingState::Sold { buyer: bidder, price, block };
        Ok(Sale {
            listing_id: self.id,
            kitty_id: self.kitty_id,
            kind: self.kind,
            seller: self.seller,
            buyer: bidder,
            price,
            block,
        })
    }

    pub fn cancel(&mut self) -> Result<(), AuctionError> {
        match self.state {
            ListingState::Open => {
                self.state = ListingState::Cancelled;
                Ok(())
            }
            ListingState::Sold { .. } => Err(AuctionError::AlreadySold),
            ListingState::Cancelled => Err(AuctionError::Cancelled),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollusionConfig {
    pub auctions: usize,
    pub delay_blocks: u64,
    /// Mean of the geometric (support 1, 2, ...) block delay before a public
    /// bidder notices a listing.
    pub discovery_mean_blocks: f64,
    pub public_bidders: usize,
    pub start_price: Eth,
    pub end_price: Eth,
    pub duration_blocks: u64,
    pub seed: u64,
}

impl Default for CollusionConfig {
    fn default() -> Self {
        CollusionConfig {
            auctions: 1000,
            delay_blocks: 0,
            discovery_mean_blocks: 60.0,
            public_bidders: 5,
            start_price: Eth::whole(5),
            end_price: Eth::from_milli(500),
            duration_blocks: 5760,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BidderClass {
    Colluder,
    Public,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub auction_id: u64,
    pub winner_class: BidderClass,
    pub price: Eth,
    pub block: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollusionReport {
    pub config: CollusionConfig,
    pub colluder_wins: usize,
    pub public_wins: usize,
    pub mean_winning_price: Eth,
    pub outcomes: Vec<AuctionOutcome>,
}

impl CollusionReport {
    pub fn colluder_win_rate(&self) -> f64 {
        self.colluder_wins as f64 / self.outcomes.len().max(1) as f64
    }

    pub fn public_win_share(&self) -> f64 {
        self.public_wins as f64 / self.outcomes.len().max(1) as f64
    }

    /// `auction_id,winner_class,price,block`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("auction_id,winner_class,price,block\n");
        for o in &self.outcomes {
            let class = match o.winner_class {
                BidderClass::Colluder => "colluder",
                BidderClass::Public => "public",
            };
            let _ = writeln!(out, "{},{class},{},{}", o.auction_id, o.price, o.block);
        }
        out
    }
}

/// Geometric waiting time on {1, 2, ...} with the given mean.
fn geometric_delay(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 1.0 {
        return 1;
    }
    let p = 1.0 / mean;
    let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    ((u.ln() / (1.0 - p).ln()).ceil() as u64).max(1)
}

fn run_collusion_auction(cfg: &CollusionConfig, auction_id: u64) -> AuctionOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(auction_id);

    // Agent ids are a per-auction random order; ties go to the lowest id, so
    // neither side wins ties systematically.
    let participants = cfg.public_bidders + 1;
    let mut ids: Vec<AgentId> = (1..=participants as AgentId).collect();
    ids.shuffle(&mut rng);
    let colluder = ids[0];
    let discoveries: Vec<u64> =
        (0..cfg.public_bidders).map(|_| geometric_delay(&mut rng, cfg.discovery_mean_blocks)).collect();

    let seller: AgentId = 0;
    let start = 0;
    let mut listing = Listing::new(
        auction_id,
        auction_id + 1,
        seller,
        cfg.start_price,
        cfg.end_price,
        start,
        cfg.duration_blocks,
        ListingKind::Standard,
        cfg.delay_blocks,
    )
    .expect("experiment listing is valid");

    // The colluder is told the start and bids at the first legal block.
    let mut attempts: BinaryHeap<Reverse<(u64, AgentId)>> = BinaryHeap::new();
    attempts.push(Reverse((listing.opens_at(), colluder)));
    for (j, d) in discoveries.into_iter().enumerate() {
        attempts.push(Reverse((start + d, ids[j + 1])));
    }
    let funds = cfg.start_price;
    while let Some(Reverse((block, bidder))) = attempts.pop() {
        match listing.bid(bidder, block, funds) {
            Ok(sale) => {
                let winner_class =
                    if bidder == colluder { BidderClass::Colluder } else { BidderClass::Public };
                return AuctionOutcome { auction_id, winner_class, price: sale.price, block };
            }
            // Bidders who see the listing early come back when bidding opens.
            Err(AuctionError::BeforeDelayWindow { opens_at }) => {
                attempts.push(Reverse((opens_at, bidder)))
            }
            Err(e) => unreachable!("unexpected bid failure: {e}"),
        }
    }
    unreachable!("the colluder always bids")
}

pub fn collusion_experiment(cfg: &CollusionConfig) -> CollusionReport {
    collusion_experiment_with(cfg, Execution::default())
}

/// Runs `cfg.auctions` independent auctions. Each auction draws from its own
/// ChaCha stream, so varying `delay_blocks` under one seed reuses the same
/// discovery times.
pub fn collusion_experiment_with(cfg: &CollusionConfig, exec: Execution) -> CollusionReport {
    let outcomes = exec.map_indexed(cfg.auctions, |i| run_collusion_auction(cfg, i as u64));
    let colluder_wins = outcomes.iter().filter(|o| o.winner_class == BidderClass::Colluder).count();
    let total: Eth = outcomes.iter().map(|o| o.price).sum();
    let mean_winning_price =
        if outcomes.is_empty() { Eth::ZERO } else { total.div_floor(outcomes.len() as i128) };
    CollusionReport {
        config: cfg.clone(),
        colluder_wins,
        public_wins: outcomes.len() - colluder_wins,
        mean_winning_price,
        outcomes,
    }
}
