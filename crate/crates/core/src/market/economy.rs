//! Family Jewels, the fixed kitty pricing model, the Diamond breeding
//! scenario and the Gini coefficient.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainConfig, SimChain, BREEDING_FEE};
use crate::digest::sha256;
use crate::eth::Eth;
use crate::genome::{Cattribute, GeneArray, GROUP_SIZE};

use super::MarketError;

/// Cheapest price any kitty sells for.
pub const MIN_KITTY_PRICE: Eth = Eth::from_milli(4);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JewelTier {
    Diamond,
    Gilded,
    Amethyst,
    Lapis,
}

impl JewelTier {
    pub const ALL: [JewelTier; 4] =
        [JewelTier::Diamond, JewelTier::Gilded, JewelTier::Amethyst, JewelTier::Lapis];

    pub fn min_price(self) -> Eth {
        match self {
            JewelTier::Diamond => Eth::whole(5),
            JewelTier::Gilded => Eth::from_milli(500),
            JewelTier::Amethyst => Eth::from_milli(70),
            JewelTier::Lapis => Eth::from_milli(9),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JewelTier::Diamond => "diamond",
            JewelTier::Gilded => "gilded",
            JewelTier::Amethyst => "amethyst",
            JewelTier::Lapis => "lapis",
        }
    }
}

/// Jewel for the `rank`-th kitty (1-based) to show a Cattribute.
pub fn assign_jewel(rank: u32) -> Result<JewelTier, MarketError> {
    match rank {
        0 => Err(MarketError::InvalidRank(rank)),
        1 => Ok(JewelTier::Diamond),
        2..=10 => Ok(JewelTier::Gilded),
        11..=100 => Ok(JewelTier::Amethyst),
        _ => Ok(JewelTier::Lapis),
    }
}

/// `max(jewel minimum, producible_value / 2, 0.004)`.
pub fn kitty_price(jewel: Option<JewelTier>, producible_value: Eth) -> Eth {
    let jewel_floor = jewel.map(JewelTier::min_price).unwrap_or(Eth::ZERO);
    jewel_floor.max(producible_value.max(Eth::ZERO).div_floor(2)).max(MIN_KITTY_PRICE)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounts {
    pub diamond: u32,
    pub gilded: u32,
    pub amethyst: u32,
    pub lapis: u32,
}

impl TierCounts {
    pub fn add(&mut self, tier: JewelTier) {
        match tier {
            JewelTier::Diamond => self.diamond += 1,
            JewelTier::Gilded => self.gilded += 1,
            JewelTier::Amethyst => self.amethyst += 1,
            JewelTier::Lapis => self.lapis += 1,
        }
    }

    pub fn get(&self, tier: JewelTier) -> u32 {
        match tier {
            JewelTier::Diamond => self.diamond,
            JewelTier::Gilded => self.gilded,
            JewelTier::Amethyst => self.amethyst,
            JewelTier::Lapis => self.lapis,
        }
    }

    pub fn total(&self) -> u32 {
        self.diamond + self.gilded + self.amethyst + self.lapis
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiamondScenario {
    pub children: u32,
    /// Sale value of the children at jewel minimum prices, fees not deducted.
    pub gross: Eth,
    pub fees: Eth,
    pub net: Eth,
    pub tiers: TierCounts,
}

/// A Diamond holder breeds `children` kitties that all keep its Cattribute and
/// sells each at its jewel's minimum price. Breeding runs on a real
/// [`SimChain`]; the partner carries the same Cattribute so inheritance is
/// certain.
pub fn diamond_scenario(children: u32) -> DiamondScenario {
    let driver = Cattribute::new("driver", vec![(0, 15), (36, 23)]).expect("valid cattribute");
    let mut gene = GeneArray::splat(1);
    for &(cell, value) in driver.constraints() {
        let base = cell - cell % GROUP_SIZE;
        for c in base..base + GROUP_SIZE {
            gene.set(c, value);
        }
    }

    let mut chain = SimChain::new(sha256(b"diamond scenario"), ChainConfig::default());
    let owner = 1;
    let diamond = chain.mint_gen0(gene, owner);
    let partner = chain.mint_gen0(gene, owner);
    let mut balance = BREEDING_FEE.times(children as i128);
    let mut tiers = TierCounts::default();
    let mut gross = Eth::ZERO;
    for i in 0..children {
        let p = chain.breed(partner, diamond, &mut balance).expect("fee is pre-funded");
        chain.advance_to(p.target_block);
        let child = chain.give_birth(partner).expect("target block reached");
        assert!(driver.matches(&child.gene), "child {i} lost the cattribute");
        // The Diamond itself holds rank 1.
        let tier = assign_jewel(i + 2).expect("rank >= 2");
        tiers.add(tier);
        gross += tier.min_price();
    }
    let fees = chain.fees_collected();
    DiamondScenario { children, gross, fees, net: gross - fees, tiers }
}

/// Gini coefficient of non-negative values; all-zero input gives 0.
pub fn gini(values: &[f64]) -> Result<f64, MarketError> {
    if values.is_empty() {
        return Err(MarketError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(MarketError::NegativeValue);
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let weighted: f64 = sorted.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * x).sum();
    let g = 2.0 * weighted / (n * total) - (n + 1.0) / n;
    Ok(g.clamp(0.0, 1.0))
}
