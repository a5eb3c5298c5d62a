use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chain::{CooldownTable, DEFAULT_SECONDS_PER_BLOCK};
use crate::eth::Eth;
use crate::randomness::EntropyKind;

use super::MarketError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    RichInformed,
    RichNaive,
    PoorInformed,
    PoorNaive,
}

impl AgentClass {
    pub const ALL: [AgentClass; 4] = [
        AgentClass::RichInformed,
        AgentClass::RichNaive,
        AgentClass::PoorInformed,
        AgentClass::PoorNaive,
    ];

    pub fn is_rich(self) -> bool {
        matches!(self, AgentClass::RichInformed | AgentClass::RichNaive)
    }

    /// Informed agents understand the gene algorithm and can evaluate it.
    pub fn is_informed(self) -> bool {
        matches!(self, AgentClass::RichInformed | AgentClass::PoorInformed)
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentClass::RichInformed => "rich_informed",
            AgentClass::RichNaive => "rich_naive",
            AgentClass::PoorInformed => "poor_informed",
            AgentClass::PoorNaive => "poor_naive",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentCounts {
    #[serde(default)]
    pub rich_informed: usize,
    #[serde(default)]
    pub rich_naive: usize,
    #[serde(default)]
    pub poor_informed: usize,
    #[serde(default)]
    pub poor_naive: usize,
}

impl AgentCounts {
    pub fn count(&self, class: AgentClass) -> usize {
        match class {
            AgentClass::RichInformed => self.rich_informed,
            AgentClass::RichNaive => self.rich_naive,
            AgentClass::PoorInformed => self.poor_informed,
            AgentClass::PoorNaive => self.poor_naive,
        }
    }

    pub fn total(&self) -> usize {
        AgentClass::ALL.iter().map(|&c| self.count(c)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub rich: Eth,
    pub poor: Eth,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { rich: Eth::whole(100), poor: Eth::whole(1) }
    }
}

/// Behavioural knobs of the agents. None of these are measured quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub gen0_per_agent: usize,
    /// Gen-0 cells are drawn uniformly from `0..=gen0_max_cell`.
    pub gen0_max_cell: u8,
    pub decision_interval_blocks: u64,
    pub listing_duration_blocks: u64,
    /// Informed agents evaluate at most this many matrons, sires and listings.
    pub max_candidates: usize,
    pub naive_breed_probability: f64,
    pub naive_buy_probability: f64,
    pub list_probability: f64,
    /// Fraction of its balance a naive agent will spend on one purchase.
    pub naive_max_spend_fraction: f64,
    pub joint_participants: usize,
    pub sire_cooldown: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            gen0_per_agent: 4,
            gen0_max_cell: 15,
            decision_interval_blocks: 12,
            listing_duration_blocks: 240,
            max_candidates: 8,
            naive_breed_probability: 0.5,
            naive_buy_probability: 0.2,
            list_probability: 0.1,
            naive_max_spend_fraction: 0.25,
            joint_participants: 5,
            sire_cooldown: false,
        }
    }
}

/// Thresholds behind the five fairness flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessThresholds {
    /// Largest tolerated ratio of mean profits between advantaged and
    /// disadvantaged classes.
    pub advantage_ratio: f64,
    /// Largest share of trade participations one agent may hold.
    pub market_share: f64,
    /// Largest share of sales closed in the listing's first block.
    pub instant_sale_share: f64,
}

impl Default for FairnessThresholds {
    fn default() -> Self {
        FairnessThresholds { advantage_ratio: 1.5, market_share: 0.5, instant_sale_share: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_scenario_id")]
    pub scenario_id: String,
    pub agents: AgentCounts,
    #[serde(default)]
    pub budgets: Budgets,
    pub horizon_blocks: u64,
    #[serde(default)]
    pub entropy: EntropyKind,
    #[serde(default)]
    pub bid_delay_blocks: u64,
    #[serde(default = "default_seconds_per_block")]
    pub seconds_per_block: u64,
    #[serde(default)]
    pub cooldown_table: Option<CooldownTable>,
    #[serde(default)]
    pub registry_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub fairness: FairnessThresholds,
}

fn default_scenario_id() -> String {
    "default".into()
}

fn default_seconds_per_block() -> u64 {
    DEFAULT_SECONDS_PER_BLOCK
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario_id: default_scenario_id(),
            agents: AgentCounts { rich_informed: 2, rich_naive: 2, poor_informed: 2, poor_naive: 2 },
            budgets: Budgets::default(),
            horizon_blocks: 2880,
            entropy: EntropyKind::BlockHash,
            bid_delay_blocks: 0,
            seconds_per_block: DEFAULT_SECONDS_PER_BLOCK,
            cooldown_table: None,
            registry_path: None,
            seed: 0,
            strategy: StrategyConfig::default(),
            fairness: FairnessThresholds::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(json: &str) -> Result<Self, MarketError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(json).map_err(|e| MarketError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `registry_path` is resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, MarketError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MarketError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(reg), Some(dir)) = (&cfg.registry_path, path.parent()) {
            if reg.is_relative() {
                cfg.registry_path = Some(dir.join(reg));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let bad = |msg: &str| Err(MarketError::Config(msg.to_string()));
        let s = &self.strategy;
        if self.agents.total() == 0 {
            return bad("at least one agent is required");
        }
        if self.horizon_blocks == 0 {
            return bad("horizon_blocks must be positive");
        }
        if self.seconds_per_block == 0 {
            return bad("seconds_per_block must be positive");
        }
        if self.budgets.rich.is_negative() || self.budgets.poor.is_negative() {
            return bad("budgets must be non-negative");
        }
        if s.decision_interval_blocks == 0 || s.listing_duration_blocks == 0 {
            return bad("decision and listing intervals must be positive");
        }
        if s.gen0_max_cell > 31 {
            return bad("gen0_max_cell must be at most 31");
        }
        if s.joint_participants == 0 {
            return bad("joint_participants must be positive");
        }
        let probs = [
            s.naive_breed_probability,
            s.naive_buy_probability,
            s.list_probability,
            s.naive_max_spend_fraction,
            self.fairness.market_share,
            self.fairness.instant_sale_share,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities and shares must lie in [0, 1]");
        }
        if self.fairness.advantage_ratio.is_nan() || self.fairness.advantage_ratio < 1.0 {
            return bad("advantage_ratio must be at least 1");
        }
        Ok(())
    }
}
