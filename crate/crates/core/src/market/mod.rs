//! The fixed-price economy, agent-based market simulation and fairness
//! evaluation.

mod config;
mod economy;
mod report;
mod sim;

pub use config::{AgentClass, AgentCounts, Budgets, FairnessThresholds, ScenarioConfig, StrategyConfig};
pub use economy::{
    assign_jewel, diamond_scenario, gini, kitty_price, DiamondScenario, JewelTier, TierCounts,
    MIN_KITTY_PRICE,
};
pub use report::{
    trades_csv, AgentSummary, BatchSummary, ClassSummary, ConditionFlag, FairnessReport,
    TradeRecord,
};
pub use sim::{run_batch, run_simulation, run_simulation_with_trades, SimulationOutput};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MarketError {
    #[error("jewel rank must be at least 1, got {0}")]
    InvalidRank(u32),
    #[error("no values given")]
    EmptyInput,
    #[error("values must be finite and non-negative")]
    NegativeValue,
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("{0}")]
    Registry(String),
    #[error("cooldown table: {0}")]
    Cooldown(String),
}
