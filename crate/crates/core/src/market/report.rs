use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::auction::{ListingId, ListingKind};
use crate::chain::{AgentId, KittyId};
use crate::eth::Eth;
use crate::randomness::EntropyKind;

use super::config::{AgentClass, FairnessThresholds};
use super::economy::TierCounts;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub block: u64,
    pub listing_id: ListingId,
    pub kitty_id: KittyId,
    pub kind: ListingKind,
    pub seller: AgentId,
    pub buyer: AgentId,
    pub buyer_class: AgentClass,
    pub price: Eth,
    /// Closed in the first block bids were accepted.
    pub instant: bool,
}

pub fn trades_csv(trades: &[TradeRecord]) -> String {
    let mut out = String::from("block,listing_id,kitty_id,kind,seller,buyer,buyer_class,price,instant\n");
    for t in trades {
        let kind = match t.kind {
            ListingKind::Standard => "standard",
            ListingKind::Siring => "siring",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            t.block,
            t.listing_id,
            t.kitty_id,
            kind,
            t.seller,
            t.buyer,
            t.buyer_class.name(),
            t.price,
            t.instant
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub id: AgentId,
    pub class: AgentClass,
    pub initial_wealth: Eth,
    pub final_balance: Eth,
    pub final_wealth: Eth,
    pub profit: Eth,
    pub kitties: usize,
    pub breedings: u32,
    pub purchases: u32,
    pub sales: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: AgentClass,
    pub agents: usize,
    pub total_profit: Eth,
    pub mean_profit: Eth,
    pub breedings: u32,
    pub purchases: u32,
    pub sales: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlag {
    pub condition: u8,
    pub description: String,
    pub satisfied: bool,
    /// Qualitative condition approximated by a proxy metric.
    pub heuristic: bool,
    pub metric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub scenario_id: String,
    pub rng_seed: u64,
    pub entropy: EntropyKind,
    pub horizon_blocks: u64,
    pub classes: Vec<ClassSummary>,
    pub agents: Vec<AgentSummary>,
    /// Gini coefficient of final agent wealth.
    pub gini: f64,
    /// Mean informed profit minus mean naive profit, in Eth.
    pub informed_advantage: f64,
    pub births: u32,
    pub breedings: u32,
    pub fees_collected: Eth,
    pub trades: usize,
    pub instant_sale_share: f64,
    pub max_market_share: f64,
    pub jewel_counts: BTreeMap<String, TierCounts>,
    pub eth_conserved: bool,
    pub condition_flags: Vec<ConditionFlag>,
}

impl FairnessReport {
    pub fn class(&self, class: AgentClass) -> Option<&ClassSummary> {
        self.classes.iter().find(|c| c.class == class)
    }

    pub fn flag(&self, condition: u8) -> Option<&ConditionFlag> {
        self.condition_flags.iter().find(|f| f.condition == condition)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mean profit of the agents matching `pred`, or `None` when there are none.
pub(crate) fn mean_profit(agents: &[AgentSummary], pred: impl Fn(AgentClass) -> bool) -> Option<f64> {
    let profits: Vec<f64> =
        agents.iter().filter(|a| pred(a.class)).map(|a| a.profit.as_f64()).collect();
    (!profits.is_empty()).then(|| profits.iter().sum::<f64>() / profits.len() as f64)
}

/// True when group `a` out-earns group `b` by more than `threshold` times,
/// or earns something while `b` earns nothing.
pub(crate) fn disadvantaged(a: f64, b: f64, threshold: f64) -> bool {
    a > b && (b <= 0.0 || a / b > threshold)
}

pub(crate) fn condition_flags(
    agents: &[AgentSummary],
    instant_sale_share: f64,
    max_market_share: f64,
    t: &FairnessThresholds,
) -> Vec<ConditionFlag> {
    let ratio_check = |adv: Option<f64>, dis: Option<f64>| match (adv, dis) {
        (Some(a), Some(b)) => (!disadvantaged(a, b, t.advantage_ratio), a - b),
        _ => (true, 0.0),
    };
    let (c1, gap1) = ratio_check(
        mean_profit(agents, AgentClass::is_rich),
        mean_profit(agents, |c| !c.is_rich()),
    );
    let tier = |rich: bool| {
        ratio_check(
            mean_profit(agents, |c| c.is_rich() == rich && c.is_informed()),
            mean_profit(agents, |c| c.is_rich() == rich && !c.is_informed()),
        )
    };
    let ((rich_ok, rich_gap), (poor_ok, poor_gap)) = (tier(true), tier(false));
    let (c5, gap5) = ratio_check(
        mean_profit(agents, AgentClass::is_informed),
        mean_profit(agents, |c| !c.is_informed()),
    );
    let flag = |condition, description: &str, satisfied, heuristic, metric| ConditionFlag {
        condition,
        description: description.to_string(),
        satisfied,
        heuristic,
        metric,
    };
    vec![
        flag(1, "no disadvantage for players with little Eth", c1, false, gap1),
        flag(
            2,
            "no disadvantage for players who cannot read the contract",
            rich_ok && poor_ok,
            false,
            rich_gap.max(poor_gap),
        ),
        flag(
            3,
            "price information reaches all players in time (instant-sale share)",
            instant_sale_share <= t.instant_sale_share,
            true,
            instant_sale_share,
        ),
        flag(
            4,
            "no single player dominates trading (largest trade share)",
            max_market_share <= t.market_share,
            true,
            max_market_share,
        ),
        flag(5, "profit opportunities equally open to all", c5, false, gap5),
    ]
}

/// Associative aggregate over many reports.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub informed_advantage_sum: f64,
    pub gini_sum: f64,
    /// Runs in which condition `i + 1` was satisfied.
    pub satisfied_counts: [usize; 5],
}

impl BatchSummary {
    pub fn from_report(r: &FairnessReport) -> Self {
        let mut satisfied_counts = [0; 5];
        for f in &r.condition_flags {
            if f.satisfied && (1..=5).contains(&f.condition) {
                satisfied_counts[f.condition as usize - 1] += 1;
            }
        }
        BatchSummary {
            runs: 1,
            informed_advantage_sum: r.informed_advantage,
            gini_sum: r.gini,
            satisfied_counts,
        }
    }

    pub fn merge(mut self, other: &BatchSummary) -> Self {
        self.runs += other.runs;
        self.informed_advantage_sum += other.informed_advantage_sum;
        self.gini_sum += other.gini_sum;
        for (a, b) in self.satisfied_counts.iter_mut().zip(other.satisfied_counts) {
            *a += b;
        }
        self
    }

    pub fn from_reports<'a>(reports: impl IntoIterator<Item = &'a FairnessReport>) -> Self {
        reports
            .into_iter()
            .fold(BatchSummary::default(), |acc, r| acc.merge(&BatchSummary::from_report(r)))
    }

    pub fn mean_informed_advantage(&self) -> f64 {
        self.informed_advantage_sum / self.runs.max(1) as f64
    }

    pub fn mean_gini(&self) -> f64 {
        self.gini_sum / self.runs.max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(id: AgentId, class: AgentClass, profit_milli: i64) -> AgentSummary {
        AgentSummary {
            id,
            class,
            initial_wealth: Eth::whole(1),
            final_balance: Eth::whole(1),
            final_wealth: Eth::whole(1) + Eth::from_milli(profit_milli),
            profit: Eth::from_milli(profit_milli),
            kitties: 0,
            breedings: 0,
            purchases: 0,
            sales: 0,
        }
    }

    #[test]
    fn ratio_rule() {
        assert!(!disadvantaged(1.0, 1.0, 1.5));
        assert!(!disadvantaged(1.4, 1.0, 1.5));
        assert!(disadvantaged(1.6, 1.0, 1.5));
        assert!(disadvantaged(0.1, -0.2, 1.5));
        assert!(!disadvantaged(-0.3, -0.2, 1.5));
    }

    #[test]
    fn flags_follow_profits() {
        let t = FairnessThresholds::default();
        let agents = vec![
            agent(0, AgentClass::RichInformed, 500),
            agent(1, AgentClass::RichNaive, -10),
            agent(2, AgentClass::PoorInformed, 20),
            agent(3, AgentClass::PoorNaive, 20),
        ];
        let flags = condition_flags(&agents, 0.1, 0.9, &t);
        let sat: Vec<bool> = flags.iter().map(|f| f.satisfied).collect();
        assert_eq!(sat, vec![false, false, true, false, false]);
        assert!(flags[2].heuristic && flags[3].heuristic);
        assert!(!flags[0].heuristic && !flags[4].heuristic);

        let same = vec![agent(0, AgentClass::RichNaive, 5), agent(1, AgentClass::RichNaive, 7)];
        assert!(condition_flags(&same, 0.0, 0.0, &t).iter().all(|f| f.satisfied));
    }

    #[test]
    fn trades_csv_layout() {
        let csv = trades_csv(&[TradeRecord {
            block: 12,
            listing_id: 3,
            kitty_id: 9,
            kind: ListingKind::Siring,
            seller: 1,
            buyer: 2,
            buyer_class: AgentClass::PoorNaive,
            price: Eth::from_milli(70),
            instant: false,
        }]);
        assert_eq!(
            csv,
            "block,listing_id,kitty_id,kind,seller,buyer,buyer_class,price,instant\n\
             12,3,9,siring,1,2,poor_naive,0.07,false\n"
        );
    }
}
