//! Simulated block clock, kitty registry and the breeding lifecycle.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::{sha256, Digest};
use crate::eth::Eth;
use crate::genescience::mix_genes;
use crate::genome::GeneArray;

pub type KittyId = u64;
pub type AgentId = u32;

pub const BREEDING_FEE: Eth = Eth::from_milli(8);
pub const COOLDOWN_KINDS: usize = 14;
pub const MAX_COOLDOWN_INDEX: u8 = (COOLDOWN_KINDS - 1) as u8;
pub const DEFAULT_SECONDS_PER_BLOCK: u64 = 15;
pub const COOLDOWN_TABLE_ENV: &str = "KITTYLAB_COOLDOWN_TABLE";

const MINUTE: u64 = 60;
const HOUR: u64 = 60 * MINUTE;
const DAY: u64 = 24 * HOUR;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("block {requested} is beyond the current height {height}")]
    FutureBlock { requested: u64, height: u64 },
    #[error("cooldown index {0} is outside 0..=13")]
    CooldownIndex(u8),
    #[error("invalid cooldown table: {0}")]
    InvalidCooldownTable(String),
    #[error("unknown kitty {0}")]
    UnknownKitty(KittyId),
    #[error("insufficient funds: need {needed} Eth, have {available} Eth")]
    InsufficientFunds { needed: Eth, available: Eth },
    #[error("kitty {kitty} is cooling down until block {until}")]
    CoolingDown { kitty: KittyId, until: u64 },
    #[error("a kitty cannot breed with itself")]
    SelfBreeding,
    #[error("kitty {0} is already pregnant")]
    AlreadyPregnant(KittyId),
    #[error("kitty {0} is not pregnant")]
    NotPregnant(KittyId),
    #[error("birth requested at block {height} before target block {target}")]
    BirthTooEarly { target: u64, height: u64 },
}

/// Breeding delay in seconds for each of the 14 cooldown kinds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct CooldownTable([u64; COOLDOWN_KINDS]);

impl Default for CooldownTable {
    fn default() -> Self {
        CooldownTable([
            MINUTE,
            2 * MINUTE,
            5 * MINUTE,
            10 * MINUTE,
            30 * MINUTE,
            HOUR,
            2 * HOUR,
            4 * HOUR,
            8 * HOUR,
            16 * HOUR,
            DAY,
            2 * DAY,
            7 * DAY,
            14 * DAY,
        ])
    }
}

impl TryFrom<Vec<u64>> for CooldownTable {
    type Error = ChainError;
    fn try_from(v: Vec<u64>) -> Result<Self, Self::Error> {
        let table: [u64; COOLDOWN_KINDS] = v.try_into().map_err(|v: Vec<u64>| {
            ChainError::InvalidCooldownTable(format!("expected 14 entries, got {}", v.len()))
        })?;
        CooldownTable::new(table)
    }
}

impl From<CooldownTable> for Vec<u64> {
    fn from(t: CooldownTable) -> Self {
        t.0.to_vec()
    }
}

impl CooldownTable {
    pub fn new(table: [u64; COOLDOWN_KINDS]) -> Result<Self, ChainError> {
        if table[0] == 0 {
            return Err(ChainError::InvalidCooldownTable("durations must be positive".into()));
        }
        if table.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ChainError::InvalidCooldownTable("durations must strictly increase".into()));
        }
        Ok(CooldownTable(table))
    }

    /// Reads a JSON array of 14 durations in seconds.
    pub fn load(path: &Path) -> Result<Self, ChainError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChainError::InvalidCooldownTable(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ChainError::InvalidCooldownTable(e.to_string()))
    }

    /// The table named by `KITTYLAB_COOLDOWN_TABLE`, or the default when unset.
    pub fn from_env() -> Result<Self, ChainError> {
        match std::env::var_os(COOLDOWN_TABLE_ENV) {
            Some(path) => Self::load(Path::new(&path)),
            None => Ok(Self::default()),
        }
    }

    pub fn duration(&self, index: u8) -> Result<u64, ChainError> {
        self.0.get(index as usize).copied().ok_or(ChainError::CooldownIndex(index))
    }

    pub fn entries(&self) -> &[u64; COOLDOWN_KINDS] {
        &self.0
    }
}

/// Cooldown duration under the default table.
pub fn cooldown_duration(index: u8) -> Result<u64, ChainError> {
    CooldownTable::default().duration(index)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seconds_per_block: u64,
    pub cooldown_table: CooldownTable,
    /// Newborn cooldown index is `generation / divisor`, capped at 13.
    pub generation_cooldown_divisor: u32,
    /// Bump the sire's cooldown as well as the matron's.
    pub sire_cooldown: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            seconds_per_block: DEFAULT_SECONDS_PER_BLOCK,
            cooldown_table: CooldownTable::default(),
            generation_cooldown_divisor: 2,
            sire_cooldown: false,
        }
    }
}

impl ChainConfig {
    pub fn initial_cooldown_index(&self, generation: u32) -> u8 {
        let idx = generation / self.generation_cooldown_divisor.max(1);
        idx.min(MAX_COOLDOWN_INDEX as u32) as u8
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kitty {
    pub id: KittyId,
    pub gene: GeneArray,
    pub generation: u32,
    pub cooldown_index: u8,
    pub cooldown_end_block: u64,
    pub owner: AgentId,
    pub birth_block: u64,
    pub matron_id: Option<KittyId>,
    pub sire_id: Option<KittyId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pregnancy {
    pub matron_id: KittyId,
    pub sire_id: KittyId,
    pub breed_block: u64,
    pub target_block: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub height: u64,
    pub kitties: Vec<Kitty>,
    pub pregnancies: Vec<Pregnancy>,
}

/// Single-writer chain state. Kitty ids start at 1 and follow birth order.
#[derive(Clone, Debug)]
pub struct SimChain {
    chain_seed: Digest,
    height: u64,
    config: ChainConfig,
    kitties: Vec<Kitty>,
    pregnancies: BTreeMap<KittyId, Pregnancy>,
    fees_collected: Eth,
}

impl SimChain {
    pub fn new(chain_seed: Digest, config: ChainConfig) -> Self {
        assert!(config.seconds_per_block > 0, "seconds_per_block must be positive");
        SimChain {
            chain_seed,
            height: 0,
            config,
            kitties: Vec::new(),
            pregnancies: BTreeMap::new(),
            fees_collected: Eth::ZERO,
        }
    }

    pub fn chain_seed(&self) -> Digest {
        self.chain_seed
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn fees_collected(&self) -> Eth {
        self.fees_collected
    }

    pub fn advance(&mut self, blocks: u64) {
        self.height += blocks;
    }

    pub fn advance_to(&mut self, height: u64) {
        self.height = self.height.max(height);
    }

    /// Digest of a mined block.
    pub fn block_digest(&self, n: u64) -> Result<Digest, ChainError> {
        if n > self.height {
            return Err(ChainError::FutureBlock { requested: n, height: self.height });
        }
        Ok(self.scheduled_digest(n))
    }

    /// The digest block `n` will have. The simulated hash schedule is public,
    /// which is exactly what lets an attacker evaluate a target block early.
    pub fn scheduled_digest(&self, n: u64) -> Digest {
        let mut buf = [0u8; 40];
        buf[..32].copy_from_slice(self.chain_seed.as_bytes());
        buf[32..].copy_from_slice(&n.to_be_bytes());
        sha256(&buf)
    }

    pub fn blocks_for(&self, seconds: u64) -> u64 {
        seconds.div_ceil(self.config.seconds_per_block)
    }

    /// Target block a breeding started now would get, given the matron's cooldown.
    pub fn target_block_for(&self, matron: &Kitty) -> Result<u64, ChainError> {
        let secs = self.config.cooldown_table.duration(matron.cooldown_index)?;
        Ok(self.height + self.blocks_for(secs))
    }

    pub fn mint_gen0(&mut self, gene: GeneArray, owner: AgentId) -> KittyId {
        self.mint(gene, 0, owner, None, None)
    }

    fn mint(
        &mut self,
        gene: GeneArray,
        generation: u32,
        owner: AgentId,
        matron_id: Option<KittyId>,
        sire_id: Option<KittyId>,
    ) -> KittyId {
        let id = self.kitties.len() as KittyId + 1;
        self.kitties.push(Kitty {
            id,
            gene,
            generation,
            cooldown_index: self.config.initial_cooldown_index(generation),
            cooldown_end_block: self.height,
            owner,
            birth_block: self.height,
            matron_id,
            sire_id,
        });
        id
    }

    pub fn kitty(&self, id: KittyId) -> Result<&Kitty, ChainError> {
        id.checked_sub(1)
            .and_then(|i| self.kitties.get(i as usize))
            .ok_or(ChainError::UnknownKitty(id))
    }

    fn kitty_mut(&mut self, id: KittyId) -> Result<&mut Kitty, ChainError> {
        id.checked_sub(1)
            .and_then(|i| self.kitties.get_mut(i as usize))
            .ok_or(ChainError::UnknownKitty(id))
    }

    pub fn kitties(&self) -> &[Kitty] {
        &self.kitties
    }

    pub fn set_owner(&mut self, id: KittyId, owner: AgentId) -> Result<(), ChainError> {
        self.kitty_mut(id)?.owner = owner;
        Ok(())
    }

    pub fn pregnancy(&self, matron_id: KittyId) -> Option<&Pregnancy> {
        self.pregnancies.get(&matron_id)
    }

    pub fn pregnancies(&self) -> impl Iterator<Item = &Pregnancy> {
        self.pregnancies.values()
    }

    pub fn is_pregnant(&self, id: KittyId) -> bool {
        self.pregnancies.contains_key(&id)
    }

    /// Whether `id` could be bred as a matron right now.
    pub fn is_ready(&self, id: KittyId) -> bool {
        self.kitty(id)
            .map(|k| k.cooldown_end_block <= self.height && !self.is_pregnant(id))
            .unwrap_or(false)
    }

    /// Starts a pregnancy, charging the breeding fee to `balance`.
    pub fn breed(
        &mut self,
        matron_id: KittyId,
        sire_id: KittyId,
        balance: &mut Eth,
    ) -> Result<Pregnancy, ChainError> {
        if matron_id == sire_id {
            return Err(ChainError::SelfBreeding);
        }
        let matron = self.kitty(matron_id)?.clone();
        let sire = self.kitty(sire_id)?.clone();
        if self.is_pregnant(matron_id) {
            return Err(ChainError::AlreadyPregnant(matron_id));
        }
        if matron.cooldown_end_block > self.height {
            return Err(ChainError::CoolingDown { kitty: matron_id, until: matron.cooldown_end_block });
        }
        if self.config.sire_cooldown && sire.cooldown_end_block > self.height {
            return Err(ChainError::CoolingDown { kitty: sire_id, until: sire.cooldown_end_block });
        }
        if *balance < BREEDING_FEE {
            return Err(ChainError::InsufficientFunds { needed: BREEDING_FEE, available: *balance });
        }

        let target_block = self.target_block_for(&matron)?;
        *balance -= BREEDING_FEE;
        self.fees_collected += BREEDING_FEE;

        let bump = |k: &mut Kitty, end: u64| {
            k.cooldown_end_block = end;
            k.cooldown_index = (k.cooldown_index + 1).min(MAX_COOLDOWN_INDEX);
        };
        bump(self.kitty_mut(matron_id)?, target_block);
        if self.config.sire_cooldown {
            let secs = self.config.cooldown_table.duration(sire.cooldown_index)?;
            let end = self.height + self.blocks_for(secs);
            bump(self.kitty_mut(sire_id)?, end);
        }

        let p = Pregnancy { matron_id, sire_id, breed_block: self.height, target_block };
        self.pregnancies.insert(matron_id, p);
        Ok(p)
    }

    /// Delivers using the target block's digest.
    pub fn give_birth(&mut self, matron_id: KittyId) -> Result<Kitty, ChainError> {
        let p = *self.pregnancies.get(&matron_id).ok_or(ChainError::NotPregnant(matron_id))?;
        self.check_due(&p)?;
        let digest = self.block_digest(p.target_block)?;
        self.deliver(p, digest)
    }

    /// Delivers using an externally supplied seed (e.g. a joint random digest).
    pub fn give_birth_with(&mut self, matron_id: KittyId, seed: Digest) -> Result<Kitty, ChainError> {
        let p = *self.pregnancies.get(&matron_id).ok_or(ChainError::NotPregnant(matron_id))?;
        self.check_due(&p)?;
        self.deliver(p, seed)
    }

    fn check_due(&self, p: &Pregnancy) -> Result<(), ChainError> {
        if self.height < p.target_block {
            return Err(ChainError::BirthTooEarly { target: p.target_block, height: self.height });
        }
        Ok(())
    }

    fn deliver(&mut self, p: Pregnancy, seed: Digest) -> Result<Kitty, ChainError> {
        let matron = self.kitty(p.matron_id)?.clone();
        let sire = self.kitty(p.sire_id)?.clone();
        let gene = mix_genes(&matron.gene, &sire.gene, seed);
        let generation = matron.generation.max(sire.generation) + 1;
        self.pregnancies.remove(&p.matron_id);
        let id = self.mint(gene, generation, matron.owner, Some(p.matron_id), Some(p.sire_id));
        Ok(self.kitty(id)?.clone())
    }

    /// Matron ids whose pregnancies are due at the current height, ascending.
    pub fn due_births(&self) -> Vec<KittyId> {
        self.pregnancies
            .values()
            .filter(|p| p.target_block <= self.height)
            .map(|p| p.matron_id)
            .collect()
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            height: self.height,
            kitties: self.kitties.clone(),
            pregnancies: self.pregnancies.values().copied().collect(),
        }
    }
}
