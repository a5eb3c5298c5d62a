//! Entropy for gene determination.
//!
//! `BlockHash` seeds a birth with the target block's digest, which anyone who
//! knows the chain can evaluate ahead of time. `JointRandom` replaces it with
//! a commit-reveal round: every participant commits to
//! `SHA-256(value ‖ nonce)`, then reveals, and the birth is seeded with
//! `SHA-256(Σ values mod 2^256)`. One honest uniform contribution makes the
//! sum uniform whatever the others choose.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::digest::{sha256, Digest};

pub type ParticipantId = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RandomnessError {
    #[error("no commitments to combine")]
    NoParticipants,
    #[error("participant {0} has not revealed")]
    Incomplete(ParticipantId),
    #[error("reveal does not match commitment for participant(s) {0:?}")]
    Cheater(Vec<ParticipantId>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EntropyKind {
    #[default]
    #[serde(rename = "block_hash")]
    BlockHash,
    #[serde(rename = "joint", alias = "joint_random")]
    JointRandom,
}

/// Where the seed digest of a breeding comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntropySource {
    BlockHash,
    JointRandom { participants: usize },
}

impl EntropySource {
    pub fn kind(&self) -> EntropyKind {
        match self {
            EntropySource::BlockHash => EntropyKind::BlockHash,
            EntropySource::JointRandom { .. } => EntropyKind::JointRandom,
        }
    }
}

/// A 256-bit contribution, big-endian.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word256(pub [u8; 32]);

impl Word256 {
    pub const ZERO: Word256 = Word256([0; 32]);
    pub const MAX: Word256 = Word256([0xff; 32]);

    pub fn from_u64(v: u64) -> Self {
        let mut b = [0u8; 32];
        b[24..].copy_from_slice(&v.to_be_bytes());
        Word256(b)
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        let mut b = [0u8; 32];
        rng.fill(&mut b);
        Word256(b)
    }

    pub fn wrapping_add(self, other: Word256) -> Word256 {
        let mut out = [0u8; 32];
        let mut carry = 0u16;
        for i in (0..32).rev() {
            let s = self.0[i] as u16 + other.0[i] as u16 + carry;
            out[i] = s as u8;
            carry = s >> 8;
        }
        Word256(out)
    }
}

impl fmt::Debug for Word256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word256({})", hex::encode(self.0))
    }
}

/// `SHA-256(value as 32 bytes ‖ nonce as 16 bytes)`, both big-endian.
pub fn commitment_digest(value: Word256, nonce: u128) -> Digest {
    let mut buf = [0u8; 48];
    buf[..32].copy_from_slice(&value.0);
    buf[32..].copy_from_slice(&nonce.to_be_bytes());
    sha256(&buf)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reveal {
    pub value: Word256,
    pub nonce: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub participant: ParticipantId,
    pub digest: Digest,
    pub revealed: Option<Reveal>,
}

impl Commitment {
    pub fn reveal(&mut self, value: Word256, nonce: u128) {
        self.revealed = Some(Reveal { value, nonce });
    }

    pub fn is_valid(&self) -> bool {
        self.revealed
            .map(|r| commitment_digest(r.value, r.nonce) == self.digest)
            .unwrap_or(false)
    }
}

/// Binding phase: the commitment carries only the digest.
pub fn commit(participant: ParticipantId, value: Word256, nonce: u128) -> Commitment {
    Commitment { participant, digest: commitment_digest(value, nonce), revealed: None }
}

/// Verifies every reveal and hashes the wrapped sum of the values.
pub fn reveal_and_combine(commitments: &[Commitment]) -> Result<Digest, RandomnessError> {
    if commitments.is_empty() {
        return Err(RandomnessError::NoParticipants);
    }
    if let Some(c) = commitments.iter().find(|c| c.revealed.is_none()) {
        return Err(RandomnessError::Incomplete(c.participant));
    }
    let cheaters: Vec<_> =
        commitments.iter().filter(|c| !c.is_valid()).map(|c| c.participant).collect();
    if !cheaters.is_empty() {
        return Err(RandomnessError::Cheater(cheaters));
    }
    let sum = commitments
        .iter()
        .map(|c| c.revealed.expect("checked above").value)
        .fold(Word256::ZERO, Word256::wrapping_add);
    Ok(sha256(&sum.0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub participant: ParticipantId,
    pub commit_hex: String,
    pub value_hex: String,
    pub nonce_hex: String,
}

/// One completed commit-reveal round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointRound {
    pub commitments: Vec<Commitment>,
    pub digest: Digest,
}

impl JointRound {
    /// Runs a full round over `(value, nonce)` contributions, participant ids
    /// assigned in order.
    pub fn run(contributions: &[(Word256, u128)]) -> Result<Self, RandomnessError> {
        let mut commitments: Vec<Commitment> = contributions
            .iter()
            .enumerate()
            .map(|(i, &(v, n))| commit(i as ParticipantId, v, n))
            .collect();
        for (c, &(v, n)) in commitments.iter_mut().zip(contributions) {
            c.reveal(v, n);
        }
        let digest = reveal_and_combine(&commitments)?;
        Ok(JointRound { commitments, digest })
    }

    /// A round where every participant draws fresh value and nonce from `rng`.
    pub fn random(participants: usize, rng: &mut impl Rng) -> Self {
        let contributions: Vec<_> =
            (0..participants.max(1)).map(|_| (Word256::random(rng), rng.gen::<u128>())).collect();
        Self::run(&contributions).expect("honest round always combines")
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.commitments
            .iter()
            .map(|c| {
                let r = c.revealed.expect("completed round");
                TranscriptEntry {
                    participant: c.participant,
                    commit_hex: c.digest.to_hex(),
                    value_hex: hex::encode(r.value.0),
                    nonce_hex: format!("{:032x}", r.nonce),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn commitment_vectors() {
        assert_eq!(commitment_digest(Word256::ZERO, 0), sha256(&[0u8; 48]));
        let a = commit(0, Word256::from_u64(5), 1);
        assert_eq!(a, commit(0, Word256::from_u64(5), 1));
        assert_ne!(a.digest, commit(0, Word256::from_u64(5), 2).digest);
    }

    #[test]
    fn single_participant_hashes_its_value() {
        let v = Word256::from_u64(0xdead_beef);
        let round = JointRound::run(&[(v, 42)]).unwrap();
        assert_eq!(round.digest, sha256(&v.0));
    }

    #[test]
    fn sum_wraps_modulo_two_to_the_256() {
        let round = JointRound::run(&[(Word256::MAX, 1), (Word256::from_u64(1), 2)]).unwrap();
        assert_eq!(round.digest, sha256(&[0u8; 32]));
        assert_eq!(Word256::from_u64(u64::MAX).wrapping_add(Word256::from_u64(1)).0[23], 1);
    }

    #[test]
    fn tampering_is_attributed() {
        let mut cs: Vec<_> = (0..4).map(|i| commit(i, Word256::from_u64(i as u64), 7)).collect();
        for (i, c) in cs.iter_mut().enumerate() {
            c.reveal(Word256::from_u64(i as u64), 7);
        }
        cs[2].reveal(Word256::from_u64(99), 7);
        assert_eq!(reveal_and_combine(&cs), Err(RandomnessError::Cheater(vec![2])));
    }

    #[test]
    fn missing_reveal_aborts() {
        let mut cs = vec![commit(0, Word256::ZERO, 0), commit(1, Word256::ZERO, 1)];
        cs[0].reveal(Word256::ZERO, 0);
        assert_eq!(reveal_and_combine(&cs), Err(RandomnessError::Incomplete(1)));
        assert_eq!(reveal_and_combine(&[]), Err(RandomnessError::NoParticipants));
    }

    #[test]
    fn transcript_layout() {
        let round = JointRound::random(3, &mut ChaCha8Rng::seed_from_u64(1));
        let t = round.transcript();
        assert_eq!(t.len(), 3);
        assert_eq!(t[1].participant, 1);
        assert_eq!(t[0].commit_hex.len(), 64);
        assert_eq!(t[0].value_hex.len(), 64);
        assert_eq!(t[0].nonce_hex.len(), 32);
        let json = serde_json::to_value(&t).unwrap();
        assert!(json[0].get("commit_hex").is_some());
    }

    #[test]
    fn entropy_kind_names() {
        assert_eq!(serde_json::to_string(&EntropyKind::JointRandom).unwrap(), "\"joint\"");
        let k: EntropyKind = serde_json::from_str("\"block_hash\"").unwrap();
        assert_eq!(k, EntropyKind::BlockHash);
        let k: EntropyKind = serde_json::from_str("\"joint_random\"").unwrap();
        assert_eq!(k, EntropyKind::JointRandom);
    }
}
