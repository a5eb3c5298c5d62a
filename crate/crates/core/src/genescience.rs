//! Gene determination: swap phase, mutation and inheritance, all driven by a
//! sequential bitstream taken from a 256-bit digest.
//!
//! Bit `k` of the stream is bit `k` of the digest read as a big-endian
//! unsigned integer (bit 0 least significant). Multi-bit reads are
//! little-endian: bit `k` is the least-significant bit of the result. Once the
//! 256 seed bits run out, the stream continues with `SHA-256(previous digest)`.

use crate::digest::{sha256, Digest};
use crate::genome::{GeneArray, CELLS, GROUPS, GROUP_SIZE};

/// Order in which adjacent pairs `(j, j+1)` of a group are considered for swapping.
pub const SWAP_SCHEDULE: [usize; 3] = [2, 1, 0];

/// Bits consumed by one parent's swap phase.
pub const SWAP_PHASE_BITS: u64 = (GROUPS * SWAP_SCHEDULE.len() * 2) as u64;

/// Smallest parent cell from which a mutation needs `000` rather than `00x`.
pub const HIGH_MUTATION_THRESHOLD: u8 = 22;

/// A source of sequential bits. `peek` inspects without consuming.
pub trait BitSource {
    /// Bits `[k, k+n)` as an integer with bit `k` least significant. `1 <= n <= 8`.
    fn peek(&mut self, n: u32) -> u32;
    fn advance(&mut self, n: u32);
    fn position(&self) -> u64;

    fn read(&mut self, n: u32) -> u32 {
        let v = self.peek(n);
        self.advance(n);
        v
    }
}

/// Digest-backed bitstream with a forward-only cursor.
#[derive(Clone, Debug)]
pub struct BitStream {
    seed: Digest,
    extension_digests: Vec<Digest>,
    limbs: Vec<u64>,
    cursor: u64,
}

impl BitStream {
    pub fn new(seed: Digest) -> Self {
        BitStream { seed, extension_digests: Vec::new(), limbs: seed.limbs().to_vec(), cursor: 0 }
    }

    pub fn seed(&self) -> Digest {
        self.seed
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Digests appended so far: `SHA-256(seed)`, `SHA-256(SHA-256(seed))`, ...
    pub fn extension_digests(&self) -> &[Digest] {
        &self.extension_digests
    }

    fn ensure_limb(&mut self, limb: usize) {
        while limb >= self.limbs.len() {
            let prev = self.extension_digests.last().copied().unwrap_or(self.seed);
            let next = sha256(prev.as_bytes());
            self.limbs.extend_from_slice(&next.limbs());
            self.extension_digests.push(next);
        }
    }

    pub fn read_bits(&mut self, n: u32) -> u32 {
        self.read(n)
    }
}

impl BitSource for BitStream {
    fn peek(&mut self, n: u32) -> u32 {
        assert!((1..=8).contains(&n), "read width {n} outside 1..=8");
        let limb = (self.cursor / 64) as usize;
        let offset = (self.cursor % 64) as u32;
        self.ensure_limb(limb);
        let mut value = self.limbs[limb] >> offset;
        if offset + n > 64 {
            self.ensure_limb(limb + 1);
            value |= self.limbs[limb + 1] << (64 - offset);
        }
        (value & ((1u64 << n) - 1)) as u32
    }

    fn advance(&mut self, n: u32) {
        self.cursor += n as u64;
    }

    fn position(&self) -> u64 {
        self.cursor
    }
}

/// Runs the swap phase over all twelve groups of one parent, consuming 72 bits.
pub fn swap_phase(parent: &GeneArray, stream: &mut impl BitSource) -> GeneArray {
    let mut out = *parent;
    for group in 0..GROUPS {
        for j in SWAP_SCHEDULE {
            if stream.read(2) == 0 {
                let a = group * GROUP_SIZE + j;
                out.swap_cells(a, a + 1);
            }
        }
    }
    out
}

/// Applies the swaps selected by `pattern` (indexed like [`SWAP_SCHEDULE`]) to one group.
pub fn apply_swap_pattern(mut group: [u8; GROUP_SIZE], pattern: [bool; 3]) -> [u8; GROUP_SIZE] {
    for (j, swap) in SWAP_SCHEDULE.into_iter().zip(pattern) {
        if swap {
            group.swap(j, j + 1);
        }
    }
    group
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MutationContext {
    pub matron_cell: u8,
    pub sire_cell: u8,
    pub cell_index: usize,
}

impl MutationContext {
    pub fn new(matron_cell: u8, sire_cell: u8, cell_index: usize) -> Self {
        MutationContext { matron_cell, sire_cell, cell_index }
    }

    pub fn small_t(&self) -> u8 {
        self.matron_cell.min(self.sire_cell)
    }

    /// Group head, parents one apart, smaller one even.
    pub fn is_eligible(&self) -> bool {
        self.cell_index.is_multiple_of(GROUP_SIZE)
            && self.matron_cell.abs_diff(self.sire_cell) == 1
            && self.small_t().is_multiple_of(2)
    }

    /// Largest 3-bit value that lets an eligible cell mutate.
    pub fn max_passing_bits(&self) -> u32 {
        if self.small_t() < HIGH_MUTATION_THRESHOLD {
            1
        } else {
            0
        }
    }

    pub fn mutant_value(&self) -> u8 {
        self.small_t() / 2 + 16
    }
}

/// Attempts a mutation. The three test bits are consumed only when it fires.
pub fn mutation_result(ctx: MutationContext, stream: &mut impl BitSource) -> Option<u8> {
    if !ctx.is_eligible() {
        return None;
    }
    if stream.peek(3) <= ctx.max_passing_bits() {
        stream.advance(3);
        Some(ctx.mutant_value())
    } else {
        None
    }
}

/// Decides one child cell from already-swapped parent cells. Returns the value
/// and whether it came from a mutation.
pub fn inherit_cell(
    cell_index: usize,
    matron_cell: u8,
    sire_cell: u8,
    stream: &mut impl BitSource,
) -> (u8, bool) {
    let ctx = MutationContext::new(matron_cell, sire_cell, cell_index);
    if let Some(v) = mutation_result(ctx, stream) {
        return (v, true);
    }
    if stream.read(1) == 1 {
        (matron_cell, false)
    } else {
        (sire_cell, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixTrace {
    pub child: GeneArray,
    pub mutated: [bool; CELLS],
    pub bits_consumed: u64,
}

impl MixTrace {
    pub fn mutation_count(&self) -> usize {
        self.mutated.iter().filter(|&&m| m).count()
    }
}

/// Mixes two parents against any bit source.
pub fn mix_genes_from(matron: &GeneArray, sire: &GeneArray, stream: &mut impl BitSource) -> MixTrace {
    let start = stream.position();
    let matron = swap_phase(matron, stream);
    let sire = swap_phase(sire, stream);
    let mut cells = [0u8; CELLS];
    let mut mutated = [false; CELLS];
    for i in 0..CELLS {
        let (v, m) = inherit_cell(i, matron.get(i), sire.get(i), stream);
        cells[i] = v;
        mutated[i] = m;
    }
    MixTrace {
        child: GeneArray::new(cells).expect("mixed cells stay in range"),
        mutated,
        bits_consumed: stream.position() - start,
    }
}

pub fn mix_genes_traced(matron: &GeneArray, sire: &GeneArray, seed: Digest) -> MixTrace {
    mix_genes_from(matron, sire, &mut BitStream::new(seed))
}

/// The child gene of `matron` and `sire` for the given seed digest.
pub fn mix_genes(matron: &GeneArray, sire: &GeneArray, seed: Digest) -> GeneArray {
    mix_genes_traced(matron, sire, seed).child
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Stream that returns scripted bits, then zeros.
    struct Scripted {
        bits: Vec<u8>,
        pos: usize,
    }

    impl Scripted {
        fn new(bits: &[u8]) -> Self {
            Scripted { bits: bits.to_vec(), pos: 0 }
        }
    }

    impl BitSource for Scripted {
        fn peek(&mut self, n: u32) -> u32 {
            (0..n as usize)
                .map(|t| (*self.bits.get(self.pos + t).unwrap_or(&0) as u32) << t)
                .sum()
        }
        fn advance(&mut self, n: u32) {
            self.pos += n as usize;
        }
        fn position(&self) -> u64 {
            self.pos as u64
        }
    }

    fn digest_from_u8(low: u8) -> Digest {
        let mut b = [0u8; 32];
        b[31] = low;
        Digest(b)
    }

    #[test]
    fn all_ones_reads_seven() {
        assert_eq!(BitStream::new(Digest::ONES).read_bits(3), 7);
    }

    #[test]
    fn first_read_is_low_bits() {
        let mut s = BitStream::new(digest_from_u8(0b1110));
        assert_eq!(s.read_bits(2), 0b10);
        assert_eq!(s.read_bits(2), 0b11);
        assert_eq!(s.cursor(), 4);
    }

    #[test]
    fn reads_cross_into_extension_digest() {
        // Top seed bit set; the next bit comes from SHA-256(seed), whose bit 0 is
        // the low bit of its last byte.
        let mut bytes = [0u8; 32];
        bytes[0] = 0x80;
        let seed = Digest(bytes);
        let ext = sha256(&bytes);
        let mut s = BitStream::new(seed);
        s.advance(255);
        let expected = 1 + 2 * (ext.0[31] & 1) as u32;
        assert_eq!(s.read_bits(2), expected);
        assert_eq!(s.extension_digests(), &[ext]);
    }

    #[test]
    fn reads_cross_limb_boundaries() {
        let seed = sha256(b"limbs");
        let mut s = BitStream::new(seed);
        s.advance(60);
        let v = s.read_bits(8);
        let expected: u32 = (0..8).map(|t| (seed.bit(60 + t) as u32) << t).sum();
        assert_eq!(v, expected);
    }

    #[test]
    fn extension_chain_is_iterated_hash() {
        let seed = sha256(b"chain");
        let mut s = BitStream::new(seed);
        s.advance(256 * 2 + 3);
        s.read_bits(1);
        let e1 = sha256(seed.as_bytes());
        let e2 = sha256(e1.as_bytes());
        assert_eq!(s.extension_digests(), &[e1, e2]);
    }

    #[test]
    fn swap_phase_all_ones_is_identity() {
        let g: GeneArray = GeneArray::new(std::array::from_fn(|i| (i % 32) as u8)).unwrap();
        let mut s = BitStream::new(Digest::ONES);
        assert_eq!(swap_phase(&g, &mut s), g);
        assert_eq!(s.cursor(), 72);
    }

    #[test]
    fn swap_phase_all_zeros_rotates_each_group_right() {
        let g: GeneArray = GeneArray::new(std::array::from_fn(|i| (i % 32) as u8)).unwrap();
        let out = swap_phase(&g, &mut BitStream::new(Digest::ZERO));
        for grp in 0..GROUPS {
            let [a0, a1, a2, a3] = g.group(grp);
            assert_eq!(out.group(grp), [a3, a0, a1, a2]);
        }
    }

    #[test]
    fn group_zero_uses_lowest_bits() {
        // Bits 0..2 = 00 swap cells 2 and 3 of group 0 only.
        let g: GeneArray = GeneArray::new(std::array::from_fn(|i| (i % 32) as u8)).unwrap();
        let mut bits = vec![0, 0];
        bits.extend(std::iter::repeat_n(1, 70));
        let out = swap_phase(&g, &mut Scripted::new(&bits));
        assert_eq!(out.group(0), [0, 1, 3, 2]);
        for grp in 1..GROUPS {
            assert_eq!(out.group(grp), g.group(grp));
        }
    }

    #[test]
    fn swap_patterns_give_eight_distinct_orders() {
        let mut seen = std::collections::BTreeSet::new();
        for p in 0..8u8 {
            let pattern = [p & 1 == 1, p & 2 == 2, p & 4 == 4];
            seen.insert(apply_swap_pattern([0, 1, 2, 3], pattern));
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn mutation_examples() {
        let run = |m, s, i, bits: &[u8]| {
            let mut src = Scripted::new(bits);
            let out = mutation_result(MutationContext::new(m, s, i), &mut src);
            (out, src.pos)
        };
        assert_eq!(run(6, 7, 0, &[1, 0, 0]), (Some(19), 3));
        assert_eq!(run(0, 1, 0, &[0, 0, 0]), (Some(16), 3));
        assert_eq!(run(5, 6, 0, &[0, 0, 0]), (None, 0));
        assert_eq!(run(22, 23, 0, &[1, 0, 0]), (None, 0));
        assert_eq!(run(22, 23, 0, &[0, 0, 0]), (Some(27), 3));
        assert_eq!(run(6, 7, 1, &[0, 0, 0]), (None, 0));
        assert_eq!(run(7, 6, 4, &[0, 1, 0]), (None, 0));
    }

    #[test]
    fn mix_all_ones_returns_matron() {
        let m: GeneArray = GeneArray::new(std::array::from_fn(|i| (i * 7 % 32) as u8)).unwrap();
        let s: GeneArray = GeneArray::new(std::array::from_fn(|i| (i * 5 % 32) as u8)).unwrap();
        let t = mix_genes_traced(&m, &s, Digest::ONES);
        assert_eq!(t.child, m);
        assert_eq!(t.bits_consumed, 144 + 48);
    }

    #[test]
    fn mix_all_zeros_constant_parents() {
        let child = mix_genes(&GeneArray::splat(6), &GeneArray::splat(7), Digest::ZERO);
        for i in 0..CELLS {
            assert_eq!(child.get(i), if i % 4 == 0 { 19 } else { 7 }, "cell {i}");
        }
    }

    #[test]
    fn identical_ineligible_parents_reproduce() {
        let g = GeneArray::splat(5);
        for n in 0..32u8 {
            assert_eq!(mix_genes(&g, &g, sha256(&[n])), g);
        }
    }

    fn arb_gene() -> impl Strategy<Value = GeneArray> {
        prop::collection::vec(0u8..32, CELLS)
            .prop_map(|v| GeneArray::new(v.try_into().unwrap()).unwrap())
    }

    fn arb_digest() -> impl Strategy<Value = Digest> {
        prop::array::uniform32(any::<u8>()).prop_map(Digest)
    }

    proptest! {
        #[test]
        fn deterministic_and_bit_accounted(m in arb_gene(), s in arb_gene(), d in arb_digest()) {
            let a = mix_genes_traced(&m, &s, d);
            let b = mix_genes_traced(&m, &s, d);
            prop_assert_eq!(a, b);
            let muts = a.mutation_count() as u64;
            prop_assert_eq!(a.bits_consumed, 144 + (48 - muts) + 3 * muts);
        }

        #[test]
        fn cells_come_from_own_group(m in arb_gene(), s in arb_gene(), d in arb_digest()) {
            let t = mix_genes_traced(&m, &s, d);
            for i in 0..CELLS {
                let v = t.child.get(i);
                if t.mutated[i] {
                    prop_assert!((16..=31).contains(&v));
                    prop_assert_eq!(i % 4, 0);
                } else {
                    let g = i / 4;
                    prop_assert!(m.group(g).contains(&v) || s.group(g).contains(&v));
                }
            }
        }

        #[test]
        fn swap_phase_permutes_within_groups(g in arb_gene(), d in arb_digest()) {
            let out = swap_phase(&g, &mut BitStream::new(d));
            for grp in 0..GROUPS {
                let reachable: Vec<_> = (0..8u8)
                    .map(|p| apply_swap_pattern(g.group(grp), [p & 1 == 1, p & 2 == 2, p & 4 == 4]))
                    .collect();
                prop_assert!(reachable.contains(&out.group(grp)));
            }
        }
    }
}
