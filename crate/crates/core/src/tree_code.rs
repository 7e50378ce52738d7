//! Outer tree code.
//!
//! A `W`-bit message is cut into `S` sections of `W_1, ..., W_S` data bits
//! (`W_1 = J`). Section `s` becomes a `J`-bit chunk: its `W_s` data bits
//! followed by `V_s = J - W_s` parity bits, each parity bit a pseudo-random
//! GF(2) combination of the data bits of all earlier sections. Chunk `s` is
//! sent in slot `s` as codeword number `chunk`.
//!
//! Bit order is most-significant-first everywhere: message bit 0 is the first
//! bit, a chunk index reads `data bits | parity bits` from its top bit down,
//! and parity row 0 is the top parity bit.
//!
//! Parity matrices are drawn from `SimRng::seed_from_u64(parity_seed)`: for
//! each section `s >= 2`, row by row, column by column, one bit per draw
//! (`next_u32() & 1`).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Default guard on surviving decoder paths per stage.
pub const DEFAULT_MAX_PATHS: usize = 100_000;

const MAX_CHUNK_BITS: usize = 30;

/// Parameters of the tree code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeCodeSpec {
    pub w: usize,
    pub s: usize,
    pub j: usize,
    pub profile: Vec<usize>,
    pub parity_seed: u64,
}

impl TreeCodeSpec {
    pub fn new(w: usize, s: usize, j: usize, profile: Vec<usize>, parity_seed: u64) -> Result<Self> {
        let spec = Self {
            w,
            s,
            j,
            profile,
            parity_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `W = 96`, `S = 32`, `J = 12` with profile `{12, 3 x 28, 0, 0, 0}`.
    pub fn reference(parity_seed: u64) -> Self {
        let mut profile = vec![12];
        profile.extend(core::iter::repeat_n(3, 28));
        profile.extend([0, 0, 0]);
        Self {
            w: 96,
            s: 32,
            j: 12,
            profile,
            parity_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTreeCode(msg));
        if self.j == 0 || self.j > MAX_CHUNK_BITS {
            return bad(format!("J = {} must lie in 1..={MAX_CHUNK_BITS}", self.j));
        }
        if self.s == 0 {
            return bad("need at least one section".into());
        }
        if self.profile.len() != self.s {
            return bad(format!("profile has {} entries, S = {}", self.profile.len(), self.s));
        }
        if self.profile[0] != self.j {
            return bad(format!("W_1 = {} must equal J = {}", self.profile[0], self.j));
        }
        if let Some(pos) = self.profile.iter().position(|&ws| ws > self.j) {
            return bad(format!("W_{} = {} exceeds J", pos + 1, self.profile[pos]));
        }
        let total: usize = self.profile.iter().sum();
        if total != self.w {
            return bad(format!("profile sums to {total}, W = {}", self.w));
        }
        Ok(())
    }

    /// Parity bits `V_s` of section `s` (0-based).
    pub fn parity_bits(&self, s: usize) -> usize {
        self.j - self.profile[s]
    }

    pub fn total_parity_bits(&self) -> usize {
        (0..self.s).map(|s| self.parity_bits(s)).sum()
    }

    /// Number of data bits in sections before `s` (0-based).
    pub fn prefix_len(&self, s: usize) -> usize {
        self.profile[..s].iter().sum()
    }

    pub fn num_chunks(&self) -> usize {
        1 << self.j
    }
}

/// A bit string packed most-significant-first into 64-bit words.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Message {
    words: Vec<u64>,
    len: usize,
}

impl Message {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut m = Self::zeros(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            m.set(k, b);
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(len);
        for k in 0..len {
            m.set(k, rng.random::<bool>());
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, k: usize) -> bool {
        debug_assert!(k < self.len);
        self.words[k / 64] >> (63 - k % 64) & 1 == 1
    }

    pub fn set(&mut self, k: usize, value: bool) {
        let mask = 1u64 << (63 - k % 64);
        if value {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|k| self.bit(k)).collect()
    }

    /// Reads `n` bits starting at `start` as an unsigned integer, MSB first.
    pub fn read(&self, start: usize, n: usize) -> u32 {
        (start..start + n).fold(0, |acc, k| acc << 1 | self.bit(k) as u32)
    }

    /// Appends the low `n` bits of `value`, MSB first.
    pub fn push(&mut self, value: u32, n: usize) {
        assert!(n <= 32, "at most 32 bits per push");
        for r in (0..n).rev() {
            let k = self.len;
            self.len += 1;
            if self.words.len() * 64 < self.len {
                self.words.push(0);
            }
            self.set(k, value >> r & 1 == 1);
        }
    }

    /// Shrinks to the first `len` bits.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        for k in len..self.len {
            self.set(k, false);
        }
        self.len = len;
        self.words.truncate(len.div_ceil(64));
    }

    pub fn xor(&self, other: &Message) -> Message {
        assert_eq!(self.len, other.len, "message lengths differ");
        Message {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        }
    }

    /// Hex digits, MSB first; a trailing partial nibble is zero-padded.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        (0..self.len.div_ceil(4))
            .map(|nib| {
                let mut v = 0usize;
                for k in nib * 4..nib * 4 + 4 {
                    v = v << 1 | (k < self.len && self.bit(k)) as usize;
                }
                DIGITS[v] as char
            })
            .collect()
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != len.div_ceil(4) {
            return Err(Error::InvalidInput(format!(
                "expected {} hex digits for {len} bits, got {}",
                len.div_ceil(4),
                hex.len()
            )));
        }
        let mut m = Self::zeros(len);
        for (nib, ch) in hex.chars().enumerate() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidInput(format!("`{ch}` is not a hex digit")))?;
            for r in 0..4 {
                let k = nib * 4 + r;
                let b = v >> (3 - r) & 1 == 1;
                if k < len {
                    m.set(k, b);
                } else if b {
                    return Err(Error::InvalidInput("nonzero padding bits".into()));
                }
            }
        }
        Ok(m)
    }

    /// Parity of `popcount(self & mask)`.
    fn dot(&self, row: &[u64]) -> u32 {
        let ones: u32 = self
            .words
            .iter()
            .zip(row)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1
    }
}

impl fmt::Debug for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Message({}b:{})", self.len, self.to_hex())
    }
}

/// Dense GF(2) matrix with rows packed like [`Message`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * Self::row_words(cols)],
        }
    }

    fn row_words(cols: usize) -> usize {
        cols.div_ceil(64).max(1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r)[c / 64] >> (63 - c % 64) & 1 == 1
    }

    fn set(&mut self, r: usize, c: usize) {
        let w = Self::row_words(self.cols);
        self.data[r * w + c / 64] |= 1 << (63 - c % 64);
    }

    fn row(&self, r: usize) -> &[u64] {
        let w = Self::row_words(self.cols);
        &self.data[r * w..(r + 1) * w]
    }
}

/// Per-section parity generator matrices `G_s`, shape `V_s x prefix_len(s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityRules {
    g: Vec<BitMatrix>,
}

impl ParityRules {
    /// Generator of section `s` (0-based; section 0 is always `0 x 0`).
    pub fn matrix(&self, s: usize) -> &BitMatrix {
        &self.g[s]
    }

    pub fn sections(&self) -> usize {
        self.g.len()
    }

    /// Parity bits of section `s` for a message whose first `prefix_len(s)` bits
    /// are `prefix`; bits past the prefix are ignored.
    pub fn parity(&self, s: usize, prefix: &Message) -> u32 {
        let g = &self.g[s];
        (0..g.rows).fold(0, |acc, r| acc << 1 | prefix.dot(g.row(r)))
    }
}

pub fn build_rules(spec: &TreeCodeSpec) -> Result<ParityRules> {
    spec.validate()?;
    let mut rng = SimRng::seed_from_u64(spec.parity_seed);
    let mut g = Vec::with_capacity(spec.s);
    g.push(BitMatrix::zeros(0, 0));
    for s in 1..spec.s {
        let (rows, cols) = (spec.parity_bits(s), spec.prefix_len(s));
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.next_u32() & 1 == 1 {
                    m.set(r, c);
                }
            }
        }
        g.push(m);
    }
    Ok(ParityRules { g })
}

/// Chunk index sent in each slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSequence {
    pub idx: Vec<u32>,
}

pub fn encode(message: &Message, rules: &ParityRules, spec: &TreeCodeSpec) -> Result<ChunkSequence> {
    if message.len() != spec.w {
        return Err(Error::InvalidInput(format!(
            "message has {} bits, W = {}",
            message.len(),
            spec.w
        )));
    }
    let mut idx = Vec::with_capacity(spec.s);
    let mut start = 0;
    for s in 0..spec.s {
        let ws = spec.profile[s];
        let vs = spec.parity_bits(s);
        let data = message.read(start, ws);
        let parity = rules.parity(s, message);
        idx.push(data << vs | parity);
        start += ws;
    }
    Ok(ChunkSequence { idx })
}

/// Per-slot chunk lists; duplicates collapse.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotLists {
    pub lists: Vec<BTreeSet<u32>>,
}

impl SlotLists {
    pub fn new<I, L>(lists: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: IntoIterator<Item = u32>,
    {
        Self {
            lists: lists.into_iter().map(|l| l.into_iter().collect()).collect(),
        }
    }

    /// Lists that contain exactly the chunks of the given encodings.
    pub fn from_encodings<'a>(seqs: impl IntoIterator<Item = &'a ChunkSequence>, s: usize) -> Self {
        let mut lists = vec![BTreeSet::new(); s];
        for seq in seqs {
            for (slot, &c) in seq.idx.iter().enumerate() {
                lists[slot].insert(c);
            }
        }
        Self { lists }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.lists.iter().map(BTreeSet::len).collect()
    }
}

/// Result of a tree decode; `overflow` is set when the path guard tripped, in
/// which case `messages` holds what was found before the search stopped.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeOutcome {
    pub messages: BTreeSet<Message>,
    pub overflow: Option<(usize, usize)>,
    /// Paths that survived the parity check at each stage.
    pub stage_paths: Vec<usize>,
}

impl DecodeOutcome {
    pub fn into_result(self) -> Result<BTreeSet<Message>> {
        match self.overflow {
            Some((stage, paths)) => Err(Error::DecoderOverflow { stage, paths }),
            None => Ok(self.messages),
        }
    }
}

/// Every message whose encoding has all its chunks in the slot lists.
pub fn decode(
    lists: &SlotLists,
    rules: &ParityRules,
    spec: &TreeCodeSpec,
    max_paths: usize,
) -> Result<BTreeSet<Message>> {
    decode_partial(lists, rules, spec, max_paths)?.into_result()
}

/// Depth-first tree search with stage-wise parity pruning.
pub fn decode_partial(
    lists: &SlotLists,
    rules: &ParityRules,
    spec: &TreeCodeSpec,
    max_paths: usize,
) -> Result<DecodeOutcome> {
    if lists.lists.len() != spec.s {
        return Err(Error::InvalidInput(format!(
            "{} slot lists for S = {}",
            lists.lists.len(),
            spec.s
        )));
    }
    // parity value -> data values, per stage
    let index: Vec<BTreeMap<u32, Vec<u32>>> = (0..spec.s)
        .map(|s| {
            let vs = spec.parity_bits(s);
            let mut map: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for &chunk in &lists.lists[s] {
                if chunk >> spec.j != 0 {
                    continue;
                }
                let parity = chunk & ((1u32 << vs) - 1);
                map.entry(parity).or_default().push(chunk >> vs);
            }
            map
        })
        .collect();
    let mut search = Search {
        spec,
        rules,
        index: &index,
        max_paths,
        outcome: DecodeOutcome {
            stage_paths: vec![0; spec.s],
            ..DecodeOutcome::default()
        },
    };
    let mut prefix = Message::zeros(0);
    search.visit(0, &mut prefix);
    Ok(search.outcome)
}

struct Search<'a> {
    spec: &'a TreeCodeSpec,
    rules: &'a ParityRules,
    index: &'a [BTreeMap<u32, Vec<u32>>],
    max_paths: usize,
    outcome: DecodeOutcome,
}

impl Search<'_> {
    /// Returns `false` once the path guard has tripped.
    fn visit(&mut self, stage: usize, prefix: &mut Message) -> bool {
        if stage == self.spec.s {
            self.outcome.messages.insert(prefix.clone());
            return true;
        }
        let required = self.rules.parity(stage, prefix);
        let Some(children) = self.index[stage].get(&required) else {
            return true;
        };
        let ws = self.spec.profile[stage];
        let len = prefix.len();
        for &data in children {
            self.outcome.stage_paths[stage] += 1;
            if self.outcome.stage_paths[stage] > self.max_paths {
                self.outcome.overflow = Some((stage + 1, self.outcome.stage_paths[stage]));
                return false;
            }
            prefix.push(data, ws);
            let keep_going = self.visit(stage + 1, prefix);
            prefix.truncate(len);
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// Heuristic count of spurious surviving paths, `prod |L_s| * 2^-sum V_s`.
pub fn expected_false_paths(spec: &TreeCodeSpec, list_sizes: &[usize]) -> f64 {
    let log2_paths: f64 = list_sizes.iter().map(|&n| (n as f64).log2()).sum();
    let parity: usize = (1..spec.s).map(|s| spec.parity_bits(s)).sum();
    (log2_paths - parity as f64).exp2()
}
