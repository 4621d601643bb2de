//! Lossless suit isomorphism.
//!
//! Two observations that differ only by a permutation of the four suits are
//! strategically identical, so each phase's raw observation infosets
//! collapse into canonical classes. The canonical key of an observation is
//! the lexicographically smallest packed encoding over all 24 suit
//! permutations; classes get dense indices per phase in sorted key order.
//!
//! Tables are built by one full enumeration pass and can be cached to disk;
//! the cache is keyed by a format-version hash so stale files are rejected
//! rather than silently reused.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::game::{Card, Observation, PHASES};
use crate::util::{read_u32, read_u64, write_u32, write_u64, Fnv64};
use crate::{Error, Result};

/// Bump when the key packing or canonical form changes.
const FORMAT_VERSION: u32 = 1;
const MAGIC: u64 = 0x4e32_3131_4953_4f31; // "N211ISO1"

/// Missing-card sentinel inside packed keys.
const NO_CARD: u32 = 63;

/// All 24 permutations of the four suits, in lexicographic order.
pub fn suit_permutations() -> Vec<[u8; 4]> {
    let mut perms = Vec::with_capacity(24);
    let mut p = [0u8, 1, 2, 3];
    loop {
        perms.push(p);
        // next_permutation
        let mut i = 2usize;
        loop {
            if p[i] < p[i + 1] {
                break;
            }
            if i == 0 {
                return perms;
            }
            i -= 1;
        }
        let mut j = 3;
        while p[j] <= p[i] {
            j -= 1;
        }
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

#[inline]
fn pack(phase: u8, hole: [Card; 2], board: &[Card]) -> u32 {
    let c = |i: usize| -> u32 {
        if i < board.len() {
            board[i].index() as u32
        } else {
            NO_CARD
        }
    };
    ((phase as u32) << 24)
        | ((hole[0].index() as u32) << 18)
        | ((hole[1].index() as u32) << 12)
        | (c(0) << 6)
        | c(1)
}

fn unpack(key: u32) -> (u8, [Card; 2], Vec<Card>) {
    let phase = (key >> 24) as u8;
    let hole = [
        Card::from_index(((key >> 18) & 63) as u8),
        Card::from_index(((key >> 12) & 63) as u8),
    ];
    let mut board = Vec::new();
    for shift in [6u32, 0] {
        let v = (key >> shift) & 63;
        if v != NO_CARD {
            board.push(Card::from_index(v as u8));
        }
    }
    (phase, hole, board)
}

/// Canonical key: minimal packed encoding over the 24 suit permutations,
/// hole cards sorted after relabeling, board kept in reveal order.
pub fn canonical_key(obs: &Observation) -> u32 {
    let perms = PERMS.get_or_init(suit_permutations);
    let hole = obs.hole();
    let board = obs.board();
    let mut best = u32::MAX;
    for perm in perms {
        let mut h = [hole[0].permute_suit(perm), hole[1].permute_suit(perm)];
        if h[0] > h[1] {
            h.swap(0, 1);
        }
        let mut b = [Card::from_index(0); PHASES - 1];
        for (i, c) in board.iter().enumerate() {
            b[i] = c.permute_suit(perm);
        }
        let key = pack(obs.phase(), h, &b[..board.len()]);
        best = best.min(key);
    }
    best
}

static PERMS: std::sync::OnceLock<Vec<[u8; 4]>> = std::sync::OnceLock::new();

/// Unordered hole-pair index for card indices `a < b`, lexicographic.
#[inline]
pub fn pair_id(n: usize, a: u8, b: u8) -> usize {
    debug_assert!(a < b);
    let (n, a, b) = (n, a as usize, b as usize);
    // pairs (a, a+1..n) start after all pairs with smaller first card
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

pub fn num_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Canonical class tables for every phase: sorted keys, class sizes
/// (number of raw observations mapping to the class) and O(1) lookup from
/// raw observations.
pub struct IsoTables {
    num_cards: usize,
    keys: [Vec<u32>; PHASES],
    orbit: [Vec<u32>; PHASES],
    lut1: Vec<u32>,
    lut2: Vec<u32>,
    lut3: Vec<u32>,
}

impl std::fmt::Debug for IsoTables {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "IsoTables({} cards; {}/{}/{} classes)",
            self.num_cards,
            self.keys[0].len(),
            self.keys[1].len(),
            self.keys[2].len()
        )
    }
}

impl IsoTables {
    pub fn build(num_cards: usize) -> IsoTables {
        let n = num_cards as u8;
        let pairs: Vec<(u8, u8)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();

        // Enumerate canonical keys per phase, in parallel over hole pairs.
        let mut keys: [Vec<u32>; PHASES] = Default::default();
        let mut orbit: [Vec<u32>; PHASES] = Default::default();
        for phase in 1..=PHASES as u8 {
            let mut all: Vec<u32> = pairs
                .par_iter()
                .flat_map_iter(|&(a, b)| {
                    let hole = [Card::from_index(a), Card::from_index(b)];
                    let mut local = Vec::new();
                    match phase {
                        1 => local.push(canonical_key(&Observation::new(hole, &[]).unwrap())),
                        2 => {
                            for c in 0..n {
                                if c != a && c != b {
                                    local.push(canonical_key(
                                        &Observation::new(hole, &[Card::from_index(c)]).unwrap(),
                                    ));
                                }
                            }
                        }
                        _ => {
                            for c in 0..n {
                                if c == a || c == b {
                                    continue;
                                }
                                for d in 0..n {
                                    if d == a || d == b || d == c {
                                        continue;
                                    }
                                    local.push(canonical_key(
                                        &Observation::new(
                                            hole,
                                            &[Card::from_index(c), Card::from_index(d)],
                                        )
                                        .unwrap(),
                                    ));
                                }
                            }
                        }
                    }
                    local
                })
                .collect();
            all.par_sort_unstable();
            let mut uniq = Vec::new();
            let mut sizes = Vec::new();
            for &k in &all {
                if uniq.last() == Some(&k) {
                    *sizes.last_mut().unwrap() += 1;
                } else {
                    uniq.push(k);
                    sizes.push(1u32);
                }
            }
            keys[phase as usize - 1] = uniq;
            orbit[phase as usize - 1] = sizes;
        }

        let mut t = IsoTables {
            num_cards,
            keys,
            orbit,
            lut1: Vec::new(),
            lut2: Vec::new(),
            lut3: Vec::new(),
        };
        t.build_luts();
        t
    }

    fn build_luts(&mut self) {
        let n = self.num_cards;
        let np = num_pairs(n);
        let find = |phase: usize, key: u32| -> u32 {
            self.keys[phase - 1].binary_search(&key).expect("key exists") as u32
        };

        self.lut1 = vec![u32::MAX; np];
        self.lut2 = vec![u32::MAX; np * n];
        let mut lut3 = vec![u32::MAX; np * n * n];

        let pairs: Vec<(u8, u8)> = (0..n as u8)
            .flat_map(|a| (a + 1..n as u8).map(move |b| (a, b)))
            .collect();
        for &(a, b) in &pairs {
            let pid = pair_id(n, a, b);
            let hole = [Card::from_index(a), Card::from_index(b)];
            self.lut1[pid] = find(1, canonical_key(&Observation::new(hole, &[]).unwrap()));
            for c in 0..n as u8 {
                if c == a || c == b {
                    continue;
                }
                let key = canonical_key(&Observation::new(hole, &[Card::from_index(c)]).unwrap());
                self.lut2[pid * n + c as usize] = find(2, key);
            }
        }
        // Phase 3 is the big one; fill in parallel chunks by hole pair.
        lut3.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(pid, chunk)| {
                let (a, b) = pairs[pid];
                let hole = [Card::from_index(a), Card::from_index(b)];
                for c in 0..n as u8 {
                    if c == a || c == b {
                        continue;
                    }
                    for d in 0..n as u8 {
                        if d == a || d == b || d == c {
                            continue;
                        }
                        let key = canonical_key(
                            &Observation::new(hole, &[Card::from_index(c), Card::from_index(d)])
                                .unwrap(),
                        );
                        chunk[c as usize * n + d as usize] =
                            self.keys[2].binary_search(&key).expect("key exists") as u32;
                    }
                }
            });
        self.lut3 = lut3;
    }

    pub fn num_cards(&self) -> usize {
        self.num_cards
    }

    pub fn class_count(&self, phase: u8) -> usize {
        self.keys[phase as usize - 1].len()
    }

    /// Number of raw observations collapsing into class `index`.
    pub fn orbit_size(&self, phase: u8, index: u32) -> u32 {
        self.orbit[phase as usize - 1][index as usize]
    }

    pub fn index_of(&self, key: u32) -> Result<u32> {
        let phase = (key >> 24) as u8;
        if phase == 0 || phase as usize > PHASES {
            return Err(Error::BadPhase(phase, PHASES as u8));
        }
        self.keys[phase as usize - 1]
            .binary_search(&key)
            .map(|i| i as u32)
            .map_err(|_| Error::BadIndex(key as usize, phase))
    }

    pub fn key_of(&self, phase: u8, index: u32) -> Result<u32> {
        self.keys
            .get(phase as usize - 1)
            .and_then(|v| v.get(index as usize))
            .copied()
            .ok_or(Error::BadIndex(index as usize, phase))
    }

    /// Canonical index of an arbitrary raw observation.
    pub fn index_of_obs(&self, obs: &Observation) -> u32 {
        let hole = obs.hole();
        let pid = pair_id(self.num_cards, hole[0].index(), hole[1].index());
        let b = obs.board();
        match obs.phase() {
            1 => self.lut1[pid],
            2 => self.lut2[pid * self.num_cards + b[0].index() as usize],
            _ => self.lut3
                [(pid * self.num_cards + b[0].index() as usize) * self.num_cards + b[1].index() as usize],
        }
    }

    /// Hot-path lookup by raw card indices. `b1`/`b2` are ignored for
    /// earlier phases.
    #[inline]
    pub fn index_raw(&self, phase: u8, hole_pair: usize, b1: u8, b2: u8) -> u32 {
        let n = self.num_cards;
        match phase {
            1 => self.lut1[hole_pair],
            2 => self.lut2[hole_pair * n + b1 as usize],
            _ => self.lut3[(hole_pair * n + b1 as usize) * n + b2 as usize],
        }
    }

    /// A representative raw observation of the class (the canonical one).
    pub fn representative(&self, phase: u8, index: u32) -> Result<Observation> {
        let key = self.key_of(phase, index)?;
        let (_, hole, board) = unpack(key);
        Observation::new(hole, &board)
    }

    /// Hash identifying the canonical-form format and deck, used to key
    /// cache files and dependent artifacts.
    pub fn format_hash(&self) -> u64 {
        Fnv64::new()
            .write_u32(FORMAT_VERSION)
            .write_u32(self.num_cards as u32)
            .finish()
    }

    /// Write one phase's sorted key array (little-endian throughout).
    pub fn save_phase<P: AsRef<Path>>(&self, phase: u8, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        let keys = &self.keys[phase as usize - 1];
        write_u64(&mut w, MAGIC)?;
        write_u32(&mut w, FORMAT_VERSION)?;
        write_u32(&mut w, phase as u32)?;
        write_u64(&mut w, keys.len() as u64)?;
        write_u64(&mut w, self.format_hash())?;
        for (&k, &o) in keys.iter().zip(&self.orbit[phase as usize - 1]) {
            write_u32(&mut w, k)?;
            write_u32(&mut w, o)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Load one phase's keys, verifying magic, version and format hash.
    pub fn load_phase<P: AsRef<Path>>(&self, phase: u8, path: P) -> Result<(Vec<u32>, Vec<u32>)> {
        let path_str = path.as_ref().display().to_string();
        let mut r = BufReader::new(File::open(&path)?);
        let bad = |what: &str| Error::FileFormat {
            path: path_str.clone(),
            what: what.to_string(),
        };
        if read_u64(&mut r)? != MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        if read_u32(&mut r)? != phase as u32 {
            return Err(bad("phase mismatch"));
        }
        let count = read_u64(&mut r)? as usize;
        let hash = read_u64(&mut r)?;
        if hash != self.format_hash() {
            return Err(Error::HashMismatch {
                what: "isomorphism cache",
                found: hash,
                expected: self.format_hash(),
            });
        }
        let mut keys = Vec::with_capacity(count);
        let mut orbit = Vec::with_capacity(count);
        for _ in 0..count {
            keys.push(read_u32(&mut r)?);
            orbit.push(read_u32(&mut r)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok((keys, orbit))
    }
}
