//! Outcome features for canonical observation infosets.
//!
//! Everything here is computed by exhaustive enumeration with exact integer
//! counting; floats appear only at the API boundary. That matters because
//! the equivalence partitions (same winrate vector, same transition
//! histogram) are defined by exact equality and must not be corrupted by
//! rounding.
//!
//! * Winrate of an observation at phase r: probabilities of losing, tying
//!   and winning the showdown after completing the board and dealing the
//!   opponent hole uniformly at random (betting never enters).
//! * Equity: win + tie/2.
//! * Recall features: the winrate vectors of the observation and its phase
//!   ancestors, concatenated; equality of these defines the recall-aware
//!   partitions.
//! * Outcome partitions: winrate equality at the last phase, histogram
//!   equality over next-phase class ids at earlier phases, built backward.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::game::{Game, Observation, PHASES};
use crate::iso::{num_pairs, pair_id, IsoTables};
use crate::util::{read_u32, read_u64, write_u32, write_u64, Fnv64};
use crate::{Error, Result};

const MAGIC: u64 = 0x4e32_3131_4645_4131; // "N211FEA1"
const FORMAT_VERSION: u32 = 1;

/// (lose, tie, win) probabilities as floats. Entries are nonnegative and
/// sum to 1 up to rounding of the exact integer counts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WinrateFeature(pub [f64; 3]);

impl WinrateFeature {
    pub fn lose(&self) -> f64 {
        self.0[0]
    }
    pub fn tie(&self) -> f64 {
        self.0[1]
    }
    pub fn win(&self) -> f64 {
        self.0[2]
    }
    pub fn equity(&self) -> f64 {
        self.win() + 0.5 * self.tie()
    }
}

/// Dense id of an outcome-equivalence class (winrate/histogram equality).
pub type PofId = u32;
/// Dense id of a recall-winrate equivalence class.
pub type KrwiId = u32;

/// Exact (lose, tie, win) counts; the per-phase denominator lives in
/// [`Features::denominator`].
pub type WinrateCounts = [u32; 3];

/// All enumerated feature tables for one game.
pub struct Features {
    /// Winrate numerators per canonical class, per phase.
    wr: [Vec<WinrateCounts>; PHASES],
    /// Winrate denominators per phase.
    den: [u64; PHASES],
    /// Parent canonical class per phase-2 / phase-3 class.
    anc1_of2: Vec<u32>,
    anc2_of3: Vec<u32>,
    anc1_of3: Vec<u32>,
    /// Successor canonical classes, flattened: phase-1 classes have
    /// `num_cards - 2` successors, phase-2 classes `num_cards - 3`.
    succ1: Vec<u32>,
    succ2: Vec<u32>,
    succ1_arity: usize,
    succ2_arity: usize,
    /// Recall partitions: ids[phase-1][k] is the per-class id vector.
    krwi: [Vec<Vec<KrwiId>>; PHASES],
    krwi_counts: [Vec<usize>; PHASES],
    /// Outcome partitions per phase.
    poi: [Vec<PofId>; PHASES],
    poi_counts: [usize; PHASES],
    content_hash: u64,
}

impl std::fmt::Debug for Features {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Features(poi {}/{}/{})",
            self.poi_counts[0], self.poi_counts[1], self.poi_counts[2]
        )
    }
}

impl Features {
    pub fn build(game: &Game, iso: &IsoTables) -> Features {
        let n = iso.num_cards();
        let ranks = game.rank_table();

        // Phase 3: exhaustive opponent-hole enumeration per canonical class.
        let count3 = iso.class_count(3);
        let wr3: Vec<WinrateCounts> = (0..count3 as u32)
            .into_par_iter()
            .map(|idx| {
                let rep = iso.representative(3, idx).expect("valid index");
                let hole = rep.hole();
                let board = [rep.board()[0], rep.board()[1]];
                let mine = ranks.rank4_code([hole[0], hole[1], board[0], board[1]]);
                let mut used = [false; 64];
                for c in rep.cards() {
                    used[c.index() as usize] = true;
                }
                let mut counts = [0u32; 3];
                for o1 in 0..n as u8 {
                    if used[o1 as usize] {
                        continue;
                    }
                    for o2 in o1 + 1..n as u8 {
                        if used[o2 as usize] {
                            continue;
                        }
                        let theirs = ranks.rank4_code([
                            crate::game::Card::from_index(o1),
                            crate::game::Card::from_index(o2),
                            board[0],
                            board[1],
                        ]);
                        let slot = match mine.cmp(&theirs) {
                            std::cmp::Ordering::Less => 0,
                            std::cmp::Ordering::Equal => 1,
                            std::cmp::Ordering::Greater => 2,
                        };
                        counts[slot] += 1;
                    }
                }
                counts
            })
            .collect();
        let den3 = (num_pairs(n - 4)) as u64;

        // Successor tables and ancestor links.
        let count2 = iso.class_count(2);
        let succ2_arity = n - 3;
        let mut succ2 = vec![0u32; count2 * succ2_arity];
        let mut anc1_of2 = vec![0u32; count2];
        for idx in 0..count2 as u32 {
            let rep = iso.representative(2, idx).unwrap();
            let hole = rep.hole();
            let pid = pair_id(n, hole[0].index(), hole[1].index());
            let b1 = rep.board()[0].index();
            anc1_of2[idx as usize] = iso.index_raw(1, pid, 0, 0);
            let mut j = 0;
            for c in 0..n as u8 {
                if c == hole[0].index() || c == hole[1].index() || c == b1 {
                    continue;
                }
                succ2[idx as usize * succ2_arity + j] = iso.index_raw(3, pid, b1, c);
                j += 1;
            }
            debug_assert_eq!(j, succ2_arity);
        }

        let count1 = iso.class_count(1);
        let succ1_arity = n - 2;
        let mut succ1 = vec![0u32; count1 * succ1_arity];
        for idx in 0..count1 as u32 {
            let rep = iso.representative(1, idx).unwrap();
            let hole = rep.hole();
            let pid = pair_id(n, hole[0].index(), hole[1].index());
            let mut j = 0;
            for c in 0..n as u8 {
                if c == hole[0].index() || c == hole[1].index() {
                    continue;
                }
                succ1[idx as usize * succ1_arity + j] = iso.index_raw(2, pid, c, 0);
                j += 1;
            }
            debug_assert_eq!(j, succ1_arity);
        }

        let anc2_of3: Vec<u32> = (0..count3 as u32)
            .map(|idx| {
                let rep = iso.representative(3, idx).unwrap();
                let hole = rep.hole();
                let pid = pair_id(n, hole[0].index(), hole[1].index());
                iso.index_raw(2, pid, rep.board()[0].index(), 0)
            })
            .collect();
        let anc1_of3: Vec<u32> = anc2_of3.iter().map(|&a2| anc1_of2[a2 as usize]).collect();

        // Earlier-phase winrates: average the successors' exact counts.
        let mut wr2 = vec![[0u32; 3]; count2];
        for (idx, out) in wr2.iter_mut().enumerate() {
            let mut acc = [0u32; 3];
            for j in 0..succ2_arity {
                let s = succ2[idx * succ2_arity + j] as usize;
                for t in 0..3 {
                    acc[t] += wr3[s][t];
                }
            }
            *out = acc;
        }
        let den2 = succ2_arity as u64 * den3;

        let mut wr1 = vec![[0u32; 3]; count1];
        for (idx, out) in wr1.iter_mut().enumerate() {
            let mut acc = [0u32; 3];
            for j in 0..succ1_arity {
                let s = succ1[idx * succ1_arity + j] as usize;
                for t in 0..3 {
                    acc[t] += wr2[s][t];
                }
            }
            *out = acc;
        }
        let den1 = succ1_arity as u64 * den2;

        let mut f = Features {
            wr: [wr1, wr2, wr3],
            den: [den1, den2, den3],
            anc1_of2,
            anc2_of3,
            anc1_of3,
            succ1,
            succ2,
            succ1_arity,
            succ2_arity,
            krwi: Default::default(),
            krwi_counts: Default::default(),
            poi: Default::default(),
            poi_counts: [0; PHASES],
            content_hash: 0,
        };
        f.build_partitions();
        f.content_hash = f.compute_hash(iso);
        f
    }

    /// Assign dense ids in first-appearance order over an index sweep.
    fn assign_ids<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> (Vec<u32>, usize) {
        let mut ids = Vec::new();
        let mut seen: HashMap<K, u32> = HashMap::new();
        for key in keys {
            let next = seen.len() as u32;
            let id = *seen.entry(key).or_insert(next);
            ids.push(id);
        }
        let count = seen.len();
        (ids, count)
    }

    fn build_partitions(&mut self) {
        // Recall partitions: equality of the numerator blocks. The
        // denominators are fixed per phase, so numerators alone decide.
        for phase in 1..=PHASES as u8 {
            let classes = self.wr[phase as usize - 1].len();
            let mut per_k = Vec::new();
            let mut counts = Vec::new();
            for k in 0..phase {
                let (ids, count) = Self::assign_ids((0..classes as u32).map(|idx| {
                    let mut key = Vec::with_capacity((k as usize + 1) * 3);
                    for block in self.krwf_counts(phase, k, idx).unwrap() {
                        key.extend_from_slice(&block);
                    }
                    key
                }));
                per_k.push(ids);
                counts.push(count);
            }
            self.krwi[phase as usize - 1] = per_k;
            self.krwi_counts[phase as usize - 1] = counts;
        }

        // Outcome partitions, built backward from the last phase.
        let (poi3, c3) = Self::assign_ids(self.wr[2].iter().copied());
        let (poi2, c2) = {
            let arity = self.succ2_arity;
            Self::assign_ids((0..self.wr[1].len()).map(|idx| {
                let mut hist: Vec<(u32, u32)> = Vec::new();
                for j in 0..arity {
                    let id = poi3[self.succ2[idx * arity + j] as usize];
                    match hist.iter_mut().find(|e| e.0 == id) {
                        Some(e) => e.1 += 1,
                        None => hist.push((id, 1)),
                    }
                }
                hist.sort_unstable();
                hist
            }))
        };
        let (poi1, c1) = {
            let arity = self.succ1_arity;
            Self::assign_ids((0..self.wr[0].len()).map(|idx| {
                let mut hist: Vec<(u32, u32)> = Vec::new();
                for j in 0..arity {
                    let id = poi2[self.succ1[idx * arity + j] as usize];
                    match hist.iter_mut().find(|e| e.0 == id) {
                        Some(e) => e.1 += 1,
                        None => hist.push((id, 1)),
                    }
                }
                hist.sort_unstable();
                hist
            }))
        };
        self.poi = [poi1, poi2, poi3];
        self.poi_counts = [c1, c2, c3];
    }

    fn compute_hash(&self, iso: &IsoTables) -> u64 {
        let mut h = Fnv64::new();
        h.write_u32(FORMAT_VERSION).write_u64(iso.format_hash());
        for phase in 0..PHASES {
            h.write_u64(self.den[phase]);
            for w in &self.wr[phase] {
                h.write_u32(w[0]).write_u32(w[1]).write_u32(w[2]);
            }
        }
        h.finish()
    }

    /// Stable hash of the feature tables; dependent artifacts (bucket maps,
    /// strategy profiles) embed it to detect mismatched caches.
    pub fn content_hash(&self) -> u64 {
        self.content_hash
    }

    pub fn class_count(&self, phase: u8) -> usize {
        self.wr[phase as usize - 1].len()
    }

    pub fn denominator(&self, phase: u8) -> u64 {
        self.den[phase as usize - 1]
    }

    pub fn winrate_counts(&self, phase: u8, idx: u32) -> WinrateCounts {
        self.wr[phase as usize - 1][idx as usize]
    }

    pub fn winrate(&self, phase: u8, idx: u32) -> WinrateFeature {
        let c = self.winrate_counts(phase, idx);
        let d = self.den[phase as usize - 1] as f64;
        WinrateFeature([c[0] as f64 / d, c[1] as f64 / d, c[2] as f64 / d])
    }

    /// Exact equity comparison key: 2*win + tie (denominator fixed per
    /// phase).
    pub fn equity_key(&self, phase: u8, idx: u32) -> u64 {
        let c = self.winrate_counts(phase, idx);
        2 * c[2] as u64 + c[1] as u64
    }

    pub fn equity(&self, phase: u8, idx: u32) -> f64 {
        self.equity_key(phase, idx) as f64 / (2.0 * self.den[phase as usize - 1] as f64)
    }

    /// Canonical ancestor class at `phase - levels`.
    pub fn ancestor(&self, phase: u8, idx: u32, levels: u8) -> Result<u32> {
        match (phase, levels) {
            (_, 0) => Ok(idx),
            (2, 1) => Ok(self.anc1_of2[idx as usize]),
            (3, 1) => Ok(self.anc2_of3[idx as usize]),
            (3, 2) => Ok(self.anc1_of3[idx as usize]),
            _ => Err(Error::BadRecall { phase, k: levels }),
        }
    }

    /// Exact numerator blocks of the recall feature: block j is the winrate
    /// of the phase-(r-j) ancestor.
    pub fn krwf_counts(&self, phase: u8, k: u8, idx: u32) -> Result<Vec<WinrateCounts>> {
        if k >= phase {
            return Err(Error::BadRecall { phase, k });
        }
        let mut blocks = Vec::with_capacity(k as usize + 1);
        for j in 0..=k {
            let anc = self.ancestor(phase, idx, j)?;
            blocks.push(self.winrate_counts(phase - j, anc));
        }
        Ok(blocks)
    }

    /// Float view of the recall feature, dimension (k+1)*3.
    pub fn krwf(&self, phase: u8, k: u8, idx: u32) -> Result<Vec<f64>> {
        let blocks = self.krwf_counts(phase, k, idx)?;
        let mut out = Vec::with_capacity(blocks.len() * 3);
        for (j, b) in blocks.iter().enumerate() {
            let d = self.den[(phase - j as u8) as usize - 1] as f64;
            out.extend([b[0] as f64 / d, b[1] as f64 / d, b[2] as f64 / d]);
        }
        Ok(out)
    }

    /// Per-class recall-partition ids at (phase, k), plus the class count.
    pub fn krwi_ids(&self, phase: u8, k: u8) -> Result<(&[KrwiId], usize)> {
        if k >= phase {
            return Err(Error::BadRecall { phase, k });
        }
        Ok((
            &self.krwi[phase as usize - 1][k as usize],
            self.krwi_counts[phase as usize - 1][k as usize],
        ))
    }

    /// Per-class outcome-partition ids, plus the class count.
    pub fn poi_ids(&self, phase: u8) -> (&[PofId], usize) {
        (
            &self.poi[phase as usize - 1],
            self.poi_counts[phase as usize - 1],
        )
    }

    /// Successor canonical classes of a class (one entry per next card).
    pub fn successors(&self, phase: u8, idx: u32) -> Result<&[u32]> {
        match phase {
            1 => {
                let a = self.succ1_arity;
                Ok(&self.succ1[idx as usize * a..(idx as usize + 1) * a])
            }
            2 => {
                let a = self.succ2_arity;
                Ok(&self.succ2[idx as usize * a..(idx as usize + 1) * a])
            }
            _ => Err(Error::BadPhase(phase, 2)),
        }
    }

    /// Histogram over a labeling of the next phase's canonical classes:
    /// entry j is the probability that the next card leads to a class
    /// labeled j. The labeling must cover every next-phase class with
    /// dense labels 0..num_labels.
    pub fn transition_histogram(
        &self,
        phase: u8,
        idx: u32,
        labeling: &[u32],
        num_labels: usize,
    ) -> Result<Vec<f64>> {
        let next_classes = self.class_count(phase + 1);
        if labeling.len() != next_classes {
            return Err(Error::DimensionMismatch {
                got: labeling.len(),
                want: next_classes,
            });
        }
        let mut used = vec![false; num_labels];
        for &l in labeling {
            if l as usize >= num_labels {
                return Err(Error::LabelGap(l as usize));
            }
            used[l as usize] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::LabelGap(gap));
        }
        let succ = self.successors(phase, idx)?;
        let mut counts = vec![0u32; num_labels];
        for &s in succ {
            counts[labeling[s as usize] as usize] += 1;
        }
        let total = succ.len() as f64;
        Ok(counts.into_iter().map(|c| c as f64 / total).collect())
    }

    /// Exact histogram counts over a labeling (denominator = successor
    /// count).
    pub fn transition_counts(
        &self,
        phase: u8,
        idx: u32,
        labeling: &[u32],
        num_labels: usize,
    ) -> Result<Vec<u32>> {
        let succ = self.successors(phase, idx)?;
        let mut hist = vec![0u32; num_labels];
        for &s in succ {
            hist[labeling[s as usize] as usize] += 1;
        }
        Ok(hist)
    }

    /// Write one phase's recall-feature records (k = 0 is the plain
    /// winrate table).
    pub fn save_phase<P: AsRef<Path>>(&self, phase: u8, k: u8, path: P) -> Result<()> {
        if k >= phase {
            return Err(Error::BadRecall { phase, k });
        }
        let mut w = BufWriter::new(File::create(&path)?);
        let count = self.class_count(phase);
        write_u64(&mut w, MAGIC)?;
        write_u32(&mut w, FORMAT_VERSION)?;
        write_u32(&mut w, phase as u32)?;
        write_u32(&mut w, k as u32)?;
        write_u64(&mut w, count as u64)?;
        write_u64(&mut w, self.content_hash)?;
        for j in 0..=k {
            write_u64(&mut w, self.den[(phase - j) as usize - 1])?;
        }
        let mut payload = Fnv64::new();
        for idx in 0..count as u32 {
            for block in self.krwf_counts(phase, k, idx)? {
                for v in block {
                    write_u32(&mut w, v)?;
                    payload.write_u32(v);
                }
            }
        }
        // Payload checksum trailer so record corruption is caught, not
        // just header damage.
        write_u64(&mut w, payload.finish())?;
        w.flush()?;
        Ok(())
    }

    /// Read back a feature cache, verifying header and content hash.
    pub fn load_phase<P: AsRef<Path>>(
        &self,
        phase: u8,
        k: u8,
        path: P,
    ) -> Result<Vec<WinrateCounts>> {
        let path_str = path.as_ref().display().to_string();
        let bad = |what: &str| Error::FileFormat {
            path: path_str.clone(),
            what: what.to_string(),
        };
        let mut r = BufReader::new(File::open(&path)?);
        if read_u64(&mut r)? != MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        if read_u32(&mut r)? != phase as u32 {
            return Err(bad("phase mismatch"));
        }
        if read_u32(&mut r)? != k as u32 {
            return Err(bad("recall depth mismatch"));
        }
        let count = read_u64(&mut r)? as usize;
        let hash = read_u64(&mut r)?;
        if hash != self.content_hash {
            return Err(Error::HashMismatch {
                what: "feature cache",
                found: hash,
                expected: self.content_hash,
            });
        }
        for _ in 0..=k {
            read_u64(&mut r)?;
        }
        let mut records = Vec::with_capacity(count * (k as usize + 1));
        let mut payload = Fnv64::new();
        for _ in 0..count * (k as usize + 1) {
            let rec = [read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?];
            for v in rec {
                payload.write_u32(v);
            }
            records.push(rec);
        }
        let checksum = read_u64(&mut r)?;
        if checksum != payload.finish() {
            return Err(Error::HashMismatch {
                what: "feature cache payload",
                found: checksum,
                expected: payload.finish(),
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(records)
    }
}

/// Winrate of an arbitrary raw observation (routes through its canonical
/// class).
pub fn winrate_of(iso: &IsoTables, features: &Features, obs: &Observation) -> WinrateFeature {
    features.winrate(obs.phase(), iso.index_of_obs(obs))
}
