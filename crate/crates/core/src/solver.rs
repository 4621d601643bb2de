//! Chance-sampled Monte Carlo CFR over an abstracted game.
//!
//! Each iteration samples one full deal (both holes and both board cards)
//! uniformly without replacement, then walks the entire betting tree twice,
//! once per updating player, accumulating counterfactual regrets and the
//! reach-weighted average strategy. Regret matching floors negative regrets
//! at strategy-computation time only; the accumulators themselves stay
//! unfloored. Single-threaded training is bitwise deterministic for a given
//! seed; the optional data-parallel mode trades that determinism for
//! throughput and is never used by the test suite.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::abstraction::AbstractionMap;
use crate::game::{Game, NodeKind, Player, PublicTree, PHASES};
use crate::iso::{pair_id, IsoTables};
use crate::util::{read_f64, read_u32, read_u64, write_f64, write_u32, write_u64};
use crate::{Error, Result};

const MAGIC: u64 = 0x4e32_3131_5052_4631; // "N211PRF1"
const FORMAT_VERSION: u32 = 1;

/// The game plus one abstraction map per player (either may be lossless).
#[derive(Clone, Copy)]
pub struct Binding<'a> {
    pub game: &'a Game,
    pub iso: &'a IsoTables,
    pub maps: [&'a AbstractionMap; 2],
}

/// Compact traversal arena node.
#[derive(Clone, Copy)]
struct CNode {
    kind: u8, // 0 chance, 1 decision, 2 fold, 3 showdown
    actor: u8,
    phase: u8,
    n_act: u8,
    slot: u32,
    children: [u32; 3],
    /// Fold: net chips for player 1. Showdown: the per-player stake.
    util_p1: i32,
}

fn compile_tree(tree: &PublicTree) -> Vec<CNode> {
    let mut nodes = Vec::with_capacity(tree.len());
    for (_, n) in tree.nodes() {
        let mut children = [u32::MAX; 3];
        for (i, &c) in n.children.iter().enumerate() {
            children[i] = c;
        }
        let (kind, actor, util_p1) = match n.kind {
            NodeKind::Chance => (0u8, 0u8, 0i32),
            NodeKind::Decision { actor } => (1, actor as u8, 0),
            NodeKind::Fold { folder } => (
                2,
                folder as u8,
                match folder {
                    Player::P1 => -n.committed[0],
                    Player::P2 => n.committed[1],
                },
            ),
            NodeKind::Showdown => (3, 0, n.committed[0]),
        };
        nodes.push(CNode {
            kind,
            actor,
            phase: n.phase,
            n_act: n.actions.len() as u8,
            slot: n.slot,
            children,
            util_p1,
        });
    }
    nodes
}

/// Regret and average-strategy accumulators for one trained profile.
///
/// Rows are bucket-major: for player p at phase r the accumulator of a
/// decision node with row slot `s` and bucket `b` lives at
/// `b * row_len[p][r] + s`, which keeps one deal's touched memory compact.
pub struct StrategyProfile {
    regret: [Vec<f64>; 6],
    average: [Vec<f64>; 6],
    row_len: [u32; 6],
    bucket_count: [u32; 6],
    pub iterations: u64,
    pub seed: u64,
    pub linear_averaging: bool,
    rng_word_pos: u128,
    map_hash: [u64; 2],
}

#[inline]
fn tbl(player: Player, phase: u8) -> usize {
    player as usize * PHASES + phase as usize - 1
}

impl StrategyProfile {
    fn new(binding: &Binding, seed: u64) -> StrategyProfile {
        let tree = binding.game.tree();
        let mut regret: [Vec<f64>; 6] = Default::default();
        let mut average: [Vec<f64>; 6] = Default::default();
        let mut row_len = [0u32; 6];
        let mut bucket_count = [0u32; 6];
        for p in Player::BOTH {
            for phase in 1..=PHASES as u8 {
                let i = tbl(p, phase);
                row_len[i] = tree.row_len(phase, p);
                bucket_count[i] = binding.maps[p as usize].bucket_count(phase) as u32;
                let len = row_len[i] as usize * bucket_count[i] as usize;
                regret[i] = vec![0.0; len];
                average[i] = vec![0.0; len];
            }
        }
        StrategyProfile {
            regret,
            average,
            row_len,
            bucket_count,
            iterations: 0,
            seed,
            linear_averaging: false,
            rng_word_pos: 0,
            map_hash: [binding.maps[0].hash(), binding.maps[1].hash()],
        }
    }

    pub fn map_hashes(&self) -> [u64; 2] {
        self.map_hash
    }

    /// Raw average-strategy accumulator rows (bucket-major).
    pub fn average_rows(&self, player: Player, phase: u8) -> &[f64] {
        &self.average[tbl(player, phase)]
    }

    /// Action slots per bucket for (player, phase).
    pub fn row_len_of(&self, player: Player, phase: u8) -> u32 {
        self.row_len[tbl(player, phase)]
    }

    pub fn bucket_count_of(&self, player: Player, phase: u8) -> u32 {
        self.bucket_count[tbl(player, phase)]
    }

    /// Average-strategy action distribution at a decision node for the
    /// actor's bucket. Unvisited infosets are uniform.
    pub fn average_probs(
        &self,
        player: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        bucket: u32,
        out: &mut [f64; 3],
    ) {
        let i = tbl(player, phase);
        let base = bucket as usize * self.row_len[i] as usize + slot as usize;
        let row = &self.average[i][base..base + n_actions];
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for a in 0..n_actions {
                out[a] = row[a] / sum;
            }
        } else {
            let u = 1.0 / n_actions as f64;
            out[..n_actions].fill(u);
        }
    }

    /// Regret-matched (current) distribution, mostly for diagnostics.
    pub fn current_probs(
        &self,
        player: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        bucket: u32,
        out: &mut [f64; 3],
    ) {
        let i = tbl(player, phase);
        let base = bucket as usize * self.row_len[i] as usize + slot as usize;
        regret_match(&self.regret[i][base..base + n_actions], n_actions, out);
    }

    /// Bitwise content equality (testing aid).
    pub fn bitwise_eq(&self, other: &StrategyProfile) -> bool {
        if self.iterations != other.iterations || self.map_hash != other.map_hash {
            return false;
        }
        for i in 0..6 {
            if !self.regret[i]
                .iter()
                .map(|v| v.to_bits())
                .eq(other.regret[i].iter().map(|v| v.to_bits()))
            {
                return false;
            }
            if !self.average[i]
                .iter()
                .map(|v| v.to_bits())
                .eq(other.average[i].iter().map(|v| v.to_bits()))
            {
                return false;
            }
        }
        true
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        write_u64(&mut w, MAGIC)?;
        write_u32(&mut w, FORMAT_VERSION)?;
        write_u64(&mut w, self.map_hash[0])?;
        write_u64(&mut w, self.map_hash[1])?;
        write_u64(&mut w, self.iterations)?;
        write_u64(&mut w, self.seed)?;
        write_u64(&mut w, self.linear_averaging as u64)?;
        write_u64(&mut w, (self.rng_word_pos >> 64) as u64)?;
        write_u64(&mut w, self.rng_word_pos as u64)?;
        for i in 0..6 {
            write_u32(&mut w, self.row_len[i])?;
            write_u32(&mut w, self.bucket_count[i])?;
            for &v in &self.regret[i] {
                write_f64(&mut w, v)?;
            }
            for &v in &self.average[i] {
                write_f64(&mut w, v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Load a profile; the binding's maps must hash-match the file.
    pub fn load<P: AsRef<Path>>(path: P, binding: &Binding) -> Result<StrategyProfile> {
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
        let map_hash = [read_u64(&mut r)?, read_u64(&mut r)?];
        for p in Player::BOTH {
            let expected = binding.maps[p as usize].hash();
            if map_hash[p as usize] != expected {
                return Err(Error::HashMismatch {
                    what: "strategy profile abstraction map",
                    found: map_hash[p as usize],
                    expected,
                });
            }
        }
        let iterations = read_u64(&mut r)?;
        let seed = read_u64(&mut r)?;
        let linear_averaging = read_u64(&mut r)? != 0;
        let hi = read_u64(&mut r)? as u128;
        let lo = read_u64(&mut r)? as u128;
        let mut profile = StrategyProfile::new(binding, seed);
        profile.iterations = iterations;
        profile.linear_averaging = linear_averaging;
        profile.rng_word_pos = (hi << 64) | lo;
        profile.map_hash = map_hash;
        for i in 0..6 {
            if read_u32(&mut r)? != profile.row_len[i] {
                return Err(bad("row length mismatch"));
            }
            if read_u32(&mut r)? != profile.bucket_count[i] {
                return Err(bad("bucket count mismatch"));
            }
            for v in profile.regret[i].iter_mut() {
                *v = read_f64(&mut r)?;
            }
            for v in profile.average[i].iter_mut() {
                *v = read_f64(&mut r)?;
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(profile)
    }
}

#[inline(always)]
fn regret_match(regs: &[f64], n: usize, out: &mut [f64; 3]) {
    let mut sum = 0.0;
    for a in 0..n {
        let v = regs[a].max(0.0);
        out[a] = v;
        sum += v;
    }
    if sum > 0.0 {
        let inv = 1.0 / sum;
        for a in 0..n {
            out[a] *= inv;
        }
    } else {
        let u = 1.0 / n as f64;
        out[..n].fill(u);
    }
}

/// Per-deal context: accumulator row base per (player, phase), the
/// showdown sign for player 1, and the average-strategy weight of this
/// iteration (1 for plain averaging, the iteration number for linear).
struct DealCtx {
    base: [usize; 6],
    sign_p1: f64,
    avg_weight: f64,
}

fn make_ctx(binding: &Binding, row_len: &[u32; 6], h1: [u8; 2], h2: [u8; 2], b1: u8, b2: u8) -> DealCtx {
    let game = binding.game;
    let iso = binding.iso;
    let n = game.num_cards();
    let sort2 = |h: [u8; 2]| if h[0] < h[1] { h } else { [h[1], h[0]] };
    let s1 = sort2(h1);
    let s2 = sort2(h2);
    let pid = [pair_id(n, s1[0], s1[1]), pair_id(n, s2[0], s2[1])];
    let mut base = [0usize; 6];
    for p in Player::BOTH {
        for phase in 1..=PHASES as u8 {
            let canonical = iso.index_raw(phase, pid[p as usize], b1, b2);
            let bucket = binding.maps[p as usize].bucket(phase, canonical);
            let i = tbl(p, phase);
            base[i] = bucket as usize * row_len[i] as usize;
        }
    }
    let card = crate::game::Card::from_index;
    let ranks = game.rank_table();
    let r1 = ranks.rank4_code([card(h1[0]), card(h1[1]), card(b1), card(b2)]);
    let r2 = ranks.rank4_code([card(h2[0]), card(h2[1]), card(b1), card(b2)]);
    let sign_p1 = match r1.cmp(&r2) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    };
    DealCtx {
        base,
        sign_p1,
        avg_weight: 1.0,
    }
}

fn sample_deal(binding: &Binding, row_len: &[u32; 6], rng: &mut ChaCha8Rng) -> DealCtx {
    let n = binding.game.num_cards();
    let mut cards: [u8; 64] = [0; 64];
    for (i, c) in cards.iter_mut().enumerate().take(n) {
        *c = i as u8;
    }
    for i in 0..6usize {
        let j = rng.random_range(i..n);
        cards.swap(i, j);
    }
    make_ctx(
        binding,
        row_len,
        [cards[0], cards[1]],
        [cards[2], cards[3]],
        cards[4],
        cards[5],
    )
}

/// Incremental trainer; run it in slices to evaluate checkpoints.
pub struct Trainer<'a> {
    binding: Binding<'a>,
    arena: Vec<CNode>,
    profile: StrategyProfile,
    rng: ChaCha8Rng,
    linear_averaging: bool,
}

impl<'a> Trainer<'a> {
    pub fn new(binding: Binding<'a>, seed: u64) -> Trainer<'a> {
        let arena = compile_tree(binding.game.tree());
        let profile = StrategyProfile::new(&binding, seed);
        let rng = ChaCha8Rng::seed_from_u64(seed);
        Trainer {
            binding,
            arena,
            profile,
            rng,
            linear_averaging: false,
        }
    }

    /// Weight average-strategy contributions by the iteration number
    /// instead of uniformly. Off by default; recorded in saved profiles.
    pub fn set_linear_averaging(&mut self, on: bool) {
        self.linear_averaging = on;
        self.profile.linear_averaging = on;
    }

    /// Resume from a saved profile: restores the RNG stream position, so a
    /// resumed run is bitwise identical to an uninterrupted one.
    pub fn from_profile(binding: Binding<'a>, profile: StrategyProfile) -> Trainer<'a> {
        let arena = compile_tree(binding.game.tree());
        let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
        rng.set_word_pos(profile.rng_word_pos);
        let linear_averaging = profile.linear_averaging;
        Trainer {
            binding,
            arena,
            profile,
            rng,
            linear_averaging,
        }
    }

    pub fn profile(&self) -> &StrategyProfile {
        &self.profile
    }

    pub fn into_profile(mut self) -> StrategyProfile {
        self.profile.rng_word_pos = self.rng.get_word_pos();
        self.profile
    }

    /// Advance by `iterations` more iterations (single-threaded,
    /// deterministic).
    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            let mut ctx = sample_deal(&self.binding, &self.profile.row_len, &mut self.rng);
            if self.linear_averaging {
                ctx.avg_weight = (self.profile.iterations + 1) as f64;
            }
            self.walk(0, Player::P1, 1.0, 1.0, &ctx);
            self.walk(0, Player::P2, 1.0, 1.0, &ctx);
            self.profile.iterations += 1;
        }
        self.profile.rng_word_pos = self.rng.get_word_pos();
    }

    /// EV for `updater` of the subtree at `node`, updating regrets and
    /// average strategy along the way.
    fn walk(
        &mut self,
        node: u32,
        updater: Player,
        reach_me: f64,
        reach_opp: f64,
        ctx: &DealCtx,
    ) -> f64 {
        let n = self.arena[node as usize];
        match n.kind {
            0 => self.walk(n.children[0], updater, reach_me, reach_opp, ctx),
            2 | 3 => {
                let ev_p1 = if n.kind == 2 {
                    n.util_p1 as f64
                } else {
                    ctx.sign_p1 * n.util_p1 as f64
                };
                if updater == Player::P1 {
                    ev_p1
                } else {
                    -ev_p1
                }
            }
            _ => {
                if reach_opp == 0.0 {
                    // Regret updates below are zero-weighted; only the
                    // average strategy still accumulates. The returned EV
                    // is multiplied by zero upstream.
                    self.average_only(node, updater, reach_me, ctx);
                    return 0.0;
                }
                let actor = if n.actor == 0 { Player::P1 } else { Player::P2 };
                let na = n.n_act as usize;
                let ti = tbl(actor, n.phase);
                let base = ctx.base[ti] + n.slot as usize;
                let mut sigma = [0.0f64; 3];
                regret_match(&self.profile.regret[ti][base..base + na], na, &mut sigma);

                if actor == updater {
                    let mut evs = [0.0f64; 3];
                    let mut ev = 0.0;
                    for a in 0..na {
                        evs[a] =
                            self.walk(n.children[a], updater, reach_me * sigma[a], reach_opp, ctx);
                        ev += sigma[a] * evs[a];
                    }
                    let regs = &mut self.profile.regret[ti][base..base + na];
                    for a in 0..na {
                        regs[a] += reach_opp * (evs[a] - ev);
                    }
                    if reach_me > 0.0 {
                        let w = ctx.avg_weight * reach_me;
                        let avg = &mut self.profile.average[ti][base..base + na];
                        for a in 0..na {
                            avg[a] += w * sigma[a];
                        }
                    }
                    ev
                } else {
                    let mut ev = 0.0;
                    for a in 0..na {
                        if sigma[a] > 0.0 {
                            ev += sigma[a]
                                * self.walk(
                                    n.children[a],
                                    updater,
                                    reach_me,
                                    reach_opp * sigma[a],
                                    ctx,
                                );
                        }
                    }
                    ev
                }
            }
        }
    }

    /// Opponent reach hit zero: no EVs or regret updates matter below,
    /// only the updater's average-strategy accumulation.
    fn average_only(&mut self, node: u32, updater: Player, reach_me: f64, ctx: &DealCtx) {
        if reach_me == 0.0 {
            return;
        }
        let n = self.arena[node as usize];
        match n.kind {
            0 => self.average_only(n.children[0], updater, reach_me, ctx),
            2 | 3 => {}
            _ => {
                let actor = if n.actor == 0 { Player::P1 } else { Player::P2 };
                let na = n.n_act as usize;
                if actor == updater {
                    let ti = tbl(actor, n.phase);
                    let base = ctx.base[ti] + n.slot as usize;
                    let mut sigma = [0.0f64; 3];
                    regret_match(&self.profile.regret[ti][base..base + na], na, &mut sigma);
                    let w = ctx.avg_weight * reach_me;
                    let avg = &mut self.profile.average[ti][base..base + na];
                    for a in 0..na {
                        avg[a] += w * sigma[a];
                    }
                    for a in 0..na {
                        if sigma[a] > 0.0 {
                            self.average_only(n.children[a], updater, reach_me * sigma[a], ctx);
                        }
                    }
                } else {
                    for a in 0..na {
                        self.average_only(n.children[a], updater, reach_me, ctx);
                    }
                }
            }
        }
    }

    /// Data-parallel training: threads share the accumulators through
    /// atomic adds and draw deals from per-thread RNG streams. Faster, but
    /// NOT bitwise reproducible; never used by the test suite.
    pub fn run_parallel(&mut self, iterations: u64, threads: usize) {
        if threads <= 1 {
            self.run(iterations);
            return;
        }
        let arena = &self.arena;
        let binding = self.binding;
        let row_len = self.profile.row_len;
        let seed = self.profile.seed;
        let epoch = self.profile.iterations;

        let mut regret: [&[AtomicU64]; 6] = Default::default();
        for (slot, v) in regret.iter_mut().zip(self.profile.regret.iter_mut()) {
            *slot = as_atomic(v);
        }
        let mut average: [&[AtomicU64]; 6] = Default::default();
        for (slot, v) in average.iter_mut().zip(self.profile.average.iter_mut()) {
            *slot = as_atomic(v);
        }

        std::thread::scope(|scope| {
            for t in 0..threads {
                let quota = iterations / threads as u64
                    + u64::from((t as u64) < iterations % threads as u64);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(1 + epoch.wrapping_mul(threads as u64) + t as u64);
                    let mut w = ParWalker {
                        arena,
                        regret,
                        average,
                    };
                    for _ in 0..quota {
                        let ctx = sample_deal(&binding, &row_len, &mut rng);
                        w.walk(0, Player::P1, 1.0, 1.0, &ctx);
                        w.walk(0, Player::P2, 1.0, 1.0, &ctx);
                    }
                });
            }
        });
        self.profile.iterations += iterations;
    }
}

/// f64 and AtomicU64 share size and alignment; the slice stays exclusively
/// borrowed for the parallel section, accessed only through atomics.
fn as_atomic(v: &mut [f64]) -> &[AtomicU64] {
    unsafe { std::slice::from_raw_parts(v.as_ptr() as *const AtomicU64, v.len()) }
}

#[inline]
fn atomic_add(cell: &AtomicU64, delta: f64) {
    let mut old = cell.load(Ordering::Relaxed);
    loop {
        let new = f64::from_bits(old) + delta;
        match cell.compare_exchange_weak(old, new.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => return,
            Err(cur) => old = cur,
        }
    }
}

struct ParWalker<'a> {
    arena: &'a [CNode],
    regret: [&'a [AtomicU64]; 6],
    average: [&'a [AtomicU64]; 6],
}

impl ParWalker<'_> {
    fn walk(
        &mut self,
        node: u32,
        updater: Player,
        reach_me: f64,
        reach_opp: f64,
        ctx: &DealCtx,
    ) -> f64 {
        let n = self.arena[node as usize];
        match n.kind {
            0 => self.walk(n.children[0], updater, reach_me, reach_opp, ctx),
            2 | 3 => {
                let ev_p1 = if n.kind == 2 {
                    n.util_p1 as f64
                } else {
                    ctx.sign_p1 * n.util_p1 as f64
                };
                if updater == Player::P1 {
                    ev_p1
                } else {
                    -ev_p1
                }
            }
            _ => {
                if reach_me == 0.0 && reach_opp == 0.0 {
                    return 0.0;
                }
                let actor = if n.actor == 0 { Player::P1 } else { Player::P2 };
                let na = n.n_act as usize;
                let ti = tbl(actor, n.phase);
                let base = ctx.base[ti] + n.slot as usize;
                let mut sigma = [0.0f64; 3];
                {
                    let mut tmp = [0.0f64; 3];
                    for a in 0..na {
                        tmp[a] = f64::from_bits(self.regret[ti][base + a].load(Ordering::Relaxed));
                    }
                    regret_match(&tmp[..na], na, &mut sigma);
                }
                if actor == updater {
                    let mut evs = [0.0f64; 3];
                    let mut ev = 0.0;
                    for a in 0..na {
                        evs[a] =
                            self.walk(n.children[a], updater, reach_me * sigma[a], reach_opp, ctx);
                        ev += sigma[a] * evs[a];
                    }
                    for a in 0..na {
                        if reach_opp > 0.0 {
                            atomic_add(&self.regret[ti][base + a], reach_opp * (evs[a] - ev));
                        }
                        if reach_me > 0.0 {
                            atomic_add(&self.average[ti][base + a], ctx.avg_weight * reach_me * sigma[a]);
                        }
                    }
                    ev
                } else {
                    let mut ev = 0.0;
                    for a in 0..na {
                        ev += sigma[a]
                            * self.walk(
                                n.children[a],
                                updater,
                                reach_me,
                                reach_opp * sigma[a],
                                ctx,
                            );
                    }
                    ev
                }
            }
        }
    }
}

/// Train a fresh profile for `iterations` (single-threaded).
pub fn train(binding: Binding, iterations: u64, seed: u64) -> StrategyProfile {
    let mut t = Trainer::new(binding, seed);
    t.run(iterations);
    t.into_profile()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::build_li;
    use crate::features::Features;
    use crate::game::GameRules;

    struct Ctx {
        game: Game,
        iso: IsoTables,
        li: AbstractionMap,
    }

    fn ctx() -> Ctx {
        let game = Game::new(GameRules::with_ranks(6)).unwrap();
        let iso = IsoTables::build(24);
        let features = Features::build(&game, &iso);
        let li = build_li(&features);
        Ctx { game, iso, li }
    }

    fn binding(c: &Ctx) -> Binding<'_> {
        Binding {
            game: &c.game,
            iso: &c.iso,
            maps: [&c.li, &c.li],
        }
    }

    #[test]
    fn fresh_profile_is_uniform() {
        let c = ctx();
        let profile = StrategyProfile::new(&binding(&c), 1);
        let mut out = [0.0f64; 3];
        profile.average_probs(Player::P1, 1, 0, 2, 3, &mut out);
        assert_eq!(&out[..2], &[0.5, 0.5]);
        profile.current_probs(Player::P1, 1, 0, 2, 3, &mut out);
        assert_eq!(&out[..2], &[0.5, 0.5]);
    }

    #[test]
    fn regret_match_is_distribution() {
        let mut out = [0.0f64; 3];
        regret_match(&[-1.0, 2.0, 3.0], 3, &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(out[0], 0.0);
        regret_match(&[-1.0, -2.0, -3.0], 3, &mut out);
        assert_eq!(out, [1.0 / 3.0; 3]);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = ctx();
        let a = train(binding(&c), 2_000, 99);
        let b = train(binding(&c), 2_000, 99);
        assert!(a.bitwise_eq(&b));
        let diff = train(binding(&c), 2_000, 100);
        assert!(!diff.bitwise_eq(&a));
    }

    #[test]
    fn resume_equals_uninterrupted() {
        let c = ctx();
        let b = binding(&c);
        let full = train(b, 3_000, 5);

        let mut first = Trainer::new(b, 5);
        first.run(1_000);
        let dir = std::env::temp_dir().join(format!("n211-prof-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ckpt.bin");
        first.into_profile().save(&path).unwrap();

        let loaded = StrategyProfile::load(&path, &b).unwrap();
        assert_eq!(loaded.iterations, 1_000);
        let mut resumed = Trainer::from_profile(b, loaded);
        resumed.run(2_000);
        assert!(resumed.into_profile().bitwise_eq(&full));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn average_probs_sum_to_one_everywhere() {
        let c = ctx();
        let b = binding(&c);
        let profile = train(b, 5_000, 7);
        let tree = c.game.tree();
        let mut out = [0.0f64; 3];
        for (_, n) in tree.nodes() {
            if let NodeKind::Decision { actor } = n.kind {
                for bucket in (0..c.li.bucket_count(n.phase)).step_by(17) {
                    profile.average_probs(
                        actor,
                        n.phase,
                        n.slot,
                        n.actions.len(),
                        bucket as u32,
                        &mut out,
                    );
                    let s: f64 = out[..n.actions.len()].iter().sum();
                    assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn profile_load_rejects_wrong_map() {
        let c = ctx();
        let b = binding(&c);
        let profile = train(b, 100, 1);
        let dir = std::env::temp_dir().join(format!("n211-prof2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.bin");
        profile.save(&path).unwrap();

        let features = Features::build(&c.game, &c.iso);
        let poi = crate::abstraction::build_poi(&features);
        let wrong = Binding {
            game: &c.game,
            iso: &c.iso,
            maps: [&poi, &poi],
        };
        assert!(matches!(
            StrategyProfile::load(&path, &wrong),
            Err(Error::HashMismatch { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn toy_game_converges_to_equilibrium() {
        // Betting in phase 1 only, phases 2-3 check down: a one-shot
        // betting game small enough that after 1e7 iterations the average
        // strategy sits within a milli-ante (1e-3 of the game's stake
        // unit, i.e. 0.005 chips) of equilibrium, measured by exact
        // exploitability. Both averaging modes must get there.
        let game = Game::new(crate::game::GameRules::check_down_toy(3)).unwrap();
        let iso = IsoTables::build(12);
        let features = Features::build(&game, &iso);
        let li = build_li(&features);
        let binding = Binding {
            game: &game,
            iso: &iso,
            maps: [&li, &li],
        };
        let evaluator = crate::evaluator::Evaluator::new(&game, &iso);
        let bound = 1e-3 * game.rules().ante as f64;
        for linear in [false, true] {
            let mut trainer = Trainer::new(binding, 13);
            trainer.set_linear_averaging(linear);
            trainer.run(10_000_000);
            let profile = trainer.into_profile();
            let strategy = crate::evaluator::Translated {
                profiles: [&profile, &profile],
                maps: [&li, &li],
            };
            let report = evaluator.exploitability(&strategy);
            assert!(
                report.exploitability_chips >= -1e-9 && report.exploitability_chips <= bound,
                "toy game exploitability {} chips (linear averaging {linear})",
                report.exploitability_chips
            );
        }
    }

    #[test]
    fn parallel_mode_runs() {
        let c = ctx();
        let b = binding(&c);
        let mut t = Trainer::new(b, 3);
        t.run_parallel(2_000, 2);
        assert_eq!(t.profile().iterations, 2_000);
        let mut out = [0.0f64; 3];
        t.profile().average_probs(Player::P1, 1, 0, 2, 0, &mut out);
        let s: f64 = out[..2].iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}
