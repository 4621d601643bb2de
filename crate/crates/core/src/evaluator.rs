//! Exact best response and exploitability over the full (unabstracted)
//! game.
//!
//! The traversal walks the public betting tree once per board path while
//! carrying a reach-probability vector over all opponent hole pairs, so no
//! sampling is involved anywhere. Showdown leaves aggregate the reach
//! vector in rank order with inclusion-exclusion over shared cards, which
//! turns the quadratic hole-vs-hole comparison into a linear pass.
//! Repeated evaluations are bitwise identical; parallelism over board
//! branches reduces in a fixed order.

use rayon::prelude::*;

use crate::abstraction::AbstractionMap;
use crate::game::{Action, Game, NodeId, NodeKind, Player, PublicTree, PHASES};
use crate::iso::{num_pairs, pair_id, IsoTables};
use crate::solver::{Binding, StrategyProfile, Trainer};
use crate::Result;

/// A total behavioral strategy queried per decision node and canonical
/// observation class of the acting player.
pub trait BehaviorStrategy: Sync {
    fn probs(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        actions: &[Action],
        canonical: u32,
        out: &mut [f64; 3],
    );

    /// Batched lookup: fill `out[pid*3..]` for every hole pair whose reach
    /// is nonzero. One virtual call per node instead of one per hole.
    #[allow(clippy::too_many_arguments)]
    fn probs_rows(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        actions: &[Action],
        lut: &[u32],
        reach: &[f64],
        out: &mut [f64],
    ) {
        let mut p = [0.0f64; 3];
        for pid in 0..lut.len() {
            if reach[pid] != 0.0 {
                self.probs(actor, phase, slot, n_actions, actions, lut[pid], &mut p);
                out[pid * 3..pid * 3 + n_actions].copy_from_slice(&p[..n_actions]);
            }
        }
    }

    /// Strategies backed by big bucket-major tables can hand the evaluator
    /// a transposed, pre-normalized copy whose per-node lookups stay cache
    /// resident. Cheap closed-form strategies skip it.
    fn prepare(&self, _tree: &PublicTree) -> Option<PreparedSigma> {
        None
    }
}

/// Normalized action probabilities in slot-major layout: the entry for
/// action slot `s` and bucket `b` of (player, phase) table `i` sits at
/// `tables[i][s * bucket_count[i] + b]`. `translate[i]` maps canonical
/// class -> bucket.
pub struct PreparedSigma {
    tables: [Vec<f64>; 6],
    translate: [Vec<u32>; 6],
    bucket_count: [usize; 6],
}

impl PreparedSigma {
    /// Build from bucket-major accumulator rows (normalizing each node's
    /// action group; all-zero groups become uniform).
    ///
    /// `node_groups[i]` lists (slot, n_actions) per decision node of that
    /// (player, phase); `rows[i]` is bucket-major with `row_len[i]` slots
    /// per bucket.
    pub fn from_rows(
        rows: [&[f64]; 6],
        row_len: [u32; 6],
        bucket_count: [usize; 6],
        node_groups: &[Vec<(u32, u8)>; 6],
        translate: [Vec<u32>; 6],
    ) -> PreparedSigma {
        let mut tables: [Vec<f64>; 6] = Default::default();
        for i in 0..6 {
            let bc = bucket_count[i];
            let rl = row_len[i] as usize;
            let mut t = vec![0.0f64; rl * bc];
            for b in 0..bc {
                let row = &rows[i][b * rl..(b + 1) * rl];
                for &(slot, na) in &node_groups[i] {
                    let s = slot as usize;
                    let na = na as usize;
                    let sum: f64 = row[s..s + na].iter().sum();
                    if sum > 0.0 {
                        for a in 0..na {
                            t[(s + a) * bc + b] = row[s + a] / sum;
                        }
                    } else {
                        let u = 1.0 / na as f64;
                        for a in 0..na {
                            t[(s + a) * bc + b] = u;
                        }
                    }
                }
            }
            tables[i] = t;
        }
        PreparedSigma {
            tables,
            translate,
            bucket_count,
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn probs_rows(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        lut: &[u32],
        out: &mut [f64],
    ) {
        let i = actor as usize * PHASES + phase as usize - 1;
        let bc = self.bucket_count[i];
        let translate = &self.translate[i];
        let base = slot as usize * bc;
        for a in 0..n_actions {
            let table = &self.tables[i][base + a * bc..base + (a + 1) * bc];
            for (pid, &canon) in lut.iter().enumerate() {
                out[pid * 3 + a] = table[translate[canon as usize] as usize];
            }
        }
    }
}

/// Per-(player, phase) decision node groups (slot, n_actions) of a tree,
/// needed to normalize bucket rows node by node.
pub fn node_groups(tree: &PublicTree) -> [Vec<(u32, u8)>; 6] {
    let mut groups: [Vec<(u32, u8)>; 6] = Default::default();
    for (_, n) in tree.nodes() {
        if let NodeKind::Decision { actor } = n.kind {
            groups[actor as usize * PHASES + n.phase as usize - 1]
                .push((n.slot, n.actions.len() as u8));
        }
    }
    groups
}

/// Average strategy of trained profiles translated into the full game by
/// bucket lookup. The two seats may come from different profiles (the
/// one-sided evaluation protocol concatenates two trainings).
pub struct Translated<'a> {
    pub profiles: [&'a StrategyProfile; 2],
    pub maps: [&'a AbstractionMap; 2],
}

impl BehaviorStrategy for Translated<'_> {
    fn probs(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        _actions: &[Action],
        canonical: u32,
        out: &mut [f64; 3],
    ) {
        let bucket = self.maps[actor as usize].bucket(phase, canonical);
        self.profiles[actor as usize].average_probs(actor, phase, slot, n_actions, bucket, out);
    }

    fn prepare(&self, tree: &PublicTree) -> Option<PreparedSigma> {
        let groups = node_groups(tree);
        let mut rows: [&[f64]; 6] = [&[]; 6];
        let mut row_len = [0u32; 6];
        let mut bucket_count = [0usize; 6];
        let mut translate: [Vec<u32>; 6] = Default::default();
        for p in Player::BOTH {
            for phase in 1..=PHASES as u8 {
                let i = p as usize * PHASES + phase as usize - 1;
                rows[i] = self.profiles[p as usize].average_rows(p, phase);
                row_len[i] = self.profiles[p as usize].row_len_of(p, phase);
                bucket_count[i] = self.profiles[p as usize].bucket_count_of(p, phase) as usize;
                translate[i] = self.maps[p as usize].assignment(phase).to_vec();
            }
        }
        Some(PreparedSigma::from_rows(
            rows,
            row_len,
            bucket_count,
            &groups,
            translate,
        ))
    }
}

/// Uniform over legal actions everywhere.
pub struct UniformStrategy;

impl BehaviorStrategy for UniformStrategy {
    fn probs(
        &self,
        _actor: Player,
        _phase: u8,
        _slot: u32,
        n_actions: usize,
        _actions: &[Action],
        _canonical: u32,
        out: &mut [f64; 3],
    ) {
        out[..n_actions].fill(1.0 / n_actions as f64);
    }
}

/// Folds whenever facing a bet, otherwise checks.
pub struct AlwaysFold;

impl BehaviorStrategy for AlwaysFold {
    fn probs(
        &self,
        _actor: Player,
        _phase: u8,
        _slot: u32,
        n_actions: usize,
        actions: &[Action],
        _canonical: u32,
        out: &mut [f64; 3],
    ) {
        out[..n_actions].fill(0.0);
        let target = actions
            .iter()
            .position(|&a| a == Action::Fold)
            .or_else(|| actions.iter().position(|&a| a == Action::Check))
            .expect("fold or check is always available");
        out[target] = 1.0;
    }
}

/// Strategy read from per-infoset tables over the lossless bucket space;
/// tests use this to build arbitrary total strategies. Rows are indexed
/// like profile rows: canonical-class-major with the node slot offset.
pub struct TableStrategy {
    pub rows: [Vec<f64>; 6],
    pub row_len: [u32; 6],
}

impl BehaviorStrategy for TableStrategy {
    fn probs(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        _actions: &[Action],
        canonical: u32,
        out: &mut [f64; 3],
    ) {
        let i = actor as usize * PHASES + phase as usize - 1;
        let base = canonical as usize * self.row_len[i] as usize + slot as usize;
        let row = &self.rows[i][base..base + n_actions];
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            for a in 0..n_actions {
                out[a] = row[a] / sum;
            }
        } else {
            out[..n_actions].fill(1.0 / n_actions as f64);
        }
    }

    fn prepare(&self, tree: &PublicTree) -> Option<PreparedSigma> {
        let groups = node_groups(tree);
        let mut rows: [&[f64]; 6] = [&[]; 6];
        let mut bucket_count = [0usize; 6];
        let mut translate: [Vec<u32>; 6] = Default::default();
        for i in 0..6 {
            rows[i] = &self.rows[i];
            bucket_count[i] = if self.row_len[i] == 0 {
                0
            } else {
                self.rows[i].len() / self.row_len[i] as usize
            };
            translate[i] = (0..bucket_count[i] as u32).collect();
        }
        Some(PreparedSigma::from_rows(
            rows,
            self.row_len,
            bucket_count,
            &groups,
            translate,
        ))
    }
}

/// Per-board rank ordering of all hole pairs that avoid the board: pair
/// ids sorted ascending by showdown rank, with tie-group boundaries and
/// the two cards of each pair cached.
struct BoardTable {
    holes: Vec<(u16, u8, u8)>,
    groups: Vec<u32>,
}

/// Exact evaluator for one game. Construction precomputes per-board rank
/// tables; the instance is immutable and shareable afterwards.
pub struct Evaluator<'a> {
    game: &'a Game,
    iso: &'a IsoTables,
    boards: Vec<BoardTable>,
    /// pid -> its two card indices.
    pair_cards: Vec<(u8, u8)>,
    n: usize,
    pairs: usize,
}

/// How the evaluated player's own decisions are resolved.
#[derive(Clone, Copy)]
enum Responder<'s> {
    /// Pointwise maximum: exact best response.
    BestResponse,
    /// Fixed strategy: expected value of a profile pair.
    Fixed(&'s dyn BehaviorStrategy),
}

impl<'a> Evaluator<'a> {
    pub fn new(game: &'a Game, iso: &'a IsoTables) -> Evaluator<'a> {
        let n = game.num_cards();
        let ranks = game.rank_table();
        let card = crate::game::Card::from_index;
        let boards: Vec<BoardTable> = (0..(n * n) as u32)
            .into_par_iter()
            .map(|key| {
                let b1 = (key as usize / n) as u8;
                let b2 = (key as usize % n) as u8;
                if b1 == b2 {
                    return BoardTable {
                        holes: Vec::new(),
                        groups: Vec::new(),
                    };
                }
                let mut rated: Vec<(u32, u16, u8, u8)> = Vec::with_capacity(num_pairs(n - 2));
                for a in 0..n as u8 {
                    if a == b1 || a == b2 {
                        continue;
                    }
                    for b in a + 1..n as u8 {
                        if b == b1 || b == b2 {
                            continue;
                        }
                        let rank = ranks.rank4_code([card(a), card(b), card(b1), card(b2)]);
                        rated.push((rank, pair_id(n, a, b) as u16, a, b));
                    }
                }
                rated.sort_unstable();
                let mut groups = Vec::new();
                let mut last = None;
                for (i, &(rank, ..)) in rated.iter().enumerate() {
                    if last != Some(rank) {
                        groups.push(i as u32);
                        last = Some(rank);
                    }
                }
                groups.push(rated.len() as u32);
                BoardTable {
                    holes: rated.into_iter().map(|(_, p, a, b)| (p, a, b)).collect(),
                    groups,
                }
            })
            .collect();
        let mut pair_cards_tbl = vec![(0u8, 0u8); num_pairs(n)];
        for a in 0..n as u8 {
            for b in a + 1..n as u8 {
                pair_cards_tbl[pair_id(n, a, b)] = (a, b);
            }
        }
        Evaluator {
            game,
            iso,
            boards,
            pair_cards: pair_cards_tbl,
            n,
            pairs: num_pairs(n),
        }
    }

    /// Exact expected chips per game the best response earns for
    /// `responder` against `opponent`'s strategy.
    pub fn best_response_value(&self, responder: Player, opponent: &dyn BehaviorStrategy) -> f64 {
        let prep = opponent.prepare(self.game.tree());
        self.rollout(responder, Responder::BestResponse, opponent, prep.as_ref(), None)
    }

    /// Per-hole-pair best-response values at the root (each entry is the
    /// responder's expected chips holding that pair, averaged over the
    /// deal of everything else). The game value is their mean.
    pub fn best_response_per_hole(
        &self,
        responder: Player,
        opponent: &dyn BehaviorStrategy,
    ) -> Vec<f64> {
        let prep = opponent.prepare(self.game.tree());
        self.rollout_values(responder, Responder::BestResponse, opponent, prep.as_ref(), None)
    }

    /// Exact expected chips per game for `player` when both sides play
    /// fixed strategies.
    pub fn expected_value(
        &self,
        player: Player,
        own: &dyn BehaviorStrategy,
        opponent: &dyn BehaviorStrategy,
    ) -> f64 {
        let opp_prep = opponent.prepare(self.game.tree());
        let own_prep = own.prepare(self.game.tree());
        self.rollout(
            player,
            Responder::Fixed(own),
            opponent,
            opp_prep.as_ref(),
            own_prep.as_ref(),
        )
    }

    /// Exploitability of a strategy profile: the average of both
    /// best-response values (the equilibrium value terms of the zero-sum
    /// game cancel), in chips and milli-antes per game.
    pub fn exploitability(&self, strategy: &dyn BehaviorStrategy) -> ExploitabilityReport {
        let prep = strategy.prepare(self.game.tree());
        let br1 = self.rollout(
            Player::P1,
            Responder::BestResponse,
            strategy,
            prep.as_ref(),
            None,
        );
        let br2 = self.rollout(
            Player::P2,
            Responder::BestResponse,
            strategy,
            prep.as_ref(),
            None,
        );
        let chips = 0.5 * (br1 + br2);
        ExploitabilityReport {
            br_chips: [br1, br2],
            exploitability_chips: chips,
            exploitability_mb: self.game.rules().chips_to_milli_antes(chips),
        }
    }

    fn rollout(
        &self,
        responder: Player,
        mode: Responder<'_>,
        opponent: &dyn BehaviorStrategy,
        opp_prep: Option<&PreparedSigma>,
        own_prep: Option<&PreparedSigma>,
    ) -> f64 {
        let vals = self.rollout_values(responder, mode, opponent, opp_prep, own_prep);
        vals.iter().sum::<f64>() / self.pairs as f64
    }

    fn rollout_values(
        &self,
        responder: Player,
        mode: Responder<'_>,
        opponent: &dyn BehaviorStrategy,
        opp_prep: Option<&PreparedSigma>,
        own_prep: Option<&PreparedSigma>,
    ) -> Vec<f64> {
        let tree = self.game.tree();
        // Conditional opponent-hole distribution given any responder hole.
        let init_reach = 1.0 / num_pairs(self.n - 2) as f64;
        let opp_reach = vec![init_reach; self.pairs];
        let lut1: Vec<u32> = (0..self.pairs)
            .map(|pid| self.iso.index_raw(1, pid, 0, 0))
            .collect();
        let mut walker = Walker {
            ev: self,
            tree,
            responder,
            mode,
            opponent,
            opp_prep,
            own_prep,
            pool: Vec::new(),
            card_a: vec![0.0; self.n],
            card_b: vec![0.0; self.n],
            card_c: vec![0.0; self.n],
        };
        let mut vals = vec![0.0f64; self.pairs];
        let root_child = tree.node(tree.root()).children[0];
        walker.eval(root_child, u8::MAX, u8::MAX, &lut1, &opp_reach, &mut vals);
        vals
    }
}

struct Walker<'e, 's> {
    ev: &'e Evaluator<'e>,
    tree: &'e PublicTree,
    responder: Player,
    mode: Responder<'s>,
    opponent: &'s dyn BehaviorStrategy,
    opp_prep: Option<&'s PreparedSigma>,
    own_prep: Option<&'s PreparedSigma>,
    pool: Vec<Vec<f64>>,
    // Leaf scratch, reused across leaves (never live across recursion).
    card_a: Vec<f64>,
    card_b: Vec<f64>,
    card_c: Vec<f64>,
}

impl Walker<'_, '_> {
    fn get_buf(&mut self, len: usize) -> Vec<f64> {
        let mut b = self.pool.pop().unwrap_or_default();
        b.clear();
        b.resize(len, 0.0);
        b
    }

    fn put_buf(&mut self, b: Vec<f64>) {
        self.pool.push(b);
    }

    fn eval(
        &mut self,
        node_id: NodeId,
        b1: u8,
        b2: u8,
        lut: &[u32],
        opp_reach: &[f64],
        out: &mut [f64],
    ) {
        let ev = self.ev;
        let n = ev.n;
        let pairs = ev.pairs;
        let node = self.tree.node(node_id);
        match node.kind {
            NodeKind::Chance => {
                // Branch over the next board card. For any fixed pair of
                // holes the number of feasible cards is constant, so each
                // branch carries weight 1/(cards - 4 seen by both); card
                // conflicts zero out per hole on both sides.
                let phase = node.phase;
                let weight = 1.0 / (n - 4 - (phase as usize - 2)) as f64;
                let child = node.children[0];
                let run_branch = |walker: &mut Walker, c: u8, vals: &mut [f64]| {
                    let (nb1, nb2) = if phase == 2 { (c, u8::MAX) } else { (b1, c) };
                    let mut reach = walker.get_buf(pairs);
                    reach.copy_from_slice(opp_reach);
                    for other in 0..n as u8 {
                        if other != c {
                            let (x, y) = if other < c { (other, c) } else { (c, other) };
                            reach[pair_id(n, x, y)] = 0.0;
                        }
                    }
                    // Holes clashing with the board have no class; their
                    // reach is zero and their values cancel upstream, so
                    // any in-range class stands in.
                    let lut_next: Vec<u32> = (0..pairs)
                        .map(|pid| {
                            let v = ev.iso.index_raw(phase, pid, nb1, nb2);
                            if v == u32::MAX {
                                0
                            } else {
                                v
                            }
                        })
                        .collect();
                    walker.eval(child, nb1, nb2, &lut_next, &reach, vals);
                    walker.put_buf(reach);
                };
                if phase == 2 {
                    // Top-level board split: parallel branches, ordered
                    // deterministic reduction.
                    let branches: Vec<Vec<f64>> = (0..n as u8)
                        .into_par_iter()
                        .map(|c| {
                            let mut vals = vec![0.0f64; pairs];
                            if c != b1 && c != b2 {
                                let mut w = Walker {
                                    ev: self.ev,
                                    tree: self.tree,
                                    responder: self.responder,
                                    mode: self.mode,
                                    opponent: self.opponent,
                                    opp_prep: self.opp_prep,
                                    own_prep: self.own_prep,
                                    pool: Vec::new(),
                                    card_a: vec![0.0; n],
                                    card_b: vec![0.0; n],
                                    card_c: vec![0.0; n],
                                };
                                run_branch(&mut w, c, &mut vals);
                            }
                            vals
                        })
                        .collect();
                    for (c, branch) in branches.iter().enumerate() {
                        let c = c as u8;
                        if c == b1 || c == b2 {
                            continue;
                        }
                        accumulate_branch(out, branch, weight, c, n);
                    }
                } else {
                    let mut vals = self.get_buf(pairs);
                    for c in 0..n as u8 {
                        if c == b1 || c == b2 {
                            continue;
                        }
                        vals.iter_mut().for_each(|v| *v = 0.0);
                        run_branch(self, c, &mut vals);
                        accumulate_branch(out, &vals, weight, c, n);
                    }
                    self.put_buf(vals);
                }
            }
            NodeKind::Decision { actor } => {
                let na = node.actions.len();
                if actor == self.responder {
                    let mut child_vals: Vec<Vec<f64>> = Vec::with_capacity(na);
                    for a in 0..na {
                        let mut vals = self.get_buf(pairs);
                        self.eval(node.children[a], b1, b2, lut, opp_reach, &mut vals);
                        child_vals.push(vals);
                    }
                    match self.mode {
                        Responder::BestResponse => {
                            for pid in 0..pairs {
                                let mut best = f64::NEG_INFINITY;
                                for vals in child_vals.iter() {
                                    if vals[pid] > best {
                                        best = vals[pid];
                                    }
                                }
                                out[pid] = best;
                            }
                        }
                        Responder::Fixed(own) => {
                            let mut probs = self.get_buf(pairs * 3);
                            if let Some(prep) = self.own_prep {
                                prep.probs_rows(actor, node.phase, node.slot, na, lut, &mut probs);
                            } else {
                                let ones = self.get_buf(pairs);
                                let mut ones = ones;
                                ones.iter_mut().for_each(|v| *v = 1.0);
                                own.probs_rows(
                                    actor,
                                    node.phase,
                                    node.slot,
                                    na,
                                    &node.actions,
                                    lut,
                                    &ones,
                                    &mut probs,
                                );
                                self.put_buf(ones);
                            }
                            for pid in 0..pairs {
                                let mut v = 0.0;
                                for (a, vals) in child_vals.iter().enumerate() {
                                    v += probs[pid * 3 + a] * vals[pid];
                                }
                                out[pid] = v;
                            }
                            self.put_buf(probs);
                        }
                    }
                    for vals in child_vals {
                        self.put_buf(vals);
                    }
                } else {
                    let mut probs = self.get_buf(pairs * 3);
                    if let Some(prep) = self.opp_prep {
                        prep.probs_rows(actor, node.phase, node.slot, na, lut, &mut probs);
                    } else {
                        self.opponent.probs_rows(
                            actor,
                            node.phase,
                            node.slot,
                            na,
                            &node.actions,
                            lut,
                            opp_reach,
                            &mut probs,
                        );
                    }
                    let mut reach = self.get_buf(pairs);
                    let mut tmp = self.get_buf(pairs);
                    for a in 0..na {
                        let mut mass = 0.0;
                        for pid in 0..pairs {
                            let r = opp_reach[pid] * probs[pid * 3 + a];
                            reach[pid] = r;
                            mass += r;
                        }
                        // A zero-mass action contributes nothing anywhere
                        // below; skip the subtree.
                        if mass == 0.0 {
                            continue;
                        }
                        tmp.iter_mut().for_each(|v| *v = 0.0);
                        self.eval(node.children[a], b1, b2, lut, &reach, &mut tmp);
                        for pid in 0..pairs {
                            out[pid] += tmp[pid];
                        }
                    }
                    self.put_buf(tmp);
                    self.put_buf(reach);
                    self.put_buf(probs);
                }
            }
            NodeKind::Fold { folder } => {
                let value = if folder == self.responder {
                    -node.committed[self.responder as usize] as f64
                } else {
                    node.committed[folder as usize] as f64
                };
                let total = reach_sums(opp_reach, &ev.pair_cards, &mut self.card_a);
                for (pid, o) in out.iter_mut().enumerate() {
                    let (a, b) = ev.pair_cards[pid];
                    *o = value
                        * (total - self.card_a[a as usize] - self.card_a[b as usize]
                            + opp_reach[pid]);
                }
            }
            NodeKind::Showdown => {
                let stake = node.committed[0] as f64;
                let table = &ev.boards[b1 as usize * n + b2 as usize];
                let total = reach_sums(opp_reach, &ev.pair_cards, &mut self.card_a);
                // Ascending rank pass with card removal: below_* track the
                // mass of strictly worse opponent holes, grp_* the current
                // tie group.
                let below_card = &mut self.card_b;
                let grp_card = &mut self.card_c;
                below_card.iter_mut().for_each(|v| *v = 0.0);
                let mut below_total = 0.0;
                for g in table.groups.windows(2) {
                    let (start, end) = (g[0] as usize, g[1] as usize);
                    grp_card.iter_mut().for_each(|v| *v = 0.0);
                    let mut grp_total = 0.0;
                    for &(pid16, a, b) in &table.holes[start..end] {
                        let r = opp_reach[pid16 as usize];
                        if r != 0.0 {
                            grp_total += r;
                            grp_card[a as usize] += r;
                            grp_card[b as usize] += r;
                        }
                    }
                    for &(pid16, a, b) in &table.holes[start..end] {
                        let pid = pid16 as usize;
                        let win =
                            below_total - below_card[a as usize] - below_card[b as usize];
                        let tie = grp_total - grp_card[a as usize] - grp_card[b as usize]
                            + opp_reach[pid];
                        let all = total - self.card_a[a as usize] - self.card_a[b as usize]
                            + opp_reach[pid];
                        let lose = all - win - tie;
                        out[pid] = stake * (win - lose);
                    }
                    below_total += grp_total;
                    for c in 0..n {
                        below_card[c] += grp_card[c];
                    }
                }
            }
        }
    }
}

/// Add a chance branch into the parent accumulator, cancelling responder
/// holes that contain the dealt card.
fn accumulate_branch(out: &mut [f64], branch: &[f64], weight: f64, c: u8, n: usize) {
    for (o, b) in out.iter_mut().zip(branch) {
        *o += weight * b;
    }
    for other in 0..n as u8 {
        if other != c {
            let (x, y) = if other < c { (other, c) } else { (c, other) };
            let pid = pair_id(n, x, y);
            out[pid] -= weight * branch[pid];
        }
    }
}

/// Total reach and per-card reach sums.
fn reach_sums(reach: &[f64], pair_cards: &[(u8, u8)], per_card: &mut [f64]) -> f64 {
    per_card.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for (pid, &r) in reach.iter().enumerate() {
        if r != 0.0 {
            total += r;
            let (a, b) = pair_cards[pid];
            per_card[a as usize] += r;
            per_card[b as usize] += r;
        }
    }
    total
}

/// Best-response values and exploitability of one evaluated profile.
#[derive(Clone, Copy, Debug)]
pub struct ExploitabilityReport {
    pub br_chips: [f64; 2],
    pub exploitability_chips: f64,
    pub exploitability_mb: f64,
}

/// Train both seats on `map` and evaluate the translated average strategy
/// in the full game.
pub fn evaluate_symmetric(
    game: &Game,
    iso: &IsoTables,
    map: &AbstractionMap,
    iterations: u64,
    seed: u64,
) -> Result<(ExploitabilityReport, StrategyProfile)> {
    let binding = Binding {
        game,
        iso,
        maps: [map, map],
    };
    let mut trainer = Trainer::new(binding, seed);
    trainer.run(iterations);
    let profile = trainer.into_profile();
    let evaluator = Evaluator::new(game, iso);
    let strategy = Translated {
        profiles: [&profile, &profile],
        maps: [map, map],
    };
    Ok((evaluator.exploitability(&strategy), profile))
}

/// One-sided protocol: train (map, null) and (null, map), concatenate the
/// abstracted seats and evaluate. The lossless map serves as the null
/// abstraction.
pub fn evaluate_asymmetric(
    game: &Game,
    iso: &IsoTables,
    map: &AbstractionMap,
    null_map: &AbstractionMap,
    iterations: u64,
    seed: u64,
) -> Result<ExploitabilityReport> {
    let binding_a = Binding {
        game,
        iso,
        maps: [map, null_map],
    };
    let profile_a = crate::solver::train(binding_a, iterations, seed);
    let binding_b = Binding {
        game,
        iso,
        maps: [null_map, map],
    };
    let profile_b = crate::solver::train(binding_b, iterations, seed);
    let evaluator = Evaluator::new(game, iso);
    let strategy = Translated {
        profiles: [&profile_a, &profile_b],
        maps: [map, map],
    };
    Ok(evaluator.exploitability(&strategy))
}
