//! Shared oracles for the integration tests. Everything here is written
//! independently of the production code paths it checks: the LP solver is
//! a dense two-phase tableau simplex (the library uses a cumulative-sum
//! formula and a transportation simplex), and the naive best response
//! enumerates per-hole scalar values with explicit opponent loops (the
//! library vectorizes over hole pairs with rank-sorted aggregation).

use numeral211::clustering::GroundDistanceMatrix;
use numeral211::evaluator::BehaviorStrategy;
use numeral211::game::{Action, Card, Game, NodeKind, Observation, Player, PublicTree};
use numeral211::iso::{num_pairs, pair_id, IsoTables};

// ---------------------------------------------------------------------
// Two-phase tableau simplex

/// Minimize c.x subject to A x = b, x >= 0, with b >= 0. Panics on
/// infeasible input (test oracle; inputs are feasible by construction).
pub fn solve_lp_equality(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
    let m = a.len();
    let n = c.len();
    // Tableau columns: n structural + m artificial + rhs.
    let cols = n + m + 1;
    let mut t = vec![vec![0.0f64; cols]; m];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols - 1] = b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let phase1_cost: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    simplex_iterate(&mut t, &mut basis, &phase1_cost);
    let infeasibility: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n)
        .map(|(i, _)| t[i][cols - 1])
        .sum();
    assert!(
        infeasibility.abs() < 1e-7,
        "LP oracle: infeasible system (residual {infeasibility})"
    );

    // Phase 2: original costs; artificials are forbidden from re-entering.
    let mut phase2_cost: Vec<f64> = c.to_vec();
    phase2_cost.extend(std::iter::repeat(f64::INFINITY).take(m));
    simplex_iterate(&mut t, &mut basis, &phase2_cost);

    basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj < n)
        .map(|(i, &bj)| c[bj] * t[i][cols - 1])
        .sum()
}

/// Bland's rule pivoting until no improving column remains.
fn simplex_iterate(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64]) {
    let m = t.len();
    let cols = t[0].len();
    let nvars = cols - 1;
    for _ in 0..20_000 {
        // Duals via the basis costs, then reduced costs.
        let mut entering = None;
        for j in 0..nvars {
            if cost[j].is_infinite() || basis.contains(&j) {
                continue;
            }
            let mut reduced = cost[j];
            for i in 0..m {
                let cb = cost[basis[i]];
                if cb.is_finite() && cb != 0.0 {
                    reduced -= cb * t[i][j];
                }
            }
            if reduced < -1e-10 {
                entering = Some(j); // Bland: first improving index
                break;
            }
        }
        let Some(e) = entering else {
            return;
        };
        // Ratio test, Bland ties by lowest basis variable.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][e] > 1e-12 {
                let ratio = t[i][cols - 1] / t[i][e];
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12
                        && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return; // unbounded cannot happen for transportation inputs
        };
        // Pivot.
        let pivot = t[l][e];
        for v in t[l].iter_mut() {
            *v /= pivot;
        }
        for i in 0..m {
            if i != l && t[i][e].abs() > 1e-14 {
                let f = t[i][e];
                for j in 0..cols {
                    let upd = t[l][j] * f;
                    t[i][j] -= upd;
                }
            }
        }
        basis[l] = e;
    }
    panic!("LP oracle: pivot limit exceeded");
}

/// Transportation cost between two histograms by the tableau simplex.
pub fn lp_emd(p: &[f64], q: &[f64], d: &GroundDistanceMatrix) -> f64 {
    let n = p.len();
    let m = q.len();
    let mut a = vec![vec![0.0f64; n * m]; n + m];
    let mut b = vec![0.0f64; n + m];
    let mut c = vec![0.0f64; n * m];
    for i in 0..n {
        for j in 0..m {
            a[i][i * m + j] = 1.0;
            a[n + j][i * m + j] = 1.0;
            c[i * m + j] = d.get(i, j);
        }
    }
    b[..n].copy_from_slice(p);
    b[n..].copy_from_slice(q);
    solve_lp_equality(&a, &b, &c)
}

// ---------------------------------------------------------------------
// Naive per-infoset expectimax best response

/// Deliberately plain best response: for each responder hole pair, walk
/// the betting tree over every board completion, carrying per-opponent
/// reach as a flat array and evaluating terminals with explicit loops and
/// direct rank computation. Only the opponent's strategy rows are
/// precomputed per board (a pure lookup table; the aggregation stays
/// naive). Returns per-hole root values in pair-id order.
pub fn naive_best_response_per_hole(
    game: &Game,
    iso: &IsoTables,
    responder: Player,
    opponent: &dyn BehaviorStrategy,
    holes: &[usize],
) -> Vec<f64> {
    let n = game.num_cards();
    let pairs = num_pairs(n);
    let tree = game.tree();
    let pair_cards: Vec<(u8, u8)> = {
        let mut v = vec![(0u8, 0u8); pairs];
        for a in 0..n as u8 {
            for b in a + 1..n as u8 {
                v[pair_id(n, a, b)] = (a, b);
            }
        }
        v
    };

    holes
        .iter()
        .map(|&hole_pid| {
            let (h0, h1) = pair_cards[hole_pid];
            // Opponent prior: uniform over pairs avoiding the hole.
            let mut reach = vec![0.0f64; pairs];
            let prior = 1.0 / num_pairs(n - 2) as f64;
            for (pid, r) in reach.iter_mut().enumerate() {
                let (a, b) = pair_cards[pid];
                if a != h0 && a != h1 && b != h0 && b != h1 {
                    *r = prior;
                }
            }
            let root_child = tree.node(tree.root()).children[0];
            let mut ctx = NaiveCtx {
                game,
                iso,
                tree,
                opponent,
                responder,
                pair_cards: &pair_cards,
                n,
                pairs,
                hole: (h0, h1),
            };
            ctx.value(root_child, &[], &reach)
        })
        .collect()
}

struct NaiveCtx<'a> {
    game: &'a Game,
    iso: &'a IsoTables,
    tree: &'a PublicTree,
    opponent: &'a dyn BehaviorStrategy,
    responder: Player,
    pair_cards: &'a [(u8, u8)],
    n: usize,
    pairs: usize,
    hole: (u8, u8),
}

impl NaiveCtx<'_> {
    fn value(&mut self, node_id: u32, board: &[u8], reach: &[f64]) -> f64 {
        let node = self.tree.node(node_id);
        match node.kind {
            NodeKind::Chance => {
                if board.is_empty() && node.phase == 1 {
                    unreachable!("root chance handled by caller");
                }
                let weight = 1.0 / (self.n - 4 - board.len()) as f64;
                let mut total = 0.0;
                for c in 0..self.n as u8 {
                    if c == self.hole.0 || c == self.hole.1 || board.contains(&c) {
                        continue;
                    }
                    let mut next_board = board.to_vec();
                    next_board.push(c);
                    let mut next_reach = reach.to_vec();
                    for (pid, r) in next_reach.iter_mut().enumerate() {
                        let (a, b) = self.pair_cards[pid];
                        if a == c || b == c {
                            *r = 0.0;
                        }
                    }
                    total += weight * self.value(node.children[0], &next_board, &next_reach);
                }
                total
            }
            NodeKind::Decision { actor } => {
                if actor == self.responder {
                    let mut best = f64::NEG_INFINITY;
                    for a in 0..node.actions.len() {
                        best = best.max(self.value(node.children[a], board, reach));
                    }
                    best
                } else {
                    let na = node.actions.len();
                    let mut total = 0.0;
                    for a in 0..na {
                        let mut next_reach = vec![0.0f64; self.pairs];
                        for pid in 0..self.pairs {
                            if reach[pid] == 0.0 {
                                continue;
                            }
                            let probs =
                                self.opp_probs(actor, node.phase, node.slot, na, &node.actions, pid, board);
                            next_reach[pid] = reach[pid] * probs[a];
                        }
                        total += self.value(node.children[a], board, &next_reach);
                    }
                    total
                }
            }
            NodeKind::Fold { folder } => {
                let value = if folder == self.responder {
                    -node.committed[self.responder as usize] as f64
                } else {
                    node.committed[folder as usize] as f64
                };
                let mut mass = 0.0;
                for pid in 0..self.pairs {
                    if reach[pid] > 0.0 {
                        mass += reach[pid];
                    }
                }
                value * mass
            }
            NodeKind::Showdown => {
                let stake = node.committed[0] as f64;
                let rank = self.game.rank_table();
                let card = Card::from_index;
                let my_rank = rank.rank4_code([
                    card(self.hole.0),
                    card(self.hole.1),
                    card(board[0]),
                    card(board[1]),
                ]);
                let mut total = 0.0;
                for pid in 0..self.pairs {
                    if reach[pid] == 0.0 {
                        continue;
                    }
                    let (a, b) = self.pair_cards[pid];
                    let theirs =
                        rank.rank4_code([card(a), card(b), card(board[0]), card(board[1])]);
                    total += reach[pid]
                        * match my_rank.cmp(&theirs) {
                            std::cmp::Ordering::Greater => stake,
                            std::cmp::Ordering::Less => -stake,
                            std::cmp::Ordering::Equal => 0.0,
                        };
                }
                total
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn opp_probs(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        na: usize,
        actions: &[Action],
        pid: usize,
        board: &[u8],
    ) -> [f64; 3] {
        let (a, b) = self.pair_cards[pid];
        let cards: Vec<Card> = board.iter().map(|&c| Card::from_index(c)).collect();
        let obs = Observation::new([Card::from_index(a), Card::from_index(b)], &cards)
            .expect("live opponent holes never clash with the board");
        let canonical = self.iso.index_of_obs(&obs);
        let mut out = [0.0f64; 3];
        self.opponent
            .probs(actor, phase, slot, na, actions, canonical, &mut out);
        out
    }
}
