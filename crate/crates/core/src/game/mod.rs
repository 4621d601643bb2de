//! Exact rules engine for Numeral211 hold'em.
//!
//! Two players ante 5 chips each into the pot. The deck has 40 cards: ranks
//! 2–9, T and A in four suits. Phase 1 deals two private cards to each
//! player; phases 2 and 3 each reveal one community card. Every phase has a
//! fixed-limit betting round (bet/raise size 10 in phase 1, 20 afterwards,
//! at most 3 raises per phase). Player 1 opens phase 1; player 2 opens
//! phases 2 and 3. A fold awards the pot to the opponent; reaching the end
//! of phase 3 without a fold triggers a showdown where the strongest
//! three-card combination out of each player's two hole cards plus the two
//! board cards wins.
//!
//! The public betting tree is identical for every deal, which lets the
//! solver and evaluator factor the game into a public tree crossed with a
//! signal (card) tree.

mod card;
mod deal;
mod rank;
mod rules;
mod tree;

pub use card::{Card, Suit};
pub use deal::{for_each_observation, observation_count, Observation, Signal};
pub use rank::{category_frequencies, HandCategory, HandOrder, HandRank, RankTable};
pub use rules::GameRules;
pub use tree::{Action, NodeId, NodeKind, Player, PublicNode, PublicTree};

use crate::Result;

/// Total number of phases; the last board card appears entering phase 3.
pub const PHASES: usize = 3;

/// A fully configured game: rules plus the public betting tree and the
/// 3-card rank lookup table derived from them.
#[derive(Debug)]
pub struct Game {
    rules: GameRules,
    tree: PublicTree,
    ranks: RankTable,
}

impl Game {
    pub fn new(rules: GameRules) -> Result<Game> {
        rules.validate()?;
        let tree = PublicTree::build(&rules);
        let ranks = RankTable::new(&rules);
        Ok(Game { rules, tree, ranks })
    }

    /// The standard Numeral211 hold'em game.
    pub fn numeral211() -> Game {
        Game::new(GameRules::default()).expect("default rules are valid")
    }

    pub fn rules(&self) -> &GameRules {
        &self.rules
    }

    pub fn tree(&self) -> &PublicTree {
        &self.tree
    }

    pub fn rank_table(&self) -> &RankTable {
        &self.ranks
    }

    pub fn num_cards(&self) -> usize {
        self.rules.num_ranks as usize * 4
    }

    /// All cards of the configured deck in encoding order.
    pub fn deck(&self) -> impl Iterator<Item = Card> + '_ {
        (0..self.num_cards() as u8).map(Card::from_index)
    }

    /// Best three-card rank out of two hole cards plus the two board cards.
    pub fn hand_rank(&self, hole: [Card; 2], board: [Card; 2]) -> Result<HandRank> {
        let cards = [hole[0], hole[1], board[0], board[1]];
        for i in 0..4 {
            for j in i + 1..4 {
                if cards[i] == cards[j] {
                    return Err(crate::Error::DuplicateCard("hand_rank"));
                }
            }
        }
        Ok(self.ranks.rank4(cards))
    }

    /// Chip payoff for both players at a terminal node under `signal`,
    /// measured net of the game start (antes included). Always zero-sum.
    pub fn showdown_utility(&self, node: NodeId, signal: &Signal) -> Result<[i32; 2]> {
        let n = self.tree.node(node);
        match n.kind {
            NodeKind::Fold { folder } => {
                let winner = folder.opponent();
                let mut u = [0i32; 2];
                u[winner as usize] = n.committed[folder as usize];
                u[folder as usize] = -n.committed[folder as usize];
                Ok(u)
            }
            NodeKind::Showdown => {
                debug_assert_eq!(n.committed[0], n.committed[1]);
                let board = signal.full_board().ok_or(crate::Error::BadObservation(
                    "showdown requires a complete board",
                ))?;
                let r1 = self.ranks.rank4_code([
                    signal.hole(Player::P1)[0],
                    signal.hole(Player::P1)[1],
                    board[0],
                    board[1],
                ]);
                let r2 = self.ranks.rank4_code([
                    signal.hole(Player::P2)[0],
                    signal.hole(Player::P2)[1],
                    board[0],
                    board[1],
                ]);
                let stake = n.committed[0];
                Ok(match r1.cmp(&r2) {
                    std::cmp::Ordering::Greater => [stake, -stake],
                    std::cmp::Ordering::Less => [-stake, stake],
                    std::cmp::Ordering::Equal => [0, 0],
                })
            }
            _ => Err(crate::Error::TerminalNode),
        }
    }
}
