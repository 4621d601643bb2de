use super::rank::HandOrder;
use crate::{Error, Result};

/// Game parameters. `GameRules::default()` is the standard Numeral211
/// hold'em game; the other constructors build reduced instances used by
/// small exact oracles in the tests.
#[derive(Clone, Copy, Debug)]
pub struct GameRules {
    /// Number of ranks in the deck (4 suits each). 10 is the full deck
    /// (2–9, T, A); reduced decks keep the lowest `num_ranks` numerals and
    /// contain no ace.
    pub num_ranks: u8,
    /// Ante posted by each player before the deal.
    pub ante: i32,
    /// Bet/raise size per phase.
    pub bet_size: [i32; 3],
    /// Maximum number of raises per phase (the opening bet is not a raise).
    pub max_raises: u8,
    /// Phases that have a live betting round; later phases check down
    /// automatically. 3 = normal game, 1 = phase-1-only toy game.
    pub betting_phases: u8,
    /// A-2-3 counts as a straight. Off in the standard game: the ace plays
    /// high only (this is what reproduces the published class counts).
    pub wheel_straight: bool,
    /// 9-T-A counts as a straight.
    pub ace_high_straight: bool,
    /// When the wheel is on, it is the lowest straight (otherwise it beats
    /// 9-T-A).
    pub wheel_is_lowest: bool,
    /// Category strength ordering.
    pub hand_order: HandOrder,
}

impl Default for GameRules {
    fn default() -> Self {
        GameRules {
            num_ranks: 10,
            ante: 5,
            bet_size: [10, 20, 20],
            max_raises: 3,
            betting_phases: 3,
            wheel_straight: false,
            ace_high_straight: true,
            wheel_is_lowest: true,
            hand_order: HandOrder::default(),
        }
    }
}

impl GameRules {
    /// Reduced deck, full betting structure.
    pub fn with_ranks(num_ranks: u8) -> GameRules {
        GameRules {
            num_ranks,
            ..GameRules::default()
        }
    }

    /// Betting in phase 1 only; phases 2 and 3 check down. Used by the
    /// solver convergence tests.
    pub fn check_down_toy(num_ranks: u8) -> GameRules {
        GameRules {
            num_ranks,
            betting_phases: 1,
            ..GameRules::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ranks < 3 || self.num_ranks > 10 {
            return Err(Error::Config(format!(
                "num_ranks {} out of range 3..=10",
                self.num_ranks
            )));
        }
        // Need 6 cards for a deal plus at least one opponent hole pair.
        if self.num_cards() < 8 {
            return Err(Error::Config("deck too small for a deal".into()));
        }
        if self.betting_phases == 0 || self.betting_phases > 3 {
            return Err(Error::Config("betting_phases must be 1..=3".into()));
        }
        if self.ante <= 0 || self.bet_size.iter().any(|&b| b <= 0) {
            return Err(Error::Config("chip sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn num_cards(&self) -> usize {
        self.num_ranks as usize * 4
    }

    /// Milli-antes per chip: exploitability is reported in thousandths of
    /// an ante.
    pub fn chips_to_milli_antes(&self, chips: f64) -> f64 {
        chips * 1000.0 / self.ante as f64
    }
}
