use super::card::Card;
use super::tree::Player;
use super::PHASES;
use crate::{Error, Result};

/// The cards dealt so far: two hole cards per player plus the board cards
/// revealed up to the current phase (one entering phase 2, one entering
/// phase 3). Hole pairs are stored sorted; the board keeps reveal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signal {
    holes: [[Card; 2]; 2],
    board: [Card; PHASES - 1],
    depth: u8,
}

impl Signal {
    /// A signal at phase `1 + board.len()`.
    pub fn deal(mut holes: [[Card; 2]; 2], board: &[Card]) -> Result<Signal> {
        if board.len() > PHASES - 1 {
            return Err(Error::BadObservation("board too long"));
        }
        let mut all: Vec<Card> = holes.iter().flatten().copied().collect();
        all.extend_from_slice(board);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i] == all[j] {
                    return Err(Error::DuplicateCard("signal"));
                }
            }
        }
        holes[0].sort_unstable();
        holes[1].sort_unstable();
        let mut b = [Card::from_index(0); PHASES - 1];
        b[..board.len()].copy_from_slice(board);
        Ok(Signal {
            holes,
            board: b,
            depth: 1 + board.len() as u8,
        })
    }

    pub fn phase(&self) -> u8 {
        self.depth
    }

    pub fn hole(&self, p: Player) -> [Card; 2] {
        self.holes[p as usize]
    }

    pub fn board(&self) -> &[Card] {
        &self.board[..(self.depth - 1) as usize]
    }

    pub fn full_board(&self) -> Option<[Card; 2]> {
        (self.depth as usize == PHASES).then(|| self.board)
    }

    /// The predecessor signal: truncate the last reveal.
    pub fn parent(&self) -> Option<Signal> {
        (self.depth > 1).then(|| Signal {
            holes: self.holes,
            board: self.board,
            depth: self.depth - 1,
        })
    }

    /// What `player` sees of this signal.
    pub fn observe(&self, player: Player) -> Observation {
        Observation {
            hole: self.holes[player as usize],
            board: self.board,
            phase: self.depth,
        }
    }
}

/// One player's view of a signal: own hole cards plus the board revealed so
/// far. This is the formal stand-in for a "hand".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    hole: [Card; 2],
    board: [Card; PHASES - 1],
    phase: u8,
}

impl Observation {
    pub fn new(mut hole: [Card; 2], board: &[Card]) -> Result<Observation> {
        if board.len() > PHASES - 1 {
            return Err(Error::BadObservation("board too long"));
        }
        let mut all = vec![hole[0], hole[1]];
        all.extend_from_slice(board);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i] == all[j] {
                    return Err(Error::DuplicateCard("observation"));
                }
            }
        }
        hole.sort_unstable();
        let mut b = [Card::from_index(0); PHASES - 1];
        b[..board.len()].copy_from_slice(board);
        Ok(Observation {
            hole,
            board: b,
            phase: 1 + board.len() as u8,
        })
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn hole(&self) -> [Card; 2] {
        self.hole
    }

    pub fn board(&self) -> &[Card] {
        &self.board[..(self.phase - 1) as usize]
    }

    /// The observation one phase earlier (drop the last board card).
    pub fn parent(&self) -> Option<Observation> {
        (self.phase > 1).then(|| Observation {
            hole: self.hole,
            board: self.board,
            phase: self.phase - 1,
        })
    }

    pub fn cards(&self) -> Vec<Card> {
        let mut v = vec![self.hole[0], self.hole[1]];
        v.extend_from_slice(self.board());
        v
    }
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.hole[0], self.hole[1])?;
        if self.phase > 1 {
            write!(f, "|")?;
            for c in self.board() {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// Visit every raw observation infoset of a phase: all unordered hole pairs
/// crossed with all ordered board prefixes. The view is identical for both
/// players, so `player` does not change the enumeration.
pub fn for_each_observation<F: FnMut(Observation)>(
    num_cards: usize,
    _player: Player,
    phase: u8,
    mut f: F,
) -> Result<()> {
    if phase == 0 || phase as usize > PHASES {
        return Err(Error::BadPhase(phase, PHASES as u8));
    }
    let n = num_cards as u8;
    for a in 0..n {
        for b in a + 1..n {
            let hole = [Card::from_index(a), Card::from_index(b)];
            match phase {
                1 => f(Observation::new(hole, &[]).unwrap()),
                2 => {
                    for c in 0..n {
                        if c != a && c != b {
                            f(Observation::new(hole, &[Card::from_index(c)]).unwrap());
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
                            f(Observation::new(
                                hole,
                                &[Card::from_index(c), Card::from_index(d)],
                            )
                            .unwrap());
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Number of raw observation infosets of a phase.
pub fn observation_count(num_cards: usize, phase: u8) -> u64 {
    let n = num_cards as u64;
    let holes = n * (n - 1) / 2;
    match phase {
        1 => holes,
        2 => holes * (n - 2),
        _ => holes * (n - 2) * (n - 3),
    }
}
