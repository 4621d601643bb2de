use std::fmt;
use std::str::FromStr;

use crate::Error;

/// One of the four suits. The numeric order is only an encoding detail;
/// suits never affect hand strength ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Suit {
    Spades = 0,
    Hearts = 1,
    Clubs = 2,
    Diamonds = 3,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Spades, Suit::Hearts, Suit::Clubs, Suit::Diamonds];

    pub fn from_index(i: u8) -> Suit {
        Suit::ALL[i as usize]
    }

    pub fn ch(self) -> char {
        match self {
            Suit::Spades => 's',
            Suit::Hearts => 'h',
            Suit::Clubs => 'c',
            Suit::Diamonds => 'd',
        }
    }
}

/// A card, packed as `rank * 4 + suit`.
///
/// Rank indices run from 0 for the deuce up to 9 for the ace, so the full
/// deck order is 2,3,4,5,6,7,8,9,T,A and index order equals high-card
/// strength order. Reduced decks (used by small test instances) keep the
/// lowest `num_ranks` numerals and contain no ace.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Card(u8);

/// Rank index of the ace in the full 10-rank deck.
pub const ACE: u8 = 9;

const RANK_CHARS: [char; 10] = ['2', '3', '4', '5', '6', '7', '8', '9', 'T', 'A'];

impl Card {
    pub fn new(rank: u8, suit: Suit) -> Card {
        debug_assert!(rank < 10);
        Card(rank * 4 + suit as u8)
    }

    pub fn from_index(i: u8) -> Card {
        Card(i)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn rank(self) -> u8 {
        self.0 / 4
    }

    pub fn suit(self) -> Suit {
        Suit::from_index(self.0 % 4)
    }

    /// Replace the suit according to a permutation table indexed by suit.
    pub fn permute_suit(self, perm: &[u8; 4]) -> Card {
        Card((self.0 & !3) | perm[(self.0 & 3) as usize])
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", RANK_CHARS[self.rank() as usize], self.suit().ch())
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Card {
    type Err = Error;

    fn from_str(s: &str) -> Result<Card, Error> {
        let bad = || Error::BadCard(s.to_string());
        let mut ch = s.chars();
        let (r, su) = (ch.next().ok_or_else(bad)?, ch.next().ok_or_else(bad)?);
        if ch.next().is_some() {
            return Err(bad());
        }
        let rank = RANK_CHARS
            .iter()
            .position(|&c| c == r.to_ascii_uppercase())
            .ok_or_else(bad)? as u8;
        let suit = match su.to_ascii_lowercase() {
            's' => Suit::Spades,
            'h' => Suit::Hearts,
            'c' => Suit::Clubs,
            'd' => Suit::Diamonds,
            _ => return Err(bad()),
        };
        Ok(Card::new(rank, suit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        for s in ["2s", "9d", "Th", "Ac"] {
            let c: Card = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("Xh".parse::<Card>().is_err());
        assert!("A".parse::<Card>().is_err());
        assert!("Ahh".parse::<Card>().is_err());
    }

    #[test]
    fn packing_roundtrip() {
        for i in 0..40u8 {
            let c = Card::from_index(i);
            assert_eq!(Card::new(c.rank(), c.suit()), c);
        }
    }
}
