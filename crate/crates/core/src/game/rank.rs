use std::fmt;

use super::card::{Card, ACE};
use super::rules::GameRules;
use crate::{Error, Result};

/// The six hand shapes a three-card combination can take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum HandCategory {
    HighCard = 0,
    Pair = 1,
    Flush = 2,
    Straight = 3,
    Trips = 4,
    StraightFlush = 5,
}

impl HandCategory {
    pub const ALL: [HandCategory; 6] = [
        HandCategory::HighCard,
        HandCategory::Pair,
        HandCategory::Flush,
        HandCategory::Straight,
        HandCategory::Trips,
        HandCategory::StraightFlush,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HandCategory::HighCard => "high",
            HandCategory::Pair => "pair",
            HandCategory::Flush => "flush",
            HandCategory::Straight => "straight",
            HandCategory::Trips => "trips",
            HandCategory::StraightFlush => "straightflush",
        }
    }

    pub fn from_name(s: &str) -> Option<HandCategory> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "high" | "highcard" => HandCategory::HighCard,
            "pair" => HandCategory::Pair,
            "flush" => HandCategory::Flush,
            "straight" => HandCategory::Straight,
            "trips" | "threeofakind" | "set" => HandCategory::Trips,
            "straightflush" | "sf" => HandCategory::StraightFlush,
            _ => return None,
        })
    }
}

/// Strength ordering of the six categories, strongest first when printed.
///
/// The default is the classic three-card convention (straight flush >
/// trips > straight > flush > pair > high card), which is the ordering that
/// reproduces the published equivalence-class counts for this game.
/// Note the deck is small enough that this is NOT the rarity ordering: with
/// ten ranks a flush (444 combos) is rarer than a straight (540 combos).
/// `lab` accepts an override so the table can be swapped without code
/// changes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HandOrder {
    /// strength[category] — higher value wins.
    strength: [u8; 6],
}

impl HandOrder {
    /// Ordering by rarity on the 40-card deck:
    /// straight flush > trips > flush > straight > pair > high card.
    pub fn by_rarity() -> HandOrder {
        HandOrder::from_strongest([
            HandCategory::StraightFlush,
            HandCategory::Trips,
            HandCategory::Flush,
            HandCategory::Straight,
            HandCategory::Pair,
            HandCategory::HighCard,
        ])
    }

    /// The 52-card three-card-poker convention:
    /// straight flush > trips > straight > flush > pair > high card.
    pub fn three_card_classic() -> HandOrder {
        HandOrder::from_strongest([
            HandCategory::StraightFlush,
            HandCategory::Trips,
            HandCategory::Straight,
            HandCategory::Flush,
            HandCategory::Pair,
            HandCategory::HighCard,
        ])
    }

    pub fn from_strongest(order: [HandCategory; 6]) -> HandOrder {
        let mut strength = [0u8; 6];
        for (i, cat) in order.iter().enumerate() {
            strength[*cat as usize] = (6 - i) as u8;
        }
        HandOrder { strength }
    }

    /// Parse a comma-separated list of category names, strongest first,
    /// e.g. `"sf,trips,flush,straight,pair,high"`.
    pub fn parse(s: &str) -> Result<HandOrder> {
        let mut cats = Vec::new();
        for part in s.split(',') {
            let c = HandCategory::from_name(part)
                .ok_or_else(|| Error::Config(format!("unknown hand category {part:?}")))?;
            if cats.contains(&c) {
                return Err(Error::Config(format!("duplicate hand category {part:?}")));
            }
            cats.push(c);
        }
        let arr: [HandCategory; 6] = cats
            .try_into()
            .map_err(|_| Error::Config("hand order must list all 6 categories".into()))?;
        Ok(HandOrder::from_strongest(arr))
    }

    pub fn strength(&self, cat: HandCategory) -> u8 {
        self.strength[cat as usize]
    }

    /// Categories strongest first.
    pub fn strongest_first(&self) -> [HandCategory; 6] {
        let mut cats = HandCategory::ALL;
        cats.sort_by_key(|c| std::cmp::Reverse(self.strength[*c as usize]));
        cats
    }
}

impl fmt::Debug for HandOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.strongest_first().iter().map(|c| c.name()).collect();
        write!(f, "{}", names.join(","))
    }
}

impl Default for HandOrder {
    fn default() -> Self {
        HandOrder::three_card_classic()
    }
}

/// Rank of a three-card hand (possibly the best of several combinations).
///
/// Total order: category strength first, then the tiebreak ranks
/// lexicographically. `tiebreak` holds rank indices, highest relevance
/// first: all three ranks for high card and flush, pair rank then kicker
/// for a pair, the single defining rank for trips, and the straight's top
/// rank (with the A-2-3 wheel reduced below 2-3-4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HandRank {
    strength: u8,
    pub tiebreak: [u8; 3],
    pub category: HandCategory,
}

impl Ord for HandRank {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.strength, self.tiebreak).cmp(&(other.strength, other.tiebreak))
    }
}

impl PartialOrd for HandRank {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl HandRank {
    /// Packed comparison code; bigger beats smaller, same total order as
    /// the struct itself.
    pub fn code(&self) -> u32 {
        ((self.strength as u32) << 24)
            | ((self.tiebreak[0] as u32) << 16)
            | ((self.tiebreak[1] as u32) << 8)
            | (self.tiebreak[2] as u32)
    }
}

/// Classify three distinct cards under the given rules.
pub fn classify3(cards: [Card; 3], rules: &GameRules) -> HandRank {
    let mut r = [cards[0].rank(), cards[1].rank(), cards[2].rank()];
    r.sort_unstable_by(|a, b| b.cmp(a));
    let flush = cards[0].suit() == cards[1].suit() && cards[1].suit() == cards[2].suit();

    let (category, tiebreak);
    if r[0] == r[2] {
        category = HandCategory::Trips;
        tiebreak = [r[0], 0, 0];
    } else if r[0] == r[1] || r[1] == r[2] {
        let (pair, kicker) = if r[0] == r[1] { (r[0], r[2]) } else { (r[1], r[0]) };
        category = HandCategory::Pair;
        tiebreak = [pair, kicker, 0];
    } else {
        // Three distinct ranks: straight, flush, straight flush or high card.
        let natural_run = r[0] == r[1] + 1 && r[1] == r[2] + 1;
        let ace_high_run = natural_run && r[0] == ACE;
        let wheel = rules.num_ranks == 10 && r[0] == ACE && r[1] == 1 && r[2] == 0;
        let straight = (natural_run && (!ace_high_run || rules.ace_high_straight))
            || (wheel && rules.wheel_straight);
        let top = if wheel {
            if rules.wheel_is_lowest {
                1
            } else {
                ACE + 1
            }
        } else {
            r[0]
        };
        match (straight, flush) {
            (true, true) => {
                category = HandCategory::StraightFlush;
                tiebreak = [top, 0, 0];
            }
            (true, false) => {
                category = HandCategory::Straight;
                tiebreak = [top, 0, 0];
            }
            (false, true) => {
                category = HandCategory::Flush;
                tiebreak = r;
            }
            (false, false) => {
                category = HandCategory::HighCard;
                tiebreak = r;
            }
        }
    }
    HandRank {
        strength: rules.hand_order.strength(category),
        tiebreak,
        category,
    }
}

/// Precomputed three-card rank codes for every sorted card triple of the
/// deck, plus the derived best-of-four lookup. Construction enumerates all
/// C(num_cards, 3) triples once.
pub struct RankTable {
    n: usize,
    codes: Vec<u32>,
    ranks: Vec<HandRank>,
}

impl fmt::Debug for RankTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RankTable({} cards)", self.n)
    }
}

impl RankTable {
    pub fn new(rules: &GameRules) -> RankTable {
        let n = rules.num_ranks as usize * 4;
        let mut codes = vec![0u32; n * n * n];
        let mut ranks = vec![
            HandRank {
                strength: 0,
                tiebreak: [0; 3],
                category: HandCategory::HighCard,
            };
            n * n * n
        ];
        for i in 0..n as u8 {
            for j in i + 1..n as u8 {
                for k in j + 1..n as u8 {
                    let hr = classify3(
                        [Card::from_index(i), Card::from_index(j), Card::from_index(k)],
                        rules,
                    );
                    let idx = (i as usize * n + j as usize) * n + k as usize;
                    codes[idx] = hr.code();
                    ranks[idx] = hr;
                }
            }
        }
        RankTable { n, codes, ranks }
    }

    #[inline]
    fn idx3(&self, mut c: [u8; 3]) -> usize {
        c.sort_unstable();
        (c[0] as usize * self.n + c[1] as usize) * self.n + c[2] as usize
    }

    #[inline]
    pub fn rank3_code(&self, cards: [Card; 3]) -> u32 {
        self.codes[self.idx3([cards[0].index(), cards[1].index(), cards[2].index()])]
    }

    pub fn rank3(&self, cards: [Card; 3]) -> HandRank {
        self.ranks[self.idx3([cards[0].index(), cards[1].index(), cards[2].index()])]
    }

    /// Best three-card rank code among the four 3-subsets of four cards.
    #[inline]
    pub fn rank4_code(&self, c: [Card; 4]) -> u32 {
        let a = self.rank3_code([c[1], c[2], c[3]]);
        let b = self.rank3_code([c[0], c[2], c[3]]);
        let d = self.rank3_code([c[0], c[1], c[3]]);
        let e = self.rank3_code([c[0], c[1], c[2]]);
        a.max(b).max(d).max(e)
    }

    pub fn rank4(&self, c: [Card; 4]) -> HandRank {
        let subsets = [
            [c[1], c[2], c[3]],
            [c[0], c[2], c[3]],
            [c[0], c[1], c[3]],
            [c[0], c[1], c[2]],
        ];
        subsets
            .iter()
            .map(|s| self.rank3(*s))
            .max()
            .expect("four subsets")
    }
}

/// Frequency of each category over all three-card combinations of the deck.
/// Index by `HandCategory as usize`.
pub fn category_frequencies(rules: &GameRules) -> [u64; 6] {
    let n = rules.num_ranks * 4;
    let mut freq = [0u64; 6];
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let hr = classify3(
                    [Card::from_index(i), Card::from_index(j), Card::from_index(k)],
                    rules,
                );
                freq[hr.category as usize] += 1;
            }
        }
    }
    freq
}
