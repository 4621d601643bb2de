//! Numeral211 hold'em laboratory.
//!
//! A compact two-player hold'em variant (40-card deck, three betting phases,
//! fixed-limit bets) together with the full hand-abstraction tool chain built
//! on top of it:
//!
//! * [`game`] — exact rules engine: deck, betting tree, showdown ranking,
//!   terminal utilities.
//! * [`iso`] — lossless suit isomorphism and dense indexing of canonical
//!   observation infosets per phase.
//! * [`features`] — exhaustively enumerated winrate vectors, equity,
//!   transition histograms, and the outcome-equivalence partitions built
//!   from them.
//! * [`clustering`] — exact earth mover's distance, composite block
//!   distances, and weighted k-means++.
//! * [`abstraction`] — bucket-map builders (lossless, outcome-equivalence,
//!   equity, potential-aware, recall-aware) plus persistence.
//! * [`solver`] — chance-sampled Monte Carlo CFR over an abstracted game.
//! * [`evaluator`] — exact best response and exploitability over the full
//!   game, with symmetric and asymmetric evaluation protocols.
//! * [`harness`] — experiment configs, run orchestration with on-disk
//!   result caching, CSV/plot emission.

pub mod abstraction;
pub mod clustering;
pub mod error;
pub mod evaluator;
pub mod features;
pub mod game;
pub mod harness;
pub mod iso;
pub mod plot;
pub mod solver;
pub mod util;

pub use error::{Error, Result};
pub use game::{Action, Card, Game, GameRules, HandOrder, HandRank, Player, Suit};
pub use iso::IsoTables;
