//! Concrete game models.

pub mod duopoly;
pub mod keg;
pub mod knapsack;
pub mod lotsizing;

pub use duopoly::DuopolyGame;
pub use keg::{KegGame, KegGraph};
pub use knapsack::{KnapsackGame, KnapsackPlayer};
pub use lotsizing::{LotPlayer, LotSizingGame};
