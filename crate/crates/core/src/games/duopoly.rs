//! Two players each maximizing `-(x^i)^2 + x^i x^{-i}` over `x^i ≥ 0`.
//!
//! The strategy sets are unbounded unless a bound is given, so convergence of
//! the sampled methods relies on a positive tolerance.

use crate::error::Result;
use crate::model::{BilateralGame, Profile, PureStrategy};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DuopolyGame {
    pub bound: Option<f64>,
}

impl DuopolyGame {
    pub fn new() -> Self {
        DuopolyGame { bound: None }
    }

    pub fn strategy(x: f64) -> PureStrategy {
        PureStrategy::continuous(vec![x])
    }

    /// Best reply to an opponent whose expected choice is `w`.
    pub fn reply(&self, w: f64) -> f64 {
        let x = (w / 2.0).max(0.0);
        match self.bound {
            Some(b) => x.min(b),
            None => x,
        }
    }
}

impl BilateralGame for DuopolyGame {
    fn num_players(&self) -> usize {
        2
    }

    fn dimension(&self, _p: usize) -> usize {
        1
    }

    fn own_payoff(&self, _p: usize, x: &PureStrategy) -> f64 {
        let v = x.values()[0];
        -v * v
    }

    fn pair_payoff(&self, _p: usize, x: &PureStrategy, _k: usize, y: &PureStrategy) -> f64 {
        x.values()[0] * y.values()[0]
    }

    fn is_feasible(&self, _p: usize, x: &PureStrategy) -> bool {
        let v = x.values()[0];
        x.len() == 1 && v >= 0.0 && self.bound.is_none_or(|b| v <= b)
    }

    fn best_response(&self, p: usize, profile: &Profile) -> Result<PureStrategy> {
        let w = profile.player(1 - p).mean()[0];
        Ok(Self::strategy(self.reply(w)))
    }

    fn zero_strategy(&self, _p: usize) -> PureStrategy {
        Self::strategy(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixedStrategy;

    #[test]
    fn replies() {
        let g = DuopolyGame::new();
        assert_eq!(g.reply(10.0), 5.0);
        assert_eq!(g.reply(0.0), 0.0);
        let mixed = MixedStrategy::new(vec![(DuopolyGame::strategy(10.0), 0.5), (DuopolyGame::strategy(0.0), 0.5)]).unwrap();
        let prof = Profile::new(vec![MixedStrategy::pure(DuopolyGame::strategy(1.0)), mixed]);
        assert_eq!(g.best_response(0, &prof).unwrap(), DuopolyGame::strategy(2.5));
    }
}
