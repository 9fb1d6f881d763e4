//! Two-player Coin Game on a small square grid.
//!
//! Red and blue agents move simultaneously. A single coin (red or blue) sits
//! on a cell neither agent occupies; whoever steps onto it collects it and a
//! new coin is spawned. Matching colours pay `match_reward`, mismatches pay
//! `mismatch_reward`. Moves off the board clamp to the wall.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_AGENTS: usize = 2;
pub const RED: usize = 0;
pub const BLUE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub grid_size: usize,
    pub episode_length: usize,
    pub match_reward: f64,
    pub mismatch_reward: f64,
    pub rng_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            grid_size: 3,
            episode_length: 100,
            match_reward: 1.0,
            mismatch_reward: 0.2,
            rng_seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::Config(format!(
                "grid_size must be at least 2, got {}",
                self.grid_size
            )));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be positive".into()));
        }
        if !(0.0 <= self.mismatch_reward && self.mismatch_reward <= self.match_reward) {
            return Err(Error::Config(format!(
                "need 0 <= mismatch_reward ({}) <= match_reward ({})",
                self.mismatch_reward, self.match_reward
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.grid_size * self.grid_size
    }

    /// Length of the shared observation vector.
    pub fn obs_len(&self) -> usize {
        4 * self.cells()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    fn index(self, grid_size: usize) -> usize {
        self.row * grid_size + self.col
    }

    fn from_index(idx: usize, grid_size: usize) -> Self {
        Self::new(idx / grid_size, idx % grid_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoinColor {
    Red,
    Blue,
}

impl CoinColor {
    /// Colour owned by agent `i`.
    pub fn of_agent(i: usize) -> Self {
        if i == RED {
            CoinColor::Red
        } else {
            CoinColor::Blue
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveAction {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl MoveAction {
    pub const ALL: [MoveAction; 5] = [
        MoveAction::Up,
        MoveAction::Down,
        MoveAction::Left,
        MoveAction::Right,
        MoveAction::Stay,
    ];

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn apply(self, cell: Cell, grid_size: usize) -> Cell {
        let last = grid_size - 1;
        match self {
            MoveAction::Up => Cell::new(cell.row.saturating_sub(1), cell.col),
            MoveAction::Down => Cell::new((cell.row + 1).min(last), cell.col),
            MoveAction::Left => Cell::new(cell.row, cell.col.saturating_sub(1)),
            MoveAction::Right => Cell::new(cell.row, (cell.col + 1).min(last)),
            MoveAction::Stay => cell,
        }
    }
}

/// What an agent does in the gridworld this step. `Inactive` agents
/// (those that rejected the contract) keep their position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentMove {
    Move(MoveAction),
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridState {
    pub red_pos: Cell,
    pub blue_pos: Cell,
    pub coin_pos: Cell,
    pub coin_color: CoinColor,
    pub t: usize,
}

impl GridState {
    pub fn agent_pos(&self, i: usize) -> Cell {
        if i == RED {
            self.red_pos
        } else {
            self.blue_pos
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoinGame {
    config: EnvConfig,
}

impl CoinGame {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> GridState {
        let n = self.config.cells();
        let g = self.config.grid_size;
        let red = rng.gen_range(0..n);
        let mut blue = rng.gen_range(0..n - 1);
        if blue >= red {
            blue += 1;
        }
        let red_pos = Cell::from_index(red, g);
        let blue_pos = Cell::from_index(blue, g);
        let (coin_pos, coin_color) = self.spawn_coin(red_pos, blue_pos, rng);
        GridState {
            red_pos,
            blue_pos,
            coin_pos,
            coin_color,
            t: 0,
        }
    }

    /// Uniform cell among those not occupied by either agent, uniform colour.
    pub fn spawn_coin<R: Rng + ?Sized>(
        &self,
        red_pos: Cell,
        blue_pos: Cell,
        rng: &mut R,
    ) -> (Cell, CoinColor) {
        let g = self.config.grid_size;
        let occupied = [red_pos.index(g), blue_pos.index(g)];
        let free: Vec<usize> = (0..self.config.cells())
            .filter(|c| !occupied.contains(c))
            .collect();
        let cell = Cell::from_index(free[rng.gen_range(0..free.len())], g);
        let color = if rng.gen_bool(0.5) {
            CoinColor::Red
        } else {
            CoinColor::Blue
        };
        (cell, color)
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        state: &GridState,
        moves: [AgentMove; N_AGENTS],
        rng: &mut R,
    ) -> Result<(GridState, [f64; N_AGENTS])> {
        if state.t >= self.config.episode_length {
            return Err(Error::TerminalState {
                t: state.t,
                horizon: self.config.episode_length,
            });
        }
        let g = self.config.grid_size;
        let mut next = *state;
        let moved = |pos: Cell, m: AgentMove| match m {
            AgentMove::Move(a) => a.apply(pos, g),
            AgentMove::Inactive => pos,
        };
        next.red_pos = moved(state.red_pos, moves[RED]);
        next.blue_pos = moved(state.blue_pos, moves[BLUE]);
        next.t += 1;

        let mut rewards = [0.0; N_AGENTS];
        let on_coin = [
            next.red_pos == state.coin_pos,
            next.blue_pos == state.coin_pos,
        ];
        let collector = match on_coin {
            [true, true] => Some(if rng.gen_bool(0.5) { RED } else { BLUE }),
            [true, false] => Some(RED),
            [false, true] => Some(BLUE),
            [false, false] => None,
        };
        if let Some(i) = collector {
            rewards[i] = if CoinColor::of_agent(i) == state.coin_color {
                self.config.match_reward
            } else {
                self.config.mismatch_reward
            };
            let (pos, color) = self.spawn_coin(next.red_pos, next.blue_pos, rng);
            next.coin_pos = pos;
            next.coin_color = color;
        }
        Ok((next, rewards))
    }

    /// Four flattened one-hot planes: red agent, blue agent, red coin, blue coin.
    pub fn observe(&self, state: &GridState) -> Vec<f64> {
        let mut obs = vec![0.0; self.config.obs_len()];
        self.observe_into(state, &mut obs);
        obs
    }

    pub fn observe_into(&self, state: &GridState, out: &mut [f64]) {
        let g = self.config.grid_size;
        let n = self.config.cells();
        out[..4 * n].iter_mut().for_each(|v| *v = 0.0);
        out[state.red_pos.index(g)] = 1.0;
        out[n + state.blue_pos.index(g)] = 1.0;
        let plane = match state.coin_color {
            CoinColor::Red => 2,
            CoinColor::Blue => 3,
        };
        out[plane * n + state.coin_pos.index(g)] = 1.0;
    }
}
