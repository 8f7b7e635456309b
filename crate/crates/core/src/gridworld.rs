//! FrozenLake-style grid mazes.
//!
//! Mazes are ASCII blocks over `.` (free), `#` (wall), `R` (red: passable,
//! costlier), `G` (goal) and `S` (start). States are the non-wall cells in
//! row-major order; the four actions are left, down, right, up.
//!
//! Every step costs `r = -1`, steps taken from a red cell cost `-1.5`, and
//! any action at a goal has `r = 0`. In cyclic mode the goal sends the agent
//! back to the start whatever the action, which makes the chain recurrent.
//! Otherwise the goal is absorbing, and the chain is reducible.
//!
//! With slip probability `q` the intended move happens with probability
//! `1 - q` and each perpendicular move with `q / 2`. Moves into a wall or off
//! the grid leave the agent in place (at the usual step cost).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::validate::{validate_model, Primitivity};
use crate::{Error, MdpModel, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MazeError {
    #[error("maze is empty")]
    Empty,
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("row {row} has {got} cells, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("maze has no start cell")]
    MissingStart,
    #[error("maze has more than one start cell")]
    DuplicateStart,
    #[error("maze has no goal cell")]
    MissingGoal,
    #[error("slip probability must lie in [0, 1)")]
    InvalidSlip,
    #[error("unknown maze preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Wall,
    Red,
    Goal,
    Start,
}

impl Cell {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => Self::Free,
            '#' => Self::Wall,
            'R' => Self::Red,
            'G' => Self::Goal,
            'S' => Self::Start,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Self::Free => '.',
            Self::Wall => '#',
            Self::Red => 'R',
            Self::Goal => 'G',
            Self::Start => 'S',
        }
    }

    /// Reward of every action taken from this cell.
    pub fn reward(self) -> f64 {
        match self {
            Self::Goal => 0.0,
            Self::Red => -1.5,
            _ => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Left = 0,
    Down = 1,
    Right = 2,
    Up = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Left, Action::Down, Action::Right, Action::Up];

    pub fn from_index(a: usize) -> Option<Self> {
        Self::ALL.get(a).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(Δrow, Δcol)`.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Self::Left => (0, -1),
            Self::Down => (1, 0),
            Self::Right => (0, 1),
            Self::Up => (-1, 0),
        }
    }

    /// The two moves at right angles.
    pub fn perpendicular(self) -> [Action; 2] {
        let a = self.index();
        [Self::ALL[(a + 1) % 4], Self::ALL[(a + 3) % 4]]
    }

    pub fn arrow(self) -> char {
        match self {
            Self::Left => '<',
            Self::Down => 'v',
            Self::Right => '>',
            Self::Up => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMaze {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    slip: f64,
    cyclic: bool,
}

impl GridMaze {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    pub fn with_slip(mut self, slip: f64) -> Result<Self, MazeError> {
        if !(0.0..1.0).contains(&slip) {
            return Err(MazeError::InvalidSlip);
        }
        self.slip = slip;
        Ok(self)
    }

    pub fn with_cyclic(mut self, cyclic: bool) -> Self {
        self.cyclic = cyclic;
        self
    }

    fn target(&self, row: usize, col: usize, action: Action) -> (usize, usize) {
        let (dr, dc) = action.delta();
        let (r, c) = (row as isize + dr, col as isize + dc);
        if r < 0 || c < 0 || r >= self.height as isize || c >= self.width as isize {
            return (row, col);
        }
        let (r, c) = (r as usize, c as usize);
        if self.cell(r, c) == Cell::Wall {
            (row, col)
        } else {
            (r, c)
        }
    }
}

impl fmt::Display for GridMaze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.width) {
            for c in row {
                write!(f, "{}", c.to_char())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parses a maze block. Leading/trailing blank lines and trailing `\r` are
/// ignored; the result is deterministic (slip 0) and cyclic.
pub fn parse_maze(text: &str) -> Result<GridMaze, MazeError> {
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .skip_while(|l| l.trim().is_empty())
        .collect();
    let end = rows
        .iter()
        .rposition(|l| !l.trim().is_empty())
        .ok_or(MazeError::Empty)?;
    let rows = &rows[..=end];
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(MazeError::Empty);
    }
    let mut cells = Vec::with_capacity(width * rows.len());
    let (mut starts, mut goals) = (0, 0);
    for (r, line) in rows.iter().enumerate() {
        let got = line.chars().count();
        if got != width {
            return Err(MazeError::Ragged {
                row: r,
                expected: width,
                got,
            });
        }
        for (c, ch) in line.chars().enumerate() {
            let cell = Cell::from_char(ch).ok_or(MazeError::UnknownChar { ch, row: r, col: c })?;
            starts += (cell == Cell::Start) as usize;
            goals += (cell == Cell::Goal) as usize;
            cells.push(cell);
        }
    }
    match starts {
        0 => return Err(MazeError::MissingStart),
        1 => {}
        _ => return Err(MazeError::DuplicateStart),
    }
    if goals == 0 {
        return Err(MazeError::MissingGoal);
    }
    Ok(GridMaze {
        width,
        height: rows.len(),
        cells,
        slip: 0.0,
        cyclic: true,
    })
}

/// Maze MDP plus the cell bookkeeping needed to map states back to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeMdp {
    pub model: MdpModel,
    /// `(row, col)` of every state.
    pub cells: Vec<(usize, usize)>,
    pub start_state: usize,
    pub goal_states: Vec<usize>,
    pub width: usize,
    pub height: usize,
    /// Primitivity of the pair chain; a non-primitive maze has no spectral
    /// solution.
    pub primitivity: Primitivity,
    state_of: Vec<Option<usize>>,
}

impl MazeMdp {
    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.height || col >= self.width {
            return None;
        }
        self.state_of[row * self.width + col]
    }

    /// Prior initial pair distribution: start cell, prior action choice.
    pub fn start_distribution(&self) -> Vec<f64> {
        self.model.start_distribution(self.start_state)
    }

    pub fn is_goal(&self, state: usize) -> bool {
        self.goal_states.contains(&state)
    }
}

/// Builds the MDP of `maze` with a uniform prior policy.
pub fn to_mdp(maze: &GridMaze, beta: f64) -> Result<MazeMdp> {
    let mut state_of = vec![None; maze.cells.len()];
    let mut cells = Vec::new();
    for r in 0..maze.height {
        for c in 0..maze.width {
            if maze.cell(r, c) != Cell::Wall {
                state_of[r * maze.width + c] = Some(cells.len());
                cells.push((r, c));
            }
        }
    }
    let state = |(r, c): (usize, usize)| state_of[r * maze.width + c].expect("non-wall cell");
    let n = cells.len();
    let mut start_state = 0;
    let mut goal_states = Vec::new();
    let mut dynamics = Vec::with_capacity(4 * n);
    let mut rewards = Vec::with_capacity(4 * n);
    for (s, &(r, c)) in cells.iter().enumerate() {
        let kind = maze.cell(r, c);
        match kind {
            Cell::Start => start_state = s,
            Cell::Goal => goal_states.push(s),
            _ => {}
        }
        for action in Action::ALL {
            rewards.push(kind.reward());
            if kind == Cell::Goal {
                dynamics.push(Vec::new());
                continue;
            }
            let mut succ = vec![(state(maze.target(r, c, action)), 1.0 - maze.slip)];
            if maze.slip > 0.0 {
                for side in action.perpendicular() {
                    succ.push((state(maze.target(r, c, side)), maze.slip / 2.0));
                }
            }
            dynamics.push(succ);
        }
    }
    for &g in &goal_states {
        let next = if maze.cyclic { start_state } else { g };
        for a in 0..4 {
            dynamics[4 * g + a] = vec![(next, 1.0)];
        }
    }
    let model = MdpModel::new(n, 4, vec![0.25; 4 * n], dynamics, rewards, beta)?;
    let primitivity = validate_model(&model).primitivity;
    Ok(MazeMdp {
        model,
        cells,
        start_state,
        goal_states,
        width: maze.width,
        height: maze.height,
        primitivity,
        state_of,
    })
}

/// Samples `s' ~ p(·|s, a)` and returns it with `r(s, a)`.
pub fn env_step<R: Rng + ?Sized>(model: &MdpModel, state: usize, action: usize, rng: &mut R) -> Result<(usize, f64)> {
    if state >= model.n_states() {
        return Err(Error::OutOfRange {
            what: "state",
            index: state,
            limit: model.n_states(),
        });
    }
    if action >= model.n_actions() {
        return Err(Error::OutOfRange {
            what: "action",
            index: action,
            limit: model.n_actions(),
        });
    }
    let succ = model.successors(state, action);
    let k = crate::sim::sample_categorical(succ.iter().map(|&(_, p)| p), rng);
    Ok((succ[k].0, model.reward(state, action)))
}

/// Bundled layouts: `(name, text)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("empty10", include_str!("../mazes/empty10.txt")),
    ("maze9", include_str!("../mazes/maze9.txt")),
    ("frozen4", include_str!("../mazes/frozen4.txt")),
    ("ring6", include_str!("../mazes/ring6.txt")),
    ("pillars7", include_str!("../mazes/pillars7.txt")),
    ("shortcut7", include_str!("../mazes/shortcut7.txt")),
];

pub fn preset(name: &str) -> Result<GridMaze, MazeError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| MazeError::UnknownPreset(name.into()))?;
    parse_maze(text)
}
