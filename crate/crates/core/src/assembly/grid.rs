use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Direction {
        Direction::ALL[(self.index() + 2) % 4]
    }

    /// Grid offset with y growing southwards.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::North => (0, -1),
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRef {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub is_container: bool,
    #[serde(default)]
    pub contents: Vec<ElementRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacedLocation {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub is_filler: bool,
    #[serde(default)]
    pub characters: Vec<ElementRef>,
    #[serde(default)]
    pub objects: Vec<PlacedObject>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum CellState {
    Blocked,
    Empty,
    Filled { location: PlacedLocation },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub state: CellState,
    /// Open exits indexed N, E, S, W.
    pub exits: [bool; 4],
}

impl Cell {
    pub fn location(&self) -> Option<&PlacedLocation> {
        match &self.state {
            CellState::Filled { location } => Some(location),
            _ => None,
        }
    }

    pub fn location_mut(&mut self) -> Option<&mut PlacedLocation> {
        match &mut self.state {
            CellState::Filled { location } => Some(location),
            _ => None,
        }
    }

    pub fn is_filled(&self) -> bool {
        matches!(self.state, CellState::Filled { .. })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.state, CellState::Empty)
    }

    pub fn exit_count(&self) -> usize {
        self.exits.iter().filter(|e| **e).count()
    }
}

/// Row-major grid of cells; index = y * width + x.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
}

impl WorldGrid {
    pub fn new(width: usize, height: usize) -> Self {
        WorldGrid {
            width,
            height,
            cells: vec![
                Cell {
                    state: CellState::Empty,
                    exits: [false; 4],
                };
                width * height
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn center(&self) -> usize {
        self.index(self.width / 2, self.height / 2)
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn neighbor(&self, index: usize, dir: Direction) -> Option<usize> {
        let (x, y) = self.coords(index);
        let (dx, dy) = dir.delta();
        let nx = x as i64 + dx;
        let ny = y as i64 + dy;
        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
            return None;
        }
        Some(self.index(nx as usize, ny as usize))
    }

    /// Direction from `a` to an orthogonally adjacent `b`.
    pub fn direction_between(&self, a: usize, b: usize) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| self.neighbor(a, *d) == Some(b))
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_filled()).count()
    }

    pub fn set_exit(&mut self, a: usize, dir: Direction, open: bool) -> bool {
        match self.neighbor(a, dir) {
            Some(b) => {
                self.cells[a].exits[dir.index()] = open;
                self.cells[b].exits[dir.opposite().index()] = open;
                true
            }
            None => false,
        }
    }

    /// Close every exit touching `a`.
    pub fn clear_exits(&mut self, a: usize) {
        for d in Direction::ALL {
            if self.cells[a].exits[d.index()] {
                self.set_exit(a, d, false);
            }
        }
        self.cells[a].exits = [false; 4];
    }

    /// Exits as sorted cell-index pairs (lower index first).
    pub fn exit_pairs(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::new();
        for (i, cell) in self.cells.iter().enumerate() {
            for d in [Direction::East, Direction::South] {
                if cell.exits[d.index()] {
                    if let Some(j) = self.neighbor(i, d) {
                        out.push([i, j]);
                    }
                }
            }
        }
        out
    }

    pub fn filled(&self) -> impl Iterator<Item = (usize, &PlacedLocation)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.location().map(|l| (i, l)))
    }
}
