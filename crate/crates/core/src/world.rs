//! Building map, movement pathfinding and the radio communication graph.
//!
//! Walls block movement but never radio: paths are 4-connected breadth-first
//! searches over free cells, while radio links form a unit-disk graph over
//! agent positions.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorldError {
    #[error("grid dimensions must be positive (got {width}x{height})")]
    EmptyGrid { width: usize, height: usize },
    #[error("position ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfBounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("position ({x}, {y}) is a wall")]
    OnWall { x: usize, y: usize },
    #[error("map line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

impl Position {
    pub const fn new(x: usize, y: usize) -> Self {
        Position { x, y }
    }

    fn dist_sq(self, other: Position) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx * dx + dy * dy
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Occupancy map. Row-major, `y` grows downwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl Grid {
    /// An obstacle-free grid.
    pub fn open(width: usize, height: usize) -> Result<Self, WorldError> {
        Self::from_cells(width, height, vec![Cell::Free; width * height])
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self, WorldError> {
        if width == 0 || height == 0 {
            return Err(WorldError::EmptyGrid { width, height });
        }
        assert_eq!(cells.len(), width * height, "cell buffer does not match dimensions");
        Ok(Grid {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, p: Position) -> Option<Cell> {
        self.contains(p).then(|| self.cells[self.index(p)])
    }

    pub fn set(&mut self, p: Position, cell: Cell) {
        let i = self.index(p);
        self.cells[i] = cell;
    }

    pub fn contains(&self, p: Position) -> bool {
        p.x < self.width && p.y < self.height
    }

    pub fn is_free(&self, p: Position) -> bool {
        self.cell(p) == Some(Cell::Free)
    }

    pub fn free_cells(&self) -> Vec<Position> {
        self.positions().filter(|&p| self.is_free(p)).collect()
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Position::new(x, y)))
    }

    /// Same grid with every wall removed.
    pub fn without_walls(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            cells: vec![Cell::Free; self.cells.len()],
        }
    }

    fn index(&self, p: Position) -> usize {
        p.y * self.width + p.x
    }

    /// Checks that `p` is in bounds and not a wall.
    pub fn check_free(&self, p: Position) -> Result<(), WorldError> {
        if !self.contains(p) {
            return Err(WorldError::OutOfBounds {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            });
        }
        if !self.is_free(p) {
            return Err(WorldError::OnWall { x: p.x, y: p.y });
        }
        Ok(())
    }

    fn neighbors(&self, p: Position) -> impl Iterator<Item = Position> + '_ {
        let mut out = [None; 4];
        if p.x > 0 {
            out[0] = Some(Position::new(p.x - 1, p.y));
        }
        if p.x + 1 < self.width {
            out[1] = Some(Position::new(p.x + 1, p.y));
        }
        if p.y > 0 {
            out[2] = Some(Position::new(p.x, p.y - 1));
        }
        if p.y + 1 < self.height {
            out[3] = Some(Position::new(p.x, p.y + 1));
        }
        out.into_iter().flatten().filter(|&q| self.is_free(q))
    }

    /// Step counts from `from` to every cell; `None` for walls and unreachable cells.
    pub fn distance_field(&self, from: Position) -> Result<DistanceField, WorldError> {
        self.check_free(from)?;
        let mut dist = vec![None; self.cells.len()];
        let mut queue = VecDeque::new();
        dist[self.index(from)] = Some(0u32);
        queue.push_back(from);
        while let Some(p) = queue.pop_front() {
            let d = dist[self.index(p)].expect("queued cells have a distance");
            for q in self.neighbors(p) {
                let qi = self.index(q);
                if dist[qi].is_none() {
                    dist[qi] = Some(d + 1);
                    queue.push_back(q);
                }
            }
        }
        Ok(DistanceField {
            width: self.width,
            dist,
        })
    }

    /// Shortest 4-connected path length over free cells, `None` when unreachable.
    pub fn movement_distance(&self, a: Position, b: Position) -> Result<Option<u32>, WorldError> {
        self.check_free(b)?;
        Ok(self.distance_field(a)?.get(b))
    }

    /// Renders the map in the text format understood by [`Grid::from_str`],
    /// including the `W H` header line.
    pub fn to_map_string(&self) -> String {
        let mut s = format!("{} {}\n", self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(match self.cells[y * self.width + x] {
                    Cell::Free => '.',
                    Cell::Wall => '#',
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Parses `.`/`#` rows with an optional leading `W H` header.
impl FromStr for Grid {
    type Err = WorldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();

        let mut header = None;
        if let Some(&(line, first)) = lines.peek() {
            let parts: Vec<&str> = first.split_whitespace().collect();
            if parts.len() == 2 && parts.iter().all(|p| p.chars().all(|c| c.is_ascii_digit())) {
                let w = parts[0].parse().map_err(|_| bad(line, "bad width"))?;
                let h = parts[1].parse().map_err(|_| bad(line, "bad height"))?;
                header = Some((w, h));
                lines.next();
            }
        }

        let mut width = None;
        let mut cells = Vec::new();
        let mut rows = 0;
        for (line, row) in lines {
            let row = row.trim();
            let n = row.chars().count();
            match width {
                None => width = Some(n),
                Some(w) if w != n => {
                    return Err(bad(line, &format!("row has {n} cells, expected {w}")));
                }
                _ => {}
            }
            for c in row.chars() {
                cells.push(match c {
                    '.' => Cell::Free,
                    '#' => Cell::Wall,
                    other => return Err(bad(line, &format!("unexpected character {other:?}"))),
                });
            }
            rows += 1;
        }
        let width = width.unwrap_or(0);
        if let Some((w, h)) = header {
            if (w, h) != (width, rows) {
                return Err(bad(
                    1,
                    &format!("header says {w}x{h} but rows describe {width}x{rows}"),
                ));
            }
        }
        Grid::from_cells(width, rows, cells)
    }
}

fn bad(line: usize, msg: &str) -> WorldError {
    WorldError::Parse {
        line,
        msg: msg.to_string(),
    }
}

/// Result of a single-source breadth-first search on a [`Grid`].
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    dist: Vec<Option<u32>>,
}

impl DistanceField {
    pub fn get(&self, p: Position) -> Option<u32> {
        if p.x >= self.width {
            return None;
        }
        self.dist.get(p.y * self.width + p.x).copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub range: f64,
}

impl RadioConfig {
    pub fn new(range: f64) -> Self {
        assert!(range >= 0.0, "radio range must be nonnegative");
        RadioConfig { range }
    }

    /// Euclidean distance at most `range`. Walls are irrelevant.
    pub fn in_range(&self, a: Position, b: Position) -> bool {
        a.dist_sq(b) <= self.range * self.range
    }
}

/// Free-function form of [`RadioConfig::in_range`].
pub fn in_radio_range(cfg: &RadioConfig, a: Position, b: Position) -> bool {
    cfg.in_range(a, b)
}

/// Unit-disk graph over a fixed list of positions.
#[derive(Debug, Clone)]
pub struct CommGraph {
    adjacency: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn new(radio: &RadioConfig, positions: &[Position]) -> Self {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if radio.in_range(positions[i], positions[j]) {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }
        CommGraph { adjacency }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Neighbors in ascending node order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Layered breadth-first search from `root`. Each node's parent is the
    /// lowest-indexed neighbor one layer closer to the root.
    pub fn bfs_tree(&self, root: usize) -> BfsTree {
        let n = self.len();
        let mut depth = vec![None; n];
        let mut parent = vec![None; n];
        let mut order = vec![root];
        depth[root] = Some(0u32);
        let mut frontier = vec![root];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u] {
                    if depth[v].is_none() {
                        depth[v] = Some(d);
                        next.push(v);
                    }
                }
            }
            for &v in &next {
                parent[v] = self.adjacency[v]
                    .iter()
                    .copied()
                    .filter(|&u| depth[u] == Some(d - 1))
                    .min();
            }
            next.sort_unstable();
            order.extend_from_slice(&next);
            frontier = next;
        }
        BfsTree {
            root,
            depth,
            parent,
            order,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfsTree {
    pub root: usize,
    depth: Vec<Option<u32>>,
    parent: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl BfsTree {
    pub fn depth(&self, node: usize) -> Option<u32> {
        self.depth[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Reached nodes sorted by (depth, index), root first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Tree path from the root to `node`, both endpoints included.
    pub fn path_from_root(&self, node: usize) -> Option<Vec<usize>> {
        self.depth[node]?;
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// The static environment shared by every method: map plus radio model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub grid: Grid,
    pub radio: RadioConfig,
}

impl World {
    pub fn new(grid: Grid, radio: RadioConfig) -> Self {
        World { grid, radio }
    }
}

/// Radio hop count between `positions[a]` and `positions[b]`.
pub fn hop_distance(radio: &RadioConfig, positions: &[Position], a: usize, b: usize) -> Option<u32> {
    if a == b {
        return Some(0);
    }
    CommGraph::new(radio, positions).bfs_tree(a).depth(b)
}
