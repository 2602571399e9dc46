//! Grid geometry and token storage.
//!
//! A world is a `width x height` board of cells in row-major order. Each cell
//! holds a list of discrete tokens (word ids below `vocab_size`), and worlds
//! produced by the generator additionally carry a ground-truth label per cell.
//! Movement is 4-connected; model neighborhoods are Chebyshev balls clipped to
//! the board, and always include the center cell.

use crate::{Error, Result};

/// Cell position, `x` is the column and `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord {
    pub x: usize,
    pub y: usize,
}

impl CellCoord {
    pub fn new(x: usize, y: usize) -> Self {
        CellCoord { x, y }
    }

    /// Squared Euclidean distance, as used by the coverage potential.
    pub fn distance_sq(self, other: CellCoord) -> f64 {
        let dx = self.x.abs_diff(other.x) as f64;
        let dy = self.y.abs_diff(other.y) as f64;
        dx * dx + dy * dy
    }

    /// Chebyshev distance, the metric behind square neighborhoods.
    pub fn chebyshev(self, other: CellCoord) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

impl std::fmt::Display for CellCoord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// The environment: per-cell token bags plus optional ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    vocab_size: usize,
    cells: Vec<Vec<usize>>,
    truth: Option<Vec<usize>>,
}

impl GridWorld {
    /// Builds a world from row-major per-cell token lists. Every token must be
    /// below `vocab_size`.
    pub fn new(
        width: usize,
        height: usize,
        vocab_size: usize,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "world dimensions must be positive, got {width}x{height}"
            )));
        }
        if vocab_size == 0 {
            return Err(Error::InvalidConfig("vocab_size must be positive".into()));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "expected {} cells for a {width}x{height} world, got {}",
                width * height,
                cells.len()
            )));
        }
        if let Some(&bad) = cells.iter().flatten().find(|&&w| w >= vocab_size) {
            return Err(Error::InvalidConfig(format!(
                "token id {bad} out of range for vocab_size {vocab_size}"
            )));
        }
        Ok(GridWorld {
            width,
            height,
            vocab_size,
            cells,
            truth: None,
        })
    }

    /// An empty world: every cell holds no tokens. Useful for pure-movement
    /// runs where no observations are made.
    pub fn empty(width: usize, height: usize, vocab_size: usize) -> Result<Self> {
        GridWorld::new(width, height, vocab_size, vec![Vec::new(); width * height])
    }

    /// Attaches per-cell ground-truth labels (row-major).
    pub fn with_truth(mut self, truth: Vec<usize>) -> Result<Self> {
        if truth.len() != self.num_cells() {
            return Err(Error::Mismatch(format!(
                "truth labels cover {} cells, world has {}",
                truth.len(),
                self.num_cells()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        c.x < self.width && c.y < self.height
    }

    /// Row-major index of `c`.
    pub fn index(&self, c: CellCoord) -> usize {
        debug_assert!(self.contains(c), "coordinate {c} out of bounds");
        c.y * self.width + c.x
    }

    pub fn coord(&self, index: usize) -> CellCoord {
        debug_assert!(index < self.num_cells());
        CellCoord::new(index % self.width, index / self.width)
    }

    /// Tokens stored at `c`. Panics if `c` is out of bounds.
    pub fn tokens(&self, c: CellCoord) -> &[usize] {
        assert!(self.contains(c), "coordinate {c} out of bounds");
        &self.cells[c.y * self.width + c.x]
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    /// In-bounds 4-connected neighbors of `c`, in the fixed order
    /// right, left, down, up. There is no self-loop: the result never
    /// contains `c`. Panics if `c` is out of bounds.
    pub fn movement_neighbors(&self, c: CellCoord) -> Vec<CellCoord> {
        assert!(self.contains(c), "coordinate {c} out of bounds");
        let mut out = Vec::with_capacity(4);
        if c.x + 1 < self.width {
            out.push(CellCoord::new(c.x + 1, c.y));
        }
        if c.x > 0 {
            out.push(CellCoord::new(c.x - 1, c.y));
        }
        if c.y + 1 < self.height {
            out.push(CellCoord::new(c.x, c.y + 1));
        }
        if c.y > 0 {
            out.push(CellCoord::new(c.x, c.y - 1));
        }
        out
    }

    /// Cells within Chebyshev distance `radius` of `c`, clipped to the board,
    /// in row-major order. Always yields `c` itself; `radius` 0 yields only
    /// `c`. Panics if `c` is out of bounds.
    pub fn neighborhood(
        &self,
        c: CellCoord,
        radius: usize,
    ) -> impl Iterator<Item = CellCoord> + Clone {
        chebyshev_ball(self.width, self.height, c, radius)
    }
}

/// Clipped Chebyshev ball around `c` on a `width x height` board, row-major.
/// Shared by the world and by model state that tracks geometry on its own.
pub fn chebyshev_ball(
    width: usize,
    height: usize,
    c: CellCoord,
    radius: usize,
) -> impl Iterator<Item = CellCoord> + Clone {
    assert!(
        c.x < width && c.y < height,
        "coordinate {c} out of bounds for {width}x{height}"
    );
    let x0 = c.x.saturating_sub(radius);
    let y0 = c.y.saturating_sub(radius);
    let x1 = (c.x + radius).min(width - 1);
    let y1 = (c.y + radius).min(height - 1);
    (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| CellCoord::new(x, y)))
}
