//! Sublevel-set cubical complexes built from grayscale images.
//!
//! Each pixel is a vertex, 4-neighbours are joined by edges, and each 2x2
//! pixel block spans a square. Edges and squares take the maximum value of
//! their vertices, so a cell enters the filtration exactly when all of its
//! pixels have.
//!
//! Cell ids are dense and row-major within each family:
//! vertices, then horizontal edges, then vertical edges, then squares.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    None,
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::None => "none",
            Orientation::Horizontal => "h",
            Orientation::Vertical => "v",
        }
    }
}

/// One cell of the complex. `anchor` is the top-left pixel it touches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub id: u32,
    pub dim: u8,
    pub anchor: (usize, usize),
    pub orientation: Orientation,
    pub value: f64,
}

/// Up to four face ids of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Faces {
    ids: [u32; 4],
    len: usize,
}

impl Faces {
    pub fn as_slice(&self) -> &[u32] {
        &self.ids[..self.len]
    }
}

/// Index arithmetic for the cells of a `width x height` pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn n_vertices(&self) -> usize {
        self.width * self.height
    }

    pub fn n_hedges(&self) -> usize {
        self.height * (self.width - 1)
    }

    pub fn n_vedges(&self) -> usize {
        (self.height - 1) * self.width
    }

    pub fn n_edges(&self) -> usize {
        self.n_hedges() + self.n_vedges()
    }

    pub fn n_squares(&self) -> usize {
        (self.width - 1) * (self.height - 1)
    }

    pub fn n_cells(&self) -> usize {
        self.n_vertices() + self.n_edges() + self.n_squares()
    }

    pub fn vertex(&self, row: usize, col: usize) -> u32 {
        (row * self.width + col) as u32
    }

    pub fn hedge(&self, row: usize, col: usize) -> u32 {
        (self.n_vertices() + row * (self.width - 1) + col) as u32
    }

    pub fn vedge(&self, row: usize, col: usize) -> u32 {
        (self.n_vertices() + self.n_hedges() + row * self.width + col) as u32
    }

    pub fn square(&self, row: usize, col: usize) -> u32 {
        (self.n_vertices() + self.n_edges() + row * (self.width - 1) + col) as u32
    }

    pub fn dim(&self, id: u32) -> u8 {
        let id = id as usize;
        if id < self.n_vertices() {
            0
        } else if id < self.n_vertices() + self.n_edges() {
            1
        } else {
            2
        }
    }

    /// Anchor pixel and orientation of a cell.
    pub fn locate(&self, id: u32) -> ((usize, usize), Orientation) {
        let mut i = id as usize;
        let w = self.width;
        if i < self.n_vertices() {
            return ((i / w, i % w), Orientation::None);
        }
        i -= self.n_vertices();
        if i < self.n_hedges() {
            return ((i / (w - 1), i % (w - 1)), Orientation::Horizontal);
        }
        i -= self.n_hedges();
        if i < self.n_vedges() {
            return ((i / w, i % w), Orientation::Vertical);
        }
        i -= self.n_vedges();
        ((i / (w - 1), i % (w - 1)), Orientation::None)
    }

    /// Codimension-1 faces, in increasing id order.
    pub fn faces(&self, id: u32) -> Faces {
        let ((r, c), orient) = self.locate(id);
        let mut ids = [0u32; 4];
        let len = match (self.dim(id), orient) {
            (0, _) => 0,
            (1, Orientation::Horizontal) => {
                ids[0] = self.vertex(r, c);
                ids[1] = self.vertex(r, c + 1);
                2
            }
            (1, _) => {
                ids[0] = self.vertex(r, c);
                ids[1] = self.vertex(r + 1, c);
                2
            }
            _ => {
                ids = [
                    self.hedge(r, c),
                    self.hedge(r + 1, c),
                    self.vedge(r, c),
                    self.vedge(r, c + 1),
                ];
                4
            }
        };
        Faces { ids, len }
    }

    /// Pixels (vertices) incident to a cell.
    pub fn pixels(&self, id: u32) -> Vec<(usize, usize)> {
        let ((r, c), orient) = self.locate(id);
        match (self.dim(id), orient) {
            (0, _) => vec![(r, c)],
            (1, Orientation::Horizontal) => vec![(r, c), (r, c + 1)],
            (1, _) => vec![(r, c), (r + 1, c)],
            _ => vec![(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)],
        }
    }
}

/// All cells of an image's cubical complex, sorted into filtration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    grid: Grid,
    /// Filtration value per cell id.
    values: Vec<f64>,
    /// Cell ids in filtration order.
    order: Vec<u32>,
    /// Inverse of `order`.
    position: Vec<u32>,
}

impl FilteredComplex {
    /// Builds the complex from explicit per-cell values, sorted by `(value, dim, id)`.
    /// No monotonicity check happens here; see [`FilteredComplex::validate`].
    pub fn from_cell_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("complex dimensions must be positive"));
        }
        let grid = Grid::new(width, height);
        if values.len() != grid.n_cells() {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("NaN filtration value"));
        }
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| {
            values[a as usize]
                .total_cmp(&values[b as usize])
                .then(grid.dim(a).cmp(&grid.dim(b)))
                .then(a.cmp(&b))
        });
        let mut position = vec![0u32; order.len()];
        for (pos, &id) in order.iter().enumerate() {
            position[id as usize] = pos as u32;
        }
        Ok(Self {
            grid,
            values,
            order,
            position,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn source_dims(&self) -> (usize, usize) {
        (self.grid.width, self.grid.height)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn value(&self, id: u32) -> f64 {
        self.values[id as usize]
    }

    pub fn dim(&self, id: u32) -> u8 {
        self.grid.dim(id)
    }

    pub fn faces(&self, id: u32) -> Faces {
        self.grid.faces(id)
    }

    /// Cell ids in filtration order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn position(&self, id: u32) -> u32 {
        self.position[id as usize]
    }

    pub fn cube(&self, id: u32) -> Cube {
        let (anchor, orientation) = self.grid.locate(id);
        Cube {
            id,
            dim: self.grid.dim(id),
            anchor,
            orientation,
            value: self.value(id),
        }
    }

    /// Cells in filtration order.
    pub fn cells(&self) -> impl Iterator<Item = Cube> + '_ {
        self.order.iter().map(|&id| self.cube(id))
    }

    /// Checks that every face precedes its cofaces and never has a larger value.
    pub fn validate(&self) -> Result<()> {
        for w in self.order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let key = |id: u32| (self.value(id), self.dim(id), id);
            let (ka, kb) = (key(a), key(b));
            if ka.0 > kb.0 || (ka.0 == kb.0 && (ka.1, ka.2) > (kb.1, kb.2)) {
                return Err(Error::MalformedComplex(format!("cells {a} and {b} out of order")));
            }
        }
        for id in 0..self.values.len() as u32 {
            for &f in self.faces(id).as_slice() {
                if self.value(f) > self.value(id) {
                    return Err(Error::MalformedComplex(format!(
                        "face {f} (value {}) exceeds coface {id} (value {})",
                        self.value(f),
                        self.value(id)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Debug dump: `id,dim,row,col,value` in filtration order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,dim,row,col,value\n");
        for cell in self.cells() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                cell.id, cell.dim, cell.anchor.0, cell.anchor.1, cell.value
            );
        }
        out
    }
}

/// Lower-star V-construction: vertex value = pixel, higher cells take the max.
pub fn build_sublevel_complex(img: &GrayImage) -> FilteredComplex {
    let (w, h) = img.dims();
    let grid = Grid::new(w, h);
    let mut values = Vec::with_capacity(grid.n_cells());
    values.extend_from_slice(img.pixels());
    for r in 0..h {
        for c in 0..w.saturating_sub(1) {
            values.push(img.get(r, c).max(img.get(r, c + 1)));
        }
    }
    for r in 0..h.saturating_sub(1) {
        for c in 0..w {
            values.push(img.get(r, c).max(img.get(r + 1, c)));
        }
    }
    for r in 0..h.saturating_sub(1) {
        for c in 0..w.saturating_sub(1) {
            let m = img
                .get(r, c)
                .max(img.get(r, c + 1))
                .max(img.get(r + 1, c))
                .max(img.get(r + 1, c + 1));
            values.push(m);
        }
    }
    FilteredComplex::from_cell_values(w, h, values).expect("grid sized from a valid image")
}

/// Cell and component counts of the sublevel complex at some threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SublevelCounts {
    pub vertices: usize,
    pub edges: usize,
    pub squares: usize,
    pub components: usize,
}

impl SublevelCounts {
    pub fn euler(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.squares as i64
    }
}

/// Counts included cells and connected components (union-find) at `eps`.
pub fn sublevel_counts(c: &FilteredComplex, eps: f64) -> SublevelCounts {
    let grid = c.grid();
    let mut parent: Vec<usize> = (0..grid.n_vertices()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut counts = SublevelCounts {
        vertices: 0,
        edges: 0,
        squares: 0,
        components: 0,
    };
    for id in 0..c.len() as u32 {
        if c.value(id) > eps {
            continue;
        }
        match c.dim(id) {
            0 => {
                counts.vertices += 1;
                counts.components += 1;
            }
            1 => {
                counts.edges += 1;
                let faces = c.faces(id);
                let (a, b) = (faces.as_slice()[0] as usize, faces.as_slice()[1] as usize);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                    counts.components -= 1;
                }
            }
            _ => counts.squares += 1,
        }
    }
    counts
}

/// Betti numbers `(b0, b1)` of the sublevel complex at `eps`.
///
/// `b0` comes from union-find; `b1 = b0 - chi` since `b2` vanishes for any
/// subcomplex of a planar grid.
pub fn betti_oracle(c: &FilteredComplex, eps: f64) -> (usize, usize) {
    let counts = sublevel_counts(c, eps);
    let b1 = counts.components as i64 - counts.euler();
    assert!(b1 >= 0, "negative beta_1 at eps = {eps}");
    (counts.components, b1 as usize)
}
