use serde::{Deserialize, Serialize};

use super::{GranularFunction, GridSet, Lattice};

/// A lattice-aligned dyadic cube.
///
/// `level` 0 is the whole domain; each level halves the side. The cube covers
/// cells `[i, i + s) x [j, j + s)` where `s = n >> level` and `(i, j)` is a
/// multiple of `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub i: usize,
    pub j: usize,
}

impl DyadicCube {
    pub fn root() -> Self {
        Self { level: 0, i: 0, j: 0 }
    }

    /// The single cell `(i, j)` as a cube.
    pub fn cell(lattice: &Lattice, i: usize, j: usize) -> Self {
        Self { level: lattice.depth(), i, j }
    }

    /// Cube with side `cells` (power of two) whose lower-left cell is `(i, j)`.
    pub fn from_cells(lattice: &Lattice, i: usize, j: usize, cells: usize) -> Option<Self> {
        if !cells.is_power_of_two() || cells > lattice.n() || i % cells != 0 || j % cells != 0 {
            return None;
        }
        Some(Self { level: lattice.depth() - cells.trailing_zeros(), i, j })
    }

    /// Side in cells.
    pub fn cells(&self, lattice: &Lattice) -> usize {
        lattice.n() >> self.level
    }

    /// Side length `l(Q)`.
    pub fn side(&self, lattice: &Lattice) -> f64 {
        self.cells(lattice) as f64 * lattice.delta()
    }

    pub fn diam(&self, lattice: &Lattice) -> f64 {
        self.side(lattice) * std::f64::consts::SQRT_2
    }

    pub fn lower_left(&self, lattice: &Lattice) -> [f64; 2] {
        let o = lattice.origin();
        [o[0] + self.i as f64 * lattice.delta(), o[1] + self.j as f64 * lattice.delta()]
    }

    pub fn center(&self, lattice: &Lattice) -> [f64; 2] {
        let ll = self.lower_left(lattice);
        let h = self.side(lattice) / 2.0;
        [ll[0] + h, ll[1] + h]
    }

    pub fn is_cell(&self, lattice: &Lattice) -> bool {
        self.level == lattice.depth()
    }

    pub fn parent(&self, lattice: &Lattice) -> Option<Self> {
        if self.level == 0 {
            return None;
        }
        let s = 2 * self.cells(lattice);
        Some(Self { level: self.level - 1, i: self.i / s * s, j: self.j / s * s })
    }

    pub fn children(&self, lattice: &Lattice) -> Option<[Self; 4]> {
        if self.is_cell(lattice) {
            return None;
        }
        let h = self.cells(lattice) / 2;
        let l = self.level + 1;
        Some([
            Self { level: l, i: self.i, j: self.j },
            Self { level: l, i: self.i + h, j: self.j },
            Self { level: l, i: self.i, j: self.j + h },
            Self { level: l, i: self.i + h, j: self.j + h },
        ])
    }

    pub fn contains_cell(&self, lattice: &Lattice, i: usize, j: usize) -> bool {
        let s = self.cells(lattice);
        i >= self.i && i < self.i + s && j >= self.j && j < self.j + s
    }

    /// Whether `other` lies inside `self`.
    pub fn contains(&self, lattice: &Lattice, other: &DyadicCube) -> bool {
        other.level >= self.level && self.contains_cell(lattice, other.i, other.j)
    }

    pub fn to_set(&self, lattice: &Lattice) -> GridSet {
        let mut s = GridSet::empty(*lattice);
        let c = self.cells(lattice);
        for j in self.j..self.j + c {
            s.insert_row_span(j, self.i, self.i + c);
        }
        s
    }

    /// All dyadic sub-cubes of `self` at every level, largest first.
    pub fn descendants(&self, lattice: &Lattice) -> Vec<DyadicCube> {
        let mut out = Vec::new();
        for level in self.level..=lattice.depth() {
            let s = lattice.n() >> level;
            let c = self.cells(lattice);
            for j in (self.j..self.j + c).step_by(s) {
                for i in (self.i..self.i + c).step_by(s) {
                    out.push(DyadicCube { level, i, j });
                }
            }
        }
        out
    }
}

/// Integer prefix counts of a set, for O(1) block membership queries.
pub struct CountTable {
    n: usize,
    table: Vec<u32>,
}

impl CountTable {
    pub fn new(set: &GridSet) -> Self {
        let n = set.lattice().n();
        let mut table = vec![0u32; (n + 1) * (n + 1)];
        for j in 0..n {
            for i in 0..n {
                let v = set.contains(i, j) as u32;
                table[(j + 1) * (n + 1) + i + 1] =
                    v + table[j * (n + 1) + i + 1] + table[(j + 1) * (n + 1) + i] - table[j * (n + 1) + i];
            }
        }
        Self { n, table }
    }

    /// Members in cells `[i0, i1) x [j0, j1)`.
    pub fn count(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> u32 {
        let w = self.n + 1;
        self.table[j1 * w + i1] + self.table[j0 * w + i0] - self.table[j0 * w + i1] - self.table[j1 * w + i0]
    }
}

/// Prefix sums of `|f|` in exact cell units, for block integrals.
pub struct MassTable {
    n: usize,
    area: f64,
    table: Vec<f64>,
}

impl MassTable {
    pub fn new(f: &GranularFunction) -> Self {
        let n = f.lattice().n();
        let mut table = vec![0.0; (n + 1) * (n + 1)];
        for j in 0..n {
            let mut row = 0.0;
            for i in 0..n {
                row += f.get(i, j).abs();
                table[(j + 1) * (n + 1) + i + 1] = table[j * (n + 1) + i + 1] + row;
            }
        }
        Self { n, area: f.lattice().cell_area(), table }
    }

    pub fn integral(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> f64 {
        let w = self.n + 1;
        let s = self.table[j1 * w + i1] - self.table[j0 * w + i1] - self.table[j1 * w + i0] + self.table[j0 * w + i0];
        s * self.area
    }

    pub fn cube(&self, lattice: &Lattice, q: &DyadicCube) -> f64 {
        let s = q.cells(lattice);
        self.integral(q.i, q.j, q.i + s, q.j + s)
    }
}

/// Maximal dyadic cubes whose union is `set`, in top-down scan order.
pub fn maximal_dyadic_cover(set: &GridSet) -> Vec<DyadicCube> {
    let lattice = *set.lattice();
    let counts = CountTable::new(set);
    let mut out = Vec::new();
    let mut stack = vec![DyadicCube::root()];
    while let Some(q) = stack.pop() {
        let s = q.cells(&lattice);
        let c = counts.count(q.i, q.j, q.i + s, q.j + s) as usize;
        if c == 0 {
            continue;
        }
        if c == s * s {
            out.push(q);
            continue;
        }
        if let Some(ch) = q.children(&lattice) {
            stack.extend(ch.iter().rev());
        }
    }
    out
}

/// `λ(E) = Σ l(Q)` over the maximal dyadic cover.
pub fn length_of(set: &GridSet) -> f64 {
    let lattice = set.lattice();
    maximal_dyadic_cover(set).iter().map(|q| q.side(lattice)).sum()
}
