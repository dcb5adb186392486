use super::{GridSet, Lattice};
use crate::{Error, Result};

/// A function constant on each cell of a lattice.
///
/// Values are finite. Most carriers are nonnegative, but signed values are
/// allowed so the same type holds bad parts and differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GranularFunction {
    lattice: Lattice,
    values: Vec<f64>,
}

impl GranularFunction {
    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, values: vec![0.0; lattice.len()] }
    }

    pub fn constant(lattice: Lattice, c: f64) -> Self {
        Self { lattice, values: vec![c; lattice.len()] }
    }

    pub fn from_values(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::Config(format!(
                "expected {} cell values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite cell value {v}")));
        }
        Ok(Self { lattice, values })
    }

    pub fn from_fn(lattice: Lattice, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(lattice.len());
        for j in 0..lattice.n() {
            for i in 0..lattice.n() {
                values.push(f(i, j));
            }
        }
        Self { lattice, values }
    }

    /// `c` on the set, zero elsewhere.
    pub fn indicator(set: &GridSet, c: f64) -> Self {
        let mut g = Self::zeros(*set.lattice());
        for (i, j) in set.cells() {
            let idx = g.lattice.index(i, j);
            g.values[idx] = c;
        }
        g
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.lattice.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.lattice.index(i, j);
        self.values[idx] = v;
    }

    /// `∫|f|`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.lattice.cell_area()
    }

    /// `∫f`, signed.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.lattice.cell_area()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.lattice.cell_area()
    }

    /// `∫ f g`.
    pub fn inner(&self, other: &GranularFunction) -> Result<f64> {
        self.lattice.check_same(&other.lattice)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(s * self.lattice.cell_area())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Cells with a nonzero value.
    pub fn support(&self) -> GridSet {
        let mut s = GridSet::empty(self.lattice);
        for (idx, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                s.insert_index(idx);
            }
        }
        s
    }

    /// `f · χ_E`.
    pub fn restrict(&self, set: &GridSet) -> Result<GranularFunction> {
        self.lattice.check_same(set.lattice())?;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| if set.contains_index(idx) { v } else { 0.0 })
            .collect();
        Ok(GranularFunction { lattice: self.lattice, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GranularFunction {
        GranularFunction { lattice: self.lattice, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: f64) -> GranularFunction {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> GranularFunction {
        self.map(f64::abs)
    }

    fn zip(&self, other: &GranularFunction, op: impl Fn(f64, f64) -> f64) -> Result<GranularFunction> {
        self.lattice.check_same(&other.lattice)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        Ok(GranularFunction { lattice: self.lattice, values })
    }

    pub fn add(&self, other: &GranularFunction) -> Result<GranularFunction> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GranularFunction) -> Result<GranularFunction> {
        self.zip(other, |a, b| a - b)
    }

    pub fn max(&self, other: &GranularFunction) -> Result<GranularFunction> {
        self.zip(other, f64::max)
    }

    pub fn add_assign(&mut self, other: &GranularFunction) -> Result<()> {
        self.lattice.check_same(&other.lattice)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    /// Largest absolute cellwise difference.
    pub fn max_abs_diff(&self, other: &GranularFunction) -> Result<f64> {
        self.lattice.check_same(&other.lattice)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Averages `2x2` blocks onto the coarser lattice.
    pub fn coarsen(&self) -> Option<GranularFunction> {
        let coarse = self.lattice.coarsen()?;
        Some(GranularFunction::from_fn(coarse, |i, j| {
            0.25 * (self.get(2 * i, 2 * j)
                + self.get(2 * i + 1, 2 * j)
                + self.get(2 * i, 2 * j + 1)
                + self.get(2 * i + 1, 2 * j + 1))
        }))
    }

    /// Same function on the lattice of half the grain.
    pub fn refine(&self) -> GranularFunction {
        let fine = self.lattice.refine();
        GranularFunction::from_fn(fine, |i, j| self.get(i / 2, j / 2))
    }

    /// The block of `s x s` cells at `(i0, j0)` as a function on its own lattice.
    pub fn window(&self, i0: usize, j0: usize, s: usize) -> Result<GranularFunction> {
        let n = self.lattice.n();
        if i0 + s > n || j0 + s > n {
            return Err(Error::Domain(format!("window {s} at ({i0}, {j0}) leaves the grid of side {n}")));
        }
        let d = self.lattice.delta();
        let o = self.lattice.origin();
        let local = Lattice::new([o[0] + i0 as f64 * d, o[1] + j0 as f64 * d], d, s)?;
        let mut values = Vec::with_capacity(s * s);
        for j in j0..j0 + s {
            values.extend_from_slice(&self.values[j * n + i0..j * n + i0 + s]);
        }
        Ok(GranularFunction { lattice: local, values })
    }

    /// Inverse of [`window`](Self::window): this function placed at `(i0, j0)` of `global`.
    pub fn embed(&self, global: Lattice, i0: usize, j0: usize) -> Result<GranularFunction> {
        let s = self.lattice.n();
        let n = global.n();
        if i0 + s > n || j0 + s > n || self.lattice.delta() != global.delta() {
            return Err(Error::Domain(format!("block of side {s} at ({i0}, {j0}) does not fit the grid")));
        }
        let mut out = GranularFunction::zeros(global);
        for j in 0..s {
            out.values[(j0 + j) * n + i0..(j0 + j) * n + i0 + s].copy_from_slice(&self.values[j * s..(j + 1) * s]);
        }
        Ok(out)
    }

    /// Integral over an axis-aligned cell block `[i0, i0+s) x [j0, j0+s)`.
    pub fn block_integral(&self, i0: usize, j0: usize, s: usize) -> f64 {
        let n = self.lattice.n();
        let mut acc = 0.0;
        for j in j0..(j0 + s).min(n) {
            let row = &self.values[j * n..(j + 1) * n];
            acc += row[i0..(i0 + s).min(n)].iter().map(|v| v.abs()).sum::<f64>();
        }
        acc * self.lattice.cell_area()
    }
}
