use crate::{DyadicCube, Error, GranularFunction, Lattice, Result};

/// Orthonormal polynomials of degree at most `degree` on a cube of `cells x cells`
/// cells, rescaled to `[-1/2, 1/2]^2`.
///
/// The inner product is the cell-centre average `(1/s^2) Σ a(x_c) b(x_c)`,
/// which is the exact `L^2` average for granular functions, so projections
/// are exactly idempotent up to rounding. When the cube has too few cells to
/// separate all monomials, dependent ones are dropped.
#[derive(Clone, Debug)]
pub struct PolyBasis {
    degree: u32,
    cells: usize,
    exponents: Vec<(u32, u32)>,
    /// `coeffs[j][m]`: coefficient of monomial `m` in `P_j`.
    coeffs: Vec<Vec<f64>>,
    /// `table[j][c]`: `P_j` at cell `c` (row-major within the cube).
    table: Vec<Vec<f64>>,
}

fn monomials(degree: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for a in (0..=total).rev() {
            out.push((a, total - a));
        }
    }
    out
}

impl PolyBasis {
    pub fn new(degree: u32, cells: usize) -> Self {
        let exponents = monomials(degree);
        let s = cells as f64;
        let centers: Vec<(f64, f64)> = (0..cells * cells)
            .map(|c| (((c % cells) as f64 + 0.5) / s - 0.5, ((c / cells) as f64 + 0.5) / s - 0.5))
            .collect();
        let inner = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (s * s);
        let mut coeffs: Vec<Vec<f64>> = Vec::new();
        let mut table: Vec<Vec<f64>> = Vec::new();
        for (m, &(ex, ey)) in exponents.iter().enumerate() {
            let raw: Vec<f64> = centers.iter().map(|&(x, y)| x.powi(ex as i32) * y.powi(ey as i32)).collect();
            let raw_norm = inner(&raw, &raw).sqrt();
            let mut v = raw.clone();
            let mut c = vec![0.0; exponents.len()];
            c[m] = 1.0;
            for _ in 0..2 {
                for (p, pc) in table.iter().zip(&coeffs) {
                    let t = inner(&v, p);
                    v.iter_mut().zip(p).for_each(|(a, b)| *a -= t * b);
                    c.iter_mut().zip(pc).for_each(|(a, b)| *a -= t * b);
                }
            }
            let norm = inner(&v, &v).sqrt();
            if raw_norm == 0.0 || norm < 1e-8 * raw_norm {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            c.iter_mut().for_each(|a| *a /= norm);
            table.push(v);
            coeffs.push(c);
        }
        Self { degree, cells, exponents, coeffs, table }
    }

    pub fn for_cube(degree: u32, lattice: &Lattice, q: &DyadicCube) -> Self {
        Self::new(degree, q.cells(lattice))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of basis polynomials `L`.
    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    pub fn coefficients(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    /// `P_j` at a point of `[-1/2, 1/2]^2`.
    pub fn eval(&self, j: usize, x: [f64; 2]) -> f64 {
        self.exponents
            .iter()
            .zip(&self.coeffs[j])
            .map(|(&(a, b), c)| c * x[0].powi(a as i32) * x[1].powi(b as i32))
            .sum()
    }

    /// `P_j` at local cell `c` of the cube.
    pub fn at_cell(&self, j: usize, c: usize) -> f64 {
        self.table[j][c]
    }

    /// Gram matrix under the discrete inner product.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let s2 = (self.cells * self.cells) as f64;
        self.table
            .iter()
            .map(|a| self.table.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / s2).collect())
            .collect()
    }

    fn check(&self, lattice: &Lattice, q: &DyadicCube) -> Result<()> {
        if q.cells(lattice) != self.cells {
            return Err(Error::Config(format!(
                "basis built for {} cells per side, cube has {}",
                self.cells,
                q.cells(lattice)
            )));
        }
        Ok(())
    }

    /// `(1/s^2) Σ_{c in q} h(c) P_j(c)` for each `j`.
    pub fn moments(&self, h: &GranularFunction, q: &DyadicCube) -> Result<Vec<f64>> {
        let lattice = h.lattice();
        self.check(lattice, q)?;
        let s = self.cells;
        let s2 = (s * s) as f64;
        Ok(self
            .table
            .iter()
            .map(|p| {
                let mut acc = 0.0;
                for b in 0..s {
                    for a in 0..s {
                        acc += h.get(q.i + a, q.j + b) * p[b * s + a];
                    }
                }
                acc / s2
            })
            .collect())
    }
}

/// `Π_q[h] = χ_q Σ_j P_j(x̂) <h, P_j>_q`.
pub fn poly_project(h: &GranularFunction, q: &DyadicCube, basis: &PolyBasis) -> Result<GranularFunction> {
    let coeffs = basis.moments(h, q)?;
    let s = basis.cells();
    let mut out = GranularFunction::zeros(*h.lattice());
    for b in 0..s {
        for a in 0..s {
            let c = b * s + a;
            let v: f64 = coeffs.iter().enumerate().map(|(j, w)| w * basis.at_cell(j, c)).sum();
            out.set(q.i + a, q.j + b, v);
        }
    }
    Ok(out)
}

/// `b_q = f χ_q - Π_q[f χ_q]`.
pub fn bad_part(f: &GranularFunction, q: &DyadicCube, basis: &PolyBasis) -> Result<GranularFunction> {
    let lattice = f.lattice();
    let fq = f.restrict(&q.to_set(lattice))?;
    let p = poly_project(&fq, q, basis)?;
    fq.sub(&p)
}
