//! Spherical means, the lacunary maximal function and the dyadic
//! Hardy-Littlewood maximal function.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spherical::{circle_measure, convolve_with, Auto, ConvolutionBackend};
use crate::{Error, GranularFunction, GridSet, Result};

/// Inclusive range of dyadic scales `k`, radius `2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub kmin: i32,
    pub kmax: i32,
}

impl ScaleRange {
    pub fn new(kmin: i32, kmax: i32) -> Result<Self> {
        if kmin > kmax {
            return Err(Error::EmptyRange);
        }
        Ok(Self { kmin, kmax })
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.kmin..=self.kmax
    }

    pub fn len(&self) -> usize {
        (self.kmax - self.kmin + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `A_k f = f * sigma_k`.
pub fn spherical_mean(f: &GranularFunction, k: i32) -> Result<GranularFunction> {
    spherical_mean_with(&Auto, f, k)
}

pub fn spherical_mean_with(backend: &dyn ConvolutionBackend, f: &GranularFunction, k: i32) -> Result<GranularFunction> {
    let sigma = circle_measure(k, f.lattice().delta())?;
    convolve_with(backend, &sigma, f)
}

/// `sup_k |A_k f|` over the range.
pub fn lacunary_maximal(f: &GranularFunction, range: ScaleRange) -> Result<GranularFunction> {
    lacunary_maximal_with(&Auto, f, range)
}

pub fn lacunary_maximal_with(
    backend: &dyn ConvolutionBackend,
    f: &GranularFunction,
    range: ScaleRange,
) -> Result<GranularFunction> {
    let ks: Vec<i32> = range.iter().collect();
    let means: Vec<GranularFunction> =
        ks.par_iter().map(|&k| spherical_mean_with(backend, f, k)).collect::<Result<_>>()?;
    let mut out = GranularFunction::zeros(*f.lattice());
    for m in &means {
        for (o, v) in out.values_mut().iter_mut().zip(m.values()) {
            *o = o.max(v.abs());
        }
    }
    Ok(out)
}

/// Dyadic maximal function: at each cell, the largest average of `|f|` over
/// a dyadic cube containing it.
pub fn hardy_littlewood(f: &GranularFunction) -> GranularFunction {
    let lattice = *f.lattice();
    let depth = lattice.depth() as usize;
    // levels[l] holds averages over cubes of side n >> l, indexed row-major.
    let mut levels: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    levels[depth] = f.values().iter().map(|v| v.abs()).collect();
    for l in (0..depth).rev() {
        let m = 1usize << l;
        let fine = &levels[l + 1];
        let w = 2 * m;
        levels[l] = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx % m, idx / m);
                0.25 * (fine[2 * j * w + 2 * i]
                    + fine[2 * j * w + 2 * i + 1]
                    + fine[(2 * j + 1) * w + 2 * i]
                    + fine[(2 * j + 1) * w + 2 * i + 1])
            })
            .collect();
    }
    let mut sup = levels[0].clone();
    for l in 1..=depth {
        let m = 1usize << l;
        sup = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx % m, idx / m);
                levels[l][idx].max(sup[(j / 2) * (m / 2) + i / 2])
            })
            .collect();
    }
    GranularFunction::from_values(lattice, sup).expect("averages of finite values")
}

/// `{g > alpha}`.
pub fn superlevel(g: &GranularFunction, alpha: f64) -> GridSet {
    let mut s = GridSet::empty(*g.lattice());
    for (idx, &v) in g.values().iter().enumerate() {
        if v > alpha {
            s.insert_index(idx);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{DyadicCube, Lattice};

    #[test]
    fn hl_of_dyadic_indicator() {
        let l = Lattice::unit(1.0, 1.0 / 16.0).unwrap();
        let q = DyadicCube::from_cells(&l, 4, 8, 4).unwrap();
        let f = GranularFunction::indicator(&q.to_set(&l), 1.0);
        let m = hardy_littlewood(&f);
        for (i, j) in q.to_set(&l).cells() {
            assert_eq!(m.get(i, j), 1.0);
        }
        assert_eq!(m.get(0, 0), 1.0 / 16.0);
        let c = GranularFunction::constant(l, 0.3);
        assert!(hardy_littlewood(&c).max_abs_diff(&c).unwrap() < 1e-15);
    }

    #[test]
    fn superlevel_is_strict() {
        let l = Lattice::unit(1.0, 0.25).unwrap();
        let g = GranularFunction::from_fn(l, |i, _| i as f64 * 0.25);
        assert_eq!(superlevel(&g, 0.5).count(), 4);
        assert!(superlevel(&GranularFunction::zeros(l), 0.1).is_empty());
    }

    #[test]
    fn empty_range() {
        assert!(matches!(ScaleRange::new(2, 1), Err(Error::EmptyRange)));
    }
}
