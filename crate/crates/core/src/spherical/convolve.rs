use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::DiscreteMeasure;
use crate::{Error, GranularFunction, GridSet, Result};

/// A way of evaluating `(mu * f)(x) = Σ w f(x - a)` on the lattice of `f`.
///
/// Backends may assume the front end has already checked grains and padding.
pub trait ConvolutionBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn convolve(&self, mu: &DiscreteMeasure, f: &GranularFunction) -> GranularFunction;
}

/// Row-gather over the nonzero column span of each source row.
pub struct Direct;

/// Zero-padded 2-D FFT on a power-of-two square of side at least `n + reach`.
pub struct Fft;

/// Picks [`Direct`] or [`Fft`] from a flop estimate.
pub struct Auto;

impl ConvolutionBackend for Direct {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn convolve(&self, mu: &DiscreteMeasure, f: &GranularFunction) -> GranularFunction {
        let n = f.lattice().n();
        let vals = f.values();
        let spans: Vec<Option<(usize, usize)>> = (0..n)
            .map(|j| {
                let row = &vals[j * n..(j + 1) * n];
                let lo = row.iter().position(|&v| v != 0.0)?;
                let hi = row.iter().rposition(|&v| v != 0.0)? + 1;
                Some((lo, hi))
            })
            .collect();
        let mut out = vec![0.0; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for a in mu.atoms() {
                let y = j as i64 - a.offset[1];
                if y < 0 || y >= n as i64 {
                    continue;
                }
                let y = y as usize;
                let Some((lo, hi)) = spans[y] else { continue };
                let src = &vals[y * n..(y + 1) * n];
                let i0 = (lo as i64 + a.offset[0]).max(0);
                let i1 = (hi as i64 + a.offset[0]).min(n as i64);
                for i in i0..i1 {
                    row[i as usize] += a.weight * src[(i - a.offset[0]) as usize];
                }
            }
        });
        GranularFunction::from_values(*f.lattice(), out).expect("finite inputs give finite sums")
    }
}

fn fft2(data: &mut [Complex<f64>], m: usize, fft: &Arc<dyn rustfft::Fft<f64>>) {
    data.par_chunks_mut(m).for_each(|row| fft.process(row));
    let mut t = vec![Complex::default(); m * m];
    for j in 0..m {
        for i in 0..m {
            t[i * m + j] = data[j * m + i];
        }
    }
    t.par_chunks_mut(m).for_each(|col| fft.process(col));
    for j in 0..m {
        for i in 0..m {
            data[j * m + i] = t[i * m + j];
        }
    }
}

impl ConvolutionBackend for Fft {
    fn name(&self) -> &'static str {
        "fft"
    }

    fn convolve(&self, mu: &DiscreteMeasure, f: &GranularFunction) -> GranularFunction {
        let n = f.lattice().n();
        let m = (n + mu.reach() as usize).next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut a = vec![Complex::default(); m * m];
        for j in 0..n {
            for i in 0..n {
                a[j * m + i].re = f.get(i, j);
            }
        }
        let mut b = vec![Complex::default(); m * m];
        let mi = m as i64;
        for at in mu.atoms() {
            let i = at.offset[0].rem_euclid(mi) as usize;
            let j = at.offset[1].rem_euclid(mi) as usize;
            b[j * m + i].re += at.weight;
        }
        fft2(&mut a, m, &fwd);
        fft2(&mut b, m, &fwd);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        fft2(&mut a, m, &inv);
        let scale = 1.0 / (m * m) as f64;
        GranularFunction::from_fn(*f.lattice(), |i, j| a[j * m + i].re * scale)
    }
}

impl ConvolutionBackend for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn convolve(&self, mu: &DiscreteMeasure, f: &GranularFunction) -> GranularFunction {
        let n = f.lattice().n();
        let nnz = f.values().iter().filter(|&&v| v != 0.0).count();
        let m = (n + mu.reach() as usize).next_power_of_two();
        let direct_cost = (nnz * mu.atoms().len()) as f64;
        let fft_cost = 12.0 * (m * m) as f64 * (m as f64).log2();
        if direct_cost <= fft_cost {
            Direct.convolve(mu, f)
        } else {
            Fft.convolve(mu, f)
        }
    }
}

type Factory = fn() -> Box<dyn ConvolutionBackend>;

/// Name-keyed table of convolution backends.
pub struct BackendRegistry {
    entries: BTreeMap<&'static str, Factory>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register("direct", || Box::new(Direct));
        r.register("fft", || Box::new(Fft));
        r.register("auto", || Box::new(Auto));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.insert(name, factory);
    }

    pub fn get(&self, name: &str) -> Result<Box<dyn ConvolutionBackend>> {
        self.entries
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::Config(format!("unknown convolution backend {name:?}; known: {:?}", self.names())))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

/// Looks a backend up in the default registry.
pub fn backend(name: &str) -> Result<Box<dyn ConvolutionBackend>> {
    BackendRegistry::default().get(name)
}

/// Checks grains and that `supp f + supp mu` stays inside the domain.
pub fn check_padding(mu: &DiscreteMeasure, f: &GranularFunction) -> Result<()> {
    if mu.delta() != f.lattice().delta() {
        return Err(Error::Config(format!(
            "measure grain {} differs from function grain {}",
            mu.delta(),
            f.lattice().delta()
        )));
    }
    let Some((i0, j0, i1, j1)) = f.support().bounding_box() else { return Ok(()) };
    if mu.is_empty() {
        return Ok(());
    }
    let n = f.lattice().n() as i64;
    let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
    for a in mu.atoms() {
        for c in 0..2 {
            lo[c] = lo[c].min(a.offset[c]);
            hi[c] = hi[c].max(a.offset[c]);
        }
    }
    let fits = i0 as i64 + lo[0] >= 0
        && j0 as i64 + lo[1] >= 0
        && i1 as i64 + hi[0] < n
        && j1 as i64 + hi[1] < n;
    if !fits {
        return Err(Error::DomainOverflow(format!(
            "support box ({i0},{j0})-({i1},{j1}) shifted by offsets in [{lo:?}, {hi:?}] leaves the {n}x{n} grid"
        )));
    }
    Ok(())
}

/// `mu * f` with the given backend, after the padding check.
pub fn convolve_with(
    backend: &dyn ConvolutionBackend,
    mu: &DiscreteMeasure,
    f: &GranularFunction,
) -> Result<GranularFunction> {
    check_padding(mu, f)?;
    Ok(backend.convolve(mu, f))
}

/// `mu * f` with the automatic backend.
pub fn convolve(mu: &DiscreteMeasure, f: &GranularFunction) -> Result<GranularFunction> {
    convolve_with(&Auto, mu, f)
}

/// Exact support of `mu * χ_E` by dilation; the flag reports clipping.
pub fn convolution_support(mu: &DiscreteMeasure, set: &GridSet) -> (GridSet, bool) {
    set.dilate(&mu.offsets())
}
