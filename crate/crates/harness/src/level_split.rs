//! Splitting `f` into level pieces `f_i = f χ_{level(|f|/α) = i}`.
//!
//! Values are clamped into `[α, 1]` before the level is taken, so every
//! support cell lands in some piece.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use lacunary_core::grid::iterated_log;
use lacunary_core::GranularFunction;

pub trait LevelSplitter: Send + Sync {
    fn name(&self) -> &'static str;
    /// Level index of a support value `v` in `[alpha, 1]`.
    fn level(&self, v: f64, alpha: f64) -> i64;
}

/// Dyadic levels of `Log³(|f|/α)`.
///
/// `Log³` stays within a factor two of `log2 300` on `[1, 2^100]`, so this
/// splitter returns a single piece at every desk-scale input.
pub struct Log3;

/// Dyadic levels of `|f|/α` itself.
pub struct Value;

impl LevelSplitter for Log3 {
    fn name(&self) -> &'static str {
        "log3"
    }

    fn level(&self, v: f64, alpha: f64) -> i64 {
        iterated_log(3, v / alpha).expect("positive argument").log2().floor() as i64
    }
}

impl LevelSplitter for Value {
    fn name(&self) -> &'static str {
        "value"
    }

    fn level(&self, v: f64, alpha: f64) -> i64 {
        (v / alpha).log2().floor() as i64
    }
}

type Factory = fn() -> Box<dyn LevelSplitter>;

pub struct SplitterRegistry {
    entries: BTreeMap<&'static str, Factory>,
}

impl Default for SplitterRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register("log3", || Box::new(Log3));
        r.register("value", || Box::new(Value));
        r
    }
}

impl SplitterRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.insert(name, factory);
    }

    pub fn get(&self, name: &str) -> Result<Box<dyn LevelSplitter>> {
        match self.entries.get(name) {
            Some(f) => Ok(f()),
            None => bail!("unknown level splitter {name:?}; known: {:?}", self.names()),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

pub fn splitter(name: &str) -> Result<Box<dyn LevelSplitter>> {
    SplitterRegistry::default().get(name)
}

/// Pieces in increasing level; empty for `f = 0`.
pub fn level_split(s: &dyn LevelSplitter, f: &GranularFunction, alpha: f64) -> Vec<(i64, GranularFunction)> {
    let lattice = *f.lattice();
    let mut pieces: BTreeMap<i64, GranularFunction> = BTreeMap::new();
    for (idx, &v) in f.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let level = s.level(v.abs().clamp(alpha, 1.0), alpha);
        pieces.entry(level).or_insert_with(|| GranularFunction::zeros(lattice)).values_mut()[idx] = v;
    }
    pieces.into_iter().collect()
}

/// `count / Log⁴(1/α)`, the constant in the piece-count bound.
pub fn count_ratio(count: usize, alpha: f64) -> f64 {
    count as f64 / iterated_log(4, 1.0 / alpha).expect("positive argument")
}

#[cfg(test)]
mod tests {
    use super::*;
    use lacunary_core::Lattice;

    #[test]
    fn single_value_is_one_piece() {
        let l = Lattice::unit(1.0, 0.125).unwrap();
        let f = GranularFunction::from_fn(l, |i, _| if i < 3 { 1.0 } else { 0.0 });
        for name in ["log3", "value"] {
            let s = splitter(name).unwrap();
            let p = level_split(s.as_ref(), &f, 0.25);
            assert_eq!(p.len(), 1);
            assert_eq!(p[0].1, f);
            assert!(level_split(s.as_ref(), &GranularFunction::zeros(l), 0.25).is_empty());
        }
        assert!(splitter("quantile").is_err());
    }

    #[test]
    fn values_split_by_dyadic_level() {
        let l = Lattice::unit(1.0, 0.125).unwrap();
        let f = GranularFunction::from_fn(l, |i, _| if i < 4 { 2f64.powi(-(i as i32)) } else { 0.0 });
        let p = level_split(&Value, &f, 1.0 / 16.0);
        assert_eq!(p.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(level_split(&Log3, &f, 1.0 / 16.0).len(), 1);
    }
}
