//! Test-function families, looked up by name.
//!
//! Every family draws inside the box `[-1/2, 1/2)^2` so that the spherical
//! means at the default scales stay inside the domain.

use std::collections::BTreeMap;

use anyhow::{bail, ensure, Context, Result};
use lacunary_core::{GranularFunction, Lattice};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Side of the box every family draws in.
pub const BOX_SIDE: f64 = 1.0;

/// A family name with its parameters, as it appears in a spec file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    #[serde(flatten)]
    pub params: Map<String, Value>,
}

impl FamilySpec {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    /// `name(k=v,...)`, used as the family column of the report.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let args: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}({})", self.name, args.join(";"))
    }
}

pub trait Family: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate(&self, lattice: &Lattice, seed: u64) -> Result<GranularFunction>;
}

type Factory = fn(&Map<String, Value>) -> Result<Box<dyn Family>>;

pub struct FamilyRegistry {
    entries: BTreeMap<&'static str, Factory>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut r = Self { entries: BTreeMap::new() };
        r.register("cube", |p| Ok(Box::new(Cube { side: num(p, "side", 0.25)? })));
        r.register("scattered-cubes", |p| {
            Ok(Box::new(ScatteredCubes { count: int(p, "count", 8)?, side: num(p, "side", 0.0625)? }))
        });
        r.register("cantor", |p| Ok(Box::new(Cantor { depth: int(p, "depth", 3)? as u32, ratio: num(p, "ratio", 0.25)? })));
        r.register("multilevel", |p| Ok(Box::new(Multilevel { levels: int(p, "levels", 4)? as u32 })));
        r.register("random-cells", |p| Ok(Box::new(RandomCells { density: num(p, "density", 0.05)? })));
        r
    }
}

impl FamilyRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.insert(name, factory);
    }

    pub fn get(&self, spec: &FamilySpec) -> Result<Box<dyn Family>> {
        let Some(factory) = self.entries.get(spec.name.as_str()) else {
            bail!("unknown family {:?}; known: {:?}", spec.name, self.names());
        };
        factory(&spec.params).with_context(|| format!("family {}", spec.label()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

pub fn generate(spec: &FamilySpec, lattice: &Lattice, seed: u64) -> Result<GranularFunction> {
    FamilyRegistry::default().get(spec)?.generate(lattice, seed)
}

fn num(p: &Map<String, Value>, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_f64().with_context(|| format!("parameter {key} must be a number")),
    }
}

fn int(p: &Map<String, Value>, key: &str, default: u64) -> Result<u64> {
    match p.get(key) {
        None => Ok(default),
        Some(v) => v.as_u64().with_context(|| format!("parameter {key} must be a non-negative integer")),
    }
}

/// The box in cells: `(first cell, cells per side)`.
fn box_cells(lattice: &Lattice) -> Result<(usize, usize)> {
    let d = lattice.delta();
    let start = (-BOX_SIDE / 2.0 - lattice.origin()[0]) / d;
    let side = BOX_SIDE / d;
    ensure!(
        lattice.origin()[0] == lattice.origin()[1] && start >= 0.0 && start + side <= lattice.n() as f64,
        "domain does not contain the box [-1/2, 1/2)^2"
    );
    ensure!(start.fract() == 0.0 && side.fract() == 0.0, "box is not aligned with the grid");
    Ok((start as usize, side as usize))
}

fn cells_of(side: f64, lattice: &Lattice) -> Result<usize> {
    let c = side / lattice.delta();
    ensure!(c >= 1.0 && c.fract() == 0.0 && (c as usize).is_power_of_two(), "side {side} is not a dyadic number of cells");
    Ok(c as usize)
}

fn paint(f: &mut GranularFunction, i0: usize, j0: usize, s: usize, v: f64) {
    for j in j0..j0 + s {
        for i in i0..i0 + s {
            f.set(i, j, v);
        }
    }
}

/// `χ_Q` for one dyadic cube; the seed picks its slot in the box.
pub struct Cube {
    pub side: f64,
}

impl Family for Cube {
    fn name(&self) -> &'static str {
        "cube"
    }

    fn generate(&self, lattice: &Lattice, seed: u64) -> Result<GranularFunction> {
        let (b0, bs) = box_cells(lattice)?;
        let s = cells_of(self.side, lattice)?;
        ensure!(s <= bs, "cube side {} exceeds the box", self.side);
        let slots = bs / s;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Seed 0 puts the lower-left corner at the origin.
        let (a, b) = if seed == 0 { (slots / 2, slots / 2) } else { (rng.gen_range(0..slots), rng.gen_range(0..slots)) };
        let mut f = GranularFunction::zeros(*lattice);
        paint(&mut f, b0 + a * s, b0 + b * s, s, 1.0);
        Ok(f)
    }
}

/// `count` disjoint dyadic cubes in distinct slots.
pub struct ScatteredCubes {
    pub count: u64,
    pub side: f64,
}

impl Family for ScatteredCubes {
    fn name(&self) -> &'static str {
        "scattered-cubes"
    }

    fn generate(&self, lattice: &Lattice, seed: u64) -> Result<GranularFunction> {
        let (b0, bs) = box_cells(lattice)?;
        let s = cells_of(self.side, lattice)?;
        let slots = bs / s;
        ensure!(self.count as usize <= slots * slots, "{} cubes do not fit in the box", self.count);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut all: Vec<usize> = (0..slots * slots).collect();
        all.shuffle(&mut rng);
        let mut f = GranularFunction::zeros(*lattice);
        for &t in &all[..self.count as usize] {
            paint(&mut f, b0 + (t % slots) * s, b0 + (t / slots) * s, s, 1.0);
        }
        Ok(f)
    }
}

/// Product Cantor set: each step keeps the two end intervals of relative length `ratio`.
pub struct Cantor {
    pub depth: u32,
    pub ratio: f64,
}

impl Family for Cantor {
    fn name(&self) -> &'static str {
        "cantor"
    }

    fn generate(&self, lattice: &Lattice, _seed: u64) -> Result<GranularFunction> {
        ensure!(self.ratio > 0.0 && self.ratio < 0.5, "cantor ratio must lie in (0, 1/2)");
        let (b0, bs) = box_cells(lattice)?;
        let mut intervals = vec![(0.0f64, bs as f64)];
        for _ in 0..self.depth {
            intervals = intervals
                .iter()
                .flat_map(|&(a, len)| {
                    let l = len * self.ratio;
                    [(a, l), (a + len - l, l)]
                })
                .collect();
        }
        let mut keep = vec![false; bs];
        for &(a, len) in &intervals {
            ensure!(a.fract() == 0.0 && len.fract() == 0.0 && len >= 1.0, "cantor depth {} is below the grain", self.depth);
            for c in a as usize..(a + len) as usize {
                keep[c] = true;
            }
        }
        Ok(GranularFunction::from_fn(*lattice, |i, j| {
            let inside = |c: usize| c >= b0 && c < b0 + bs && keep[c - b0];
            if inside(i) && inside(j) {
                1.0
            } else {
                0.0
            }
        }))
    }
}

/// Cubes of side 1/8 carrying the values `2^{-l}`, `l < levels`, two per level.
pub struct Multilevel {
    pub levels: u32,
}

impl Family for Multilevel {
    fn name(&self) -> &'static str {
        "multilevel"
    }

    fn generate(&self, lattice: &Lattice, seed: u64) -> Result<GranularFunction> {
        ensure!(self.levels >= 1, "multilevel needs at least one level");
        let (b0, bs) = box_cells(lattice)?;
        let s = cells_of(0.125, lattice)?;
        let slots = bs / s;
        let per_level = 2usize;
        let need = per_level * self.levels as usize;
        ensure!(need <= slots * slots, "{} levels do not fit in the box", self.levels);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut all: Vec<usize> = (0..slots * slots).collect();
        all.shuffle(&mut rng);
        let mut f = GranularFunction::zeros(*lattice);
        for (n, &t) in all[..need].iter().enumerate() {
            let v = 2f64.powi(-((n / per_level) as i32));
            paint(&mut f, b0 + (t % slots) * s, b0 + (t / slots) * s, s, v);
        }
        Ok(f)
    }
}

/// Independent cells of the box, each present with probability `density`.
pub struct RandomCells {
    pub density: f64,
}

impl Family for RandomCells {
    fn name(&self) -> &'static str {
        "random-cells"
    }

    fn generate(&self, lattice: &Lattice, seed: u64) -> Result<GranularFunction> {
        ensure!(self.density > 0.0 && self.density <= 1.0, "density must lie in (0, 1]");
        let (b0, bs) = box_cells(lattice)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = GranularFunction::zeros(*lattice);
        for j in b0..b0 + bs {
            for i in b0..b0 + bs {
                if rng.gen_bool(self.density) {
                    f.set(i, j, 1.0);
                }
            }
        }
        Ok(f)
    }
}
