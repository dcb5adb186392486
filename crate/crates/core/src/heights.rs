//! Height decomposition of `sigma_k * f^γ`.
//!
//! Every grain `ω` and circle sample `θ` gets a height: the largest `i` such
//! that some rectangle through `ω`, whose double cap contains `θ`, carries
//! at least `c_{n-1} 2^i γ`. The grain cap at height `i` keeps the samples of
//! height at least `i`, so `g^i` collects the mass `f(ω)/P` deposited at
//! `ω + θ` for those samples. Sorting each deposit into a bucket by height
//! gives the light term, the intermediate differences `g^i - g^{i+1}` and the
//! heavy tail, which add back up to `sigma_k * f^γ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exceptional::{
    bin_rect_masses, cap_width, heavy_threshold, in_double_arc, scale_grid, scale_ladder, ExceptionalConfig,
    ScaleLadder,
};
use crate::grid::{clog2, iterated_log};
use crate::spherical::{
    autocorrelation_kernel, check_padding, circle_measure, circle_samples, convolve_with, direction_net, CircleSample, Direct, DiscreteMeasure, MeasureSupport, OrientedRect, RectGrid,
};
use crate::{Error, GranularFunction, Result};

/// `m = floor(k(d-1) - log2(γ/α)) - ceil(c_iter · log log log (1/α))`.
pub fn critical_height(k: i32, gamma: f64, alpha: f64, d: u32, c_iter: f64) -> i64 {
    let base = (k as f64 * (d - 1) as f64 - (gamma / alpha).log2()).floor() as i64;
    base - (c_iter * lll(alpha)).ceil() as i64
}

/// `i_top = ceil(k(d-1) - log2(γ/α) + log log log (1/α))`.
pub fn top_height(k: i32, gamma: f64, alpha: f64, d: u32) -> i64 {
    (k as f64 * (d - 1) as f64 - (gamma / alpha).log2() + lll(alpha)).ceil() as i64
}

/// Triple clamped logarithm of `1/α`.
pub fn lll(alpha: f64) -> f64 {
    clog2(clog2(clog2(1.0 / alpha)))
}

/// Largest integer `i` with `mass >= c_prev 2^i γ`, using the heavy-rectangle test itself.
pub fn rect_height(mass: f64, c_prev: f64, gamma: f64) -> i64 {
    if !(mass > 0.0) {
        return i64::MIN;
    }
    let heavy = |i: i64| mass >= heavy_threshold(c_prev, 2f64.powi(i as i32), gamma);
    let mut i = (mass / (c_prev * gamma)).log2().floor() as i64;
    while heavy(i + 1) {
        i += 1;
    }
    while !heavy(i) {
        i -= 1;
    }
    i
}

struct Layer {
    grid: RectGrid,
    heights: BTreeMap<[i64; 2], i64>,
    /// Indices of the circle samples inside the double cap.
    arc: Vec<u32>,
}

/// Per-rectangle heights of one piece at one scale `k`.
pub struct HeightField {
    lattice: crate::Lattice,
    samples: Vec<CircleSample>,
    layers: Vec<Layer>,
    ladder: ScaleLadder,
}

/// Marker for "no rectangle reaches the floor".
pub const NO_HEIGHT: i64 = i64::MIN;

impl HeightField {
    /// Rectangles below `floor` are ignored, since they cannot change a bucket.
    pub fn new(piece: &GranularFunction, cfg: &ExceptionalConfig, floor: i64) -> Result<Self> {
        let ladder = scale_ladder(cfg)?;
        let lattice = *piece.lattice();
        let samples = circle_samples(cfg.k, lattice.delta())?;
        let mut layers = Vec::new();
        for i in 1..=ladder.top() {
            let width = cap_width(&ladder, i, cfg);
            for dir in direction_net(ladder.c(i), ladder.c(i - 1))? {
                let grid = scale_grid(dir, &ladder, i);
                let heights: BTreeMap<_, _> = bin_rect_masses(piece, &grid)
                    .into_iter()
                    .map(|(idx, mass)| (idx, rect_height(mass, ladder.c(i - 1), cfg.gamma)))
                    .filter(|&(_, h)| h != NO_HEIGHT && h >= floor)
                    .collect();
                if heights.is_empty() {
                    continue;
                }
                let arc = samples
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| in_double_arc(s.angle, dir, width))
                    .map(|(m, _)| m as u32)
                    .collect();
                layers.push(Layer { grid, heights, arc });
            }
        }
        Ok(Self { lattice, samples, layers, ladder })
    }

    pub fn samples(&self) -> &[CircleSample] {
        &self.samples
    }

    pub fn ladder(&self) -> &ScaleLadder {
        &self.ladder
    }

    /// Height of every sample for grain `(i, j)`, written into `out`.
    pub fn grain_heights_into(&self, i: usize, j: usize, out: &mut Vec<i64>) {
        out.clear();
        out.resize(self.samples.len(), NO_HEIGHT);
        let c = self.lattice.center(i, j);
        for layer in &self.layers {
            if let Some(&h) = layer.heights.get(&layer.grid.index_of(c)) {
                for &m in &layer.arc {
                    let slot = &mut out[m as usize];
                    *slot = (*slot).max(h);
                }
            }
        }
    }

    pub fn grain_heights(&self, i: usize, j: usize) -> Vec<i64> {
        let mut out = Vec::new();
        self.grain_heights_into(i, j, &mut out);
        out
    }

    /// The heavy rectangles through grain `(i, j)` at height at least `floor`.
    pub fn rects_through(&self, i: usize, j: usize, floor: i64) -> Vec<(OrientedRect, i64)> {
        let c = self.lattice.center(i, j);
        self.layers
            .iter()
            .filter_map(|l| {
                let idx = l.grid.index_of(c);
                l.heights.get(&idx).filter(|&&h| h >= floor).map(|&h| (l.grid.rect(idx), h))
            })
            .collect()
    }
}

/// `σ_k` restricted to the samples of height at least `i` for one grain.
#[derive(Clone, Debug)]
pub struct GrainCapMeasure {
    pub grain: (usize, usize),
    pub height: i64,
    pub measure: DiscreteMeasure,
    /// Total subtended angle.
    pub theta: f64,
}

pub fn grain_cap(grain: (usize, usize), i: i64, piece: &GranularFunction, cfg: &ExceptionalConfig) -> Result<GrainCapMeasure> {
    let field = HeightField::new(piece, cfg, i)?;
    Ok(grain_cap_from(&field, grain, i, cfg.k))
}

pub fn grain_cap_from(field: &HeightField, grain: (usize, usize), i: i64, k: i32) -> GrainCapMeasure {
    let h = field.grain_heights(grain.0, grain.1);
    let p = field.samples.len();
    let w = 1.0 / p as f64;
    let chosen: Vec<_> = field.samples.iter().zip(&h).filter(|(_, &v)| v != NO_HEIGHT && v >= i).collect();
    let theta = chosen.len() as f64 * std::f64::consts::TAU / p as f64;
    let measure = DiscreteMeasure::from_weighted(
        field.lattice.delta(),
        MeasureSupport::CapUnion { k, theta },
        chosen.iter().map(|(s, _)| (s.offset, w)),
    );
    GrainCapMeasure { grain, height: i, measure, theta }
}

fn check_piece_padding(piece: &GranularFunction, k: i32) -> Result<()> {
    let sigma = circle_measure(k, piece.lattice().delta())?;
    check_padding(&sigma, piece)
}

/// Deposits `f(ω)/P` at `ω + θ` into a bucket chosen from the sample height.
fn deposit(
    piece: &GranularFunction,
    field: &HeightField,
    mut bucket: impl FnMut(i64) -> Option<i64>,
) -> BTreeMap<i64, GranularFunction> {
    let lattice = *piece.lattice();
    let n = lattice.n();
    let p = field.samples.len() as f64;
    let mut out: BTreeMap<i64, GranularFunction> = BTreeMap::new();
    let mut h = Vec::new();
    for (idx, &v) in piece.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (gi, gj) = (idx % n, idx / n);
        field.grain_heights_into(gi, gj, &mut h);
        let share = v / p;
        for (s, &hs) in field.samples.iter().zip(&h) {
            let Some(key) = bucket(hs) else { continue };
            let x = (gi as i64 + s.offset[0]) as usize;
            let y = (gj as i64 + s.offset[1]) as usize;
            let g = out.entry(key).or_insert_with(|| GranularFunction::zeros(lattice));
            g.values_mut()[y * n + x] += share;
        }
    }
    out
}

/// `g_k^{i,γ} = Σ_ω σ^{i}_{k,ω} * (f χ_ω)`.
pub fn height_projection(piece: &GranularFunction, i: i64, cfg: &ExceptionalConfig) -> Result<GranularFunction> {
    check_piece_padding(piece, cfg.k)?;
    let field = HeightField::new(piece, cfg, i)?;
    let mut b = deposit(piece, &field, |h| (h != NO_HEIGHT && h >= i).then_some(0));
    Ok(b.remove(&0).unwrap_or_else(|| GranularFunction::zeros(*piece.lattice())))
}

/// Light term, intermediate differences and heavy tail of `σ_k * f^γ`.
#[derive(Clone, Debug)]
pub struct HeightDecomposition {
    pub k: i32,
    pub m: i64,
    pub i_top: i64,
    /// `σ_k * f^γ - g^m`.
    pub light: GranularFunction,
    /// `(i, g^i - g^{i+1})` for `m <= i < i_top`, nonzero levels only.
    pub intermediates: Vec<(i64, GranularFunction)>,
    /// `g^{i_top}`.
    pub heavy_tail: GranularFunction,
    /// `σ_k * f^γ` by direct convolution.
    pub total: GranularFunction,
}

impl HeightDecomposition {
    /// Sup norm of `light + Σ intermediates + tail - total`.
    pub fn residual(&self) -> f64 {
        let mut sum = self.light.add(&self.heavy_tail).expect("same lattice");
        for (_, g) in &self.intermediates {
            sum.add_assign(g).expect("same lattice");
        }
        sum.max_abs_diff(&self.total).expect("same lattice")
    }

    pub fn intermediate(&self, i: i64) -> Option<&GranularFunction> {
        self.intermediates.iter().find(|(l, _)| *l == i).map(|(_, g)| g)
    }
}

const LIGHT: i64 = i64::MIN;
const TAIL: i64 = i64::MAX;

pub fn telescope(piece: &GranularFunction, cfg: &ExceptionalConfig) -> Result<HeightDecomposition> {
    check_piece_padding(piece, cfg.k)?;
    let m = critical_height(cfg.k, cfg.gamma, cfg.alpha, cfg.d, cfg.knobs.c_iter);
    let i_top = top_height(cfg.k, cfg.gamma, cfg.alpha, cfg.d).max(m);
    let field = HeightField::new(piece, cfg, m)?;
    let mut buckets = deposit(piece, &field, |h| {
        Some(if h == NO_HEIGHT || h < m {
            LIGHT
        } else if h >= i_top {
            TAIL
        } else {
            h
        })
    });
    let lattice = *piece.lattice();
    let mut take = |key| buckets.remove(&key).unwrap_or_else(|| GranularFunction::zeros(lattice));
    let light = take(LIGHT);
    let heavy_tail = take(TAIL);
    let intermediates = buckets.into_iter().collect();
    let sigma = circle_measure(cfg.k, lattice.delta())?;
    let total = convolve_with(&Direct, &sigma, piece)?;
    Ok(HeightDecomposition { k: cfg.k, m, i_top, light, intermediates, heavy_tail, total })
}

/// L¹ diagnostics of the intermediate terms over a set of scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    /// `‖Σ_k Σ_i (g^i - g^{i+1})‖₁ / (Log³(1/α) ‖f‖₁)`.
    pub total_ratio: f64,
    /// Entry `j`: `‖Σ_k (g^{m_k+j} - g^{m_k+j+1})‖₁ / ‖f‖₁`.
    pub per_offset: Vec<f64>,
}

pub fn l1_intermediate(piece: &GranularFunction, alpha: f64, decomps: &[HeightDecomposition]) -> Result<L1Report> {
    if decomps.is_empty() {
        return Err(Error::EmptyRange);
    }
    let mass = piece.mass();
    let lattice = *piece.lattice();
    let mut all = GranularFunction::zeros(lattice);
    let mut by_offset: BTreeMap<i64, GranularFunction> = BTreeMap::new();
    for d in decomps {
        for (i, g) in &d.intermediates {
            all.add_assign(g)?;
            by_offset.entry(i - d.m).or_insert_with(|| GranularFunction::zeros(lattice)).add_assign(g)?;
        }
    }
    if mass == 0.0 {
        return Ok(L1Report { total_ratio: 0.0, per_offset: Vec::new() });
    }
    let span = by_offset.keys().next_back().map_or(0, |&j| j + 1) as usize;
    let mut per_offset = vec![0.0; span];
    for (j, g) in by_offset {
        per_offset[j as usize] = g.mass() / mass;
    }
    Ok(L1Report { total_ratio: all.mass() / (iterated_log(3, 1.0 / alpha)? * mass), per_offset })
}

/// `‖L_k‖₂² (log log (1/α))² / (α ‖f‖₁)`, zero for a zero piece.
pub fn l2_light(dec: &HeightDecomposition, piece_mass: f64, alpha: f64) -> f64 {
    if piece_mass == 0.0 {
        return 0.0;
    }
    dec.light.l2_squared() * clog2(clog2(1.0 / alpha)).powi(2) / (alpha * piece_mass)
}

/// `‖σ_k * f‖₂² 2^{k(d-1)} / (γ log(1/α) ‖f‖₁)`, zero for a zero piece.
pub fn l2_global_scale_bound(piece: &GranularFunction, k: i32, gamma: f64, alpha: f64) -> Result<f64> {
    let mass = piece.mass();
    if mass == 0.0 {
        return Ok(0.0);
    }
    let sigma = circle_measure(k, piece.lattice().delta())?;
    let g = convolve_with(&Direct, &sigma, piece)?;
    Ok(g.l2_squared() * 2f64.powi(k) / (gamma * clog2(1.0 / alpha) * mass))
}

/// `(‖σ_k * f‖₂², <f, σ_k * σ_k * f>)`, two routes to the same number.
pub fn kernel_form_l2(piece: &GranularFunction, k: i32) -> Result<(f64, f64)> {
    let delta = piece.lattice().delta();
    let sigma = circle_measure(k, delta)?;
    let direct = convolve_with(&Direct, &sigma, piece)?.l2_squared();
    let kernel = autocorrelation_kernel(k, delta)?;
    let kl = *kernel.lattice();
    let h = (kl.n() / 2) as i64;
    let area = kl.cell_area();
    let atoms = kernel.values().iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(idx, &v)| {
        let (i, j) = kl.coords(idx);
        ([i as i64 - h, j as i64 - h], v * area)
    });
    let kk = DiscreteMeasure::from_weighted(delta, MeasureSupport::Kernel { k }, atoms);
    let kf = convolve_with(&Direct, &kk, piece)?;
    Ok((direct, piece.inner(&kf)?))
}

/// Outcome of the shell test for one grain and one domination rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellCertificate {
    /// First stage `L` whose leftover mass is within the budget, or the last stage tried.
    pub stage: u32,
    /// `∫_{ω + (R \ (R)_L)} |f| / (c_{i-1} γ 2^m)`.
    pub ratio: f64,
}

/// Walks the shells `(R)_L = R ∩ {c_i / (10·2^{L-1}) <= |x| <= 10 c_i}` of an
/// origin-centred `c_i x c_{i-1}` rectangle until the mass of `f` on
/// `ω + (R \ (R)_L)` drops to `c_{i-1} γ 2^m`.
pub fn mass_certificate(
    piece: &GranularFunction,
    grain: (usize, usize),
    rect: &OrientedRect,
    gamma: f64,
    m: i64,
) -> ShellCertificate {
    let lattice = *piece.lattice();
    let budget = rect.short * gamma * 2f64.powi(m as i32);
    let w = lattice.center(grain.0, grain.1);
    let n = lattice.n();
    // Radii |x| of cells x - ω inside R, with their masses.
    let mut inside: Vec<(f64, f64)> = Vec::new();
    for (idx, &v) in piece.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let c = lattice.center(idx % n, idx / n);
        let x = [c[0] - w[0], c[1] - w[1]];
        if rect.contains_closed(x) {
            inside.push(((x[0] * x[0] + x[1] * x[1]).sqrt(), v.abs() * lattice.cell_area()));
        }
    }
    let last = ((rect.long / (10.0 * rect.short)).log2().ceil().max(0.0) as u32) + 1;
    let mut stage = 1;
    loop {
        let inner = rect.long / (10.0 * 2f64.powi(stage as i32 - 1));
        let outside: f64 = inside.iter().filter(|(r, _)| *r < inner || *r > 10.0 * rect.long).map(|(_, m)| m).sum();
        let ratio = outside / budget;
        if ratio <= 1.0 || stage >= last {
            return ShellCertificate { stage, ratio };
        }
        stage += 1;
    }
}
