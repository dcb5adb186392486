//! The per-`(f, α)` pipeline and the sweep that runs it over a spec.
//!
//! Each row runs the level set, Whitney, bad-part, density, regime,
//! exceptional-set, height and endpoint stages in order. A stage error stops
//! that row and is recorded in its status; the columns of the stages that
//! did not run stay `None`.

use std::collections::HashMap;
use std::time::Instant;

use anyhow::{Context, Result};
use lacunary_core::cz::{bad_part, PolyBasis, WhitneyCube};
use lacunary_core::density::{decompose_all, verify_widths, CubeDecomposition};
use lacunary_core::exceptional::{
    exceptional_set, k2_height, piece_config, regime_exceptional_from, regime_partition, Knobs, Regime,
};
use lacunary_core::heights::{
    critical_height, kernel_form_l2, l1_intermediate, l2_global_scale_bound, l2_light, mass_certificate, telescope,
    HeightField,
};
use lacunary_core::maximal::{lacunary_maximal_with, ScaleRange};
use lacunary_core::spherical::{backend, kernel_domination_ratio, kernel_pointwise_ratio, ConvolutionBackend};
use lacunary_core::{DyadicCube, GranularFunction, GridSet, Lattice, OrientedRect};
use rayon::prelude::*;

use crate::families::{FamilyRegistry, FamilySpec};
use crate::level_split::{count_ratio, level_split, splitter};
use crate::ratios::{extrapolation_ratio_from, weak_type_ratio, weak_type_ratio_from};
use crate::spec::ExperimentSpec;

/// Tolerances of the invariant columns.
pub mod tol {
    pub const BQ_MOMENT: f64 = 1e-9;
    pub const RECONSTRUCTION: f64 = 1e-12;
    pub const TELESCOPING: f64 = 1e-10;
    pub const HOMOGENEITY: f64 = 1e-9;
    pub const KERNEL_L2: f64 = 1e-6;
    /// Whitney distance over diameter, for cubes above the grain floor.
    pub const WHITNEY_DIST: [f64; 2] = [1.0, 4.0];
}

/// Pieces per row that get the height decomposition, largest mass first.
pub const HEIGHT_PIECES: usize = 3;

/// Everything recorded for one `(family, α, seed)`.
#[derive(Clone, Debug, Default)]
pub struct Row {
    pub row: usize,
    pub family: String,
    pub seed: u64,
    pub alpha: f64,
    pub n: usize,
    pub delta: f64,
    pub kmin: i32,
    pub kmax: i32,
    pub splitter: String,
    pub knobs: String,
    /// `ok`, or the stage and reason that stopped the row.
    pub status: String,
    pub mass: Option<f64>,
    pub omega_measure: Option<f64>,
    pub whitney_cubes: Option<usize>,
    pub whitney_floor: Option<usize>,
    pub whitney_dist_min: Option<f64>,
    pub whitney_dist_max: Option<f64>,
    pub whitney_ok: Option<bool>,
    pub bq_moment_max: Option<f64>,
    pub recon_err: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub w_max: Option<f64>,
    pub c_pt: Option<f64>,
    pub c_dom: Option<f64>,
    pub n_k1: Option<usize>,
    pub n_k2: Option<usize>,
    pub n_k3: Option<usize>,
    pub n_heavy: Option<usize>,
    pub c_size: Option<f64>,
    pub c_a: Option<f64>,
    pub a_union_le_sum: Option<bool>,
    pub telescoping_max: Option<f64>,
    pub tail_contained: Option<bool>,
    pub c_l1: Option<f64>,
    pub l1_total: Option<f64>,
    pub c_l2: Option<f64>,
    pub c_2ess2: Option<f64>,
    pub kernel_l2_rel: Option<f64>,
    pub cert_ratio_max: Option<f64>,
    pub weak_type: Option<f64>,
    pub ext_01: Option<f64>,
    pub ext_1: Option<f64>,
    pub homog_err: Option<f64>,
    pub n_levels: Option<usize>,
    pub level_count_ratio: Option<f64>,
    pub level_recon_ok: Option<bool>,
    pub runtime_ms: u128,
    /// Sets kept for dumps.
    pub omega: Option<GridSet>,
    pub exceptional: Option<GridSet>,
}

/// Columns excluded from determinism comparisons.
pub const TIMING_COLUMNS: &[&str] = &["runtime_ms"];

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:e}"))
}

fn int(v: Option<usize>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

fn flag(v: Option<bool>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

impl Row {
    /// Every invariant column passes; an `n/a` invariant is vacuous.
    pub fn invariants_ok(&self) -> bool {
        let le = |v: Option<f64>, t: f64| v.map_or(true, |x| x <= t);
        self.status == "ok"
            && self.whitney_ok != Some(false)
            && le(self.bq_moment_max, tol::BQ_MOMENT)
            && le(self.recon_err, tol::RECONSTRUCTION)
            && self.a_union_le_sum != Some(false)
            && le(self.telescoping_max, tol::TELESCOPING)
            && self.tail_contained != Some(false)
            && le(self.kernel_l2_rel, tol::KERNEL_L2)
            && le(self.homog_err, tol::HOMOGENEITY)
            && self.level_recon_ok != Some(false)
    }

    /// Report cells in column order.
    pub fn cells(&self) -> Vec<(&'static str, String)> {
        vec![
            ("row", self.row.to_string()),
            ("family", self.family.clone()),
            ("seed", self.seed.to_string()),
            ("alpha", format!("{:e}", self.alpha)),
            ("n", self.n.to_string()),
            ("delta", format!("{:e}", self.delta)),
            ("kmin", self.kmin.to_string()),
            ("kmax", self.kmax.to_string()),
            ("splitter", self.splitter.clone()),
            ("knobs", self.knobs.clone()),
            ("status", self.status.clone()),
            ("mass", num(self.mass)),
            ("omega_measure", num(self.omega_measure)),
            ("whitney_cubes", int(self.whitney_cubes)),
            ("whitney_floor", int(self.whitney_floor)),
            ("whitney_dist_min", num(self.whitney_dist_min)),
            ("whitney_dist_max", num(self.whitney_dist_max)),
            ("whitney_ok", flag(self.whitney_ok)),
            ("bq_moment_max", num(self.bq_moment_max)),
            ("recon_err", num(self.recon_err)),
            ("r_min", num(self.r_min)),
            ("r_max", num(self.r_max)),
            ("w_max", num(self.w_max)),
            ("c_pt", num(self.c_pt)),
            ("c_dom", num(self.c_dom)),
            ("n_k1", int(self.n_k1)),
            ("n_k2", int(self.n_k2)),
            ("n_k3", int(self.n_k3)),
            ("n_heavy", int(self.n_heavy)),
            ("c_size", num(self.c_size)),
            ("c_a", num(self.c_a)),
            ("a_union_le_sum", flag(self.a_union_le_sum)),
            ("telescoping_max", num(self.telescoping_max)),
            ("tail_contained", flag(self.tail_contained)),
            ("c_l1", num(self.c_l1)),
            ("l1_total", num(self.l1_total)),
            ("c_l2", num(self.c_l2)),
            ("c_2ess2", num(self.c_2ess2)),
            ("kernel_l2_rel", num(self.kernel_l2_rel)),
            ("cert_ratio_max", num(self.cert_ratio_max)),
            ("weak_type", num(self.weak_type)),
            ("ext_0.1", num(self.ext_01)),
            ("ext_1", num(self.ext_1)),
            ("homog_err", num(self.homog_err)),
            ("n_levels", int(self.n_levels)),
            ("level_count_ratio", num(self.level_count_ratio)),
            ("level_recon_ok", flag(self.level_recon_ok)),
            ("invariants_ok", self.invariants_ok().to_string()),
            ("runtime_ms", self.runtime_ms.to_string()),
        ]
    }

    pub fn columns() -> Vec<&'static str> {
        Row::default().cells().into_iter().map(|(k, _)| k).collect()
    }
}

/// State shared by every row of a run.
pub struct RunContext {
    pub lattice: Lattice,
    pub range: ScaleRange,
    pub knobs: Knobs,
    pub splitter: String,
    pub backend: Box<dyn ConvolutionBackend>,
    pub families: FamilyRegistry,
    /// `(C_pt, C_dom)` maximised over the scale range; they depend on the grid only.
    pub kernel_constants: (f64, f64),
    pub keep_sets: bool,
}

impl RunContext {
    pub fn new(spec: &ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let lattice = spec.grid.lattice()?;
        let range = spec.range()?;
        let per_k: Vec<(f64, f64)> = range
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&k| -> Result<(f64, f64)> {
                Ok((kernel_pointwise_ratio(k, lattice.delta())?, kernel_domination_ratio(k, lattice.delta())?))
            })
            .collect::<Result<_>>()?;
        let kernel_constants = per_k.iter().fold((0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        Ok(Self {
            lattice,
            range,
            knobs: spec.knobs(),
            splitter: spec.splitter.clone(),
            backend: backend(&spec.backend)?,
            families: FamilyRegistry::default(),
            kernel_constants,
            keep_sets: spec.dump_exceptional,
        })
    }

    fn knobs_label(&self) -> String {
        let k = &self.knobs;
        format!("stop={:e};width={};dilate={};iter={};k2={}", k.c_stop, k.c_width, k.c_dilate, k.c_iter, k.c_k2)
    }
}

fn max_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |x| x.max(b)))
}

fn min_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |x| x.min(b)))
}

/// Runs one row; never fails, errors end up in `status`.
pub fn run_row(ctx: &RunContext, row: usize, family: &FamilySpec, alpha: f64, seed: u64) -> Row {
    let start = Instant::now();
    let mut out = Row {
        row,
        family: family.label(),
        seed,
        alpha,
        n: ctx.lattice.n(),
        delta: ctx.lattice.delta(),
        kmin: ctx.range.iter().next().unwrap_or(0),
        kmax: ctx.range.iter().last().unwrap_or(0),
        splitter: ctx.splitter.clone(),
        knobs: ctx.knobs_label(),
        status: "ok".into(),
        c_pt: Some(ctx.kernel_constants.0),
        c_dom: Some(ctx.kernel_constants.1),
        ..Row::default()
    };
    if let Err(e) = stages(ctx, family, alpha, seed, &mut out) {
        out.status = format!("error: {e:#}").replace([',', '\n'], ";");
    }
    out.runtime_ms = start.elapsed().as_millis();
    out
}

fn stages(ctx: &RunContext, family: &FamilySpec, alpha: f64, seed: u64, out: &mut Row) -> Result<()> {
    let f = ctx.families.get(family)?.generate(&ctx.lattice, seed).context("generate")?;
    out.mass = Some(f.mass());
    let dec = decompose_all(&f, alpha).context("decomposition")?;
    out.omega_measure = Some(dec.omega.measure());
    whitney_stage(&dec, out)?;
    bad_part_stage(&f, &dec.cubes, out).context("bad parts")?;
    density_stage(&f, &dec, out).context("density")?;
    let report = regime_exceptional_from(&f, &dec, alpha, ctx.knobs, ctx.range).context("regimes")?;
    out.n_k1 = Some(report.rows.iter().filter(|r| r.regime == Regime::K1).count());
    out.n_k2 = Some(report.rows.iter().filter(|r| r.regime == Regime::K2).count());
    out.n_k3 = Some(report.rows.iter().filter(|r| r.regime == Regime::K3).count());
    out.n_heavy = Some(report.rows.iter().map(|r| r.n_heavy).sum());
    out.c_size = report.rows.iter().filter_map(|r| r.size_ratio).reduce(f64::max);
    out.c_a = report.ratio;
    out.a_union_le_sum = Some(report.measure() <= report.sum_of_parts * (1.0 + 1e-12));
    if ctx.keep_sets {
        out.omega = Some(dec.omega.clone());
        out.exceptional = Some(report.set.clone());
    }
    height_stage(ctx, &dec, alpha, out).context("heights")?;
    endpoint_stage(ctx, &f, alpha, out).context("endpoint")?;
    let s = splitter(&ctx.splitter)?;
    let levels = level_split(s.as_ref(), &f, alpha);
    out.n_levels = Some(levels.len());
    out.level_count_ratio = Some(count_ratio(levels.len(), alpha));
    let mut sum = GranularFunction::zeros(ctx.lattice);
    let mut seen = GridSet::empty(ctx.lattice);
    let mut disjoint = true;
    for (_, g) in &levels {
        let supp = g.support();
        disjoint &= seen.is_disjoint(&supp);
        seen.union_with(&supp)?;
        sum.add_assign(g)?;
    }
    out.level_recon_ok = Some(disjoint && sum == f);
    Ok(())
}

fn whitney_stage(dec: &CubeDecomposition, out: &mut Row) -> Result<()> {
    let lattice = *dec.omega.lattice();
    let mut union = GridSet::empty(lattice);
    let mut cells = 0usize;
    let (mut lo, mut hi) = (None, None);
    for w in &dec.cubes {
        let s = w.cube.cells(&lattice);
        cells += s * s;
        for row in w.cube.j..w.cube.j + s {
            union.insert_row_span(row, w.cube.i, w.cube.i + s);
        }
        if !w.floor {
            let r = w.dist / w.cube.diam(&lattice);
            lo = min_opt(lo, r);
            hi = max_opt(hi, r);
        }
    }
    let [a, b] = tol::WHITNEY_DIST;
    let partition = cells == union.count() && union == dec.omega;
    out.whitney_cubes = Some(dec.cubes.len());
    out.whitney_floor = Some(dec.cubes.iter().filter(|w| w.floor).count());
    out.whitney_dist_min = lo;
    out.whitney_dist_max = hi;
    out.whitney_ok = Some(partition && lo.map_or(true, |x| x >= a) && hi.map_or(true, |x| x <= b));
    Ok(())
}

/// Largest quadratic moment of `b_q`, relative to `sup |f χ_q|`.
fn bad_part_stage(f: &GranularFunction, cubes: &[WhitneyCube], out: &mut Row) -> Result<()> {
    let lattice = *f.lattice();
    let root = DyadicCube::root();
    let mut bases: HashMap<usize, PolyBasis> = HashMap::new();
    let mut worst: f64 = 0.0;
    for w in cubes {
        let s = w.cube.cells(&lattice);
        let fq = f.window(w.cube.i, w.cube.j, s)?;
        if fq.is_zero() {
            continue;
        }
        let basis = bases.entry(s).or_insert_with(|| PolyBasis::new(2, s));
        let b = bad_part(&fq, &root, basis)?;
        let scale = fq.sup_norm();
        for m in basis.moments(&b, &root)? {
            worst = worst.max(m.abs() / scale);
        }
    }
    out.bq_moment_max = Some(worst);
    Ok(())
}

fn density_stage(f: &GranularFunction, dec: &CubeDecomposition, out: &mut Row) -> Result<()> {
    let lattice = *f.lattice();
    let mut recon: f64 = 0.0;
    for (w, pieces) in dec.cubes.iter().zip(&dec.pieces) {
        let fq = f.window(w.cube.i, w.cube.j, w.cube.cells(&lattice))?;
        let mut sum = GranularFunction::zeros(*fq.lattice());
        for p in pieces {
            sum.add_assign(&p.function)?;
        }
        recon = recon.max(sum.max_abs_diff(&fq)?);
        for wr in verify_widths(pieces)? {
            if wr.j >= 1 && wr.mass > 0.0 {
                out.r_min = min_opt(out.r_min, wr.r);
                out.r_max = max_opt(out.r_max, wr.r);
            }
            if wr.mass > 0.0 {
                out.w_max = max_opt(out.w_max, wr.w);
            }
        }
    }
    out.recon_err = Some(recon);
    Ok(())
}

fn height_stage(ctx: &RunContext, dec: &CubeDecomposition, alpha: f64, out: &mut Row) -> Result<()> {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (q_id, pieces) in dec.pieces.iter().enumerate() {
        for p in pieces.iter().filter(|p| p.j >= 1 && !p.is_zero()) {
            candidates.push((p.mass(), q_id, p.j));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    candidates.truncate(HEIGHT_PIECES);
    for (rank, &(mass, q_id, j)) in candidates.iter().enumerate() {
        let g = dec.pieces[q_id][j].embed()?;
        let base = piece_config(dec, q_id, j, alpha, ctx.knobs);
        if rank == 0 {
            let kmin = ctx.range.iter().next().expect("nonempty range");
            let (direct, kernel) = kernel_form_l2(&g, kmin)?;
            out.kernel_l2_rel = Some((direct - kernel).abs() / direct);
        }
        let mut decomps = Vec::new();
        for k in ctx.range.iter() {
            let mut cfg = base;
            cfg.k = k;
            if regime_partition(k, &cfg) != Regime::K2 {
                continue;
            }
            cfg.m = k2_height(k, &cfg);
            let tel = telescope(&g, &cfg)?;
            out.telescoping_max = max_opt(out.telescoping_max, tel.residual());
            let s = exceptional_set(&g, &cfg)?;
            let inside = tel.heavy_tail.support().is_subset(&s.set);
            out.tail_contained = Some(out.tail_contained.unwrap_or(true) && inside);
            out.c_l2 = max_opt(out.c_l2, l2_light(&tel, mass, alpha));
            out.c_2ess2 = max_opt(out.c_2ess2, l2_global_scale_bound(&g, k, cfg.gamma, alpha)?);
            if rank == 0 && decomps.is_empty() {
                out.cert_ratio_max = certificate(&g, &cfg)?;
            }
            decomps.push(tel);
        }
        if !decomps.is_empty() {
            let l1 = l1_intermediate(&g, alpha, &decomps)?;
            out.l1_total = max_opt(out.l1_total, l1.total_ratio);
            if let Some(m) = l1.per_offset.iter().copied().reduce(f64::max) {
                out.c_l1 = max_opt(out.c_l1, m);
            }
        }
    }
    Ok(())
}

/// Largest shell ratio over the rectangles through the first grain of the piece.
fn certificate(g: &GranularFunction, cfg: &lacunary_core::exceptional::ExceptionalConfig) -> Result<Option<f64>> {
    let m = critical_height(cfg.k, cfg.gamma, cfg.alpha, cfg.d, cfg.knobs.c_iter);
    let field = HeightField::new(g, cfg, m)?;
    let Some(idx) = g.values().iter().position(|&v| v != 0.0) else {
        return Ok(None);
    };
    let grain = g.lattice().coords(idx);
    Ok(field
        .rects_through(grain.0, grain.1, m)
        .into_iter()
        .map(|(r, _)| {
            let origin = OrientedRect::centered(r.dir, r.short, r.long);
            mass_certificate(g, grain, &origin, cfg.gamma, m).ratio
        })
        .reduce(f64::max))
}

fn endpoint_stage(ctx: &RunContext, f: &GranularFunction, alpha: f64, out: &mut Row) -> Result<()> {
    let mf = lacunary_maximal_with(ctx.backend.as_ref(), f, ctx.range)?;
    out.weak_type = weak_type_ratio_from(&mf, f, alpha);
    out.ext_01 = extrapolation_ratio_from(&mf, f, alpha, 0.1)?;
    out.ext_1 = extrapolation_ratio_from(&mf, f, alpha, 1.0)?;
    let half = weak_type_ratio(ctx.backend.as_ref(), &f.scale(0.5), alpha / 2.0, ctx.range)?;
    out.homog_err = match (out.weak_type, half) {
        (Some(a), Some(b)) => Some((a - b).abs() / a.abs().max(f64::MIN_POSITIVE)),
        (None, None) => None,
        _ => Some(f64::INFINITY),
    };
    Ok(())
}

/// The rows of a run, in report order.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub rows: Vec<Row>,
}

impl RunReport {
    pub fn all_invariants_ok(&self) -> bool {
        self.rows.iter().all(Row::invariants_ok)
    }
}

/// Runs every row of the spec in parallel; output order is the spec's row order.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    if spec.families.is_empty() {
        return Ok(RunReport::default());
    }
    let ctx = RunContext::new(spec)?;
    let rows = spec
        .rows()
        .into_par_iter()
        .enumerate()
        .map(|(id, (fi, alpha, seed))| run_row(&ctx, id, &spec.families[fi], alpha, seed))
        .collect();
    Ok(RunReport { rows })
}

/// Quantities compared between a grid and its refinement.
pub const REFINED_COLUMNS: &[&str] = &["r_min", "r_max", "w_max", "c_size", "c_l1", "c_l2"];

fn refined_value(row: &Row, column: &str) -> Option<f64> {
    match column {
        "r_min" => row.r_min,
        "r_max" => row.r_max,
        "w_max" => row.w_max,
        "c_size" => row.c_size,
        "c_l1" => row.c_l1,
        "c_l2" => row.c_l2,
        _ => None,
    }
}

/// One column of one row at grain `δ` and `δ/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementPair {
    pub row: usize,
    pub family: String,
    pub column: &'static str,
    pub coarse: f64,
    pub fine: f64,
}

impl RefinementPair {
    /// `max(a/b, b/a)`; one for two zeros, infinite for a single zero.
    pub fn factor(&self) -> f64 {
        let (a, b) = (self.coarse.abs(), self.fine.abs());
        if a == b {
            1.0
        } else if a == 0.0 || b == 0.0 {
            f64::INFINITY
        } else {
            (a / b).max(b / a)
        }
    }
}

/// Runs the spec at its grid and at half the grain, pairing the refined columns.
pub fn refinement_study(spec: &ExperimentSpec) -> Result<Vec<RefinementPair>> {
    let coarse = run(spec)?;
    let fine = run(&ExperimentSpec { grid: spec.grid.refined(), ..spec.clone() })?;
    let mut out = Vec::new();
    for (a, b) in coarse.rows.iter().zip(&fine.rows) {
        for &column in REFINED_COLUMNS {
            if let (Some(x), Some(y)) = (refined_value(a, column), refined_value(b, column)) {
                out.push(RefinementPair { row: a.row, family: a.family.clone(), column, coarse: x, fine: y });
            }
        }
    }
    Ok(out)
}
