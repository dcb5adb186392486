//! Acceptance criteria 1 to 11, one test each. Every test prints a single
//! `criterion N [PASS|FAIL] ...` line to stdout (uncaptured) and then asserts.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use lacunary_core::cz::{bad_part, poly_project, whitney, PolyBasis};
use lacunary_core::density::{decompose_all, verify_widths};
use lacunary_core::exceptional::{
    bin_rect_masses, exceptional_set, heavy_rectangles, heavy_threshold, scale_grid, scale_ladder, ratio_from_measure,
    ExceptionalConfig, Knobs,
};
use lacunary_core::grid::{length_of, maximal_dyadic_cover};
use lacunary_core::heights::{kernel_form_l2, l1_intermediate, l2_global_scale_bound, l2_light, telescope};
use lacunary_core::spherical::{
    autocorrelation_kernel, circle_measure, direction_net, ConvolutionBackend, Direct, Fft,
};
use lacunary_core::{DyadicCube, GranularFunction, GridSet, Lattice};
use lacunary_harness::families::{generate, FamilySpec};
use lacunary_harness::pipeline::{refinement_study, run, RunReport};
use lacunary_harness::report::{to_csv, without_timing};
use lacunary_harness::spec::{ExperimentSpec, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SET_CASES: usize = 10_000;
const SET_TIME: Duration = Duration::from_secs(10);
const FFT_TOL: f64 = 1e-8;
const TAU_MASS: f64 = 2e-3;
const CONST_PRESERVATION: f64 = 1e-2;
const SELF_ADJOINT: f64 = 1e-8;
const C_PT: f64 = 64.0;
const POLY_TOL: f64 = 1e-9;
const WHITNEY_DIST: [f64; 2] = [1.0, 4.0];
const RECON_TOL: f64 = 1e-12;
const R_RANGE: [f64; 2] = [0.125, 8.0];
const W_MAX: f64 = 8.0;
const REFINE_FACTOR: f64 = 2.0;
const LADDER_SLACK: f64 = 15.0;
const C_SIZE: f64 = 64.0;
const TELESCOPING: f64 = 1e-10;
const C_L1: f64 = 2.0;
const C_L2: f64 = 64.0;
const C_GLOBAL_L2: f64 = 16.0;
const L2_IDENTITY: f64 = 1e-6;
const C_WT: f64 = 1.0;
const C_EXT: f64 = 1.0;
const HOMOGENEITY: f64 = 1e-9;
const FULL_SUITE_TIME: Duration = Duration::from_secs(300);
const SMOKE_TIME: Duration = Duration::from_secs(10);

fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    let line = format!("criterion {n:>2} [{}] {name}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "{}", line.trim_end());
}

fn random_set(l: Lattice, rng: &mut ChaCha8Rng) -> GridSet {
    let p = rng.gen_range(0.0..1.0);
    GridSet::from_predicate(l, |_, _| rng.gen_bool(p))
}

#[test]
fn criterion_01_measure_exactness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0usize;
    for case in 0..SET_CASES {
        let n = 1usize << rng.gen_range(1..7);
        let l = Lattice::unit(1.0, 1.0 / n as f64).unwrap();
        let a = random_set(l, &mut rng);
        let b = random_set(l, &mut rng);
        let union = a.union(&b).unwrap();
        let inter = a.intersection(&b).unwrap();
        let diff = a.difference(&b).unwrap();
        let mut ok = union.measure() + inter.measure() == a.measure() + b.measure();
        ok &= inter.is_disjoint(&diff) && inter.union(&diff).unwrap() == a;
        ok &= a.complement().measure() + a.measure() == l.side() * l.side();
        ok &= (0..n).all(|j| (0..n).all(|i| union.contains(i, j) == (a.contains(i, j) || b.contains(i, j))));
        if case % 10 == 0 {
            let cover = maximal_dyadic_cover(&a);
            let mut rebuilt = GridSet::empty(l);
            let mut cells = 0;
            for q in &cover {
                let part = q.to_set(&l);
                ok &= rebuilt.is_disjoint(&part);
                rebuilt.union_with(&part).unwrap();
                cells += part.count();
            }
            ok &= rebuilt == a && cells == a.count();
            ok &= length_of(&a) == cover.iter().map(|q| q.side(&l)).sum::<f64>();
        }
        failures += !ok as usize;
    }
    let took = start.elapsed();
    verdict(
        1,
        "set algebra and dyadic covers",
        failures == 0 && took < SET_TIME,
        format!("{failures} failures in {SET_CASES} cases, {:.2} s (limit {} s)", took.as_secs_f64(), SET_TIME.as_secs()),
    );
}

/// Random values on the central region that keeps every circle of radius 1/4 inside.
fn random_interior(l: Lattice, seed: u64) -> GranularFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = l.n();
    GranularFunction::from_fn(l, |i, j| {
        let inside = |c: usize| c >= n / 4 && c < 3 * n / 4;
        if inside(i) && inside(j) {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        }
    })
}

#[test]
fn criterion_02_fft_matches_direct() {
    let l = Lattice::centered(1.0, 1.0 / 64.0).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let f = random_interior(l, seed);
        let k = -2 - (seed % 2) as i32;
        let sigma = circle_measure(k, l.delta()).unwrap();
        let a = Direct.convolve(&sigma, &f);
        let b = Fft.convolve(&sigma, &f);
        worst = worst.max(a.max_abs_diff(&b).unwrap());
    }
    verdict(2, "fft vs direct convolution", worst <= FFT_TOL, format!("max abs diff {worst:.3e} (limit {FFT_TOL:e}) over 100 seeds at 64^2"));
}

#[test]
fn criterion_03_circle_measure_sanity() {
    let delta = 2f64.powi(-9);
    let l = Lattice::centered(2.0, delta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let blob = |rng: &mut ChaCha8Rng| {
        GranularFunction::from_fn(l, |i, j| {
            let c = l.center(i, j);
            if c[0].abs() < 0.25 && c[1].abs() < 0.25 {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
    };
    let (f, g) = (blob(&mut rng), blob(&mut rng));
    let ones = GranularFunction::from_fn(l, |i, j| {
        let c = l.center(i, j);
        if c[0].abs() < 0.75 && c[1].abs() < 0.75 {
            1.0
        } else {
            0.0
        }
    });
    let (mut mass_err, mut const_err, mut adj_err, mut support_ok): (f64, f64, f64, bool) = (0.0, 0.0, 0.0, true);
    for k in [-3, -2, -1] {
        let sigma = circle_measure(k, delta).unwrap();
        mass_err = mass_err.max((sigma.mass() - 1.0).abs());
        // At the centre the whole circle sees the constant region.
        let h = l.n() / 2;
        let mut at_centre = 0.0;
        for a in sigma.atoms() {
            at_centre += a.weight * ones.get((h as i64 - a.offset[0]) as usize, (h as i64 - a.offset[1]) as usize);
        }
        const_err = const_err.max((at_centre - 1.0).abs());
        let sf = Fft.convolve(&sigma, &f);
        let sg = Fft.convolve(&sigma, &g);
        let (x, y) = (sf.inner(&g).unwrap(), f.inner(&sg).unwrap());
        adj_err = adj_err.max((x - y).abs() / x.abs());
        let kernel = autocorrelation_kernel(k, delta).unwrap();
        let kl = *kernel.lattice();
        let half = (kl.n() / 2) as f64;
        let reach = 2f64.powi(k + 1) + 4.0 * delta;
        for (idx, &v) in kernel.values().iter().enumerate() {
            let (i, j) = kl.coords(idx);
            if v != 0.0 && ((i as f64 - half) * delta).hypot((j as f64 - half) * delta) > reach {
                support_ok = false;
            }
        }
    }
    let ok = mass_err <= TAU_MASS && const_err <= CONST_PRESERVATION && adj_err <= SELF_ADJOINT && support_ok;
    verdict(
        3,
        "circle measure sanity at delta 2^-9",
        ok,
        format!("mass err {mass_err:.2e}, constant err {const_err:.2e}, adjoint rel err {adj_err:.2e}, kernel support confined: {support_ok}"),
    );
}

#[test]
fn criterion_04_pointwise_kernel_bound() {
    let delta = 2f64.powi(-9);
    let mut worst: f64 = 0.0;
    for k in [-3, -2, -1] {
        let kernel = autocorrelation_kernel(k, delta).unwrap();
        let kl = *kernel.lattice();
        let half = (kl.n() / 2) as f64;
        let r = 2f64.powi(k);
        for (idx, &v) in kernel.values().iter().enumerate() {
            let (i, j) = kl.coords(idx);
            let len = ((i as f64 - half) * delta).hypot((j as f64 - half) * delta);
            if len >= 8.0 * delta && len <= r {
                worst = worst.max(v * r * len);
            }
        }
    }
    verdict(4, "pointwise kernel bound", worst > 0.0 && worst <= C_PT, format!("max K(x) 2^k |x| = {worst:.4} (limit {C_PT})"));
}

/// `Σ_{c in q} h(c) x^a y^b` with the scale `Σ |h(c) x^a y^b|`.
fn raw_moment(h: &GranularFunction, q: &DyadicCube, a: i32, b: i32) -> (f64, f64) {
    let l = h.lattice();
    let s = q.cells(l);
    let (mut acc, mut scale) = (0.0, 0.0);
    for y in q.j..q.j + s {
        for x in q.i..q.i + s {
            let c = l.center(x, y);
            let m = h.get(x, y) * c[0].powi(a) * c[1].powi(b);
            acc += m;
            scale += m.abs();
        }
    }
    (acc, scale)
}

/// Gap between the closed cube and the closed cell `(x, y)`.
fn gap(q: &DyadicCube, l: &Lattice, x: usize, y: usize) -> f64 {
    let s = q.cells(l) as f64;
    let axis = |c: usize, lo: usize| {
        let (c, lo) = (c as f64, lo as f64);
        (lo - (c + 1.0)).max(c - (lo + s)).max(0.0)
    };
    axis(x, q.i).hypot(axis(y, q.j)) * l.delta()
}

#[test]
fn criterion_05_cz_suite() {
    let l = Lattice::centered(2.0, 1.0 / 32.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut poly_err: f64 = 0.0;
    for _ in 0..50 {
        let level = rng.gen_range(0..l.depth());
        let s = l.n() >> level;
        let m = l.n() / s;
        let q = DyadicCube { level, i: rng.gen_range(0..m) * s, j: rng.gen_range(0..m) * s };
        let basis = PolyBasis::for_cube(2, &l, &q);
        let f = GranularFunction::from_fn(l, |_, _| rng.gen_range(-1.0..1.0));
        let fq = f.restrict(&q.to_set(&l)).unwrap();
        let p = poly_project(&fq, &q, &basis).unwrap();
        poly_err = poly_err.max(poly_project(&p, &q, &basis).unwrap().max_abs_diff(&p).unwrap());
        let co: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let poly = GranularFunction::from_fn(l, |i, j| {
            if !q.contains_cell(&l, i, j) {
                return 0.0;
            }
            let [x, y] = l.center(i, j);
            co[0] + co[1] * x + co[2] * y + co[3] * x * x + co[4] * x * y + co[5] * y * y
        });
        poly_err = poly_err.max(poly_project(&poly, &q, &basis).unwrap().max_abs_diff(&poly).unwrap());
        let b = bad_part(&f, &q, &basis).unwrap();
        for &(a, e) in basis.exponents() {
            let (mom, scale) = raw_moment(&b, &q, a as i32, e as i32);
            poly_err = poly_err.max(mom.abs() / (1.0 + scale));
        }
    }
    let mut whitney_ok = true;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..20 {
        let blobs: Vec<([f64; 2], f64)> = (0..rng.gen_range(1..5))
            .map(|_| ([rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)], rng.gen_range(0.05..0.35)))
            .collect();
        let omega = GridSet::from_predicate(l, |i, j| {
            let c = l.center(i, j);
            blobs.iter().any(|(p, r)| (c[0] - p[0]).hypot(c[1] - p[1]) < *r)
        });
        let comp: Vec<(usize, usize)> = omega.complement().cells().collect();
        let mut cover = GridSet::empty(l);
        for w in whitney(&omega).unwrap() {
            let part = w.cube.to_set(&l);
            whitney_ok &= cover.is_disjoint(&part);
            cover.union_with(&part).unwrap();
            let dist = comp.iter().map(|&(x, y)| gap(&w.cube, &l, x, y)).fold(f64::INFINITY, f64::min);
            whitney_ok &= (dist - w.dist).abs() <= 1e-12;
            if !w.floor {
                let r = dist / w.cube.diam(&l);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        whitney_ok &= cover == omega;
    }
    whitney_ok &= lo >= WHITNEY_DIST[0] && hi <= WHITNEY_DIST[1];
    verdict(
        5,
        "projection and Whitney suite",
        poly_err <= POLY_TOL && whitney_ok,
        format!("max projection/moment err {poly_err:.2e} (limit {POLY_TOL:e}); Whitney partition ok, dist/diam in [{lo:.3}, {hi:.3}]: {whitney_ok}"),
    );
}

fn sparse_function(l: Lattice, rng: &mut ChaCha8Rng) -> GranularFunction {
    let p = rng.gen_range(0.02..0.4);
    let clusters: Vec<[f64; 2]> = (0..3).map(|_| [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)]).collect();
    GranularFunction::from_fn(l, |i, j| {
        let c = l.center(i, j);
        let near = clusters.iter().any(|q| (c[0] - q[0]).abs() < 0.05 && (c[1] - q[1]).abs() < 0.05);
        if c[0].abs() < 0.5 && c[1].abs() < 0.5 && (near || rng.gen_bool(p)) {
            rng.gen_range(0.05..1.0)
        } else {
            0.0
        }
    })
}

/// Geometric families are resolution independent, so a refined run sees the same function.
fn refinement_spec() -> ExperimentSpec {
    ExperimentSpec {
        families: ["cube", "scattered-cubes", "cantor", "multilevel"].iter().map(|n| FamilySpec::new(n)).collect(),
        grid: GridSpec { side: 4.0, delta: 2f64.powi(-6) },
        alphas: vec![0.25, 0.0625],
        seeds: vec![0, 1],
        kmin: -3,
        kmax: -1,
        ..ExperimentSpec::default()
    }
}

#[test]
fn criterion_06_structural_decomposition() {
    let l = Lattice::centered(2.0, 2f64.powi(-7)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut recon, mut disjoint) = (0.0f64, true);
    let (mut r_lo, mut r_hi, mut w_hi) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let f = sparse_function(l, &mut rng);
        let alpha = [0.25, 0.125, 0.0625][rng.gen_range(0..3)];
        let dec = decompose_all(&f, alpha).unwrap();
        for (w, pieces) in dec.cubes.iter().zip(&dec.pieces) {
            let mut sum = GranularFunction::zeros(l);
            let mut seen = GridSet::empty(l);
            for p in pieces {
                let g = p.embed().unwrap();
                let supp = g.support();
                disjoint &= seen.is_disjoint(&supp) && supp.is_subset(&p.embed_support());
                seen.union_with(&supp).unwrap();
                sum.add_assign(&g).unwrap();
            }
            recon = recon.max(sum.max_abs_diff(&f.restrict(&w.cube.to_set(&l)).unwrap()).unwrap());
            for wr in verify_widths(pieces).unwrap() {
                if wr.j >= 1 && wr.mass > 0.0 {
                    r_lo = r_lo.min(wr.r);
                    r_hi = r_hi.max(wr.r);
                }
                w_hi = w_hi.max(wr.w);
            }
        }
    }
    let pairs = refinement_study(&refinement_spec()).unwrap();
    let widths: Vec<_> = pairs.iter().filter(|p| ["r_min", "r_max", "w_max"].contains(&p.column)).collect();
    let worst = widths.iter().map(|p| p.factor()).fold(1.0, f64::max);
    let ok = recon <= RECON_TOL
        && disjoint
        && r_lo >= R_RANGE[0]
        && r_hi <= R_RANGE[1]
        && w_hi <= W_MAX
        && !widths.is_empty()
        && worst <= REFINE_FACTOR;
    verdict(
        6,
        "density decomposition",
        ok,
        format!(
            "recon {recon:.1e}, disjoint {disjoint}, r in [{r_lo:.3}, {r_hi:.3}], w <= {w_hi:.3}, refinement factor {worst:.3} over {} pairs",
            widths.len()
        ),
    );
}

#[test]
fn criterion_07_scale_ladder() {
    let mut exact = true;
    let mut worst_ratio: f64 = 0.0;
    for e in 4..=20 {
        let alpha = 2f64.powi(-e);
        for knobs in [Knobs::paper(), Knobs::desk()] {
            for g in 0..=2 * e {
                let cfg = ExceptionalConfig { alpha, gamma: 2f64.powi(-g), k: 30, lq: 1.0, d: 2, m: 1.0, knobs };
                let ladder = scale_ladder(&cfg).unwrap();
                let mut e_j = ladder.exponents[0];
                for (j, &x) in ladder.exponents.iter().enumerate() {
                    exact &= x == ladder.closed_form(j) && x == e_j;
                    e_j = (e_j + ladder.log2_r_star) / 2.0;
                }
                worst_ratio = worst_ratio.max(ladder.top() as f64 / (1.0 / alpha).log2().log2());
            }
        }
    }
    verdict(
        7,
        "scale ladder",
        exact && worst_ratio <= LADDER_SLACK,
        format!("closed form exact: {exact}; max N / log2 log2(1/alpha) = {worst_ratio:.3} (limit {LADDER_SLACK})"),
    );
}

/// The heaviest density pieces of a few suite members, with their base configs.
struct SuitePiece {
    family: String,
    piece: lacunary_core::density::DensityPiece,
    cfg: ExceptionalConfig,
}

fn suite_pieces(delta: f64) -> Vec<SuitePiece> {
    let l = Lattice::centered(4.0, delta).unwrap();
    let mut out = Vec::new();
    for name in ["cube", "scattered-cubes", "multilevel"] {
        for seed in [0, 1] {
            for alpha in [0.125, 0.03125] {
                let f = generate(&FamilySpec::new(name), &l, seed).unwrap();
                let dec = decompose_all(&f, alpha).unwrap();
                let mut cands: Vec<(f64, usize, usize)> = Vec::new();
                for (q, pieces) in dec.pieces.iter().enumerate() {
                    for p in pieces.iter().filter(|p| p.j >= 1 && !p.is_zero()) {
                        cands.push((p.mass(), q, p.j));
                    }
                }
                cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
                for &(_, q, j) in cands.iter().take(3) {
                    let cfg = lacunary_core::exceptional::piece_config(&dec, q, j, alpha, Knobs::desk());
                    out.push(SuitePiece { family: name.to_string(), piece: dec.pieces[q][j].clone(), cfg });
                }
            }
        }
    }
    out
}

fn valid_scales(cfg: &ExceptionalConfig) -> Vec<i32> {
    (-3..=-1).filter(|&k| ExceptionalConfig { k, ..*cfg }.validate().is_ok()).collect()
}

/// Ratio of two sweep constants, larger over smaller.
fn refinement_factor(x: f64, y: f64) -> f64 {
    if x == y {
        1.0
    } else if x == 0.0 || y == 0.0 {
        f64::INFINITY
    } else {
        (x / y).max(y / x)
    }
}

fn sweep_max(values: &[(String, f64)]) -> f64 {
    values.iter().map(|v| v.1).fold(0.0, f64::max)
}

/// Size ratios over `M = 2^0..2^6` and the valid scales; also checks monotonicity and pigeonhole counts.
fn size_sweep(items: &[SizeItem]) -> (Vec<(String, f64)>, bool, bool, usize) {
    let (mut monotone, mut pigeon, mut nonzero) = (true, true, 0);
    let mut ratios = Vec::new();
    for (family, g, length, base) in items {
        for k in valid_scales(base) {
            let mut prev: Option<GridSet> = None;
            for e in 0..=6 {
                let cfg = ExceptionalConfig { k, m: 2f64.powi(e), ..*base };
                let s = exceptional_set(g, &cfg).unwrap();
                if let Some(p) = &prev {
                    monotone &= s.set.is_subset(p);
                }
                let r = ratio_from_measure(s.measure(), *length, &cfg).unwrap_or(0.0);
                nonzero += (r > 0.0) as usize;
                ratios.push((family.clone(), r));
                if e == 0 {
                    let ladder = scale_ladder(&cfg).unwrap();
                    for i in 1..=ladder.top() {
                        let threshold = heavy_threshold(ladder.c(i - 1), cfg.m, cfg.gamma);
                        for dir in direction_net(ladder.c(i), ladder.c(i - 1)).unwrap() {
                            let heavy = heavy_rectangles(g, dir, i, &ladder, &cfg).unwrap();
                            let bins = bin_rect_masses(g, &scale_grid(dir, &ladder, i));
                            let count = bins.values().filter(|&&m| m >= threshold).count();
                            pigeon &= heavy.len() == count && heavy.len() as f64 <= g.mass() / threshold;
                        }
                    }
                }
                prev = Some(s.set);
            }
        }
    }
    (ratios, monotone, pigeon, nonzero)
}

#[test]
fn criterion_08_exceptional_sets() {
    let coarse = size_items(2f64.powi(-7));
    let fine = size_items(2f64.powi(-8));
    let (rc, mono_c, pig_c, nz) = size_sweep(&coarse);
    let (rf, mono_f, pig_f, _) = size_sweep(&fine);
    let (cc, cf) = (sweep_max(&rc), sweep_max(&rf));
    let c_size = cc.max(cf);
    let factor = refinement_factor(cc, cf);
    let ok = mono_c && mono_f && pig_c && pig_f && nz > 0 && c_size <= C_SIZE && factor <= REFINE_FACTOR;
    verdict(
        8,
        "exceptional sets",
        ok,
        format!(
            "monotone in M: {}, pigeonhole exact: {}, C_size = {c_size:.3} (limit {C_SIZE}) over {} configs ({nz} nonzero), refinement factor {factor:.3}",
            mono_c && mono_f,
            pig_c && pig_f,
            rc.len() + rf.len()
        ),
    );
}

/// Suite pieces at twice the grain plus the segment pieces, which carry heavy rectangles.
fn size_items(delta: f64) -> Vec<SizeItem> {
    let mut items: Vec<SizeItem> = suite_pieces(delta * 2.0)
        .into_iter()
        .map(|sp| (sp.family, sp.piece.embed().unwrap(), sp.piece.length, sp.cfg))
        .collect();
    for seed in SEGMENT_SEEDS {
        let g = segment_piece(seed, delta);
        let length = length_of(&g.support());
        let cfg = segment_config(&g);
        items.push((format!("segments-{seed}"), g, length, cfg));
    }
    items
}

type SizeItem = (String, GranularFunction, f64, ExceptionalConfig);

/// Seeds of the segment pieces; overlapping draws fail the scale check and drop out.
const SEGMENT_SEEDS: std::ops::Range<u64> = 0..6;

/// The power of two `γ` with every dyadic block of `g` carrying mass below `2γ` per length.
fn dyadic_gamma(g: &GranularFunction) -> f64 {
    let l = g.lattice();
    let mut density: f64 = 0.0;
    let mut s = 1;
    while s <= l.n() {
        for j in (0..l.n()).step_by(s) {
            for i in (0..l.n()).step_by(s) {
                density = density.max(g.block_integral(i, j, s) / (s as f64 * l.delta()));
            }
        }
        s *= 2;
    }
    density.log2().floor().exp2()
}

struct HeightStats {
    residual: f64,
    tail_ok: bool,
    l1: Vec<(String, f64)>,
    l2: Vec<(String, f64)>,
    ess2: f64,
    kernel_rel: f64,
    intermediates: usize,
}

fn height_sweep(items: &[(String, GranularFunction, ExceptionalConfig)]) -> HeightStats {
    let mut st = HeightStats { residual: 0.0, tail_ok: true, l1: Vec::new(), l2: Vec::new(), ess2: 0.0, kernel_rel: 0.0, intermediates: 0 };
    for (label, g, base) in items {
        let mut decomps = Vec::new();
        for k in valid_scales(base) {
            let mut cfg = ExceptionalConfig { k, ..*base };
            let tel = telescope(g, &cfg).unwrap();
            st.residual = st.residual.max(tel.residual());
            cfg.m = lacunary_core::exceptional::k2_height(k, &cfg);
            let s = exceptional_set(g, &cfg).unwrap();
            st.tail_ok &= tel.heavy_tail.support().is_subset(&s.set);
            st.l2.push((label.clone(), l2_light(&tel, g.mass(), cfg.alpha)));
            st.ess2 = st.ess2.max(l2_global_scale_bound(g, k, cfg.gamma, cfg.alpha).unwrap());
            st.intermediates += tel.intermediates.len();
            decomps.push(tel);
        }
        if let Some(k) = valid_scales(base).first() {
            let (direct, kernel) = kernel_form_l2(g, *k).unwrap();
            st.kernel_rel = st.kernel_rel.max((direct - kernel).abs() / direct);
        }
        if !decomps.is_empty() {
            let r = l1_intermediate(g, base.alpha, &decomps).unwrap();
            st.l1.push((label.clone(), r.per_offset.iter().copied().fold(0.0, f64::max)));
        }
    }
    st
}

fn height_items(delta: f64) -> Vec<(String, GranularFunction, ExceptionalConfig)> {
    let mut items: Vec<_> = suite_pieces(delta * 2.0)
        .into_iter()
        .map(|sp| (sp.family.clone(), sp.piece.embed().unwrap(), sp.cfg))
        .collect();
    for seed in SEGMENT_SEEDS {
        let g = segment_piece(seed, delta);
        let cfg = segment_config(&g);
        items.push((format!("segments-{seed}"), g, cfg));
    }
    items
}

#[test]
fn criterion_09_heights() {
    let coarse = height_sweep(&height_items(2f64.powi(-7)));
    let fine = height_sweep(&height_items(2f64.powi(-8)));
    let suite = full_suite();
    let suite_tail = suite.0.rows.iter().all(|r| r.tail_contained != Some(false));
    let suite_res = suite.0.rows.iter().filter_map(|r| r.telescoping_max).fold(0.0, f64::max);
    let residual = coarse.residual.max(fine.residual).max(suite_res);
    let c_l1 = sweep_max(&coarse.l1).max(sweep_max(&fine.l1));
    let c_l2 = sweep_max(&coarse.l2).max(sweep_max(&fine.l2));
    let ess2 = coarse.ess2.max(fine.ess2);
    let kernel_rel = coarse.kernel_rel.max(fine.kernel_rel);
    let f_l1 = refinement_factor(sweep_max(&coarse.l1), sweep_max(&fine.l1));
    let f_l2 = refinement_factor(sweep_max(&coarse.l2), sweep_max(&fine.l2));
    let ok = residual <= TELESCOPING
        && coarse.tail_ok
        && fine.tail_ok
        && suite_tail
        && coarse.intermediates > 0
        && c_l1 <= C_L1
        && c_l2 <= C_L2
        && ess2 <= C_GLOBAL_L2
        && kernel_rel <= L2_IDENTITY
        && f_l1 <= REFINE_FACTOR
        && f_l2 <= REFINE_FACTOR;
    verdict(
        9,
        "height decomposition",
        ok,
        format!(
            "residual {residual:.1e}, tail in S: {}, C_L1 {c_l1:.3}, C_L2 {c_l2:.3}, global scale L2 ratio {ess2:.3}, kernel form {kernel_rel:.1e}, refinement factors {f_l1:.3} / {f_l2:.3}, {} intermediate levels",
            coarse.tail_ok && fine.tail_ok && suite_tail,
            coarse.intermediates + fine.intermediates
        ),
    );
}

/// The full default suite, run once and shared.
fn full_suite() -> &'static (RunReport, Duration) {
    static CELL: OnceLock<(RunReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let report = run(&ExperimentSpec::full_suite()).unwrap();
        (report, start.elapsed())
    })
}

#[test]
fn criterion_10_endpoint_surrogate() {
    let (report, _) = full_suite();
    let rows = &report.rows;
    let wt = rows.iter().filter_map(|r| r.weak_type).fold(0.0, f64::max);
    let multi: Vec<_> = rows.iter().filter(|r| r.family.starts_with("multilevel")).collect();
    let ext = multi.iter().flat_map(|r| [r.ext_01, r.ext_1]).flatten().fold(0.0, f64::max);
    let ordered = multi.iter().all(|r| match (r.ext_01, r.ext_1) {
        (Some(a), Some(b)) => b <= a,
        _ => false,
    });
    let homog = rows.iter().map(|r| r.homog_err.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    let complete = rows.len() == 60 && rows.iter().all(|r| r.weak_type.is_some());
    let ok = complete && wt <= C_WT && ext <= C_EXT && ordered && homog <= HOMOGENEITY;
    verdict(
        10,
        "endpoint surrogate",
        ok,
        format!("C_WT {wt:.4} (limit {C_WT}) over {} rows, multilevel extrapolation {ext:.4} (limit {C_EXT}), eps ordering {ordered}, homogeneity {homog:.1e}", rows.len()),
    );
}

#[test]
fn criterion_11_end_to_end() {
    let (report, took) = full_suite();
    let first = without_timing(&to_csv(report).unwrap()).unwrap();
    let again = run(&ExperimentSpec::full_suite()).unwrap();
    let second = without_timing(&to_csv(&again).unwrap()).unwrap();
    let start = Instant::now();
    let smoke = run(&ExperimentSpec::smoke()).unwrap();
    let smoke_took = start.elapsed();
    let ok = first == second
        && report.rows.len() == 60
        && report.all_invariants_ok()
        && *took < FULL_SUITE_TIME
        && smoke.all_invariants_ok()
        && smoke_took < SMOKE_TIME;
    verdict(
        11,
        "end to end",
        ok,
        format!(
            "deterministic {}, full suite {:.1} s (limit {} s), invariants {}, smoke {:.2} s (limit {} s)",
            first == second,
            took.as_secs_f64(),
            FULL_SUITE_TIME.as_secs(),
            report.all_invariants_ok(),
            smoke_took.as_secs_f64(),
            SMOKE_TIME.as_secs()
        ),
    );
}

/// Segments of width 1/16 and value 1/2 in `[-1/2, 1/2]^2`, drawn at grain `2^-7` and refined to `delta`.
fn segment_piece(seed: u64, delta: f64) -> GranularFunction {
    let base = Lattice::centered(4.0, 2f64.powi(-7)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segs: Vec<([f64; 2], [f64; 2])> = (0..3)
        .map(|_| {
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let c = [rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25)];
            (c, [theta.cos(), theta.sin()])
        })
        .collect();
    let mut f = GranularFunction::from_fn(base, |i, j| {
        let p = base.center(i, j);
        let hit = segs.iter().any(|(c, u)| {
            let d = [p[0] - c[0], p[1] - c[1]];
            let along = d[0] * u[0] + d[1] * u[1];
            let across = -d[0] * u[1] + d[1] * u[0];
            along.abs() <= 0.25 && across.abs() < 1.0 / 32.0
        });
        if hit { 0.5 } else { 0.0 }
    });
    while f.lattice().delta() > delta {
        f = f.refine();
    }
    f
}

/// Wide ladder steps so every rectangle is at least four grains across at `2^-7`.
fn segment_config(g: &GranularFunction) -> ExceptionalConfig {
    let knobs = Knobs { c_stop: 0.5, ..Knobs::desk() };
    ExceptionalConfig { alpha: 2f64.powi(-4), gamma: dyadic_gamma(g), k: -1, lq: 0.5, d: 2, m: 1.0, knobs }
}
