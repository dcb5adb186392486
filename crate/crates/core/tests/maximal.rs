use lacunary_core::maximal::{hardy_littlewood, lacunary_maximal, spherical_mean, superlevel, ScaleRange};
use lacunary_core::spherical::circle_measure;
use lacunary_core::{Error, GranularFunction, Lattice};
use proptest::prelude::*;

/// Largest dyadic average of `|f|` by scanning every ancestor of the cell.
fn ancestor_scan(f: &GranularFunction, i: usize, j: usize) -> f64 {
    let n = f.lattice().n();
    let mut best: f64 = 0.0;
    let mut s = 1;
    while s <= n {
        let (i0, j0) = ((i / s) * s, (j / s) * s);
        let mut sum = 0.0;
        for y in j0..j0 + s {
            for x in i0..i0 + s {
                sum += f.get(x, y).abs();
            }
        }
        best = best.max(sum / (s * s) as f64);
        s *= 2;
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_maximal_matches_ancestor_scan(vals in prop::collection::vec(-2.0f64..2.0, 256)) {
        let l = Lattice::unit(1.0, 1.0 / 16.0).unwrap();
        let f = GranularFunction::from_values(l, vals).unwrap();
        let m = hardy_littlewood(&f);
        for j in 0..16 {
            for i in 0..16 {
                prop_assert!((m.get(i, j) - ancestor_scan(&f, i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dyadic_maximal_dominates_and_is_homogeneous(vals in prop::collection::vec(-2.0f64..2.0, 64), c in 0.1f64..4.0) {
        let l = Lattice::unit(1.0, 1.0 / 8.0).unwrap();
        let f = GranularFunction::from_values(l, vals).unwrap();
        let m = hardy_littlewood(&f);
        let mc = hardy_littlewood(&f.scale(c));
        for (idx, &v) in f.values().iter().enumerate() {
            prop_assert!(m.values()[idx] >= v.abs());
            prop_assert!((mc.values()[idx] - c * m.values()[idx]).abs() <= 1e-12 * (1.0 + mc.values()[idx]));
        }
    }
}

#[test]
fn lacunary_maximal_is_the_pointwise_sup() {
    let l = Lattice::centered(2.0, 1.0 / 64.0).unwrap();
    let n = l.n();
    let f = GranularFunction::from_fn(l, |i, j| {
        let (x, y) = (i as f64 - n as f64 / 2.0, j as f64 - n as f64 / 2.0);
        if x.abs() < 10.0 && y.abs() < 14.0 { 1.0 + 0.01 * x } else { 0.0 }
    });
    let range = ScaleRange::new(-3, -1).unwrap();
    let m = lacunary_maximal(&f, range).unwrap();
    let mut want = vec![0.0f64; n * n];
    for k in -3..=-1 {
        let sigma = circle_measure(k, l.delta()).unwrap();
        for j in 0..n as i64 {
            for i in 0..n as i64 {
                let mut acc = 0.0;
                for a in sigma.atoms() {
                    let (x, y) = (i - a.offset[0], j - a.offset[1]);
                    if (0..n as i64).contains(&x) && (0..n as i64).contains(&y) {
                        acc += a.weight * f.get(x as usize, y as usize);
                    }
                }
                let w = &mut want[j as usize * n + i as usize];
                *w = w.max(acc.abs());
            }
        }
    }
    for (a, b) in m.values().iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn scale_ranges() {
    assert!(matches!(ScaleRange::new(0, -1), Err(Error::EmptyRange)));
    let r = ScaleRange::new(-4, -1).unwrap();
    assert_eq!(r.len(), 4);
    assert_eq!(r.iter().collect::<Vec<_>>(), vec![-4, -3, -2, -1]);
}

#[test]
fn mean_of_a_constant_patch() {
    let l = Lattice::centered(2.0, 1.0 / 64.0).unwrap();
    let f = GranularFunction::from_fn(l, |i, j| if (32..96).contains(&i) && (32..96).contains(&j) { 1.0 } else { 0.0 });
    let g = spherical_mean(&f, -3).unwrap();
    assert!((g.get(64, 64) - 1.0).abs() <= 1e-12);
    assert_eq!(superlevel(&g, 0.5).count(), superlevel(&g, 0.5).cells().count());
    assert!(superlevel(&g, 1.0 + 1e-9).is_empty());
}
