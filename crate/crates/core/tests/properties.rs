use hypermix::eval::{adjusted_rand, misclassification, normalized_mutual_info, summarize};
use hypermix::gaussian::{mm_step, solve_scale, weighted_barycenter};
use hypermix::geometry::{
    distance, exp_map, frechet_gradient, frechet_value, from_poincare, hull_radius, log_map, lorentz_inner, poincare_distance, to_poincare,
    HyperPoint, PoincarePoint, WeightedSample,
};
use hypermix::normalizer::{z_closed_form, z_quadrature};
use hypermix::{RadialModel, ScaleBox};
use proptest::prelude::*;

fn sheet_excess(x: &HyperPoint) -> f64 {
    (lorentz_inner(x.coords(), x.coords()).unwrap() + 1.0).abs() / x.time().powi(2).max(1.0)
}

fn point(d: usize, spread: f64) -> impl Strategy<Value = HyperPoint> {
    prop::collection::vec(-spread..spread, d).prop_map(|u| HyperPoint::from_spatial(&u).unwrap())
}

fn sample_of(d: usize) -> impl Strategy<Value = (Vec<HyperPoint>, Vec<f64>)> {
    (1usize..25).prop_flat_map(move |n| (prop::collection::vec(point(d, 3.0), n), prop::collection::vec(0.01f64..3.0, n)))
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(3), Just(5)]
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exp_log_inverse_and_sheet((mu, x) in dims().prop_flat_map(|d| (point(d, 4.0), point(d, 4.0)))) {
        prop_assume!(distance(&mu, &x).unwrap() <= 10.0);
        let v = log_map(&mu, &x).unwrap();
        let y = exp_map(&mu, &v).unwrap();
        prop_assert!(sheet_excess(&y) <= 1e-10);
        let scale = x.time();
        for (a, b) in x.coords().iter().zip(y.coords()) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
        let w = log_map(&mu, &y).unwrap();
        for (a, b) in v.vec.iter().zip(&w.vec) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn poincare_chart_is_isometric((x, y) in dims().prop_flat_map(|d| (point(d, 4.0), point(d, 4.0)))) {
        let (px, py) = (to_poincare(&x), to_poincare(&y));
        let back = from_poincare(&px).unwrap();
        prop_assert!(sheet_excess(&back) <= 1e-10);
        let h = distance(&x, &y).unwrap();
        prop_assert!((h - poincare_distance(&px, &py).unwrap()).abs() <= 1e-9 * h.max(1.0));
    }

    #[test]
    fn ball_points_lift_onto_sheet(u in prop::collection::vec(-0.7f64..0.7, 3)) {
        prop_assume!(u.iter().map(|c| c * c).sum::<f64>() < 0.98);
        let x = from_poincare(&PoincarePoint::new(u).unwrap()).unwrap();
        prop_assert!(sheet_excess(&x) <= 1e-10);
    }

    #[test]
    fn triangle_inequality((a, b, c) in dims().prop_flat_map(|d| (point(d, 3.0), point(d, 3.0), point(d, 3.0)))) {
        let ab = distance(&a, &b).unwrap();
        let bc = distance(&b, &c).unwrap();
        let ac = distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert_eq!(ab, distance(&b, &a).unwrap());
    }

    #[test]
    fn mm_descends_and_stays_in_hull((pts, w) in dims().prop_flat_map(sample_of), init in point(5, 4.0)) {
        let d = pts[0].dim();
        let s = WeightedSample::new(&pts, &w).unwrap();
        let mut mu = HyperPoint::from_spatial(&init.spatial()[..d]).unwrap();
        let mut f = frechet_value(&s, &mu).unwrap();
        for _ in 0..20 {
            let next = mm_step(&s, &mu).unwrap();
            let g = frechet_value(&s, &next).unwrap();
            prop_assert!(g <= f + 1e-12 * f.max(1.0));
            if distance(&mu, &next).unwrap() > 1e-6 {
                prop_assert!(g < f);
            }
            mu = next;
            f = g;
        }
        let st = weighted_barycenter(&s, &mu, 1e-10, 10_000).unwrap();
        prop_assert!(st.converged);
        let total: f64 = w.iter().sum();
        prop_assert!(frechet_gradient(&s, &st.iterate).unwrap().norm() <= 1e-8 * total);
        prop_assert!(distance(&HyperPoint::origin(d), &st.iterate).unwrap() <= hull_radius(&s) + 1e-8);
    }

    #[test]
    fn barycenter_commutes_with_boosts((pts, w) in sample_of(3), s in -1.5f64..1.5) {
        let sample = WeightedSample::new(&pts, &w).unwrap();
        let boosted: Vec<HyperPoint> = pts.iter().map(|p| boost(p, s)).collect();
        let bs = WeightedSample::new(&boosted, &w).unwrap();
        let a = weighted_barycenter(&sample, &HyperPoint::origin(3), 1e-12, 10_000).unwrap();
        let b = weighted_barycenter(&bs, &HyperPoint::origin(3), 1e-12, 10_000).unwrap();
        prop_assert!(distance(&boost(&a.iterate, s), &b.iterate).unwrap() <= 1e-8);
    }

    #[test]
    fn agreement_metrics_ignore_label_names(a in labels(60, 4), b in labels(60, 3), perm in Just(vec![2usize, 0, 3, 1]).prop_shuffle()) {
        let pa: Vec<usize> = a.iter().map(|&l| perm[l]).collect();
        let ari = adjusted_rand(&a, &b).unwrap();
        let nmi = normalized_mutual_info(&a, &b).unwrap();
        prop_assert!((ari - adjusted_rand(&pa, &b).unwrap()).abs() < 1e-12);
        prop_assert!((ari - adjusted_rand(&b, &pa).unwrap()).abs() < 1e-12);
        prop_assert!((nmi - normalized_mutual_info(&pa, &b).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ari));
        prop_assert!((0.0..=1.0).contains(&nmi));
        let identity = a.iter().zip(&pa).filter(|(x, y)| x != y).count() as f64 / 60.0;
        prop_assert!(misclassification(&a, &pa).unwrap() <= identity);
        prop_assert_eq!(misclassification(&a, &pa).unwrap(), 0.0);
    }

    #[test]
    fn summary_bounds(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let (med, iqr) = summarize(&v).unwrap();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= med && med <= hi);
        prop_assert!(iqr >= 0.0 && iqr <= hi - lo);
    }
}

/// Lorentz boost of rapidity `s` in the `(x_1, t)` plane.
fn boost(p: &HyperPoint, s: f64) -> HyperPoint {
    let mut c = p.coords().to_vec();
    let t = c.len() - 1;
    let (x1, x0) = (c[0], c[t]);
    c[0] = s.cosh() * x1 + s.sinh() * x0;
    c[t] = s.sinh() * x1 + s.cosh() * x0;
    HyperPoint::new(c).unwrap()
}

#[test]
fn normalizer_agreement_convexity_and_blowup() {
    for d in 2..=10 {
        let m = RadialModel::quadrature(d).unwrap();
        let betas: Vec<f64> = (0..40).map(|i| 0.1 * 500f64.powf(i as f64 / 39.0)).collect();
        let a: Vec<f64> = betas.iter().map(|&b| m.log_normalizer(b).unwrap()).collect();
        for (i, &b) in betas.iter().enumerate() {
            let (c, q) = (z_closed_form(d, b).unwrap(), z_quadrature(d, b).unwrap());
            assert!((c - q).abs() / q <= 1e-9, "d={d} beta={b}");
            if i > 0 && i + 1 < betas.len() {
                let (b1, b3) = (betas[i - 1], betas[i + 1]);
                let lin = a[i - 1] + (a[i + 1] - a[i - 1]) * (b - b1) / (b3 - b1);
                assert!(a[i] < lin, "convexity d={d} beta={b}");
            }
        }
        let small: Vec<f64> = [1e-3, 1e-2, 1e-1].iter().map(|&b| m.log_normalizer(b).unwrap()).collect();
        assert!(small[0] > small[1] && small[1] > small[2]);
        let lim = z_quadrature(d, 1e4).unwrap() * (1e4 / std::f64::consts::PI).powf(d as f64 / 2.0);
        assert!((lim - 1.0).abs() < 0.01, "d={d} {lim}");
    }
}

#[test]
fn scale_profile_is_unimodal() {
    let m = RadialModel::grid(3, 1e-3, 50.0, 128).unwrap();
    let bx = ScaleBox::default();
    for (s, w) in [(0.5, 10.0), (30.0, 10.0), (200.0, 3.0), (1e-3, 40.0)] {
        let grid: Vec<f64> = (0..50).map(|i| 1e-3 * (5e4f64).powf(i as f64 / 49.0)).collect();
        let f: Vec<f64> = grid.iter().map(|&b| b * s + w * m.log_normalizer(b).unwrap()).collect();
        let signs: Vec<bool> = f.windows(2).map(|p| p[1] > p[0]).collect();
        let changes = signs.windows(2).filter(|p| p[0] != p[1]).count();
        assert!(changes <= 1, "S={s} W={w}");
        let best = grid[f.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
        let solved = solve_scale(s, w, &m, &bx, 1.0).unwrap().beta;
        let i = grid.iter().position(|&b| b == best).unwrap();
        assert!(solved >= grid[i.saturating_sub(1)] && solved <= grid[(i + 1).min(49)]);
    }
}
