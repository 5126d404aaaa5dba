use std::sync::Arc;

use proptest::prelude::*;
use radproj::energy::{frostman_holder_check, normalize_lq, riesz_energy};
use radproj::measure::{DiscreteMeasure, GridDensity, LatticeSpec, MassSource, Sampling};
use radproj::numeric::Vec3;
use radproj::projections::{line_density, orth_project, radial_project, Direction, HistogramSpec};
use radproj::scanner::admissible_p;
use radproj::sphere::{make_sphere_grid, SphereDensity};

/// Atoms on the dyadic lattice 2^-6 Z^2 inside [0, 1]^2.
fn dyadic_cloud() -> impl Strategy<Value = (Vec<Vec3>, Vec<f64>)> {
    prop::collection::vec((0u32..64, 0u32..64, 1u32..10), 1..40).prop_map(|atoms| {
        let pts = atoms.iter().map(|(i, j, _)| [*i as f64 / 64.0, *j as f64 / 64.0, 0.0]).collect();
        let ws = atoms.iter().map(|(_, _, w)| *w as f64).collect();
        (pts, ws)
    })
}

fn outside_centre() -> impl Strategy<Value = Vec3> {
    (0u32..64, 0u32..4).prop_map(|(k, side)| {
        let u = k as f64 / 64.0;
        match side {
            0 => [-1.5, u, 0.0],
            1 => [2.5, u, 0.0],
            2 => [u, -1.25, 0.0],
            _ => [u, 2.75, 0.0],
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn radial_projection_is_translation_equivariant((pts, ws) in dyadic_cloud(), x in outside_centre(), (a, b) in (-8i32..8, -8i32..8)) {
        let grid = Arc::new(make_sphere_grid(2, 360).unwrap());
        let mu = DiscreteMeasure::from_points(2, pts, ws).unwrap();
        let v = [a as f64 / 4.0, b as f64 / 4.0, 0.0];
        let moved = mu.translated(&v);
        let y = [x[0] + v[0], x[1] + v[1], 0.0];
        let f = radial_project(&mu, &x, &grid, &Sampling::default()).unwrap();
        let g = radial_project(&moved, &y, &grid, &Sampling::default()).unwrap();
        prop_assert_eq!(f.values(), g.values());
    }

    #[test]
    fn riesz_weighted_density_scales_like_distance_power((pts, ws) in dyadic_cloud(), x in outside_centre(), k in -2i32..3) {
        let grid = Arc::new(make_sphere_grid(2, 360).unwrap());
        let mu = DiscreteMeasure::from_points(2, pts, ws).unwrap();
        let lambda = 2f64.powi(k);
        let scaled = mu.map_points(|p| [lambda * p[0], lambda * p[1], 0.0]);
        let y = [lambda * x[0], lambda * x[1], 0.0];
        let f = line_density(&mu, &x, &grid, &Sampling::default()).unwrap();
        let g = line_density(&scaled, &y, &grid, &Sampling::default()).unwrap();
        // |y - x|^{1-d} with d = 2
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert!((b - a / lambda).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn quarter_turn_shifts_the_bins((pts, ws) in dyadic_cloud(), x in outside_centre()) {
        let n = 360;
        let grid = Arc::new(make_sphere_grid(2, n).unwrap());
        let mu = DiscreteMeasure::from_points(2, pts, ws).unwrap();
        let turn = |p: &Vec3| [-p[1], p[0], 0.0];
        let f = radial_project(&mu, &x, &grid, &Sampling::default()).unwrap();
        let g = radial_project(&mu.map_points(turn), &turn(&x), &grid, &Sampling::default()).unwrap();
        let mut mismatched = 0.0;
        for i in 0..n {
            mismatched += (f.values()[i] - g.values()[(i + n / 4) % n]).abs();
        }
        prop_assert!(mismatched < 1e-9);
    }

    #[test]
    fn projections_conserve_mass((pts, ws) in dyadic_cloud(), x in outside_centre(), theta in 0.0f64..6.28) {
        let grid = Arc::new(make_sphere_grid(2, 720).unwrap());
        let mu = DiscreteMeasure::from_points(2, pts, ws).unwrap();
        let radial = radial_project(&mu, &x, &grid, &Sampling::default()).unwrap();
        prop_assert!((radial.mass() - 1.0).abs() < 1e-12);
        let f = orth_project(&mu, &Direction::from_angle(theta), &HistogramSpec::new(64)).unwrap();
        prop_assert!((f.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn riesz_energy_scales_with_dilation((pts, ws) in dyadic_cloud(), s in 0.1f64..1.9, k in -2i32..3) {
        let mu = DiscreteMeasure::from_points(2, pts, ws).unwrap();
        prop_assume!(mu.points().iter().all(|p| mu.points().iter().filter(|q| *q == p).count() == 1));
        let lambda = 2f64.powi(k);
        let e = riesz_energy(&mu, s).unwrap().value;
        let scaled = mu.map_points(|p| [lambda * p[0], lambda * p[1], 0.0]);
        let f = riesz_energy(&scaled, s).unwrap().value;
        prop_assert!((f - lambda.powf(-s) * e).abs() <= 1e-10 * e.max(1e-300));
    }

    #[test]
    fn admissible_exponent_lies_in_one_two(d in 2usize..4, a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let k = (d - 1) as f64;
        let s = k + a;
        let t = (2.0 * k - s) + b * (k - (2.0 * k - s));
        let p = admissible_p(d, s, t).unwrap();
        prop_assert!(p > 1.0 && p < 2.0, "{}", p);
    }

    #[test]
    fn holder_ball_bound_holds(values in prop::collection::vec(0.0f64..5.0, 120), p in 1.05f64..1.95, c in 0usize..120, r in 0.01f64..3.2) {
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let grid = Arc::new(make_sphere_grid(2, 120).unwrap());
        let f = normalize_lq(&SphereDensity::new(grid.clone(), values).unwrap(), p / (p - 1.0)).unwrap();
        let (lhs, rhs) = frostman_holder_check(&f, p, &grid.centers()[c], r).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }
}

#[test]
fn norms_increase_with_p_for_a_uniform_square() {
    // the radial density from outside is at least 1 on its support bins
    let n = 32;
    let h = 1.0 / n as f64;
    let lat = LatticeSpec::new(2, [-1.5 * h, -1.5 * h, 0.0], h, &[n + 3, n + 3]).unwrap();
    let square = GridDensity::from_fn(lat, |p| {
        if (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1]) {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    let grid = Arc::new(make_sphere_grid(2, 360).unwrap());
    for x in [[-1.0, 0.5, 0.0], [2.0, 2.0, 0.0], [0.3, -1.5, 0.0]] {
        assert!(square.support_distance(&x) > 0.5);
        let f = radial_project(&square, &x, &grid, &Sampling::default()).unwrap();
        let norms: Vec<f64> = [1.0, 1.2, 1.5, 2.0].iter().map(|p| f.lp_norm_pow(*p)).collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]), "{norms:?}");
    }
}
