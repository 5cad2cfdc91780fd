mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use section_lab::density::*;
use section_lab::geometry::{builtin_body, BuiltinShape, Direction};
use section_lab::oracles::{ball_section_cdf, square_chord_density};
use section_lab::rng::RngStream;
use section_lab::sampler::*;
use section_lab::stats::ks_one_sample;

#[test]
fn fur_ball_areas_follow_the_inversion_law() {
    let ball = builtin_body(BuiltinShape::Ball, false);
    let theta = Direction::new(&[0.3, -0.4, 0.8]).unwrap();
    let s = sample_fur_sections(&ball, &theta, 1_000_000, RngStream::new(5)).unwrap();
    let d = ks_one_sample(&s.values, |a| ball_section_cdf(a.min(std::f64::consts::PI), 1.0).unwrap());
    assert!(d < 0.002, "KS = {d}");
}

#[test]
fn square_chords_reach_the_diagonal() {
    let sq = builtin_body(BuiltinShape::Square, false);
    let s = sample_iur_sections(&sq, 1_000_000, RngStream::new(6)).unwrap();
    let max = s.values.iter().copied().fold(0.0, f64::max);
    assert!(s.values.iter().all(|&v| (0.0..=2f64.sqrt()).contains(&v)));
    assert!(max > 1.41, "max = {max}");
}

#[test]
fn cube_acceptance_matches_mean_width_ratio() {
    let cube = builtin_body(BuiltinShape::Cube, false);
    let b = cube.mean_width(200_000).unwrap().value;
    assert!((b - 1.5).abs() < 1e-4);
    let expected = b / (2.0 * cube.enclosing_radius(&cube.centroid()));
    let s = sample_iur_sections(&cube, 1_000_000, RngStream::new(7)).unwrap();
    let rate = acceptance_estimate(&s).unwrap();
    assert!((rate - expected).abs() <= 0.002, "{rate} vs {expected}");
    assert!((expected - 0.8660).abs() < 1e-3);
}

#[test]
fn identical_seeds_give_identical_samples() {
    let d = builtin_body(BuiltinShape::Dodecahedron, true);
    let a = sample_iur_sections(&d, 100_000, RngStream::new(8)).unwrap();
    let b = with_workers(3, || sample_iur_sections(&d, 100_000, RngStream::new(8))).unwrap().unwrap();
    assert_eq!(a, b);
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
}

fn reflected_identity(x: &[f64], h: f64, grid: &[f64]) {
    let est = reflection_kde(x, h, grid).unwrap();
    let mut doubled: Vec<f64> = x.to_vec();
    doubled.extend(x.iter().map(|v| -v));
    let classical = classical_kde(&doubled, h, grid).unwrap();
    for (r, c) in est.values.iter().zip(&classical) {
        assert!((r - 2.0 * c).abs() <= 1e-12, "{r} vs {}", 2.0 * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_equals_doubled_classical(
        x in prop::collection::vec(0.0f64..3.0, 1..200),
        h in 0.01f64..1.0,
    ) {
        let max = x.iter().copied().fold(0.0, f64::max);
        let grid = linspace(0.0, max + 6.0 * h, 257);
        reflected_identity(&x, h, &grid);
    }

    #[test]
    fn reflection_estimate_integrates_to_one(
        x in prop::collection::vec(0.0f64..3.0, 1..200),
        h in 0.02f64..1.0,
    ) {
        let max = x.iter().copied().fold(0.0, f64::max);
        let grid = linspace(0.0, max + 6.0 * h, 8001);
        let e = reflection_kde(&x, h, &grid).unwrap();
        prop_assert!((e.integral() - 1.0).abs() < 1e-3, "{}", e.integral());
        prop_assert!(e.values.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn reflection_estimate_is_flat_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..2.0)).collect();
        let h = rng.random_range(0.05..0.5);
        let d = 1e-5 * h;
        let e = reflection_kde(&x, h, &[0.0, d, 2.0 * d]).unwrap();
        let f = &e.values;
        // One-sided three-point derivative; its truncation error involves
        // f''' (zero here) and f'''' δ³.
        let slope = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * d);
        assert!(slope.abs() < 1e-9, "slope {slope} at h = {h}");
    }
}

#[test]
fn reflection_identity_on_section_sample() {
    let cube = builtin_body(BuiltinShape::Cube, false);
    let s = sample_iur_sections(&cube, 20_000, RngStream::new(10)).unwrap();
    let x = root_transform(&s);
    let h = sheather_jones_bandwidth(&x).unwrap().h;
    reflected_identity(&x, h, &default_grid(&x, h, 512));
}

/// Integrated squared distance to the square's chord density on a
/// midpoint grid of [0, √2].
fn ise_to_square(x: &[f64]) -> f64 {
    let h = sheather_jones_bandwidth(x).unwrap().h;
    let m = 2000;
    let dz = 2f64.sqrt() / m as f64;
    let grid: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * dz).collect();
    let est = reflection_kde(x, h, &grid).unwrap();
    grid.iter()
        .zip(&est.values)
        .map(|(&z, &v)| (v - square_chord_density(z).unwrap()).powi(2) * dz)
        .sum()
}

#[test]
fn doubling_the_sample_reduces_squared_error() {
    let sq = builtin_body(BuiltinShape::Square, false);
    let mut better = 0;
    for t in 0..10 {
        let base = RngStream::with_stream(11, t);
        let small = sample_iur_sections(&sq, 50_000, base.child(0)).unwrap();
        let large = sample_iur_sections(&sq, 100_000, base.child(1)).unwrap();
        if ise_to_square(&large.values) < ise_to_square(&small.values) {
            better += 1;
        }
    }
    assert!(better >= 9, "only {better}/10 trials improved");
}

#[test]
fn sheather_jones_is_scale_equivariant_on_sections() {
    let d = builtin_body(BuiltinShape::Dodecahedron, true);
    let x = root_transform(&sample_iur_sections(&d, 50_000, RngStream::new(12)).unwrap());
    let h1 = sheather_jones_bandwidth(&x).unwrap().h;
    let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let h2 = sheather_jones_bandwidth(&doubled).unwrap().h;
    assert!((h2 / h1 - 2.0).abs() < 2e-6, "{h1} {h2}");
}

#[test]
fn volume_scale_estimate_is_consistent_with_root_scale() {
    let cube = builtin_body(BuiltinShape::Cube, false);
    let s = sample_iur_sections(&cube, 100_000, RngStream::new(13)).unwrap();
    let x = root_transform(&s);
    let h = sheather_jones_bandwidth(&x).unwrap().h;
    let root = reflection_kde(&x, h, &default_grid(&x, h, 2048)).unwrap();
    let grid = volume_grid(&root.grid, s.dim, 2048);
    let vol = untransform_density(&root, s.dim, &grid).unwrap();
    // ∫_{z0}^{z1} g(z) dz = ∫_{√z0}^{√z1} g^S(r) dr away from the singular origin.
    let (z0, z1) = (0.25, 1.0);
    let inside = |g: &[f64], v: &[f64], lo: f64, hi: f64| {
        let pts: Vec<(f64, f64)> = g.iter().zip(v).filter(|(z, _)| (lo..=hi).contains(*z)).map(|(a, b)| (*a, *b)).collect();
        let (gs, vs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        gs.windows(2).zip(vs.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum::<f64>()
    };
    let a = inside(&vol.grid, &vol.values, z0, z1);
    let b = inside(&root.grid, &root.values, z0.sqrt(), z1.sqrt());
    assert!((a - b).abs() < 5e-3, "{a} vs {b}");
}
