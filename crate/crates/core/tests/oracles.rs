//! Seeded Monte Carlo estimates as independent oracles for the quadrature norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use schatten_lab::besov::{continuous_besov_norm_p2, continuous_besov_norm_unweighted};
use schatten_lab::dyadic::{DyadicGrid, DyadicSystem, Span, TruncationWindow};
use schatten_lab::operators::{Basis, OperatorMatrix};
use schatten_lab::schatten::mixed_norm;
use schatten_lab::symbols::Symbol;
use schatten_lab::weights::{Weight, WeightPair};

/// Mean and standard error of `f` over `n` uniform points of `span²`, times the area.
fn monte_carlo(span: Span, n: usize, seed: u64, f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = rng.gen_range(span.lo..span.hi);
        let y = rng.gen_range(span.lo..span.hi);
        let v = f(x, y);
        s += v;
        s2 += v * v;
    }
    let area = span.len() * span.len();
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean).max(0.0);
    (mean * area, (var / n as f64).sqrt() * area)
}

fn sine(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        (2.0 * std::f64::consts::PI * x).sin()
    } else {
        0.0
    }
}

#[test]
fn weighted_p2_norm_matches_monte_carlo() {
    let window = TruncationWindow::new(-2.0, 2.0, -1, 6).unwrap();
    let c = 1.0 / 3.0;
    let (el, em) = (0.25, -0.25);
    let pair = WeightPair::new(Weight::power(em, c), Weight::power(el, c));
    let r = continuous_besov_norm_p2(&Symbol::sine(1), &pair, &window).unwrap();
    let (mc, se) = monte_carlo(window.span(), 2_000_000, 5, |x, y| {
        if x == y {
            return 0.0;
        }
        let q = (sine(x) - sine(y)) / (x - y);
        q * q * (x - c).abs().powf(el) * (y - c).abs().powf(-em)
    });
    let value = r.value * r.value;
    assert!((value - mc).abs() <= 4.0 * se + 2.0 * r.value * r.error_estimate.unwrap(), "{value} vs {mc} ± {se}");
    assert!(se < 0.02 * mc);
}

#[test]
fn unweighted_p3_norm_matches_monte_carlo() {
    let window = TruncationWindow::new(-2.0, 2.0, -1, 6).unwrap();
    let p = 3.0;
    let r = continuous_besov_norm_unweighted(&Symbol::sine(1), p, &window).unwrap();
    let (mc, se) = monte_carlo(window.span(), 2_000_000, 6, |x, y| {
        if x == y {
            return 0.0;
        }
        (sine(x) - sine(y)).abs().powf(p) / ((x - y) * (x - y))
    });
    let value = r.value.powf(p);
    assert!((value - mc).abs() <= 4.0 * se + p * value * r.error_estimate.unwrap() / r.value, "{value} vs {mc} ± {se}");
}

#[test]
fn power_weight_integrals_match_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let w = Weight::power(0.4, 0.25);
    for s in [1.0, 2.0, -1.0] {
        let span = Span::new(-0.5, 1.5);
        let n = 400_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let v = w.eval(rng.gen_range(span.lo..span.hi)).powf(s);
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt() * span.len();
        let exact = w.integral_pow(span, s).unwrap();
        assert!((exact - mean * span.len()).abs() <= 4.0 * se, "s={s}: {exact} vs {}", mean * span.len());
    }
}

#[test]
fn unit_square_kernel_has_unit_mixed_norm() {
    let window = TruncationWindow::new(0.0, 1.0, 0, 5).unwrap();
    let sys = DyadicSystem::new(DyadicGrid::Standard, window).unwrap();
    let n = sys.n_cells();
    let h = window.cell_len();
    let t = OperatorMatrix::new(nalgebra::DMatrix::from_element(n, n, h), Basis::of(&sys), "chi").unwrap();
    for p in [3.0, 4.0, 6.0] {
        let r = mixed_norm(&t, p).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12 && (r.adjoint_value - 1.0).abs() < 1e-12);
        assert!((r.weak_schatten - 1.0).abs() < 1e-12);
        assert!(r.holds);
    }
}
