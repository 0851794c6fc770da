use proptest::prelude::*;

use schatten_lab::dyadic::{find_cover, DyadicGrid, DyadicSystem, Span, TruncationWindow};
use schatten_lab::operators::{
    commutator, hilbert, multiplication, paraproduct, weight_conjugate, weight_conjugate_cells, Basis, CellWeights,
};
use schatten_lab::schatten::{schatten_norm, singular_values, weak_schatten};
use schatten_lab::symbols::{haar_coefficients, Symbol};
use schatten_lab::weights::{a2_constant, IntervalFamily, Weight};

fn window() -> TruncationWindow {
    TruncationWindow::new(0.0, 2.0, -1, 4).unwrap()
}

fn step_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 32)
}

fn exponent() -> impl Strategy<Value = f64> {
    -0.8..0.8f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn haar_parseval(v in step_values()) {
        let w = window();
        let b = Symbol::step(w, v.clone()).unwrap();
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        let coeffs = haar_coefficients(&b, &sys);
        let detail: f64 = coeffs.values.iter().map(|c| c * c).sum();
        let coarse: f64 = sys.at_scale(w.j_min).iter().map(|i| b.integral(i.span()).powi(2) / i.len()).sum();
        let energy: f64 = v.iter().map(|x| x * x).sum::<f64>() * w.cell_len();
        prop_assert!((detail + coarse - energy).abs() <= 1e-12 * energy.max(1.0));
    }

    #[test]
    fn frobenius_matches_spectrum(v in step_values(), em in exponent(), el in exponent()) {
        let w = window();
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        let b = Symbol::step(w, v).unwrap();
        let t = commutator(&multiplication(&b, &sys).unwrap(), &hilbert(&w).unwrap()).unwrap();
        let a = weight_conjugate(&t, &Weight::power(el, 0.7), &Weight::power(em, 0.7)).unwrap();
        let spec = singular_values(&a).unwrap();
        let fro = a.frobenius();
        prop_assert!((schatten_norm(&spec, 2.0).unwrap() - fro).abs() <= 1e-10 * fro.max(1e-300));
    }

    #[test]
    fn schatten_monotone_and_weak_below_strong(v in step_values(), p in 1.0..6.0f64, dp in 0.1..3.0f64) {
        let w = window();
        let sys = DyadicSystem::new(DyadicGrid::ThirdShift, w).unwrap();
        let spec = singular_values(&paraproduct(&Symbol::step(w, v).unwrap(), &sys).unwrap()).unwrap();
        let lo = schatten_norm(&spec, p).unwrap();
        let hi = schatten_norm(&spec, p + dp).unwrap();
        prop_assert!(hi <= lo * (1.0 + 1e-12));
        prop_assert!(weak_schatten(&spec, p).unwrap() <= lo * (1.0 + 1e-12));
        prop_assert!(spec.values.windows(2).all(|s| s[0] >= s[1]));
    }

    #[test]
    fn paraproduct_is_linear(u in step_values(), v in step_values(), c in -2.0..2.0f64) {
        let w = window();
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + c * b).collect();
        let pu = paraproduct(&Symbol::step(w, u).unwrap(), &sys).unwrap();
        let pv = paraproduct(&Symbol::step(w, v).unwrap(), &sys).unwrap();
        let ps = paraproduct(&Symbol::step(w, sum).unwrap(), &sys).unwrap();
        let diff = ps.matrix() - pu.matrix() - pv.matrix() * c;
        prop_assert!(diff.abs().max() <= 1e-12);
    }

    #[test]
    fn conjugation_round_trip(v in step_values(), em in exponent(), el in exponent()) {
        let w = window();
        let sys = DyadicSystem::new(DyadicGrid::Standard, w).unwrap();
        let t = multiplication(&Symbol::step(w, v).unwrap(), &sys).unwrap();
        let t = commutator(&t, &hilbert(&w).unwrap()).unwrap();
        let basis = Basis::of(&sys);
        let l = CellWeights::of(&Weight::power(el, 1.2), &basis).unwrap();
        let m = CellWeights::of(&Weight::power(em, 0.4), &basis).unwrap();
        let there = weight_conjugate_cells(&t, &l, &m).unwrap();
        let back = weight_conjugate_cells(&there, &l.reciprocal(), &m.reciprocal()).unwrap();
        prop_assert!((back.matrix() - t.matrix()).abs().max() <= 1e-12 * t.matrix().abs().max().max(1.0));
    }

    #[test]
    fn cover_within_factor_six(lo in -10.0..10.0f64, len in 1e-6..5.0f64) {
        let span = Span::new(lo, lo + len);
        let q = find_cover(span, 6.0).unwrap();
        prop_assert!(q.lo() <= span.lo && span.hi <= q.hi());
        prop_assert!(q.len() >= len && q.len() <= 6.0 * len);
    }

    #[test]
    fn a2_at_least_one(e in exponent(), c in -1.0..3.0f64, seed in 0u64..1000) {
        let family = IntervalFamily::dyadic_and_random(&window(), 50, seed).unwrap();
        let r = a2_constant(&Weight::power(e, c), &family).unwrap();
        prop_assert!(r.constant >= 1.0 - 1e-12);
        // ⟨w⟩⟨w⁻¹⟩ on [c, c + s) is 1/(1 − e²) for every s
        let at = a2_constant(&Weight::power(e, c), &IntervalFamily::from_spans(vec![Span::new(c, c + 0.3)], "one")).unwrap();
        prop_assert!((at.constant - 1.0 / (1.0 - e * e)).abs() <= 1e-10);
    }
}
