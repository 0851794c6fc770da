//! Gauss–Legendre quadrature helpers.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

pub const NODES: usize = 32;
pub const REL_TOL: f64 = 1e-10;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(NODES).unwrap()))
}

/// 32-node rule on `[a, b]`.
pub fn gauss32<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    rule().integrate(a, b, f)
}

/// 32 nodes per piece on `pieces` equal subintervals.
pub fn composite<F: FnMut(f64) -> f64>(a: f64, b: f64, pieces: usize, mut f: F) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            gauss32(lo, lo + h, &mut f)
        })
        .sum()
}

/// Composite rule with one refinement: returns the refined value when the two
/// levels disagree beyond [`REL_TOL`], together with the observed difference.
pub fn refine_once<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> (f64, f64) {
    let coarse = gauss32(a, b, &mut f);
    let fine = composite(a, b, 2, &mut f);
    let diff = (fine - coarse).abs();
    if diff <= REL_TOL * fine.abs() {
        (coarse, diff)
    } else {
        (composite(a, b, 8, &mut f), diff)
    }
}

/// `∫_0^len f(t) dt` for `f` with an integrable singularity at `t = 0`.
/// Callers pass the distance to the singular point so it stays exact.
pub fn graded<F: FnMut(f64) -> f64>(len: f64, mut f: F) -> f64 {
    const LEVELS: i32 = 60;
    let mut total = 0.0;
    let (mut prev, mut last) = (f64::NAN, f64::NAN);
    for m in 0..LEVELS {
        let outer = len * 0.5f64.powi(m);
        let inner = len * 0.5f64.powi(m + 1);
        let piece = gauss32(inner, outer, &mut f);
        total += piece;
        (prev, last) = (last, piece);
    }
    // Remaining tail extrapolated as a geometric series of the last two levels,
    // exact for pure power laws.
    let ratio = last / prev;
    if ratio > 0.0 && ratio < 1.0 {
        total += last * ratio / (1.0 - ratio);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = gauss32(0.0, 2.0, |x| x.powi(7) - 3.0 * x);
        assert!((v - (2f64.powi(8) / 8.0 - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn graded_handles_sqrt_singularity() {
        let v = graded(1.0, |t| t.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-13, "{v}");
        let v = graded(1.0, |t| t.powf(-0.25));
        assert!((v - 4.0 / 3.0).abs() < 1e-13, "{v}");
    }
}
