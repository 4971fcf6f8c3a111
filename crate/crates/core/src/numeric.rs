//! Small numerical helpers: adaptive quadrature toward a singular endpoint
//! and monotone bisection.

/// `∫_0^r f(x) dx` for `f` possibly singular at `x = 0`, integrated panel by
/// panel on `[r 2^{-k-1}, r 2^{-k}]` with adaptive Simpson on each panel.
///
/// Panels stop at `floor`; the part below is extrapolated as a geometric
/// series from the ratio of the last two panels, which is exact for power
/// laws `f(x) = C x^{-a}`. Returns `+∞` when the panels stop shrinking.
pub(crate) fn integrate_toward_zero(f: &dyn Fn(f64) -> f64, r: f64, rel_tol: f64, floor: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut hi = r;
    let mut last = (f64::NAN, f64::NAN);
    while hi * 0.5 >= floor.max(f64::MIN_POSITIVE) {
        let lo = hi * 0.5;
        let panel = adaptive_simpson(f, lo, hi, rel_tol * 1e-2);
        if !panel.is_finite() {
            return f64::INFINITY;
        }
        total += panel;
        last = (last.1, panel);
        if panel.abs() <= rel_tol * 1e-3 * total.abs() {
            return total;
        }
        hi = lo;
    }
    let ratio = last.1 / last.0;
    if last.1 == 0.0 {
        total
    } else if (0.0..1.0).contains(&ratio) {
        total + last.1 * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, rel_tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * rel_tol * (left + right).abs().max(f64::MIN_POSITIVE) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, rel_tol, depth - 1)
}

/// Largest `x ∈ [lo, hi]` with `f(x) ≤ target` for nondecreasing `f`,
/// assuming `f(lo) ≤ target`. Steps geometrically while the bracket spans
/// more than a factor of four, so roots near zero are found to full
/// relative precision.
pub(crate) fn bisect_largest(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    if f(hi) <= target {
        return hi;
    }
    for _ in 0..6000 {
        let mid = if lo == 0.0 {
            if hi > 1e-290 {
                hi / 1024.0
            } else {
                hi * 0.5
            }
        } else if hi / lo > 4.0 {
            lo.sqrt() * hi.sqrt()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if !(mid > lo && mid < hi) {
            break;
        }
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_inverse_sqrt_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate_toward_zero(&|x: f64| x.powf(-0.5), 1.0, 1e-10, 1e-12);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
        let v = integrate_toward_zero(&|x: f64| x * x, 0.5, 1e-10, 1e-12);
        assert!((v - 0.125 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_tiny_roots() {
        let r = bisect_largest(|x| x.sqrt(), 1e-20, 0.0, 1.0);
        assert!((r / 1e-40 - 1.0).abs() < 1e-12, "{r}");
        let r = bisect_largest(|x| x, 0.3, 0.0, 1.0);
        assert!((r - 0.3).abs() < 1e-15);
        assert_eq!(bisect_largest(|x| x, 2.0, 0.0, 1.0), 1.0);
    }
}
