//! One-dimensional root finding used by the line searches.

/// Root of a non-increasing function on `[lo, hi]` (Illinois false position).
///
/// Clamps to the endpoint when the sign does not change inside the interval.
pub fn root_decreasing<F: FnMut(f64) -> f64>(mut g: F, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut ga = g(a);
    if ga <= 0.0 {
        return a;
    }
    let mut gb = g(b);
    if gb >= 0.0 {
        return b;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) + f64::MIN_POSITIVE {
            break;
        }
        let mut x = (a * gb - b * ga) / (gb - ga);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx > 0.0 {
            a = x;
            ga = gx;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = x;
            gb = gx;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    if ga.abs() < gb.abs() {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_finding() {
        let r = root_decreasing(|x| 2.0 - x * x * x, 0.0, 3.0);
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        assert_eq!(root_decreasing(|x| -1.0 - x, 0.0, 1.0), 0.0);
        assert_eq!(root_decreasing(|x| 1.0 - x, 0.0, 0.5), 0.5);
        let r = root_decreasing(|x| 1.0 - 1.0 / (1.0 - x), -3.0, 1.0 - 1e-12);
        assert!(r.abs() < 1e-12);
    }
}
