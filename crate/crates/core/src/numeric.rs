//! Small numerical helpers shared across modules.

/// Neumaier-compensated sum of a stream of `f64`.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sin(x)/x`, evaluated by its Taylor series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `(1 - cos x)/x`, written as `2 sin²(x/2)/x` to avoid cancellation.
pub(crate) fn versinc(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let s = (0.5 * x).sin();
    2.0 * s * s / x
}
