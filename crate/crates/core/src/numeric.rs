//! Floating-point helpers shared by the radius and interval code.

/// Correctly rounded sum of `values` (Shewchuk's partials algorithm with the
/// half-even correction used by CPython's `math.fsum`).
///
/// The result depends only on the multiset of inputs, never on their order, so
/// two routes that add up the same radii produce bit-identical totals.
/// Non-finite inputs fall back to ordinary summation.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    let mut special = 0.0_f64;
    let mut any_special = false;

    for mut x in values {
        if !x.is_finite() {
            any_special = true;
            special += x;
            continue;
        }
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    if any_special {
        return special;
    }

    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round half-even across the remaining partials.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

/// Nudges a non-negative value up by a few ulps so that accumulated libm and
/// rounding error in a radius computation can never make it smaller than the
/// real-valued radius.
pub(crate) fn round_up(value: f64) -> f64 {
    const ULPS: usize = 4;
    let mut v = value;
    for _ in 0..ULPS {
        v = v.next_up();
    }
    v
}
