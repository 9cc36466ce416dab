use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 30.0;

/// `sum_k (1/2)_k / (k!)^2 y^k` for `y >= 0`; all terms positive.
fn series(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (0.5 + k) / ((1.0 + k) * (1.0 + k)) * y;
        sum += term;
        k += 1.0;
        if term <= f64::EPSILON * 0.25 * sum {
            return sum;
        }
    }
}

/// `sum_k ((1/2)_k)^2 / k! y^{-k}`, truncated at its smallest term.
fn asymptotic(y: f64) -> f64 {
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 0.0;
    loop {
        let next = term * (0.5 + k) * (0.5 + k) / ((k + 1.0) * y);
        if next.abs() >= term.abs() || next.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            return sum;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
}

/// Confluent hypergeometric function `1F1(1/2; 1; z)`.
pub fn kummer_1f1_half(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z.is_nan() {
        return f64::NAN;
    }
    let y = z.abs();
    if y <= SERIES_LIMIT {
        if z > 0.0 {
            series(y)
        } else {
            // Kummer's transformation keeps every term positive
            z.exp() * series(y)
        }
    } else if z > 0.0 {
        z.exp() / (PI * y).sqrt() * asymptotic(y)
    } else {
        asymptotic(y) / (PI * y).sqrt()
    }
}
