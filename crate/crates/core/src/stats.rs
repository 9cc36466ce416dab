//! Compensated sums and Monte Carlo summary statistics.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<NeumaierSum>().value()
}

/// Sample mean and the standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<NeumaierSum>().value();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Cumulants of orders 1..=max_order from a sample.
///
/// Orders 2..=4 use the unbiased k-statistics; higher orders go through
/// central moments and the moment-cumulant recursion.
pub fn sample_cumulants(xs: &[f64], max_order: usize) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = sum(xs) / n;
    let mut m = vec![0.0; max_order + 1];
    m[0] = 1.0;
    let mut acc = vec![NeumaierSum::new(); max_order + 1];
    for &x in xs {
        let d = x - mean;
        let mut p = d;
        for a in acc.iter_mut().skip(1) {
            a.add(p);
            p *= d;
        }
    }
    for k in 1..=max_order {
        m[k] = acc[k].value() / n;
    }
    // cumulants from central moments (kappa_1 handled separately)
    let mut kappa = vec![0.0; max_order + 1];
    for r in 2..=max_order {
        let mut v = m[r];
        for j in 2..r {
            v -= binom(r - 1, j - 1) * kappa[j] * m[r - j];
        }
        kappa[r] = v;
    }
    kappa[1] = mean;
    if max_order >= 2 {
        kappa[2] = n / (n - 1.0) * m[2];
    }
    if max_order >= 3 {
        kappa[3] = n * n / ((n - 1.0) * (n - 2.0)) * m[3];
    }
    if max_order >= 4 {
        kappa[4] = n * n * ((n + 1.0) * m[4] - 3.0 * (n - 1.0) * m[2] * m[2])
            / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    }
    kappa
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Batch-of-batches cumulant estimates: mean and standard error per order.
pub fn batched_cumulants(xs: &[f64], batches: usize, max_order: usize) -> Vec<(f64, f64)> {
    let size = xs.len() / batches;
    let per: Vec<Vec<f64>> = (0..batches)
        .map(|b| sample_cumulants(&xs[b * size..(b + 1) * size], max_order))
        .collect();
    (0..=max_order)
        .map(|p| {
            let col: Vec<f64> = per.iter().map(|k| k[p]).collect();
            mean_se(&col)
        })
        .collect()
}

/// Streaming mean and variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan's parallel update.
    pub fn merge(&mut self, other: &RunningMoments) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        self.mean += d * w;
        self.m2 += other.m2 + d * d * self.count as f64 * w;
        self.count = n;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Ordinary least squares fit `y = a + b x`; returns (slope, intercept, slope_se).
pub fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let k = x.len();
    if k < 2 || y.len() != k {
        return None;
    }
    let n = k as f64;
    let mx = sum(x) / n;
    let my = sum(y) / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if k > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some((slope, intercept, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_moments_merge() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 + 1e6).collect();
        let mut all = RunningMoments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = RunningMoments::default();
        let mut b = RunningMoments::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let (m, se) = mean_se(&xs);
        assert!((a.mean - m).abs() < 1e-9 && (all.mean - m).abs() < 1e-9);
        assert!((a.standard_error() - se).abs() < 1e-9 * se.max(1.0));
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn kstat_of_small_sample() {
        // k-statistics of 1,2,3,4,10 computed by hand
        let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
        let k = sample_cumulants(&xs, 4);
        assert!((k[1] - 4.0).abs() < 1e-12);
        assert!((k[2] - 12.5).abs() < 1e-12);
        assert!((k[3] - 75.0).abs() < 1e-10, "{}", k[3]);
    }

    #[test]
    fn ols_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        let (b, a, _) = ols(&x, &y).unwrap();
        assert!((b - 2.0).abs() < 1e-14 && a.abs() < 1e-14);
    }
}
