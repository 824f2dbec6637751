//! Sample statistics for Monte Carlo reports. All reductions run in index order.

use crate::error::{invalid, Result};
use crate::rng::RandomStream;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two samples.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Standard error of the mean.
pub fn mean_se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the sample variance, `sqrt((m4 - s^4 (n-3)/(n-1)) / n)`.
pub fn variance_se(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 4 {
        return f64::INFINITY;
    }
    let m = mean(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let s2 = variance(xs);
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt()
}

/// Percentile bootstrap interval for the variance at level `1 - alpha`.
///
/// The interval is widened if needed so that it contains the point estimate.
pub fn bootstrap_variance_ci(
    xs: &[f64],
    resamples: usize,
    alpha: f64,
    stream: &mut RandomStream,
) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return invalid("bootstrap needs at least two samples");
    }
    if resamples == 0 {
        return invalid("bootstrap needs at least one resample");
    }
    let n = xs.len();
    let mut draw = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for d in draw.iter_mut() {
                *d = xs[stream.index(n)];
            }
            variance(&draw)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let point = variance(xs);
    let lo = quantile_sorted(&stats, alpha / 2.0).min(point);
    let hi = quantile_sorted(&stats, 1.0 - alpha / 2.0).max(point);
    Ok((lo, hi))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, 0.5)
}

/// Least-squares nondecreasing fit by pool-adjacent-violators.
pub fn isotonic(ys: &[f64]) -> Vec<f64> {
    // (mean, weight) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() >= 2 {
            let (b, wb) = blocks[blocks.len() - 1];
            let (a, wa) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((a * wa as f64 + b * wb as f64) / (wa + wb) as f64, wa + wb));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, w)| std::iter::repeat_n(v, w))
        .collect()
}

/// First `x` where the nondecreasing piecewise-linear curve `(xs, ys)` reaches `level`.
///
/// `None` when the curve never reaches it or already starts above it.
pub fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    if ys.first().is_none_or(|&y| y >= level) {
        return None;
    }
    for k in 1..xs.len() {
        if ys[k] >= level {
            let t = (level - ys[k - 1]) / (ys[k] - ys[k - 1]);
            return Some(xs[k - 1] + t * (xs[k] - xs[k - 1]));
        }
    }
    None
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
