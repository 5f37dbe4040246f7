//! Summaries of complex samples, Kolmogorov–Smirnov against normals and a
//! bounded-Lipschitz gap estimate.

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: [f64; 2],
    /// `E|X - EX|^2`.
    pub variance: f64,
    /// `E|X|^2`.
    pub second_moment: f64,
    /// Covariance matrix of `(Re X, Im X)`.
    pub covariance: [[f64; 2]; 2],
}

impl Summary {
    pub fn of(samples: &[Complex64]) -> Summary {
        let n = samples.len();
        if n == 0 {
            return Summary { n, mean: [0.0; 2], variance: 0.0, second_moment: 0.0, covariance: [[0.0; 2]; 2] };
        }
        let nf = n as f64;
        let mean: Complex64 = samples.iter().sum::<Complex64>() / nf;
        let (mut rr, mut ii, mut ri, mut m2) = (0.0, 0.0, 0.0, 0.0);
        for z in samples {
            let d = z - mean;
            rr += d.re * d.re;
            ii += d.im * d.im;
            ri += d.re * d.im;
            m2 += z.norm_sqr();
        }
        Summary {
            n,
            mean: [mean.re, mean.im],
            variance: (rr + ii) / nf,
            second_moment: m2 / nf,
            covariance: [[rr / nf, ri / nf], [ri / nf, ii / nf]],
        }
    }

    pub fn mean_c(&self) -> Complex64 {
        Complex64::new(self.mean[0], self.mean[1])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    /// `(lo, hi, count)` over the real parts.
    pub bins: Vec<(f64, f64, u64)>,
}

impl Histogram {
    pub fn of_real(samples: &[Complex64], bins: usize) -> Histogram {
        if samples.is_empty() || bins == 0 {
            return Histogram { bins: vec![] };
        }
        let lo = samples.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let mut counts = vec![0u64; bins];
        for z in samples {
            let k = (((z.re - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram {
            bins: counts
                .into_iter()
                .enumerate()
                .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
                .collect(),
        }
    }
}

/// Samples with their summary and a histogram of the real parts. The
/// samples themselves are not serialised (they go to CSV).
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalDistribution {
    #[serde(skip)]
    pub samples: Vec<Complex64>,
    pub summary: Summary,
    pub histogram: Histogram,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<Complex64>) -> Self {
        let summary = Summary::of(&samples);
        let histogram = Histogram::of_real(&samples, 60);
        EmpiricalDistribution { samples, summary, histogram }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    StdNormalReal,
    StdNormalComplexParts,
}

#[derive(Clone, Debug, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n_samples: usize,
    pub reference: Reference,
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided sup gap between the empirical CDF of `xs` and `N(0, sd^2)`.
/// Ties are handled by evaluating the gap on both sides of every jump.
pub fn ks_normal(xs: &[f64], sd: f64) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = if sd > 0.0 {
            normal_cdf(x / sd)
        } else if x >= 0.0 {
            1.0
        } else {
            0.0
        };
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// KS of normalised samples against a normal law with covariance `gamma`
/// for `(Re, Im)`. A real reference is used when the imaginary variance is
/// zero; otherwise the larger of the two marginal statistics is reported.
pub fn ks_against(samples: &[Complex64], gamma: [[f64; 2]; 2]) -> KsResult {
    let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
    let ks_re = ks_normal(&re, gamma[0][0].max(0.0).sqrt());
    if gamma[1][1] <= 1e-14 {
        return KsResult { statistic: ks_re, n_samples: samples.len(), reference: Reference::StdNormalReal };
    }
    let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
    let ks_im = ks_normal(&im, gamma[1][1].sqrt());
    KsResult { statistic: ks_re.max(ks_im), n_samples: samples.len(), reference: Reference::StdNormalComplexParts }
}

/// Lower estimate of the bounded-Lipschitz distance between two real samples:
/// the largest mean difference over unit hats `max(0, 1 - |x - c|)` with
/// centres on a 0.05 grid covering both samples.
pub fn bl_gap_real(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let lo = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let hi = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let steps = (((hi - lo) / 0.05).ceil() as usize).min(20_000);
    let hat_mean = |xs: &[f64], c: f64| xs.iter().map(|x| (1.0 - (x - c).abs()).max(0.0)).sum::<f64>() / xs.len() as f64;
    (0..=steps)
        .map(|k| {
            let c = lo + k as f64 * 0.05;
            (hat_mean(a, c) - hat_mean(b, c)).abs()
        })
        .fold(0.0, f64::max)
}

/// `bl_gap_real` on real parts, and on imaginary parts when present.
pub fn bl_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let re = |v: &[Complex64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
    let im = |v: &[Complex64]| v.iter().map(|z| z.im).collect::<Vec<_>>();
    let g = bl_gap_real(&re(a), &re(b));
    if a.iter().chain(b).any(|z| z.im != 0.0) {
        g.max(bl_gap_real(&im(a), &im(b)))
    } else {
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 2000;
        // midpoint quantiles of N(0,1) via bisection on the CDF
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let d = ks_normal(&xs, 1.0);
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn ks_of_point_mass_is_half() {
        assert!((ks_normal(&[0.0; 10], 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn summary_moments() {
        let s = Summary::of(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(s.mean, [0.0, 0.0]);
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.second_moment, 1.0);
    }

    #[test]
    fn bl_gap_of_identical_samples_is_zero() {
        let a = [0.1, 0.5, -0.3];
        assert_eq!(bl_gap_real(&a, &a), 0.0);
        assert!(bl_gap_real(&[0.0], &[0.5]) > 0.4);
    }
}
