use serde::{Deserialize, Serialize};

/// Running mean and centered sum of squares (Welford), mergeable in a
/// fixed order so sharded runs reproduce bit for bit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Accumulator) -> Accumulator {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        Accumulator { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn second_moment(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64 + self.mean * self.mean
        }
    }

    /// Variance of the sample mean.
    pub fn mean_variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.variance() / self.n as f64
        }
    }
}

/// Point estimate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width_95: f64,
    pub n_samples: u64,
    pub second_moment: f64,
    /// The mean is too close to zero for a symmetric interval; only the
    /// upper end `mean + half_width_95` is meaningful.
    pub one_sided: bool,
}

pub const Z95: f64 = 1.959_963_984_540_054;

impl Estimate {
    pub fn from_parts(mean: f64, mean_variance: f64, n_samples: u64, second_moment: f64) -> Self {
        let half_width_95 = Z95 * mean_variance.max(0.0).sqrt();
        Estimate {
            mean,
            half_width_95,
            n_samples,
            second_moment,
            one_sided: mean < 10.0 * f64::EPSILON * n_samples as f64,
        }
    }

    pub fn from_accumulator(acc: &Accumulator) -> Self {
        Self::from_parts(acc.mean, acc.mean_variance(), acc.n, acc.second_moment())
    }

    pub fn relative_error(&self) -> f64 {
        if self.mean > 0.0 {
            self.half_width_95 / (Z95 * self.mean)
        } else {
            f64::INFINITY
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.half_width_95 / Z95
    }

    /// Interval at another two-sided normal quantile `z`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        let h = self.std_error() * z;
        (self.mean - h, self.mean + h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let mut whole = Accumulator::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..30].iter().for_each(|&x| a.push(x));
        xs[30..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.n, whole.n);
        assert!((m.mean - whole.mean).abs() < 1e-14);
        assert!((m.m2 - whole.m2).abs() < 1e-12);
        let direct: f64 = xs.iter().map(|x| x * x).sum::<f64>() / 100.0;
        assert!((m.second_moment() - direct).abs() < 1e-12);
    }
}
