//! Processing-time laws and the Gaussian moment calculus used by the
//! normal-approximation measures.

use std::f64::consts::{E, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts before a negative normal draw is replaced by zero.
const MAX_REJECTIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Normal,
    Lognormal,
    Exponential,
    Deterministic,
}

/// Processing-time law given by its mean and coefficient of variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub mean: f64,
    pub cv: f64,
}

impl DistributionSpec {
    pub fn normal(mean: f64, cv: f64) -> Self {
        DistributionSpec { kind: DistKind::Normal, mean, cv }
    }

    pub fn lognormal(mean: f64, cv: f64) -> Self {
        DistributionSpec { kind: DistKind::Lognormal, mean, cv }
    }

    pub fn exponential(mean: f64) -> Self {
        DistributionSpec { kind: DistKind::Exponential, mean, cv: 1.0 }
    }

    pub fn deterministic(mean: f64) -> Self {
        DistributionSpec { kind: DistKind::Deterministic, mean, cv: 0.0 }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.mean > 0.0) || !self.mean.is_finite() {
            return Err(Error::Argument(format!("distribution mean must be positive, got {}", self.mean)));
        }
        if !(self.cv >= 0.0) || !self.cv.is_finite() {
            return Err(Error::Argument(format!("coefficient of variation must be non-negative, got {}", self.cv)));
        }
        Ok(())
    }

    /// Coefficient of variation actually in effect for the kind.
    pub fn effective_cv(&self) -> f64 {
        match self.kind {
            DistKind::Normal | DistKind::Lognormal => self.cv,
            DistKind::Exponential => 1.0,
            DistKind::Deterministic => 0.0,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.effective_cv() * self.mean
    }

    pub fn variance(&self) -> f64 {
        self.std_dev().powi(2)
    }

    /// Parameters (mu, sigma) of the underlying normal of the lognormal law.
    fn log_params(&self) -> (f64, f64) {
        let var_log = (1.0 + self.cv * self.cv).ln();
        (self.mean.ln() - var_log / 2.0, var_log.sqrt())
    }

    /// One draw. Normal draws are truncated at zero by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DistKind::Deterministic => self.mean,
            DistKind::Normal => {
                let sd = self.std_dev();
                if sd == 0.0 {
                    return self.mean;
                }
                let law = Normal::new(self.mean, sd).expect("finite normal parameters");
                for _ in 0..MAX_REJECTIONS {
                    let x = law.sample(rng);
                    if x >= 0.0 {
                        return x;
                    }
                }
                0.0
            }
            DistKind::Lognormal => {
                let (mu, sigma) = self.log_params();
                LogNormal::new(mu, sigma).expect("finite lognormal parameters").sample(rng)
            }
            DistKind::Exponential => Exp::new(1.0 / self.mean).expect("positive rate").sample(rng),
        }
    }

    /// Cumulative distribution function of the (untruncated) law.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DistKind::Deterministic => f64::from(x >= self.mean),
            DistKind::Normal => {
                let sd = self.std_dev();
                if sd == 0.0 {
                    f64::from(x >= self.mean)
                } else {
                    normal_cdf((x - self.mean) / sd)
                }
            }
            DistKind::Lognormal => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (mu, sigma) = self.log_params();
                if sigma == 0.0 {
                    f64::from(x >= self.mean)
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            DistKind::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / self.mean).exp_m1()
                }
            }
        }
    }

    /// Inverse CDF of the (untruncated) law.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Argument(format!("quantile level must lie in (0, 1), got {q}")));
        }
        Ok(match self.kind {
            DistKind::Deterministic => self.mean,
            DistKind::Normal => self.mean + self.std_dev() * normal_quantile(q),
            DistKind::Lognormal => {
                let (mu, sigma) = self.log_params();
                (mu + sigma * normal_quantile(q)).exp()
            }
            DistKind::Exponential => -self.mean * (-q).ln_1p(),
        })
    }

    /// `(quantile(q) - mean) / mean`, clamped at zero: the relative overrun
    /// at quantile level `q`.
    pub fn lambda_factor(&self, q: f64) -> Result<f64> {
        Ok(((self.quantile(q)? - self.mean) / self.mean).max(0.0))
    }

    /// Mean absolute deviation relative to the mean, `E|D - p| / p`.
    pub fn mad_factor(&self) -> f64 {
        match self.kind {
            DistKind::Deterministic => 0.0,
            DistKind::Normal => self.cv * (2.0 / PI).sqrt(),
            DistKind::Exponential => 2.0 / E,
            DistKind::Lognormal => {
                let (_, sigma) = self.log_params();
                2.0 * (2.0 * normal_cdf(sigma / 2.0) - 1.0)
            }
        }
    }

    /// Short label: N25, LN50, Exp, Det.
    pub fn label(&self) -> String {
        let pct = (self.cv * 100.0).round() as i64;
        match self.kind {
            DistKind::Normal => format!("N{pct}"),
            DistKind::Lognormal => format!("LN{pct}"),
            DistKind::Exponential => "Exp".to_string(),
            DistKind::Deterministic => "Det".to_string(),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `kind:cv` (`normal:0.25`, `lognormal:0.5`, `exponential`,
/// `deterministic`) or a label (`N25`, `LN50`, `Exp`, `Det`). The mean is a
/// placeholder of 1; callers rescale per job.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("unrecognised distribution '{s}'"));
        let (kind, cv) = match s.split_once(':') {
            Some((k, cv)) => (k, Some(cv.trim().parse::<f64>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let kind = kind.trim();
        let spec = match kind.to_ascii_lowercase().as_str() {
            "normal" | "n" => DistributionSpec::normal(1.0, cv.unwrap_or(0.25)),
            "lognormal" | "ln" => DistributionSpec::lognormal(1.0, cv.unwrap_or(0.25)),
            "exponential" | "exp" => DistributionSpec::exponential(1.0),
            "deterministic" | "det" => DistributionSpec::deterministic(1.0),
            lower => {
                let (kind, digits) = if let Some(d) = lower.strip_prefix("ln") {
                    (DistKind::Lognormal, d)
                } else if let Some(d) = lower.strip_prefix('n') {
                    (DistKind::Normal, d)
                } else {
                    return Err(bad());
                };
                let pct: f64 = digits.parse().map_err(|_| bad())?;
                DistributionSpec { kind, mean: 1.0, cv: pct / 100.0 }
            }
        };
        spec.check()?;
        Ok(spec)
    }
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation (relative
/// error 1.15e-9) followed by one Halley step against [`normal_cdf`].
pub fn normal_quantile(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if q <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if q >= 1.0 {
        return f64::INFINITY;
    }
    let x = if q < P_LOW {
        let t = (-2.0 * q.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    } else if q <= 1.0 - P_LOW {
        let t = q - 0.5;
        let r = t * t;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * t
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let t = (-2.0 * (-q).ln_1p()).sqrt();
        -(((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    };
    let err = normal_cdf(x) - q;
    let u = err * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Mean and variance of an (approximately) normal quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoment {
    pub mu: f64,
    pub var: f64,
}

impl GaussianMoment {
    pub fn new(mu: f64, var: f64) -> Self {
        GaussianMoment { mu, var: var.max(0.0) }
    }

    pub fn point(t: f64) -> Self {
        GaussianMoment { mu: t, var: 0.0 }
    }

    /// Sum with an independent quantity.
    pub fn plus(self, other: GaussianMoment) -> Self {
        GaussianMoment { mu: self.mu + other.mu, var: self.var + other.var }
    }

    /// Moment-matched normal for the maximum of two independent normals
    /// (Clark's formulas).
    pub fn max(self, other: GaussianMoment) -> Self {
        gaussian_max(self, other)
    }

    /// `P(X <= t)`; a point mass counts as on time when `mu <= t`.
    pub fn cdf_at(&self, t: f64) -> f64 {
        gaussian_cdf_at(*self, t)
    }
}

pub fn gaussian_max(a: GaussianMoment, b: GaussianMoment) -> GaussianMoment {
    let theta2 = a.var + b.var;
    if theta2 <= 0.0 {
        return GaussianMoment::point(a.mu.max(b.mu));
    }
    let theta = theta2.sqrt();
    let alpha = (a.mu - b.mu) / theta;
    let (cdf_pos, cdf_neg) = (normal_cdf(alpha), normal_cdf(-alpha));
    let pdf = normal_pdf(alpha);
    let mean = a.mu * cdf_pos + b.mu * cdf_neg + theta * pdf;
    let second = (a.mu * a.mu + a.var) * cdf_pos + (b.mu * b.mu + b.var) * cdf_neg + (a.mu + b.mu) * theta * pdf;
    GaussianMoment::new(mean, second - mean * mean)
}

pub fn gaussian_cdf_at(g: GaussianMoment, t: f64) -> f64 {
    if g.var <= 0.0 {
        f64::from(g.mu <= t)
    } else {
        normal_cdf((t - g.mu) / g.var.sqrt())
    }
}
