//! Feature-level significance statistics: Welch's two-sample t-test with
//! the two-sided p-value evaluated through the regularized incomplete
//! beta function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::features::FEATURE_NAMES;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("expected exactly 2 classes, got {0}")]
    NotBinary(usize),
    #[error("class `{0}` has {1} row(s); the test needs at least 2 per class")]
    TooFewRows(String, usize),
}

/// Lanczos approximation (g = 7, 9 coefficients).
#[allow(clippy::excessive_precision)] // published constants kept verbatim
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
///
/// The continued fraction converges fastest for x below the pivot
/// (a+1)/(a+b+2); above it, evaluate the mirrored integral via
/// I_x(a,b) = 1 - I_{1-x}(b,a).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

/// Two-sided Student-t tail probability P(|T_df| > |t|).
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Welch's two-sample t-test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub mean: [f64; 2],
    /// Sample standard deviations (n - 1 denominator).
    pub std: [f64; 2],
    pub n: [usize; 2],
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    // A constant group has zero variance by definition; computing it
    // through the rounded mean would leak ~1e-33 and fake a signal.
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return (xs[0], 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t-test with Welch-Satterthwaite degrees of freedom.
///
/// Both groups need at least two samples. When both groups are constant
/// the statistic degenerates: equal means give p = 1 by convention,
/// different means give p = 0.
pub fn welch_t_test(group1: &[f64], group2: &[f64]) -> WelchTest {
    assert!(group1.len() >= 2 && group2.len() >= 2, "need >= 2 samples per group");
    let (m1, v1) = mean_and_var(group1);
    let (m2, v2) = mean_and_var(group2);
    let n1 = group1.len() as f64;
    let n2 = group2.len() as f64;
    let se2 = v1 / n1 + v2 / n2;

    let (t, df, p) = if se2 == 0.0 {
        if m1 == m2 {
            (0.0, n1 + n2 - 2.0, 1.0)
        } else {
            (f64::INFINITY * (m1 - m2).signum(), n1 + n2 - 2.0, 0.0)
        }
    } else {
        let t = (m1 - m2) / se2.sqrt();
        let df = se2 * se2
            / ((v1 / n1).powi(2) / (n1 - 1.0) + (v2 / n2).powi(2) / (n2 - 1.0));
        (t, df, t_two_sided_p(t, df))
    };

    WelchTest {
        t,
        df,
        p_value: p,
        mean: [m1, m2],
        std: [v1.sqrt(), v2.sqrt()],
        n: [group1.len(), group2.len()],
    }
}

/// Per-feature test results over a two-class dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub feature: String,
    pub p_value: f64,
    pub mean: [f64; 2],
    pub std: [f64; 2],
    pub n: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub class_names: Vec<String>,
    pub features: Vec<FeatureStat>,
}

impl StatsReport {
    /// Table-shaped CSV: `feature,p_value,mean_kafo1,...`; group 1 is the
    /// first class in lexicographic order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "feature,p_value,mean_kafo1,mean_kafo2,std_kafo1,std_kafo2,n1,n2\n",
        );
        for f in &self.features {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                f.feature, f.p_value, f.mean[0], f.mean[1], f.std[0], f.std[1], f.n[0], f.n[1]
            ));
        }
        out
    }
}

/// Welch's t-test per feature column, classes in `class_names` order.
pub fn feature_p_values(data: &Dataset) -> Result<StatsReport, StatsError> {
    if data.n_classes() != 2 {
        return Err(StatsError::NotBinary(data.n_classes()));
    }
    for c in 0..2 {
        let n = data.labels.iter().filter(|&&l| l == c).count();
        if n < 2 {
            return Err(StatsError::TooFewRows(data.class_names[c].clone(), n));
        }
    }

    let d = data.n_features();
    let mut features = Vec::with_capacity(d);
    for j in 0..d {
        let g1: Vec<f64> = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(_, &l)| l == 0)
            .map(|(r, _)| r[j])
            .collect();
        let g2: Vec<f64> = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(_, &l)| l == 1)
            .map(|(r, _)| r[j])
            .collect();
        let test = welch_t_test(&g1, &g2);
        let name = FEATURE_NAMES
            .get(j)
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("feature_{j}"));
        features.push(FeatureStat {
            feature: name,
            p_value: test.p_value,
            mean: test.mean,
            std: test.std,
            n: test.n,
        });
    }
    Ok(StatsReport {
        class_names: data.class_names.clone(),
        features,
    })
}
