use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Median, averaging the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub p_value: f64,
    pub df: usize,
    pub mean_difference: f64,
    /// Set when every difference is zero; `p_value` is then 1.
    pub degenerate: bool,
}

/// Two-sided paired t-test on `a[i] - b[i]`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} paired values", a.len(), b.len())));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    ttest_differences(&diffs)
}

pub fn ttest_differences(diffs: &[f64]) -> Result<TTestResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::EmptyInput);
    }
    let df = n - 1;
    let m = mean(diffs).unwrap();
    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TTestResult {
            t: 0.0,
            p_value: 1.0,
            df,
            mean_difference: 0.0,
            degenerate: true,
        });
    }
    let var = diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / df as f64;
    let se = (var / n as f64).sqrt();
    let (t, p_value) = if se == 0.0 {
        (m.signum() * f64::INFINITY, 0.0)
    } else {
        let t = m / se;
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (t, (2.0 * dist.sf(t.abs())).min(1.0))
    };
    Ok(TTestResult {
        t,
        p_value,
        df,
        mean_difference: m,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[9.2, 7.9, 13.1]), Some(9.2));
        assert_eq!(median(&[1.0, 4.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert_eq!(mean(&[1.0, 2.0]), Some(1.5));
    }

    #[test]
    fn symmetric_differences_give_zero_t() {
        let r = ttest_differences(&[1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let r = paired_ttest(&[0.5, 0.2], &[0.5, 0.2]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn matches_high_precision_reference() {
        // scripts/ttest_reference.py integrates the t density with mpmath
        let r = ttest_differences(&[1.1, 0.9, 1.0, 1.2, 0.8]).unwrap();
        assert!((r.t - REF_T).abs() < 1e-10, "t = {}", r.t);
        assert!(((r.p_value - REF_P) / REF_P).abs() < 1e-9, "p = {}", r.p_value);
    }

    const REF_T: f64 = 14.142_135_623_730_950_488;
    const REF_P: f64 = 1.451_281_706_131_976_197e-4;

    #[test]
    fn negating_flips_t() {
        let d = [0.3, 0.1, 0.5, -0.05];
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        let (a, b) = (ttest_differences(&d).unwrap(), ttest_differences(&neg).unwrap());
        assert_eq!(a.t, -b.t);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn needs_two_pairs() {
        assert!(ttest_differences(&[1.0]).is_err());
        assert!(paired_ttest(&[1.0, 2.0], &[1.0]).is_err());
    }
}
