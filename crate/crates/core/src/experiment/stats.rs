use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two pairs, got {0}")]
    TooFew(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u32,
    pub p_two_tailed: f64,
    /// Mean of `x - y`.
    pub mean_diff: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Two-tailed tail probability of Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: u32) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let v = f64::from(df);
    beta_reg(v / 2.0, 0.5, v / (v + t * t)).clamp(0.0, 1.0)
}

/// Matched-pairs t-test on `xs[i] - ys[i]`.
///
/// Zero spread with zero mean difference gives `t = 0, p = 1`; zero spread
/// with a nonzero mean gives an infinite `t` and `p = 0`.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<TTestResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    let d: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let mean_diff = mean(&d);
    let sd = sample_sd(&d);
    let df = (n - 1) as u32;
    let t = if sd == 0.0 {
        if mean_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean_diff)
        }
    } else {
        mean_diff / (sd / (n as f64).sqrt())
    };
    Ok(TTestResult {
        t,
        df,
        p_two_tailed: student_t_two_tailed(t, df),
        mean_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples() {
        let r = paired_t_test(&[1.0, 5.0, 2.0], &[1.0, 5.0, 2.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
    }

    #[test]
    fn constant_nonzero_difference() {
        let r = paired_t_test(&[2.0, 3.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.t, f64::INFINITY);
        assert_eq!(r.p_two_tailed, 0.0);
        let r = paired_t_test(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.t, f64::NEG_INFINITY);
    }

    #[test]
    fn hand_computed_vector() {
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_abs_diff_eq!(r.t, -2.0 * 3f64.sqrt(), epsilon = 1e-9);
        assert_eq!(r.df, 2);
        assert_eq!(r.mean_diff, -2.0);
        // df = 2 has the closed form p = 1 - |t| / sqrt(t^2 + 2)
        let closed = 1.0 - r.t.abs() / (r.t * r.t + 2.0).sqrt();
        assert_abs_diff_eq!(r.p_two_tailed, closed, epsilon = 1e-9);
    }

    #[test]
    fn matches_df1_cauchy_tail() {
        // df = 1 is Cauchy: p = 1 - 2 atan(|t|) / pi
        for t in [0.3, 1.0, 2.5, 12.0] {
            let closed = 1.0 - 2.0 * f64::atan(t) / std::f64::consts::PI;
            assert_abs_diff_eq!(student_t_two_tailed(t, 1), closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn t_table_critical_values() {
        // two-tailed 0.01 critical values
        for (t, df) in [(63.657, 1), (9.925, 2), (4.032, 5), (2.861, 19), (2.750, 30)] {
            assert_abs_diff_eq!(student_t_two_tailed(t, df), 0.01, epsilon = 2e-5);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(paired_t_test(&[1.0], &[1.0, 2.0]), Err(StatsError::LengthMismatch(1, 2)));
        assert_eq!(paired_t_test(&[1.0], &[2.0]), Err(StatsError::TooFew(1)));
    }
}
