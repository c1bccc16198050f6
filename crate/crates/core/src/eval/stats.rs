use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::model::ReturnSeries;

/// Summary statistics of a return series: `r` are the returns and
/// `v = Δ ln r²` (zero returns skipped). Kurtosis is non-excess (normal = 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub sigma_r: f64,
    pub gamma_r: f64,
    /// `None` when fewer than four non-constant `v` values exist.
    pub sigma_v: Option<f64>,
    pub gamma_v: Option<f64>,
    pub length: usize,
}

/// Population standard deviation and kurtosis.
fn sd_and_kurtosis(x: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(m2 > 0.0) {
        return None;
    }
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Some((m2.sqrt(), m4 / (m2 * m2)))
}

pub fn series_stats(series: &ReturnSeries) -> Result<SeriesStats> {
    let r = series.returns();
    if r.len() < 4 {
        return Err(input(format!("series statistics need at least 4 returns, got {}", r.len())));
    }
    let (sigma_r, gamma_r) = sd_and_kurtosis(r).ok_or_else(|| domain("kurtosis undefined for a constant series"))?;
    let log_sq: Vec<f64> = r.iter().filter(|x| **x != 0.0).map(|x| (x * x).ln()).collect();
    let v: Vec<f64> = log_sq.windows(2).map(|w| w[1] - w[0]).collect();
    let (sigma_v, gamma_v) = if v.len() >= 4 {
        sd_and_kurtosis(&v).map_or((None, None), |(s, k)| (Some(s), Some(k)))
    } else {
        (None, None)
    };
    Ok(SeriesStats {
        sigma_r,
        gamma_r,
        sigma_v,
        gamma_v,
        length: r.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sampling::standard_normal;
    use crate::numerics::seeded_rng;
    use proptest::prelude::*;

    #[test]
    fn alternating_unit_series() {
        let s = series_stats(&ReturnSeries::from_returns(vec![-1.0, 1.0, -1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.sigma_r, 1.0);
        assert_eq!(s.gamma_r, 1.0);
        // ln r² is constant, so v has no spread
        assert_eq!(s.sigma_v, None);
    }

    #[test]
    fn normal_kurtosis() {
        let mut rng = seeded_rng(5);
        let r: Vec<f64> = (0..1_000_000).map(|_| standard_normal(&mut rng)).collect();
        let s = series_stats(&ReturnSeries::from_returns(r).unwrap()).unwrap();
        assert!((s.gamma_r - 3.0).abs() < 0.05);
        assert!((s.sigma_r - 1.0).abs() < 0.01);
        assert!(s.gamma_v.unwrap() > 3.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            series_stats(&ReturnSeries::from_returns(vec![0.5; 10]).unwrap()),
            Err(crate::Error::Domain(_))
        ));
        assert!(series_stats(&ReturnSeries::from_returns(vec![0.1, 0.2, 0.3]).unwrap()).is_err());
    }

    #[test]
    fn zero_returns_are_skipped_in_v() {
        let s = series_stats(&ReturnSeries::from_returns(vec![1.0, 0.0, 2.0, 0.0, 1.0, 3.0, 0.5, 2.0]).unwrap()).unwrap();
        assert!(s.sigma_v.unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn sign_flip_invariance(r in prop::collection::vec(-10.0f64..10.0, 4..60)) {
            let a = ReturnSeries::from_returns(r.clone()).unwrap();
            let b = ReturnSeries::from_returns(r.iter().map(|x| -x).collect()).unwrap();
            match (series_stats(&a), series_stats(&b)) {
                (Ok(x), Ok(y)) => {
                    prop_assert!((x.sigma_r - y.sigma_r).abs() <= 1e-12 * x.sigma_r.max(1.0));
                    prop_assert!((x.gamma_r - y.gamma_r).abs() <= 1e-9 * x.gamma_r);
                    prop_assert_eq!(x.sigma_v, y.sigma_v);
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "only one side failed"),
            }
        }
    }
}
