//! Dependence between a normalized daily profile and the same-day NTL.

mod grid;
mod mic;

pub use grid::{equipartition, grid_mutual_information, Equipartition};
pub use mic::{
    admissible_shapes, characteristic_matrix, max_mi, max_mi_with, mic, mic_with, CharacteristicMatrix,
    MicParams, MicResult,
};

use crate::error::{Error, Result};

/// Paired observations `(x_t, y_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairSample {
    pub const MIN_POINTS: usize = 4;

    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Shape(format!(
                "paired sample has {} x values and {} y values",
                x.len(),
                y.len()
            )));
        }
        if x.len() < Self::MIN_POINTS {
            return Err(Error::Shape(format!(
                "paired sample needs at least {} points, got {}",
                Self::MIN_POINTS,
                x.len()
            )));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("paired sample contains a non-finite value".into()));
        }
        Ok(PairSample { x, y })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn swapped(&self) -> Self {
        PairSample {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PccResult {
    pub value: f64,
    pub degenerate: bool,
}

/// Pearson product-moment correlation; 0 with the degenerate flag when
/// either coordinate is constant.
pub fn pcc(sample: &PairSample) -> PccResult {
    let n = sample.len() as f64;
    let mx = sample.x.iter().sum::<f64>() / n;
    let my = sample.y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in sample.x.iter().zip(&sample.y) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return PccResult {
            value: 0.0,
            degenerate: true,
        };
    }
    PccResult {
        value: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn naive_pcc(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn sample_validation() {
        assert!(PairSample::new(vec![1.0; 3], vec![1.0; 3]).is_err());
        assert!(PairSample::new(vec![1.0; 4], vec![1.0; 5]).is_err());
        assert!(PairSample::new(vec![1.0, 2.0, f64::NAN, 3.0], vec![0.0; 4]).is_err());
        let s = PairSample::from_pairs(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0), (7.0, 8.0)]).unwrap();
        assert_eq!(s.swapped().x(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn pcc_affine() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let up = PairSample::new(x.clone(), x.iter().map(|v| 2.0 * v + 3.0).collect()).unwrap();
        let down = PairSample::new(x.clone(), x.iter().map(|v| -v).collect()).unwrap();
        assert!((pcc(&up).value - 1.0).abs() < 1e-12);
        assert!((pcc(&down).value + 1.0).abs() < 1e-12);
        let flat = PairSample::new(x, vec![4.0; 20]).unwrap();
        assert_eq!(pcc(&flat), PccResult { value: 0.0, degenerate: true });
    }

    #[test]
    fn pcc_matches_naive_and_independent_is_small() {
        let mut rng = crate::rng::stream(5, &[]);
        for _ in 0..50 {
            let x: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..30).map(|_| rng.random::<f64>() + x[0]).collect();
            let s = PairSample::new(x.clone(), y.clone()).unwrap();
            assert!((pcc(&s).value - naive_pcc(&x, &y)).abs() < 1e-12);
        }
        let x: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(pcc(&PairSample::new(x, y).unwrap()).value.abs() < 0.05);
    }
}
