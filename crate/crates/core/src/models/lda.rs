use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e12;
const RIDGE_FRACTION: f64 = 1e-6;

/// One labelled measurement for the rank classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaPoint {
    pub d_m: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub rank: u8,
}

impl LdaPoint {
    fn features(&self) -> Vector3<f64> {
        Vector3::new(self.d_m, self.azimuth_deg, self.elevation_deg)
    }
}

/// Separating plane `w_d d + w_az azimuth + w_el elevation + bias = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    /// Coefficients on `(d_m, azimuth_deg, elevation_deg)`.
    pub weights: [f64; 3],
    pub bias: f64,
    pub class_for_positive_side: u8,
    pub class_for_negative_side: u8,
    /// Diagonal loading added to the pooled covariance, if any was needed.
    pub ridge: Option<f64>,
}

impl LdaModel {
    pub fn score(&self, p: &LdaPoint) -> f64 {
        self.weights[0] * p.d_m + self.weights[1] * p.azimuth_deg + self.weights[2] * p.elevation_deg + self.bias
    }
}

fn condition(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Two-class Fisher discriminant with pooled covariance and equal priors.
/// The positive side of the plane belongs to the larger rank label.
pub fn fit_lda(points: &[LdaPoint]) -> Result<LdaModel> {
    let mut labels: Vec<u8> = points.iter().map(|p| p.rank).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::domain(format!(
            "LDA needs exactly two rank classes, found {labels:?}"
        )));
    }
    let (neg_label, pos_label) = (labels[0], labels[1]);
    let class = |label: u8| -> Vec<Vector3<f64>> {
        points.iter().filter(|p| p.rank == label).map(LdaPoint::features).collect()
    };
    let pos = class(pos_label);
    let neg = class(neg_label);
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::domain("each rank class needs at least two points"));
    }
    if points.iter().any(|p| !p.features().iter().all(|v| v.is_finite())) {
        return Err(Error::domain("non-finite LDA feature"));
    }

    let mean = |c: &[Vector3<f64>]| c.iter().sum::<Vector3<f64>>() / c.len() as f64;
    let scatter = |c: &[Vector3<f64>], m: &Vector3<f64>| {
        c.iter().fold(Matrix3::zeros(), |acc, x| {
            let e = x - m;
            acc + e * e.transpose()
        })
    };
    let mu_pos = mean(&pos);
    let mu_neg = mean(&neg);
    let dof = (pos.len() + neg.len() - 2) as f64;
    let mut cov = (scatter(&pos, &mu_pos) + scatter(&neg, &mu_neg)) / dof;

    let mut ridge = None;
    if condition(&cov) > MAX_CONDITION {
        let r = RIDGE_FRACTION * cov.trace();
        cov += Matrix3::identity() * r;
        ridge = Some(r);
        if !(r > 0.0) || condition(&cov) > MAX_CONDITION {
            return Err(Error::SingularCovariance);
        }
    }
    let w = cov
        .lu()
        .solve(&(mu_pos - mu_neg))
        .ok_or(Error::SingularCovariance)?;
    if w.iter().all(|v| *v == 0.0) {
        return Err(Error::SingularCovariance);
    }
    let bias = -w.dot(&(mu_pos + mu_neg)) / 2.0;
    Ok(LdaModel {
        weights: [w[0], w[1], w[2]],
        bias,
        class_for_positive_side: pos_label,
        class_for_negative_side: neg_label,
        ridge,
    })
}

/// Rank on the side of the plane where `p` falls; the plane itself counts as
/// the positive side.
pub fn classify_rank(m: &LdaModel, p: &LdaPoint) -> u8 {
    if m.score(p) >= 0.0 {
        m.class_for_positive_side
    } else {
        m.class_for_negative_side
    }
}

/// 2x2 confusion counts, rows = actual, columns = predicted, ordered
/// `[negative class, positive class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub classes: [u8; 2],
    pub counts: [[usize; 2]; 2],
    pub misclassified: usize,
    pub total: usize,
}

impl Confusion {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return f64::NAN;
        }
        1.0 - self.misclassified as f64 / self.total as f64
    }
}

/// Points whose rank is neither model class are ignored.
pub fn confusion(m: &LdaModel, points: &[LdaPoint]) -> Confusion {
    let classes = [m.class_for_negative_side, m.class_for_positive_side];
    let idx = |r: u8| classes.iter().position(|c| *c == r);
    let mut counts = [[0usize; 2]; 2];
    for p in points {
        if let Some(a) = idx(p.rank) {
            let pr = idx(classify_rank(m, p)).expect("model predicts one of its classes");
            counts[a][pr] += 1;
        }
    }
    let total = counts.iter().flatten().sum();
    Confusion {
        classes,
        counts,
        misclassified: counts[0][1] + counts[1][0],
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn clouds(seed: u64) -> Vec<LdaPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 10.0).unwrap();
        let mut pts = Vec::new();
        for i in 0..200 {
            let (rank, centre) = if i % 2 == 0 { (4, 200.0) } else { (1, 800.0) };
            pts.push(LdaPoint {
                d_m: centre + n.sample(&mut rng),
                azimuth_deg: n.sample(&mut rng),
                elevation_deg: 20.0 + n.sample(&mut rng),
                rank,
            });
        }
        pts
    }

    #[test]
    fn direction_follows_separation_axis() {
        let m = fit_lda(&clouds(1)).unwrap();
        let w = Vector3::from(m.weights);
        let cos = w.dot(&Vector3::x()).abs() / w.norm();
        assert!(cos.acos().to_degrees() < 5.0);
        assert_eq!(confusion(&m, &clouds(2)).misclassified, 0);
        assert_eq!(m.ridge, None);
    }

    #[test]
    fn label_swap_negates_plane() {
        let pts = clouds(3);
        let swapped: Vec<LdaPoint> = pts
            .iter()
            .map(|p| LdaPoint { rank: if p.rank == 1 { 4 } else { 1 }, ..*p })
            .collect();
        let a = fit_lda(&pts).unwrap();
        let b = fit_lda(&swapped).unwrap();
        for k in 0..3 {
            assert_eq!(a.weights[k], -b.weights[k]);
        }
        assert_eq!(a.bias, -b.bias);
        for (p, q) in pts.iter().zip(&swapped) {
            assert_eq!(classify_rank(&a, p) == p.rank, classify_rank(&b, q) == q.rank);
        }
    }

    #[test]
    fn on_plane_goes_positive() {
        let m = LdaModel {
            weights: [1.0, 0.0, 0.0],
            bias: -100.0,
            class_for_positive_side: 4,
            class_for_negative_side: 1,
            ridge: None,
        };
        let p = LdaPoint { d_m: 100.0, azimuth_deg: 3.0, elevation_deg: -2.0, rank: 1 };
        assert_eq!(classify_rank(&m, &p), 4);
    }

    #[test]
    fn degenerate_feature_uses_ridge() {
        // Azimuth constant in both classes: pooled covariance has a zero direction.
        let pts: Vec<LdaPoint> = (0..40)
            .map(|i| LdaPoint {
                d_m: if i < 20 { 100.0 } else { 500.0 } + (i % 5) as f64,
                azimuth_deg: 0.0,
                elevation_deg: (i % 7) as f64,
                rank: if i < 20 { 4 } else { 1 },
            })
            .collect();
        let m = fit_lda(&pts).unwrap();
        assert!(m.ridge.is_some());
        assert_eq!(confusion(&m, &pts).misclassified, 0);
    }

    #[test]
    fn rejects_bad_class_structure() {
        let mut pts = clouds(4);
        pts.iter_mut().for_each(|p| p.rank = 1);
        assert!(fit_lda(&pts).is_err());
        let mut pts = clouds(4);
        pts[0].rank = 2;
        assert!(fit_lda(&pts).is_err());
        let mut pts: Vec<LdaPoint> = clouds(4).into_iter().filter(|p| p.rank == 1).collect();
        pts.push(LdaPoint { rank: 4, ..pts[0] });
        assert!(fit_lda(&pts).is_err());
    }

    #[test]
    fn feature_scaling_keeps_training_labels() {
        let pts = clouds(5);
        let m = fit_lda(&pts).unwrap();
        let scaled: Vec<LdaPoint> = pts
            .iter()
            .map(|p| LdaPoint {
                d_m: p.d_m * 3.5,
                azimuth_deg: p.azimuth_deg * 3.5,
                elevation_deg: p.elevation_deg * 3.5,
                rank: p.rank,
            })
            .collect();
        let ms = fit_lda(&scaled).unwrap();
        for (p, q) in pts.iter().zip(&scaled) {
            assert_eq!(classify_rank(&m, p), classify_rank(&ms, q));
        }
    }

    proptest! {
        #[test]
        fn positive_rescaling_is_invariant(k in 1e-3f64..1e3, d in 0.0f64..2000.0, az in -180.0f64..180.0, el in -90.0f64..90.0) {
            let m = LdaModel {
                weights: [0.0475, -0.1051, -0.0892],
                bias: -15.549,
                class_for_positive_side: 4,
                class_for_negative_side: 1,
                ridge: None,
            };
            let s = LdaModel { weights: m.weights.map(|w| w * k), bias: m.bias * k, ..m.clone() };
            let p = LdaPoint { d_m: d, azimuth_deg: az, elevation_deg: el, rank: 1 };
            prop_assert_eq!(classify_rank(&m, &p), classify_rank(&s, &p));
        }

        #[test]
        fn matches_scalar_sign(d in 0.0f64..2000.0, az in -180.0f64..180.0, el in -90.0f64..90.0) {
            let m = fit_lda(&clouds(6)).unwrap();
            let s = m.weights[0] * d + m.weights[1] * az + m.weights[2] * el + m.bias;
            let expect = if s >= 0.0 { 4 } else { 1 };
            prop_assert_eq!(classify_rank(&m, &LdaPoint { d_m: d, azimuth_deg: az, elevation_deg: el, rank: 0 }), expect);
        }
    }
}
