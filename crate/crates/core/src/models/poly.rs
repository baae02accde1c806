use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{feature_matrix, DistanceTransform, FeatureVector, Observation};
use crate::error::{Error, Result};

/// Design matrices whose column-equilibrated condition number exceeds this
/// are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Degrees above this are fit on z-scored features.
const STANDARDIZE_ABOVE_DEGREE: u32 = 3;

/// All exponent triples `(i, j, k)` with `i + j + k <= degree`, in
/// lexicographic order.
pub fn expand_monomials(degree: u32) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for i in 0..=degree {
        for j in 0..=degree - i {
            for k in 0..=degree - i - j {
                out.push((i, j, k));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub i: u32,
    pub j: u32,
    pub k: u32,
    pub beta: f64,
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl FeatureScaling {
    fn fit(x: &[[f64; 3]]) -> Self {
        let n = x.len() as f64;
        let mut mean = [0.0; 3];
        let mut std = [0.0; 3];
        for f in 0..3 {
            mean[f] = x.iter().map(|r| r[f]).sum::<f64>() / n;
            let var = x.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / n;
            std[f] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        FeatureScaling { mean, std }
    }

    fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|f| (x[f] - self.mean[f]) / self.std[f])
    }
}

/// Multivariate polynomial in (distance feature, elevation, azimuth).
///
/// `terms` are the coefficients used for prediction; they live in z-scored
/// feature space when `scaling` is set. `raw_terms` always hold the same
/// polynomial expanded back onto the unscaled features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub degree: u32,
    pub distance_transform: DistanceTransform,
    pub scaling: Option<FeatureScaling>,
    pub terms: Vec<PolyTerm>,
    pub raw_terms: Vec<PolyTerm>,
    /// Condition number of the column-equilibrated design matrix.
    pub condition: f64,
}

fn powers(x: f64, degree: u32) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree as usize + 1);
    let mut acc = 1.0;
    for _ in 0..=degree {
        p.push(acc);
        acc *= x;
    }
    p
}

fn evaluate(terms: &[PolyTerm], degree: u32, x: [f64; 3]) -> f64 {
    let [pd, pe, pa] = [powers(x[0], degree), powers(x[1], degree), powers(x[2], degree)];
    terms
        .iter()
        .map(|t| t.beta * pd[t.i as usize] * pe[t.j as usize] * pa[t.k as usize])
        .sum()
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, m| acc * f64::from(n - m) / f64::from(m + 1))
}

/// Re-expresses a polynomial in z = (x - mean) / std as one in x.
fn destandardize(terms: &[PolyTerm], degree: u32, s: &FeatureScaling) -> Vec<PolyTerm> {
    let monomials = expand_monomials(degree);
    let index: HashMap<(u32, u32, u32), usize> =
        monomials.iter().enumerate().map(|(n, &m)| (m, n)).collect();
    // expansion[f][e][a]: coefficient of x_f^a in ((x_f - mean_f) / std_f)^e
    let expansion: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|f| {
            (0..=degree)
                .map(|e| {
                    (0..=e)
                        .map(|a| {
                            binomial(e, a) * (-s.mean[f]).powi((e - a) as i32)
                                / s.std[f].powi(e as i32)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut raw = vec![0.0; monomials.len()];
    for t in terms {
        for a in 0..=t.i {
            let ca = expansion[0][t.i as usize][a as usize];
            for b in 0..=t.j {
                let cb = expansion[1][t.j as usize][b as usize];
                for c in 0..=t.k {
                    let cc = expansion[2][t.k as usize][c as usize];
                    raw[index[&(a, b, c)]] += t.beta * ca * cb * cc;
                }
            }
        }
    }
    monomials
        .into_iter()
        .zip(raw)
        .map(|((i, j, k), beta)| PolyTerm { i, j, k, beta })
        .collect()
}

/// Least-squares polynomial fit through a Householder QR factorization of the
/// column-equilibrated design matrix.
pub fn fit_polynomial(
    data: &[Observation],
    degree: u32,
    distance_transform: DistanceTransform,
) -> Result<PolyModel> {
    let monomials = expand_monomials(degree);
    let p = monomials.len();
    let n = data.len();
    if n < p {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
        });
    }
    let (x, y) = feature_matrix(data, distance_transform)?;
    let scaling = (degree > STANDARDIZE_ABOVE_DEGREE).then(|| FeatureScaling::fit(&x));
    let z: Vec<[f64; 3]> = match &scaling {
        Some(s) => x.iter().map(|r| s.apply(*r)).collect(),
        None => x,
    };

    let mut design = DMatrix::<f64>::zeros(n, p);
    for (r, row) in z.iter().enumerate() {
        let [pd, pe, pa] = [
            powers(row[0], degree),
            powers(row[1], degree),
            powers(row[2], degree),
        ];
        for (c, &(i, j, k)) in monomials.iter().enumerate() {
            design[(r, c)] = pd[i as usize] * pe[j as usize] * pa[k as usize];
        }
    }
    let mut col_norms = Vec::with_capacity(p);
    for c in 0..p {
        let norm = design.column(c).norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        design.column_mut(c).unscale_mut(norm);
        col_norms.push(norm);
    }

    let qr = design.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let mut qty = DVector::from_vec(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let sol = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { condition })?;

    let terms: Vec<PolyTerm> = monomials
        .iter()
        .zip(sol.iter().zip(&col_norms))
        .map(|(&(i, j, k), (&b, &norm))| PolyTerm {
            i,
            j,
            k,
            beta: b / norm,
        })
        .collect();
    let raw_terms = match &scaling {
        Some(s) => destandardize(&terms, degree, s),
        None => terms.clone(),
    };
    Ok(PolyModel {
        degree,
        distance_transform,
        scaling,
        terms,
        raw_terms,
        condition,
    })
}

impl PolyModel {
    /// A model that predicts `beta0` everywhere.
    pub fn constant(beta0: f64, degree: u32, distance_transform: DistanceTransform) -> Self {
        let terms: Vec<PolyTerm> = expand_monomials(degree)
            .into_iter()
            .map(|(i, j, k)| PolyTerm {
                i,
                j,
                k,
                beta: if i + j + k == 0 { beta0 } else { 0.0 },
            })
            .collect();
        PolyModel {
            degree,
            distance_transform,
            scaling: None,
            raw_terms: terms.clone(),
            terms,
            condition: 1.0,
        }
    }

    pub fn intercept(&self) -> f64 {
        self.raw_terms
            .iter()
            .find(|t| t.i + t.j + t.k == 0)
            .map(|t| t.beta)
            .unwrap_or(0.0)
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let x = f.as_array();
        let z = match &self.scaling {
            Some(s) => s.apply(x),
            None => x,
        };
        evaluate(&self.terms, self.degree, z)
    }

    /// Evaluates the de-standardized coefficients directly.
    pub fn predict_raw(&self, f: &FeatureVector) -> f64 {
        evaluate(&self.raw_terms, self.degree, f.as_array())
    }
}

/// Predicted RSRP for an observation's geometry.
pub fn predict_polynomial(m: &PolyModel, o: &Observation) -> Result<f64> {
    let f = FeatureVector::from_observation(o, m.distance_transform)?;
    Ok(m.predict(&f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_count(n: u32) -> usize {
        let mut c = 0;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    if i + j + k <= n {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    fn naive_eval(terms: &[PolyTerm], x: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for t in terms {
            s += t.beta * x[0].powi(t.i as i32) * x[1].powi(t.j as i32) * x[2].powi(t.k as i32);
        }
        s
    }

    fn random_obs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Observation> {
        (0..n)
            .map(|_| Observation {
                d_m: rng.random_range(50.0..1500.0),
                elevation_deg: rng.random_range(-5.0..60.0),
                azimuth_deg: rng.random_range(-120.0..120.0),
                rsrp_dbm: 0.0,
            })
            .collect()
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(expand_monomials(0), vec![(0, 0, 0)]);
        assert_eq!(expand_monomials(2).len(), brute_count(2));
        assert_eq!(brute_count(2), 10);
        assert_eq!(expand_monomials(5).len(), 56);
        for n in 0..=9 {
            let m = expand_monomials(n);
            assert_eq!(m.len(), brute_count(n));
            assert!(m.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn planted_degree_two_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let planted: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mons = expand_monomials(2);
        let truth: Vec<PolyTerm> = mons
            .iter()
            .zip(&planted)
            .map(|(&(i, j, k), &beta)| PolyTerm { i, j, k, beta })
            .collect();
        let mut data = random_obs(&mut rng, 200);
        for o in &mut data {
            let x = [o.d_m.log10(), o.elevation_deg, o.azimuth_deg];
            o.rsrp_dbm = naive_eval(&truth, x);
        }
        let m = fit_polynomial(&data, 2, DistanceTransform::Log10).unwrap();
        assert!(m.scaling.is_none());
        for (t, want) in m.raw_terms.iter().zip(&planted) {
            assert!((t.beta - want).abs() < 1e-6, "{t:?} vs {want}");
        }
        for o in &data {
            assert!((predict_polynomial(&m, o).unwrap() - o.rsrp_dbm).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut data = random_obs(&mut rng, 100);
        data.iter_mut().for_each(|o| o.rsrp_dbm = -87.5);
        for degree in [1, 3, 5] {
            let m = fit_polynomial(&data, degree, DistanceTransform::Log10).unwrap();
            assert!((m.intercept() + 87.5).abs() < 1e-9);
            for t in m.terms.iter().filter(|t| t.i + t.j + t.k > 0) {
                assert!(t.beta.abs() < 1e-9, "{t:?}");
            }
        }
    }

    #[test]
    fn too_few_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = random_obs(&mut rng, 9);
        assert!(matches!(
            fit_polynomial(&data, 2, DistanceTransform::Linear),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn collinear_features_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = random_obs(&mut rng, 50);
        // Elevation equal to azimuth makes the theta and phi columns identical.
        data.iter_mut().for_each(|o| o.elevation_deg = o.azimuth_deg);
        assert!(matches!(
            fit_polynomial(&data, 1, DistanceTransform::Linear),
            Err(Error::RankDeficient { .. })
        ));
        data.iter_mut().for_each(|o| o.azimuth_deg = 0.0);
        assert!(fit_polynomial(&data, 1, DistanceTransform::Linear).is_err());
    }

    #[test]
    fn intercept_only_model() {
        let m = PolyModel::constant(-100.0, 4, DistanceTransform::Log10);
        let o = Observation {
            d_m: 321.0,
            elevation_deg: 7.0,
            azimuth_deg: -30.0,
            rsrp_dbm: 0.0,
        };
        assert_eq!(predict_polynomial(&m, &o).unwrap(), -100.0);
        assert!(predict_polynomial(&m, &Observation { d_m: 0.0, ..o }).is_err());
    }

    #[test]
    fn evaluator_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for degree in 0..=6 {
            let terms: Vec<PolyTerm> = expand_monomials(degree)
                .into_iter()
                .map(|(i, j, k)| PolyTerm {
                    i,
                    j,
                    k,
                    beta: rng.random_range(-1.0..1.0),
                })
                .collect();
            for _ in 0..20 {
                let x = [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ];
                let a = evaluate(&terms, degree, x);
                let b = naive_eval(&terms, x);
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn standardized_and_raw_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut data = random_obs(&mut rng, 400);
        for o in &mut data {
            let x = o.d_m.log10();
            o.rsrp_dbm = -40.0 - 20.0 * x + 0.01 * o.elevation_deg.powi(2) - 1e-3 * o.azimuth_deg.powi(2)
                + rng.random_range(-1.0..1.0);
        }
        let m = fit_polynomial(&data, 5, DistanceTransform::Log10).unwrap();
        assert!(m.scaling.is_some());
        assert_eq!(m.raw_terms.len(), 56);
        for o in data.iter().take(50) {
            let f = FeatureVector::from_observation(o, m.distance_transform).unwrap();
            let a = m.predict(&f);
            let b = m.predict_raw(&f);
            assert!((a - b).abs() < 1e-6 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn coefficient_count_all_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut data = random_obs(&mut rng, 600);
        for o in &mut data {
            o.rsrp_dbm = -80.0 - 0.02 * o.d_m.sqrt() + rng.random_range(-0.5..0.5);
        }
        for degree in 0..=9 {
            let m = fit_polynomial(&data, degree, DistanceTransform::Log10).unwrap();
            let want = brute_count(degree);
            assert_eq!(m.terms.len(), want);
            assert_eq!(m.raw_terms.len(), want);
            assert_eq!(m.terms.iter().filter(|t| t.i + t.j + t.k == 0).count(), 1);
            assert!(m.terms.iter().all(|t| t.i + t.j + t.k <= degree));
        }
    }
}
