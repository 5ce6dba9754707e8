//! PCA via a cyclic Jacobi eigensolver.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;
/// Entries smaller than this are not compared for polarity.
const POLARITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceDivisor {
    /// Divide by `N - 1`.
    #[default]
    Sample,
    /// Divide by `N`.
    Population,
}

/// Eigendecomposition of a symmetric matrix: eigenvalues in descending order
/// and matching unit eigenvectors (`vectors[i]` pairs with `values[i]`).
///
/// Uses cyclic Jacobi rotations until the off-diagonal Frobenius norm is at
/// most `1e-12` times the matrix norm.
pub fn eigen_symmetric(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let norm = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..MAX_SWEEPS {
        if off(&a) <= OFF_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenDecomposition {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub explained: Vec<f64>,
}

impl EigenDecomposition {
    /// Assembles a decomposition from eigenpairs, sorting by descending value
    /// and applying the sign convention.
    pub fn from_parts(
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        values: Vec<f64>,
        vectors: Vec<Vec<f64>>,
    ) -> Self {
        let mut pairs: Vec<(f64, Vec<f64>)> = values.into_iter().zip(vectors).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (values, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = pairs.into_iter().unzip();
        vectors.iter_mut().for_each(|v| fix_sign(v));
        let total: f64 = values.iter().sum();
        let explained = values
            .iter()
            .map(|&l| if total > 0.0 { l / total } else { 0.0 })
            .collect();
        EigenDecomposition {
            mean,
            covariance,
            values,
            vectors,
            explained,
        }
    }

    /// Decomposes a covariance matrix. The stored matrix is made exactly
    /// symmetric from its upper triangle.
    pub fn from_covariance(mean: Vec<f64>, mut covariance: Vec<Vec<f64>>) -> Self {
        let n = covariance.len();
        for i in 0..n {
            for j in 0..i {
                covariance[i][j] = covariance[j][i];
            }
        }
        let (values, vectors) = eigen_symmetric(&covariance);
        Self::from_parts(mean, covariance, values, vectors)
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.dims();
        let mut out = vec![vec![0.0; n]; n];
        for (l, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += l * v[i] * v[j];
                }
            }
        }
        out
    }

    /// CSV of percent variance explained per component.
    pub fn explained_csv(&self) -> String {
        let mut out = String::from("component,eigenvalue,explained_pct\n");
        for (i, (l, e)) in self.values.iter().zip(&self.explained).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, l, 100.0 * e);
        }
        out
    }
}

/// PCA with the default `N - 1` covariance divisor.
pub fn pca<'a, I>(vectors: I) -> Result<EigenDecomposition, AnalysisError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    pca_with(vectors, CovarianceDivisor::Sample)
}

pub fn pca_with<'a, I>(vectors: I, divisor: CovarianceDivisor) -> Result<EigenDecomposition, AnalysisError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let rows: Vec<&[f64]> = vectors.into_iter().collect();
    if rows.len() < 2 {
        return Err(AnalysisError::InsufficientData(rows.len()));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(AnalysisError::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in &rows {
        for (m, x) in mean.iter_mut().zip(*r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![vec![0.0; d]; d];
    for r in &rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = match divisor {
        CovarianceDivisor::Sample => n - 1.0,
        CovarianceDivisor::Population => n,
    };
    for row in cov.iter_mut() {
        row.iter_mut().for_each(|c| *c /= denom);
    }
    Ok(EigenDecomposition::from_covariance(mean, cov))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub rank: usize,
    /// `|a_i . b_i|`.
    pub cosine: f64,
    /// Component indices whose sign differs after aligning `b_i` to `a_i`.
    pub polarity_flips: Vec<usize>,
}

/// Rank-by-rank comparison of two decompositions plus the eigenvector
/// amplitude table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenComparison {
    pub ranks: Vec<RankComparison>,
    /// `amplitudes[i][j] = (a_i[j], b_i[j])`.
    pub amplitudes: Vec<Vec<(f64, f64)>>,
}

impl EigenComparison {
    /// Whitespace-separated columns: component index, then `a` and `b`
    /// amplitudes for each eigenvector rank.
    pub fn to_gnuplot(&self, label_a: &str, label_b: &str) -> String {
        let mut out = String::from("# component");
        for r in 1..=self.amplitudes.len() {
            let _ = write!(out, " {label_a}_v{r} {label_b}_v{r}");
        }
        out.push('\n');
        let dims = self.amplitudes.first().map_or(0, Vec::len);
        for j in 0..dims {
            let _ = write!(out, "{}", j + 1);
            for rank in &self.amplitudes {
                let _ = write!(out, " {} {}", rank[j].0, rank[j].1);
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,cosine,polarity_flips\n");
        for r in &self.ranks {
            let flips: Vec<String> = r.polarity_flips.iter().map(|j| (j + 1).to_string()).collect();
            let _ = writeln!(out, "{},{},{}", r.rank, r.cosine, flips.join(" "));
        }
        out
    }
}

pub fn compare_eigenvectors(
    a: &EigenDecomposition,
    b: &EigenDecomposition,
) -> Result<EigenComparison, AnalysisError> {
    if a.dims() != b.dims() || a.vectors.len() != b.vectors.len() {
        return Err(AnalysisError::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    let mut ranks = Vec::with_capacity(a.vectors.len());
    let mut amplitudes = Vec::with_capacity(a.vectors.len());
    for (i, (va, vb)) in a.vectors.iter().zip(&b.vectors).enumerate() {
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        let polarity_flips = va
            .iter()
            .zip(vb)
            .enumerate()
            .filter(|(_, (&x, &y))| x.abs() > POLARITY_EPS && y.abs() > POLARITY_EPS && x * sign * y < 0.0)
            .map(|(j, _)| j)
            .collect();
        ranks.push(RankComparison {
            rank: i + 1,
            cosine: dot.abs(),
            polarity_flips,
        });
        amplitudes.push(va.iter().copied().zip(vb.iter().copied()).collect());
    }
    Ok(EigenComparison { ranks, amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> Vec<Vec<f64>> {
        (0..d.len())
            .map(|i| (0..d.len()).map(|j| if i == j { d[i] } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn identity_covariance_explains_evenly() {
        let e = EigenDecomposition::from_covariance(vec![0.0; 9], diag(&[1.0; 9]));
        for (l, x) in e.values.iter().zip(&e.explained) {
            assert!((l - 1.0).abs() < 1e-15);
            assert!((x - 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_covariance_explained_fractions() {
        let mut d = vec![0.0; 9];
        d[0] = 1.0;
        d[3] = 4.0;
        let e = EigenDecomposition::from_covariance(vec![0.0; 9], diag(&d));
        assert!((e.explained[0] - 0.8).abs() < 1e-12);
        assert!((e.explained[1] - 0.2).abs() < 1e-12);
        assert!(e.explained[2..].iter().all(|x| x.abs() < 1e-12));
        // sign convention: the 4.0 eigenvector is +e_3
        assert_eq!(e.vectors[0][3], 1.0);
    }

    #[test]
    fn reconstructs_dense_matrix() {
        let b: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| ((i * 7 + j * 3) % 11) as f64 - 5.0).collect())
            .collect();
        // B B^T is PSD
        let m: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| (0..5).map(|k| b[i][k] * b[j][k]).sum()).collect())
            .collect();
        let e = EigenDecomposition::from_covariance(vec![0.0; 5], m.clone());
        let r = e.reconstruct();
        for i in 0..5 {
            for j in 0..5 {
                assert!((r[i][j] - m[i][j]).abs() < 1e-8);
            }
            assert!(e.values[i] >= -1e-9);
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pca_needs_two_vectors() {
        assert_eq!(
            pca([[1.0, 2.0].as_slice()]).unwrap_err(),
            AnalysisError::InsufficientData(1)
        );
    }

    #[test]
    fn pca_of_points_on_a_line() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let e = pca(pts.iter().map(Vec::as_slice)).unwrap();
        assert!((e.explained[0] - 1.0).abs() < 1e-12);
        let s = 1.0 / 5f64.sqrt();
        assert!((e.vectors[0][0] - s).abs() < 1e-12);
        assert!((e.vectors[0][1] - 2.0 * s).abs() < 1e-12);
        assert_eq!(e.mean, vec![4.5, 9.0]);
    }

    #[test]
    fn self_comparison_and_negation() {
        let m = vec![vec![2.0, 0.5, 0.1], vec![0.5, 1.0, 0.2], vec![0.1, 0.2, 0.3]];
        let a = EigenDecomposition::from_covariance(vec![0.0; 3], m);
        let cmp = compare_eigenvectors(&a, &a).unwrap();
        assert!(cmp.ranks.iter().all(|r| (r.cosine - 1.0).abs() < 1e-12 && r.polarity_flips.is_empty()));

        let mut negated = a.vectors.clone();
        negated[1].iter_mut().for_each(|x| *x = -*x);
        let b = EigenDecomposition::from_parts(a.mean.clone(), a.covariance.clone(), a.values.clone(), negated);
        assert_eq!(compare_eigenvectors(&a, &b).unwrap(), cmp);
    }

    #[test]
    fn comparison_dimension_mismatch() {
        let a = EigenDecomposition::from_covariance(vec![0.0; 2], diag(&[1.0, 2.0]));
        let b = EigenDecomposition::from_covariance(vec![0.0; 3], diag(&[1.0, 2.0, 3.0]));
        assert!(compare_eigenvectors(&a, &b).is_err());
    }
}
