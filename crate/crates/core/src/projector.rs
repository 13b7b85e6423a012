//! Two-component PCA projection of acoustic embeddings.
//!
//! Acoustic transition distance D is measured between projected points,
//! never in the raw embedding space. The covariance eigenproblem is solved
//! with cyclic Jacobi rotations, which is exact to rounding and fully
//! deterministic for the small dimensions involved (64 by default).

use thiserror::Error;

use crate::store::Corpus;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectorError {
    #[error("need at least 3 embeddings to fit, got {found}")]
    TooFewPoints { found: usize },
    #[error("embedding dimension must be at least 2, got {found}")]
    DimensionTooSmall { found: usize },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embeddings have zero variance")]
    ZeroVariance,
}

/// Whether [`Projector::distance`] divides by the projected corpus diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Normalized,
    Raw,
}

impl Scale {
    pub fn from_normalize(normalize: bool) -> Self {
        if normalize {
            Scale::Normalized
        } else {
            Scale::Raw
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    mean: Vec<f64>,
    components: [Vec<f64>; 2],
    explained_variance: [f64; 2],
    diameter: f64,
}

impl Projector {
    /// Fits on the acoustic embeddings of `corpus`.
    pub fn fit(corpus: &Corpus) -> Result<Self, ProjectorError> {
        let rows: Vec<&[f64]> = corpus.records().iter().map(|r| r.acoustic.as_slice()).collect();
        Self::fit_rows(&rows)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn fit_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ProjectorError> {
        let n = rows.len();
        if n < 3 {
            return Err(ProjectorError::TooFewPoints { found: n });
        }
        let d = rows[0].as_ref().len();
        if d < 2 {
            return Err(ProjectorError::DimensionTooSmall { found: d });
        }
        for r in rows {
            if r.as_ref().len() != d {
                return Err(ProjectorError::DimensionMismatch {
                    expected: d,
                    found: r.as_ref().len(),
                });
            }
        }

        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.as_ref()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        let mut cov = vec![vec![0.0; d]; d];
        let mut centered = vec![0.0; d];
        for r in rows {
            for ((c, x), m) in centered.iter_mut().zip(r.as_ref()).zip(&mean) {
                *c = x - m;
            }
            for i in 0..d {
                let ci = centered[i];
                for j in i..d {
                    cov[i][j] += ci * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..d {
            for j in i..d {
                cov[i][j] /= denom;
                cov[j][i] = cov[i][j];
            }
        }

        let (values, vectors) = symmetric_eigen(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

        let variance = [values[order[0]].max(0.0), values[order[1]].max(0.0)];
        if variance[0] == 0.0 {
            return Err(ProjectorError::ZeroVariance);
        }
        let column = |k: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..d).map(|i| vectors[i][k]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            orient(&mut v);
            v
        };
        let components = [column(order[0]), column(order[1])];

        let mut p = Projector {
            mean,
            components,
            explained_variance: variance,
            diameter: 0.0,
        };
        let points: Vec<[f64; 2]> = rows.iter().map(|r| p.project_unchecked(r.as_ref())).collect();
        p.diameter = diameter(&points);
        Ok(p)
    }

    /// Reassembles a projector from persisted parts.
    pub fn from_parts(
        mean: Vec<f64>,
        components: [Vec<f64>; 2],
        explained_variance: [f64; 2],
        diameter: f64,
    ) -> Self {
        Projector {
            mean,
            components,
            explained_variance,
            diameter,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>; 2] {
        &self.components
    }

    pub fn explained_variance(&self) -> [f64; 2] {
        self.explained_variance
    }

    /// Largest projected distance between two fitted embeddings.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, x: &[f64]) -> Result<[f64; 2], ProjectorError> {
        if x.len() != self.dim() {
            return Err(ProjectorError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.project_unchecked(x))
    }

    fn project_unchecked(&self, x: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = x
                .iter()
                .zip(&self.mean)
                .zip(c)
                .map(|((xi, mi), ci)| (xi - mi) * ci)
                .sum();
        }
        out
    }

    /// Euclidean distance between the projections of `a` and `b`.
    pub fn distance(&self, a: &[f64], b: &[f64], scale: Scale) -> Result<f64, ProjectorError> {
        Ok(self.point_distance(self.project(a)?, self.project(b)?, scale))
    }

    /// Same as [`Projector::distance`] on already-projected points.
    pub fn point_distance(&self, p: [f64; 2], q: [f64; 2], scale: Scale) -> f64 {
        let raw = (p[0] - q[0]).hypot(p[1] - q[1]);
        match scale {
            Scale::Raw => raw,
            Scale::Normalized if self.diameter > 0.0 => raw / self.diameter,
            Scale::Normalized => raw,
        }
    }
}

/// Makes the largest-magnitude coordinate positive (first one on ties).
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn diameter(points: &[[f64; 2]]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    best
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and the eigenvector matrix whose column
/// `k` pairs with eigenvalue `k`.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frob: f64 = a.iter().flatten().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off <= frob * f64::EPSILON * f64::EPSILON * 1e-2 {
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
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    (values, v)
}
