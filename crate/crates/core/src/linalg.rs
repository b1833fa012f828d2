//! Small dense linear-algebra routines on 2-D point sets: classical MDS and
//! similarity Procrustes.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

#[inline]
pub fn sq_dist(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

pub fn centroid(z: &[Point]) -> Point {
    let n = z.len().max(1) as f64;
    let (sx, sy) = z.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Classical (Torgerson) scaling of a distance matrix into two dimensions.
///
/// Each output column is flipped so its largest-magnitude entry is positive
/// (first index wins ties). Non-positive eigenvalues give a zero column.
pub fn classical_mds(d: &DMatrix<f64>) -> Vec<Point> {
    let n = d.nrows();
    assert_eq!(n, d.ncols(), "distance matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    let mut b = d.map(|x| -0.5 * x * x);
    let row_means: Vec<f64> = (0..n).map(|i| b.row(i).mean()).collect();
    let col_means: Vec<f64> = (0..n).map(|j| b.column(j).mean()).collect();
    let grand = b.mean();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += grand - row_means[i] - col_means[j];
        }
    }
    // exact symmetry keeps the eigensolver deterministic
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let mut out = vec![[0.0; 2]; n];
    for (dim, &idx) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda <= 1e-12 * eig.eigenvalues.amax().max(1.0) {
            continue;
        }
        let scale = lambda.sqrt();
        let col = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[i][dim] = sign * scale * col[i];
        }
    }
    out
}

/// Similarity map acting on row vectors: `x -> scale * x * rotation + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub rotation: [[f64; 2]; 2],
    pub scale: f64,
    pub translation: Point,
}

impl Similarity {
    pub fn identity() -> Self {
        Self { rotation: [[1.0, 0.0], [0.0, 1.0]], scale: 1.0, translation: [0.0, 0.0] }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        let r = &self.rotation;
        [
            self.scale * (p[0] * r[0][0] + p[1] * r[1][0]) + self.translation[0],
            self.scale * (p[0] * r[0][1] + p[1] * r[1][1]) + self.translation[1],
        ]
    }

    pub fn apply_all(&self, z: &[Point]) -> Vec<Point> {
        z.iter().map(|&p| self.apply(p)).collect()
    }

    /// True when the orthogonal part flips orientation.
    pub fn is_reflection(&self) -> bool {
        let r = &self.rotation;
        r[0][0] * r[1][1] - r[0][1] * r[1][0] < 0.0
    }
}

/// Result of fitting a similarity map of one configuration onto another.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcrustesFit {
    pub transform: Similarity,
    /// Frobenius norm of the aligned configuration minus the reference.
    pub residual: f64,
    /// False when the source configuration has no spread and the identity was used.
    pub degenerate: bool,
}

fn cross_product(x: &[Point], cx: Point, y: &[Point], cy: Point) -> (Matrix2<f64>, f64, f64) {
    let mut m = Matrix2::zeros();
    let mut ssx = 0.0;
    let mut ssy = 0.0;
    for (p, q) in x.iter().zip(y) {
        let a = Vector2::new(p[0] - cx[0], p[1] - cx[1]);
        let b = Vector2::new(q[0] - cy[0], q[1] - cy[1]);
        m += a * b.transpose();
        ssx += a.norm_squared();
        ssy += b.norm_squared();
    }
    (m, ssx, ssy)
}

/// Least-squares translation, rotation or reflection, and isotropic scale taking
/// `x` onto `reference`.
pub fn procrustes_fit(x: &[Point], reference: &[Point]) -> ProcrustesFit {
    assert_eq!(x.len(), reference.len(), "procrustes inputs must have equal length");
    let cx = centroid(x);
    let cy = centroid(reference);
    let (m, ssx, _) = cross_product(x, cx, reference, cy);
    if ssx <= 1e-300 || x.is_empty() {
        log::warn!("procrustes: source configuration has no spread, using the identity");
        let t = Similarity::identity();
        return ProcrustesFit { residual: residual(&t, x, reference), transform: t, degenerate: true };
    }
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let r = u * vt;
    let scale = svd.singular_values.sum() / ssx;
    let rc = Vector2::new(cx[0], cx[1]).transpose() * r * scale;
    let transform = Similarity {
        rotation: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
        scale,
        translation: [cy[0] - rc[0], cy[1] - rc[1]],
    };
    ProcrustesFit { residual: residual(&transform, x, reference), transform, degenerate: false }
}

fn residual(t: &Similarity, x: &[Point], y: &[Point]) -> f64 {
    x.iter().zip(y).map(|(&p, &q)| sq_dist(t.apply(p), q)).sum::<f64>().sqrt()
}

/// Symmetric Procrustes correlation: both configurations are centred and scaled
/// to unit sum of squares, and the statistic is the sum of singular values of
/// their cross-product. Degenerate input gives 0 with a warning.
pub fn procrustes_correlation(x: &[Point], y: &[Point]) -> f64 {
    assert_eq!(x.len(), y.len(), "procrustes inputs must have equal length");
    let (m, ssx, ssy) = cross_product(x, centroid(x), y, centroid(y));
    if ssx <= 1e-300 || ssy <= 1e-300 {
        log::warn!("procrustes correlation: degenerate configuration");
        return 0.0;
    }
    let sv = m.singular_values();
    (sv.sum() / (ssx * ssy).sqrt()).clamp(0.0, 1.0)
}
