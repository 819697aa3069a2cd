//! Court maps: per-cluster mean dyad-distance matrices and their classical
//! multidimensional scaling embeddings.
//!
//! Averaging each dyad distance over the frames of one cluster gives a 5x5
//! symmetric matrix describing the cluster's typical shape. Classical
//! (Torgerson) MDS double-centers the squared matrix, eigendecomposes it
//! with a cyclic Jacobi sweep (the matrix is only 5x5), and keeps the two
//! leading non-negative eigenpairs as 2-D coordinates. The `strain_share`
//! is the fraction of positive eigenvalue mass those two dimensions retain
//! — 1.0 means the five mean positions were effectively planar already.
//!
//! Embeddings are deterministic: eigenpairs sorted by descending
//! eigenvalue, and each axis sign-canonicalised so its largest-magnitude
//! coordinate is positive. Maps of different clusters therefore share no
//! common orientation; [`procrustes_align`] can rotate one onto a reference
//! when visual comparison matters (the pipeline leaves it off by default).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::segment::{DyadVector, DYAD_PAIRS};

/// Players per lineup; matrices here are `N x N`.
pub const N: usize = 5;

/// Symmetric 5x5 matrix of mean dyad distances for one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanDistanceMatrix {
    pub cluster: usize,
    pub frames: usize,
    pub matrix: [[f64; N]; N],
}

/// 2-D classical MDS embedding of a mean distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MdsEmbedding {
    pub cluster: usize,
    /// One `(x, y)` per lineup slot, centred on the origin.
    pub coords: [[f64; 2]; N],
    /// Two leading eigenvalues of the centred matrix, clamped at zero.
    pub eigenvalues: [f64; 2],
    /// Fraction of positive eigenvalue mass retained by the two axes.
    pub strain_share: f64,
}

fn average_matrix(
    features: &[DyadVector],
    mut keep: impl FnMut(usize) -> bool,
) -> Option<([[f64; N]; N], usize)> {
    let mut sums = [0.0f64; 10];
    let mut count = 0usize;
    for (idx, f) in features.iter().enumerate() {
        if !keep(idx) {
            continue;
        }
        for d in 0..10 {
            sums[d] += f.distances[d];
        }
        count += 1;
    }
    if count == 0 {
        return None;
    }
    let mut matrix = [[0.0; N]; N];
    for (d, &(i, j)) in DYAD_PAIRS.iter().enumerate() {
        let mean = sums[d] / count as f64;
        matrix[i][j] = mean;
        matrix[j][i] = mean;
    }
    Some((matrix, count))
}

/// Mean dyad-distance matrix over the frames assigned to `cluster`.
/// `assignments` must align one-to-one with `features`.
pub fn mean_distance_matrix(
    features: &[DyadVector],
    assignments: &[usize],
    cluster: usize,
) -> Result<MeanDistanceMatrix> {
    if features.len() != assignments.len() {
        return Err(CoreError::Misaligned(format!(
            "{} feature frames vs {} assignments",
            features.len(),
            assignments.len()
        )));
    }
    let (matrix, frames) = average_matrix(features, |idx| assignments[idx] == cluster)
        .ok_or_else(|| {
            CoreError::InvalidArgument(format!("cluster {cluster} has no frames"))
        })?;
    Ok(MeanDistanceMatrix {
        cluster,
        frames,
        matrix,
    })
}

/// Mean dyad-distance matrix over all frames: the whole-stint baseline the
/// per-cluster profiles are compared against.
pub fn stint_average_matrix(features: &[DyadVector]) -> Result<[[f64; N]; N]> {
    average_matrix(features, |_| true)
        .map(|(m, _)| m)
        .ok_or_else(|| CoreError::InvalidArgument("no feature frames".into()))
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted.
fn jacobi_eigen(mut a: [[f64; N]; N]) -> ([f64; N], [[f64; N]; N]) {
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|i| ((i + 1)..N).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= scale * 1e-14 {
            break;
        }
        for p in 0..N - 1 {
            for q in (p + 1)..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a[p][p];
                let aqq = a[q][q];
                let apq = a[p][q];
                a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for i in 0..N {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[p][i] = a[i][p];
                    a[i][q] = s * aip + c * aiq;
                    a[q][i] = a[i][q];
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut eigenvalues = [0.0; N];
    for i in 0..N {
        eigenvalues[i] = a[i][i];
    }
    (eigenvalues, v)
}

fn validate_distance_matrix(matrix: &[[f64; N]; N]) -> Result<()> {
    for i in 0..N {
        for j in 0..N {
            let d = matrix[i][j];
            if !d.is_finite() || d < 0.0 {
                return Err(CoreError::InvalidArgument(format!(
                    "distance matrix entry ({i}, {j}) = {d} is invalid"
                )));
            }
            if (d - matrix[j][i]).abs() > 1e-9 {
                return Err(CoreError::InvalidArgument(format!(
                    "distance matrix is asymmetric at ({i}, {j}): {d} vs {}",
                    matrix[j][i]
                )));
            }
        }
        if matrix[i][i].abs() > 1e-9 {
            return Err(CoreError::InvalidArgument(format!(
                "distance matrix diagonal ({i}, {i}) = {} is not zero",
                matrix[i][i]
            )));
        }
    }
    Ok(())
}

/// Classical MDS of a 5x5 distance matrix into two dimensions.
pub fn classical_mds(matrix: &[[f64; N]; N], cluster: usize) -> Result<MdsEmbedding> {
    validate_distance_matrix(matrix)?;

    // Double-center the squared distances: B = -1/2 J D^2 J.
    let mut sq = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            sq[i][j] = matrix[i][j] * matrix[i][j];
        }
    }
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / N as f64).collect();
    let grand_mean: f64 = row_mean.iter().sum::<f64>() / N as f64;
    let mut b = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            // Column means equal row means: sq is symmetric.
            b[i][j] = -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand_mean);
        }
    }

    let (eigenvalues, vectors) = jacobi_eigen(b);
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));

    let positive_mass: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let lead = [
        eigenvalues[order[0]].max(0.0),
        eigenvalues[order[1]].max(0.0),
    ];
    let strain_share = if positive_mass > 0.0 {
        (lead[0] + lead[1]) / positive_mass
    } else {
        // A zero matrix embeds perfectly (all points at the origin).
        1.0
    };

    let mut coords = [[0.0; 2]; N];
    for axis in 0..2 {
        let col = order[axis];
        let scale = lead[axis].sqrt();
        for i in 0..N {
            coords[i][axis] = vectors[i][col] * scale;
        }
        // Canonical sign: the largest-magnitude coordinate on each axis is
        // positive (ties resolved by the lowest point index).
        let mut top = 0;
        for i in 1..N {
            if coords[i][axis].abs() > coords[top][axis].abs() {
                top = i;
            }
        }
        if coords[top][axis] < 0.0 {
            for row in coords.iter_mut() {
                row[axis] = -row[axis];
            }
        }
    }
    Ok(MdsEmbedding {
        cluster,
        coords,
        eigenvalues: lead,
        strain_share,
    })
}

/// Rigidly align `target` onto `reference`: translate centroids together,
/// then apply the orthogonal 2-D transform (rotation or reflection) that
/// minimises the summed squared distances. No scaling.
pub fn procrustes_align(reference: &[[f64; 2]; N], target: &[[f64; 2]; N]) -> [[f64; 2]; N] {
    let centroid = |pts: &[[f64; 2]; N]| {
        let mut c = [0.0; 2];
        for p in pts {
            c[0] += p[0];
            c[1] += p[1];
        }
        [c[0] / N as f64, c[1] / N as f64]
    };
    let rc = centroid(reference);
    let tc = centroid(target);

    // Cross-covariance M = sum (ref - rc)(tgt - tc)^T.
    let mut m = [[0.0; 2]; 2];
    for (r, t) in reference.iter().zip(target.iter()) {
        let rv = [r[0] - rc[0], r[1] - rc[1]];
        let tv = [t[0] - tc[0], t[1] - tc[1]];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += rv[i] * tv[j];
            }
        }
    }
    // Best rotation and best reflection each have a closed 2-D form; keep
    // whichever explains more covariance.
    let rot_gain = (m[0][0] + m[1][1]).hypot(m[1][0] - m[0][1]);
    let refl_gain = (m[0][0] - m[1][1]).hypot(m[1][0] + m[0][1]);
    let apply = |mat: [[f64; 2]; 2]| {
        let mut out = [[0.0; 2]; N];
        for (o, t) in out.iter_mut().zip(target.iter()) {
            let tv = [t[0] - tc[0], t[1] - tc[1]];
            o[0] = mat[0][0] * tv[0] + mat[0][1] * tv[1] + rc[0];
            o[1] = mat[1][0] * tv[0] + mat[1][1] * tv[1] + rc[1];
        }
        out
    };
    if rot_gain >= refl_gain {
        let theta = (m[1][0] - m[0][1]).atan2(m[0][0] + m[1][1]);
        let (s, c) = theta.sin_cos();
        apply([[c, -s], [s, c]])
    } else {
        let theta = (m[1][0] + m[0][1]).atan2(m[0][0] - m[1][1]);
        let (s, c) = theta.sin_cos();
        apply([[c, s], [s, -c]])
    }
}

/// Serialized MDS artifact for one stint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdsFile {
    /// Lineup players in slot order, labelling matrix rows and embedding
    /// points.
    pub players: Vec<String>,
    /// Mean distance matrix over the whole stint.
    pub stint_average: Vec<Vec<f64>>,
    pub clusters: Vec<MdsEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdsEntry {
    pub cluster: usize,
    pub frames: usize,
    pub matrix: Vec<Vec<f64>>,
    pub coords: Vec<[f64; 2]>,
    pub eigenvalues: [f64; 2],
    pub strain_share: f64,
}

/// Convert a fixed 5x5 matrix to the serialized row form.
pub fn matrix_rows(m: &[[f64; N]; N]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// Parse a serialized 5x5 matrix.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<[[f64; N]; N]> {
    if rows.len() != N || rows.iter().any(|r| r.len() != N) {
        return Err(CoreError::BadStream {
            stream: "mds",
            message: format!("expected a {N}x{N} matrix"),
        });
    }
    let mut m = [[0.0; N]; N];
    for (i, row) in rows.iter().enumerate() {
        m[i].copy_from_slice(row);
    }
    Ok(m)
}
