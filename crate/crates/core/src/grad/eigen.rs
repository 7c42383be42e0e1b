//! Symmetric 3×3 eigen-decomposition and its first-order perturbation theory.

use crate::vec3::{dot, Vec3};

pub type Mat3 = [[f64; 3]; 3];

/// Eigenvector derivatives are refused below this eigengap.
pub const EIGENGAP_THRESHOLD: f64 = 1e-8;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub values: [f64; 3],
    pub vectors: [Vec3; 3],
}

/// Eigengap between the requested eigenpair and another one was too small
/// for a first-order eigenvector derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapTooSmall {
    pub gap: f64,
}

/// Which eigenpairs a caller intends to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSelection {
    Smallest,
    All,
}

/// Cyclic Jacobi rotations until the off-diagonal part vanishes.
pub fn sym_eigen(c: &Mat3) -> SymEigen {
    let mut a = *c;
    // symmetrize; callers hand us covariances that are symmetric up to rounding
    for i in 0..3 {
        for j in (i + 1)..3 {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off == 0.0 || off <= 1e-36 * diag {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let cs = 1.0 / (t * t + 1.0).sqrt();
            let sn = t * cs;
            // A <- Jᵀ A J with J the (p, q) Givens rotation
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = cs * akp - sn * akq;
                a[k][q] = sn * akp + cs * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = cs * apk - sn * aqk;
                a[q][k] = sn * apk + cs * aqk;
            }
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = cs * vp - sn * vq;
                row[q] = sn * vp + cs * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]).then(i.cmp(&j)));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &idx) in order.iter().enumerate() {
        values[slot] = a[idx][idx];
        let col = [v[0][idx], v[1][idx], v[2][idx]];
        let n = dot(col, col).sqrt();
        vectors[slot] = [col[0] / n, col[1] / n, col[2] / n];
    }
    SymEigen { values, vectors }
}

impl SymEigen {
    /// dλ_j = v_jᵀ dC v_j.
    pub fn value_derivative(&self, j: usize, dc: &Mat3) -> f64 {
        quad(self.vectors[j], dc, self.vectors[j])
    }

    /// First-order eigenvector derivative Σ_{m≠j} (v_mᵀ dC v_j)/(λ_j − λ_m) v_m.
    pub fn vector_derivative(&self, j: usize, dc: &Mat3) -> Result<Vec3, GapTooSmall> {
        self.check_gap(j)?;
        let mut out = [0.0; 3];
        for m in 0..3 {
            if m == j {
                continue;
            }
            let coef = quad(self.vectors[m], dc, self.vectors[j]) / (self.values[j] - self.values[m]);
            for (o, vm) in out.iter_mut().zip(self.vectors[m]) {
                *o += coef * vm;
            }
        }
        Ok(out)
    }

    pub fn check_gap(&self, j: usize) -> Result<(), GapTooSmall> {
        for m in 0..3 {
            if m != j {
                let gap = (self.values[j] - self.values[m]).abs();
                if gap < EIGENGAP_THRESHOLD {
                    return Err(GapTooSmall { gap });
                }
            }
        }
        Ok(())
    }

    /// Gradient of λ_j with respect to the (symmetric) matrix entries: v_j v_jᵀ.
    pub fn value_grad(&self, j: usize) -> Mat3 {
        outer(self.vectors[j], self.vectors[j])
    }

    /// Pulls an upstream gradient on eigenvector `j` back to a symmetric
    /// matrix gradient `G` such that ⟨upstream, dv_j⟩ = ⟨G, dC⟩ for symmetric dC.
    pub fn vector_vjp(&self, j: usize, upstream: Vec3) -> Result<Mat3, GapTooSmall> {
        self.check_gap(j)?;
        let mut g = [[0.0; 3]; 3];
        for m in 0..3 {
            if m == j {
                continue;
            }
            let coef = dot(upstream, self.vectors[m]) / (self.values[j] - self.values[m]);
            let o = outer(self.vectors[m], self.vectors[j]);
            for r in 0..3 {
                for c in 0..3 {
                    g[r][c] += coef * o[r][c];
                }
            }
        }
        Ok(symmetrize(&g))
    }
}

/// Eigen-decomposition bundled with the selection the caller wants to
/// differentiate; vector derivatives are pre-validated against the gap guard.
pub fn eigen_grads(c: &Mat3, which: EigenSelection) -> Result<SymEigen, GapTooSmall> {
    let eig = sym_eigen(c);
    match which {
        EigenSelection::Smallest => eig.check_gap(0)?,
        EigenSelection::All => {
            for j in 0..3 {
                eig.check_gap(j)?;
            }
        }
    }
    Ok(eig)
}

pub fn quad(a: Vec3, m: &Mat3, b: Vec3) -> f64 {
    let mut s = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            s += a[r] * m[r][c] * b[c];
        }
    }
    s
}

pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = a[r] * b[c];
        }
    }
    m
}

pub fn symmetrize(m: &Mat3) -> Mat3 {
    let mut s = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            s[r][c] = 0.5 * (m[r][c] + m[c][r]);
        }
    }
    s
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}
