//! Smallest circumscribed sphere of an edge, triangle or tetrahedron and the
//! gradient of its radius with respect to the vertices.
//!
//! With the circumcenter written in barycentric form x = Σ w_j p_j, implicit
//! differentiation of the center equations 2 e_i·(x − p_0) = |e_i|² gives
//! ∂(r²)/∂p_j = 2 w_j (p_j − x), hence ∂r/∂p_j = w_j (p_j − x) / r.

use super::dd::{add3, cross3, diff3, dot3, scale3, sub3, Dd, Dd3};
use crate::error::{Error, Result};
use crate::vec3::{dot, scale, sub, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circumsphere {
    pub center: Vec3,
    pub radius: f64,
    pub radius2: f64,
    /// Barycentric weights of the center (sum to one); first `len` entries valid.
    pub weights: [f64; 4],
    pub len: usize,
}

/// Smallest sphere through 2–4 affinely independent points.
pub fn circumsphere(pts: &[Vec3]) -> Result<Circumsphere> {
    let m = pts.len();
    if !(2..=4).contains(&m) {
        return Err(Error::invalid(format!("circumsphere needs 2..=4 points, got {m}")));
    }
    let k = m - 1;
    let p0 = pts[0];
    let e: Vec<Vec3> = pts[1..].iter().map(|p| sub(*p, p0)).collect();
    let mut gram = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = dot(e[i], e[j]);
        }
        rhs[i] = 0.5 * gram[i][i];
    }
    let a = solve_spd(&gram, &rhs, k).ok_or(Error::DegenerateSimplex)?;
    let (y, radius2) = center_offset(pts, &e, &a);
    let radius = radius2.sqrt();
    if !radius.is_finite() || radius == 0.0 {
        return Err(Error::DegenerateSimplex);
    }
    let mut weights = [0.0; 4];
    weights[0] = 1.0 - a[..k].iter().sum::<f64>();
    weights[1..=k].copy_from_slice(&a[..k]);
    Ok(Circumsphere {
        center: [p0[0] + y[0], p0[1] + y[1], p0[2] + y[2]],
        radius,
        radius2,
        weights,
        len: m,
    })
}

/// Circumsphere of a tetrahedron too flat for the Gram solve but not flat in
/// double-double arithmetic. Such hull slivers have very large radii.
pub(crate) fn sliver_circumsphere(pts: &[Vec3]) -> Result<Circumsphere> {
    if pts.len() != 4 {
        return Err(Error::DegenerateSimplex);
    }
    let p0 = pts[0];
    let a = diff3(pts[1], p0);
    let b = diff3(pts[2], p0);
    let c = diff3(pts[3], p0);
    let (bc, ca, ab) = (cross3(b, c), cross3(c, a), cross3(a, b));
    let det = dot3(a, bc);
    let den = det + det;
    if den.to_f64() == 0.0 {
        return Err(Error::DegenerateSimplex);
    }
    let num = add3(
        add3(scale3(bc, dot3(a, a)), scale3(ca, dot3(b, b))),
        scale3(ab, dot3(c, c)),
    );
    let radius2 = dot3(num, num).div(den * den).to_f64();
    let radius = radius2.sqrt();
    if !radius.is_finite() || radius == 0.0 {
        return Err(Error::DegenerateSimplex);
    }
    // y = num / den = Σ a_j e_j, solved by Cramer's rule
    let dd = den * det;
    let w = [bc, ca, ab].map(|v| dot3(num, v).div(dd).to_f64());
    let d = den.to_f64();
    let y = num.map(|x| x.to_f64() / d);
    Ok(Circumsphere {
        center: [p0[0] + y[0], p0[1] + y[1], p0[2] + y[2]],
        radius,
        radius2,
        weights: [1.0 - w[0] - w[1] - w[2], w[0], w[1], w[2]],
        len: 4,
    })
}

/// Circumcenter offset from the first vertex and the squared radius.
/// Triangles and tetrahedra use the cross-product closed forms evaluated in
/// double-double arithmetic, which stay accurate on slivers where the Gram
/// system is badly conditioned.
fn center_offset(pts: &[Vec3], e: &[Vec3], a: &[f64; 3]) -> (Vec3, f64) {
    let to_f = |v: Dd3| [v[0].to_f64(), v[1].to_f64(), v[2].to_f64()];
    match e.len() {
        2 => {
            let a = diff3(pts[1], pts[0]);
            let b = diff3(pts[2], pts[0]);
            let n = cross3(a, b);
            let num = cross3(sub3(scale3(b, dot3(a, a)), scale3(a, dot3(b, b))), n);
            let den = dot3(n, n) + dot3(n, n);
            let r2 = dot3(num, num).div(den * den);
            let y = to_f(num);
            let d = den.to_f64();
            ([y[0] / d, y[1] / d, y[2] / d], r2.to_f64())
        }
        3 => {
            let a = diff3(pts[1], pts[0]);
            let b = diff3(pts[2], pts[0]);
            let c = diff3(pts[3], pts[0]);
            let det = dot3(a, cross3(b, c));
            let num = add3(
                add3(scale3(cross3(b, c), dot3(a, a)), scale3(cross3(c, a), dot3(b, b))),
                scale3(cross3(a, b), dot3(c, c)),
            );
            let den = det + det;
            let r2 = dot3(num, num).div(den * den);
            let y = to_f(num);
            let d = den.to_f64();
            ([y[0] / d, y[1] / d, y[2] / d], r2.to_f64())
        }
        _ => {
            let y = scale(e[0], a[0]);
            let d = diff3(pts[1], pts[0]);
            let r2 = dot3(d, d).div(Dd::new(4.0));
            (y, r2.to_f64())
        }
    }
}

/// Gaussian elimination with partial pivoting on the leading k×k block.
/// Returns `None` when the system is singular relative to its scale.
fn solve_spd(g: &[[f64; 3]; 3], rhs: &[f64; 3], k: usize) -> Option<[f64; 3]> {
    let mut a = *g;
    let mut b = *rhs;
    let scale = (0..k).map(|i| g[i][i]).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..k).rev() {
        let mut s = b[r];
        for c in (r + 1)..k {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}

/// Radius and ∂r/∂p_j for each vertex.
pub fn circumradius_grad(pts: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    let cs = match circumsphere(pts) {
        Err(_) if pts.len() == 4 => sliver_circumsphere(pts)?,
        r => r?,
    };
    let grads = pts
        .iter()
        .zip(&cs.weights)
        .map(|(p, &w)| {
            let d = sub(*p, cs.center);
            let s = w / cs.radius;
            [s * d[0], s * d[1], s * d[2]]
        })
        .collect();
    Ok((cs.radius, grads))
}
