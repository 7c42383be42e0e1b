//! Independent oracles shared by the integration and acceptance tests.
//! Nothing in this file calls into the code paths it is used to check;
//! [`checks`] runs the library against them.
#![allow(dead_code)]

pub mod checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type V3 = [f64; 3];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(n: usize, seed: u64) -> Vec<V3> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            [
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            ]
        })
        .collect()
}

pub fn unit_direction(r: &mut ChaCha8Rng) -> V3 {
    loop {
        let v: V3 = [
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn d2(a: V3, b: V3) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Center of the smallest sphere through 2..=4 points, by least squares on
/// the bisector equations inside the affine hull (Cramer's rule).
pub fn oracle_circumsphere(pts: &[V3]) -> Option<(V3, f64)> {
    let p0 = pts[0];
    let e: Vec<V3> = pts[1..].iter().map(|p| sub(*p, p0)).collect();
    let k = e.len();
    let dot = |a: V3, b: V3| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    // solve G a = rhs with G_ij = e_i·e_j via explicit determinant formulas
    let g: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dot(e[i], e[j])).collect()).collect();
    let rhs: Vec<f64> = (0..k).map(|i| 0.5 * g[i][i]).collect();
    let det = |m: &Vec<Vec<f64>>| -> f64 {
        match m.len() {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            3 => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
            _ => unreachable!(),
        }
    };
    let dg = det(&g);
    let scale: f64 = (0..k).map(|i| g[i][i]).product();
    if dg.abs() <= 1e-13 * scale {
        return None;
    }
    let mut c = p0;
    for i in 0..k {
        let mut m = g.clone();
        for r in 0..k {
            m[r][i] = rhs[r];
        }
        let ai = det(&m) / dg;
        for t in 0..3 {
            c[t] += ai * e[i][t];
        }
    }
    let r2 = d2(c, p0);
    Some((c, r2))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn empty(pts: &[V3], c: V3, r2: f64, members: &[usize]) -> bool {
    pts.iter()
        .enumerate()
        .all(|(i, p)| members.contains(&i) || d2(*p, c) >= r2 * (1.0 - 1e-9))
}

/// Delaunay tetrahedra by exhaustive empty-circumsphere search.
pub fn brute_delaunay(pts: &[V3]) -> Vec<[usize; 4]> {
    combinations(pts.len(), 4)
        .into_iter()
        .filter_map(|q| {
            let sph = oracle_circumsphere(&[pts[q[0]], pts[q[1]], pts[q[2]], pts[q[3]]])?;
            empty(pts, sph.0, sph.1, &q).then(|| [q[0], q[1], q[2], q[3]])
        })
        .collect()
}

/// Squared circumradius in exact rational arithmetic (Cramer's rule on the
/// Gram system of the edge vectors), rounded once at the end.
pub fn exact_circumradius2(pts: &[V3]) -> f64 {
    use num::{BigRational, ToPrimitive, Zero};
    let q = |x: f64| BigRational::from_float(x).unwrap();
    let p0: Vec<BigRational> = pts[0].iter().map(|&x| q(x)).collect();
    let e: Vec<Vec<BigRational>> = pts[1..]
        .iter()
        .map(|p| (0..3).map(|c| q(p[c]) - &p0[c]).collect())
        .collect();
    let k = e.len();
    let dot = |a: &Vec<BigRational>, b: &Vec<BigRational>| -> BigRational {
        (0..3).fold(BigRational::zero(), |acc, c| acc + &a[c] * &b[c])
    };
    let g: Vec<Vec<BigRational>> = (0..k).map(|i| (0..k).map(|j| dot(&e[i], &e[j])).collect()).collect();
    let half = BigRational::new(1.into(), 2.into());
    let rhs: Vec<BigRational> = (0..k).map(|i| &g[i][i] * &half).collect();
    fn det(m: &[Vec<BigRational>]) -> BigRational {
        match m.len() {
            1 => m[0][0].clone(),
            2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
            _ => {
                &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
                    - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
                    + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
            }
        }
    }
    let dg = det(&g);
    let mut y = vec![BigRational::zero(); 3];
    for i in 0..k {
        let mut m = g.clone();
        for r in 0..k {
            m[r][i] = rhs[r].clone();
        }
        let ai = det(&m) / &dg;
        for c in 0..3 {
            y[c] += &ai * &e[i][c];
        }
    }
    dot(&y, &y).to_f64().unwrap()
}

/// Smallest empty ball through the vertices of `simplex`, by direct search
/// over the smallest circumballs of every superset of at most four points.
/// The winning ball's radius is recomputed exactly.
pub fn oracle_alpha(pts: &[V3], simplex: &[usize]) -> f64 {
    if simplex.len() == 1 {
        return 0.0;
    }
    let others: Vec<usize> = (0..pts.len()).filter(|i| !simplex.contains(i)).collect();
    let mut best = f64::INFINITY;
    let mut best_members: Vec<usize> = Vec::new();
    for extra in 0..=(4 - simplex.len()) {
        for pick in combinations(others.len(), extra) {
            let mut members: Vec<usize> = simplex.to_vec();
            members.extend(pick.iter().map(|&i| others[i]));
            let coords: Vec<V3> = members.iter().map(|&i| pts[i]).collect();
            if let Some((c, r2)) = oracle_circumsphere(&coords) {
                if r2.sqrt() < best && empty(pts, c, r2, &members) {
                    best = r2.sqrt();
                    best_members = members;
                }
            }
        }
    }
    let coords: Vec<V3> = best_members.iter().map(|&i| pts[i]).collect();
    exact_circumradius2(&coords).sqrt()
}

/// All faces of the brute-force Delaunay complex with their oracle alpha
/// values, sorted by (value, dim, vertices).
pub fn oracle_filtration(pts: &[V3]) -> Vec<(Vec<usize>, f64)> {
    let tets = brute_delaunay(pts);
    let mut simplices: Vec<Vec<usize>> = (0..pts.len()).map(|v| vec![v]).collect();
    for t in &tets {
        for k in 2..=4 {
            for c in combinations(4, k) {
                simplices.push(c.iter().map(|&i| t[i]).collect());
            }
        }
    }
    simplices.sort();
    simplices.dedup();
    let mut out: Vec<(Vec<usize>, f64)> = simplices
        .into_iter()
        .map(|s| {
            let a = oracle_alpha(pts, &s);
            (s, a)
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then(a.0.len().cmp(&b.0.len()))
            .then(a.0.cmp(&b.0))
    });
    out
}

/// Textbook left-to-right reduction on a dense Z/2 matrix, no clearing.
/// Returns (dim, birth, death) with death = ∞ for essential classes,
/// zero-length pairs removed, sorted.
pub fn naive_diagram(filt: &[(Vec<usize>, f64)]) -> Vec<(usize, f64, f64)> {
    let n = filt.len();
    let pos = |s: &Vec<usize>| filt.iter().position(|(t, _)| t == s).unwrap();
    let mut m = vec![vec![false; n]; n];
    for (j, (s, _)) in filt.iter().enumerate() {
        if s.len() > 1 {
            for skip in 0..s.len() {
                let f: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                m[j][pos(&f)] = true;
            }
        }
    }
    let low = |c: &Vec<bool>| c.iter().rposition(|&x| x);
    let mut lows: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        while let Some(l) = low(&m[j]) {
            let Some(k) = (0..j).find(|&k| lows[k] == Some(l)) else {
                break;
            };
            let other = m[k].clone();
            for (a, b) in m[j].iter_mut().zip(other) {
                *a ^= b;
            }
        }
        lows[j] = low(&m[j]);
    }
    let mut out = Vec::new();
    let mut paired = vec![false; n];
    for j in 0..n {
        if let Some(b) = lows[j] {
            paired[b] = true;
            paired[j] = true;
            let dim = filt[b].0.len() - 1;
            if filt[j].1 > filt[b].1 && dim <= 2 {
                out.push((dim, filt[b].1, filt[j].1));
            }
        }
    }
    for j in 0..n {
        if !paired[j] && filt[j].0.len() <= 3 {
            out.push((filt[j].0.len() - 1, filt[j].1, f64::INFINITY));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Central finite difference of `f` at 0.
pub fn central_diff(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Central finite-difference gradient of `f` at every coordinate of `pts`.
pub fn fd_gradient(f: impl Fn(&[V3]) -> f64, pts: &[V3], h: f64) -> Vec<V3> {
    let mut work = pts.to_vec();
    let mut out = vec![[0.0; 3]; pts.len()];
    for i in 0..pts.len() {
        for c in 0..3 {
            let x = work[i][c];
            work[i][c] = x + h;
            let fp = f(&work);
            work[i][c] = x - h;
            let fm = f(&work);
            work[i][c] = x;
            out[i][c] = (fp - fm) / (2.0 * h);
        }
    }
    out
}

/// ‖a − b‖ / max(‖b‖, floor) over flattened fields.
pub fn field_rel_err(a: &[V3], b: &[V3], floor: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        for c in 0..3 {
            num += (x[c] - y[c]).powi(2);
            den += y[c] * y[c];
        }
    }
    num.sqrt() / den.sqrt().max(floor)
}

/// Points on a jittered Fibonacci sphere: a smooth closed surface with
/// well-separated PCA eigenvalues.
pub fn noisy_sphere(n: usize, noise: f64, seed: u64) -> Vec<V3> {
    let mut r = rng(seed);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rad = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            [
                rad * t.cos() + noise * r.random_range(-1.0..1.0),
                y + noise * r.random_range(-1.0..1.0),
                rad * t.sin() + noise * r.random_range(-1.0..1.0),
            ]
        })
        .collect()
}
