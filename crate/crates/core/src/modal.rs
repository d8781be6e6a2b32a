//! Per-mode 3x3 blocks of the generator.
//!
//! When displacement and temperature share an eigenbasis the generator splits
//! into independent blocks
//!
//! ```text
//! [    0      1       0      ]
//! [ -lam_u    0     -alpha   ]
//! [    0    -beta  -lam_theta ]
//! ```
//!
//! acting on one mode's `(u, v, theta)` coefficients. The Euclidean form
//! conjugates by `diag(sqrt(lam_u), 1, 1)` so the energy norm becomes the
//! 2-norm.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

pub type C3 = [[C; 3]; 3];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalBlock {
    pub lambda_u: f64,
    pub lambda_theta: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ModalBlock {
    /// Block of the symmetric system `u_tt + A u + g theta = 0`, `theta_t + A theta - g u_t = 0`.
    pub fn symmetric(lambda: f64, gamma: f64) -> Self {
        ModalBlock { lambda_u: lambda, lambda_theta: lambda, alpha: gamma, beta: -gamma }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [0.0, 1.0, 0.0],
            [-self.lambda_u, 0.0, -self.alpha],
            [0.0, -self.beta, -self.lambda_theta],
        ]
    }

    pub fn euclidean(&self) -> [[f64; 3]; 3] {
        let w = self.lambda_u.sqrt();
        [
            [0.0, w, 0.0],
            [-w, 0.0, -self.alpha],
            [0.0, -self.beta, -self.lambda_theta],
        ]
    }

    /// `(c2, c1, c0)` of the monic characteristic polynomial `s^3 + c2 s^2 + c1 s + c0`.
    pub fn characteristic(&self) -> (f64, f64, f64) {
        (
            self.lambda_theta,
            self.lambda_u - self.alpha * self.beta,
            self.lambda_u * self.lambda_theta,
        )
    }

    pub fn eigenvalues(&self) -> [C; 3] {
        let (c2, c1, c0) = self.characteristic();
        cubic_roots(c2, c1, c0)
    }

    /// Solves `(mu I - M) x = rhs` in coefficient form.
    ///
    /// Eliminates `v = mu u - f`, leaving a 2x2 system in `(u, theta)` whose
    /// determinant is the characteristic polynomial at `mu`. This keeps the
    /// near-resonant cancellation `lam_u + mu^2` in a single well-rounded term.
    pub fn solve_shifted(&self, mu: C, rhs: [C; 3]) -> Result<[C; 3]> {
        let rcond = self.shifted_rcond(mu);
        if !(rcond >= 1e-14) {
            return Err(Error::SingularShift { shift: mu, rcond });
        }
        Ok(self.solve_unchecked(mu, rhs))
    }

    fn solve_unchecked(&self, mu: C, [f, g, h]: [C; 3]) -> [C; 3] {
        let (alpha, beta) = (self.alpha, self.beta);
        let wave = self.wave_symbol(mu);
        let heat = mu + self.lambda_theta;
        let det = wave * heat - alpha * beta * mu;
        let r1 = g + mu * f;
        let r2 = h + beta * f;
        let u = (r1 * heat - alpha * r2) / det;
        let theta = (wave * r2 - beta * mu * r1) / det;
        [u, mu * u - f, theta]
    }

    /// `lam_u + mu^2`, rounded once in the real part.
    fn wave_symbol(&self, mu: C) -> C {
        let re = mu.im.mul_add(-mu.im, self.lambda_u) + mu.re * mu.re;
        C::new(re, 2.0 * mu.re * mu.im)
    }

    /// Reciprocal 1-norm condition number of `mu I - B` in Euclidean form.
    pub fn shifted_rcond(&self, mu: C) -> f64 {
        let b = self.euclidean();
        let mut a = [[ZERO; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = C::from(-b[i][j]);
            }
            a[i][i] += mu;
        }
        let inv = match self.shifted_inverse_euclidean(mu) {
            Some(inv) => inv,
            None => return 0.0,
        };
        let rc = 1.0 / (norm1(&a) * norm1(&inv));
        if rc.is_finite() {
            rc
        } else {
            0.0
        }
    }

    /// `(mu I - B)^{-1}` in Euclidean form, built column by column from the
    /// structured solve. `None` when the shift hits the spectrum exactly.
    pub fn shifted_inverse_euclidean(&self, mu: C) -> Option<C3> {
        let w = self.lambda_u.sqrt();
        let mut inv = [[ZERO; 3]; 3];
        for j in 0..3 {
            // Euclidean unit vector e_j corresponds to coefficient rhs W^{-1} e_j.
            let mut rhs = [ZERO; 3];
            rhs[j] = if j == 0 { C::from(1.0 / w) } else { ONE };
            let x = self.solve_unchecked(mu, rhs);
            let col = [x[0] * w, x[1], x[2]];
            for i in 0..3 {
                if !col[i].is_finite() {
                    return None;
                }
                inv[i][j] = col[i];
            }
        }
        Some(inv)
    }

    /// Eigendecomposition of the Euclidean block, or `None` when the block is
    /// (numerically) defective.
    pub fn eigen(&self) -> Option<ModalEigen> {
        let values = self.eigenvalues();
        let scale = values.iter().map(|s| s.norm()).fold(1.0, f64::max);
        for i in 0..3 {
            for j in i + 1..3 {
                if (values[i] - values[j]).norm() < 1e-6 * scale {
                    return None;
                }
            }
        }
        let b = self.euclidean();
        let mut vectors = [[ZERO; 3]; 3];
        for (k, &s) in values.iter().enumerate() {
            let x = null_vector(&b, s);
            for i in 0..3 {
                vectors[i][k] = x[i];
            }
        }
        let inverse = inverse3(&vectors)?;
        if norm1(&vectors) * norm1(&inverse) > 1e6 {
            return None;
        }
        Some(ModalEigen { values, vectors, inverse })
    }

    /// `exp(t B)` for the Euclidean block.
    pub fn euclidean_propagator(&self, t: f64) -> C3 {
        match self.eigen() {
            Some(e) => e.propagator(t),
            None => expm3(&to_complex(&self.euclidean()), t),
        }
    }

    /// `exp(t M)` in coefficient form.
    pub fn propagator(&self, t: f64) -> C3 {
        let w = self.lambda_u.sqrt();
        let mut p = self.euclidean_propagator(t);
        // W^{-1} P W with W = diag(w, 1, 1)
        for j in 1..3 {
            p[0][j] /= w;
        }
        for i in 1..3 {
            p[i][0] *= w;
        }
        p
    }
}

/// Diagonalization `B = V diag(values) V^{-1}` of one Euclidean block.
#[derive(Clone, Debug)]
pub struct ModalEigen {
    pub values: [C; 3],
    pub vectors: C3,
    pub inverse: C3,
}

impl ModalEigen {
    pub fn propagator(&self, t: f64) -> C3 {
        let mut out = [[ZERO; 3]; 3];
        let e = self.values.map(|s| (s * t).exp());
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| self.vectors[i][k] * e[k] * self.inverse[k][j]).sum();
            }
        }
        out
    }

    /// Coordinates of `x` in the eigenbasis.
    pub fn coordinates(&self, x: [C; 3]) -> [C; 3] {
        matvec(&self.inverse, x)
    }

    /// Reassembles `V diag(exp(s t)) c`.
    pub fn synthesize(&self, coords: [C; 3], t: f64) -> [C; 3] {
        let scaled = [0, 1, 2].map(|k| coords[k] * (self.values[k] * t).exp());
        matvec(&self.vectors, scaled)
    }
}

/// Roots of the monic real cubic `s^3 + c2 s^2 + c1 s + c0`, sorted by
/// imaginary then real part.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [C; 3] {
    let p = |s: f64| ((s + c2) * s + c1) * s + c0;
    let dp = |s: f64| (3.0 * s + 2.0 * c2) * s + c1;

    // p(-R) < 0 < p(R) for the Cauchy bound R.
    let bound = 1.0 + c2.abs().max(c1.abs()).max(c0.abs());
    let (mut lo, mut hi) = (-bound, bound);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = p(x);
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = dp(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let real = x;

    let q1 = c2 + real;
    let q0 = if real != 0.0 { -c0 / real } else { c1 + real * q1 };
    let disc = q1 * q1 - 4.0 * q0;
    let (r1, r2) = if disc >= 0.0 {
        let q = -0.5 * (q1 + q1.signum() * disc.sqrt());
        let a = C::from(q);
        let b = if q != 0.0 { C::from(q0 / q) } else { C::from(0.0) };
        (a, b)
    } else {
        let im = 0.5 * (-disc).sqrt();
        (C::new(-0.5 * q1, im), C::new(-0.5 * q1, -im))
    };

    let poly = |s: C| ((s + c2) * s + c1) * s + c0;
    let dpoly = |s: C| (3.0 * s + 2.0 * c2) * s + c1;
    let polish = |mut s: C| {
        for _ in 0..4 {
            let d = dpoly(s);
            if d.norm() == 0.0 {
                break;
            }
            let next = s - poly(s) / d;
            if !next.is_finite() || poly(next).norm() >= poly(s).norm() {
                break;
            }
            s = next;
        }
        s
    };
    let mut roots = [C::from(real), polish(r1), polish(r2)];
    // keep exact conjugate symmetry for complex pairs
    if disc < 0.0 {
        let pair = 0.5 * (roots[1] + roots[2].conj());
        roots[1] = pair;
        roots[2] = pair.conj();
    }
    roots.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    roots
}

fn to_complex(a: &[[f64; 3]; 3]) -> C3 {
    a.map(|row| row.map(C::from))
}

fn matvec(a: &C3, x: [C; 3]) -> [C; 3] {
    [0, 1, 2].map(|i| a[i][0] * x[0] + a[i][1] * x[1] + a[i][2] * x[2])
}

fn matmul(a: &C3, b: &C3) -> C3 {
    let mut out = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn norm1(a: &C3) -> f64 {
    (0..3)
        .map(|j| (0..3).map(|i| a[i][j].norm()).sum::<f64>())
        .fold(0.0, |acc, x| if x.is_nan() || x > acc { x } else { acc })
}

fn cross(a: [C; 3], b: [C; 3]) -> [C; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector spanning the (numerical) kernel of `b - s I`.
fn null_vector(b: &[[f64; 3]; 3], s: C) -> [C; 3] {
    let mut rows = to_complex(b);
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] -= s;
    }
    let candidates = [
        cross(rows[0], rows[1]),
        cross(rows[0], rows[2]),
        cross(rows[1], rows[2]),
    ];
    let norm = |x: &[C; 3]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let best = candidates
        .iter()
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .copied()
        .unwrap();
    let n = norm(&best);
    best.map(|z| z / n)
}

pub(crate) fn inverse3(a: &C3) -> Option<C3> {
    let cof = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]
    };
    let det = a[0][0] * cof(0, 0) + a[0][1] * cof(0, 1) + a[0][2] * cof(0, 2);
    if det.norm() == 0.0 || !det.is_finite() {
        return None;
    }
    let mut inv = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[j][i] = cof(i, j) / det;
        }
    }
    Some(inv)
}

/// `exp(t A)` by scaling and squaring a truncated Taylor series.
pub fn expm3(a: &C3, t: f64) -> C3 {
    let scaled = a.map(|row| row.map(|z| z * t));
    let norm = norm1(&scaled);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let factor = 0.5f64.powi(squarings as i32);
    let x = scaled.map(|row| row.map(|z| z * factor));

    let mut result = [[ZERO; 3]; 3];
    let mut term = [[ZERO; 3]; 3];
    for i in 0..3 {
        result[i][i] = ONE;
        term[i][i] = ONE;
    }
    for k in 1..=20 {
        term = matmul(&term, &x).map(|row| row.map(|z| z / k as f64));
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &C3, b: &C3) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((a[i][j] - b[i][j]).norm());
            }
        }
        m
    }

    #[test]
    fn characteristic_matches_symmetric_cubic() {
        let b = ModalBlock::symmetric(4.0, 0.5);
        assert_eq!(b.characteristic(), (4.0, 4.25, 16.0));
    }

    #[test]
    fn cubic_roots_three_real() {
        // (s+1)(s+2)(s+3)
        let r = cubic_roots(6.0, 11.0, 6.0);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(r.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn cubic_roots_conjugate_pair() {
        let r = cubic_roots(1.0, 2.0, 1.0);
        assert_eq!(r[0], r[2].conj());
        let sum: C = r.iter().sum();
        assert!((sum.re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_at_time_zero() {
        let p = ModalBlock::symmetric(9.0, 1.0).propagator(0.0);
        let mut id = [[ZERO; 3]; 3];
        for i in 0..3 {
            id[i][i] = ONE;
        }
        assert!(max_diff(&p, &id) < 1e-13);
    }

    #[test]
    fn decoupled_block_rotates_and_decays() {
        let t = 0.7;
        let p = ModalBlock::symmetric(1.0, 0.0).propagator(t);
        assert!((p[0][0].re - t.cos()).abs() < 1e-13);
        assert!((p[0][1].re - t.sin()).abs() < 1e-13);
        assert!((p[1][0].re + t.sin()).abs() < 1e-13);
        assert!((p[2][2].re - (-t).exp()).abs() < 1e-13);
        assert!(p[0][2].norm() < 1e-13 && p[2][0].norm() < 1e-13);
    }

    #[test]
    fn eigen_and_taylor_paths_agree() {
        let block = ModalBlock::symmetric(2.0, 0.8);
        let e = block.eigen().expect("diagonalizable");
        let b = to_complex(&block.euclidean());
        for t in [0.1, 1.0, 5.0] {
            assert!(max_diff(&e.propagator(t), &expm3(&b, t)) < 1e-12);
        }
    }

    #[test]
    fn defective_block_falls_back() {
        // characteristic polynomial (s+1)^3: lam_theta = 3, lam_u = 1/3, alpha*beta = lam_u - 3
        let lambda_u = 1.0 / 3.0;
        let block = ModalBlock { lambda_u, lambda_theta: 3.0, alpha: 1.0, beta: lambda_u - 3.0 };
        assert!(block.eigen().is_none());
        let p = block.euclidean_propagator(1.0);
        let reference = expm3(&to_complex(&block.euclidean()), 1.0);
        assert!(max_diff(&p, &reference) < 1e-14);
        let roots = block.eigenvalues();
        for r in roots {
            assert!((r + 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn shifted_solve_three_by_three() {
        // (I - M) U = (0, 1, 0) with lam = 1, gamma = 1
        let x = ModalBlock::symmetric(1.0, 1.0).solve_shifted(ONE, [ZERO, ONE, ZERO]).unwrap();
        assert!((x[0] - 0.4).norm() < 1e-15);
        assert!((x[1] - 0.4).norm() < 1e-15);
        assert!((x[2] - 0.2).norm() < 1e-15);
    }

    #[test]
    fn shifted_solve_on_spectrum_errors() {
        let block = ModalBlock::symmetric(1.0, 0.0);
        let err = block.solve_shifted(C::new(0.0, 1.0), [ZERO, ONE, ZERO]);
        assert!(matches!(err, Err(Error::SingularShift { .. })));
    }
}
