//! Independent oracles. Nothing here calls into the library's numerics, so
//! agreement with them is a genuine cross-check.
#![allow(dead_code)]

use num_complex::Complex64 as C;

pub type Dense = Vec<Vec<C>>;

pub fn dirichlet(m: usize, l: f64, x: f64) -> f64 {
    (2.0 / l).sqrt() * (m as f64 * std::f64::consts::PI * x / l).sin()
}

pub fn neumann(m: usize, l: f64, x: f64) -> f64 {
    (2.0 / l).sqrt() * (m as f64 * std::f64::consts::PI * x / l).cos()
}

pub fn dirichlet_dx(m: usize, l: f64, x: f64) -> f64 {
    let k = m as f64 * std::f64::consts::PI / l;
    (2.0 / l).sqrt() * k * (k * x).cos()
}

pub fn neumann_dx(m: usize, l: f64, x: f64) -> f64 {
    let k = m as f64 * std::f64::consts::PI / l;
    -(2.0 / l).sqrt() * k * (k * x).sin()
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // split first so oscillatory integrands cannot fool the initial estimate
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// Roots of the monic polynomial `z^n + c[0] z^{n-1} + ... + c[n-1]`.
pub fn durand_kerner(c: &[f64]) -> Vec<C> {
    let n = c.len();
    let eval = |z: C| c.iter().fold(C::new(1.0, 0.0), |acc, &ci| acc * z + ci);
    let radius = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = C::new(0.4, 0.9);
    let mut z: Vec<C> = (0..n).map(|k| seed.powu(k as u32 + 1) * radius).collect();
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(C::new(1.0, 0.0), |acc, j| acc * (z[i] - z[j]));
            let step = eval(z[i]) / denom;
            z[i] -= step;
            change = change.max(step.norm() / z[i].norm().max(1.0));
        }
        if change < 1e-16 {
            break;
        }
    }
    z
}

pub fn zeros(n: usize) -> Dense {
    vec![vec![C::new(0.0, 0.0); n]; n]
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == C::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, x: &[C]) -> Vec<C> {
    a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
}

/// `exp(t A)` by scaling and squaring of a long Taylor series.
pub fn expm_taylor(a: &Dense, t: f64) -> Dense {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) * t;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = t / 2f64.powi(s);
    let scaled: Dense = a.iter().map(|r| r.iter().map(|z| z * scale).collect()).collect();
    let mut result = zeros(n);
    let mut term = zeros(n);
    for i in 0..n {
        result[i][i] = C::new(1.0, 0.0);
        term[i][i] = C::new(1.0, 0.0);
    }
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result);
    }
    result
}

/// Dormand-Prince 5(4) integration of `y' = f(y)` from 0 to `t_end`.
pub fn dopri45(f: &dyn Fn(&[C]) -> Vec<C>, y0: &[C], t_end: f64, rtol: f64, atol: f64) -> Vec<C> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 1e-4 * t_end.max(1e-3);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k: Vec<Vec<C>> = Vec::with_capacity(7);
        k.push(f(&y));
        for s in 0..6 {
            let stage: Vec<C> = (0..n)
                .map(|i| y[i] + h * (0..=s).map(|j| k[j][i] * A[s][j]).sum::<C>())
                .collect();
            k.push(f(&stage));
        }
        let y5: Vec<C> = (0..n).map(|i| y[i] + h * (0..7).map(|j| k[j][i] * B5[j]).sum::<C>()).collect();
        let y4: Vec<C> = (0..n).map(|i| y[i] + h * (0..7).map(|j| k[j][i] * B4[j]).sum::<C>()).collect();
        let err = (0..n)
            .map(|i| (y5[i] - y4[i]).norm() / (atol + rtol * y[i].norm().max(y5[i].norm())))
            .fold(0.0, f64::max);
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    y
}

pub fn inverse3(m: [[C; 3]; 3]) -> [[C; 3]; 3] {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let mut out = [[C::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    out
}

/// Spectral norm by power iteration on `M^H M`.
pub fn operator_norm(m: &Dense) -> f64 {
    let n = m.len();
    let mut x: Vec<C> = (0..n).map(|i| C::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64)).collect();
    let mut estimate = 0.0;
    for _ in 0..5000 {
        let y = matvec(m, &x);
        let z: Vec<C> = (0..n).map(|j| (0..n).map(|i| m[i][j].conj() * y[i]).sum()).collect();
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let next = norm.sqrt();
        x = z.iter().map(|v| v / norm).collect();
        if (next - estimate).abs() <= 1e-15 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Deterministic pseudo-random numbers in [-1, 1) (SplitMix64).
pub struct Stream(u64);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream(seed)
    }

    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn complex(&mut self) -> C {
        C::new(self.next(), self.next())
    }
}
