//! Independent floating-point oracle: Gauss-Legendre nested quadrature for
//! the coefficients and explicit loops for the expansions. Shares nothing
//! with the library except the plain draw values it is handed.

#![allow(dead_code)]

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn legendre(j: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if j == 0 {
        return 1.0;
    }
    for k in 2..=j {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub struct Quad {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Quad {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    /// `∫_{-1}^{y} f`.
    fn integrate(&self, y: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let h = 0.5 * (y + 1.0);
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(h * (x + 1.0) - 1.0)).sum::<f64>() * h
    }

    /// Nested `∫_{-1}^{1} g_k P_{j_k} ∫_{-1}^{x_k} .. g_1 P_{j_1}`, `j_1` innermost,
    /// with per-level weight functions on [-1, 1].
    pub fn cbar_weighted(&self, js: &[usize], g: &[&dyn Fn(f64) -> f64]) -> f64 {
        fn level(q: &Quad, js: &[usize], g: &[&dyn Fn(f64) -> f64], upper: f64) -> f64 {
            let l = js.len() - 1;
            let f = |x: f64| {
                let inner = if l == 0 { 1.0 } else { level(q, &js[..l], &g[..l], x) };
                g[l](x) * legendre(js[l], x) * inner
            };
            q.integrate(upper, &f)
        }
        level(self, js, g, 1.0)
    }

    pub fn cbar(&self, js: &[usize]) -> f64 {
        let one = |_: f64| 1.0;
        let g: Vec<&dyn Fn(f64) -> f64> = js.iter().map(|_| &one as &dyn Fn(f64) -> f64).collect();
        self.cbar_weighted(js, &g)
    }

    /// `C_{j_k..j_1}` for unit weights on an interval of length `l`.
    pub fn coefficient(&self, js: &[usize], l: f64) -> f64 {
        let k = js.len() as i32;
        let s: f64 = js.iter().map(|&j| (2 * j + 1) as f64).product::<f64>().sqrt();
        s * 0.5f64.powi(k) * l.powf(0.5 * k as f64) * self.cbar(js)
    }
}

/// Draws `z[i][j]`, components 1-based in the caller's sense (row `i-1`).
pub struct Draws<'a>(pub &'a [Vec<f64>]);

impl Draws<'_> {
    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.0[i - 1][j]
    }
}

fn eq(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Order-`q` triple integral approximation for components `(i1, i2, i3)`.
pub fn triple(c: &[Vec<Vec<f64>>], i: [usize; 3], q: usize, d: &Draws) -> f64 {
    let mut s = 0.0;
    for j3 in 0..=q {
        for j2 in 0..=q {
            for j1 in 0..=q {
                let coef = c[j3][j2][j1];
                let (z1, z2, z3) = (d.z(i[0], j1), d.z(i[1], j2), d.z(i[2], j3));
                let mut v = z1 * z2 * z3;
                v -= eq(i[0], i[1]) * eq(j1, j2) * z3;
                v -= eq(i[1], i[2]) * eq(j2, j3) * z1;
                v -= eq(i[0], i[2]) * eq(j1, j3) * z2;
                s += coef * v;
            }
        }
    }
    s
}

/// Order-`q` quadruple integral approximation for components `(i1..i4)`.
pub fn quadruple(c: &[Vec<Vec<Vec<f64>>>], i: [usize; 4], q: usize, d: &Draws) -> f64 {
    let mut s = 0.0;
    for j4 in 0..=q {
        for j3 in 0..=q {
            for j2 in 0..=q {
                for j1 in 0..=q {
                    let coef = c[j4][j3][j2][j1];
                    let z = [d.z(i[0], j1), d.z(i[1], j2), d.z(i[2], j3), d.z(i[3], j4)];
                    let j = [j1, j2, j3, j4];
                    let pair = |a: usize, b: usize| eq(i[a], i[b]) * eq(j[a], j[b]);
                    let mut v = z[0] * z[1] * z[2] * z[3];
                    v -= pair(0, 1) * z[2] * z[3];
                    v -= pair(0, 2) * z[1] * z[3];
                    v -= pair(0, 3) * z[1] * z[2];
                    v -= pair(1, 2) * z[0] * z[3];
                    v -= pair(1, 3) * z[0] * z[2];
                    v -= pair(2, 3) * z[0] * z[1];
                    v += pair(0, 1) * pair(2, 3);
                    v += pair(0, 2) * pair(1, 3);
                    v += pair(0, 3) * pair(1, 2);
                    s += coef * v;
                }
            }
        }
    }
    s
}

pub fn table3(quad: &Quad, q: usize, l: f64) -> Vec<Vec<Vec<f64>>> {
    (0..=q)
        .map(|j3| (0..=q).map(|j2| (0..=q).map(|j1| quad.coefficient(&[j1, j2, j3], l)).collect()).collect())
        .collect()
}

pub fn table4(quad: &Quad, q: usize, l: f64) -> Vec<Vec<Vec<Vec<f64>>>> {
    (0..=q)
        .map(|j4| {
            (0..=q)
                .map(|j3| (0..=q).map(|j2| (0..=q).map(|j1| quad.coefficient(&[j1, j2, j3, j4], l)).collect()).collect())
                .collect()
        })
        .collect()
}

pub fn time_inner(r: usize, d: &Draws, l: f64) -> f64 {
    l.powf(1.5) / 2.0 * (d.z(r, 0) + d.z(r, 1) / 3f64.sqrt())
}

pub fn pair(r1: usize, r2: usize, q: usize, d: &Draws, l: f64) -> f64 {
    let mut s = d.z(r1, 0) * d.z(r2, 0);
    for i in 1..=q {
        s += (d.z(r1, i - 1) * d.z(r2, i) - d.z(r1, i) * d.z(r2, i - 1)) / ((4 * i * i - 1) as f64).sqrt();
    }
    l / 2.0 * (s - eq(r1, r2))
}

/// Weighted pair integral with the `(t-τ)` weight on the inner level.
pub fn weighted_inner(r1: usize, r2: usize, q: usize, d: &Draws, l: f64) -> f64 {
    let mut s = d.z(r2, 0) * d.z(r1, 1) / 3f64.sqrt();
    for i in 0..=q {
        let fi = i as f64;
        let den = (2.0 * fi + 3.0) * ((2.0 * fi + 1.0) * (2.0 * fi + 5.0)).sqrt();
        s += ((fi + 1.0) * d.z(r2, i + 2) * d.z(r1, i) - (fi + 2.0) * d.z(r2, i) * d.z(r1, i + 2)) / den;
        s += d.z(r1, i) * d.z(r2, i) / ((2.0 * fi - 1.0) * (2.0 * fi + 3.0));
    }
    -l / 2.0 * pair(r1, r2, q, d, l) - l * l / 4.0 * s
}

/// `T[r1..rk][h]` accessor for a dense row-major tensor, modes 1-based.
pub fn column<'a>(data: &'a [f64], n: usize, m: usize, rs: &[usize]) -> &'a [f64] {
    let mut o = 0;
    for &r in rs {
        o = o * m + (r - 1);
    }
    &data[o * n..(o + 1) * n]
}

/// Composite with three mode indices: two triple integrals plus a time-inner
/// correction on the diagonal.
pub fn composite_three(data: &[f64], n: usize, lambdas: &[f64], q: usize, d: &Draws, l: f64, quad: &Quad) -> Vec<f64> {
    let m = lambdas.len();
    let c = table3(quad, q, l);
    let mut out = vec![0.0; n];
    for r1 in 1..=m {
        for r2 in 1..=m {
            for r3 in 1..=m {
                let s = (lambdas[r1 - 1] * lambdas[r2 - 1] * lambdas[r3 - 1]).sqrt();
                let v = triple(&c, [r1, r2, r3], q, d) + triple(&c, [r2, r1, r3], q, d)
                    + eq(r1, r2) * time_inner(r3, d, l);
                let col = column(data, n, m, &[r1, r2, r3]);
                for h in 0..n {
                    out[h] += col[h] * s * v;
                }
            }
        }
    }
    out
}

/// Composite with four mode indices: two quadruple integrals minus a weighted
/// pair integral on the `r1 = r2` diagonal.
pub fn composite_four(data: &[f64], n: usize, lambdas: &[f64], q: usize, d: &Draws, l: f64, quad: &Quad) -> Vec<f64> {
    let m = lambdas.len();
    let c = table4(quad, q, l);
    let mut out = vec![0.0; n];
    for r1 in 1..=m {
        for r2 in 1..=m {
            for r3 in 1..=m {
                for r4 in 1..=m {
                    let s = (lambdas[r1 - 1] * lambdas[r2 - 1] * lambdas[r3 - 1] * lambdas[r4 - 1]).sqrt();
                    let v = quadruple(&c, [r1, r2, r3, r4], q, d) + quadruple(&c, [r2, r1, r3, r4], q, d)
                        - eq(r1, r2) * weighted_inner(r3, r4, q, d, l);
                    let col = column(data, n, m, &[r1, r2, r3, r4]);
                    for h in 0..n {
                        out[h] += col[h] * s * v;
                    }
                }
            }
        }
    }
    out
}

/// Small xorshift generator for test fixtures.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform on (-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}
