//! Finite-mode Q-Wiener integrals: generic multiplicity-k approximations,
//! their mean-square bound, and the composite integrals `I0..I8` assembled
//! from scalar approximations.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::WeightSpec;
use crate::error::{e_q, g_q, parseval_gap};
use crate::expansion::{
    i01_approx, i10_approx, i11_approx, i1_approx, j01_approx, j10_approx, mix_seed,
    ExpansionCoefficients, ExpansionPlan, NoiseMatrix,
};
use crate::legendre::rat_to_f64;
use crate::Error;

/// Retained eigenvalues `λ_1..λ_M` and the trace of the full spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct QWienerSpec {
    lambdas: Vec<f64>,
    trace: f64,
}

/// `Σ_{r>=1} r^{-ν}` by direct summation plus an Euler-Maclaurin tail.
fn zeta_sum(nu: f64) -> f64 {
    const K: usize = 1000;
    let head: f64 = (1..K).map(|r| (r as f64).powf(-nu)).sum();
    let k = K as f64;
    let tail = k.powf(1.0 - nu) / (nu - 1.0) + 0.5 * k.powf(-nu) + nu * k.powf(-nu - 1.0) / 12.0
        - nu * (nu + 1.0) * (nu + 2.0) * k.powf(-nu - 3.0) / 720.0;
    head + tail
}

impl QWienerSpec {
    /// `λ_r = c r^{-ν}`, `ν > 1`, trace summed over the infinite spectrum.
    pub fn power_law(c: f64, nu: f64, m: usize) -> Result<Self, Error> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("spectrum scale must be positive, got {c}")));
        }
        if !(nu > 1.0 && nu.is_finite()) {
            return Err(Error::InvalidInput(format!("decay exponent must exceed 1, got {nu}")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        let lambdas = (1..=m).map(|r| c * (r as f64).powf(-nu)).collect();
        Ok(Self { lambdas, trace: c * zeta_sum(nu) })
    }

    pub fn explicit(lambdas: Vec<f64>, trace: f64) -> Result<Self, Error> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("at least one mode is required".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput(format!("eigenvalues must be positive, got {l}")));
        }
        let partial: f64 = lambdas.iter().sum();
        if !(trace.is_finite() && trace >= partial * (1.0 - 1e-12)) {
            return Err(Error::InvalidInput(format!(
                "trace {trace} is below the retained eigenvalue sum {partial}"
            )));
        }
        Ok(Self { lambdas, trace })
    }

    pub fn m(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Same spectrum restricted to the first `m` modes; the trace is kept.
    pub fn truncated(&self, m: usize) -> Result<Self, Error> {
        if m == 0 || m > self.m() {
            return Err(Error::Dimension(format!("cannot keep {m} of {} modes", self.m())));
        }
        Ok(Self { lambdas: self.lambdas[..m].to_vec(), trace: self.trace })
    }

    fn sqrt_product(&self, rs: &[usize]) -> f64 {
        rs.iter().map(|&r| self.lambdas[r - 1]).product::<f64>().sqrt()
    }
}

/// Dense tensor `T[r_1..r_k][h]` mapping mode tuples to vectors in `R^n`.
///
/// Layout: `r_1` slowest, `h` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearOperator {
    k: usize,
    n: usize,
    m: usize,
    data: Vec<f64>,
    bound: f64,
}

impl MultilinearOperator {
    pub fn from_data(k: usize, n: usize, m: usize, data: Vec<f64>) -> Result<Self, Error> {
        if k == 0 || n == 0 || m == 0 {
            return Err(Error::InvalidInput("arity, dimension and modes must be positive".into()));
        }
        let expected = m.pow(k as u32) * n;
        if data.len() != expected {
            return Err(Error::Dimension(format!("operator needs {expected} entries, got {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("operator entries must be finite".into()));
        }
        let bound = data
            .chunks(n)
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self { k, n, m, data, bound })
    }

    /// Seeded Gaussian entries scaled by `1/√n`, so the bound is O(1).
    pub fn random(k: usize, n: usize, m: usize, seed: u64) -> Result<Self, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64, (n * 1000 + m) as u64));
        let scale = 1.0 / (n as f64).sqrt();
        let len = m.checked_pow(k as u32).and_then(|x| x.checked_mul(n));
        let len = len.ok_or_else(|| Error::InvalidInput("operator too large".into()))?;
        let data = (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Self::from_data(k, n, m, data)
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest squared norm over all mode tuples.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn tuple_offset(&self, rs: &[usize]) -> usize {
        rs.iter().fold(0, |acc, &r| acc * self.m + (r - 1))
    }

    /// Image of `(e_{r_1}, .., e_{r_k})`, modes 1-based.
    pub fn column(&self, rs: &[usize]) -> &[f64] {
        let o = self.tuple_offset(rs) * self.n;
        &self.data[o..o + self.n]
    }

    /// Same tensor on the first `m` modes.
    pub fn restrict(&self, m: usize) -> Result<Self, Error> {
        if m == 0 || m > self.m {
            return Err(Error::Dimension(format!("cannot keep {m} of {} modes", self.m)));
        }
        let mut data = Vec::with_capacity(m.pow(self.k as u32) * self.n);
        for rs in mode_tuples(self.k, m) {
            data.extend_from_slice(self.column(&rs));
        }
        Self::from_data(self.k, self.n, m, data)
    }
}

/// All tuples in `{1..m}^k`, lexicographic.
pub fn mode_tuples(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (1..=m).map(move |r| {
                    let mut t = t.clone();
                    t.push(r);
                    t
                })
            })
            .collect();
    }
    out
}

fn check_setup(op: &MultilinearOperator, spec: &QWienerSpec, noise: &NoiseMatrix) -> Result<(), Error> {
    if op.modes() != spec.m() {
        return Err(Error::Dimension(format!("operator has {} modes, spectrum {}", op.modes(), spec.m())));
    }
    if noise.rows() < spec.m() {
        return Err(Error::Dimension(format!("noise has {} rows, need {}", noise.rows(), spec.m())));
    }
    Ok(())
}

/// Prepared generic approximation: one expansion plan per mode tuple.
#[derive(Clone, Debug)]
pub struct GenericPlan {
    op: MultilinearOperator,
    spec: QWienerSpec,
    plans: Vec<(Vec<usize>, f64, ExpansionPlan)>,
}

impl GenericPlan {
    pub fn new(
        op: &MultilinearOperator,
        spec: &QWienerSpec,
        weights: &WeightSpec,
        trunc: &[usize],
        interval_length: f64,
    ) -> Result<Self, Error> {
        if op.arity() != weights.k() || trunc.len() != weights.k() {
            return Err(Error::Dimension(format!(
                "arity {}, {} weight levels, {} orders",
                op.arity(),
                weights.k(),
                trunc.len()
            )));
        }
        if op.modes() != spec.m() {
            return Err(Error::Dimension(format!("operator has {} modes, spectrum {}", op.modes(), spec.m())));
        }
        let coeffs = ExpansionCoefficients::new(weights, trunc, interval_length)?;
        let plans = mode_tuples(op.arity(), spec.m())
            .into_iter()
            .map(|rs| {
                let s = spec.sqrt_product(&rs);
                let plan = ExpansionPlan::from_coefficients(coeffs.clone(), rs.clone());
                (rs, s, plan)
            })
            .collect();
        Ok(Self { op: op.clone(), spec: spec.clone(), plans })
    }

    pub fn max_index(&self) -> usize {
        self.plans.first().map_or(0, |p| p.2.coefficients().max_index())
    }

    pub fn evaluate(&self, noise: &NoiseMatrix) -> Result<Vec<f64>, Error> {
        check_setup(&self.op, &self.spec, noise)?;
        noise.check(&[1], self.max_index())?;
        let mut out = vec![0.0; self.op.dim()];
        for (rs, s, plan) in &self.plans {
            let j = plan.evaluate_unchecked(noise);
            for (o, t) in out.iter_mut().zip(self.op.column(rs)) {
                *o += t * s * j;
            }
        }
        Ok(out)
    }
}

/// `Σ_{r_1..r_k} T[r] √(λ_{r_1}..λ_{r_k}) J^{(r_1..r_k)p}` on one set of draws.
pub fn approx_generic(
    op: &MultilinearOperator,
    spec: &QWienerSpec,
    weights: &WeightSpec,
    trunc: &[usize],
    noise: &NoiseMatrix,
    interval_length: f64,
) -> Result<Vec<f64>, Error> {
    GenericPlan::new(op, spec, weights, trunc, interval_length)?.evaluate(noise)
}

/// `L (k!)^2 (tr Q)^k (I_k - Σ C^2)`; does not depend on the number of modes.
pub fn bound_generic(
    l: f64,
    spec: &QWienerSpec,
    weights: &WeightSpec,
    trunc: &[usize],
    interval_length: f64,
) -> Result<f64, Error> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::InvalidInput(format!("operator bound must be nonnegative, got {l}")));
    }
    if !(interval_length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {interval_length}")));
    }
    let k = weights.k();
    let (gap, power) = parseval_gap(weights, trunc)?;
    let fact: f64 = (1..=k).map(|x| x as f64).product();
    let gap = rat_to_f64(&gap).max(0.0) * interval_length.powi(power as i32);
    Ok(l * fact * fact * spec.trace().powi(k as i32) * gap)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompositeKind {
    I0,
    I1,
    I2,
    I3,
    I4,
    I5,
    I6,
    I7,
    I8,
}

impl CompositeKind {
    pub const ALL: [CompositeKind; 9] = [
        CompositeKind::I0,
        CompositeKind::I1,
        CompositeKind::I2,
        CompositeKind::I3,
        CompositeKind::I4,
        CompositeKind::I5,
        CompositeKind::I6,
        CompositeKind::I7,
        CompositeKind::I8,
    ];

    /// Number of mode indices of the operator tensor.
    pub fn arity(&self) -> usize {
        match self {
            CompositeKind::I0 | CompositeKind::I1 => 1,
            CompositeKind::I2 => 3,
            CompositeKind::I3 | CompositeKind::I4 | CompositeKind::I5 => 4,
            CompositeKind::I6 | CompositeKind::I7 | CompositeKind::I8 => 2,
        }
    }
}

impl fmt::Display for CompositeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for CompositeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        CompositeKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown composite kind {s:?}")))
    }
}

/// Scalar approximations shared by the composite assemblies, cached per
/// component tuple.
struct Scalars<'a> {
    noise: &'a NoiseMatrix,
    q: usize,
    l: f64,
    k3: Option<ExpansionCoefficients>,
    k4: Option<ExpansionCoefficients>,
    cache: HashMap<Vec<usize>, f64>,
}

impl<'a> Scalars<'a> {
    fn new(kind: CompositeKind, noise: &'a NoiseMatrix, q: usize, l: f64) -> Result<Self, Error> {
        let k3 = match kind {
            CompositeKind::I2 => Some(ExpansionCoefficients::new(&WeightSpec::unit(3), &[q; 3], l)?),
            _ => None,
        };
        let k4 = match kind {
            CompositeKind::I3 | CompositeKind::I4 | CompositeKind::I5 => {
                Some(ExpansionCoefficients::new(&WeightSpec::unit(4), &[q; 4], l)?)
            }
            _ => None,
        };
        Ok(Self { noise, q, l, k3, k4, cache: HashMap::new() })
    }

    fn multiple(&mut self, comps: &[usize]) -> f64 {
        if let Some(v) = self.cache.get(comps) {
            return *v;
        }
        let coeffs = if comps.len() == 3 { self.k3.as_ref() } else { self.k4.as_ref() };
        let coeffs = coeffs.expect("coefficients prepared for this kind").clone();
        let v = ExpansionPlan::from_coefficients(coeffs, comps.to_vec()).evaluate_unchecked(self.noise);
        self.cache.insert(comps.to_vec(), v);
        v
    }

    fn j01(&self, r1: usize, r2: usize) -> f64 {
        j01_approx(r1, r2, self.q, self.noise, self.l).expect("noise checked")
    }

    fn j10(&self, r1: usize, r2: usize) -> f64 {
        j10_approx(r1, r2, self.q, self.noise, self.l).expect("noise checked")
    }
}

fn ind(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Scalar bracket multiplying `T[r] √λ..` in each composite assembly.
fn bracket(kind: CompositeKind, r: &[usize], s: &mut Scalars) -> f64 {
    let l = s.l;
    let z = s.noise;
    match kind {
        CompositeKind::I0 => i01_approx(r[0], z, l).expect("noise checked"),
        CompositeKind::I1 => i10_approx(r[0], z, l).expect("noise checked"),
        CompositeKind::I2 => {
            let (r1, r2, r3) = (r[0], r[1], r[2]);
            s.multiple(&[r1, r2, r3])
                + s.multiple(&[r2, r1, r3])
                + ind(r1, r2) * i01_approx(r3, z, l).expect("noise checked")
        }
        CompositeKind::I3 => {
            let (r1, r2, r3, r4) = (r[0], r[1], r[2], r[3]);
            let perms = [[r1, r2, r3], [r1, r3, r2], [r2, r1, r3], [r2, r3, r1], [r3, r1, r2], [r3, r2, r1]];
            let mut v = 0.0;
            for p in perms {
                v += s.multiple(&[p[0], p[1], p[2], r4]);
            }
            v - ind(r1, r2) * s.j01(r3, r4) - ind(r1, r3) * s.j01(r2, r4) - ind(r2, r3) * s.j01(r1, r4)
        }
        CompositeKind::I4 => {
            let (r1, r2, r3, r4) = (r[0], r[1], r[2], r[3]);
            s.multiple(&[r1, r2, r3, r4]) + s.multiple(&[r2, r1, r3, r4]) - ind(r1, r2) * s.j10(r3, r4)
        }
        CompositeKind::I5 => {
            let (r1, r2, r3, r4) = (r[0], r[1], r[2], r[3]);
            s.multiple(&[r2, r1, r3, r4]) + s.multiple(&[r2, r3, r1, r4]) + s.multiple(&[r3, r2, r1, r4])
                + ind(r1, r3) * (s.j10(r2, r4) - s.j01(r2, r4))
                - ind(r2, r3) * s.j10(r1, r4)
        }
        CompositeKind::I6 => {
            let (r1, r2) = (r[0], r[1]);
            l * i11_approx(r1, r2, s.q, z, l).expect("noise checked") + s.j01(r1, r2)
        }
        CompositeKind::I7 => {
            let (r1, r2) = (r[0], r[1]);
            let a = i1_approx(r1, z, l).expect("noise checked");
            let b = i1_approx(r2, z, l).expect("noise checked");
            l * a * b + s.j01(r1, r2) + s.j01(r2, r1) - ind(r1, r2) * l * l / 2.0
        }
        CompositeKind::I8 => -s.j01(r[0], r[1]),
    }
}

/// Highest basis index the composite reads from the draws.
pub fn composite_noise_index(kind: CompositeKind, q: usize) -> usize {
    match kind {
        CompositeKind::I0 | CompositeKind::I1 => 1,
        CompositeKind::I2 => q.max(1),
        _ => q + 2,
    }
}

/// Assemble a composite approximation from scalar approximations on shared draws.
pub fn approx_composite(
    kind: CompositeKind,
    op: &MultilinearOperator,
    spec: &QWienerSpec,
    q: usize,
    noise: &NoiseMatrix,
    interval_length: f64,
) -> Result<Vec<f64>, Error> {
    if op.arity() != kind.arity() {
        return Err(Error::Dimension(format!(
            "{kind} needs an operator of arity {}, got {}",
            kind.arity(),
            op.arity()
        )));
    }
    if !(interval_length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {interval_length}")));
    }
    check_setup(op, spec, noise)?;
    noise.check(&[1], composite_noise_index(kind, q))?;
    let mut scalars = Scalars::new(kind, noise, q, interval_length)?;
    let mut out = vec![0.0; op.dim()];
    for rs in mode_tuples(op.arity(), spec.m()) {
        let w = spec.sqrt_product(&rs) * bracket(kind, &rs, &mut scalars);
        for (o, t) in out.iter_mut().zip(op.column(&rs)) {
            *o += t * w;
        }
    }
    Ok(out)
}

/// Stated mean-square bound of a composite approximation; `I0` and `I1` are
/// exact and return 0.
pub fn composite_error_bound(
    kind: CompositeKind,
    constant_c: f64,
    spec: &QWienerSpec,
    q: usize,
    interval_length: f64,
) -> Result<f64, Error> {
    if !(constant_c >= 0.0 && constant_c.is_finite()) {
        return Err(Error::InvalidInput(format!("constant must be nonnegative, got {constant_c}")));
    }
    if !(interval_length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {interval_length}")));
    }
    let l = interval_length;
    let tr = spec.trace();
    let big_e = rat_to_f64(&e_q(q)) * l.powi(4);
    let big_g = rat_to_f64(&g_q(q)) * l * l;
    let gap = |k: usize| -> Result<f64, Error> {
        let (g, p) = parseval_gap(&WeightSpec::unit(k), &vec![q; k])?;
        Ok(rat_to_f64(&g) * l.powi(p as i32))
    };
    let f4 = 24.0 * 24.0;
    let c = constant_c;
    Ok(match kind {
        CompositeKind::I0 | CompositeKind::I1 => 0.0,
        CompositeKind::I2 => 4.0 * c * 36.0 * tr.powi(3) * gap(3)?,
        CompositeKind::I3 => c * tr.powi(4) * (36.0 * f4 * gap(4)? + 36.0 * big_e),
        CompositeKind::I4 => c * tr.powi(4) * (4.0 * f4 * gap(4)? + 4.0 * big_e),
        CompositeKind::I5 => c * tr.powi(4) * (9.0 * f4 * gap(4)? + 36.0 * big_e),
        CompositeKind::I6 => 2.0 * c * 4.0 * tr * tr * (l * l * big_g + big_e),
        CompositeKind::I7 => 16.0 * c * tr * tr * big_e,
        CompositeKind::I8 => 4.0 * c * tr * tr * big_e,
    })
}

/// True iff the two tuples differ as multisets.
pub fn check_orthogonality_inputs(a: &[usize], b: &[usize]) -> bool {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    x != y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::gen_noise;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn power_law_trace() {
        let s = QWienerSpec::power_law(1.0, 2.0, 4).unwrap();
        assert!((s.trace() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        assert_eq!(s.lambdas(), &[1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0]);
        assert!(QWienerSpec::power_law(1.0, 1.0, 4).is_err());
        assert!(QWienerSpec::explicit(vec![1.0, 0.5], 1.0).is_err());
        assert!(QWienerSpec::explicit(vec![1.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn single_mode_k1() {
        let spec = QWienerSpec::explicit(vec![1.0], 1.0).unwrap();
        let op = MultilinearOperator::from_data(1, 2, 1, vec![0.6, 0.8]).unwrap();
        let noise = gen_noise(1, 2, 3);
        let v = approx_generic(&op, &spec, &WeightSpec::unit(1), &[0], &noise, 0.7).unwrap();
        let s = 0.7f64.sqrt() * noise.zeta(1, 0);
        assert!(close(v[0], 0.6 * s) && close(v[1], 0.8 * s));
    }

    #[test]
    fn k2_zero_draws() {
        let spec = QWienerSpec::explicit(vec![1.0, 0.5], 2.0).unwrap();
        // T[r1 r2] = e_{r1} if r1 == r2 else 0
        let data = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let op = MultilinearOperator::from_data(2, 2, 2, data).unwrap();
        let noise = NoiseMatrix::zeros(2, 3);
        let v = approx_generic(&op, &spec, &WeightSpec::unit(2), &[3, 3], &noise, 0.8).unwrap();
        assert!(close(v[0], -0.4 * 1.0));
        assert!(close(v[1], -0.4 * 0.5));
    }

    #[test]
    fn generic_bound_examples() {
        let spec = QWienerSpec::explicit(vec![1.0], 1.0).unwrap();
        for p in 0..4 {
            assert_eq!(bound_generic(1.0, &spec, &WeightSpec::unit(1), &[p], 1.0).unwrap(), 0.0);
        }
        let b = bound_generic(1.0, &spec, &WeightSpec::unit(2), &[0, 0], 1.0).unwrap();
        assert!(close(b, 1.0));
        let full = QWienerSpec::power_law(1.0, 2.0, 8).unwrap();
        let a = bound_generic(0.7, &full, &WeightSpec::unit(3), &[2; 3], 0.5).unwrap();
        for m in [1, 2] {
            let c = bound_generic(0.7, &full.truncated(m).unwrap(), &WeightSpec::unit(3), &[2; 3], 0.5).unwrap();
            assert_eq!(a, c);
        }
    }

    #[test]
    fn composites_i0_i1() {
        let spec = QWienerSpec::explicit(vec![1.0], 1.0).unwrap();
        let op = MultilinearOperator::from_data(1, 1, 1, vec![3.0]).unwrap();
        let noise = NoiseMatrix::from_rows(vec![vec![2.0, 0.0, 0.0]]).unwrap();
        let a = approx_composite(CompositeKind::I0, &op, &spec, 0, &noise, 1.0).unwrap();
        let b = approx_composite(CompositeKind::I1, &op, &spec, 0, &noise, 1.0).unwrap();
        assert!(close(a[0], 3.0) && close(b[0], 3.0));
        let op2 = MultilinearOperator::from_data(2, 1, 1, vec![1.0]).unwrap();
        assert!(approx_composite(CompositeKind::I0, &op2, &spec, 0, &noise, 1.0).is_err());
    }

    #[test]
    fn i7_zero_draws_vanish() {
        let spec = QWienerSpec::explicit(vec![1.0, 0.3], 1.5).unwrap();
        let op = MultilinearOperator::random(2, 3, 2, 5).unwrap();
        let noise = NoiseMatrix::zeros(2, 6);
        let v = approx_composite(CompositeKind::I7, &op, &spec, 2, &noise, 0.6).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn bound_ratios() {
        let spec = QWienerSpec::power_law(1.0, 2.0, 3).unwrap();
        let b7 = composite_error_bound(CompositeKind::I7, 1.3, &spec, 3, 0.4).unwrap();
        let b8 = composite_error_bound(CompositeKind::I8, 1.3, &spec, 3, 0.4).unwrap();
        assert!(close(b7 / b8, 4.0));
        let one = QWienerSpec::explicit(vec![1.0], 1.0).unwrap();
        let b2 = composite_error_bound(CompositeKind::I2, 1.0, &one, 6, 1.0).unwrap();
        let (gap, _) = parseval_gap(&WeightSpec::unit(3), &[6; 3]).unwrap();
        assert!(close(b2, 144.0 * rat_to_f64(&gap)));
        let first = composite_error_bound(CompositeKind::I8, 1.0, &one, 0, 1.0).unwrap();
        let mut prev = first;
        for q in [5, 50, 500] {
            let b = composite_error_bound(CompositeKind::I8, 1.0, &one, q, 1.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < first / 100.0);
    }

    #[test]
    fn orthogonality_inputs() {
        assert!(!check_orthogonality_inputs(&[1, 2], &[2, 1]));
        assert!(check_orthogonality_inputs(&[1, 1], &[1, 2]));
        assert!(check_orthogonality_inputs(&[1, 2, 3], &[1, 2]));
    }

    #[test]
    fn restriction_drops_modes() {
        let op = MultilinearOperator::random(2, 2, 3, 9).unwrap();
        let r = op.restrict(2).unwrap();
        assert_eq!(r.column(&[2, 1]), op.column(&[2, 1]));
        assert!(r.bound() <= op.bound());
        assert_eq!(mode_tuples(3, 2).len(), 8);
        assert_eq!("i4".parse::<CompositeKind>().unwrap(), CompositeKind::I4);
    }
}
