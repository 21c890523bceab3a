//! Truncated expansions of iterated Itô integrals evaluated on Gaussian draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coefficients::{scale_value, CoefficientEngine, Weight, WeightSpec};
use crate::legendre::{integral_from_minus_one, RationalPoly};
use crate::partitions::{pair_partitions, PairPartition};
use crate::Error;

/// SplitMix64 finalizer over a combined key.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    fn fin(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let h = fin(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let h = fin(h ^ a.wrapping_mul(0xd6e8_feb8_6659_fd93));
    fin(h ^ b.wrapping_mul(0xa076_1d64_78bd_642f))
}

/// Standard Gaussian draw that depends only on `(seed, i, j)`.
pub fn noise_entry(seed: u64, i: usize, j: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64, j as u64));
    rng.sample(StandardNormal)
}

/// Draws `ζ_j^{(i)}`; rows are components `i = 1..=m`, columns `j = 0..=p_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseMatrix {
    m: usize,
    cols: usize,
    data: Vec<f64>,
    seed: Option<u64>,
}

impl NoiseMatrix {
    pub fn zeros(m: usize, p_max: usize) -> Self {
        Self { m, cols: p_max + 1, data: vec![0.0; m * (p_max + 1)], seed: None }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        let m = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if m == 0 || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("noise rows must be nonempty and of equal length".into()));
        }
        Ok(Self { m, cols, data: rows.concat(), seed: None })
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn p_max(&self) -> usize {
        self.cols - 1
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `ζ_j^{(i)}` for component `i >= 1`.
    #[inline]
    pub fn zeta(&self, i: usize, j: usize) -> f64 {
        self.data[(i - 1) * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i - 1) * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[(i - 1) * self.cols..i * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[(i - 1) * self.cols..i * self.cols]
    }

    pub fn check(&self, components: &[usize], p: usize) -> Result<(), Error> {
        if let Some(&i) = components.iter().find(|&&i| i == 0 || i > self.m) {
            return Err(Error::Dimension(format!("component {i} outside 1..={}", self.m)));
        }
        if p >= self.cols {
            return Err(Error::Dimension(format!(
                "basis index {p} exceeds noise columns 0..={}",
                self.cols - 1
            )));
        }
        Ok(())
    }
}

pub fn gen_noise(m: usize, p_max: usize, master_seed: u64) -> NoiseMatrix {
    let mut out = NoiseMatrix::zeros(m, p_max);
    for i in 1..=m {
        for j in 0..=p_max {
            out.set(i, j, noise_entry(master_seed, i, j));
        }
    }
    out.seed = Some(master_seed);
    out
}

/// Components `(i_1..i_k)`; `0` is integration with respect to time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(v: Vec<usize>) -> Result<Self, Error> {
        if v.is_empty() {
            return Err(Error::InvalidInput("multi-index must have at least one level".into()));
        }
        Ok(Self(v))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }
}

/// Per-level truncation orders.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncationSpec(pub Vec<usize>);

impl TruncationSpec {
    pub fn uniform(k: usize, q: usize) -> Self {
        Self(vec![q; k])
    }
}

/// An integral whose time levels were absorbed into the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedIntegral {
    pub components: Vec<usize>,
    pub weights: WeightSpec,
    /// Original level of each remaining stochastic level.
    pub kept: Vec<usize>,
}

/// Absorb leading (innermost) and trailing (outermost) time levels into the
/// adjacent stochastic weight. Interior time levels are rejected.
pub fn fold_time_levels(idx: &MultiIndex, weights: &WeightSpec) -> Result<FoldedIntegral, Error> {
    if idx.k() != weights.k() {
        return Err(Error::Dimension(format!("{} indices for {} weights", idx.k(), weights.k())));
    }
    if idx.0.iter().all(|&i| i == 0) {
        return Err(Error::InvalidInput("at least one level must be stochastic".into()));
    }
    let mut comps = idx.0.clone();
    let mut levels: Vec<Weight> = weights.levels().to_vec();
    let mut kept: Vec<usize> = (0..comps.len()).collect();
    while comps[0] == 0 {
        // ∫_t^{s} ψ_1 dτ = ((T-t)/2)^{d+1} W(x), W(-1) = 0
        let w0 = levels.remove(0);
        comps.remove(0);
        kept.remove(0);
        let anti = Weight::new(integral_from_minus_one(&w0.poly), w0.degree + 1);
        levels[0] = levels[0].mul(&anti);
    }
    while *comps.last().expect("nonempty") == 0 {
        // ∫_s^T ψ_k dτ = ((T-t)/2)^{d+1} (W(1) - W(x))
        let wk = levels.pop().expect("nonempty");
        comps.pop();
        kept.pop();
        let w = integral_from_minus_one(&wk.poly);
        let tail = &RationalPoly::constant(w.eval_one()) - &w;
        let last = levels.len() - 1;
        levels[last] = levels[last].mul(&Weight::new(tail, wk.degree + 1));
    }
    if comps.contains(&0) {
        return Err(Error::InvalidInput(
            "time integration at an interior level is not supported".into(),
        ));
    }
    Ok(FoldedIntegral { components: comps, weights: WeightSpec::new(levels)?, kept })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub c: f64,
    /// `(j_1..j_k)`, innermost first.
    pub js: Vec<usize>,
}

/// Floating coefficients `C_{j_k..j_1}` of a truncated expansion, sorted by
/// decreasing magnitude (ties in storage order); exact zeros dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCoefficients {
    k: usize,
    trunc: Vec<usize>,
    terms: Vec<Term>,
    count: usize,
}

impl ExpansionCoefficients {
    pub fn new(weights: &WeightSpec, trunc: &[usize], interval_length: f64) -> Result<Self, Error> {
        if !(interval_length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "interval length must be positive, got {interval_length}"
            )));
        }
        let max = trunc.iter().copied().max().unwrap_or(0);
        let tensor = CoefficientEngine::new(max).tensor(weights, trunc)?;
        let d = tensor.weight_degree();
        let mut terms: Vec<Term> = tensor
            .iter()
            .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
            .map(|(js, v)| Term { c: scale_value(&js, d, v, interval_length), js })
            .collect();
        terms.sort_by(|a, b| b.c.abs().total_cmp(&a.c.abs()));
        Ok(Self { k: weights.k(), trunc: trunc.to_vec(), terms, count: tensor.len() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trunc(&self) -> &[usize] {
        &self.trunc
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of index tuples in the truncation box (zeros included).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn nonzero(&self) -> usize {
        self.terms.len()
    }

    pub fn max_index(&self) -> usize {
        self.trunc.iter().copied().max().unwrap_or(0)
    }
}

/// Partitions whose pairs all join equal components, with the sign `(-1)^r`.
pub fn active_partitions(components: &[usize]) -> Vec<(f64, PairPartition)> {
    let k = components.len();
    let mut out = Vec::new();
    for r in 1..=k / 2 {
        let sign = if r % 2 == 1 { -1.0 } else { 1.0 };
        for p in pair_partitions(k, r).expect("2r <= k") {
            if p.pairs.iter().all(|&(a, b)| components[a] == components[b]) {
                out.push((sign, p));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Truncated expansion for one stochastic component assignment.
#[derive(Clone, Debug)]
pub struct ExpansionPlan {
    coeffs: ExpansionCoefficients,
    components: Vec<usize>,
    partitions: Vec<(f64, PairPartition)>,
    compensated: bool,
}

impl ExpansionPlan {
    /// Folds time levels, then builds coefficients for the stochastic levels.
    /// `trunc` may list one order per original level or per stochastic level.
    pub fn new(
        idx: &MultiIndex,
        weights: &WeightSpec,
        trunc: &TruncationSpec,
        interval_length: f64,
    ) -> Result<Self, Error> {
        let folded = fold_time_levels(idx, weights)?;
        let orders: Vec<usize> = if trunc.0.len() == idx.k() {
            folded.kept.iter().map(|&l| trunc.0[l]).collect()
        } else if trunc.0.len() == folded.components.len() {
            trunc.0.clone()
        } else {
            return Err(Error::Dimension(format!(
                "{} truncation orders for {} levels",
                trunc.0.len(),
                idx.k()
            )));
        };
        let coeffs = ExpansionCoefficients::new(&folded.weights, &orders, interval_length)?;
        Ok(Self::from_coefficients(coeffs, folded.components))
    }

    pub fn from_coefficients(coeffs: ExpansionCoefficients, components: Vec<usize>) -> Self {
        assert_eq!(coeffs.k(), components.len(), "component count must match multiplicity");
        let partitions = active_partitions(&components);
        Self { coeffs, components, partitions, compensated: false }
    }

    pub fn compensated(mut self, on: bool) -> Self {
        self.compensated = on;
        self
    }

    pub fn coefficients(&self) -> &ExpansionCoefficients {
        &self.coeffs
    }

    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn evaluate(&self, noise: &NoiseMatrix) -> Result<f64, Error> {
        noise.check(&self.components, self.coeffs.max_index())?;
        Ok(self.evaluate_unchecked(noise))
    }

    pub fn evaluate_unchecked(&self, noise: &NoiseMatrix) -> f64 {
        let comps = &self.components;
        let mut plain = 0.0;
        let mut acc = Neumaier::default();
        for t in &self.coeffs.terms {
            let mut v: f64 = t.js.iter().zip(comps).map(|(&j, &i)| noise.zeta(i, j)).product();
            for (sign, p) in &self.partitions {
                if p.pairs.iter().all(|&(a, b)| t.js[a] == t.js[b]) {
                    let s: f64 = p.singles.iter().map(|&l| noise.zeta(comps[l], t.js[l])).product();
                    v += sign * s;
                }
            }
            if self.compensated {
                acc.add(t.c * v);
            } else {
                plain += t.c * v;
            }
        }
        if self.compensated {
            acc.value()
        } else {
            plain
        }
    }
}

/// One realization of the truncated expansion.
pub fn approx_iterated(
    idx: &MultiIndex,
    weights: &WeightSpec,
    trunc: &TruncationSpec,
    noise: &NoiseMatrix,
    interval_length: f64,
) -> Result<f64, Error> {
    ExpansionPlan::new(idx, weights, trunc, interval_length)?.evaluate(noise)
}

/// Inputs of the equal-index closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteInputs {
    /// `∫ ψ dw`.
    pub delta: f64,
    /// `∫ ψ^2 ds`.
    pub big_delta: f64,
    pub k: usize,
}

pub fn hermite_exact(h: HermiteInputs) -> Result<f64, Error> {
    if !(h.big_delta > 0.0) {
        return Err(Error::InvalidInput("Δ must be positive".into()));
    }
    let d = h.delta;
    let q = h.big_delta;
    let v = match h.k {
        1 => d,
        2 => d * d - q,
        3 => d.powi(3) - 3.0 * d * q,
        4 => d.powi(4) - 6.0 * d * d * q + 3.0 * q * q,
        5 => d.powi(5) - 10.0 * d.powi(3) * q + 15.0 * d * q * q,
        6 => d.powi(6) - 15.0 * d.powi(4) * q + 45.0 * d * d * q * q - 15.0 * q.powi(3),
        k => return Err(Error::UnsupportedMultiplicity(k)),
    };
    let fact: f64 = (1..=h.k).map(|x| x as f64).product();
    Ok(v / fact)
}

pub fn i1_approx(r: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r], 0)?;
    Ok(interval_length.sqrt() * noise.zeta(r, 0))
}

/// `∫_t^T ∫_t^s dτ dw_s`; exact once `ζ_0, ζ_1` are known.
pub fn i01_approx(r: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r], 1)?;
    Ok(0.5 * interval_length.powf(1.5) * (noise.zeta(r, 0) + noise.zeta(r, 1) / 3f64.sqrt()))
}

/// `∫_t^T ∫_t^s dw_τ ds`.
pub fn i10_approx(r: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r], 1)?;
    Ok(0.5 * interval_length.powf(1.5) * (noise.zeta(r, 0) - noise.zeta(r, 1) / 3f64.sqrt()))
}

/// Order-`q` approximation of `∫_t^T ∫_t^s dw^{(r1)} dw^{(r2)}`.
pub fn i11_approx(r1: usize, r2: usize, q: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r1, r2], q)?;
    let z = |r, j| noise.zeta(r, j);
    let mut s = z(r1, 0) * z(r2, 0);
    for i in 1..=q {
        let d = ((4 * i * i - 1) as f64).sqrt();
        s += (z(r1, i - 1) * z(r2, i) - z(r1, i) * z(r2, i - 1)) / d;
    }
    if r1 == r2 {
        s -= 1.0;
    }
    Ok(0.5 * interval_length * s)
}

// (2i+3)·√((2i+1)(2i+5)); agrees with the generic coefficients of the (t-s) weight
fn j_den(i: usize) -> f64 {
    (2 * i + 3) as f64 * (((2 * i + 1) * (2 * i + 5)) as f64).sqrt()
}

fn j_diag(i: usize) -> f64 {
    ((2 * i as i64 - 1) * (2 * i as i64 + 3)) as f64
}

/// Order-`q` approximation of `∫_t^T (t-s) ∫_t^s dw^{(r1)} dw^{(r2)}`.
pub fn j01_approx(r1: usize, r2: usize, q: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r1, r2], (q + 2).max(1))?;
    let z = |r, j| noise.zeta(r, j);
    let mut s = z(r1, 0) * z(r2, 1) / 3f64.sqrt();
    for i in 0..=q {
        let a = (i + 2) as f64 * z(r1, i) * z(r2, i + 2) - (i + 1) as f64 * z(r1, i + 2) * z(r2, i);
        s += a / j_den(i) - z(r1, i) * z(r2, i) / j_diag(i);
    }
    let l = interval_length;
    Ok(-0.5 * l * i11_approx(r1, r2, q, noise, l)? - 0.25 * l * l * s)
}

/// Order-`q` approximation of `∫_t^T ∫_t^s (t-τ) dw_τ^{(r1)} dw_s^{(r2)}`.
pub fn j10_approx(r1: usize, r2: usize, q: usize, noise: &NoiseMatrix, interval_length: f64) -> Result<f64, Error> {
    noise.check(&[r1, r2], (q + 2).max(1))?;
    let z = |r, j| noise.zeta(r, j);
    let mut s = z(r2, 0) * z(r1, 1) / 3f64.sqrt();
    for i in 0..=q {
        let a = (i + 1) as f64 * z(r2, i + 2) * z(r1, i) - (i + 2) as f64 * z(r2, i) * z(r1, i + 2);
        s += a / j_den(i) + z(r1, i) * z(r2, i) / j_diag(i);
    }
    let l = interval_length;
    Ok(-0.5 * l * i11_approx(r1, r2, q, noise, l)? - 0.25 * l * l * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn noise_is_shape_independent() {
        let a = gen_noise(3, 4, 11);
        let b = gen_noise(5, 9, 11);
        for i in 1..=3 {
            for j in 0..=4 {
                assert_eq!(a.zeta(i, j), b.zeta(i, j));
            }
        }
        assert_eq!(gen_noise(3, 4, 11), a);
        assert_ne!(gen_noise(3, 4, 12), a);
    }

    #[test]
    fn k1_examples() {
        let noise = NoiseMatrix::from_rows(vec![vec![1.5, 0.3, -0.2]]).unwrap();
        for p in 0..=2 {
            let v = approx_iterated(&MultiIndex(vec![1]), &WeightSpec::unit(1), &TruncationSpec(vec![p]), &noise, 4.0)
                .unwrap();
            assert!(close(v, 3.0, 1e-15));
        }
    }

    #[test]
    fn k2_equal_index_at_zero_draws() {
        let noise = NoiseMatrix::zeros(2, 6);
        for q in 0..=6 {
            let v = approx_iterated(&MultiIndex(vec![1, 1]), &WeightSpec::unit(2), &TruncationSpec::uniform(2, q), &noise, 1.0)
                .unwrap();
            assert!(close(v, -0.5, 1e-14), "{q} {v}");
        }
    }

    #[test]
    fn k2_matches_closed_form() {
        let noise = gen_noise(2, 8, 5);
        for q in 0..=8 {
            for (r1, r2) in [(1, 2), (2, 1), (1, 1), (2, 2)] {
                let g = approx_iterated(&MultiIndex(vec![r1, r2]), &WeightSpec::unit(2), &TruncationSpec::uniform(2, q), &noise, 0.7)
                    .unwrap();
                let c = i11_approx(r1, r2, q, &noise, 0.7).unwrap();
                assert!(close(g, c, 1e-13), "{q} {r1}{r2} {g} {c}");
            }
        }
    }

    #[test]
    fn k2_equal_index_is_exact() {
        let noise = gen_noise(1, 10, 9);
        let z0 = noise.zeta(1, 0);
        for q in 0..=10 {
            let v = i11_approx(1, 1, q, &noise, 0.3).unwrap();
            assert!(close(v, 0.15 * (z0 * z0 - 1.0), 1e-14));
        }
    }

    #[test]
    fn folding_shapes() {
        let f = fold_time_levels(&MultiIndex(vec![0, 3]), &WeightSpec::unit(2)).unwrap();
        assert_eq!(f.components, vec![3]);
        assert_eq!(f.weights.levels()[0], Weight::s_minus_t());
        let f = fold_time_levels(&MultiIndex(vec![3, 0]), &WeightSpec::unit(2)).unwrap();
        assert_eq!(f.weights.levels()[0], Weight::end_minus_s());
        assert!(fold_time_levels(&MultiIndex(vec![1, 0, 2]), &WeightSpec::unit(3)).is_err());
        assert!(fold_time_levels(&MultiIndex(vec![0, 0]), &WeightSpec::unit(2)).is_err());
    }

    #[test]
    fn weighted_single_integrals() {
        let noise = gen_noise(2, 50, 3);
        let l = 0.8;
        for (idx, closed) in [
            (vec![0, 2], i01_approx(2, &noise, l).unwrap()),
            (vec![2, 0], i10_approx(2, &noise, l).unwrap()),
        ] {
            let one = approx_iterated(&MultiIndex(idx.clone()), &WeightSpec::unit(2), &TruncationSpec(vec![1]), &noise, l).unwrap();
            let fifty = approx_iterated(&MultiIndex(idx), &WeightSpec::unit(2), &TruncationSpec(vec![50]), &noise, l).unwrap();
            assert_eq!(one, fifty);
            assert!(close(one, closed, 1e-14));
        }
    }

    #[test]
    fn hermite_examples() {
        let h = |k| hermite_exact(HermiteInputs { delta: 0.0, big_delta: 1.0, k }).unwrap();
        assert!(close(h(2), -0.5, 1e-15));
        assert!(close(h(4), 0.125, 1e-15));
        assert!(close(h(6), -15.0 / 720.0, 1e-15));
        assert!(hermite_exact(HermiteInputs { delta: 0.0, big_delta: 1.0, k: 7 }).is_err());
    }

    #[test]
    fn weighted_pairs_at_zero_draws() {
        let noise = NoiseMatrix::zeros(2, 8);
        for q in 0..=4 {
            assert_eq!(j01_approx(1, 2, q, &noise, 1.0).unwrap(), 0.0);
            assert_eq!(j10_approx(1, 2, q, &noise, 1.0).unwrap(), 0.0);
            assert!(close(i11_approx(1, 1, q, &noise, 0.6).unwrap(), -0.3, 1e-15));
        }
    }

    #[test]
    fn noise_range_checked() {
        let noise = NoiseMatrix::zeros(2, 2);
        assert!(j01_approx(1, 2, 1, &noise, 1.0).is_err());
        assert!(i1_approx(3, &noise, 1.0).is_err());
        assert!(approx_iterated(&MultiIndex(vec![1, 2]), &WeightSpec::unit(2), &TruncationSpec::uniform(2, 3), &noise, 1.0).is_err());
    }
}
