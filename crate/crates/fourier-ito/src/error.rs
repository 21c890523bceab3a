//! Closed-form mean-square errors and bounds of truncated expansions.

use num_traits::{Signed, Zero};

use crate::coefficients::{scaled_square, CoefficientEngine, CoefficientTensor, WeightSpec};
use crate::legendre::{rat, rat_int, rat_to_f64, Rational};
use crate::partitions::stabilizer;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MseKind {
    Exact,
    UpperBound,
}

impl MseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MseKind::Exact => "exact",
            MseKind::UpperBound => "upper_bound",
        }
    }
}

/// An error value `coeff · (T-t)^power` with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct MseReport {
    pub value: f64,
    pub coeff: Rational,
    pub power: u32,
    pub kind: MseKind,
    pub tag: &'static str,
    pub interval_length: f64,
    pub truncation: Vec<usize>,
    /// Set when a negative value had to be clamped to zero.
    pub clamped: bool,
}

impl MseReport {
    fn new(coeff: Rational, power: u32, kind: MseKind, tag: &'static str, interval_length: f64, truncation: Vec<usize>) -> Self {
        let clamped = coeff.is_negative();
        let coeff = if clamped { Rational::zero() } else { coeff };
        let value = rat_to_f64(&coeff) * interval_length.powi(power as i32);
        Self { value, coeff, power, kind, tag, interval_length, truncation, clamped }
    }
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}

fn check_interval(l: f64) -> Result<(), Error> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {l}")));
    }
    Ok(())
}

fn tensor_for(weights: &WeightSpec, trunc: &[usize]) -> Result<CoefficientTensor, Error> {
    let max = trunc.iter().copied().max().unwrap_or(0);
    CoefficientEngine::new(max).tensor(weights, trunc)
}

/// Exact `I_k - Σ C^2` as a coefficient of `(T-t)^{k+2D}`.
pub fn parseval_gap(weights: &WeightSpec, trunc: &[usize]) -> Result<(Rational, u32), Error> {
    let tensor = tensor_for(weights, trunc)?;
    let norm = CoefficientEngine::new(0).kernel_norm(weights)?;
    Ok((norm.coeff - tensor.sum_squares(trunc), norm.power))
}

/// `k! (I_k - Σ C^2)`, valid for any index pattern.
pub fn mse_bound(weights: &WeightSpec, trunc: &[usize], interval_length: f64) -> Result<MseReport, Error> {
    check_interval(interval_length)?;
    let (gap, power) = parseval_gap(weights, trunc)?;
    let k = weights.k();
    Ok(MseReport::new(gap * rat_int(factorial(k)), power, MseKind::UpperBound, "parseval-bound", interval_length, trunc.to_vec()))
}

/// `I_k - Σ C^2` for pairwise distinct nonzero indices.
pub fn mse_exact_distinct(weights: &WeightSpec, trunc: &[usize], interval_length: f64) -> Result<MseReport, Error> {
    check_interval(interval_length)?;
    if weights.k() > 5 {
        return Err(Error::UnsupportedMultiplicity(weights.k()));
    }
    let (gap, power) = parseval_gap(weights, trunc)?;
    Ok(MseReport::new(gap, power, MseKind::Exact, "exact-distinct", interval_length, trunc.to_vec()))
}

/// Exact distinct-index error coefficients for `q = 0..=q_max` (unit weights).
pub fn distinct_error_series(k: usize, q_max: usize) -> Result<Vec<Rational>, Error> {
    if k == 0 || k > 5 {
        return Err(Error::UnsupportedMultiplicity(k));
    }
    let weights = WeightSpec::unit(k);
    let tensor = tensor_for(&weights, &vec![q_max; k])?;
    let norm = CoefficientEngine::new(0).kernel_norm(&weights)?;
    Ok((0..=q_max).map(|q| &norm.coeff - tensor.sum_squares(&vec![q; k])).collect())
}

/// Equality classes of a multi-index, canonically labelled by first occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexPattern {
    labels: Vec<usize>,
}

impl IndexPattern {
    pub fn from_indices(indices: &[usize]) -> Result<Self, Error> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty index pattern".into()));
        }
        let mut seen: Vec<usize> = Vec::new();
        let labels = indices
            .iter()
            .map(|i| match seen.iter().position(|s| s == i) {
                Some(p) => p,
                None => {
                    seen.push(*i);
                    seen.len() - 1
                }
            })
            .collect();
        Ok(Self { labels })
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_distinct(&self) -> bool {
        self.labels.iter().enumerate().all(|(p, &l)| p == l)
    }

    pub fn tag(&self) -> Option<&'static str> {
        if self.is_distinct() && self.k() <= 5 {
            return Some("exact-distinct");
        }
        match self.labels.as_slice() {
            [0, 0] => Some("exact-i1=i2"),
            [0, 0, 1] => Some("exact-i1=i2!=i3"),
            [0, 0, 1, 1] => Some("exact-i1=i2!=i3=i4"),
            [0, 0, 1, 1, 0] => Some("exact-i1=i2=i5!=i3=i4"),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        let names: Vec<String> = self.labels.iter().map(|l| ((b'a' + *l as u8) as char).to_string()).collect();
        format!("({})", names.join(","))
    }
}

/// Exact error for the supported repeated-index patterns (unit weights, uniform order).
pub fn mse_exact_case(pattern: &IndexPattern, p: usize, interval_length: f64) -> Result<MseReport, Error> {
    check_interval(interval_length)?;
    let tag = pattern.tag().ok_or_else(|| Error::UnsupportedPattern(pattern.describe()))?;
    let k = pattern.k();
    let weights = WeightSpec::unit(k);
    let trunc = vec![p; k];
    let tensor = tensor_for(&weights, &trunc)?;
    let norm = CoefficientEngine::new(0).kernel_norm(&weights)?;
    let perms = stabilizer(pattern.labels());
    let scale = Rational::from_integer(num_bigint::BigInt::from(1) << (2 * k));
    let mut acc = Rational::zero();
    for (js, c) in tensor.iter() {
        if c.is_zero() {
            continue;
        }
        let prod: i64 = js.iter().map(|&j| 2 * j as i64 + 1).product();
        let mut partner = Rational::zero();
        for s in &perms {
            let moved: Vec<usize> = s.iter().map(|&m| js[m]).collect();
            partner += tensor.get(&moved).expect("uniform box is permutation invariant");
        }
        acc += c * partner * rat_int(prod);
    }
    let coeff = norm.coeff - acc / scale;
    Ok(MseReport::new(coeff, k as u32, MseKind::Exact, tag, interval_length, trunc))
}

/// Coefficient of `(T-t)^4` in the exact error of the weighted pair integrals
/// (distinct components).
pub fn e_q(q: usize) -> Rational {
    let mut s = rat(5, 9);
    for i in 2..=q as i64 {
        s -= rat(2, 4 * i * i - 1);
    }
    for i in 1..=q as i64 {
        s -= rat(1, (2 * i - 1).pow(2) * (2 * i + 3).pow(2));
    }
    for i in 0..=q as i64 {
        s -= rat((i + 2).pow(2) + (i + 1).pow(2), (2 * i + 1) * (2 * i + 5) * (2 * i + 3).pow(2));
    }
    s / rat_int(16)
}

pub fn e_q_value(q: usize, interval_length: f64) -> f64 {
    rat_to_f64(&e_q(q)) * interval_length.powi(4)
}

/// Coefficient of `(T-t)^2` in the k=2 distinct-index error, as a partial sum.
pub fn g_q(q: usize) -> Rational {
    let mut s = rat(1, 2);
    for i in 1..=q as i64 {
        s -= rat(1, 4 * i * i - 1);
    }
    s / rat_int(2)
}

/// Telescoped form `1 / (4(2q+1))` of [`g_q`].
pub fn telescoped_k2(q: usize) -> Rational {
    rat(1, 4 * (2 * q as i64 + 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinQRow {
    pub interval_length: f64,
    pub q: usize,
    pub q1: usize,
}

/// Smallest orders with k=2 and k=3 distinct-index errors `<= (T-t)^4`.
pub fn min_q_table(thresholds: &[f64]) -> Result<Vec<MinQRow>, Error> {
    for &l in thresholds {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::InvalidInput(format!("interval length must lie in (0, 1), got {l}")));
        }
    }
    let mut cap = 12;
    let mut series = distinct_error_series(3, cap)?;
    let mut out = Vec::with_capacity(thresholds.len());
    for &l in thresholds {
        // L^2/(4(2q+1)) <= L^4  <=>  (2q+1) >= 1/(4 L^2)
        let mut q = (((1.0 / (4.0 * l * l)) - 1.0) / 2.0).ceil().max(0.0) as usize;
        while q > 0 && rat_to_f64(&telescoped_k2(q - 1)) * l * l <= l.powi(4) {
            q -= 1;
        }
        while rat_to_f64(&telescoped_k2(q)) * l * l > l.powi(4) {
            q += 1;
        }
        let q1 = loop {
            if let Some(q1) = series.iter().position(|c| rat_to_f64(c) * l.powi(3) <= l.powi(4)) {
                break q1;
            }
            cap *= 2;
            series = distinct_error_series(3, cap)?;
        };
        out.push(MinQRow { interval_length: l, q, q1 });
    }
    Ok(out)
}

/// Weighted pair-integral error `E_q (T-t)^4` as a report.
pub fn weighted_pair_error(q: usize, interval_length: f64) -> Result<MseReport, Error> {
    check_interval(interval_length)?;
    Ok(MseReport::new(e_q(q), 4, MseKind::Exact, "weighted-pair", interval_length, vec![q]))
}

/// Exact `Σ C^2` restricted to a uniform box, for diagnostics.
pub fn sum_of_squares(weights: &WeightSpec, q: usize) -> Result<Rational, Error> {
    let trunc = vec![q; weights.k()];
    Ok(tensor_for(weights, &trunc)?.sum_squares(&trunc))
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

/// Exact `C^2` coefficient for one index tuple of unit weights.
pub fn unit_square(js: &[usize]) -> Result<Rational, Error> {
    let c = crate::coefficients::cbar(js, &WeightSpec::unit(js.len()))?;
    Ok(scaled_square(js, 0, &c))
}
