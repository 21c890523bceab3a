//! Exact Fourier-Legendre coefficients of the simplex kernel, their scaled
//! floating values, the kernel norm, and a text coefficient database.

use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::legendre::{
    integral_from_minus_one, legendre_table, poly_mul, rat_int, rat_to_f64, Rational,
    RationalPoly, DEFAULT_MAX_INDEX,
};
use crate::Error;

pub const MAX_MULTIPLICITY: usize = 6;

/// A polynomial weight `ψ(s) = ((T-t)/2)^degree · poly(x)` with
/// `x = 2(s-t)/(T-t) - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weight {
    pub poly: RationalPoly,
    pub degree: u32,
}

impl Weight {
    pub fn new(poly: RationalPoly, degree: u32) -> Self {
        Self { poly, degree }
    }

    pub fn unit() -> Self {
        Self::new(RationalPoly::one(), 0)
    }

    /// `s - t`.
    pub fn s_minus_t() -> Self {
        Self::new(RationalPoly::from_ints(&[1, 1]), 1)
    }

    /// `t - s`.
    pub fn t_minus_s() -> Self {
        Self::new(RationalPoly::from_ints(&[-1, -1]), 1)
    }

    /// `T - s`.
    pub fn end_minus_s() -> Self {
        Self::new(RationalPoly::from_ints(&[1, -1]), 1)
    }

    pub fn mul(&self, other: &Weight) -> Weight {
        Weight::new(poly_mul(&self.poly, &other.poly), self.degree + other.degree)
    }

    pub fn is_unit(&self) -> bool {
        self.degree == 0 && self.poly == RationalPoly::one()
    }

    /// `ψ` at offset `u = s - t`.
    pub fn eval(&self, u: f64, interval_length: f64) -> f64 {
        let x = 2.0 * u / interval_length - 1.0;
        (0.5 * interval_length).powi(self.degree as i32) * self.poly.eval_f64(x)
    }
}

/// Per-level weights `ψ_1 .. ψ_k`; level 0 is the innermost integral.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightSpec {
    levels: Vec<Weight>,
}

impl WeightSpec {
    pub fn new(levels: Vec<Weight>) -> Result<Self, Error> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("weight spec needs at least one level".into()));
        }
        Ok(Self { levels })
    }

    pub fn unit(k: usize) -> Self {
        Self { levels: vec![Weight::unit(); k.max(1)] }
    }

    pub fn k(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Weight] {
        &self.levels
    }

    pub fn total_degree(&self) -> u32 {
        self.levels.iter().map(|w| w.degree).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.levels.iter().all(Weight::is_unit)
    }
}

/// Squared kernel norm `I_k = coeff · (T-t)^power`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelNorm {
    pub k: usize,
    pub coeff: Rational,
    pub power: u32,
}

impl KernelNorm {
    pub fn value(&self, interval_length: f64) -> f64 {
        rat_to_f64(&self.coeff) * interval_length.powi(self.power as i32)
    }
}

fn check_k(k: usize) -> Result<(), Error> {
    if k == 0 || k > MAX_MULTIPLICITY {
        return Err(Error::UnsupportedMultiplicity(k));
    }
    Ok(())
}

fn pow2(e: u32) -> Rational {
    Rational::from_integer(BigInt::one() << e as usize)
}

/// Exact nested integration over the reference simplex with a configurable
/// index ceiling.
#[derive(Clone, Debug)]
pub struct CoefficientEngine {
    max_index: usize,
    legendre: Vec<RationalPoly>,
}

impl Default for CoefficientEngine {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_INDEX)
    }
}

impl CoefficientEngine {
    pub fn new(max_index: usize) -> Self {
        Self { max_index, legendre: legendre_table(max_index) }
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    fn check_indices(&self, indices: &[usize]) -> Result<(), Error> {
        for &j in indices {
            if j > self.max_index {
                return Err(Error::IndexTooLarge { index: j, max: self.max_index });
            }
        }
        Ok(())
    }

    /// `C̄(j_1..j_k)`; `indices[0]` is the innermost index `j_1`.
    pub fn cbar(&self, indices: &[usize], weights: &WeightSpec) -> Result<Rational, Error> {
        let k = weights.k();
        check_k(k)?;
        if indices.len() != k {
            return Err(Error::Dimension(format!(
                "{} indices for multiplicity {k}",
                indices.len()
            )));
        }
        self.check_indices(indices)?;
        let mut f = RationalPoly::one();
        for (l, (&j, w)) in indices.iter().zip(weights.levels()).enumerate() {
            let g = poly_mul(&poly_mul(&w.poly, &self.legendre[j]), &f);
            if l + 1 == k {
                return Ok(integral_from_minus_one(&g).eval_one());
            }
            f = integral_from_minus_one(&g);
        }
        unreachable!("k >= 1")
    }

    /// Dense tensor of `C̄` over `0 <= j_l <= trunc[l]`.
    pub fn tensor(&self, weights: &WeightSpec, trunc: &[usize]) -> Result<CoefficientTensor, Error> {
        let k = weights.k();
        check_k(k)?;
        if trunc.len() != k {
            return Err(Error::Dimension(format!("{} truncation orders for multiplicity {k}", trunc.len())));
        }
        self.check_indices(trunc)?;
        let wp: Vec<Vec<RationalPoly>> = weights
            .levels()
            .iter()
            .zip(trunc)
            .map(|(w, &p)| (0..=p).map(|j| poly_mul(&w.poly, &self.legendre[j])).collect())
            .collect();
        let inner = trunc[0] + 1;
        let rest: usize = trunc[1..].iter().map(|p| p + 1).product();
        // each innermost index owns an independent subtree of partial integrals
        let parts: Vec<Vec<Rational>> = (0..inner)
            .into_par_iter()
            .map(|j1| {
                let f1 = integral_from_minus_one(&wp[0][j1]);
                let mut out = Vec::with_capacity(rest);
                if k == 1 {
                    out.push(f1.eval_one());
                } else {
                    subtree(&wp, 1, &f1, &mut out);
                }
                out
            })
            .collect();
        let mut values = vec![Rational::zero(); inner * rest];
        for (j1, part) in parts.into_iter().enumerate() {
            for (r, v) in part.into_iter().enumerate() {
                values[j1 + inner * r] = v;
            }
        }
        Ok(CoefficientTensor {
            k,
            trunc: trunc.to_vec(),
            values,
            weight_degree: weights.total_degree(),
        })
    }

    pub fn kernel_norm(&self, weights: &WeightSpec) -> Result<KernelNorm, Error> {
        let k = weights.k();
        check_k(k)?;
        let mut f = RationalPoly::one();
        for w in weights.levels() {
            f = integral_from_minus_one(&poly_mul(&poly_mul(&w.poly, &w.poly), &f));
        }
        let power = k as u32 + 2 * weights.total_degree();
        Ok(KernelNorm { k, coeff: f.eval_one() / pow2(power), power })
    }
}

// Level `l` iterates fastest-varying last; output order matches the tensor
// layout with j_1 removed (j_2 fastest).
fn subtree(wp: &[Vec<RationalPoly>], l: usize, f: &RationalPoly, out: &mut Vec<Rational>) {
    let k = wp.len();
    if l + 1 == k {
        for g in &wp[l] {
            out.push(integral_from_minus_one(&poly_mul(g, f)).eval_one());
        }
        return;
    }
    // collect per-level children first so that j_l varies fastest in `out`
    let children: Vec<Vec<Rational>> = wp[l]
        .iter()
        .map(|g| {
            let fl = integral_from_minus_one(&poly_mul(g, f));
            let mut sub = Vec::new();
            subtree(wp, l + 1, &fl, &mut sub);
            sub
        })
        .collect();
    let n_inner = children.len();
    let n_rest = children[0].len();
    let mut block = vec![Rational::zero(); n_inner * n_rest];
    for (jl, sub) in children.into_iter().enumerate() {
        for (r, v) in sub.into_iter().enumerate() {
            block[jl + n_inner * r] = v;
        }
    }
    out.extend(block);
}

/// `C̄` with the default engine; `indices[0]` is the innermost `j_1`.
pub fn cbar(indices: &[usize], weights: &WeightSpec) -> Result<Rational, Error> {
    let max = indices.iter().copied().max().unwrap_or(0);
    if max > DEFAULT_MAX_INDEX {
        return Err(Error::IndexTooLarge { index: max, max: DEFAULT_MAX_INDEX });
    }
    CoefficientEngine::new(max).cbar(indices, weights)
}

pub fn kernel_norm(weights: &WeightSpec) -> Result<KernelNorm, Error> {
    CoefficientEngine::new(0).kernel_norm(weights)
}

/// Exact `C_{j_k..j_1}^2 / (T-t)^{k+2D}`.
pub fn scaled_square(indices: &[usize], weight_degree: u32, cbar: &Rational) -> Rational {
    let prod: i64 = indices.iter().map(|&j| 2 * j as i64 + 1).product();
    let k = indices.len() as u32;
    cbar * cbar * rat_int(prod) / pow2(2 * (k + weight_degree))
}

/// Floating `C_{j_k..j_1}` including `∏√(2j+1)`, `2^{-(k+D)}` and
/// `(T-t)^{k/2+D}`.
pub fn scale_value(indices: &[usize], weight_degree: u32, cbar: &Rational, interval_length: f64) -> f64 {
    let prod: f64 = indices.iter().map(|&j| (2 * j + 1) as f64).product();
    let k = indices.len() as i32;
    let d = weight_degree as i32;
    prod.sqrt() * 0.5f64.powi(k + d) * interval_length.powf(0.5 * k as f64 + d as f64) * rat_to_f64(cbar)
}

pub fn c_scaled(indices: &[usize], weights: &WeightSpec, interval_length: f64) -> Result<f64, Error> {
    if !(interval_length > 0.0) {
        return Err(Error::InvalidInput(format!("interval length must be positive, got {interval_length}")));
    }
    let c = cbar(indices, weights)?;
    Ok(scale_value(indices, weights.total_degree(), &c, interval_length))
}

/// Dense `C̄` values over a rectangular index box, `j_1` fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientTensor {
    k: usize,
    trunc: Vec<usize>,
    values: Vec<Rational>,
    weight_degree: u32,
}

impl CoefficientTensor {
    pub fn from_parts(k: usize, trunc: Vec<usize>, values: Vec<Rational>, weight_degree: u32) -> Result<Self, Error> {
        check_k(k)?;
        let n: usize = trunc.iter().map(|p| p + 1).product();
        if trunc.len() != k || values.len() != n {
            return Err(Error::Dimension(format!(
                "tensor k={k} with {} orders and {} values",
                trunc.len(),
                values.len()
            )));
        }
        Ok(Self { k, trunc, values, weight_degree })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trunc(&self) -> &[usize] {
        &self.trunc
    }

    pub fn weight_degree(&self) -> u32 {
        self.weight_degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// Exponent of `(T-t)` in `C^2`.
    pub fn square_power(&self) -> u32 {
        self.k as u32 + 2 * self.weight_degree
    }

    pub fn offset(&self, indices: &[usize]) -> Option<usize> {
        if indices.len() != self.k {
            return None;
        }
        let mut off = 0;
        for l in (0..self.k).rev() {
            if indices[l] > self.trunc[l] {
                return None;
            }
            off = off * (self.trunc[l] + 1) + indices[l];
        }
        Some(off)
    }

    pub fn indices_of(&self, mut off: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.k);
        for p in &self.trunc {
            out.push(off % (p + 1));
            off /= p + 1;
        }
        out
    }

    pub fn get(&self, indices: &[usize]) -> Option<&Rational> {
        self.offset(indices).map(|o| &self.values[o])
    }

    /// `(indices, C̄)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> + '_ {
        self.values.iter().enumerate().map(|(o, v)| (self.indices_of(o), v))
    }

    pub fn scaled(&self, indices: &[usize], interval_length: f64) -> Option<f64> {
        self.get(indices)
            .map(|c| scale_value(indices, self.weight_degree, c, interval_length))
    }

    /// Exact `Σ C^2 / (T-t)^{k+2D}` over the box `j_l <= upto[l]`.
    pub fn sum_squares(&self, upto: &[usize]) -> Rational {
        let mut acc = Rational::zero();
        for (idx, c) in self.iter() {
            if c.is_zero() || idx.iter().zip(upto).any(|(j, p)| j > p) {
                continue;
            }
            acc += scaled_square(&idx, self.weight_degree, c);
        }
        acc
    }
}

pub const DB_MAGIC: &str = "fourier-ito-coefficients";
pub const DB_VERSION: u32 = 1;

/// Unit-weight tensors for each multiplicity in `ks` at uniform order `p`.
pub fn build_unit_tensors(p: usize, ks: &[usize]) -> Result<Vec<CoefficientTensor>, Error> {
    let engine = CoefficientEngine::new(p);
    ks.iter()
        .map(|&k| engine.tensor(&WeightSpec::unit(k), &vec![p; k]))
        .collect()
}

pub fn write_db<W: Write>(tensors: &[CoefficientTensor], mut w: W) -> Result<(), Error> {
    writeln!(w, "{DB_MAGIC}")?;
    writeln!(w, "version {DB_VERSION}")?;
    writeln!(w, "basis legendre")?;
    writeln!(w, "interval -1 1")?;
    writeln!(w, "ordering j1-innermost")?;
    writeln!(w, "record k,j1,...,jk,num,den")?;
    for t in tensors {
        if t.weight_degree != 0 {
            return Err(Error::InvalidInput("only unit-weight tensors can be stored".into()));
        }
        let p = t.trunc.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        writeln!(w, "tensor k={} p={} entries={}", t.k, p, t.len())?;
        for (idx, v) in t.iter() {
            write!(w, "{}", t.k)?;
            for j in idx {
                write!(w, ",{j}")?;
            }
            writeln!(w, ",{},{}", v.numer(), v.denom())?;
        }
    }
    writeln!(w, "end")?;
    w.flush()?;
    Ok(())
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Malformed(format!("line {line}: {msg}"))
}

pub fn read_db<R: BufRead>(r: R) -> Result<Vec<CoefficientTensor>, Error> {
    let mut lines = r.lines().enumerate().map(|(n, l)| (n + 1, l));
    let mut next = |what: &str| -> Result<(usize, String), Error> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?.trim_end().to_string())),
            None => Err(Error::Malformed(format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, magic) = next("header")?;
    if magic != DB_MAGIC {
        return Err(malformed(n, "missing header"));
    }
    let (n, ver) = next("version")?;
    let found: u32 = ver
        .strip_prefix("version ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| malformed(n, "bad version line"))?;
    if found != DB_VERSION {
        return Err(Error::VersionMismatch { found, expected: DB_VERSION });
    }
    for expect in ["basis legendre", "interval -1 1", "ordering j1-innermost", "record k,j1,...,jk,num,den"] {
        let (n, l) = next(expect)?;
        if l != expect {
            return Err(malformed(n, format!("expected `{expect}`, found `{l}`")));
        }
    }
    let mut out = Vec::new();
    loop {
        let (n, l) = next("tensor or end")?;
        if l == "end" {
            break;
        }
        let (k, trunc, entries) = parse_tensor_header(&l).ok_or_else(|| malformed(n, "bad tensor header"))?;
        let expected: usize = trunc.iter().map(|p| p + 1).product();
        if entries != expected || trunc.len() != k {
            return Err(malformed(n, "entry count does not match truncation"));
        }
        let mut values = vec![Rational::zero(); entries];
        let mut seen = vec![false; entries];
        for _ in 0..entries {
            let (n, rec) = next("record")?;
            let fields: Vec<&str> = rec.split(',').collect();
            if fields.len() != k + 3 {
                return Err(malformed(n, "wrong number of fields"));
            }
            let rk: usize = fields[0].parse().map_err(|_| malformed(n, "bad k"))?;
            if rk != k {
                return Err(malformed(n, "record multiplicity differs from tensor"));
            }
            let mut idx = Vec::with_capacity(k);
            for f in &fields[1..=k] {
                idx.push(f.parse::<usize>().map_err(|_| malformed(n, "bad index"))?);
            }
            let num: BigInt = fields[k + 1].parse().map_err(|_| malformed(n, "bad numerator"))?;
            let den: BigInt = fields[k + 2].parse().map_err(|_| malformed(n, "bad denominator"))?;
            if den <= BigInt::zero() {
                return Err(malformed(n, "denominator must be positive"));
            }
            let mut off = 0;
            for l in (0..k).rev() {
                if idx[l] > trunc[l] {
                    return Err(malformed(n, "index outside truncation"));
                }
                off = off * (trunc[l] + 1) + idx[l];
            }
            if seen[off] {
                return Err(malformed(n, "duplicate record"));
            }
            seen[off] = true;
            values[off] = Rational::new(num, den);
        }
        out.push(CoefficientTensor::from_parts(k, trunc, values, 0)?);
    }
    Ok(out)
}

fn parse_tensor_header(l: &str) -> Option<(usize, Vec<usize>, usize)> {
    let mut parts = l.split_whitespace();
    if parts.next()? != "tensor" {
        return None;
    }
    let k = parts.next()?.strip_prefix("k=")?.parse().ok()?;
    let trunc = parts
        .next()?
        .strip_prefix("p=")?
        .split(',')
        .map(|s| s.parse().ok())
        .collect::<Option<Vec<usize>>>()?;
    let entries = parts.next()?.strip_prefix("entries=")?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((k, trunc, entries))
}

pub fn export_db(path: &std::path::Path, p: usize, ks: &[usize]) -> Result<Vec<CoefficientTensor>, Error> {
    let tensors = build_unit_tensors(p, ks)?;
    let f = std::fs::File::create(path)?;
    write_db(&tensors, std::io::BufWriter::new(f))?;
    Ok(tensors)
}

pub fn import_db(path: &std::path::Path) -> Result<Vec<CoefficientTensor>, Error> {
    let f = std::fs::File::open(path)?;
    read_db(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::rat;

    fn outer_first(js: &[usize]) -> Vec<usize> {
        js.iter().rev().copied().collect()
    }

    #[test]
    fn spot_values() {
        let u3 = WeightSpec::unit(3);
        assert_eq!(cbar(&outer_first(&[3, 0, 1]), &u3).unwrap(), rat(2, 105));
        assert_eq!(cbar(&[0, 0, 0], &u3).unwrap(), rat(4, 3));
        assert_eq!(cbar(&outer_first(&[2, 1, 0, 0]), &WeightSpec::unit(4)).unwrap(), rat(2, 21));
        assert_eq!(cbar(&outer_first(&[1, 0, 1, 0, 0]), &WeightSpec::unit(5)).unwrap(), rat(4, 315));
    }

    #[test]
    fn scaled_values() {
        let u3 = WeightSpec::unit(3);
        assert!((c_scaled(&[0, 0, 0], &u3, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((c_scaled(&[0], &WeightSpec::unit(1), 4.0).unwrap() - 2.0).abs() < 1e-15);
        let v = c_scaled(&outer_first(&[3, 0, 1]), &u3, 1.0).unwrap();
        assert!((v - 21f64.sqrt() / 8.0 * 2.0 / 105.0).abs() < 1e-15);
        assert!(c_scaled(&[0], &WeightSpec::unit(1), 0.0).is_err());
    }

    #[test]
    fn kernel_norms() {
        let n = kernel_norm(&WeightSpec::unit(3)).unwrap();
        assert_eq!((n.coeff.clone(), n.power), (rat(1, 6), 3));
        let w = WeightSpec::new(vec![Weight::unit(), Weight::t_minus_s()]).unwrap();
        let n = kernel_norm(&w).unwrap();
        assert!((n.value(1.0) - 0.25).abs() < 1e-15);
        assert!((kernel_norm(&WeightSpec::unit(1)).unwrap().value(2.0) - 2.0).abs() < 1e-15);
        for k in 1..=6 {
            let n = kernel_norm(&WeightSpec::unit(k)).unwrap();
            let fact: i64 = (1..=k as i64).product();
            assert_eq!(n.coeff, rat(1, fact));
        }
    }

    #[test]
    fn rejects_bad_multiplicity() {
        assert!(matches!(cbar(&[0; 7], &WeightSpec::unit(7)), Err(Error::UnsupportedMultiplicity(7))));
        assert!(cbar(&[0, 0], &WeightSpec::unit(3)).is_err());
        assert!(cbar(&[13], &WeightSpec::unit(1)).is_err());
    }

    #[test]
    fn tensor_matches_pointwise() {
        let w = WeightSpec::new(vec![Weight::s_minus_t(), Weight::unit(), Weight::t_minus_s()]).unwrap();
        let engine = CoefficientEngine::new(4);
        let t = engine.tensor(&w, &[2, 3, 1]).unwrap();
        assert_eq!(t.len(), 3 * 4 * 2);
        for (idx, v) in t.iter() {
            assert_eq!(v, &engine.cbar(&idx, &w).unwrap());
        }
        let t1 = engine.tensor(&WeightSpec::unit(1), &[4]).unwrap();
        assert_eq!(t1.values()[0], rat(2, 1));
        assert!(t1.values()[1..].iter().all(|v| v.is_zero()));
    }

    #[test]
    fn weighted_single_integrals_truncate_at_one() {
        let engine = CoefficientEngine::new(8);
        for w in [Weight::s_minus_t(), Weight::end_minus_s()] {
            let t = engine.tensor(&WeightSpec::new(vec![w]).unwrap(), &[8]).unwrap();
            assert!(t.values()[2..].iter().all(|v| v.is_zero()));
        }
    }

    #[test]
    fn db_round_trip() {
        let tensors = build_unit_tensors(3, &[1, 2, 3]).unwrap();
        let mut buf = Vec::new();
        write_db(&tensors, &mut buf).unwrap();
        let back = read_db(&buf[..]).unwrap();
        assert_eq!(back, tensors);

        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() / 2];
        assert!(matches!(read_db(cut.as_bytes()), Err(Error::Malformed(_))));
        let bumped = text.replacen("version 1", "version 9", 1);
        assert!(matches!(read_db(bumped.as_bytes()), Err(Error::VersionMismatch { found: 9, .. })));
        let no_end = text.replace("end\n", "");
        assert!(matches!(read_db(no_end.as_bytes()), Err(Error::Malformed(_))));
    }
}
