//! Monte Carlo validation against a fine-grid reference.
//!
//! Every replication draws one discrete Wiener path. The reference integral is
//! a left-point nested sum on that path, and the expansion draws `ζ_j` are
//! midpoint sums of `φ_j` against the same increments, so the squared
//! difference estimates the mean-square error of the expansion directly.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coefficients::{Weight, WeightSpec};
use crate::error::{distinct_error_series, e_q, telescoped_k2};
use crate::expansion::{
    i01_approx, i10_approx, i11_approx, i1_approx, j01_approx, j10_approx, mix_seed, ExpansionPlan,
    MultiIndex, NoiseMatrix, TruncationSpec,
};
use crate::legendre::{rat_to_f64, shifted_basis_values};
use crate::qwiener::{bound_generic, mode_tuples, GenericPlan, MultilinearOperator, QWienerSpec};
use crate::Error;

/// Replications handled by one unit of parallel work.
pub const BLOCK: usize = 500;

const PATH_STREAM: u64 = 0x7061_7468;

/// Increments `Δw_n^{(i)}` of `m` independent components on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    steps: usize,
    interval_length: f64,
    inc: Vec<Vec<f64>>,
}

impl GridPath {
    /// Path number `rep` of the stream identified by `seed`.
    pub fn generate(m: usize, steps: usize, interval_length: f64, seed: u64, rep: u64) -> Result<Self, Error> {
        if m == 0 || steps < 2 {
            return Err(Error::InvalidInput(format!("need m >= 1 and N >= 2, got m={m}, N={steps}")));
        }
        if !(interval_length > 0.0 && interval_length.is_finite()) {
            return Err(Error::InvalidInput(format!("interval length must be positive, got {interval_length}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, rep, PATH_STREAM));
        let sd = (interval_length / steps as f64).sqrt();
        let inc = (0..m)
            .map(|_| (0..steps).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        Ok(Self { steps, interval_length, inc })
    }

    pub fn from_increments(inc: Vec<Vec<f64>>, interval_length: f64) -> Result<Self, Error> {
        let steps = inc.first().map_or(0, Vec::len);
        if inc.is_empty() || steps < 2 || inc.iter().any(|r| r.len() != steps) {
            return Err(Error::Dimension("increment rows must be nonempty, equal length and >= 2".into()));
        }
        Ok(Self { steps, interval_length, inc })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn components(&self) -> usize {
        self.inc.len()
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }

    pub fn dt(&self) -> f64 {
        self.interval_length / self.steps as f64
    }

    /// Increments of component `i >= 1`.
    pub fn increments(&self, i: usize) -> &[f64] {
        &self.inc[i - 1]
    }

    pub fn total(&self, i: usize) -> f64 {
        self.inc[i - 1].iter().sum()
    }

    /// Same path on the grid with every second point removed.
    pub fn coarsen(&self) -> Result<Self, Error> {
        if self.steps % 2 != 0 || self.steps < 4 {
            return Err(Error::InvalidInput(format!("cannot halve a grid of {} steps", self.steps)));
        }
        let inc = self.inc.iter().map(|r| r.chunks(2).map(|c| c[0] + c[1]).collect()).collect();
        Ok(Self { steps: self.steps / 2, interval_length: self.interval_length, inc })
    }
}

/// Left-point nested sum prepared for one grid size.
#[derive(Clone, Debug)]
pub struct ReferenceSim {
    comps: Vec<usize>,
    psi: Vec<Vec<f64>>,
    steps: usize,
    dt: f64,
}

pub const MAX_REFERENCE_K: usize = 4;

impl ReferenceSim {
    pub fn new(idx: &MultiIndex, weights: &WeightSpec, steps: usize, interval_length: f64) -> Result<Self, Error> {
        let k = idx.k();
        if k > MAX_REFERENCE_K {
            return Err(Error::UnsupportedMultiplicity(k));
        }
        if weights.k() != k {
            return Err(Error::Dimension(format!("{k} indices for {} weights", weights.k())));
        }
        if steps < 2 {
            return Err(Error::InvalidInput("reference grid needs at least 2 steps".into()));
        }
        let dt = interval_length / steps as f64;
        let psi = weights
            .levels()
            .iter()
            .map(|w: &Weight| (0..steps).map(|n| w.eval(n as f64 * dt, interval_length)).collect())
            .collect();
        Ok(Self { comps: idx.0.clone(), psi, steps, dt })
    }

    pub fn eval(&self, path: &GridPath) -> f64 {
        debug_assert_eq!(path.steps(), self.steps);
        let k = self.comps.len();
        let incs: Vec<Option<&[f64]>> =
            self.comps.iter().map(|&i| if i == 0 { None } else { Some(path.increments(i)) }).collect();
        let mut s = [0.0f64; MAX_REFERENCE_K + 1];
        s[0] = 1.0;
        for n in 0..self.steps {
            for l in (1..=k).rev() {
                let d = incs[l - 1].map_or(self.dt, |x| x[n]);
                s[l] += self.psi[l - 1][n] * s[l - 1] * d;
            }
        }
        s[k]
    }
}

/// Reference value of `J[ψ^{(k)}]^{(i_1..i_k)}` on the path.
pub fn simulate_reference(idx: &MultiIndex, weights: &WeightSpec, path: &GridPath) -> Result<f64, Error> {
    if let Some(&i) = idx.0.iter().find(|&&i| i > path.components()) {
        return Err(Error::Dimension(format!("component {i} outside the path's {}", path.components())));
    }
    Ok(ReferenceSim::new(idx, weights, path.steps(), path.interval_length())?.eval(path))
}

/// `φ_j` at the cell midpoints, `j`-major.
#[derive(Clone, Debug)]
pub struct BasisTable {
    p_max: usize,
    steps: usize,
    values: Vec<f64>,
}

impl BasisTable {
    pub fn new(p_max: usize, steps: usize, interval_length: f64) -> Self {
        let dt = interval_length / steps as f64;
        let mut values = vec![0.0; (p_max + 1) * steps];
        for n in 0..steps {
            let v = shifted_basis_values(p_max, interval_length, (n as f64 + 0.5) * dt);
            for (j, x) in v.into_iter().enumerate() {
                values[j * steps + n] = x;
            }
        }
        Self { p_max, steps, values }
    }

    pub fn couple(&self, path: &GridPath) -> NoiseMatrix {
        let mut out = NoiseMatrix::zeros(path.components(), self.p_max);
        for i in 1..=path.components() {
            let inc = path.increments(i);
            for j in 0..=self.p_max {
                let phi = &self.values[j * self.steps..(j + 1) * self.steps];
                let z: f64 = phi.iter().zip(inc).map(|(a, b)| a * b).sum();
                out.set(i, j, z);
            }
        }
        out
    }
}

/// `ζ_j^{(i)} = Σ_n φ_j(τ_n + Δτ/2) Δw_n^{(i)}` on the same path.
pub fn couple_noise(path: &GridPath, p_max: usize) -> NoiseMatrix {
    BasisTable::new(p_max, path.steps(), path.interval_length()).couple(path)
}

/// One replication: the fine path, its halved grid, and the coupled draws.
pub struct Replication<'a> {
    pub index: u64,
    pub path: &'a GridPath,
    pub coarse: &'a GridPath,
    pub noise: &'a NoiseMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub replications: usize,
    pub steps: usize,
    pub interval_length: f64,
    pub seed: u64,
    pub components: usize,
    pub p_max: usize,
}

impl McConfig {
    fn check(&self) -> Result<(), Error> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("at least one replication is required".into()));
        }
        if self.steps < 4 || self.steps % 2 != 0 {
            return Err(Error::InvalidInput(format!("grid steps must be even and >= 4, got {}", self.steps)));
        }
        if !(self.interval_length > 0.0 && self.interval_length.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "interval length must be positive, got {}",
                self.interval_length
            )));
        }
        if self.components == 0 {
            return Err(Error::InvalidInput("at least one component is required".into()));
        }
        Ok(())
    }
}

/// Fold over replications in fixed blocks; blocks run in parallel and are
/// merged in index order, so the result does not depend on the thread count.
pub fn fold_replications<A, I, S, M>(cfg: &McConfig, init: I, step: S, merge: M) -> Result<A, Error>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, &Replication) + Sync,
    M: Fn(&mut A, A),
{
    cfg.check()?;
    let table = BasisTable::new(cfg.p_max, cfg.steps, cfg.interval_length);
    let blocks = cfg.replications.div_ceil(BLOCK);
    let parts: Vec<Result<A, Error>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let end = ((b + 1) * BLOCK).min(cfg.replications);
            for rep in b * BLOCK..end {
                let path = GridPath::generate(cfg.components, cfg.steps, cfg.interval_length, cfg.seed, rep as u64)?;
                let coarse = path.coarsen()?;
                let noise = table.couple(&path);
                step(&mut acc, &Replication { index: rep as u64, path: &path, coarse: &coarse, noise: &noise });
            }
            Ok(acc)
        })
        .collect();
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("at least one block")?;
    for p in it {
        merge(&mut acc, p?);
    }
    Ok(acc)
}

pub type ApproxFn = Arc<dyn Fn(&NoiseMatrix) -> f64 + Send + Sync>;

/// A scalar integral, its approximation on coupled draws, and the target MSE.
#[derive(Clone)]
pub struct McCase {
    pub label: String,
    pub idx: MultiIndex,
    pub weights: WeightSpec,
    pub approx: ApproxFn,
    pub target: f64,
}

impl fmt::Debug for McCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("McCase")
            .field("label", &self.label)
            .field("idx", &self.idx)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl McCase {
    pub fn from_plan(label: &str, idx: MultiIndex, weights: WeightSpec, plan: ExpansionPlan, target: f64) -> Self {
        Self {
            label: label.to_string(),
            idx,
            weights,
            approx: Arc::new(move |z: &NoiseMatrix| plan.evaluate_unchecked(z)),
            target,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseEstimate {
    pub estimate: f64,
    /// Sample standard deviation of the squared error over `√R`.
    pub se: f64,
    pub replications: usize,
    /// Mean of `(J_{N/2} - J_N)^2`, an estimate of the reference grid error.
    pub grid_bias: f64,
}

impl MseEstimate {
    /// `B + 2√(B·target)`: grid error plus the Cauchy-Schwarz cross term.
    pub fn bias_envelope(&self, target: f64) -> f64 {
        self.grid_bias + 2.0 * (self.grid_bias * target.max(0.0)).sqrt()
    }

    pub fn tolerance(&self, target: f64) -> f64 {
        (3.0 * self.se).max(self.bias_envelope(target))
    }

    pub fn agrees_with(&self, target: f64) -> bool {
        (self.estimate - target).abs() <= self.tolerance(target)
    }
}

#[derive(Clone, Debug, Default)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    bias: Vec<f64>,
    n: usize,
}

impl Moments {
    fn new(cases: usize) -> Self {
        Self { sum: vec![0.0; cases], sum_sq: vec![0.0; cases], bias: vec![0.0; cases], n: 0 }
    }

    fn merge(&mut self, o: Moments) {
        for c in 0..self.sum.len() {
            self.sum[c] += o.sum[c];
            self.sum_sq[c] += o.sum_sq[c];
            self.bias[c] += o.bias[c];
        }
        self.n += o.n;
    }

    fn estimate(&self, c: usize) -> MseEstimate {
        let r = self.n as f64;
        let mean = self.sum[c] / r;
        let var = if self.n > 1 { ((self.sum_sq[c] - r * mean * mean) / (r - 1.0)).max(0.0) } else { 0.0 };
        MseEstimate { estimate: mean, se: (var / r).sqrt(), replications: self.n, grid_bias: self.bias[c] / r }
    }
}

/// Distinct references used by a set of cases, on the fine and halved grids.
struct References {
    fine: Vec<ReferenceSim>,
    coarse: Vec<ReferenceSim>,
    of_case: Vec<usize>,
}

impl References {
    fn new(cfg: &McConfig, cases: &[McCase]) -> Result<Self, Error> {
        let mut keys: Vec<(MultiIndex, WeightSpec)> = Vec::new();
        let mut of_case = Vec::with_capacity(cases.len());
        for c in cases {
            if let Some(&i) = c.idx.0.iter().find(|&&i| i > cfg.components) {
                return Err(Error::Dimension(format!("case {} uses component {i} of {}", c.label, cfg.components)));
            }
            let key = (c.idx.clone(), c.weights.clone());
            let pos = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                keys.push(key);
                keys.len() - 1
            });
            of_case.push(pos);
        }
        let l = cfg.interval_length;
        let fine = keys.iter().map(|(i, w)| ReferenceSim::new(i, w, cfg.steps, l)).collect::<Result<_, _>>()?;
        let coarse = keys.iter().map(|(i, w)| ReferenceSim::new(i, w, cfg.steps / 2, l)).collect::<Result<_, _>>()?;
        Ok(Self { fine, coarse, of_case })
    }

    /// `(J_N, J_{N/2})` per distinct reference.
    fn eval(&self, rep: &Replication) -> Vec<(f64, f64)> {
        self.fine.iter().zip(&self.coarse).map(|(f, c)| (f.eval(rep.path), c.eval(rep.coarse))).collect()
    }
}

/// Mean-square error estimates for several cases on shared paths.
pub fn estimate_cases(cfg: &McConfig, cases: &[McCase]) -> Result<Vec<MseEstimate>, Error> {
    let refs = References::new(cfg, cases)?;
    let acc = fold_replications(
        cfg,
        || Moments::new(cases.len()),
        |acc, rep| {
            let vals = refs.eval(rep);
            for (c, case) in cases.iter().enumerate() {
                let (fine, coarse) = vals[refs.of_case[c]];
                let d = fine - (case.approx)(rep.noise);
                let d2 = d * d;
                acc.sum[c] += d2;
                acc.sum_sq[c] += d2 * d2;
                acc.bias[c] += (coarse - fine).powi(2);
            }
            acc.n += 1;
        },
        Moments::merge,
    )?;
    Ok((0..cases.len()).map(|c| acc.estimate(c)).collect())
}

/// `E[(J - J^p)^2]` for one integral with the generic expansion.
#[allow(clippy::too_many_arguments)]
pub fn estimate_mse(
    idx: &MultiIndex,
    weights: &WeightSpec,
    trunc: &TruncationSpec,
    replications: usize,
    steps: usize,
    seed: u64,
    interval_length: f64,
) -> Result<MseEstimate, Error> {
    let plan = ExpansionPlan::new(idx, weights, trunc, interval_length)?;
    let p_max = plan.coefficients().max_index();
    let components = idx.0.iter().copied().max().unwrap_or(0).max(1);
    let cfg = McConfig { replications, steps, interval_length, seed, components, p_max };
    let case = McCase::from_plan("case", idx.clone(), weights.clone(), plan, 0.0);
    Ok(estimate_cases(&cfg, &[case])?[0])
}

/// One line of a validation suite.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationRow {
    pub case: String,
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationRow {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

fn seconds(l: f64) -> impl Fn(usize) -> f64 {
    move |p| l.powi(p as i32)
}

/// Scalar error cases on three components: the k=2 and k=3 distinct-index
/// errors, the two weighted pair integrals, and zero-error calibration cases.
pub fn error_suite_cases(interval_length: f64) -> Result<Vec<McCase>, Error> {
    let l = interval_length;
    let pw = seconds(l);
    let unit2 = WeightSpec::unit(2);
    let mut cases = Vec::new();
    for q in [0usize, 2, 5] {
        cases.push(McCase {
            label: format!("k2-distinct q={q}"),
            idx: MultiIndex(vec![1, 2]),
            weights: unit2.clone(),
            approx: Arc::new(move |z: &NoiseMatrix| i11_approx(1, 2, q, z, l).expect("noise sized")),
            target: rat_to_f64(&telescoped_k2(q)) * pw(2),
        });
    }
    let e3 = distinct_error_series(3, 2)?;
    for q in [0usize, 2] {
        let idx = MultiIndex(vec![1, 2, 3]);
        let plan = ExpansionPlan::new(&idx, &WeightSpec::unit(3), &TruncationSpec::uniform(3, q), l)?;
        let label = format!("k3-distinct q={q}");
        cases.push(McCase::from_plan(&label, idx, WeightSpec::unit(3), plan, rat_to_f64(&e3[q]) * pw(3)));
    }
    let j01w = WeightSpec::new(vec![Weight::unit(), Weight::t_minus_s()])?;
    let j10w = WeightSpec::new(vec![Weight::t_minus_s(), Weight::unit()])?;
    for q in [0usize, 2] {
        cases.push(McCase {
            label: format!("weighted-j01 q={q}"),
            idx: MultiIndex(vec![1, 2]),
            weights: j01w.clone(),
            approx: Arc::new(move |z: &NoiseMatrix| j01_approx(1, 2, q, z, l).expect("noise sized")),
            target: rat_to_f64(&e_q(q)) * pw(4),
        });
        cases.push(McCase {
            label: format!("weighted-j10 q={q}"),
            idx: MultiIndex(vec![1, 2]),
            weights: j10w.clone(),
            approx: Arc::new(move |z: &NoiseMatrix| j10_approx(1, 2, q, z, l).expect("noise sized")),
            target: rat_to_f64(&e_q(q)) * pw(4),
        });
    }
    cases.extend(calibration_cases(l));
    Ok(cases)
}

/// Cases whose expansion is exact, so their estimate measures the grid error.
pub fn calibration_cases(interval_length: f64) -> Vec<McCase> {
    let l = interval_length;
    vec![
        McCase {
            label: "calibration k1".into(),
            idx: MultiIndex(vec![1]),
            weights: WeightSpec::unit(1),
            approx: Arc::new(move |z: &NoiseMatrix| i1_approx(1, z, l).expect("noise sized")),
            target: 0.0,
        },
        McCase {
            label: "calibration time-inner".into(),
            idx: MultiIndex(vec![0, 1]),
            weights: WeightSpec::unit(2),
            approx: Arc::new(move |z: &NoiseMatrix| i01_approx(1, z, l).expect("noise sized")),
            target: 0.0,
        },
        McCase {
            label: "calibration time-outer".into(),
            idx: MultiIndex(vec![1, 0]),
            weights: WeightSpec::unit(2),
            approx: Arc::new(move |z: &NoiseMatrix| i10_approx(1, z, l).expect("noise sized")),
            target: 0.0,
        },
        McCase {
            label: "calibration k2-equal".into(),
            idx: MultiIndex(vec![1, 1]),
            weights: WeightSpec::unit(2),
            approx: Arc::new(move |z: &NoiseMatrix| i11_approx(1, 1, 0, z, l).expect("noise sized")),
            target: 0.0,
        },
    ]
}

/// Runs [`error_suite_cases`] on shared paths.
pub fn error_suite(replications: usize, steps: usize, seed: u64, interval_length: f64) -> Result<Vec<ValidationRow>, Error> {
    let cases = error_suite_cases(interval_length)?;
    let cfg = McConfig { replications, steps, interval_length, seed, components: 3, p_max: 7 };
    let est = estimate_cases(&cfg, &cases)?;
    Ok(cases
        .iter()
        .zip(est)
        .map(|(c, e)| ValidationRow {
            case: c.label.clone(),
            target: c.target,
            estimate: e.estimate,
            se: e.se,
            tolerance: e.tolerance(c.target),
            pass: e.agrees_with(c.target),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdentityTag {
    /// Product of two single integrals as two double integrals plus a
    /// quadratic-variation term.
    ProductRule,
    /// Time integral of a double integral rewritten with a `(t-s)` weight.
    TimeFubini,
    /// Time integral of a product of single integrals.
    ProductTimeIntegral,
}

impl IdentityTag {
    pub const ALL: [IdentityTag; 3] = [IdentityTag::ProductRule, IdentityTag::TimeFubini, IdentityTag::ProductTimeIntegral];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityTag::ProductRule => "product-rule",
            IdentityTag::TimeFubini => "time-fubini",
            IdentityTag::ProductTimeIntegral => "product-time-integral",
        }
    }

    /// Power of `(T-t)` in the residual scale.
    pub fn power(&self) -> i32 {
        match self {
            IdentityTag::ProductRule => 1,
            _ => 2,
        }
    }

    /// `6 (T-t)^p √(2/N)`.
    pub fn envelope(&self, interval_length: f64, steps: usize) -> f64 {
        6.0 * interval_length.powi(self.power()) * (2.0 / steps as f64).sqrt()
    }
}

impl fmt::Display for IdentityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        IdentityTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity {s:?}")))
    }
}

/// `Σ_n ψ(τ_n) W_a(τ_n) Δw_b(n)` with `W_a(τ_n) = Σ_{m<n} Δw_a(m)`.
fn double_sum(path: &GridPath, a: usize, b: usize, weight: impl Fn(f64) -> f64) -> f64 {
    let (x, y) = (path.increments(a), path.increments(b));
    let dt = path.dt();
    let mut w = 0.0;
    let mut s = 0.0;
    for n in 0..path.steps() {
        s += weight(n as f64 * dt) * w * y[n];
        w += x[n];
    }
    s
}

/// `LHS - RHS` of the identity on the discrete path, components `r1, r2`.
pub fn check_identity(tag: IdentityTag, path: &GridPath, r1: usize, r2: usize) -> Result<f64, Error> {
    let m = path.components();
    if r1 == 0 || r2 == 0 || r1 > m || r2 > m {
        return Err(Error::Dimension(format!("components ({r1}, {r2}) outside 1..={m}")));
    }
    let l = path.interval_length();
    let dt = path.dt();
    let eq = if r1 == r2 { 1.0 } else { 0.0 };
    let i11 = |a, b| double_sum(path, a, b, |_| 1.0);
    let j01 = |a, b| double_sum(path, a, b, |u| -u);
    Ok(match tag {
        IdentityTag::ProductRule => {
            let lhs = path.total(r1) * path.total(r2);
            lhs - (i11(r1, r2) + i11(r2, r1) + eq * l)
        }
        IdentityTag::TimeFubini => {
            // Σ_c Δτ I11(τ_c)
            let (x, y) = (path.increments(r1), path.increments(r2));
            let (mut w, mut inner, mut lhs) = (0.0, 0.0, 0.0);
            for n in 0..path.steps() {
                lhs += inner * dt;
                inner += w * y[n];
                w += x[n];
            }
            lhs - (l * i11(r1, r2) + j01(r1, r2))
        }
        IdentityTag::ProductTimeIntegral => {
            let (x, y) = (path.increments(r1), path.increments(r2));
            let (mut a, mut b, mut lhs) = (0.0, 0.0, 0.0);
            for n in 0..path.steps() {
                lhs += a * b * dt;
                a += x[n];
                b += y[n];
            }
            lhs - (l * a * b + j01(r1, r2) + j01(r2, r1) - eq * l * l / 2.0)
        }
    })
}

/// Largest `|residual|` over `paths` seeded paths, per identity and component
/// choice, against the envelope.
pub fn identity_suite(paths: usize, steps: usize, seed: u64, interval_length: f64) -> Result<Vec<ValidationRow>, Error> {
    let mut rows = Vec::new();
    let generated: Vec<GridPath> = (0..paths)
        .into_par_iter()
        .map(|p| GridPath::generate(2, steps, interval_length, seed, p as u64))
        .collect::<Result<_, _>>()?;
    for tag in IdentityTag::ALL {
        for (r1, r2) in [(1, 1), (1, 2)] {
            let mut worst: f64 = 0.0;
            for path in &generated {
                worst = worst.max(check_identity(tag, path, r1, r2)?.abs());
            }
            let tol = tag.envelope(interval_length, steps);
            rows.push(ValidationRow {
                case: format!("{tag} ({r1},{r2})"),
                target: 0.0,
                estimate: worst,
                se: 0.0,
                tolerance: tol,
                pass: worst <= tol,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalityResult {
    pub mean: f64,
    pub se: f64,
    pub z: f64,
    pub replications: usize,
}

/// `E[(J_a - J_a^q)(J_b - J_b^q)] / SE` for component tuples with different
/// multisets (unit weights, uniform order `q` per tuple).
pub fn orthogonality_test(
    a: &[usize],
    b: &[usize],
    q: usize,
    replications: usize,
    steps: usize,
    seed: u64,
    interval_length: f64,
) -> Result<OrthogonalityResult, Error> {
    Ok(orthogonality_batch(&[(a.to_vec(), b.to_vec())], q, replications, steps, seed, interval_length)?[0])
}

/// Several tuple pairs on shared paths.
pub fn orthogonality_batch(
    pairs: &[(Vec<usize>, Vec<usize>)],
    q: usize,
    replications: usize,
    steps: usize,
    seed: u64,
    interval_length: f64,
) -> Result<Vec<OrthogonalityResult>, Error> {
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut index = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        if !crate::qwiener::check_orthogonality_inputs(a, b) {
            return Err(Error::InvalidInput(format!("tuples {a:?} and {b:?} have the same multiset")));
        }
        let mut pos = |t: &Vec<usize>| {
            tuples.iter().position(|x| x == t).unwrap_or_else(|| {
                tuples.push(t.clone());
                tuples.len() - 1
            })
        };
        index.push((pos(a), pos(b)));
    }
    let mut cases = Vec::with_capacity(tuples.len());
    for t in &tuples {
        if t.is_empty() || t.contains(&0) {
            return Err(Error::InvalidInput(format!("tuple {t:?} must be nonempty with components >= 1")));
        }
        let idx = MultiIndex(t.clone());
        let w = WeightSpec::unit(t.len());
        let plan = ExpansionPlan::new(&idx, &w, &TruncationSpec::uniform(t.len(), q), interval_length)?;
        cases.push(McCase::from_plan("tuple", idx, w, plan, 0.0));
    }
    let components = tuples.iter().flatten().copied().max().unwrap_or(1);
    let cfg = McConfig { replications, steps, interval_length, seed, components, p_max: q };
    let refs = References::new(&cfg, &cases)?;
    let np = pairs.len();
    let (sum, sum_sq, n) = fold_replications(
        &cfg,
        || (vec![0.0; np], vec![0.0; np], 0usize),
        |acc, rep| {
            let vals = refs.eval(rep);
            let err: Vec<f64> =
                cases.iter().enumerate().map(|(c, k)| vals[refs.of_case[c]].0 - (k.approx)(rep.noise)).collect();
            for (p, &(x, y)) in index.iter().enumerate() {
                let v = err[x] * err[y];
                acc.0[p] += v;
                acc.1[p] += v * v;
            }
            acc.2 += 1;
        },
        |acc, o| {
            for p in 0..np {
                acc.0[p] += o.0[p];
                acc.1[p] += o.1[p];
            }
            acc.2 += o.2;
        },
    )?;
    let r = n as f64;
    Ok((0..np)
        .map(|p| {
            let mean = sum[p] / r;
            let var = ((sum_sq[p] - r * mean * mean) / (r - 1.0).max(1.0)).max(0.0);
            let se = (var / r).sqrt();
            OrthogonalityResult { mean, se, z: if se > 0.0 { mean / se } else { 0.0 }, replications: n }
        })
        .collect())
}

/// Tuple pairs with different multisets, equal and unequal lengths.
pub fn default_orthogonality_pairs() -> Vec<(Vec<usize>, Vec<usize>)> {
    vec![
        (vec![1, 2], vec![1, 3]),
        (vec![1, 1], vec![2, 2]),
        (vec![1, 2], vec![2, 3]),
        (vec![1, 1], vec![1, 2]),
        (vec![1, 2], vec![3, 3]),
        (vec![1, 2], vec![2, 2]),
        (vec![1, 2, 3], vec![1, 2]),
        (vec![1, 1, 2], vec![1, 2]),
        (vec![1, 2, 3], vec![3, 3]),
        (vec![1, 1, 2], vec![1, 2, 2]),
        (vec![1, 2, 3], vec![1, 2, 2]),
    ]
}

pub fn orthogonality_suite(replications: usize, steps: usize, seed: u64, interval_length: f64) -> Result<Vec<ValidationRow>, Error> {
    let pairs = default_orthogonality_pairs();
    let res = orthogonality_batch(&pairs, 2, replications, steps, seed, interval_length)?;
    Ok(pairs
        .iter()
        .zip(res)
        .map(|((a, b), r)| ValidationRow {
            case: format!("{a:?} vs {b:?}"),
            target: 0.0,
            estimate: r.z,
            se: r.se,
            tolerance: 4.0,
            pass: r.z.abs() <= 4.0,
        })
        .collect())
}

/// All `J^{(r_1..r_k)}` (unit weights) on one path, tuples lexicographic.
pub fn reference_tensor(k: usize, m: usize, path: &GridPath) -> Vec<f64> {
    let mut levels: Vec<Vec<f64>> = (0..=k).map(|l| vec![0.0; m.pow(l as u32)]).collect();
    levels[0][0] = 1.0;
    for n in 0..path.steps() {
        for l in (1..=k).rev() {
            let (lo, hi) = levels.split_at_mut(l);
            let prev = &lo[l - 1];
            let cur = &mut hi[0];
            for (t, &p) in prev.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for r in 0..m {
                    cur[t * m + r] += p * path.increments(r + 1)[n];
                }
            }
        }
    }
    levels.pop().expect("k + 1 levels")
}

/// Monte Carlo `E‖I^M - I^{M,p}‖^2` for the generic approximation with unit
/// weights and uniform order `p`, with its bound.
pub fn qwiener_mse(
    op: &MultilinearOperator,
    spec: &QWienerSpec,
    p: usize,
    replications: usize,
    steps: usize,
    seed: u64,
    interval_length: f64,
) -> Result<(MseEstimate, f64), Error> {
    let k = op.arity();
    let m = spec.m();
    let weights = WeightSpec::unit(k);
    let plan = GenericPlan::new(op, spec, &weights, &vec![p; k], interval_length)?;
    let tuples = mode_tuples(k, m);
    let scale: Vec<f64> = tuples.iter().map(|rs| rs.iter().map(|&r| spec.lambdas()[r - 1]).product::<f64>().sqrt()).collect();
    let assemble = |j: &[f64]| {
        let mut out = vec![0.0; op.dim()];
        for ((rs, s), v) in tuples.iter().zip(&scale).zip(j) {
            for (o, t) in out.iter_mut().zip(op.column(rs)) {
                *o += t * s * v;
            }
        }
        out
    };
    let cfg = McConfig { replications, steps, interval_length, seed, components: m, p_max: p };
    let acc = fold_replications(
        &cfg,
        || Moments::new(1),
        |acc, rep| {
            let fine = assemble(&reference_tensor(k, m, rep.path));
            let coarse = assemble(&reference_tensor(k, m, rep.coarse));
            let approx = plan.evaluate(rep.noise).expect("noise sized for the plan");
            let d2: f64 = fine.iter().zip(&approx).map(|(a, b)| (a - b).powi(2)).sum();
            let c2: f64 = fine.iter().zip(&coarse).map(|(a, b)| (a - b).powi(2)).sum();
            acc.sum[0] += d2;
            acc.sum_sq[0] += d2 * d2;
            acc.bias[0] += c2;
            acc.n += 1;
        },
        Moments::merge,
    )?;
    let bound = bound_generic(op.bound(), spec, &weights, &vec![p; k], interval_length)?;
    Ok((acc.estimate(0), bound))
}

/// Generic Q-Wiener approximations for k = 2, 3 at several orders against the
/// mean-square bound.
pub fn qwiener_suite(replications: usize, steps: usize, seed: u64, interval_length: f64) -> Result<Vec<ValidationRow>, Error> {
    let spec = QWienerSpec::power_law(1.0, 2.0, 2)?;
    let mut rows = Vec::new();
    for k in [2usize, 3] {
        let op = MultilinearOperator::random(k, 3, 2, seed ^ k as u64)?;
        for p in [0usize, 1, 3] {
            let (est, bound) = qwiener_mse(&op, &spec, p, replications, steps, seed, interval_length)?;
            rows.push(ValidationRow {
                case: format!("generic k={k} p={p} M=2"),
                target: bound,
                estimate: est.estimate,
                se: est.se,
                tolerance: bound,
                pass: est.estimate <= bound,
            });
        }
    }
    Ok(rows)
}
