//! Pair partitions of `{0..k-1}` and coupled permutations of positions.
//!
//! Positions are zero-based throughout: position `l` carries `(i_{l+1}, j_{l+1})`.

use itertools::Itertools;

use crate::Error;

/// `r` unordered pairs plus `k - 2r` singles covering `0..k`.
///
/// Canonical form: smaller element first within a pair, pairs sorted by their
/// first element, singles ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
    pub singles: Vec<usize>,
}

impl PairPartition {
    pub fn r(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_valid(&self, k: usize) -> bool {
        let mut seen = vec![false; k];
        let mut mark = |x: usize| {
            if x >= k || seen[x] {
                return false;
            }
            seen[x] = true;
            true
        };
        for &(a, b) in &self.pairs {
            if a >= b || !mark(a) || !mark(b) {
                return false;
            }
        }
        for &s in &self.singles {
            if !mark(s) {
                return false;
            }
        }
        seen.iter().all(|&s| s)
            && self.pairs.windows(2).all(|w| w[0].0 < w[1].0)
            && self.singles.windows(2).all(|w| w[0] < w[1])
    }
}

/// All partitions of `0..k` into `r` pairs and `k - 2r` singles.
pub fn pair_partitions(k: usize, r: usize) -> Result<Vec<PairPartition>, Error> {
    if 2 * r > k {
        return Err(Error::InvalidInput(format!("cannot form {r} pairs from {k} positions")));
    }
    let mut out = Vec::new();
    let mut used = vec![false; k];
    let mut pairs = Vec::with_capacity(r);
    let mut singles = Vec::with_capacity(k - 2 * r);
    extend(k, r, 0, &mut used, &mut pairs, &mut singles, &mut out);
    Ok(out)
}

fn extend(
    k: usize,
    r: usize,
    start: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    singles: &mut Vec<usize>,
    out: &mut Vec<PairPartition>,
) {
    let Some(a) = (start..k).find(|&x| !used[x]) else {
        if pairs.len() == r {
            out.push(PairPartition { pairs: pairs.clone(), singles: singles.clone() });
        }
        return;
    };
    let free = used.iter().filter(|u| !**u).count();
    let need = 2 * (r - pairs.len());
    used[a] = true;
    if pairs.len() < r {
        for b in a + 1..k {
            if used[b] {
                continue;
            }
            used[b] = true;
            pairs.push((a, b));
            extend(k, r, a + 1, used, pairs, singles, out);
            pairs.pop();
            used[b] = false;
        }
    }
    // `a` as a single is only possible if enough free positions remain
    if free > need {
        singles.push(a);
        extend(k, r, a + 1, used, pairs, singles, out);
        singles.pop();
    }
    used[a] = false;
}

/// `k! / (r! 2^r (k-2r)!)`.
pub fn pair_partition_count(k: usize, r: usize) -> u128 {
    if 2 * r > k {
        return 0;
    }
    let f = |n: usize| (1..=n as u128).product::<u128>();
    f(k) / (f(r) * (1u128 << r) * f(k - 2 * r))
}

/// All `k!` permutations of `0..k` in lexicographic order.
pub fn coupled_permutations(k: usize) -> Vec<Vec<usize>> {
    (0..k).permutations(k).collect()
}

/// Permutations `σ` with `pattern[σ(l)] == pattern[l]` for every `l`.
pub fn stabilizer(pattern: &[usize]) -> Vec<Vec<usize>> {
    coupled_permutations(pattern.len())
        .into_iter()
        .filter(|s| s.iter().enumerate().all(|(l, &m)| pattern[m] == pattern[l]))
        .collect()
}
