//! Integer partition search used by the MMS oracle and the threshold solvers.
//!
//! Every agent row is scaled by the lcm of its denominators so that all
//! comparisons become integer comparisons. Weights are non-negative magnitudes:
//! good values for goods, costs (negated values) for chores. Arithmetic runs
//! on `i128` when the totals leave ample headroom and on `BigInt` otherwise.

use std::fmt::Debug;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::value::Rational;

pub(crate) trait Weight: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> + Debug {}
impl<T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T> + Debug> Weight for T {}

/// Result of a bounded search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Found<T> {
    Yes(T),
    No,
    /// The node budget ran out before the search completed.
    GaveUp,
}

/// One agent row as non-negative integers: `weights[j] = |v_j| * scale`.
#[derive(Debug, Clone)]
pub(crate) struct ScaledRow {
    pub weights: Vec<BigInt>,
    pub scale: BigInt,
}

impl ScaledRow {
    pub fn new(row: &[Rational]) -> Self {
        let scale = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let weights = row.iter().map(|v| (v.numer() * (&scale / v.denom())).abs()).collect();
        ScaledRow { weights, scale }
    }

    /// Smallest integer weight that is worth at least `x` (goods, `x >= 0`).
    pub fn ceil_of(&self, x: &Rational) -> BigInt {
        let t = x * Rational::from_integer(self.scale.clone());
        t.ceil().to_integer().max(BigInt::zero())
    }

    /// Largest integer cost whose value is still at least `x` (chores, `x <= 0`).
    pub fn floor_cost_of(&self, x: &Rational) -> BigInt {
        let t = -x * Rational::from_integer(self.scale.clone());
        t.floor().to_integer()
    }

    pub fn to_rational(&self, w: &BigInt) -> Rational {
        Rational::new(w.clone(), self.scale.clone())
    }
}

const I128_HEADROOM: u32 = 100;

fn fits_i128(values: &[&BigInt]) -> bool {
    let mut total = BigInt::zero();
    for v in values {
        if v.is_negative() {
            total -= *v;
        } else {
            total += *v;
        }
    }
    total.bits() < I128_HEADROOM as u64
}

fn to_i128(v: &BigInt) -> i128 {
    v.to_i128().expect("checked by fits_i128")
}

/// Per-bin cardinality targets; `None` leaves cardinalities free.
pub(crate) type Sizes<'a> = Option<&'a [usize]>;

/// Assigns `items` (indices into `w`) to `bins` bins so that every bin sum is at
/// least `t`. Returns the bins as lists of item indices.
pub(crate) fn cover(
    w: &[BigInt],
    items: &[usize],
    bins: usize,
    t: &BigInt,
    sizes: Sizes,
    budget: u64,
) -> Found<Vec<Vec<usize>>> {
    let mut all: Vec<&BigInt> = items.iter().map(|&i| &w[i]).collect();
    all.push(t);
    if fits_i128(&all) {
        let wi: Vec<i128> = w.iter().map(|v| if fits_i128(&[v]) { to_i128(v) } else { 0 }).collect();
        cover_generic(&wi, items, bins, &to_i128(t), sizes, budget)
    } else {
        cover_generic(w, items, bins, t, sizes, budget)
    }
}

/// Assigns `items` to `bins` bins so that every bin sum is at most `cap`.
pub(crate) fn pack(
    w: &[BigInt],
    items: &[usize],
    bins: usize,
    cap: &BigInt,
    sizes: Sizes,
    budget: u64,
) -> Found<Vec<Vec<usize>>> {
    if cap.is_negative() {
        return Found::No;
    }
    let mut all: Vec<&BigInt> = items.iter().map(|&i| &w[i]).collect();
    all.push(cap);
    if fits_i128(&all) {
        let wi: Vec<i128> = w.iter().map(|v| if fits_i128(&[v]) { to_i128(v) } else { 0 }).collect();
        pack_generic(&wi, items, bins, &to_i128(cap), sizes, budget)
    } else {
        pack_generic(w, items, bins, cap, sizes, budget)
    }
}

fn sizes_ok(items: usize, bins: usize, sizes: Sizes) -> bool {
    match sizes {
        None => true,
        Some(s) => s.len() == bins && s.iter().sum::<usize>() == items,
    }
}

fn sorted_desc<T: Weight>(w: &[T], items: &[usize]) -> Vec<usize> {
    let mut order = items.to_vec();
    order.sort_by(|&a, &b| w[b].cmp(&w[a]).then(a.cmp(&b)));
    order
}

fn suffix_sums<T: Weight>(w: &[T], order: &[usize]) -> Vec<T> {
    let mut rem = vec![T::zero(); order.len() + 1];
    for k in (0..order.len()).rev() {
        rem[k] = rem[k + 1].clone() + w[order[k]].clone();
    }
    rem
}

struct Dfs<'a, T> {
    w: &'a [T],
    order: Vec<usize>,
    rem: Vec<T>,
    sums: Vec<T>,
    counts: Vec<usize>,
    sizes: Option<Vec<usize>>,
    assign: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl<'a, T: Weight> Dfs<'a, T> {
    fn new(w: &'a [T], items: &[usize], bins: usize, sizes: Sizes, budget: u64) -> Self {
        let order = sorted_desc(w, items);
        let rem = suffix_sums(w, &order);
        Dfs {
            w,
            rem,
            sums: vec![T::zero(); bins],
            counts: vec![0; bins],
            sizes: sizes.map(|s| s.to_vec()),
            assign: vec![0; order.len()],
            order,
            nodes: 0,
            budget,
        }
    }

    fn target(&self, b: usize) -> usize {
        self.sizes.as_ref().map_or(usize::MAX, |s| s[b])
    }

    fn bins_out(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.sums.len()];
        for (k, &b) in self.assign.iter().enumerate() {
            out[b].push(self.order[k]);
        }
        for b in &mut out {
            b.sort_unstable();
        }
        out
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.budget != 0 && self.nodes > self.budget
    }

    /// Candidate bins for the next item, with states already tried skipped.
    fn candidates(&self, fits: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sums.len()).filter(|&b| fits(b)).collect();
        idx.sort_by(|&a, &b| self.sums[a].cmp(&self.sums[b]).then(a.cmp(&b)));
        let mut out: Vec<usize> = Vec::with_capacity(idx.len());
        for b in idx {
            let dup = out.iter().any(|&p| {
                self.sums[p] == self.sums[b] && self.counts[p] == self.counts[b] && self.target(p) == self.target(b)
            });
            if !dup {
                out.push(b);
            }
        }
        out
    }

    fn cover(&mut self, k: usize, t: &T) -> Option<bool> {
        if self.tick() {
            return None;
        }
        let n = self.sums.len();
        let mut deficit = T::zero();
        for b in 0..n {
            if self.sums[b] < *t {
                if self.counts[b] == self.target(b) {
                    return Some(false);
                }
                deficit = deficit + (t.clone() - self.sums[b].clone());
            }
        }
        if deficit > self.rem[k] {
            return Some(false);
        }
        if k == self.order.len() {
            return Some(deficit.is_zero());
        }
        let item = self.order[k];
        let wt = self.w[item].clone();
        let free = self.sizes.is_none();
        let mut cands = self.candidates(|b| self.counts[b] < self.target(b));
        if free {
            // every satisfied bin is interchangeable as a sink for surplus items
            let mut seen_full = false;
            cands.retain(|&b| {
                if self.sums[b] >= *t {
                    if seen_full {
                        return false;
                    }
                    seen_full = true;
                }
                true
            });
        }
        for b in cands {
            self.sums[b] = self.sums[b].clone() + wt.clone();
            self.counts[b] += 1;
            self.assign[k] = b;
            let r = self.cover(k + 1, t);
            self.sums[b] = self.sums[b].clone() - wt.clone();
            self.counts[b] -= 1;
            match r {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        Some(false)
    }

    fn pack(&mut self, k: usize, cap: &T) -> Option<bool> {
        if self.tick() {
            return None;
        }
        if k == self.order.len() {
            return Some(true);
        }
        let n = self.sums.len();
        let mut slack = T::zero();
        for b in 0..n {
            if self.counts[b] < self.target(b) {
                slack = slack + (cap.clone() - self.sums[b].clone());
            }
        }
        if self.rem[k] > slack {
            return Some(false);
        }
        let item = self.order[k];
        let wt = self.w[item].clone();
        let cands = self.candidates(|b| self.counts[b] < self.target(b) && self.sums[b].clone() + wt.clone() <= *cap);
        for b in cands {
            self.sums[b] = self.sums[b].clone() + wt.clone();
            self.counts[b] += 1;
            self.assign[k] = b;
            let r = self.pack(k + 1, cap);
            self.sums[b] = self.sums[b].clone() - wt.clone();
            self.counts[b] -= 1;
            match r {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        Some(false)
    }
}

fn cover_generic<T: Weight>(
    w: &[T],
    items: &[usize],
    bins: usize,
    t: &T,
    sizes: Sizes,
    budget: u64,
) -> Found<Vec<Vec<usize>>> {
    if bins == 0 {
        return if items.is_empty() {
            Found::Yes(vec![])
        } else {
            Found::No
        };
    }
    if !sizes_ok(items.len(), bins, sizes) {
        return Found::No;
    }
    let mut dfs = Dfs::new(w, items, bins, sizes, budget);
    match dfs.cover(0, t) {
        Some(true) => Found::Yes(dfs.bins_out()),
        Some(false) => Found::No,
        None => Found::GaveUp,
    }
}

fn pack_generic<T: Weight>(
    w: &[T],
    items: &[usize],
    bins: usize,
    cap: &T,
    sizes: Sizes,
    budget: u64,
) -> Found<Vec<Vec<usize>>> {
    if bins == 0 {
        return if items.is_empty() {
            Found::Yes(vec![])
        } else {
            Found::No
        };
    }
    if !sizes_ok(items.len(), bins, sizes) {
        return Found::No;
    }
    let mut dfs = Dfs::new(w, items, bins, sizes, budget);
    match dfs.pack(0, cap) {
        Some(true) => Found::Yes(dfs.bins_out()),
        Some(false) => Found::No,
        None => Found::GaveUp,
    }
}

fn bin_sums(w: &[BigInt], bins: &[Vec<usize>]) -> Vec<BigInt> {
    bins.iter()
        .map(|b| b.iter().fold(BigInt::zero(), |acc, &i| acc + &w[i]))
        .collect()
}

/// Longest-processing-time greedy: each item (heaviest first) joins the
/// lightest bin.
fn lpt(w: &[BigInt], items: &[usize], bins: usize) -> Vec<Vec<usize>> {
    let order = sorted_desc(w, items);
    let mut out = vec![Vec::new(); bins];
    let mut sums = vec![BigInt::zero(); bins];
    for i in order {
        let b = (0..bins)
            .min_by(|&a, &b| sums[a].cmp(&sums[b]).then(a.cmp(&b)))
            .unwrap();
        sums[b] += &w[i];
        out[b].push(i);
    }
    for b in &mut out {
        b.sort_unstable();
    }
    out
}

/// Largest `t` such that `items` can be split into `bins` bins each of sum at
/// least `t`, together with a witness.
pub(crate) fn max_min(w: &[BigInt], items: &[usize], bins: usize) -> (BigInt, Vec<Vec<usize>>) {
    assert!(bins > 0);
    let mut best = lpt(w, items, bins);
    let mut lo = bin_sums(w, &best).into_iter().min().unwrap();
    let total: BigInt = items.iter().map(|&i| &w[i]).sum();
    let mut hi = total / BigInt::from(bins);
    while lo < hi {
        let mid: BigInt = (&lo + &hi + 1) / 2;
        match cover(w, items, bins, &mid, None, 0) {
            Found::Yes(b) => {
                lo = bin_sums(w, &b).into_iter().min().unwrap();
                best = b;
            }
            _ => hi = mid - 1,
        }
    }
    (lo, best)
}

/// Smallest `cap` such that `items` can be split into `bins` bins each of sum
/// at most `cap`, together with a witness.
pub(crate) fn min_max(w: &[BigInt], items: &[usize], bins: usize) -> (BigInt, Vec<Vec<usize>>) {
    assert!(bins > 0);
    let mut best = lpt(w, items, bins);
    let mut hi = bin_sums(w, &best).into_iter().max().unwrap();
    let total: BigInt = items.iter().map(|&i| &w[i]).sum();
    let largest = items.iter().map(|&i| w[i].clone()).max().unwrap_or_default();
    let avg = (&total + BigInt::from(bins) - 1) / BigInt::from(bins);
    let mut lo = largest.max(avg);
    while lo < hi {
        let mid: BigInt = (&lo + &hi) / 2;
        match pack(w, items, bins, &mid, None, 0) {
            Found::Yes(b) => {
                hi = bin_sums(w, &b).into_iter().max().unwrap();
                best = b;
            }
            _ => lo = mid + 1,
        }
    }
    (hi, best)
}

/// Multi-agent threshold search: every agent `a` must receive a bundle whose
/// weight is at least `need[a]` (goods) or at most `need[a]` (chores).
pub(crate) fn assign_meeting(rows: &[ScaledRow], need: &[BigInt], chores: bool, budget: u64) -> Found<Vec<Vec<usize>>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.weights.len());
    if n == 0 {
        return if m == 0 { Found::Yes(vec![]) } else { Found::No };
    }
    let mut order: Vec<usize> = (0..m).collect();
    // heaviest items first, by the largest scaled share across agents
    let key = |j: usize| -> Rational {
        rows.iter()
            .map(|r| r.to_rational(&r.weights[j]))
            .max()
            .unwrap_or_default()
    };
    let keys: Vec<Rational> = (0..m).map(key).collect();
    order.sort_by(|&a, &b| keys[b].cmp(&keys[a]).then(a.cmp(&b)));

    let mut st = Assign {
        rows,
        need,
        chores,
        order,
        cur: vec![BigInt::zero(); n],
        rem: Vec::new(),
        pick: vec![0; m],
        nodes: 0,
        budget,
    };
    st.rem = (0..n)
        .map(|a| {
            let mut s = vec![BigInt::zero(); m + 1];
            for k in (0..m).rev() {
                s[k] = &s[k + 1] + &rows[a].weights[st.order[k]];
            }
            s
        })
        .collect();
    match st.go(0) {
        Some(true) => {
            let mut out = vec![Vec::new(); n];
            for (k, &a) in st.pick.iter().enumerate() {
                out[a].push(st.order[k]);
            }
            for b in &mut out {
                b.sort_unstable();
            }
            Found::Yes(out)
        }
        Some(false) => Found::No,
        None => Found::GaveUp,
    }
}

struct Assign<'a> {
    rows: &'a [ScaledRow],
    need: &'a [BigInt],
    chores: bool,
    order: Vec<usize>,
    cur: Vec<BigInt>,
    rem: Vec<Vec<BigInt>>,
    pick: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Assign<'_> {
    fn go(&mut self, k: usize) -> Option<bool> {
        self.nodes += 1;
        if self.budget != 0 && self.nodes > self.budget {
            return None;
        }
        let n = self.rows.len();
        if !self.chores {
            for a in 0..n {
                if &self.cur[a] + &self.rem[a][k] < self.need[a] {
                    return Some(false);
                }
            }
        }
        if k == self.order.len() {
            return Some(true);
        }
        let j = self.order[k];
        let mut agents: Vec<usize> = (0..n).collect();
        if self.chores {
            agents.retain(|&a| &self.cur[a] + &self.rows[a].weights[j] <= self.need[a]);
            // most remaining room first
            agents.sort_by(|&a, &b| {
                let ra = &self.need[a] - &self.cur[a];
                let rb = &self.need[b] - &self.cur[b];
                rb.cmp(&ra).then(a.cmp(&b))
            });
        } else {
            // agents still short of their threshold first, largest gap first
            agents.sort_by(|&a, &b| {
                let ga = &self.need[a] - &self.cur[a];
                let gb = &self.need[b] - &self.cur[b];
                gb.cmp(&ga).then(a.cmp(&b))
            });
        }
        for a in agents {
            let wt = self.rows[a].weights[j].clone();
            self.cur[a] += &wt;
            self.pick[k] = a;
            let r = self.go(k + 1);
            self.cur[a] -= &wt;
            match r {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        Some(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{int, ratio};

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn scaling_uses_lcm() {
        let r = ScaledRow::new(&[ratio(1, 2), ratio(1, 3), int(1)]);
        assert_eq!(r.scale, BigInt::from(6));
        assert_eq!(r.weights, big(&[3, 2, 6]));
        assert_eq!(r.ceil_of(&ratio(1, 4)), BigInt::from(2));
        let c = ScaledRow::new(&[ratio(-1, 2), int(-1)]);
        assert_eq!(c.weights, big(&[1, 2]));
        assert_eq!(c.floor_cost_of(&ratio(-3, 4)), BigInt::from(1));
    }

    #[test]
    fn max_min_small() {
        let w = big(&[3, 2, 1, 1]);
        let (t, bins) = max_min(&w, &[0, 1, 2, 3], 2);
        assert_eq!(t, BigInt::from(3));
        assert_eq!(bins.len(), 2);
    }

    #[test]
    fn min_max_small() {
        let w = big(&[4, 3, 2, 1]);
        let (cap, _) = min_max(&w, &[0, 1, 2, 3], 3);
        assert_eq!(cap, BigInt::from(4));
    }

    #[test]
    fn cover_respects_sizes() {
        let w = big(&[5, 5, 1, 1]);
        let items = [0, 1, 2, 3];
        assert!(matches!(
            cover(&w, &items, 2, &BigInt::from(6), Some(&[2, 2]), 0),
            Found::Yes(_)
        ));
        assert_eq!(cover(&w, &items, 2, &BigInt::from(6), Some(&[1, 3]), 0), Found::No);
    }

    #[test]
    fn budget_is_reported() {
        let w = big(&[7, 6, 5, 4, 3, 3, 2, 2, 1, 1, 1, 1]);
        let items: Vec<usize> = (0..w.len()).collect();
        assert_eq!(cover(&w, &items, 4, &BigInt::from(9), None, 1), Found::GaveUp);
        assert!(matches!(cover(&w, &items, 4, &BigInt::from(9), None, 0), Found::Yes(_)));
    }
}
