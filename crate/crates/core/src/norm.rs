//! The Lipschitz-free p-norm of a molecule on a finite pointed space.
//!
//! `‖Σ a_x δ(x)‖^p` is the minimum of `T(a)^p` over all rooted labeled
//! trees `T` on the points. The engine works with p-th powers throughout
//! and takes one root at the end.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{Molecule, PMetricSpace, METRIC_TOLERANCE};
use crate::trees::{
    lift_topology, prefix_range, tree_count, Partition, PrueferDecoder, RootedTreeTopology, SequenceWalker,
    TreeValue, DEFAULT_MAX_POINTS, HARD_MAX_POINTS,
};

/// Tree counts at or above this use the rayon pool unless told otherwise.
pub const PARALLEL_THRESHOLD: u64 = 1 << 16;
const SHARDS: usize = 64;

/// The minimum and the first tree (in Prüfer order) attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct NormResult {
    pub value: f64,
    pub p_power: f64,
    pub witness: RootedTreeTopology,
    pub trees_evaluated: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    /// Largest point count accepted (capped at [`HARD_MAX_POINTS`]).
    pub max_points: usize,
    /// `Some(true)` forces the rayon pool, `Some(false)` a single thread,
    /// `None` decides by tree count.
    pub parallel: Option<bool>,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { max_points: DEFAULT_MAX_POINTS, parallel: None }
    }
}

impl NormOptions {
    pub fn sequential() -> Self {
        NormOptions { parallel: Some(false), ..Self::default() }
    }
}

fn check_inputs(space: &PMetricSpace, a: &Molecule, p: f64, opts: &NormOptions) -> Result<()> {
    space.check_exponent(p)?;
    a.check_for(space)?;
    let limit = opts.max_points.min(HARD_MAX_POINTS);
    if space.len() > limit {
        return Err(Error::Capacity(format!(
            "{} points exceed the enumeration limit of {limit}",
            space.len()
        )));
    }
    Ok(())
}

struct Best {
    p_power: f64,
    seq: Vec<usize>,
}

struct ShardOutcome {
    best: Option<Best>,
    evaluated: u64,
}

/// Minimization over the trees of one space, optionally restricted to
/// Prüfer sequences with per-symbol minimum occurrence counts.
struct Engine<'a> {
    m: usize,
    root: usize,
    dpow: Vec<f64>,
    a: &'a [f64],
    p: f64,
}

impl<'a> Engine<'a> {
    fn new(space: &PMetricSpace, a: &'a Molecule, p: f64) -> Self {
        Engine { m: space.len(), root: space.base(), dpow: space.powered(p), a: a.coeffs(), p }
    }

    /// `T(a)^p`, or `None` as soon as the partial sum reaches `cutoff` or
    /// exceeds `global`.
    #[inline]
    fn eval(&self, t: &RootedTreeTopology, c: &mut [f64], cutoff: f64, global: f64) -> Option<f64> {
        c.copy_from_slice(self.a);
        let mut sum = 0.0;
        for &x in t.order() {
            let Some(u) = t.parent(x) else { break };
            let cx = c[x];
            if cx != 0.0 {
                let term = if self.p == 1.0 { cx.abs() } else { cx.abs().powf(self.p) };
                sum += term * self.dpow[x * self.m + u];
                if sum >= cutoff || sum > global {
                    return None;
                }
            }
            c[u] += cx;
        }
        Some(sum)
    }

    fn star_power(&self) -> f64 {
        (0..self.m)
            .filter(|&x| x != self.root)
            .map(|x| self.a[x].abs().powf(self.p) * self.dpow[x * self.m + self.root])
            .sum()
    }

    fn run_shard(&self, part: Partition, min_count: Option<&[u32]>, global: &AtomicU64) -> ShardOutcome {
        let mut decoder = PrueferDecoder::new(self.m);
        let mut t = decoder.blank();
        let mut c = vec![0.0; self.m];
        let mut best: Option<Best> = None;
        let mut cutoff = f64::INFINITY;
        let mut evaluated = 0u64;
        let mut walker = SequenceWalker::new(self.m, min_count);
        walker.walk(prefix_range(self.m, part), &mut |seq: &[usize]| {
            evaluated += 1;
            decoder.decode_into(seq, self.root, &mut t);
            let g = f64::from_bits(global.load(Ordering::Relaxed));
            if let Some(v) = self.eval(&t, &mut c, cutoff, g) {
                cutoff = v;
                global.fetch_min(v.to_bits(), Ordering::Relaxed);
                match &mut best {
                    Some(b) => {
                        b.p_power = v;
                        b.seq.copy_from_slice(seq);
                    }
                    None => best = Some(Best { p_power: v, seq: seq.to_vec() }),
                }
            }
        });
        ShardOutcome { best, evaluated }
    }

    fn minimize(&self, min_count: Option<&[u32]>, parallel: bool) -> (Option<(f64, RootedTreeTopology)>, u64) {
        // Nonnegative doubles order like their bit patterns. The star tree
        // is always admissible for the unconstrained search, so its value
        // (padded against summation-order rounding) bounds the minimum.
        let start = if min_count.is_none() { self.star_power() * (1.0 + 1e-12) } else { f64::INFINITY };
        let global = AtomicU64::new(start.to_bits());
        let shards = if parallel { SHARDS } else { 1 };
        let run = |shard| self.run_shard(Partition { shard, total: shards }, min_count, &global);
        let outcomes: Vec<ShardOutcome> = if parallel {
            (0..shards).into_par_iter().map(run).collect()
        } else {
            (0..shards).map(run).collect()
        };
        let evaluated = outcomes.iter().map(|o| o.evaluated).sum();
        let mut winner: Option<Best> = None;
        for b in outcomes.into_iter().filter_map(|o| o.best) {
            if winner.as_ref().is_none_or(|w| b.p_power < w.p_power) {
                winner = Some(b);
            }
        }
        let found = winner.map(|w| {
            let mut decoder = PrueferDecoder::new(self.m);
            let mut t = decoder.blank();
            decoder.decode_into(&w.seq, self.root, &mut t);
            (w.p_power, t)
        });
        (found, evaluated)
    }
}

fn use_parallel(opts: &NormOptions, trees: u64) -> bool {
    opts.parallel.unwrap_or(trees >= PARALLEL_THRESHOLD)
}

/// Exact free p-norm by minimizing over every rooted tree.
pub fn free_norm(space: &PMetricSpace, a: &Molecule, p: f64) -> Result<NormResult> {
    free_norm_with(space, a, p, &NormOptions::default())
}

pub fn free_norm_with(space: &PMetricSpace, a: &Molecule, p: f64, opts: &NormOptions) -> Result<NormResult> {
    check_inputs(space, a, p, opts)?;
    let trees = tree_count(space.len()).unwrap_or(u64::MAX);
    let engine = Engine::new(space, a, p);
    let (found, trees_evaluated) = engine.minimize(None, use_parallel(opts, trees));
    let (p_power, witness) = found.expect("every space has at least one tree");
    let TreeValue { value, p_power } = TreeValue::from_power(p_power, p);
    Ok(NormResult { value, p_power, witness, trees_evaluated })
}

/// Same value as [`free_norm`], computed by discarding zero-coefficient
/// points: the minimum is taken over the spaces with one such point removed
/// and over the trees in which every remaining zero-coefficient point has at
/// least two children. With more zero points than `|supp| - 1` the second
/// set is empty, so the recursion reduces to subsets of that size.
pub fn free_norm_pruned(space: &PMetricSpace, a: &Molecule, p: f64) -> Result<NormResult> {
    free_norm_pruned_with(space, a, p, &NormOptions::default())
}

pub fn free_norm_pruned_with(space: &PMetricSpace, a: &Molecule, p: f64, opts: &NormOptions) -> Result<NormResult> {
    check_inputs(space, a, p, opts)?;
    let m = space.len();
    let base = space.base();
    if a.is_zero() {
        let witness = RootedTreeTopology::star(m, base)?;
        return Ok(NormResult { value: 0.0, p_power: 0.0, witness, trees_evaluated: 0 });
    }
    let zeros: Vec<usize> = space.non_base().filter(|&i| a.get(i) == 0.0).collect();
    let mut pruner = Pruner {
        space,
        a,
        p,
        opts,
        zeros: &zeros,
        memo: vec![None; 1 << zeros.len()],
        evaluated: 0,
    };
    let (p_power, witness) = pruner.best(0)?;
    let TreeValue { value, p_power } = TreeValue::from_power(p_power, p);
    Ok(NormResult { value, p_power, witness, trees_evaluated: pruner.evaluated })
}

struct Pruner<'a> {
    space: &'a PMetricSpace,
    a: &'a Molecule,
    p: f64,
    opts: &'a NormOptions,
    zeros: &'a [usize],
    memo: Vec<Option<(f64, RootedTreeTopology)>>,
    evaluated: u64,
}

impl Pruner<'_> {
    /// Minimum over the space with the zero points in `removed` deleted.
    fn best(&mut self, removed: usize) -> Result<(f64, RootedTreeTopology)> {
        if let Some(hit) = &self.memo[removed] {
            return Ok(hit.clone());
        }
        let mut best = self.constrained(removed)?;
        for (bit, _) in self.zeros.iter().enumerate() {
            if removed & (1 << bit) != 0 {
                continue;
            }
            let cand = self.best(removed | (1 << bit))?;
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        }
        let best = best.expect("the support is never removed, so some subspace has trees");
        self.memo[removed] = Some(best.clone());
        Ok(best)
    }

    fn constrained(&mut self, removed: usize) -> Result<Option<(f64, RootedTreeTopology)>> {
        let space = self.space;
        let m = space.len();
        let is_removed =
            |i: usize| self.zeros.iter().position(|&z| z == i).is_some_and(|b| removed & (1 << b) != 0);
        let keep: Vec<usize> = (0..m).filter(|&i| !is_removed(i)).collect();
        let zero_left = self.zeros.len() - removed.count_ones() as usize;
        // A non-root vertex with two children occurs twice in the sequence.
        if 2 * zero_left > keep.len() - 2 {
            return Ok(None);
        }
        let sub = space.restrict(&keep)?;
        let local_a = self.a.restricted(&keep);
        let min_count: Vec<u32> = keep
            .iter()
            .map(|&g| u32::from(g != space.base() && self.a.get(g) == 0.0) * 2)
            .collect();
        let engine = Engine::new(&sub, &local_a, self.p);
        let trees = tree_count(keep.len()).unwrap_or(u64::MAX);
        let (found, evaluated) = engine.minimize(Some(&min_count), use_parallel(self.opts, trees));
        self.evaluated += evaluated;
        let Some((v, local)) = found else { return Ok(None) };
        // Removed points hang off the root with zero mass.
        Ok(Some((v, lift_topology(&local, &keep, m, space.base())?)))
    }
}

fn check_triangle(d: [f64; 3], p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Exponent { p, q: 1.0 });
    }
    if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::input("triangle sides must be positive and finite"));
    }
    let s = d.map(|x| x.powf(p));
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        if s[i] > (s[j] + s[k]) * (1.0 + METRIC_TOLERANCE) {
            return Err(Error::input(format!(
                "distances {}, {}, {} violate the {p}-triangle inequality",
                d[0], d[1], d[2]
            )));
        }
    }
    Ok(())
}

/// Closed form on `{0, x, y}`: the minimum over the three trees.
pub fn three_point_norm(d_x: f64, d_y: f64, d_xy: f64, a: f64, b: f64, p: f64) -> Result<f64> {
    check_triangle([d_x, d_y, d_xy], p)?;
    let t = |c: f64, d: f64| (c * d).abs().powf(p);
    let star = t(a, d_x) + t(b, d_y);
    let via_x = t(a + b, d_x) + t(b, d_xy);
    let via_y = t(a + b, d_y) + t(a, d_xy);
    Ok(star.min(via_x).min(via_y).powf(1.0 / p))
}

/// The star tree's value: `(Σ |a_x d(x,0)|^p)^{1/p}`.
pub fn star_upper_bound(space: &PMetricSpace, a: &Molecule, p: f64) -> Result<f64> {
    space.check_exponent(p)?;
    a.check_for(space)?;
    let s: f64 = space
        .non_base()
        .map(|x| (a.get(x) * space.dist(x, space.base())).abs().powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}

/// Whether every non-base point is at least as close to the base as to any
/// other point.
pub fn nearest_is_base(space: &PMetricSpace) -> bool {
    let base = space.base();
    space.non_base().all(|x| {
        let d0 = space.dist(x, base);
        (0..space.len())
            .filter(|&y| y != x && y != base)
            .all(|y| d0 <= space.dist(x, y) * (1.0 + METRIC_TOLERANCE))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositiveCoefficientReport {
    /// Every non-base point has the base among its nearest points.
    pub condition_holds: bool,
    /// `Σ (a_x d(x,0))^p`.
    pub closed_form_p_power: f64,
    /// Exhaustive norm for comparison.
    pub norm: NormResult,
    /// The closed form is guaranteed to be the norm (condition holds, or p = 1).
    pub closed_form_exact: bool,
}

/// For nonnegative coefficients and `p < 1`, the norm equals the star value
/// for all such molecules exactly when the nearest-point condition holds.
pub fn positive_condition_and_norm(space: &PMetricSpace, a: &Molecule, p: f64) -> Result<PositiveCoefficientReport> {
    if a.coeffs().iter().any(|&c| c < 0.0) {
        return Err(Error::input("coefficients must be nonnegative"));
    }
    let norm = free_norm(space, a, p)?;
    let condition_holds = nearest_is_base(space);
    let closed_form_p_power = star_upper_bound(space, a, p)?.powf(p);
    Ok(PositiveCoefficientReport {
        condition_holds,
        closed_form_p_power,
        norm,
        closed_form_exact: condition_holds || p == 1.0,
    })
}

/// A nonnegative molecule whose norm is strictly below its star value, for
/// a space failing the nearest-point condition and `p < 1`.
///
/// With `x` closer to `y` than to the base, the molecule `δ(x) + α δ(y)`
/// routed through the chain `0 - y - x` beats the star once
/// `(1+α)^p - α^p < (d(x,0)^p - d(x,y)^p) / d(y,0)^p`.
pub fn positive_violation_witness(space: &PMetricSpace, p: f64) -> Result<Option<(usize, usize, Molecule)>> {
    space.check_exponent(p)?;
    if p >= 1.0 {
        return Ok(None);
    }
    let base = space.base();
    for x in space.non_base() {
        for y in space.non_base() {
            let dx = space.dist(x, base);
            if y == x || dx <= space.dist(x, y) * (1.0 + METRIC_TOLERANCE) {
                continue;
            }
            let gap = (dx.powf(p) - space.dist(x, y).powf(p)) / space.dist(y, base).powf(p);
            let mut alpha = 1.0f64;
            while (1.0 + alpha).powf(p) - alpha.powf(p) >= gap {
                alpha *= 2.0;
                if !alpha.is_finite() {
                    return Err(Error::Precondition("no finite witness coefficient".into()));
                }
            }
            let a = Molecule::from_pairs(space.len(), &[(x, 1.0), (y, alpha)])?;
            return Ok(Some((x, y, a)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> PMetricSpace {
        PMetricSpace::from_matrix(1.0, vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap()
    }

    #[test]
    fn two_points() {
        let s = PMetricSpace::from_matrix(1.0, vec![vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap();
        let a = Molecule::new(vec![0.0, 5.0]).unwrap();
        for p in [0.2, 0.5, 1.0] {
            let r = free_norm(&s, &a, p).unwrap();
            assert!((r.value - 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equilateral_pair() {
        let a = Molecule::new(vec![0.0, 1.0, 1.0]).unwrap();
        let r = free_norm(&equilateral(), &a, 0.5).unwrap();
        assert!((r.p_power - 2.0).abs() < 1e-12);
        assert!((r.value - 4.0).abs() < 1e-12);
        assert_eq!(r.trees_evaluated, 3);
        assert_eq!(r.witness, RootedTreeTopology::star(3, 0).unwrap());
        let t = three_point_norm(1.0, 1.0, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn three_point_cases() {
        assert!((three_point_norm(1.0, 1.0, 1.0, 1.0, -1.0, 0.3).unwrap() - 1.0).abs() < 1e-12);
        assert!((three_point_norm(2.0, 1.0, 1.5, -3.0, 0.0, 0.7).unwrap() - 6.0).abs() < 1e-12);
        assert!(three_point_norm(1.0, 1.0, 5.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn metric_nonnegative_is_star() {
        let s = PMetricSpace::from_matrix(
            1.0,
            vec![vec![0.0, 2.0, 3.0, 1.0], vec![2.0, 0.0, 1.5, 2.5], vec![3.0, 1.5, 0.0, 2.5], vec![1.0, 2.5, 2.5, 0.0]],
        )
        .unwrap();
        let a = Molecule::new(vec![0.0, 1.0, 0.5, 2.0]).unwrap();
        let r = free_norm(&s, &a, 1.0).unwrap();
        assert!((r.value - (2.0 + 1.5 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn exponent_and_capacity_errors() {
        let a = Molecule::new(vec![0.0, 1.0, 1.0]).unwrap();
        let s = equilateral().with_exponent(0.5).unwrap();
        assert!(matches!(free_norm(&s, &a, 0.6), Err(Error::Exponent { .. })));
        let opts = NormOptions { max_points: 2, parallel: None };
        assert!(matches!(free_norm_with(&s, &a, 0.5, &opts), Err(Error::Capacity(_))));
    }

    #[test]
    fn positive_condition_examples() {
        let a = Molecule::new(vec![0.0, 1.0, 1.0]).unwrap();
        let r = positive_condition_and_norm(&equilateral(), &a, 0.5).unwrap();
        assert!(r.condition_holds);
        assert!((r.norm.p_power - 2.0).abs() < 1e-12 && (r.closed_form_p_power - 2.0).abs() < 1e-12);

        let s = PMetricSpace::from_matrix(0.5, vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.5], vec![1.0, 0.5, 0.0]])
            .unwrap();
        let a = Molecule::new(vec![0.0, 1.0, 4.0]).unwrap();
        let r = positive_condition_and_norm(&s, &a, 0.5).unwrap();
        assert!(!r.condition_holds);
        assert!((r.closed_form_p_power - 3.0).abs() < 1e-12);
        assert!(r.norm.p_power <= 5f64.sqrt() + 0.5f64.sqrt() + 1e-12);
        assert!(positive_condition_and_norm(&s, &a.scaled(-1.0), 0.5).is_err());
    }

    #[test]
    fn violation_witness_beats_star() {
        let s = PMetricSpace::from_matrix(0.5, vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.5], vec![1.0, 0.5, 0.0]])
            .unwrap();
        let (_, _, a) = positive_violation_witness(&s, 0.5).unwrap().unwrap();
        let n = free_norm(&s, &a, 0.5).unwrap().value;
        assert!(n < star_upper_bound(&s, &a, 0.5).unwrap());
        assert!(positive_violation_witness(&equilateral(), 0.5).unwrap().is_none());
    }

    #[test]
    fn star_bound_strict_on_chain() {
        let s = PMetricSpace::from_matrix(1.0, vec![vec![0.0, 10.0, 10.5], vec![10.0, 0.0, 0.5], vec![10.5, 0.5, 0.0]])
            .unwrap();
        let a = Molecule::new(vec![0.0, 1.0, -1.0]).unwrap();
        let n = free_norm(&s, &a, 0.5).unwrap().value;
        assert!((n - 0.5).abs() < 1e-12);
        assert!(star_upper_bound(&s, &a, 0.5).unwrap() > n);
    }

    #[test]
    fn pruned_matches_on_small_cases() {
        let s = PMetricSpace::from_matrix(
            1.0,
            vec![
                vec![0.0, 2.0, 3.0, 1.0, 2.0],
                vec![2.0, 0.0, 1.5, 2.5, 1.0],
                vec![3.0, 1.5, 0.0, 2.5, 2.0],
                vec![1.0, 2.5, 2.5, 0.0, 1.5],
                vec![2.0, 1.0, 2.0, 1.5, 0.0],
            ],
        )
        .unwrap();
        for coeffs in [
            vec![0.0, 1.0, -2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, -2.0, 0.5, 0.0],
            vec![0.0, 1.0, -2.0, 0.5, 3.0],
            vec![0.0; 5],
        ] {
            let a = Molecule::new(coeffs).unwrap();
            for p in [0.3, 0.8, 1.0] {
                let full = free_norm(&s, &a, p).unwrap();
                let pruned = free_norm_pruned(&s, &a, p).unwrap();
                assert!((full.value - pruned.value).abs() <= 1e-12 * full.value.max(1.0));
                let tv = crate::trees::tree_value(&pruned.witness, &a, &s, p).unwrap();
                assert!((tv.p_power - pruned.p_power).abs() <= 1e-12 * pruned.p_power.max(1.0));
                assert!(pruned.trees_evaluated <= full.trees_evaluated.max(1));
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let m = 8;
        let dist: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else { 1.0 + ((i * 7 + j * 7) % 5) as f64 * 0.1 }).collect())
            .collect();
        let s = PMetricSpace::from_matrix(1.0, dist).unwrap();
        let a = Molecule::new(vec![0.0, 1.0, -0.5, 2.0, -1.5, 0.25, 1.0, -3.0]).unwrap();
        let seq = free_norm_with(&s, &a, 0.6, &NormOptions::sequential()).unwrap();
        let par = free_norm_with(&s, &a, 0.6, &NormOptions { parallel: Some(true), ..Default::default() }).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.trees_evaluated, 262_144);
    }
}
