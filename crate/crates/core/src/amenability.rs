//! Embedding ratios `‖μ‖_N / ‖μ‖_M` for `N ⊂ M`, lower-bound estimates of
//! their supremum, and closed-form bounds and constructions.
//!
//! Molecules passed to this module are indexed over the points of `M` and
//! must vanish outside the subset `N`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_exponent, Error, Result};
use crate::norm::{free_norm_pruned_with, free_norm_with, NormOptions, NormResult};
use crate::space::{normalize_subset, Molecule, PMetricSpace, METRIC_TOLERANCE};
use crate::tree_metric::{path_p_metric, WeightedRootedTree};
use crate::trees::{lift_topology, RootedTreeTopology};

/// How the two norms of a ratio are computed.
#[derive(Clone, Copy, Debug, Default)]
pub struct RatioOptions {
    /// Use the zero-point pruning recursion for both norms.
    pub prune: bool,
    /// Replace `M` by its subsets `F ⊇ N` with `|N| - 2` extra points when
    /// `M` has more extra points than that; `‖μ‖_M` is the minimum over them.
    pub reduce: bool,
    pub norm: NormOptions,
}

impl RatioOptions {
    /// Pruned and reduced, single-threaded inner norms.
    pub fn fast() -> Self {
        RatioOptions { prune: true, reduce: true, norm: NormOptions::sequential() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioDetail {
    pub ratio: f64,
    /// Norm on `N`; the witness tree uses the local indices of the subset.
    pub norm_n: NormResult,
    /// Norm on `M`; the witness tree uses the indices of `M`.
    pub norm_m: NormResult,
    /// The points of `M` the `M`-norm was attained on.
    pub superset: Vec<usize>,
}

/// Precomputed restrictions for evaluating ratios in coordinates: one
/// coefficient per non-base point of the subset, ascending.
struct RatioEvaluator {
    m: usize,
    base: usize,
    p: f64,
    opts: RatioOptions,
    subset: Vec<usize>,
    coords: Vec<usize>,
    space_n: PMetricSpace,
    /// `(points of F, restricted space, position in F of each coordinate)`.
    supersets: Vec<(Vec<usize>, PMetricSpace, Vec<usize>)>,
}

impl RatioEvaluator {
    fn new(space_m: &PMetricSpace, subset: &[usize], p: f64, opts: RatioOptions) -> Result<Self> {
        space_m.check_exponent(p)?;
        let subset = normalize_subset(subset, space_m.len())?;
        let space_n = space_m.restrict(&subset)?;
        let base = space_m.base();
        let coords: Vec<usize> = subset.iter().copied().filter(|&g| g != base).collect();
        let outside: Vec<usize> = (0..space_m.len()).filter(|g| subset.binary_search(g).is_err()).collect();
        let extra = coords.len().saturating_sub(1);
        let choices = if opts.reduce && outside.len() > extra {
            combinations(&outside, extra)
        } else {
            vec![outside]
        };
        let supersets = choices
            .into_iter()
            .map(|added| {
                let mut f = subset.clone();
                f.extend(added);
                f.sort_unstable();
                let sp = space_m.restrict(&f)?;
                let pos = coords.iter().map(|g| f.binary_search(g).expect("subset inside F")).collect();
                Ok((f, sp, pos))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RatioEvaluator { m: space_m.len(), base, p, opts, subset, coords, space_n, supersets })
    }

    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn norm(&self, space: &PMetricSpace, a: &Molecule) -> Result<NormResult> {
        if self.opts.prune {
            free_norm_pruned_with(space, a, self.p, &self.opts.norm)
        } else {
            free_norm_with(space, a, self.p, &self.opts.norm)
        }
    }

    fn molecule(&self, v: &[f64]) -> Result<Molecule> {
        let pairs: Vec<(usize, f64)> = self.coords.iter().copied().zip(v.iter().copied()).collect();
        Molecule::from_pairs(self.m, &pairs)
    }

    fn coordinates(&self, a: &Molecule) -> Result<Vec<f64>> {
        if a.len() != self.m {
            return Err(Error::input("molecule length does not match the superspace"));
        }
        if let Some(g) = (0..self.m).find(|&g| a.get(g) != 0.0 && self.coords.binary_search(&g).is_err()) {
            return Err(Error::input(format!("coefficient at point {g} lies outside the subset")));
        }
        Ok(self.coords.iter().map(|&g| a.get(g)).collect())
    }

    fn detail(&self, v: &[f64]) -> Result<RatioDetail> {
        if v.iter().all(|&x| x == 0.0) {
            return Err(Error::input("the embedding ratio of the zero molecule is undefined"));
        }
        let a = self.molecule(v)?;
        let norm_n = self.norm(&self.space_n, &a.restricted(&self.subset))?;
        let mut best: Option<(NormResult, usize)> = None;
        for (i, (f, sp, pos)) in self.supersets.iter().enumerate() {
            let mut local = vec![0.0; f.len()];
            for (&j, &x) in pos.iter().zip(v) {
                local[j] = x;
            }
            let r = self.norm(sp, &Molecule::new(local)?)?;
            if best.as_ref().is_none_or(|(b, _)| r.p_power < b.p_power) {
                best = Some((r, i));
            }
        }
        let (mut norm_m, i) = best.expect("at least one superset");
        let superset = self.supersets[i].0.clone();
        norm_m.witness = lift_topology(&norm_m.witness, &superset, self.m, self.base)?;
        Ok(RatioDetail { ratio: norm_n.value / norm_m.value, norm_n, norm_m, superset })
    }

    fn ratio(&self, v: &[f64]) -> Result<f64> {
        Ok(self.detail(v)?.ratio)
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pick.len() == k {
            out.push(pick.clone());
            return;
        }
        for i in start..=items.len() - (k - pick.len()) {
            pick.push(items[i]);
            rec(items, k, i + 1, pick, out);
            pick.pop();
        }
    }
    if k <= items.len() {
        rec(items, k, 0, &mut pick, &mut out);
    }
    out
}

/// `‖μ‖_N / ‖μ‖_M` with both norms computed exhaustively.
pub fn embedding_ratio(space_m: &PMetricSpace, subset: &[usize], a: &Molecule, p: f64) -> Result<f64> {
    Ok(embedding_ratio_detail(space_m, subset, a, p, &RatioOptions::default())?.ratio)
}

pub fn embedding_ratio_detail(
    space_m: &PMetricSpace,
    subset: &[usize],
    a: &Molecule,
    p: f64,
    opts: &RatioOptions,
) -> Result<RatioDetail> {
    let ev = RatioEvaluator::new(space_m, subset, p, *opts)?;
    let v = ev.coordinates(a)?;
    ev.detail(&v)
}

#[derive(Clone, Debug)]
pub struct AmenOptions {
    /// Pattern-search runs; the first starts from the best canonical probe.
    pub starts: usize,
    pub seed: u64,
    /// Final pattern-search step.
    pub tol: f64,
    /// Also scan a grid on the unit sup-sphere (at most three coordinates).
    pub grid: bool,
    /// Extra probe directions, one coefficient per non-base subset point.
    pub probes: Vec<Vec<f64>>,
    pub max_evaluations_per_start: usize,
    pub ratio: RatioOptions,
}

impl Default for AmenOptions {
    fn default() -> Self {
        AmenOptions {
            starts: 8,
            seed: 0,
            tol: 1e-6,
            grid: false,
            probes: Vec::new(),
            max_evaluations_per_start: 20_000,
            ratio: RatioOptions::fast(),
        }
    }
}

/// A certified lower bound for `amen_p(N, M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmenEstimate {
    pub value: f64,
    pub value_p: f64,
    /// Coefficients over the points of `M`, sup-norm one.
    pub witness: Molecule,
    /// Minimizing tree for `‖witness‖_N`, on the local indices of the subset.
    pub witness_tree_n: RootedTreeTopology,
    /// Minimizing tree for `‖witness‖_M`, on the indices of `M`.
    pub witness_tree_m: RootedTreeTopology,
    pub subset: Vec<usize>,
    pub starts: usize,
    pub evaluations: u64,
    /// At least two local searches ended within `tol` of the best value.
    pub converged: bool,
}

fn sup_normalize(v: &mut [f64]) -> bool {
    let s = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if s == 0.0 || !s.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

struct LocalResult {
    value: f64,
    point: Vec<f64>,
    evaluations: u64,
}

/// Coordinate pattern search on the sup-sphere, halving the step until it
/// drops below `tol`.
fn pattern_search(ev: &RatioEvaluator, start: Vec<f64>, step: f64, tol: f64, budget: usize) -> Result<LocalResult> {
    let mut x = start;
    let mut fx = ev.ratio(&x)?;
    let mut evaluations = 1u64;
    let mut step = step;
    let n = x.len();
    while step >= tol && (evaluations as usize) < budget {
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sign * step;
                if !sup_normalize(&mut y) {
                    continue;
                }
                let fy = ev.ratio(&y)?;
                evaluations += 1;
                if fy > fx * (1.0 + 1e-14) {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(LocalResult { value: fx, point: x, evaluations })
}

fn canonical_probes(n: usize) -> Vec<Vec<f64>> {
    let mut probes = vec![vec![1.0; n]];
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        probes.push(e);
    }
    if n >= 2 {
        probes.push((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    }
    probes
}

/// Points `t` with `t_i = 1` on one face of the sup-sphere per coordinate;
/// the opposite faces give the same ratios.
fn sphere_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    let ticks: Vec<f64> = (0..resolution)
        .map(|i| -1.0 + 2.0 * i as f64 / (resolution - 1) as f64)
        .collect();
    let mut out = Vec::new();
    for face in 0..n {
        let free = n - 1;
        let total = ticks.len().pow(free as u32);
        for idx in 0..total {
            let mut v = Vec::with_capacity(n);
            let mut r = idx;
            for j in 0..n {
                if j == face {
                    v.push(1.0);
                } else {
                    v.push(ticks[r % ticks.len()]);
                    r /= ticks.len();
                }
            }
            out.push(v);
        }
    }
    out
}

const GRID_RESOLUTION: usize = 201;
const GRID_REFINE: usize = 3;

/// Multi-start maximization of the embedding ratio over coefficient
/// directions. The result is a lower bound for `amen_p(N, M)`, certified by
/// its witness.
pub fn amen_estimate(space_m: &PMetricSpace, subset: &[usize], p: f64, opts: &AmenOptions) -> Result<AmenEstimate> {
    if opts.starts == 0 {
        return Err(Error::input("at least one start is required"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::input("tolerance must be positive"));
    }
    let ev = RatioEvaluator::new(space_m, subset, p, opts.ratio)?;
    let n = ev.dim();
    if n == 0 {
        return Err(Error::input("the subset needs a point besides the base"));
    }
    if opts.grid && n > 3 {
        return Err(Error::input("grid mode supports at most three non-base subset points"));
    }

    let mut probes = canonical_probes(n);
    for probe in &opts.probes {
        if probe.len() != n {
            return Err(Error::input(format!("probe has {} coefficients, expected {n}", probe.len())));
        }
        probes.push(probe.clone());
    }
    let mut evaluations = 0u64;
    let mut best_probe: Option<(f64, Vec<f64>)> = None;
    for mut v in probes {
        if !sup_normalize(&mut v) {
            continue;
        }
        let r = ev.ratio(&v)?;
        evaluations += 1;
        if best_probe.as_ref().is_none_or(|(b, _)| r > *b) {
            best_probe = Some((r, v));
        }
    }
    let (_, probe_point) = best_probe.expect("all-ones probe is nonzero");

    let mut starts: Vec<(Vec<f64>, f64)> = vec![(probe_point, 0.25)];
    for s in 1..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if !sup_normalize(&mut v) {
            v = vec![1.0; n];
        }
        starts.push((v, 0.25));
    }
    if opts.grid {
        let grid = sphere_grid(n, GRID_RESOLUTION);
        let values = grid.par_iter().map(|v| ev.ratio(v)).collect::<Result<Vec<f64>>>()?;
        evaluations += grid.len() as u64;
        let mut ranked: Vec<usize> = (0..grid.len()).collect();
        ranked.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
        for &i in ranked.iter().take(GRID_REFINE) {
            starts.push((grid[i].clone(), 0.01));
        }
    }

    let locals = starts
        .into_par_iter()
        .map(|(v, step)| pattern_search(&ev, v, step, opts.tol, opts.max_evaluations_per_start))
        .collect::<Result<Vec<LocalResult>>>()?;
    evaluations += locals.iter().map(|l| l.evaluations).sum::<u64>();
    let best = locals
        .iter()
        .enumerate()
        .fold(0, |b, (i, l)| if l.value > locals[b].value { i } else { b });
    let best_value = locals[best].value;
    let close = locals.iter().filter(|l| best_value - l.value <= opts.tol * best_value).count();

    let point = locals[best].point.clone();
    let detail = ev.detail(&point)?;
    evaluations += 1;
    Ok(AmenEstimate {
        value: detail.ratio,
        value_p: detail.ratio.powf(p),
        witness: ev.molecule(&point)?,
        witness_tree_n: detail.norm_n.witness,
        witness_tree_m: detail.norm_m.witness,
        subset: ev.subset.clone(),
        starts: locals.len(),
        evaluations,
        converged: close >= 2,
    })
}

fn check_three(d_x: f64, d_y: f64, d_xy: f64, p: f64) -> Result<[f64; 3]> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Exponent { p, q: 1.0 });
    }
    let d = [d_x, d_y, d_xy];
    if d.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::input("distances must be positive and finite"));
    }
    let s = d.map(|x| x.powf(p));
    for i in 0..3 {
        if s[i] > (s[(i + 1) % 3] + s[(i + 2) % 3]) * (1.0 + METRIC_TOLERANCE) {
            return Err(Error::input(format!("distances {d_x}, {d_y}, {d_xy} violate the {p}-triangle inequality")));
        }
    }
    Ok(s)
}

/// Whether one of the three p-triangle inequalities on `{0, x, y}` is an
/// equality; for `p < 1` this is exactly when the space embeds
/// isometrically into every superspace.
pub fn isometric_3pt_test(d_x: f64, d_y: f64, d_xy: f64, p: f64) -> Result<bool> {
    let s = check_three(d_x, d_y, d_xy, p)?;
    Ok((0..3).any(|i| {
        let rhs = s[(i + 1) % 3] + s[(i + 2) % 3];
        (s[i] - rhs).abs() <= METRIC_TOLERANCE * rhs
    }))
}

/// `{0, x, y}` extended by a point `z` that lowers the norm of every
/// `a δ(x) + b δ(y)` as much as possible.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreePointExtension {
    /// Points `0, x, y, z` in that order, a `p`-metric space.
    pub space: PMetricSpace,
    pub p: f64,
    d_pow: [f64; 3],
}

impl ThreePointExtension {
    /// `‖a δ(x) + b δ(y)‖` in the extended space.
    pub fn norm(&self, a: f64, b: f64) -> f64 {
        let p = self.p;
        let [dx, dy, dxy] = self.d_pow;
        let (pa, pb, ps) = (a.abs().powf(p), b.abs().powf(p), (a + b).abs().powf(p));
        let v = dx * (ps + pa - pb) / 2.0 + dy * (ps + pb - pa) / 2.0 + dxy * (pa + pb - ps) / 2.0;
        v.max(0.0).powf(1.0 / p)
    }

    /// Distances from `z` to `0`, `x`, `y`.
    pub fn z_distances(&self) -> [f64; 3] {
        [self.space.dist(3, 0), self.space.dist(3, 1), self.space.dist(3, 2)]
    }
}

pub fn optimal_extension_3pt(d_x: f64, d_y: f64, d_xy: f64, p: f64) -> Result<ThreePointExtension> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Exponent { p, q: 1.0 });
    }
    let s = check_three(d_x, d_y, d_xy, p)?;
    if isometric_3pt_test(d_x, d_y, d_xy, p)? {
        return Err(Error::Precondition(
            "the extension needs all three p-triangle inequalities to be strict".into(),
        ));
    }
    let [sx, sy, sxy] = s;
    let root = |v: f64| (v / 2.0).powf(1.0 / p);
    let z0 = root(sx + sy - sxy);
    let zx = root(sx + sxy - sy);
    let zy = root(sy + sxy - sx);
    let dist = vec![
        vec![0.0, d_x, d_y, z0],
        vec![d_x, 0.0, d_xy, zx],
        vec![d_y, d_xy, 0.0, zy],
        vec![z0, zx, zy, 0.0],
    ];
    let labels = ["0", "x", "y", "z"].map(String::from).to_vec();
    let space = PMetricSpace::new(labels, 0, p, dist)?;
    Ok(ThreePointExtension { space, p, d_pow: s })
}

/// A weighted tree with its path metric, the leaf subspace and a molecule
/// on it.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeWitness {
    pub tree: WeightedRootedTree,
    pub space: PMetricSpace,
    pub subset: Vec<usize>,
    pub molecule: Molecule,
}

impl TreeWitness {
    pub fn ratio(&self, p: f64) -> Result<f64> {
        let opts = RatioOptions { prune: true, ..RatioOptions::default() };
        Ok(embedding_ratio_detail(&self.space, &self.subset, &self.molecule, p, &opts)?.ratio)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OneExtraPointBound {
    pub lower: f64,
    pub upper: f64,
    pub witness: TreeWitness,
}

/// Bounds for one added point: `2^{1/q} / (1 + n^{p-1})^{1/p}` from below
/// and `2^{1/q}` from above. The witness is the unit-weight tree
/// `0 - z - x_i` with coefficients `n^{-1/p}` on the leaves `x_1..x_n`.
pub fn bound_one_extra_point(n: usize, p: f64, q: f64) -> Result<OneExtraPointBound> {
    if n < 2 {
        return Err(Error::input("n must be at least 2"));
    }
    check_exponent(p, q)?;
    let upper = 2f64.powf(1.0 / q);
    let lower = upper / (1.0 + (n as f64).powf(p - 1.0)).powf(1.0 / p);
    let mut labels = vec!["0".to_string(), "z".to_string()];
    labels.extend((1..=n).map(|i| format!("x{i}")));
    let mut edges = vec![(0, 1, 1.0)];
    edges.extend((2..n + 2).map(|i| (1, i, 1.0)));
    let tree = WeightedRootedTree::from_edges(labels, 0, &edges)?;
    let space = path_p_metric(&tree, q)?;
    let mut subset = vec![0];
    subset.extend(2..n + 2);
    let c = (n as f64).powf(-1.0 / p);
    let pairs: Vec<(usize, f64)> = (2..n + 2).map(|i| (i, c)).collect();
    let molecule = Molecule::from_pairs(n + 2, &pairs)?;
    Ok(OneExtraPointBound { lower, upper, witness: TreeWitness { tree, space, subset, molecule } })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointBound {
    /// Weight of the root edge `(0, z)`.
    pub root_weight: f64,
    pub bound: f64,
    pub bound_p: f64,
    /// `4 / (4 + 2^p (2^p - 2))`, which coincides with `bound_p` when `p = q`.
    pub closed_form: f64,
    pub witness: TreeWitness,
}

/// Lower bound for two-point subspaces from the tree `0 - z - {x, y}` with
/// unit leaf edges and coefficients `(1, 1)`.
pub fn bound_two_points(p: f64, q: f64) -> Result<TwoPointBound> {
    check_exponent(p, q)?;
    if p >= 1.0 {
        return Err(Error::Exponent { p, q });
    }
    let two_p = 2f64.powf(p);
    let base = (2.0 - two_p).powf(q / p);
    let root_weight = (2.0 / base - 1.0).powf(1.0 / q);
    let bound_p = 2.0 * 2f64.powf(p / q) / (two_p * (2.0 - base).powf(p / q) + 2.0 * (2.0 - two_p));
    let closed_form = 4.0 / (4.0 + two_p * (two_p - 2.0));
    let labels = ["0", "z", "x", "y"].map(String::from).to_vec();
    let tree = WeightedRootedTree::from_edges(labels, 0, &[(0, 1, root_weight), (1, 2, 1.0), (1, 3, 1.0)])?;
    let space = path_p_metric(&tree, q)?;
    let molecule = Molecule::new(vec![0.0, 0.0, 1.0, 1.0])?;
    Ok(TwoPointBound {
        root_weight,
        bound: bound_p.powf(1.0 / p),
        bound_p,
        closed_form,
        witness: TreeWitness { tree, space, subset: vec![0, 2, 3], molecule },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetractBound {
    /// `(k - n + 1)^{1/q}`, for `n` subset points among `k`.
    pub pair: f64,
    /// `n^{1/q}`, for any superspace.
    pub absolute: f64,
}

/// Caps from Lipschitz retractions onto the subset.
pub fn retract_upper_bound(n: usize, k: usize, q: f64) -> Result<RetractBound> {
    if n < 2 || n >= k {
        return Err(Error::input(format!("need 2 <= n < k, got n = {n}, k = {k}")));
    }
    check_exponent(q, 1.0)?;
    Ok(RetractBound {
        pair: ((k - n + 1) as f64).powf(1.0 / q),
        absolute: (n as f64).powf(1.0 / q),
    })
}

/// `7 · 12^{1/p - 1}`, a cap for metric superspaces.
pub fn metric_amen_bound(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::input(format!("the metric bound needs 0 < p < 1, got {p}")));
    }
    Ok(7.0 * 12f64.powf(1.0 / p - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_witness_n2() {
        let b = bound_one_extra_point(2, 0.5, 0.5).unwrap();
        assert!((b.lower - 1.3725830020304792).abs() < 1e-12);
        assert_eq!(b.upper, 4.0);
        assert!((b.witness.ratio(0.5).unwrap() - b.lower).abs() < 1e-12);
    }

    #[test]
    fn two_point_half() {
        let b = bound_two_points(0.5, 0.5).unwrap();
        assert!((b.root_weight - 5.828427124746).abs() < 1e-9);
        assert!((b.bound_p - 1.2612038749637).abs() < 1e-9);
        assert!((b.bound - 1.5906352142235).abs() < 1e-9);
        assert!((b.closed_form - b.bound_p).abs() < 1e-12);
        let r = b.witness.ratio(0.5).unwrap();
        assert!((r - b.bound).abs() < 1e-12);
        assert!(bound_two_points(1.0, 1.0).is_err());
    }

    #[test]
    fn retract_and_metric_caps() {
        assert_eq!(retract_upper_bound(2, 3, 0.5).unwrap().pair, 4.0);
        assert_eq!(retract_upper_bound(4, 6, 1.0).unwrap().absolute, 4.0);
        assert!(retract_upper_bound(3, 3, 1.0).is_err());
        assert!((metric_amen_bound(0.5).unwrap() - 84.0).abs() < 1e-12);
        assert!((metric_amen_bound(2.0 / 3.0).unwrap() - 24.248711305964).abs() < 1e-9);
        assert!(metric_amen_bound(1.0).is_err());
    }

    #[test]
    fn three_point_tools() {
        assert!(isometric_3pt_test(1.0, 1.0, 4.0, 0.5).unwrap());
        assert!(!isometric_3pt_test(1.0, 1.0, 1.0, 0.5).unwrap());
        assert!(isometric_3pt_test(1.0, 2.0, 1.0, 1.0).unwrap());
        let ext = optimal_extension_3pt(1.0, 1.0, 1.0, 0.5).unwrap();
        for d in ext.z_distances() {
            assert!((d - 0.25).abs() < 1e-12);
        }
        assert!((ext.norm(1.0, 1.0).powf(0.5) - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        assert!((ext.norm(1.0, -1.0) - 1.0).abs() < 1e-12);
        assert!(matches!(optimal_extension_3pt(1.0, 1.0, 4.0, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_point_ratio_is_one() {
        let b = bound_two_points(0.5, 0.5).unwrap();
        let a = Molecule::new(vec![0.0, 0.0, 0.0, 2.5]).unwrap();
        let r = embedding_ratio(&b.witness.space, &[0, 2, 3], &a, 0.5).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(embedding_ratio(&b.witness.space, &[0, 2, 3], &Molecule::zeros(4), 0.5).is_err());
        let off = Molecule::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(embedding_ratio(&b.witness.space, &[0, 2, 3], &off, 0.5).is_err());
    }

    #[test]
    fn estimate_reaches_two_point_bound() {
        let b = bound_two_points(0.5, 0.5).unwrap();
        let est = amen_estimate(&b.witness.space, &b.witness.subset, 0.5, &AmenOptions::default()).unwrap();
        assert!(est.value >= b.bound - 1e-6, "{}", est.value);
        assert!(est.value <= 4.0 + 1e-9);
        let again = amen_estimate(&b.witness.space, &b.witness.subset, 0.5, &AmenOptions::default()).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(&[1, 2, 3, 4], 2).len(), 6);
        assert_eq!(combinations(&[1, 2], 0), vec![Vec::<usize>::new()]);
        assert!(combinations(&[1], 2).is_empty());
    }
}
