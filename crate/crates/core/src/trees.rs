//! Rooted labeled trees on a point set.
//!
//! Trees are enumerated through Prüfer sequences in lexicographic order: a
//! sequence of length `m - 2` over `{0..m-1}` decodes to an undirected
//! labeled tree, which is then oriented toward the chosen root. Every tree
//! appears exactly once, so there are `m^(m-2)` of them.

use crate::error::{Error, Result};
use crate::space::{Molecule, PMetricSpace};

/// Default enumeration guard: at most this many points (about 10^8 trees).
pub const DEFAULT_MAX_POINTS: usize = 10;
/// Absolute limit for the guard override; counts stay within `u64`.
pub const HARD_MAX_POINTS: usize = 16;

const NONE: usize = usize::MAX;

/// A tree on vertices `0..m` rooted at `root`, stored as a parent array.
///
/// `order` lists every vertex in nonincreasing rank, so each child is
/// visited before its parent and the root comes last.
#[derive(Clone, Debug)]
pub struct RootedTreeTopology {
    root: usize,
    parent: Vec<usize>,
    rank: Vec<usize>,
    order: Vec<usize>,
}

// rank and order are derived from parent.
impl PartialEq for RootedTreeTopology {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.parent == other.parent
    }
}

impl Eq for RootedTreeTopology {}

impl RootedTreeTopology {
    fn empty(m: usize) -> Self {
        RootedTreeTopology {
            root: 0,
            parent: vec![NONE; m],
            rank: vec![0; m],
            order: Vec::with_capacity(m),
        }
    }

    /// Builds a topology from `parent[x]` (`None` exactly at the root).
    pub fn from_parents(root: usize, parent: &[Option<usize>]) -> Result<Self> {
        let m = parent.len();
        if root >= m {
            return Err(Error::input(format!("root {root} out of range")));
        }
        if parent[root].is_some() {
            return Err(Error::input("the root cannot have a parent"));
        }
        let mut adj = vec![Vec::new(); m];
        for (x, p) in parent.iter().enumerate() {
            match *p {
                None if x != root => {
                    return Err(Error::input(format!("vertex {x} has no parent")));
                }
                Some(p) if p >= m || p == x => {
                    return Err(Error::input(format!("vertex {x} has invalid parent {p}")));
                }
                Some(p) => adj[p].push(x),
                None => {}
            }
        }
        let mut t = Self::empty(m);
        t.root = root;
        let mut queue = vec![root];
        let mut head = 0;
        while head < queue.len() {
            let x = queue[head];
            head += 1;
            for &y in &adj[x] {
                t.parent[y] = x;
                t.rank[y] = t.rank[x] + 1;
                queue.push(y);
            }
        }
        if queue.len() != m {
            return Err(Error::input("parent array contains a cycle"));
        }
        queue.reverse();
        t.order = queue;
        Ok(t)
    }

    /// The star with every other vertex attached to `root`.
    pub fn star(m: usize, root: usize) -> Result<Self> {
        let parent: Vec<Option<usize>> =
            (0..m).map(|x| if x == root { None } else { Some(root) }).collect();
        Self::from_parents(root, &parent)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    #[inline]
    pub fn parent(&self, x: usize) -> Option<usize> {
        let p = self.parent[x];
        (p != NONE).then_some(p)
    }

    /// Length of the path from the root.
    pub fn rank(&self, x: usize) -> usize {
        self.rank[x]
    }

    /// Vertices in nonincreasing rank; the root is last.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn children(&self, x: usize) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.parent[y] == x).collect()
    }

    pub fn child_count(&self, x: usize) -> usize {
        self.parent.iter().filter(|&&p| p == x).count()
    }

    /// Non-root vertices without children.
    pub fn leaves(&self) -> Vec<usize> {
        let mut has_child = vec![false; self.len()];
        for &p in &self.parent {
            if p != NONE {
                has_child[p] = true;
            }
        }
        (0..self.len())
            .filter(|&x| x != self.root && !has_child[x])
            .collect()
    }

    /// Oriented edges `(parent, child)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).filter_map(move |x| self.parent(x).map(|p| (p, x)))
    }

    /// Vertices of the subtree rooted at `x`, ascending.
    pub fn subtree(&self, x: usize) -> Vec<usize> {
        let mut inside = vec![false; self.len()];
        inside[x] = true;
        // Parents come after children in `order`, so walk it backwards.
        for &y in self.order.iter().rev() {
            if let Some(p) = self.parent(y) {
                if inside[p] {
                    inside[y] = true;
                }
            }
        }
        (0..self.len()).filter(|&y| inside[y]).collect()
    }

    /// Prüfer sequence of the underlying undirected tree.
    pub fn to_pruefer(&self) -> Vec<usize> {
        let m = self.len();
        if m <= 2 {
            return Vec::new();
        }
        let mut adj = vec![Vec::new(); m];
        for (u, v) in self.edges() {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut removed = vec![false; m];
        let mut seq = Vec::with_capacity(m - 2);
        for _ in 0..m - 2 {
            let leaf = (0..m)
                .find(|&v| !removed[v] && degree[v] == 1)
                .expect("a tree always has a leaf");
            removed[leaf] = true;
            let nb = *adj[leaf]
                .iter()
                .find(|&&v| !removed[v])
                .expect("leaf has a neighbour");
            degree[nb] -= 1;
            seq.push(nb);
        }
        seq
    }
}

/// Reusable buffers for decoding Prüfer sequences in a hot loop.
pub(crate) struct PrueferDecoder {
    m: usize,
    degree: Vec<usize>,
    adj_len: Vec<usize>,
    adj: Vec<usize>,
    queue: Vec<usize>,
}

impl PrueferDecoder {
    pub(crate) fn new(m: usize) -> Self {
        PrueferDecoder {
            m,
            degree: vec![0; m],
            adj_len: vec![0; m],
            adj: vec![0; m * m],
            queue: Vec::with_capacity(m),
        }
    }

    pub(crate) fn blank(&self) -> RootedTreeTopology {
        RootedTreeTopology::empty(self.m)
    }

    #[inline]
    fn link(&mut self, u: usize, v: usize) {
        let m = self.m;
        self.adj[u * m + self.adj_len[u]] = v;
        self.adj_len[u] += 1;
        self.adj[v * m + self.adj_len[v]] = u;
        self.adj_len[v] += 1;
    }

    /// Decodes `seq` (length `m - 2`, entries in range) rooted at `root`.
    pub(crate) fn decode_into(&mut self, seq: &[usize], root: usize, out: &mut RootedTreeTopology) {
        let m = self.m;
        debug_assert_eq!(seq.len() + 2, m);
        self.adj_len.iter_mut().for_each(|l| *l = 0);
        if m == 2 {
            self.link(0, 1);
        } else {
            self.degree.iter_mut().for_each(|d| *d = 1);
            for &s in seq {
                self.degree[s] += 1;
            }
            let mut ptr = 0;
            while self.degree[ptr] != 1 {
                ptr += 1;
            }
            let mut leaf = ptr;
            for &v in seq {
                self.link(leaf, v);
                self.degree[v] -= 1;
                if self.degree[v] == 1 && v < ptr {
                    leaf = v;
                } else {
                    ptr += 1;
                    while self.degree[ptr] != 1 {
                        ptr += 1;
                    }
                    leaf = ptr;
                }
            }
            self.link(leaf, m - 1);
        }
        // Breadth-first orientation; reversed BFS order is nonincreasing rank.
        out.root = root;
        out.parent[root] = NONE;
        out.rank[root] = 0;
        self.queue.clear();
        self.queue.push(root);
        let mut head = 0;
        while head < self.queue.len() {
            let x = self.queue[head];
            head += 1;
            for k in 0..self.adj_len[x] {
                let y = self.adj[x * m + k];
                if y != out.parent[x] {
                    out.parent[y] = x;
                    out.rank[y] = out.rank[x] + 1;
                    self.queue.push(y);
                }
            }
        }
        out.order.clear();
        out.order.extend(self.queue.iter().rev());
    }
}

/// Extends a tree on the sorted subset `keep` (local indices) to all `m`
/// points by hanging every other point directly off `root` (a global index).
pub(crate) fn lift_topology(
    local: &RootedTreeTopology,
    keep: &[usize],
    m: usize,
    root: usize,
) -> Result<RootedTreeTopology> {
    let parents: Vec<Option<usize>> = (0..m)
        .map(|g| match keep.binary_search(&g) {
            Ok(l) => local.parent(l).map(|pl| keep[pl]),
            Err(_) => Some(root),
        })
        .collect();
    RootedTreeTopology::from_parents(root, &parents)
}

/// Decodes a Prüfer sequence over `{0..m-1}` (with `m = seq.len() + 2`)
/// into a tree rooted at `root`.
pub fn pruefer_decode(seq: &[usize], root: usize) -> Result<RootedTreeTopology> {
    let m = seq.len() + 2;
    if let Some(&bad) = seq.iter().find(|&&s| s >= m) {
        return Err(Error::input(format!("Prüfer symbol {bad} out of range 0..{m}")));
    }
    if root >= m {
        return Err(Error::input(format!("root {root} out of range 0..{m}")));
    }
    let mut dec = PrueferDecoder::new(m);
    let mut t = dec.blank();
    dec.decode_into(seq, root, &mut t);
    Ok(t)
}

/// Number of labeled trees on `m` vertices, `m^(m-2)`.
pub fn tree_count(m: usize) -> Option<u64> {
    match m {
        0 => None,
        1 | 2 => Some(1),
        _ => (m as u64).checked_pow((m - 2) as u32),
    }
}

/// One shard out of `total`; shards split the lexicographic Prüfer order
/// into contiguous prefix ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Partition {
    pub shard: usize,
    pub total: usize,
}

/// Prefix length and the half-open range of prefixes owned by a shard.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PrefixRange {
    pub len: usize,
    pub lo: u64,
    pub hi: u64,
}

pub(crate) fn prefix_range(m: usize, part: Partition) -> PrefixRange {
    let seq_len = m.saturating_sub(2);
    let total = part.total as u64;
    let mut len = 0;
    let mut count: u64 = 1;
    while len < seq_len && count < total {
        count *= m as u64;
        len += 1;
    }
    let lo = (part.shard as u128 * count as u128 / total as u128) as u64;
    let hi = ((part.shard as u128 + 1) * count as u128 / total as u128) as u64;
    PrefixRange { len, lo, hi }
}

fn check_enumeration(m: usize, root: usize, partition: Option<Partition>, max_points: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::input("tree enumeration needs at least two vertices"));
    }
    if root >= m {
        return Err(Error::input(format!("root {root} out of range")));
    }
    let limit = max_points.min(HARD_MAX_POINTS);
    if m > limit {
        return Err(Error::Capacity(format!(
            "{m} points exceed the enumeration limit of {limit} ({} trees)",
            tree_count(m).map_or("too many".to_string(), |c| c.to_string())
        )));
    }
    if let Some(p) = partition {
        if p.total == 0 || p.shard >= p.total {
            return Err(Error::input(format!(
                "invalid partition: shard {} of {}",
                p.shard, p.total
            )));
        }
    }
    Ok(())
}

/// Lazily yields every rooted tree on `m` vertices (or one shard of them)
/// in lexicographic Prüfer order.
pub struct RootedTreeIter {
    root: usize,
    seq: Vec<usize>,
    remaining: u64,
    decoder: PrueferDecoder,
}

impl Iterator for RootedTreeIter {
    type Item = RootedTreeTopology;

    fn next(&mut self) -> Option<RootedTreeTopology> {
        if self.remaining == 0 {
            return None;
        }
        let mut t = self.decoder.blank();
        self.decoder.decode_into(&self.seq, self.root, &mut t);
        self.remaining -= 1;
        let m = self.decoder.m;
        for digit in self.seq.iter_mut().rev() {
            *digit += 1;
            if *digit < m {
                break;
            }
            *digit = 0;
        }
        Some(t)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// Enumerates rooted trees with the default capacity guard.
pub fn enumerate_rooted_trees(
    m: usize,
    root: usize,
    partition: Option<Partition>,
) -> Result<RootedTreeIter> {
    enumerate_rooted_trees_limited(m, root, partition, DEFAULT_MAX_POINTS)
}

/// Enumerates rooted trees with an explicit capacity guard.
pub fn enumerate_rooted_trees_limited(
    m: usize,
    root: usize,
    partition: Option<Partition>,
    max_points: usize,
) -> Result<RootedTreeIter> {
    check_enumeration(m, root, partition, max_points)?;
    let seq_len = m - 2;
    let part = partition.unwrap_or(Partition { shard: 0, total: 1 });
    let range = prefix_range(m, part);
    let suffix = (m as u64).pow((seq_len - range.len) as u32);
    let mut seq = vec![0; seq_len];
    let mut lo = range.lo;
    for i in (0..range.len).rev() {
        seq[i] = (lo % m as u64) as usize;
        lo /= m as u64;
    }
    Ok(RootedTreeIter {
        root,
        seq,
        remaining: (range.hi - range.lo) * suffix,
        decoder: PrueferDecoder::new(m),
    })
}

/// Depth-first walk over Prüfer sequences of one prefix range in
/// lexicographic order, optionally requiring each symbol `v` to occur at
/// least `min_count[v]` times.
pub(crate) struct SequenceWalker<'a> {
    m: usize,
    seq: Vec<usize>,
    count: Vec<u32>,
    min_count: Option<&'a [u32]>,
}

impl<'a> SequenceWalker<'a> {
    pub(crate) fn new(m: usize, min_count: Option<&'a [u32]>) -> Self {
        SequenceWalker {
            m,
            seq: vec![0; m.saturating_sub(2)],
            count: vec![0; m],
            min_count,
        }
    }

    fn missing(&self) -> usize {
        match self.min_count {
            None => 0,
            Some(mins) => mins
                .iter()
                .zip(&self.count)
                .map(|(&lo, &c)| lo.saturating_sub(c) as usize)
                .sum(),
        }
    }

    /// Calls `f` on every admissible sequence whose prefix lies in `range`.
    pub(crate) fn walk<F: FnMut(&[usize])>(&mut self, range: PrefixRange, f: &mut F) {
        let m = self.m as u64;
        let len = self.seq.len();
        for prefix in range.lo..range.hi {
            self.count.iter_mut().for_each(|c| *c = 0);
            let mut x = prefix;
            for i in (0..range.len).rev() {
                let v = (x % m) as usize;
                x /= m;
                self.seq[i] = v;
                self.count[v] += 1;
            }
            let missing = self.missing();
            if missing <= len - range.len {
                self.dfs(range.len, missing, f);
            }
        }
    }

    fn dfs<F: FnMut(&[usize])>(&mut self, pos: usize, missing: usize, f: &mut F) {
        let len = self.seq.len();
        if pos == len {
            f(&self.seq);
            return;
        }
        let left_after = len - pos - 1;
        for v in 0..self.m {
            let need = match self.min_count {
                Some(mins) if self.count[v] < mins[v] => missing - 1,
                _ => missing,
            };
            if need > left_after {
                continue;
            }
            self.seq[pos] = v;
            self.count[v] += 1;
            self.dfs(pos + 1, need, f);
            self.count[v] -= 1;
        }
    }
}

/// `c[x]`: sum of the molecule's coefficients over the subtree rooted at `x`.
pub fn subtree_sums(tree: &RootedTreeTopology, a: &Molecule) -> Result<Vec<f64>> {
    if a.len() != tree.len() {
        return Err(Error::input("molecule and tree have different vertex counts"));
    }
    let mut c = a.coeffs().to_vec();
    accumulate(tree, &mut c);
    Ok(c)
}

#[inline]
pub(crate) fn accumulate(tree: &RootedTreeTopology, c: &mut [f64]) {
    for &x in &tree.order {
        let p = tree.parent[x];
        if p != NONE {
            c[p] += c[x];
        }
    }
}

/// `T(a)` and its p-th power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeValue {
    pub value: f64,
    pub p_power: f64,
}

impl TreeValue {
    pub(crate) fn from_power(p_power: f64, p: f64) -> Self {
        TreeValue { value: p_power.powf(1.0 / p), p_power }
    }
}

/// `T(a)^p = sum over non-root x of |c[x] d(x, parent(x))|^p`.
pub fn tree_value(
    tree: &RootedTreeTopology,
    a: &Molecule,
    space: &PMetricSpace,
    p: f64,
) -> Result<TreeValue> {
    space.check_exponent(p)?;
    if tree.len() != space.len() {
        return Err(Error::input("tree and space have different point counts"));
    }
    if tree.root() != space.base() {
        return Err(Error::input("the tree must be rooted at the base point"));
    }
    a.check_for(space)?;
    let c = subtree_sums(tree, a)?;
    let p_power = tree
        .edges()
        .map(|(u, x)| (c[x] * space.dist(u, x)).abs().powf(p))
        .sum();
    Ok(TreeValue::from_power(p_power, p))
}

/// One side of a tree split: a tree on a subset of the original vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePart {
    /// Original indices, ascending; local vertex `i` is `vertices[i]`.
    pub vertices: Vec<usize>,
    /// Tree on local indices, rooted at the local image of the part's root.
    pub tree: RootedTreeTopology,
    /// Coefficients on local indices; zero at the part's root.
    pub molecule: Molecule,
}

impl TreePart {
    fn build(vertices: Vec<usize>, root: usize, parent_of: impl Fn(usize) -> usize, coeffs: Vec<f64>) -> Result<Self> {
        let local = |g: usize| vertices.binary_search(&g).expect("vertex in part");
        let parents: Vec<Option<usize>> = vertices
            .iter()
            .map(|&g| if g == root { None } else { Some(local(parent_of(g))) })
            .collect();
        let tree = RootedTreeTopology::from_parents(local(root), &parents)?;
        let molecule = Molecule::new(coeffs)?;
        Ok(TreePart { vertices, tree, molecule })
    }

    /// The part's point set as a space pointed at the part's root.
    pub fn space(&self, original: &PMetricSpace) -> Result<PMetricSpace> {
        let root = self.vertices[self.tree.root()];
        original.rebased(root)?.restrict(&self.vertices)
    }

    pub fn value(&self, original: &PMetricSpace, p: f64) -> Result<TreeValue> {
        tree_value(&self.tree, &self.molecule, &self.space(original)?, p)
    }
}

/// Splits a tree at the non-root internal vertex `x0` into the subtree at
/// `x0` (rooted there, with `a` restricted to it) and the remainder (rooted
/// at the original root, with the subtree's total mass placed on `x0`).
/// Then `T(a)^p = T1(a1)^p + T2(a2)^p`.
pub fn split_at_vertex(
    tree: &RootedTreeTopology,
    a: &Molecule,
    x0: usize,
) -> Result<(TreePart, TreePart)> {
    if a.len() != tree.len() {
        return Err(Error::input("molecule and tree have different vertex counts"));
    }
    if x0 >= tree.len() || x0 == tree.root() {
        return Err(Error::input("split vertex must be a non-root vertex"));
    }
    if tree.child_count(x0) == 0 {
        return Err(Error::input("split vertex must have a descendant"));
    }
    let sub = tree.subtree(x0);
    let parent_of = |g: usize| tree.parent(g).expect("non-root vertex");

    let a1: Vec<f64> = sub.iter().map(|&g| if g == x0 { 0.0 } else { a.get(g) }).collect();
    let part1 = TreePart::build(sub.clone(), x0, parent_of, a1)?;

    let mass: f64 = sub.iter().map(|&g| a.get(g)).sum();
    let rest: Vec<usize> = (0..tree.len())
        .filter(|g| *g == x0 || sub.binary_search(g).is_err())
        .collect();
    let a2: Vec<f64> = rest
        .iter()
        .map(|&g| if g == x0 { mass } else { a.get(g) })
        .collect();
    let part2 = TreePart::build(rest, tree.root(), parent_of, a2)?;
    Ok((part1, part2))
}
