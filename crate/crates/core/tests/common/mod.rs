#![allow(dead_code)]

use freep::{pruefer_decode, random_p_metric, Molecule, PMetricSpace, RootedTreeTopology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Minimum of `T(a)^p` over every parent function whose graph is a tree
/// rooted at the base. Independent of the Prüfer machinery.
pub fn brute_norm_p(space: &PMetricSpace, a: &[f64], p: f64) -> f64 {
    let m = space.len();
    let root = space.base();
    let others: Vec<usize> = (0..m).filter(|&x| x != root).collect();
    let mut choice = vec![0usize; others.len()];
    let mut best = f64::INFINITY;
    'outer: loop {
        let mut parent = vec![usize::MAX; m];
        for (i, &x) in others.iter().enumerate() {
            let cands: Vec<usize> = (0..m).filter(|&y| y != x).collect();
            parent[x] = cands[choice[i]];
        }
        let mut acyclic = true;
        for &x in &others {
            let (mut y, mut steps) = (x, 0);
            while y != root {
                y = parent[y];
                steps += 1;
                if steps > m {
                    acyclic = false;
                    break;
                }
            }
        }
        if acyclic {
            let mut total = 0.0;
            for &x in &others {
                // c(x) = sum of a over vertices whose root path passes x.
                let mut c = 0.0;
                for &y in &others {
                    let mut z = y;
                    while z != root {
                        if z == x {
                            c += a[y];
                            break;
                        }
                        z = parent[z];
                    }
                }
                total += (c * space.dist(x, parent[x])).abs().powf(p);
            }
            best = best.min(total);
        }
        for i in 0..choice.len() {
            choice[i] += 1;
            if choice[i] < m - 1 {
                continue 'outer;
            }
            choice[i] = 0;
        }
        break;
    }
    best
}

pub fn random_molecule(space: &PMetricSpace, rng: &mut ChaCha8Rng) -> Molecule {
    let coeffs = (0..space.len())
        .map(|i| if i == space.base() { 0.0 } else { rng.gen_range(-3.0..3.0) })
        .collect();
    Molecule::new(coeffs).unwrap()
}

pub fn random_exponents(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let q: f64 = rng.gen_range(0.2..=1.0);
    let p = rng.gen_range(0.1..=q);
    (p, q)
}

pub fn random_space(m: usize, q: f64, rng: &mut ChaCha8Rng) -> PMetricSpace {
    random_p_metric(m, q, rng).unwrap()
}

pub fn random_tree(m: usize, root: usize, rng: &mut ChaCha8Rng) -> RootedTreeTopology {
    let seq: Vec<usize> = (0..m.saturating_sub(2)).map(|_| rng.gen_range(0..m)).collect();
    pruefer_decode(&seq, root).unwrap()
}
