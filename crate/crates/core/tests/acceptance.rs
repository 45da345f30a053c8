//! Acceptance checks, one test per criterion. Each test also prints a
//! single `PASS`/`FAIL` line with the measured quantities
//! (visible with `--nocapture`).

mod common;

use std::time::Instant;

use common::*;
use freep::amenability::{amen_estimate, AmenOptions};
use freep::norm::{free_norm_with, nearest_is_base, positive_violation_witness, NormOptions};
use freep::*;
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} {name} failed: {detail}");
}

#[test]
fn criterion_01_tree_count() {
    let t = Instant::now();
    let mut ok = true;
    let mut counts = Vec::new();
    for m in 2..=8usize {
        let n = enumerate_rooted_trees(m, 0, None).unwrap().count() as u64;
        ok &= n == (m as u64).pow(m as u32 - 2).max(1);
        counts.push(n);
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= counts[6] == 262_144 && secs < 5.0;
    report(1, "tree count", ok, format!("counts {counts:?}, {secs:.3} s"));
}

#[test]
fn criterion_02_three_point_oracle() {
    let mut rng = rng(2);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let p = [0.3, 0.5, 0.7, 1.0][i % 4];
        let s = random_space(3, p, &mut rng);
        let a = random_molecule(&s, &mut rng);
        let n = free_norm(&s, &a, p).unwrap().value;
        let t = three_point_norm(s.dist(0, 1), s.dist(0, 2), s.dist(1, 2), a.get(1), a.get(2), p).unwrap();
        worst = worst.max((n - t).abs() / t.abs().max(1e-300));
    }
    report(2, "three-point oracle", worst <= 1e-12, format!("max rel err {worst:.2e}"));
}

/// Spaces where every point's nearest neighbour is the base: non-base
/// distances in `[1, 2]`, base distances in `[2^{1-1/q}, 1]`.
fn nearest_base_space(m: usize, q: f64, rng: &mut rand_chacha::ChaCha8Rng) -> PMetricSpace {
    let lo = 2f64.powf(1.0 - 1.0 / q);
    let mut d = vec![vec![0.0; m]; m];
    for i in 1..m {
        let r = if lo < 1.0 { rng.gen_range(lo..=1.0) } else { 1.0 };
        d[0][i] = r;
        d[i][0] = r;
        for j in i + 1..m {
            let x = rng.gen_range(1.0..=2.0);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    PMetricSpace::from_matrix(q, d).unwrap()
}

#[test]
fn criterion_03_positive_coefficients() {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    let mut cond_ok = true;
    for _ in 0..500 {
        let m = rng.gen_range(2..=6);
        let q: f64 = rng.gen_range(0.3..=1.0);
        let p = rng.gen_range(0.2..q.min(0.95));
        let s = nearest_base_space(m, q, &mut rng);
        cond_ok &= nearest_is_base(&s);
        let a = Molecule::new((0..m).map(|i| if i == 0 { 0.0 } else { rng.gen_range(0.0..3.0) }).collect()).unwrap();
        let r = positive_condition_and_norm(&s, &a, p).unwrap();
        cond_ok &= r.condition_holds;
        if r.closed_form_p_power > 0.0 {
            worst = worst.max((r.norm.p_power - r.closed_form_p_power).abs() / r.closed_form_p_power);
        }
    }
    let mut strict = 0;
    let mut tried = 0;
    while tried < 100 {
        let m = rng.gen_range(3..=6);
        let q: f64 = rng.gen_range(0.3..=1.0);
        let p = rng.gen_range(0.2..q.min(0.95));
        let s = random_space(m, q, &mut rng);
        if nearest_is_base(&s) {
            continue;
        }
        tried += 1;
        let (_, _, a) = positive_violation_witness(&s, p).unwrap().expect("violator has a witness");
        let r = positive_condition_and_norm(&s, &a, p).unwrap();
        if !r.condition_holds && r.norm.p_power < r.closed_form_p_power {
            strict += 1;
        }
    }
    report(
        3,
        "positive coefficients",
        cond_ok && worst <= 1e-12 && strict == 100,
        format!("max rel err {worst:.2e} on 500 spaces, {strict}/100 violators strictly below the star value"),
    );
}

#[test]
fn criterion_04_p1_isometry() {
    let mut rng = rng(4);
    let mut worst_norm = 0.0f64;
    let mut worst_amen = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(3..=8usize);
        let s = random_space(m, 1.0, &mut rng);
        let nsize = rng.gen_range(2..=m.min(5));
        let mut subset: Vec<usize> = rand::seq::index::sample(&mut rng, m - 1, nsize - 1).into_iter().map(|i| i + 1).collect();
        subset.push(0);
        subset.sort_unstable();
        let coeffs: Vec<f64> = (0..m).map(|i| if i != 0 && subset.contains(&i) { rng.gen_range(-3.0..3.0) } else { 0.0 }).collect();
        let a = Molecule::new(coeffs).unwrap();
        let nm = free_norm(&s, &a, 1.0).unwrap().value;
        let nn = free_norm(&s.restrict(&subset).unwrap(), &a.restricted(&subset), 1.0).unwrap().value;
        worst_norm = worst_norm.max((nm - nn).abs() / nn);
        let est = amen_estimate(&s, &subset, 1.0, &AmenOptions { starts: 2, ..AmenOptions::default() }).unwrap();
        worst_amen = worst_amen.max((est.value - 1.0).abs());
    }
    report(
        4,
        "p = 1 isometry",
        worst_norm <= 1e-9 && worst_amen <= 1e-6,
        format!("max norm rel diff {worst_norm:.2e}, max |amen - 1| {worst_amen:.2e}"),
    );
}

#[test]
fn criterion_05_one_extra_point() {
    let grid = [0.2, 0.4, 0.6, 0.8, 1.0];
    let mut failures = Vec::new();
    let mut checked = 0;
    for n in 2..=6usize {
        for &q in &grid {
            for &p in grid.iter().filter(|&&p| p <= q) {
                checked += 1;
                let b = bound_one_extra_point(n, p, q).unwrap();
                let ratio = b.witness.ratio(p).unwrap();
                let opts = AmenOptions { starts: 1, probes: vec![vec![1.0; n]], ..AmenOptions::default() };
                let est = amen_estimate(&b.witness.space, &b.witness.subset, p, &opts).unwrap();
                let exact = (ratio - b.lower).abs() <= 1e-12 * b.lower;
                if !exact || est.value < b.lower - 1e-6 {
                    failures.push(format!("n={n} p={p} q={q}: formula {:.6} ratio {:.6} estimate {:.6}", b.lower, ratio, est.value));
                }
            }
        }
    }
    let mut detail = format!("{}/{checked} cases match", checked - failures.len());
    if !failures.is_empty() {
        detail += &format!("; first mismatches: {}", failures.iter().take(4).cloned().collect::<Vec<_>>().join("; "));
    }
    report(5, "one extra point", failures.is_empty(), detail);
}

#[test]
fn criterion_06_one_extra_point_cap() {
    let mut rng = rng(6);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let m = rng.gen_range(3..=6usize);
        let (p, q) = random_exponents(&mut rng);
        let s = random_space(m, q, &mut rng);
        let drop = rng.gen_range(1..m);
        let subset: Vec<usize> = (0..m).filter(|&i| i != drop).collect();
        let est = amen_estimate(&s, &subset, p, &AmenOptions { starts: 3, ..AmenOptions::default() }).unwrap();
        worst = worst.max(est.value - 2f64.powf(1.0 / q));
    }
    report(6, "one extra point cap", worst <= 1e-9, format!("max (estimate - 2^(1/q)) = {worst:.3e}"));
}

#[test]
fn criterion_07_two_points() {
    let b = bound_two_points(0.5, 0.5).unwrap();
    let ratio = b.witness.ratio(0.5).unwrap();
    let rp = ratio.powf(0.5);
    let half_ok = (rp - 1.261204).abs() <= 1e-6 && (ratio - 1.590636).abs() <= 1e-6 && (b.root_weight - 5.828427).abs() <= 1e-6;
    let c = bound_two_points(2.0 / 3.0, 1.0).unwrap();
    let cr = c.witness.ratio(2.0 / 3.0).unwrap().powf(2.0 / 3.0);
    let two_thirds_ok = c.bound_p > 1.0 && (cr - c.bound_p).abs() <= 1e-9 * c.bound_p;
    report(
        7,
        "two points",
        half_ok && two_thirds_ok,
        format!(
            "p=q=1/2: ratio^p {rp:.7}, ratio {ratio:.7}, w {:.7}; p=2/3,q=1: bound^p {:.7}, witness ratio^p {cr:.7}",
            b.root_weight, c.bound_p
        ),
    );
}

#[test]
fn criterion_08_splitting() {
    let mut rng = rng(8);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 1000 {
        let m = rng.gen_range(3..=8usize);
        let t = random_tree(m, 0, &mut rng);
        let internal: Vec<usize> = (1..m).filter(|&x| t.child_count(x) > 0).collect();
        if internal.is_empty() {
            continue;
        }
        let x0 = internal[rng.gen_range(0..internal.len())];
        let (p, q) = random_exponents(&mut rng);
        let s = random_space(m, q, &mut rng);
        let a = random_molecule(&s, &mut rng);
        let whole = tree_value(&t, &a, &s, p).unwrap().p_power;
        let (t1, t2) = split_at_vertex(&t, &a, x0).unwrap();
        let parts = t1.value(&s, p).unwrap().p_power + t2.value(&s, p).unwrap().p_power;
        worst = worst.max((whole - parts).abs() / whole);
        done += 1;
    }
    report(8, "splitting identity", worst <= 1e-12, format!("max rel err {worst:.2e}"));
}

#[test]
fn criterion_09_pruning() {
    let mut rng = rng(9);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let m = rng.gen_range(3..=7usize);
        let (p, q) = random_exponents(&mut rng);
        let s = random_space(m, q, &mut rng);
        let mut a = random_molecule(&s, &mut rng).coeffs().to_vec();
        let zeros = rng.gen_range(1..m - 1);
        for i in rand::seq::index::sample(&mut rng, m - 1, zeros) {
            a[i + 1] = 0.0;
        }
        let a = Molecule::new(a).unwrap();
        let full = free_norm(&s, &a, p).unwrap().value;
        let pruned = free_norm_pruned(&s, &a, p).unwrap().value;
        worst = worst.max((full - pruned).abs() / full);
    }
    report(9, "pruning soundness", worst <= 1e-12, format!("max rel err {worst:.2e}"));
}

#[test]
fn criterion_10_norm_axioms() {
    let mut rng = rng(10);
    let (mut iso, mut hom, mut sym) = (0.0f64, 0.0f64, 0.0f64);
    let (mut tri, mut mono) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..500 {
        let m = rng.gen_range(3..=6usize);
        let (p, q) = random_exponents(&mut rng);
        let s = random_space(m, q, &mut rng);
        let x = rng.gen_range(0..m);
        let y = (x + rng.gen_range(1..m)) % m;
        let mut c = vec![0.0; m];
        c[x] += 1.0;
        c[y] -= 1.0;
        c[0] = 0.0;
        let n = free_norm(&s, &Molecule::new(c).unwrap(), p).unwrap().value;
        iso = iso.max((n - s.dist(x, y)).abs() / s.dist(x, y));

        let a = random_molecule(&s, &mut rng);
        let b = random_molecule(&s, &mut rng);
        let na = free_norm(&s, &a, p).unwrap();
        let lambda: f64 = rng.gen_range(-4.0..4.0);
        let nl = free_norm(&s, &a.scaled(lambda), p).unwrap().value;
        hom = hom.max((nl - lambda.abs() * na.value).abs() / na.value);
        let nneg = free_norm(&s, &a.scaled(-1.0), p).unwrap().value;
        sym = sym.max((nneg - na.value).abs() / na.value);
        let nb = free_norm(&s, &b, p).unwrap();
        let nsum = free_norm(&s, &a.sum(&b).unwrap(), p).unwrap();
        tri = tri.max((nsum.p_power - na.p_power - nb.p_power) / (na.p_power + nb.p_power));

        let keep: Vec<usize> = (0..m - 1).collect();
        let sub = s.restrict(&keep).unwrap();
        let mut ca = a.coeffs().to_vec();
        ca[m - 1] = 0.0;
        let on_m = free_norm(&s, &Molecule::new(ca.clone()).unwrap(), p).unwrap().value;
        let on_n = free_norm(&sub, &Molecule::new(ca[..m - 1].to_vec()).unwrap(), p).unwrap().value;
        if on_n > 0.0 {
            mono = mono.max((on_m - on_n) / on_n);
        }
    }
    let ok = iso <= 1e-12 && hom <= 1e-12 && sym <= 1e-12 && tri <= 1e-12 && mono <= 1e-12;
    report(
        10,
        "isometry and norm axioms",
        ok,
        format!("isometry {iso:.1e}, homogeneity {hom:.1e}, symmetry {sym:.1e}, p-triangle excess {tri:.1e}, monotonicity excess {mono:.1e}"),
    );
}

#[test]
fn criterion_11_bounds_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let mut config = SearchConfig::new(SearchMode::WeightedTree, 2, 3, 0.5, 0.5, 10_000, 11, dir.path().join("half.csv"));
    config.starts_per_instance = 2;
    let s = search_campaign(&config).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let cap = retract_upper_bound(2, 3, 0.5).unwrap().pair;
    let all_capped = s.records.iter().all(|r| r.ratio <= cap + 1e-9);
    let in_range = (1.5905..=4.0).contains(&s.max_ratio);

    let mut metric = SearchConfig::new(SearchMode::WeightedTree, 3, 5, 0.5, 1.0, 300, 12, dir.path().join("metric.csv"));
    metric.starts_per_instance = 2;
    let ms = search_campaign(&metric).unwrap();
    let mcap = retract_upper_bound(3, 5, 1.0).unwrap().pair.min(metric_amen_bound(0.5).unwrap());
    let metric_ok = ms.records.iter().all(|r| r.ratio <= mcap + 1e-9) && ms.within_metric_cap == Some(true);
    report(
        11,
        "bounds consistency",
        all_capped && in_range && metric_ok,
        format!(
            "10^4 instances in {secs:.1} s, max ratio {:.6} (cap {cap}); q=1 campaign max {:.6} (cap {mcap})",
            s.max_ratio, ms.max_ratio
        ),
    );
}

#[test]
fn criterion_12_performance() {
    let mut rng = rng(12);
    let s8 = random_space(8, 0.8, &mut rng);
    let a8 = random_molecule(&s8, &mut rng);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    single.install(|| free_norm_with(&s8, &a8, 0.5, &NormOptions::sequential()).unwrap());
    let m8 = t.elapsed().as_secs_f64();

    let s9 = random_space(9, 0.8, &mut rng);
    let a9 = random_molecule(&s9, &mut rng);
    let parallel = NormOptions { parallel: Some(true), ..NormOptions::default() };
    let time_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let t = Instant::now();
        let r = pool.install(|| free_norm_with(&s9, &a9, 0.5, &parallel).unwrap());
        (t.elapsed().as_secs_f64(), r)
    };
    let (t1, r1) = time_with(1);
    let (t4, r4) = time_with(4);
    let speedup = t1 / t4;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    report(
        12,
        "performance",
        m8 < 1.0 && r1 == r4 && speedup >= 3.0,
        format!("m=8 {m8:.3} s single-threaded; m=9 {t1:.2} s on 1 thread, {t4:.2} s on 4, speedup {speedup:.2} with {cores} core(s) available"),
    );
}
