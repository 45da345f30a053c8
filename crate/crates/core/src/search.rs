//! Random instances and seeded search campaigns for large embedding ratios.
//!
//! Every instance draws its randomness from its own ChaCha stream
//! `(campaign seed, instance id)`, so results do not depend on the number
//! of worker threads or on scheduling.

use std::f64::consts::LN_10;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::amenability::{
    amen_estimate, bound_one_extra_point, bound_two_points, embedding_ratio_detail, metric_amen_bound,
    retract_upper_bound, AmenOptions, RatioOptions,
};
use crate::error::{check_exponent, Error, Result};
use crate::space::{p_metric_closure, Molecule, PMetricSpace};
use crate::tree_metric::{path_p_metric, WeightedRootedTree};
use crate::trees::PrueferDecoder;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "FREEP_THREADS";

const TREE_ATTEMPTS: usize = 1_000_000;
const BATCH: usize = 256;

fn log_uniform<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-LN_10..LN_10).exp()
}

/// Random `m`-point q-metric: log-uniform raw distances in `[0.1, 10]`,
/// repaired by the q-metric closure. Labels are `"0".."m-1"`, base `"0"`.
pub fn random_p_metric<R: Rng>(m: usize, q: f64, rng: &mut R) -> Result<PMetricSpace> {
    if m < 2 {
        return Err(Error::input("a space needs at least two points"));
    }
    check_exponent(q, 1.0)?;
    let mut d = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let x = log_uniform(rng);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    PMetricSpace::from_matrix(q, p_metric_closure(&d, q)?)
}

/// Random weighted tree on `k + 1` vertices rooted at `0` with exactly `n`
/// leaves, by rejection over uniform Prüfer sequences. Weights are
/// log-uniform in `[0.1, 10]`; labels are `"0".."k"`.
pub fn random_weighted_tree<R: Rng>(k: usize, n: usize, rng: &mut R) -> Result<WeightedRootedTree> {
    if n < 2 || n > k || k > 2 * n - 1 {
        return Err(Error::input(format!("need 2 <= n <= k <= 2n-1, got n = {n}, k = {k}")));
    }
    let m = k + 1;
    let labels: Vec<String> = (0..m).map(|i| i.to_string()).collect();
    let parents: Vec<Option<usize>> = if n == k {
        (0..m).map(|x| (x != 0).then_some(0)).collect()
    } else {
        let mut decoder = PrueferDecoder::new(m);
        let mut t = decoder.blank();
        let mut seq = vec![0; m - 2];
        let mut found = false;
        for _ in 0..TREE_ATTEMPTS {
            seq.iter_mut().for_each(|s| *s = rng.gen_range(0..m));
            decoder.decode_into(&seq, 0, &mut t);
            if t.leaves().len() == n {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Capacity(format!("no tree with {n} leaves found in {TREE_ATTEMPTS} draws")));
        }
        (0..m).map(|x| t.parent(x)).collect()
    };
    let weight: Vec<f64> = (0..m).map(|x| if x == 0 { 0.0 } else { log_uniform(rng) }).collect();
    WeightedRootedTree::new(labels, 0, &parents, weight)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Random q-metric on `k + 1` points with a random `n + 1`-point subset.
    RandomSpace,
    /// Path metric of a random weighted tree, subset = leaves and root.
    WeightedTree,
}

impl SearchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::RandomSpace => "random_space",
            SearchMode::WeightedTree => "weighted_tree",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Non-base points of the subset.
    pub n: usize,
    /// Non-base points of the superspace.
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub iterations: usize,
    pub seed: u64,
    pub starts_per_instance: usize,
    pub tol: f64,
    pub out_path: PathBuf,
}

impl SearchConfig {
    pub fn new(mode: SearchMode, n: usize, k: usize, p: f64, q: f64, iterations: usize, seed: u64, out_path: impl Into<PathBuf>) -> Self {
        SearchConfig {
            mode,
            n,
            k,
            p,
            q,
            iterations,
            seed,
            starts_per_instance: 4,
            tol: 1e-6,
            out_path: out_path.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p, self.q)?;
        if self.n < 2 || self.k < self.n {
            return Err(Error::input(format!("need 2 <= n <= k, got n = {}, k = {}", self.n, self.k)));
        }
        if self.mode == SearchMode::WeightedTree && self.k > 2 * self.n - 1 {
            return Err(Error::input(format!("tree mode needs k <= 2n-1, got n = {}, k = {}", self.n, self.k)));
        }
        if self.starts_per_instance == 0 {
            return Err(Error::input("at least one start per instance is required"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::input("tolerance must be positive"));
        }
        Ok(())
    }

    /// Path of the JSON manifest written next to the results file.
    pub fn manifest_path(&self) -> PathBuf {
        let mut s = self.out_path.clone().into_os_string();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

/// A generated instance: superspace, subset, and the tree it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub space: PMetricSpace,
    pub subset: Vec<usize>,
    pub tree: Option<WeightedRootedTree>,
    /// Known witness direction, one coefficient per non-base subset point.
    pub probe: Option<Vec<f64>>,
    /// Seed handed to the optimizer.
    pub optimizer_seed: u64,
}

fn probe_of(m: &Molecule, subset: &[usize]) -> Vec<f64> {
    subset.iter().skip(1).map(|&g| m.get(g)).collect()
}

/// Rebuilds instance `id` of a campaign.
pub fn generate_instance(config: &SearchConfig, id: usize) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(id as u64);
    let optimizer_seed = rng.gen();
    let (n, k, p, q) = (config.n, config.k, config.p, config.q);
    if id == 0 && k > n && p < 1.0 {
        let b = bound_one_extra_point(n, p, q)?;
        let probe = Some(probe_of(&b.witness.molecule, &b.witness.subset));
        let w = b.witness;
        return Ok(Instance { space: w.space, subset: w.subset, tree: Some(w.tree), probe, optimizer_seed });
    }
    if id == 1 && n == 2 && k >= 3 && p < 1.0 {
        let b = bound_two_points(p, q)?;
        let probe = Some(probe_of(&b.witness.molecule, &b.witness.subset));
        let w = b.witness;
        return Ok(Instance { space: w.space, subset: w.subset, tree: Some(w.tree), probe, optimizer_seed });
    }
    match config.mode {
        SearchMode::WeightedTree => {
            let tree = random_weighted_tree(k, n, &mut rng)?;
            let space = path_p_metric(&tree, q)?;
            let mut subset = vec![0];
            subset.extend(tree.leaves());
            Ok(Instance { space, subset, tree: Some(tree), probe: None, optimizer_seed })
        }
        SearchMode::RandomSpace => {
            let space = random_p_metric(k + 1, q, &mut rng)?;
            let mut subset: Vec<usize> = sample(&mut rng, k, n).into_iter().map(|i| i + 1).collect();
            subset.push(0);
            subset.sort_unstable();
            Ok(Instance { space, subset, tree: None, probe: None, optimizer_seed })
        }
    }
}

/// SHA-256 over the distance matrix (little-endian doubles) and subset.
pub fn instance_digest(space: &PMetricSpace, subset: &[usize]) -> String {
    let mut h = Sha256::new();
    h.update((space.len() as u64).to_le_bytes());
    for i in 0..space.len() {
        for j in 0..space.len() {
            h.update(space.dist(i, j).to_le_bytes());
        }
    }
    for &s in subset {
        h.update((s as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// One row of the results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub instance_id: usize,
    pub seed: u64,
    pub mode: SearchMode,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub ratio: f64,
    pub ratio_p: f64,
    /// One coefficient per non-base subset point.
    pub witness_coeffs: Vec<f64>,
    pub witness_digest: String,
    pub elapsed_ms: u64,
}

const HEADER: [&str; 12] = [
    "instance_id",
    "seed",
    "mode",
    "n",
    "k",
    "p",
    "q",
    "ratio",
    "ratio_p",
    "witness_coeffs",
    "witness_digest",
    "elapsed_ms",
];

impl SearchRecord {
    fn fields(&self) -> [String; 12] {
        let coeffs: Vec<String> = self.witness_coeffs.iter().map(|c| c.to_string()).collect();
        [
            self.instance_id.to_string(),
            self.seed.to_string(),
            self.mode.as_str().to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.p.to_string(),
            self.q.to_string(),
            self.ratio.to_string(),
            self.ratio_p.to_string(),
            coeffs.join(";"),
            self.witness_digest.clone(),
            self.elapsed_ms.to_string(),
        ]
    }

    fn from_fields(row: &csv::StringRecord) -> Result<Self> {
        let get = |i: usize| row.get(i).ok_or_else(|| Error::input(format!("results row is missing column {i}")));
        let num = |i: usize| -> Result<f64> {
            get(i)?.parse().map_err(|_| Error::input(format!("bad number in column {}", HEADER[i])))
        };
        let int = |i: usize| -> Result<u64> {
            get(i)?.parse().map_err(|_| Error::input(format!("bad integer in column {}", HEADER[i])))
        };
        let mode = match get(2)? {
            "random_space" => SearchMode::RandomSpace,
            "weighted_tree" => SearchMode::WeightedTree,
            other => return Err(Error::input(format!("unknown mode {other:?}"))),
        };
        let coeffs = get(9)?;
        let witness_coeffs = if coeffs.is_empty() {
            Vec::new()
        } else {
            coeffs
                .split(';')
                .map(|c| c.parse().map_err(|_| Error::input(format!("bad coefficient {c:?}"))))
                .collect::<Result<_>>()?
        };
        Ok(SearchRecord {
            instance_id: int(0)? as usize,
            seed: int(1)?,
            mode,
            n: int(3)? as usize,
            k: int(4)? as usize,
            p: num(5)?,
            q: num(6)?,
            ratio: num(7)?,
            ratio_p: num(8)?,
            witness_coeffs,
            witness_digest: get(10)?.to_string(),
            elapsed_ms: int(11)?,
        })
    }
}

/// Reads a results file written by [`search_campaign`].
pub fn read_records(path: &Path) -> Result<Vec<SearchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records().map(|row| SearchRecord::from_fields(&row?)).collect()
}

fn run_instance(config: &SearchConfig, id: usize) -> Result<SearchRecord> {
    let started = Instant::now();
    let inst = generate_instance(config, id)?;
    let opts = AmenOptions {
        starts: config.starts_per_instance,
        seed: inst.optimizer_seed,
        tol: config.tol,
        probes: inst.probe.clone().into_iter().collect(),
        ..AmenOptions::default()
    };
    let est = amen_estimate(&inst.space, &inst.subset, config.p, &opts)?;
    Ok(SearchRecord {
        instance_id: id,
        seed: config.seed,
        mode: config.mode,
        n: config.n,
        k: config.k,
        p: config.p,
        q: config.q,
        ratio: est.value,
        ratio_p: est.value_p,
        witness_coeffs: probe_of(&est.witness, &inst.subset),
        witness_digest: instance_digest(&inst.space, &inst.subset),
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Recomputes a record's ratio from its instance and witness coefficients.
pub fn replay_record(config: &SearchConfig, record: &SearchRecord) -> Result<f64> {
    let inst = generate_instance(config, record.instance_id)?;
    if instance_digest(&inst.space, &inst.subset) != record.witness_digest {
        return Err(Error::Precondition(format!(
            "instance {} does not match the recorded digest",
            record.instance_id
        )));
    }
    let pairs: Vec<(usize, f64)> = inst.subset.iter().skip(1).copied().zip(record.witness_coeffs.iter().copied()).collect();
    let a = Molecule::from_pairs(inst.space.len(), &pairs)?;
    Ok(embedding_ratio_detail(&inst.space, &inst.subset, &a, config.p, &RatioOptions::fast())?.ratio)
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a SearchConfig,
    version: &'static str,
    started_unix_ms: u128,
    finished_unix_ms: Option<u128>,
    instances_written: usize,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

fn write_manifest(config: &SearchConfig, started: u128, finished: Option<u128>, written: usize) -> Result<()> {
    let m = Manifest {
        config,
        version: env!("CARGO_PKG_VERSION"),
        started_unix_ms: started,
        finished_unix_ms: finished,
        instances_written: written,
    };
    let mut f = File::create(config.manifest_path())?;
    serde_json::to_writer_pretty(&mut f, &m)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSummary {
    pub records: Vec<SearchRecord>,
    pub max_ratio: f64,
    /// Record with the largest ratio (first one on ties).
    pub argmax: SearchRecord,
    /// `2^{1/q}`.
    pub conjectured_bound: f64,
    /// Some ratio is above `2^{1/q}`.
    pub exceeds: bool,
    /// `(k - n + 1)^{1/q}` when `n < k`.
    pub retract_cap: Option<f64>,
    pub within_retract_cap: bool,
    /// `7 · 12^{1/p - 1}` for metric superspaces (`q = 1`, `p < 1`).
    pub metric_cap: Option<f64>,
    pub within_metric_cap: Option<bool>,
}

/// Runs every instance, persisting records in instance order to the CSV
/// file and writing a JSON manifest beside it.
pub fn search_campaign(config: &SearchConfig) -> Result<CampaignSummary> {
    config.validate()?;
    if config.iterations == 0 {
        return Err(Error::input("a campaign needs at least one iteration"));
    }
    let started = unix_ms();
    write_manifest(config, started, None, 0)?;
    let mut writer = csv::Writer::from_path(&config.out_path)?;
    writer.write_record(HEADER)?;
    writer.flush()?;
    let mut records = Vec::with_capacity(config.iterations);
    for lo in (0..config.iterations).step_by(BATCH) {
        let hi = (lo + BATCH).min(config.iterations);
        let batch = (lo..hi).into_par_iter().map(|id| run_instance(config, id)).collect::<Result<Vec<_>>>()?;
        for r in batch {
            writer.write_record(r.fields())?;
            records.push(r);
        }
        writer.flush()?;
    }
    write_manifest(config, started, Some(unix_ms()), records.len())?;
    Ok(summarize(config, records))
}

fn summarize(config: &SearchConfig, records: Vec<SearchRecord>) -> CampaignSummary {
    let best = records
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.ratio > records[b].ratio { i } else { b });
    let max_ratio = records[best].ratio;
    let conjectured_bound = 2f64.powf(1.0 / config.q);
    let retract_cap = retract_upper_bound(config.n, config.k, config.q).ok().map(|b| b.pair);
    let metric_cap = if config.q == 1.0 { metric_amen_bound(config.p).ok() } else { None };
    CampaignSummary {
        argmax: records[best].clone(),
        max_ratio,
        conjectured_bound,
        exceeds: max_ratio > conjectured_bound,
        within_retract_cap: retract_cap.map_or(max_ratio <= 1.0 + 1e-9, |c| max_ratio <= c + 1e-9),
        retract_cap,
        within_metric_cap: metric_cap.map(|c| max_ratio <= c + 1e-9),
        metric_cap,
        records,
    }
}

/// Runs `f` on a pool limited by `FREEP_THREADS` when it is set.
pub fn with_thread_budget<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| Error::input(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Capacity(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_metric_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let s = random_p_metric(6, 0.4, &mut a).unwrap();
        assert_eq!(s, random_p_metric(6, 0.4, &mut b).unwrap());
    }

    #[test]
    fn tree_sampler_leaf_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (k, n) in [(3, 2), (4, 4), (5, 3), (7, 4)] {
            for _ in 0..20 {
                let t = random_weighted_tree(k, n, &mut rng).unwrap();
                assert_eq!(t.len(), k + 1);
                assert_eq!(t.leaves().len(), n);
            }
        }
        assert!(random_weighted_tree(4, 2, &mut rng).is_err());
    }

    #[test]
    fn config_checks() {
        let c = SearchConfig::new(SearchMode::WeightedTree, 2, 4, 0.5, 0.5, 1, 0, "x.csv");
        assert!(c.validate().is_err());
        let c = SearchConfig::new(SearchMode::RandomSpace, 2, 4, 0.6, 0.5, 1, 0, "x.csv");
        assert!(c.validate().is_err());
        assert_eq!(c.manifest_path(), PathBuf::from("x.csv.manifest.json"));
    }

    #[test]
    fn canonical_instances() {
        let c = SearchConfig::new(SearchMode::WeightedTree, 2, 3, 0.5, 0.5, 2, 9, "x.csv");
        let i0 = generate_instance(&c, 0).unwrap();
        assert_eq!(i0.space.len(), 4);
        assert_eq!(i0.probe.as_deref(), Some(&[0.25, 0.25][..]));
        let i1 = generate_instance(&c, 1).unwrap();
        assert!((i1.space.dist(0, 1) - 5.828427124746).abs() < 1e-9);
    }
}
