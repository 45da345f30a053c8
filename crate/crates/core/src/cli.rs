//! Command-line front end. [`run_command`] parses arguments, runs one
//! subcommand and returns the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::amenability::{
    amen_estimate, bound_one_extra_point, bound_two_points, metric_amen_bound, retract_upper_bound, AmenOptions,
};
use crate::error::{Error, Result};
use crate::io::{read_space, read_tree, SpaceFile};
use crate::norm::{free_norm_pruned_with, free_norm_with, NormOptions, NormResult};
use crate::search::{search_campaign, with_thread_budget, SearchConfig, SearchMode};
use crate::space::{validate_p_metric, Molecule, PMetricSpace, METRIC_TOLERANCE};
use crate::tree_metric::path_p_metric;
use crate::trees::{tree_count, RootedTreeTopology, DEFAULT_MAX_POINTS};

#[derive(Parser, Debug)]
#[command(name = "freep", version, about = "Lipschitz-free p-norms and p-amenability estimates on finite p-metric spaces")]
struct Cli {
    /// Emit machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(short, long)]
    p: f64,
    /// Coefficients as LABEL=VALUE pairs; unlisted points get 0.
    #[arg(long, value_delimiter = ',', required = true)]
    coeffs: Vec<String>,
    /// Discard zero-coefficient points recursively.
    #[arg(long)]
    prune: bool,
    /// Raise the enumeration guard.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the q-metric axioms of a space file.
    Validate { space: PathBuf },
    /// Free p-norm of a molecule on a space.
    Norm {
        space: PathBuf,
        #[command(flatten)]
        args: NormArgs,
    },
    /// Free p-norm on the path metric of a weighted tree.
    TreeNorm {
        tree: PathBuf,
        #[command(flatten)]
        args: NormArgs,
    },
    /// Lower-bound estimate of the amenability constant of a subset.
    Amen {
        space: PathBuf,
        /// Subset labels; the base point is always included.
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<String>,
        #[arg(short, long)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Scan a grid on the coefficient sphere (at most 3 subset points).
        #[arg(long)]
        grid: bool,
    },
    /// Closed-form bounds and their witnesses.
    Bounds {
        kind: BoundKind,
        #[arg(short, long)]
        p: Option<f64>,
        #[arg(short, long)]
        q: Option<f64>,
        #[arg(short, long)]
        n: Option<usize>,
        #[arg(short, long)]
        k: Option<usize>,
    },
    /// Seeded search campaign writing a CSV file and a JSON manifest.
    Search {
        mode: ModeArg,
        #[arg(short, long)]
        p: f64,
        #[arg(short, long)]
        q: f64,
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        k: usize,
        #[arg(long)]
        iters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        starts: usize,
    },
    /// Number of labeled trees on M vertices.
    CountTrees {
        #[arg(short)]
        m: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundKind {
    OneExtra,
    TwoPoint,
    Retract,
    Metric,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Random,
    Tree,
}

/// Formats with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn parse_pairs(items: &[String]) -> Result<Vec<(String, f64)>> {
    items
        .iter()
        .map(|item| {
            let (l, v) = item
                .split_once('=')
                .ok_or_else(|| Error::input(format!("coefficient {item:?} is not LABEL=VALUE")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("coefficient value {v:?} is not a number")))?;
            Ok((l.trim().to_string(), v))
        })
        .collect()
}

fn edges_json(space: &PMetricSpace, t: &RootedTreeTopology) -> Vec<Value> {
    t.edges()
        .map(|(u, v)| json!({"parent": space.label(u), "child": space.label(v), "dist": space.dist(u, v)}))
        .collect()
}

struct Report {
    json: Value,
    text: String,
}

fn norm_report(space: &PMetricSpace, args: &NormArgs) -> Result<Report> {
    if !(args.p > 0.0 && args.p <= space.q()) {
        return Err(Error::Exponent { p: args.p, q: space.q() });
    }
    let a = Molecule::from_labeled(space, &parse_pairs(&args.coeffs)?)?;
    let opts = NormOptions { max_points: args.max_points, parallel: None };
    let r: NormResult = if args.prune {
        free_norm_pruned_with(space, &a, args.p, &opts)?
    } else {
        free_norm_with(space, &a, args.p, &opts)?
    };
    let mut text = format!(
        "value            {}\nvalue^p          {}\ntrees evaluated  {}\nwitness tree\n",
        fmt_num(r.value),
        fmt_num(r.p_power),
        r.trees_evaluated
    );
    for (u, v) in r.witness.edges() {
        text += &format!("  {} -> {}  d = {}\n", space.label(u), space.label(v), fmt_num(space.dist(u, v)));
    }
    let json = json!({
        "value": r.value,
        "p_power": r.p_power,
        "p": args.p,
        "pruned": args.prune,
        "trees_evaluated": r.trees_evaluated,
        "witness_edges": edges_json(space, &r.witness),
    });
    Ok(Report { json, text })
}

fn validate_report(path: &Path) -> Result<(Report, bool)> {
    let file: SpaceFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let report = validate_p_metric(&file.dist, file.q, METRIC_TOLERANCE)?;
    let valid = report.is_valid();
    let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    let mut text = format!(
        "{} points, q = {}: {}\n",
        file.dist.len(),
        fmt_num(file.q),
        if valid { "valid" } else { "INVALID" }
    );
    for v in &violations {
        text += &format!("  {v}\n");
    }
    if valid {
        // Labels and base are checked too.
        file.clone().into_space()?;
    }
    let json = json!({
        "valid": valid,
        "q": file.q,
        "points": file.points.len(),
        "violations": violations,
        "triangle_violations": report.triangle_violations(),
    });
    Ok((Report { json, text }, valid))
}

#[allow(clippy::too_many_arguments)]
fn amen_report(path: &Path, subset: &[String], p: f64, starts: usize, seed: u64, tol: f64, grid: bool) -> Result<Report> {
    let space = read_space(path)?;
    space.check_exponent(p)?;
    let mut idx = vec![space.base()];
    for l in subset {
        idx.push(space.index_of(l.trim()).ok_or_else(|| Error::input(format!("unknown point label {l:?}")))?);
    }
    let opts = AmenOptions { starts, seed, tol, grid, ..AmenOptions::default() };
    let est = amen_estimate(&space, &idx, p, &opts)?;
    let coeffs: Vec<(String, f64)> = est
        .subset
        .iter()
        .filter(|&&g| g != space.base())
        .map(|&g| (space.label(g).to_string(), est.witness.get(g)))
        .collect();
    let mut text = format!(
        "lower bound      {}\nlower bound^p    {}\nconverged        {}\nstarts           {}\nevaluations      {}\nwitness\n",
        fmt_num(est.value),
        fmt_num(est.value_p),
        est.converged,
        est.starts,
        est.evaluations
    );
    for (l, c) in &coeffs {
        text += &format!("  {l} = {}\n", fmt_num(*c));
    }
    let json = json!({
        "value": est.value,
        "value_p": est.value_p,
        "converged": est.converged,
        "starts": est.starts,
        "evaluations": est.evaluations,
        "witness": coeffs.iter().map(|(l, c)| json!({"label": l, "coeff": c})).collect::<Vec<_>>(),
        "witness_tree_m": edges_json(&space, &est.witness_tree_m),
    });
    Ok(Report { json, text })
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::input(format!("bounds {kind} requires {flag}")))
}

fn bounds_report(kind: BoundKind, p: Option<f64>, q: Option<f64>, n: Option<usize>, k: Option<usize>) -> Result<Report> {
    match kind {
        BoundKind::OneExtra => {
            let p = need(p, "-p", "one-extra")?;
            let q = q.unwrap_or(p);
            let n = need(n, "-n", "one-extra")?;
            let b = bound_one_extra_point(n, p, q)?;
            let witness = if n + 2 <= DEFAULT_MAX_POINTS { Some(b.witness.ratio(p)?) } else { None };
            let text = format!(
                "lower            {}\nupper            {}\nwitness ratio    {}\n",
                fmt_num(b.lower),
                fmt_num(b.upper),
                witness.map_or("(too large to enumerate)".to_string(), fmt_num)
            );
            Ok(Report { json: json!({"lower": b.lower, "upper": b.upper, "witness_ratio": witness}), text })
        }
        BoundKind::TwoPoint => {
            let p = need(p, "-p", "two-point")?;
            let q = q.unwrap_or(p);
            let b = bound_two_points(p, q)?;
            let witness = b.witness.ratio(p)?;
            let mut text = format!(
                "root weight      {}\nratio            {}\nratio_p          {}\nclosed form      {}\nwitness ratio    {}\n",
                fmt_num(b.root_weight),
                fmt_num(b.bound),
                fmt_num(b.bound_p),
                fmt_num(b.closed_form),
                fmt_num(witness)
            );
            if (b.closed_form - b.bound_p).abs() > 1e-12 * b.bound_p {
                text += "note: 4/(4+2^p(2^p-2)) differs from ratio_p when p < q\n";
            }
            let verdict = if b.bound_p > 1.0 {
                ">1: two-point subsets are not isometrically amenable at this p"
            } else {
                "<=1: this construction gives no lower bound above 1"
            };
            text += verdict;
            text.push('\n');
            Ok(Report {
                json: json!({
                    "root_weight": b.root_weight,
                    "ratio": b.bound,
                    "ratio_p": b.bound_p,
                    "closed_form": b.closed_form,
                    "witness_ratio": witness,
                    "exceeds_one": b.bound_p > 1.0,
                }),
                text,
            })
        }
        BoundKind::Retract => {
            let q = need(q.or(p), "-q", "retract")?;
            let n = need(n, "-n", "retract")?;
            let k = need(k, "-k", "retract")?;
            let b = retract_upper_bound(n, k, q)?;
            let text = format!("(k-n+1)^(1/q)    {}\nn^(1/q)          {}\n", fmt_num(b.pair), fmt_num(b.absolute));
            Ok(Report { json: json!({"pair": b.pair, "absolute": b.absolute}), text })
        }
        BoundKind::Metric => {
            let p = need(p, "-p", "metric")?;
            let v = metric_amen_bound(p)?;
            Ok(Report { json: json!({"bound": v}), text: format!("7*12^(1/p-1)     {}\n", fmt_num(v)) })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn search_report(mode: ModeArg, p: f64, q: f64, n: usize, k: usize, iters: usize, seed: u64, out: PathBuf, starts: usize) -> Result<Report> {
    let mode = match mode {
        ModeArg::Random => SearchMode::RandomSpace,
        ModeArg::Tree => SearchMode::WeightedTree,
    };
    let mut config = SearchConfig::new(mode, n, k, p, q, iters, seed, out);
    config.starts_per_instance = starts;
    config.validate()?;
    let s = search_campaign(&config)?;
    let mut text = format!(
        "instances        {}\nmax ratio        {}\nargmax instance  {}\n2^(1/q)          {}  {}\n",
        s.records.len(),
        fmt_num(s.max_ratio),
        s.argmax.instance_id,
        fmt_num(s.conjectured_bound),
        if s.exceeds { "EXCEEDS" } else { "not exceeded" }
    );
    if let Some(c) = s.retract_cap {
        text += &format!("retract cap      {}  {}\n", fmt_num(c), if s.within_retract_cap { "ok" } else { "VIOLATED" });
    }
    if let (Some(c), Some(ok)) = (s.metric_cap, s.within_metric_cap) {
        text += &format!("metric cap       {}  {}\n", fmt_num(c), if ok { "ok" } else { "VIOLATED" });
    }
    text += &format!("results          {}\n", config.out_path.display());
    Ok(Report {
        json: json!({
            "instances": s.records.len(),
            "max_ratio": s.max_ratio,
            "argmax_instance": s.argmax.instance_id,
            "argmax_coeffs": s.argmax.witness_coeffs,
            "conjectured_bound": s.conjectured_bound,
            "exceeds": s.exceeds,
            "retract_cap": s.retract_cap,
            "within_retract_cap": s.within_retract_cap,
            "metric_cap": s.metric_cap,
            "within_metric_cap": s.within_metric_cap,
            "results": config.out_path,
            "manifest": config.manifest_path(),
        }),
        text,
    })
}

fn dispatch(command: Command) -> Result<(Report, i32)> {
    let ok = |r: Report| Ok((r, 0));
    match command {
        Command::Validate { space } => {
            let (r, valid) = validate_report(&space)?;
            Ok((r, if valid { 0 } else { 2 }))
        }
        Command::Norm { space, args } => ok(norm_report(&read_space(&space)?, &args)?),
        Command::TreeNorm { tree, args } => {
            let (t, q) = read_tree(&tree)?;
            ok(norm_report(&path_p_metric(&t, q)?, &args)?)
        }
        Command::Amen { space, subset, p, starts, seed, tol, grid } => {
            ok(amen_report(&space, &subset, p, starts, seed, tol, grid)?)
        }
        Command::Bounds { kind, p, q, n, k } => ok(bounds_report(kind, p, q, n, k)?),
        Command::Search { mode, p, q, n, k, iters, seed, out, starts } => {
            ok(search_report(mode, p, q, n, k, iters, seed, out, starts)?)
        }
        Command::CountTrees { m } => {
            let c = tree_count(m).ok_or_else(|| Error::input(format!("no tree count for m = {m}")))?;
            ok(Report { json: json!({"m": m, "trees": c}), text: format!("{c}\n") })
        }
    }
}

/// Runs one invocation (`args[0]` is the program name) and returns the exit
/// code: 0 success, 1 input error, 2 failed mathematical validation,
/// 3 capacity or internal error.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let as_json = cli.json;
    let result = with_thread_budget(|| dispatch(cli.command)).and_then(|r| r);
    match result {
        Ok((report, code)) => {
            let written = if as_json {
                serde_json::to_writer_pretty(&mut *out, &report.json)
                    .map_err(Error::from)
                    .and_then(|_| writeln!(out).map_err(Error::from))
            } else {
                write!(out, "{}", report.text).map_err(Error::from)
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            if as_json {
                let _ = writeln!(out, "{}", json!({"error": e.to_string(), "exit_code": e.exit_code()}));
            }
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["freep"];
        argv.extend_from_slice(args);
        let code = run_command(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(4.0), "4");
        assert_eq!(fmt_num(1.3725830020304792), "1.37258300203");
        assert_eq!(fmt_num(262144.0), "262144");
        assert_eq!(fmt_num(1e-9), "1.00000000000e-9");
    }

    #[test]
    fn count_trees() {
        let (code, out, _) = run(&["count-trees", "-m", "4"]);
        assert_eq!((code, out.as_str()), (0, "16\n"));
    }

    #[test]
    fn parse_errors_exit_one() {
        assert_eq!(run(&["count-trees"]).0, 1);
        assert_eq!(run(&["bounds", "metric", "-p", "1.5"]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn two_point_bound_text() {
        let (code, out, _) = run(&["bounds", "two-point", "-p", "0.6667", "-q", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("ratio_p          1.0184"), "{out}");
        assert!(out.contains(">1:"));
    }
}
