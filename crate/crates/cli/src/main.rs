use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gtsec_core::gaussian::{sample_weights, WeightedTree};
use gtsec_core::leaders::{census_csv, leader_census};
use gtsec_core::poset::{build_all_posets, export_poset, ExportFormat};
use gtsec_core::security::{maximin_exhaustive, maximin_restricted, SecurityReport};
use gtsec_core::tutte::{alpha_beta, unrooted_poly};
use gtsec_core::verify::{run_suite, Suite, SuiteParams};
use gtsec_core::{canonical_code, enumerate_trees, Tree};

#[derive(Parser)]
#[command(
    name = "gtsec",
    version,
    about = "Security structure of Gaussian trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List one representative per isomorphism class.
    Trees {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build every grafting poset of order n and export them.
    Posets {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output directory; defaults to `posets-n<N>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subtree polynomial with its alpha and beta coefficients.
    Poly {
        #[command(flatten)]
        tree: TreeSource,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Maximin partial correlation of a weighted tree.
    Maximin {
        #[command(flatten)]
        tree: TreeSource,
        /// Give every edge this weight instead of sampling.
        #[arg(long)]
        weights: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        k: f64,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, env = "GTSEC_SEED")]
        seed: Option<u64>,
        #[arg(long, conflicts_with = "restricted")]
        exhaustive: bool,
        #[arg(long)]
        restricted: bool,
    },
    /// Run a verification suite; exits 1 if it fails.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 7)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0.5)]
        k: f64,
        #[arg(long, env = "GTSEC_SEED")]
        seed: Option<u64>,
    },
    /// Leader counts and poset sizes per order.
    Census {
        #[arg(long, default_value_t = 4)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TreeSource {
    /// path-N, star-N (N leaves) or spider-a-b-...
    #[arg(long)]
    builtin: Option<String>,
    /// Edge list file: `n`, then `u v` or `u v w` per line.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Csv,
    Text,
}

fn parse_suite(s: &str) -> std::result::Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| e.to_string())
}

enum Loaded {
    Plain(Tree),
    Weighted(WeightedTree),
}

impl TreeSource {
    fn load(&self) -> Result<Loaded> {
        if let Some(name) = &self.builtin {
            return Ok(Loaded::Plain(Tree::builtin(name)?));
        }
        let path = self.input.as_ref().expect("clap enforces one source");
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let weighted = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .any(|l| l.split_whitespace().count() == 3);
        let loaded = if weighted {
            Loaded::Weighted(WeightedTree::parse(&text)?)
        } else {
            Loaded::Plain(Tree::parse(&text)?)
        };
        Ok(loaded)
    }

    fn tree(&self) -> Result<Tree> {
        Ok(match self.load()? {
            Loaded::Plain(t) => t,
            Loaded::Weighted(wt) => wt.tree().clone(),
        })
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        now.as_nanos() as u64
    })
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        bail!("--k must lie in (0, 1), got {k}");
    }
    Ok(())
}

// stdout writes go through here so a closed pipe ends the run quietly
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        writeln!(std::io::stdout().lock(), $($arg)*)
    }};
}

fn print_json(v: &Value) -> std::io::Result<()> {
    out!(
        "{}",
        serde_json::to_string_pretty(v).expect("json values serialise")
    )
}

fn cmd_trees(n: usize, format: Format) -> Result<()> {
    let trees = enumerate_trees(n)?;
    match format {
        Format::Json => {
            let rows: Vec<Value> = trees
                .iter()
                .map(|t| json!({"code": canonical_code(t), "edges": t.edges()}))
                .collect();
            print_json(&json!({"n": n, "count": trees.len(), "trees": rows}))?;
        }
        Format::Text => {
            for t in &trees {
                out!("{}\t{}", canonical_code(t), t)?;
            }
            eprintln!("{} trees on {n} vertices", trees.len());
        }
        _ => bail!("trees supports --format text or json"),
    }
    Ok(())
}

fn cmd_posets(n: usize, format: Format, out: Option<PathBuf>) -> Result<()> {
    let (fmt, ext) = match format {
        Format::Json => (ExportFormat::Json, "json"),
        Format::Dot => (ExportFormat::Dot, "dot"),
        _ => bail!("posets supports --format json or dot"),
    };
    let (posets, coverage) = build_all_posets(n)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("posets-n{n}")));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for (i, p) in posets.iter().enumerate() {
        let path = dir.join(format!("poset-{}.{ext}", i + 1));
        write(&path, &export_poset(p, fmt))?;
        files.push(path.display().to_string());
    }
    let summary = json!({
        "n": n,
        "posets": posets.len(),
        "sizes": coverage.sizes,
        "total_classes": coverage.total_classes,
        "uncovered": coverage.uncovered,
        "overlapping": coverage.overlapping,
        "disjoint": coverage.disjoint,
        "leaders": posets.iter().map(|p| p.leader().code.to_string()).collect::<Vec<_>>(),
        "files": files,
    });
    write(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    print_json(&summary)?;
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_poly(source: &TreeSource, format: Format) -> Result<()> {
    let tree = source.tree()?;
    let f = unrooted_poly(&tree);
    let ab = (tree.order() >= 3).then(|| alpha_beta(&tree)).transpose()?;
    match format {
        Format::Text => {
            out!("tree: {tree}")?;
            out!("f(t,y) = {f}")?;
            out!("f(t,z) = {}", f.to_z_form().format_with("z"))?;
            if let Some(ab) = ab {
                out!("alpha = {}", ab.alpha)?;
                out!("beta = {}", ab.beta)?;
                out!("internal_edges = {}", ab.internal_edges)?;
            }
        }
        Format::Json => print_json(&json!({
            "tree": tree.to_string(),
            "code": canonical_code(&tree),
            "poly": f,
            "text": f.to_string(),
            "z_form": f.to_z_form().format_with("z"),
            "alpha": ab.map(|a| a.alpha),
            "beta": ab.map(|a| a.beta),
            "internal_edges": ab.map(|a| a.internal_edges),
        }))?,
        _ => bail!("poly supports --format text or json"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_maximin(
    source: &TreeSource,
    weights: Option<f64>,
    k: f64,
    trials: u64,
    seed: Option<u64>,
    exhaustive: bool,
) -> Result<()> {
    check_k(k)?;
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let seed = resolve_seed(seed);
    eprintln!("seed = {seed}");
    let score = |wt: &WeightedTree| -> Result<SecurityReport> {
        Ok(if exhaustive {
            maximin_exhaustive(wt)?
        } else {
            maximin_restricted(wt)?
        })
    };
    let method = if exhaustive {
        "exhaustive"
    } else {
        "restricted"
    };
    let (fixed, tree) = match (source.load()?, weights) {
        (Loaded::Weighted(wt), None) => (Some(wt.clone()), wt.tree().clone()),
        (loaded, Some(w)) => {
            let tree = match loaded {
                Loaded::Plain(t) => t,
                Loaded::Weighted(wt) => wt.tree().clone(),
            };
            (Some(WeightedTree::uniform(tree.clone(), w)?), tree)
        }
        (Loaded::Plain(t), None) => (None, t),
    };
    if tree.order() < 3 {
        bail!("the maximin game needs at least 3 vertices");
    }
    let mut rows = Vec::new();
    for i in 0..trials {
        let wt = match &fixed {
            Some(wt) => wt.clone(),
            None => sample_weights(&tree, k, seed.wrapping_add(i))?,
        };
        let r = score(&wt)?;
        rows.push((wt, r));
    }
    if trials == 1 {
        let (wt, r) = &rows[0];
        print_json(&json!({
            "tree": tree.to_string(),
            "method": method,
            "value": r.value,
            "argmax_pair": r.argmax_pair,
            "worst_z": r.worst_z,
            "per_pair_min": r.per_pair_min,
            "weights": wt.weights(),
            "trials": 1,
            "seed": seed,
            "k": k,
        }))?;
    } else {
        let values: Vec<f64> = rows.iter().map(|(_, r)| r.value).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        print_json(&json!({
            "tree": tree.to_string(),
            "method": method,
            "trials": trials,
            "seed": seed,
            "k": k,
            "min": values.iter().copied().fold(f64::INFINITY, f64::min),
            "max": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "mean": mean,
            "per_trial": rows.iter().map(|(_, r)| json!({"value": r.value, "argmax_pair": r.argmax_pair, "worst_z": r.worst_z})).collect::<Vec<_>>(),
        }))?;
    }
    Ok(())
}

fn cmd_verify(suite: Suite, n: usize, trials: u64, k: f64, seed: Option<u64>) -> Result<bool> {
    check_k(k)?;
    let seed = resolve_seed(seed);
    eprintln!("seed = {seed}");
    let report = run_suite(suite, SuiteParams { n, trials, k, seed })?;
    print_json(&serde_json::to_value(&report)?)?;
    eprintln!(
        "{}: {} ({} checks, {} failures)",
        suite,
        if report.passed { "pass" } else { "FAIL" },
        report.checked,
        report.failures
    );
    Ok(report.passed)
}

fn cmd_census(n_min: usize, n_max: usize, format: Format) -> Result<bool> {
    let rows = leader_census(n_min, n_max)?;
    match format {
        Format::Csv => {
            use std::io::Write;
            write!(std::io::stdout().lock(), "{}", census_csv(&rows)?)?;
        }
        Format::Json => print_json(&serde_json::to_value(&rows)?)?,
        _ => bail!("census supports --format csv or json"),
    }
    Ok(rows.iter().all(|r| r.agreement))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Trees { n, format } => cmd_trees(n, format).map(|_| true),
        Command::Posets { n, format, out } => cmd_posets(n, format, out).map(|_| true),
        Command::Poly { tree, format } => cmd_poly(&tree, format).map(|_| true),
        Command::Maximin {
            tree,
            weights,
            k,
            trials,
            seed,
            exhaustive,
            restricted: _,
        } => cmd_maximin(&tree, weights, k, trials, seed, exhaustive).map(|_| true),
        Command::Verify {
            suite,
            n,
            trials,
            k,
            seed,
        } => cmd_verify(suite, n, trials, k, seed),
        Command::Census {
            n_min,
            n_max,
            format,
        } => cmd_census(n_min, n_max, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.downcast_ref::<std::io::Error>()
        .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
