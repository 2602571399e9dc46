//! Command-line front end for the simulator.
//!
//! Six subcommands cover the pipeline: `gen` makes synthetic worlds,
//! `explore` runs a single policy-driven traversal, `batch` produces the
//! offline reference labeling, `label` applies a frozen model snapshot,
//! `eval` scores two label maps against each other, and `sweep` runs a
//! whole policy/length/restart grid into a results CSV. Every artifact
//! starts with `#` comments that echo the resolved configuration and seed,
//! so any file can be traced back to the exact command that produced it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topicworld::eval::{self, SweepConfig};
use topicworld::exec;
use topicworld::explore::{explore, ExploreConfig, Policy};
use topicworld::files::{self, Meta};
use topicworld::model::Hyperparams;
use topicworld::seeds;
use topicworld::worldgen::{sample_world, GenConfig};
use topicworld::{CellCoord, GridWorld, LabelMap};

#[derive(Parser)]
#[command(
    name = "topicworld",
    version,
    about = "Grid-world exploration with an online spatial topic model"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic world as a word map, optionally with its
    /// ground-truth label map
    Gen(GenArgs),
    /// Run one exploration over a world, writing the visited path and the
    /// fitted model snapshot
    Explore(ExploreArgs),
    /// Label a world offline with full Gibbs sweeps over every cell
    Batch(BatchArgs),
    /// Label a world using a frozen model snapshot
    Label(LabelArgs),
    /// Compare two label maps: entropies and mutual information
    Eval(EvalArgs),
    /// Run a policy x length x restart grid over worlds into a results CSV
    Sweep(SweepArgs),
}

/// Model hyperparameters shared by every fitting subcommand.
#[derive(Args, Debug)]
struct HyperArgs {
    /// Number of topics K
    #[arg(long, default_value_t = 4)]
    topics: usize,
    /// Topic smoothing α for the spatial neighborhood prior
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Word smoothing β for the topic-word prior
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Neighborhood radius δ in Chebyshev distance (0 = cell-local)
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Probability τ that a refinement step picks the newest observation
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
}

impl HyperArgs {
    fn build(&self, vocab_size: usize) -> Result<Hyperparams> {
        let mut h = Hyperparams::new(self.topics, vocab_size, self.alpha, self.beta, self.radius);
        h.refine_last_prob = self.tau;
        h.validate()?;
        Ok(h)
    }

    fn push_meta(&self, meta: &mut Meta) {
        meta.push("topics", self.topics);
        meta.push("alpha", self.alpha);
        meta.push("beta", self.beta);
        meta.push("radius", self.radius);
        meta.push("tau", self.tau);
    }
}

#[derive(Args)]
struct GenArgs {
    /// World width in cells
    #[arg(long, default_value_t = 32)]
    width: usize,
    /// World height in cells
    #[arg(long, default_value_t = 32)]
    height: usize,
    /// Number of topics K to draw word distributions for
    #[arg(long, default_value_t = 4)]
    topics: usize,
    /// Vocabulary size V
    #[arg(long, default_value_t = 200)]
    vocab: usize,
    /// Label-coupling strength α: small values give large uniform regions
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Concentration β of the per-topic word distributions
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Neighborhood radius δ used while painting labels
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Tokens drawn per cell
    #[arg(long, default_value_t = 50)]
    words_per_cell: usize,
    /// Generation seed
    #[arg(long)]
    seed: u64,
    /// Word map output path
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth label map output path (plain PGM)
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    /// World word map to explore
    #[arg(long)]
    world: PathBuf,
    /// Step-selection policy
    #[arg(long)]
    policy: Policy,
    /// Number of cells to visit
    #[arg(long, default_value_t = 64)]
    steps: usize,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Refinement steps after each observation
    #[arg(long, default_value_t = 200)]
    refine_budget: usize,
    /// Label samples per token when scoring topic perplexity
    #[arg(long, default_value_t = 1)]
    topic_samples: usize,
    /// Run seed driving the walk and every Gibbs draw
    #[arg(long)]
    seed: u64,
    /// Fixed start cell "x,y" (default: drawn from the seed)
    #[arg(long, value_parser = parse_cell)]
    start: Option<CellCoord>,
    /// Path CSV output
    #[arg(long)]
    path_out: Option<PathBuf>,
    /// Model snapshot output
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchArgs {
    /// World word map to label
    #[arg(long)]
    world: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Full Gibbs sweeps over the whole world
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    /// Run seed driving every Gibbs draw
    #[arg(long)]
    seed: u64,
    /// Label map output (plain PGM)
    #[arg(long)]
    out: PathBuf,
    /// Optional model snapshot output
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    /// World word map to label
    #[arg(long)]
    world: PathBuf,
    /// Frozen model snapshot to label with
    #[arg(long)]
    model: PathBuf,
    /// Clamped Gibbs sweeps (topic-word counts stay fixed)
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Run seed driving every Gibbs draw
    #[arg(long)]
    seed: u64,
    /// Label map output (plain PGM)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// First label map
    a: PathBuf,
    /// Second label map
    b: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// World word maps; the file stem becomes the world id (repeatable)
    #[arg(long = "world", required = true)]
    worlds: Vec<PathBuf>,
    /// Ground-truth label maps paired with --world by position (repeatable;
    /// either none or one per world)
    #[arg(long = "truth")]
    truths: Vec<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Policies to run, comma-separated
    #[arg(long, value_delimiter = ',', default_values_t = Policy::ALL)]
    policies: Vec<Policy>,
    /// Path lengths to run, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "64")]
    lengths: Vec<usize>,
    /// Restarts per (world, policy, length) combination
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Refinement steps after each observation
    #[arg(long, default_value_t = 200)]
    refine_budget: usize,
    /// Label samples per token when scoring topic perplexity
    #[arg(long, default_value_t = 1)]
    topic_samples: usize,
    /// Gibbs sweeps for each world's offline reference labeling
    #[arg(long, default_value_t = 500)]
    batch_iterations: usize,
    /// Clamped sweeps when labeling with each run's fitted model
    #[arg(long, default_value_t = 100)]
    label_iterations: usize,
    /// Master seed; every run seed is derived from it
    #[arg(long)]
    master_seed: u64,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Results CSV output
    #[arg(long)]
    out: PathBuf,
}

fn parse_cell(s: &str) -> Result<CellCoord, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"x,y\", got {s:?}"))?;
    let x = x.trim().parse().map_err(|_| format!("bad x in {s:?}"))?;
    let y = y.trim().parse().map_err(|_| format!("bad y in {s:?}"))?;
    Ok(CellCoord::new(x, y))
}

fn base_meta(command: &str) -> Meta {
    let mut meta = Meta::new();
    meta.push("tool", concat!("topicworld ", env!("CARGO_PKG_VERSION")));
    meta.push("command", command);
    meta
}

fn finish_meta(meta: &mut Meta, seed: u64) {
    meta.push("seed", seed);
    meta.push("prng", seeds::PRNG_ID);
}

fn load_world(path: &Path) -> Result<(GridWorld, Meta)> {
    files::read_word_map(path).with_context(|| format!("loading world {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(a) => run_gen(a),
        Cmd::Explore(a) => run_explore(a),
        Cmd::Batch(a) => run_batch(a),
        Cmd::Label(a) => run_label(a),
        Cmd::Eval(a) => run_eval(a),
        Cmd::Sweep(a) => run_sweep(a),
    }
}

fn run_gen(a: GenArgs) -> Result<()> {
    let cfg = GenConfig {
        width: a.width,
        height: a.height,
        topics: a.topics,
        vocab_size: a.vocab,
        alpha: a.alpha,
        beta: a.beta,
        neighborhood_radius: a.radius,
        words_per_cell: a.words_per_cell,
        seed: a.seed,
    };
    let (world, _) = sample_world(&cfg)?;

    let mut meta = base_meta("gen");
    meta.push("width", a.width);
    meta.push("height", a.height);
    meta.push("topics", a.topics);
    meta.push("vocab", a.vocab);
    meta.push("alpha", a.alpha);
    meta.push("beta", a.beta);
    meta.push("radius", a.radius);
    meta.push("words_per_cell", a.words_per_cell);
    finish_meta(&mut meta, a.seed);

    files::write_word_map(&a.out, &world, &meta)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {}", a.out.display());

    if let Some(truth_path) = a.truth {
        let truth = LabelMap::from_truth(&world).expect("generated worlds carry truth");
        files::write_label_map(&truth_path, &truth, a.topics.saturating_sub(1).max(1), &meta)
            .with_context(|| format!("writing {}", truth_path.display()))?;
        println!("wrote {}", truth_path.display());
    }
    Ok(())
}

fn run_explore(a: ExploreArgs) -> Result<()> {
    let (world, _) = load_world(&a.world)?;
    let hyper = a.hyper.build(world.vocab_size())?;
    let cfg = ExploreConfig {
        policy: a.policy,
        steps: a.steps,
        refine_budget: a.refine_budget,
        topic_samples: a.topic_samples,
        seed: a.seed,
        start: a.start,
    };
    let (path, model) = explore(&world, &hyper, &cfg)?;

    let mut meta = base_meta("explore");
    meta.push("world", a.world.display());
    meta.push("policy", a.policy);
    meta.push("steps", a.steps);
    a.hyper.push_meta(&mut meta);
    meta.push("refine_budget", a.refine_budget);
    meta.push("topic_samples", a.topic_samples);
    if let Some(s) = a.start {
        meta.push("start", s);
    }
    finish_meta(&mut meta, a.seed);

    if let Some(p) = &a.path_out {
        files::write_path_csv(p, &path, &meta).with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    if let Some(p) = &a.model_out {
        files::write_snapshot(p, &model.snapshot(), &meta)
            .with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    println!(
        "explored {} steps with {} ({} distinct cells visited)",
        path.len(),
        a.policy,
        path.visited().count()
    );
    Ok(())
}

fn run_batch(a: BatchArgs) -> Result<()> {
    let (world, _) = load_world(&a.world)?;
    let hyper = a.hyper.build(world.vocab_size())?;
    let (labels, model) = eval::batch_label(&world, &hyper, a.iterations, a.seed)?;

    let mut meta = base_meta("batch");
    meta.push("world", a.world.display());
    a.hyper.push_meta(&mut meta);
    meta.push("iterations", a.iterations);
    finish_meta(&mut meta, a.seed);

    let maxval = hyper.topics.saturating_sub(1).max(1);
    files::write_label_map(&a.out, &labels, maxval, &meta)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {}", a.out.display());
    if let Some(p) = &a.model_out {
        files::write_snapshot(p, &model.snapshot(), &meta)
            .with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_label(a: LabelArgs) -> Result<()> {
    let (world, _) = load_world(&a.world)?;
    let (snapshot, _) = files::read_snapshot(&a.model)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let labels = eval::label_with_model(&world, &snapshot, a.iterations, a.seed)?;

    let mut meta = base_meta("label");
    meta.push("world", a.world.display());
    meta.push("model", a.model.display());
    meta.push("topics", snapshot.topics);
    meta.push("alpha", snapshot.alpha);
    meta.push("beta", snapshot.beta);
    meta.push("radius", snapshot.neighborhood_radius);
    meta.push("iterations", a.iterations);
    finish_meta(&mut meta, a.seed);

    let maxval = snapshot.topics.saturating_sub(1).max(1);
    files::write_label_map(&a.out, &labels, maxval, &meta)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let (map_a, _, _) = files::read_label_map(&a.a)
        .with_context(|| format!("loading label map {}", a.a.display()))?;
    let (map_b, _, _) = files::read_label_map(&a.b)
        .with_context(|| format!("loading label map {}", a.b.display()))?;
    let h_a = eval::entropy_bits(&map_a);
    let h_b = eval::entropy_bits(&map_b);
    let mi = eval::mutual_information_bits(&map_a, &map_b)?;
    println!(
        "A: {} ({}x{}, H = {:.6} bits)",
        a.a.display(),
        map_a.width(),
        map_a.height(),
        h_a
    );
    println!(
        "B: {} ({}x{}, H = {:.6} bits)",
        a.b.display(),
        map_b.width(),
        map_b.height(),
        h_b
    );
    println!("I(A;B) = {mi:.6} bits");
    println!("RESULT mi_bits={mi} h_a_bits={h_a} h_b_bits={h_b}");
    Ok(())
}

fn run_sweep(a: SweepArgs) -> Result<()> {
    if !a.truths.is_empty() && a.truths.len() != a.worlds.len() {
        bail!(
            "got {} --truth maps for {} --world files; pass none or one per world",
            a.truths.len(),
            a.worlds.len()
        );
    }
    if a.threads > 0 {
        exec::limit_threads(a.threads);
    }

    let mut worlds = Vec::with_capacity(a.worlds.len());
    let mut vocab = None;
    for (i, path) in a.worlds.iter().enumerate() {
        let (mut world, _) = load_world(path)?;
        if let Some(tp) = a.truths.get(i) {
            let (truth, _, _) = files::read_label_map(tp)
                .with_context(|| format!("loading truth map {}", tp.display()))?;
            if (truth.width(), truth.height()) != (world.width(), world.height()) {
                bail!(
                    "truth map {} is {}x{}, world {} is {}x{}",
                    tp.display(),
                    truth.width(),
                    truth.height(),
                    path.display(),
                    world.width(),
                    world.height()
                );
            }
            world = world.with_truth(truth.labels().to_vec())?;
        }
        match vocab {
            None => vocab = Some(world.vocab_size()),
            Some(v) if v != world.vocab_size() => {
                bail!("worlds disagree on vocabulary size ({} vs {})", v, world.vocab_size())
            }
            _ => {}
        }
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("world{i}"));
        if id.contains([',', '\n']) {
            bail!("world id {id:?} would break the CSV; rename the file");
        }
        worlds.push((id, world));
    }

    let hyper = a.hyper.build(vocab.expect("at least one world"))?;
    let cfg = SweepConfig {
        policies: a.policies.clone(),
        lengths: a.lengths.clone(),
        restarts: a.restarts,
        refine_budget: a.refine_budget,
        topic_samples: a.topic_samples,
        batch_iterations: a.batch_iterations,
        label_iterations: a.label_iterations,
        master_seed: a.master_seed,
    };
    let rows = eval::sweep(&worlds, &hyper, &cfg);

    let mut meta = base_meta("sweep");
    for p in &a.worlds {
        meta.push("world", p.display());
    }
    let policy_names: Vec<&str> = a.policies.iter().map(|p| p.name()).collect();
    meta.push("policies", policy_names.join(","));
    let lengths: Vec<String> = a.lengths.iter().map(|l| l.to_string()).collect();
    meta.push("lengths", lengths.join(","));
    meta.push("restarts", a.restarts);
    a.hyper.push_meta(&mut meta);
    meta.push("refine_budget", a.refine_budget);
    meta.push("topic_samples", a.topic_samples);
    meta.push("batch_iterations", a.batch_iterations);
    meta.push("label_iterations", a.label_iterations);
    finish_meta(&mut meta, a.master_seed);

    files::write_results_csv(&a.out, &rows, &meta)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} ({} rows)", a.out.display(), rows.len());
    Ok(())
}
