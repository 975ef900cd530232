//! The `textscene` command line.

use std::ffi::OsString;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use textscene_core::corpus::stats::corpus_stats;
use textscene_core::corpus::{generate, CorpusConfig, Split};
use textscene_core::optim::OptimizerKind;
use textscene_core::render::RenderConfig;
use textscene_core::scene::{layout_from_json, layout_to_json_pretty, Mode};

use crate::checkpoint::Checkpoint;
use crate::corpus_io::{read_manifest, write_corpus, CorpusDir};
use crate::error::{self, Error, Result};
use crate::eval::{attention_csv, evaluate_run, RenderEval};
use crate::render_io::{load_render_config, render_to_path, Rendered};
use crate::train::{Preset, TrainConfig, TrainData, Trainer};

/// Worker threads for rendering, decoding and gradient fan-out.
pub const THREADS_ENV: &str = "TEXTSCENE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "textscene", version, about = "Text descriptions to rendered 3D scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic description corpus.
    GenData(GenDataArgs),
    /// Train a parser on a corpus.
    Train(TrainArgs),
    /// Score a checkpoint on the val or test split.
    Eval(EvalArgs),
    /// Parse one description into a layout.
    Infer(InferArgs),
    /// Render a layout to PNG (static) or a frame directory (animated).
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Static,
    Animated,
    Full,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Static => Mode::Static,
            ModeArg::Animated => Mode::Animated,
            ModeArg::Full => Mode::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CorpusPreset {
    /// 20,000 train, 1,000 val and 1,280 test per condition.
    Desk,
    /// 100,000 train, 5,000 val and 6,400 test per condition.
    Paper,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus config JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub preset: Option<CorpusPreset>,
    #[arg(long)]
    pub train: Option<usize>,
    /// Validation records per condition.
    #[arg(long)]
    pub val: Option<usize>,
    /// Test records per condition.
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write `stats.json` with marginals and family counts.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the corpus mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: PresetArg,
    /// Train config JSON; replaces the preset, flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub teacher_forcing: Option<f64>,
    #[arg(long)]
    pub val_interval: Option<usize>,
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub attn_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Also render predictions and ground truth and report mean SSIM.
    #[arg(long)]
    pub render: bool,
    #[arg(long)]
    pub render_limit: Option<usize>,
    #[arg(long)]
    pub render_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub text: String,
    /// Layout JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Attention heatmap CSV path.
    #[arg(long)]
    pub attention: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Layout JSON file, or `-` for stdin.
    pub layout: PathBuf,
    /// PNG path for static layouts, frame directory for animated ones.
    #[arg(long)]
    pub out: PathBuf,
    /// Render config JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Geometry override such as `sphere=icosphere` or `cylinder=prism`.
    #[arg(long)]
    pub geometry: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub fps: Option<u32>,
    #[arg(long)]
    pub supersample: Option<usize>,
    #[arg(long)]
    pub no_shadows: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn corpus_config(args: &GenDataArgs) -> Result<CorpusConfig> {
    let mut config = match &args.config {
        Some(path) => error::read_json::<CorpusConfig>(path)?,
        None => {
            let mode = args.mode.map_or(Mode::Static, Mode::from);
            match args.preset {
                Some(CorpusPreset::Paper) => CorpusConfig::paper_split(mode, 0),
                _ => CorpusConfig::desk(mode, 0),
            }
        }
    };
    if let Some(m) = args.mode {
        config.mode = m.into();
    }
    if args.train.is_some() || args.val.is_some() || args.test.is_some() || args.mode.is_some() {
        let count = |split, default: usize| match split {
            Some(n) => n,
            None => default,
        };
        let train = count(args.train, config.count(Split::Train, None, None));
        let val = count(args.val, config.count(Split::Val, Some(textscene_core::corpus::Condition::CondA), None));
        let test = count(args.test, config.count(Split::Test, Some(textscene_core::corpus::Condition::CondA), None));
        let rebuilt = CorpusConfig::scaled(config.mode, config.seed, train, val, test);
        config.cells = rebuilt.cells;
    }
    set(&mut config.seed, args.seed);
    config.validate()?;
    Ok(config)
}

fn gen_data(args: &GenDataArgs) -> Result<()> {
    let config = corpus_config(args)?;
    let corpus = generate(&config)?;
    let manifest = write_corpus(&args.out, &corpus, &config)?;
    error::write_json(&args.out.join("gen-data-config.json"), &config)?;
    for f in &manifest.files {
        println!("{} {} lines sha256 {}", f.name, f.lines, f.sha256);
    }
    if args.stats {
        let stats = corpus_stats(corpus.all(), &config)?;
        error::write_json(&args.out.join("stats.json"), &stats)?;
        println!("stats: {} samples, {} objects", stats.samples, stats.objects);
    }
    Ok(())
}

pub fn train_config(args: &TrainArgs, corpus_mode: Mode) -> Result<TrainConfig> {
    let mode = args.mode.map_or(corpus_mode, Mode::from);
    let preset = match args.preset {
        PresetArg::Desk => Preset::Desk,
        PresetArg::Paper => Preset::Paper,
    };
    let mut c = match &args.config {
        Some(path) => error::read_json::<TrainConfig>(path)?,
        None => TrainConfig::preset(preset, mode),
    };
    c.mode = mode;
    set(&mut c.epochs, args.epochs);
    set(&mut c.batch_size, args.batch_size);
    set(
        &mut c.optimizer,
        args.optimizer.map(|o| match o {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        }),
    );
    set(&mut c.learning_rate, args.lr);
    set(&mut c.dropout, args.dropout);
    set(&mut c.teacher_forcing, args.teacher_forcing);
    set(&mut c.val_interval, args.val_interval);
    set(&mut c.dims, args.dims);
    set(&mut c.attn_dim, args.attn_dim);
    set(&mut c.seed, args.seed);
    c.validate()?;
    Ok(c)
}

fn train(args: &TrainArgs) -> Result<()> {
    let manifest = read_manifest(&args.corpus)?;
    let config = train_config(args, manifest.config.mode)?;
    let data = TrainData::load(&args.corpus, config.mode)?;
    let trainer = match &args.resume {
        Some(path) => Trainer::resume(Checkpoint::load(path)?, config, data)?,
        None => Trainer::new(config, data)?,
    };
    let mut trainer = trainer.with_output(&args.out);
    trainer.run(|row| {
        eprintln!(
            "epoch {} loss {:.4} val condA {:.2} condB {:.2} ({:.0} s)",
            row.epoch, row.train_loss, row.val_cond_a, row.val_cond_b, row.wall_seconds
        )
    })?;
    println!("best val condA {:.2}", trainer.best_val_cond_a.unwrap_or(f64::NAN));
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let corpus = CorpusDir::load(&args.corpus)?;
    let split = match args.split {
        SplitArg::Val => Split::Val,
        SplitArg::Test => Split::Test,
    };
    let render = if args.render {
        let config = match &args.render_config {
            Some(p) => load_render_config(p)?,
            None => RenderConfig::default(),
        };
        Some(RenderEval { config, limit: args.render_limit, seed: args.seed })
    } else {
        None
    };
    let report = evaluate_run(&checkpoint, &corpus, split, render.as_ref())?;
    for (cond, r) in &report.conditions {
        let ssim = r.ssim.map_or(String::new(), |s| format!(" ssim {s:.4}"));
        println!("{cond} strict {:.3} specified {:.3} ({} samples){ssim}", r.strict, r.specified_only, r.samples);
    }
    if let Some(out) = &args.out {
        error::write_json(out, &report)?;
        let echo = serde_json::json!({
            "checkpoint": args.checkpoint, "corpus": args.corpus, "split": split.name(),
            "render": render.as_ref().map(|r| serde_json::json!({ "config": r.config, "limit": r.limit, "seed": r.seed })),
        });
        error::write_json(&sibling(out, "eval-config.json"), &echo)?;
    }
    Ok(())
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{name}"))
}

fn infer(args: &InferArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let parsed = checkpoint.model.greedy_decode(&args.text, checkpoint.vocab())?;
    for v in &parsed.violations {
        eprintln!("warning: {v}");
    }
    if !parsed.terminated {
        eprintln!("warning: decoding hit the object cap without an end marker");
    }
    let json = layout_to_json_pretty(&parsed.layout);
    match &args.out {
        Some(path) => error::write(path, format!("{json}\n"))?,
        None => println!("{json}"),
    }
    if let Some(path) = &args.attention {
        error::write(path, attention_csv(&parsed.trace, &parsed.tokens, &parsed.layout)?)?;
    }
    Ok(())
}

pub fn render_config(args: &RenderArgs) -> Result<RenderConfig> {
    let mut c = match &args.config {
        Some(p) => load_render_config(p)?,
        None => RenderConfig::default(),
    };
    for g in &args.geometry {
        c.set_geometry(g)?;
    }
    set(&mut c.seed, args.seed);
    set(&mut c.width, args.width);
    set(&mut c.height, args.height);
    set(&mut c.fps, args.fps);
    set(&mut c.supersample, args.supersample);
    if args.no_shadows {
        c.shadows = false;
    }
    c.validate()?;
    Ok(c)
}

fn render(args: &RenderArgs) -> Result<()> {
    let text = if args.layout.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::io(Path::new("<stdin>"), e))?;
        s
    } else {
        error::read_string(&args.layout)?
    };
    let layout = layout_from_json(&text)?;
    let config = render_config(args)?;
    match render_to_path(&layout, config.seed, &config, &args.out)? {
        Rendered::Image(path) => {
            error::write_json(&sibling(&path, "render-config.json"), &config)?;
            println!("{}", path.display());
        }
        Rendered::Animation { dir, manifest } => {
            error::write_json(&dir.join("render-config.json"), &config)?;
            println!("{} ({} frames)", dir.display(), manifest.frames.len());
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Infer(a) => infer(a),
        Command::Render(a) => render(a),
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.parse().map_err(|_| Error::invalid(format!("{THREADS_ENV}={value:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Runtime(e.to_string()))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", Error::invalid(first).to_line());
            return error::EXIT_INVALID;
        }
    };
    match init_threads().and_then(|_| run(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
