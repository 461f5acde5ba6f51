use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cleme::analysis::{boundary_stats, corpus_summary, correlate, HumanTable};
use cleme::chunker::chunk_table;
use cleme::corpus::{emit_m2, load_parallel, parse_m2, tokenize, AnnotatedSample, Edit, TokenSeq};
use cleme::evaluate::{chunk_corpus, evaluate, hypothesis_edits, EllSource, EvalOptions, Variant, WeightOverrides};
use cleme::exec::Parallelism;
use cleme::report::{read_metric_scores, report_json, report_tsv, stats_text, StatsReport};
use cleme::scorer::{Clip, FnOnMismatch};
use cleme::{align, Error};

/// Chunk-level multi-reference evaluation for grammatical error correction.
#[derive(Parser)]
#[command(name = "cleme", version)]
struct Cli {
    /// key=value file mirroring the long flags; flags on the command line win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run on a single thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Align parallel text and write the edits as M2 (annotator 0)
    Extract {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Score a system output against M2 references
    Evaluate {
        #[command(flatten)]
        input: EvalInput,
        #[command(flatten)]
        weights: WeightFlags,
        /// System name used in the report
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Dump chunk tables
    Chunks {
        #[command(flatten)]
        input: EvalInput,
        /// Keep only changed columns
        #[arg(long)]
        only_changed: bool,
        /// tsv or text
        #[arg(long)]
        format: Option<String>,
    },
    /// Boundary statistics of a multi-reference M2 file
    Stats {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        drop_unchanged_refs: bool,
        #[arg(long)]
        format: Option<String>,
    },
    /// Correlate metric scores with human scores
    Correlate {
        /// Score report (from `evaluate`) or a system<TAB>score file
        #[arg(long)]
        scores: PathBuf,
        /// Human score table, system<TAB>score
        #[arg(long)]
        human: PathBuf,
        /// Report variant to read the scores from
        #[arg(long)]
        variant: Option<Variant>,
        /// Label of the human ranking, e.g. EW or TS
        #[arg(long, default_value = "human")]
        method: String,
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HypFormat {
    Text,
    M2,
}

#[derive(Args)]
struct EvalInput {
    /// System output, one sentence per line (or M2 with --hyp-format m2)
    #[arg(long)]
    hyp: PathBuf,
    /// Reference M2 file
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, value_enum)]
    hyp_format: Option<HypFormat>,
    /// Drop references without edits (keeping one if all are empty)
    #[arg(long)]
    drop_unchanged_refs: bool,
}

#[derive(Args)]
struct WeightFlags {
    #[arg(long = "variant")]
    variants: Vec<Variant>,
    #[arg(long)]
    alpha_tp: Option<f64>,
    #[arg(long)]
    alpha_fp: Option<f64>,
    #[arg(long)]
    alpha_fn: Option<f64>,
    /// min,max
    #[arg(long)]
    clip_tp: Option<String>,
    #[arg(long)]
    clip_fp: Option<String>,
    #[arg(long)]
    clip_fn: Option<String>,
    #[arg(long)]
    ell: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// both or fp-only
    #[arg(long)]
    fn_on_mismatch: Option<String>,
}

/// Failure of a command; everything here exits with status 3.
#[derive(Debug)]
struct CliError(String);

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: cleme::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError(format!("{}: {e}", path.display())))
}

/// Flags read from `--config`. Repeated keys accumulate.
#[derive(Default)]
struct ConfigFile(HashMap<String, Vec<String>>);

impl ConfigFile {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in read(path)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            map.entry(key).or_default().push(v.trim().to_string());
        }
        Ok(ConfigFile(map))
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    fn flag(&self, key: &str) -> bool {
        matches!(self.get(key), Some("true" | "1" | "yes"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError(format!("config: bad value {v:?} for {key}")))
            })
            .transpose()
    }
}

fn pick<T>(flag: Option<T>, cfg: CliResult<Option<T>>) -> CliResult<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg,
    }
}

fn parse_clip(flag: Option<String>, cfg: &ConfigFile, key: &str) -> CliResult<Option<Clip>> {
    match flag.or_else(|| cfg.get(key).map(str::to_string)) {
        Some(s) => Ok(Some(s.parse::<Clip>()?)),
        None => Ok(None),
    }
}

fn eval_options(w: WeightFlags, cfg: &ConfigFile, parallelism: Parallelism) -> CliResult<EvalOptions> {
    let mut variants = w.variants;
    if variants.is_empty() {
        if let Some(list) = cfg.0.get("variant") {
            for item in list.iter().flat_map(|v| v.split(',')) {
                variants.push(item.trim().parse::<Variant>()?);
            }
        }
    }
    if variants.is_empty() {
        variants = EvalOptions::default().variants;
    }
    let fn_on_mismatch = match w
        .fn_on_mismatch
        .or_else(|| cfg.get("fn-on-mismatch").map(str::to_string))
    {
        Some(s) => s.parse::<FnOnMismatch>()?,
        None => FnOnMismatch::default(),
    };
    let overrides = WeightOverrides {
        alpha_tp: pick(w.alpha_tp, cfg.parse("alpha-tp"))?,
        alpha_fp: pick(w.alpha_fp, cfg.parse("alpha-fp"))?,
        alpha_fn: pick(w.alpha_fn, cfg.parse("alpha-fn"))?,
        clip_tp: parse_clip(w.clip_tp, cfg, "clip-tp")?,
        clip_fp: parse_clip(w.clip_fp, cfg, "clip-fp")?,
        clip_fn: parse_clip(w.clip_fn, cfg, "clip-fn")?,
        ell: pick(w.ell, cfg.parse("ell"))?,
        beta: pick(w.beta, cfg.parse("beta"))?,
    };
    Ok(EvalOptions {
        variants,
        overrides,
        fn_on_mismatch,
        parallelism,
    })
}

fn load_refs(path: &Path, drop_unchanged: bool) -> CliResult<Vec<AnnotatedSample>> {
    let mut refs = with_path(path, parse_m2(&read(path)?))?;
    if drop_unchanged {
        refs.iter_mut().for_each(AnnotatedSample::drop_unchanged_refs);
    }
    Ok(refs)
}

/// Hypothesis edits per reference sample.
fn load_hypotheses(
    input: &EvalInput,
    cfg: &ConfigFile,
    refs: &[AnnotatedSample],
    parallelism: Parallelism,
) -> CliResult<Vec<Vec<Edit>>> {
    let format = match input.hyp_format {
        Some(f) => f,
        None => match cfg.get("hyp-format") {
            Some("m2") => HypFormat::M2,
            Some("text") | None => HypFormat::Text,
            Some(other) => return Err(CliError(format!("config: unknown hyp-format {other:?}"))),
        },
    };
    let text = read(&input.hyp)?;
    match format {
        HypFormat::Text => {
            let lines: Vec<TokenSeq> = cleme::corpus::split_lines(&text).into_iter().map(tokenize).collect();
            let sources: Vec<&TokenSeq> = refs.iter().map(|r| &r.source).collect();
            with_path(&input.hyp, hypothesis_edits(&sources, &lines, parallelism))
        }
        HypFormat::M2 => {
            let hyps = with_path(&input.hyp, parse_m2(&text))?;
            if hyps.len() != refs.len() {
                return Err(Error::LengthMismatch {
                    what: "hypothesis samples and reference samples".into(),
                    left: hyps.len(),
                    right: refs.len(),
                }
                .into());
            }
            hyps.into_iter()
                .zip(refs)
                .enumerate()
                .map(|(i, (h, r))| {
                    if h.source != r.source {
                        return Err(CliError(format!(
                            "{}: sample {} has a different source sentence than the references",
                            input.hyp.display(),
                            i + 1
                        )));
                    }
                    Ok(h.annotations.into_values().next().unwrap_or_default())
                })
                .collect()
        }
    }
}

fn system_name(explicit: Option<String>, cfg: &ConfigFile, hyp: &Path) -> String {
    explicit
        .or_else(|| cfg.get("system").map(str::to_string))
        .unwrap_or_else(|| {
            hyp.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "system".into())
        })
}

fn format_of(flag: Option<String>, cfg: &ConfigFile, allowed: &[&str]) -> CliResult<String> {
    let f = flag
        .or_else(|| cfg.get("format").map(str::to_string))
        .unwrap_or_else(|| allowed[0].to_string());
    if allowed.contains(&f.as_str()) {
        Ok(f)
    } else {
        Err(CliError(format!(
            "unsupported format {f:?}; expected one of {allowed:?}"
        )))
    }
}

fn run(cli: Cli, out: &mut impl Write) -> CliResult<()> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let parallelism = if cli.sequential || cfg.flag("sequential") {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    };
    let mut emit = |s: &str| out.write_all(s.as_bytes()).map_err(|e| CliError(e.to_string()));

    match cli.command {
        Command::Extract { src, tgt, out: path } => {
            let pairs = load_parallel(&read(&src)?, &read(&tgt)?)?;
            let samples = pairs
                .iter()
                .map(|(s, t)| {
                    let edits = align::extract_edits(s, t);
                    AnnotatedSample::new(s.clone(), [(0, edits)].into_iter().collect())
                })
                .collect::<cleme::Result<Vec<_>>>()?;
            let m2 = emit_m2(&samples);
            match path {
                Some(p) => fs::write(&p, m2).map_err(|e| CliError(format!("{}: {e}", p.display())))?,
                None => emit(&m2)?,
            }
        }
        Command::Evaluate {
            input,
            weights,
            system,
            format,
        } => {
            let format = format_of(format, &cfg, &["tsv", "json"])?;
            let refs = load_refs(
                &input.reference,
                input.drop_unchanged_refs || cfg.flag("drop-unchanged-refs"),
            )?;
            let hyp_edits = load_hypotheses(&input, &cfg, &refs, parallelism)?;
            let samples = chunk_corpus(&refs, &hyp_edits, parallelism)?;
            let opts = eval_options(weights, &cfg, parallelism)?;
            let report = evaluate(&samples, &opts)?;
            if report.ell_source == EllSource::Undefined {
                eprintln!("warning: {}; falling back to unweighted counts", Error::NoChunks);
            }
            let system = system_name(system, &cfg, &input.hyp);
            if format == "json" {
                emit(&report_json(&system, &report))?;
                emit("\n")?;
            } else {
                emit(&report_tsv(&system, &report))?;
            }
        }
        Command::Chunks {
            input,
            only_changed,
            format,
        } => {
            let format = format_of(format, &cfg, &["tsv", "text"])?;
            let refs = load_refs(
                &input.reference,
                input.drop_unchanged_refs || cfg.flag("drop-unchanged-refs"),
            )?;
            let hyp_edits = load_hypotheses(&input, &cfg, &refs, parallelism)?;
            let samples = chunk_corpus(&refs, &hyp_edits, parallelism)?;
            let only_changed = only_changed || cfg.flag("only-changed");
            let tables: Vec<String> = samples
                .iter()
                .map(|cs| {
                    let table = chunk_table(cs);
                    let table = if only_changed { table.only_changed() } else { table };
                    if format == "text" {
                        table.to_text()
                    } else {
                        table.to_tsv()
                    }
                })
                .collect();
            emit(&tables.join("\n"))?;
        }
        Command::Stats {
            reference,
            drop_unchanged_refs,
            format,
        } => {
            let format = format_of(format, &cfg, &["tsv", "json"])?;
            let refs = load_refs(&reference, drop_unchanged_refs || cfg.flag("drop-unchanged-refs"))?;
            let report = StatsReport {
                summary: corpus_summary(&refs, parallelism)?,
                boundary: boundary_stats(&refs, parallelism)?,
            };
            if format == "json" {
                emit(&serde_json::to_string_pretty(&report).expect("serializable"))?;
                emit("\n")?;
            } else {
                emit(&stats_text(&report))?;
            }
        }
        Command::Correlate {
            scores,
            human,
            variant,
            method,
            format,
        } => {
            let format = format_of(format, &cfg, &["tsv", "json"])?;
            let variant = match variant {
                Some(v) => v,
                None => cfg.parse::<Variant>("variant")?.unwrap_or(Variant::Dep),
            };
            let metric = with_path(&scores, read_metric_scores(&read(&scores)?, variant))?;
            let human = with_path(&human, HumanTable::parse_tsv(&read(&human)?, method))?;
            let c = correlate(&metric, &human)?;
            if format == "json" {
                let v = serde_json::json!({
                    "variant": variant,
                    "method": human.method,
                    "pearson": c.pearson,
                    "spearman": c.spearman,
                    "rows": c.rows,
                });
                emit(&serde_json::to_string_pretty(&v).expect("serializable"))?;
                emit("\n")?;
            } else {
                let mut s = format!("# variant={variant} method={}\n", human.method);
                s.push_str(&format!(
                    "pearson\t{:.6}\nspearman\t{:.6}\n\nsystem\tmetric\thuman\n",
                    c.pearson, c.spearman
                ));
                for (sys, m, h) in &c.rows {
                    s.push_str(&format!("{sys}\t{m:.6}\t{h:.6}\n"));
                }
                emit(&s)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
