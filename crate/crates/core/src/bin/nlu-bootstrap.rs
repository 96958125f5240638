use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use nlu_bootstrap::baselines::{BaselineModel, CrfModel, MaxEntModel};
use nlu_bootstrap::config::{ExperimentConfig, TransferMode};
use nlu_bootstrap::corpus::{read_jsonl, write_jsonl, AnnotatedUtterance, GazetteerFeaturizer};
use nlu_bootstrap::engine::Engine;
use nlu_bootstrap::eval::{aggregate, compare_reports, semantic_similarity, to_csv, DomainRow, EvalReport};
use nlu_bootstrap::grammar::{sample_corpus, synth_benchmark_domain, DomainSpec, DomainStats, SynthConfig};
use nlu_bootstrap::transfer::{self, NamedCorpus, PretrainedModel};

#[derive(Parser)]
#[command(name = "nlu-bootstrap", version, about = "Bootstrap NLU domains from grammars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random domain grammars.
    SynthDomains {
        /// JSON domain stats (inline or a file), or `table1-median` for the
        /// median size of developer-defined domains.
        #[arg(long, default_value = "table1-median")]
        stats: String,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample an annotated corpus from a domain grammar.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pre-train on every `*.jsonl` corpus of a directory.
    Pretrain {
        #[arg(long)]
        sources: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replace the heads of a pre-trained model and fine-tune on a target.
    Finetune {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "bottom_only")]
        mode: TransferMode,
        /// Domain spec or gazetteer JSON.
        #[arg(long)]
        gazetteers: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a MaxEnt intent classifier or a CRF slot tagger. An existing
    /// baseline file at `--out` keeps its other component.
    TrainBaseline {
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        which: BaselineKind,
        #[arg(long)]
        gazetteers: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate models on test corpora, one domain row per test file.
    Evaluate {
        /// One model for all test files, or one per test file.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        #[arg(long = "test", required = true)]
        tests: Vec<PathBuf>,
        /// Approach name in the report; defaults to the first model's file name.
        #[arg(long)]
        approach: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the result table of several reports, optionally with paired t-tests.
    Compare {
        #[arg(long, num_args = 2.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        paired_ttest: bool,
    },
    /// Similarity of target corpora to source corpora under a pre-trained model.
    Similarity {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        sources: PathBuf,
        #[arg(long = "target", required = true)]
        targets: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BaselineKind {
    #[arg(long)]
    maxent: bool,
    #[arg(long)]
    crf: bool,
}

fn load_config(path: Option<&Path>) -> anyhow::Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

/// Accepts either a serialized featurizer or a domain spec.
fn load_gazetteers(path: &Path) -> anyhow::Result<GazetteerFeaturizer> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(g) = serde_json::from_str::<GazetteerFeaturizer>(&text) {
        return Ok(g);
    }
    Ok(DomainSpec::load(path)?.gazetteer_featurizer())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// `*.jsonl` corpora of a directory, sorted by file name.
fn read_corpus_dir(dir: &Path) -> anyhow::Result<Vec<NamedCorpus>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .jsonl corpora in {}", dir.display());
    }
    paths.iter().map(|p| Ok(NamedCorpus::new(stem(p), read_jsonl(p)?))).collect()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::SynthDomains { stats, count, seed, out } => {
            let stats: DomainStats = if stats == "table1-median" {
                DomainStats::CUSTOM_MEDIAN
            } else if Path::new(&stats).exists() {
                serde_json::from_str(&std::fs::read_to_string(&stats)?)?
            } else {
                serde_json::from_str(&stats)?
            };
            std::fs::create_dir_all(&out)?;
            for i in 0..count as u64 {
                let spec = synth_benchmark_domain(stats, seed + i)?;
                spec.save(out.join(format!("{}.json", spec.name)))?;
            }
        }
        Command::Generate { spec, count, seed, out } => {
            let spec = DomainSpec::load(&spec)?;
            write_jsonl(&out, &sample_corpus(&spec, &SynthConfig::new(count, seed))?)?;
        }
        Command::Pretrain { sources, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let (pm, log) = transfer::pretrain(&read_corpus_dir(&sources)?, &cfg.model, &cfg.pretrain)?;
            pm.save(&out)?;
            log.save(with_suffix(&out, ".log.jsonl"))?;
        }
        Command::Finetune {
            ckpt,
            target,
            mode,
            gazetteers,
            config,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?.transfer;
            cfg.mode = mode;
            cfg.enable_gazetteer_features = gazetteers.is_some();
            let gaz = gazetteers.as_deref().map(load_gazetteers).transpose()?;
            let pm = PretrainedModel::load(&ckpt)?;
            let (params, log) = transfer::transfer(&pm, &read_jsonl(&target)?, gaz, &cfg)?;
            params.save(&out)?;
            log.save(with_suffix(&out, ".log.jsonl"))?;
        }
        Command::TrainBaseline {
            target,
            which,
            gazetteers,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref())?.baselines;
            let gaz = gazetteers.as_deref().map(load_gazetteers).transpose()?;
            let corpus: Vec<AnnotatedUtterance> = read_jsonl(&target)?;
            let mut model = if out.exists() { BaselineModel::load(&out)? } else { BaselineModel::default() };
            if which.maxent {
                model.maxent = Some(MaxEntModel::train(&corpus, gaz, &cfg)?.0);
            } else {
                model.crf = Some(CrfModel::train(&corpus, gaz, &cfg)?.0);
            }
            model.save(&out)?;
        }
        Command::Evaluate {
            models,
            tests,
            approach,
            out,
        } => {
            if models.len() != 1 && models.len() != tests.len() {
                bail!("give one --model, or one --model per --test");
            }
            let engines = models.iter().map(Engine::load).collect::<Result<Vec<_>, _>>()?;
            let mut rows = Vec::new();
            for (i, test) in tests.iter().enumerate() {
                let corpus = read_jsonl(test)?;
                let engine = &engines[i.min(engines.len() - 1)];
                rows.push(DomainRow::new(stem(test), engine.evaluate(&corpus)?, corpus.len()));
            }
            let report = aggregate(approach.unwrap_or_else(|| stem(&models[0])), rows)?;
            report.save(&out)?;
            print!("{}", to_csv([&report]));
        }
        Command::Compare { reports, paired_ttest } => {
            let reports = reports.iter().map(EvalReport::load).collect::<Result<Vec<_>, _>>()?;
            print!("{}", to_csv(&reports));
            if paired_ttest {
                for other in &reports[1..] {
                    let shared = other.rows.iter().filter(|r| reports[0].rows.iter().any(|q| q.domain == r.domain)).count();
                    if shared < 2 {
                        bail!("a paired t-test needs at least two domains shared by both reports");
                    }
                    println!("{}", serde_json::to_string_pretty(&compare_reports(&reports[0], other)?)?);
                }
            }
        }
        Command::Similarity {
            ckpt,
            sources,
            targets,
            out,
        } => {
            let pm = PretrainedModel::load(&ckpt)?;
            let sources: Vec<(String, Vec<AnnotatedUtterance>)> =
                read_corpus_dir(&sources)?.into_iter().map(|c| (c.name, c.utterances)).collect();
            let targets = targets
                .iter()
                .map(|t| Ok((stem(t), read_jsonl(t)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let report = semantic_similarity(&pm.params, &sources, &targets)?;
            match out {
                Some(path) => write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
