use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dialoguekit::clients::http::{HttpAsr, HttpChat, HttpEmbed, HttpTts};
use dialoguekit::clients::stub::{StubAsr, StubEmbed};
use dialoguekit::clients::Clients;
use dialoguekit::corpus::{io, validate_dialogue, BeliefState, Dialogue};
use dialoguekit::ingest::{adapt, SourceRecord};
use dialoguekit::metrics::{
    curve_csv, dataset_stats, disclosure_curve, evaluate_dialogue, ga_smr, interruption_table, slot_f1_micro,
    speaker_similarity, user_turn_embeddings,
};
use dialoguekit::pipeline::{self, PipelineConfig, SplitRatios, StageToggles, Voices};
use dialoguekit::speakers::{load_profiles, SpeakerPool};
use dialoguekit::synthesis::verify_durations;
use dialoguekit::turn_taking::{evaluate_set, read_streams, Strategy, StrategyConfig};
use serde::Serialize;

const DEFAULT_EMBED_DIM: usize = 192;

#[derive(Parser)]
#[command(name = "dialoguekit", version, about = "Spoken-behavior augmentation and evaluation for task-oriented dialogue corpora")]
struct Cli {
    /// Pipeline configuration (TOML, or JSON when the name ends in .json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the deterministic offline service stubs.
    #[arg(long, global = true)]
    stub: bool,
    /// Overrides the configured worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert source-corpus exports into the unified dialogue schema.
    Ingest {
        /// sgd, tm2, abcd, emowoz, spokenwoz or generic.
        #[arg(long)]
        source: String,
        /// JSON array or JSON Lines file of source records.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cross-turn slots, barge-in, disfluency and emotion labels.
    Augment(RunArgs),
    /// Assign voices and render every turn to speech.
    Synthesize(RunArgs),
    /// Augment, assign voices, synthesize and validate in one pass.
    Run(RunArgs),
    /// Schema, audio duration and ASR intelligibility checks.
    Validate {
        #[arg(long)]
        input: PathBuf,
        /// Directory the dialogues' audio paths are relative to.
        #[arg(long)]
        audio_root: Option<PathBuf>,
        /// Dialogues sampled for the WER check; defaults to the configured value.
        #[arg(long)]
        wer_sample: Option<usize>,
        /// Word substitution rate of the stub recognizer.
        #[arg(long, default_value_t = 0.0)]
        asr_corruption: f64,
        /// Write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Seeded train/valid/test split.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Three comma-separated ratios, e.g. 0.8,0.1,0.1.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
    },
    /// Corpus statistics as JSON.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
    /// Score turn-taking strategies on labeled frame streams.
    EvalTurnTaking {
        /// NDJSON frame records.
        #[arg(long)]
        frames: PathBuf,
        /// Strategies to score; all of them when omitted.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<Strategy>,
        /// Turn-end threshold override (single strategy only).
        #[arg(long, requires = "bargein")]
        turnend: Option<f64>,
        /// Barge-in threshold override (single strategy only).
        #[arg(long, requires = "turnend")]
        bargein: Option<f64>,
        /// Window size override.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Goal alignment, slot match rate, disclosure curve, slot F1 and speaker similarity.
    EvalDialogue {
        #[arg(long)]
        input: PathBuf,
        /// Write the disclosure curve as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// JSON Lines of `{"dialogue_id", "state"}` final-turn predictions.
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Audio directory; enables speaker similarity.
        #[arg(long)]
        audio_root: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Unified-schema dialogues (JSON Lines).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for dialogues, manifests and audio.
    #[arg(long)]
    output: PathBuf,
    /// User voice profiles; overrides the configured path.
    #[arg(long)]
    speakers: Option<PathBuf>,
    /// Assistant voice profiles; overrides the configured path.
    #[arg(long)]
    assistants: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env_overrides(|k| std::env::var(k).ok());
    if let Some(s) = cli.seed {
        cfg.global_seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn http_clients(cfg: &PipelineConfig) -> Result<Clients> {
    let c = &cfg.clients;
    Ok(Clients {
        chat: Arc::new(HttpChat::new(c.chat.clone()).context("chat client")?),
        tts: Arc::new(HttpTts::new(c.tts.clone()).context("tts client")?),
        asr: Arc::new(HttpAsr::new(c.asr.clone()).context("asr client")?),
        embed: Arc::new(HttpEmbed::new(c.embed.clone(), c.embed_dim.unwrap_or(DEFAULT_EMBED_DIM)).context("embedding client")?),
    })
}

fn clients(cli: &Cli, cfg: &PipelineConfig) -> Result<Clients> {
    if cli.stub {
        Ok(Clients::stub())
    } else {
        http_clients(cfg)
    }
}

fn voices(cfg: &PipelineConfig, args: &RunArgs) -> Result<Voices> {
    let users = args
        .speakers
        .clone()
        .or_else(|| cfg.speakers.profiles.clone())
        .context("user voice profiles are required (--speakers or speakers.profiles)")?;
    let assistants = args
        .assistants
        .clone()
        .or_else(|| cfg.speakers.assistant_profiles.clone())
        .context("assistant voice profiles are required (--assistants or speakers.assistant_profiles)")?;
    let users = load_profiles(&users).with_context(|| format!("reading {}", users.display()))?;
    let assistants = load_profiles(&assistants).with_context(|| format!("reading {}", assistants.display()))?;
    let pool = SpeakerPool::build(&users, &assistants)?;
    Ok(Voices::new(pool, assistants)?)
}

fn read_corpus(path: &Path) -> Result<Vec<Dialogue>> {
    io::read_dialogues(path).with_context(|| format!("reading {}", path.display()))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(v)?;
    fs::write(path, body + "\n").with_context(|| format!("writing {}", path.display()))
}

fn ingest(source: &str, input: &Path, output: &Path) -> Result<()> {
    let body = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let raws: Vec<serde_json::Value> = match serde_json::from_str::<serde_json::Value>(&body) {
        Ok(serde_json::Value::Array(v)) => v,
        _ => io::parse_records(&body)?,
    };
    let mut dialogues = Vec::with_capacity(raws.len());
    let mut failed = 0;
    let mut warnings = 0;
    for (i, raw) in raws.into_iter().enumerate() {
        match adapt(&SourceRecord::new(source, raw)?) {
            Ok(a) => {
                for w in &a.warnings {
                    log::warn!("{} turn {:?}: {}", w.dialogue_id, w.turn, w.message);
                }
                warnings += a.warnings.len();
                dialogues.push(a.dialogue);
            }
            Err(e) => {
                log::error!("record {i}: {e}");
                failed += 1;
            }
        }
    }
    io::write_dialogues(output, &dialogues)?;
    eprintln!("ingested {} dialogues ({failed} failed, {warnings} warnings)", dialogues.len());
    Ok(())
}

fn run_stages(cli: &Cli, mut cfg: PipelineConfig, args: &RunArgs, stages: Option<StageToggles>) -> Result<()> {
    if let Some(s) = stages {
        cfg.stages = s;
    }
    let corpus = read_corpus(&args.input)?;
    let voices = if cfg.stages.speakers {
        voices(&cfg, args)?
    } else {
        Voices::default()
    };
    let clients = clients(cli, &cfg)?;
    let out = pipeline::run(&cfg, &corpus, &clients, &voices, &args.output)?;
    pipeline::write_run(&args.output, &out)?;
    let s = &out.summary;
    eprintln!(
        "{} of {} dialogues processed, {} quarantined; {} barge-ins, {} disfluencies, {} failed synthesis jobs",
        s.processed,
        s.input,
        s.quarantined,
        s.bargein.applied,
        s.disfluency_injected.values().sum::<usize>(),
        s.synthesis_failed
    );
    Ok(())
}

#[derive(Serialize)]
struct SchemaIssue {
    dialogue_id: String,
    issues: Vec<String>,
}

#[derive(Serialize)]
struct ValidationReport {
    dialogues: usize,
    schema: Vec<SchemaIssue>,
    durations: Vec<dialoguekit::synthesis::DurationViolation>,
    total_duration_s: f64,
    wer: Option<pipeline::WerValidation>,
}

fn validate(
    cli: &Cli,
    cfg: &PipelineConfig,
    input: &Path,
    audio_root: Option<&Path>,
    wer_sample: Option<usize>,
    asr_corruption: f64,
    report: Option<&Path>,
) -> Result<ExitCode> {
    let corpus = read_corpus(input)?;
    let schema: Vec<SchemaIssue> = corpus
        .iter()
        .filter_map(|d| {
            let v = validate_dialogue(d);
            (!v.is_empty()).then(|| SchemaIssue {
                dialogue_id: d.dialogue_id.clone(),
                issues: v.iter().map(ToString::to_string).collect(),
            })
        })
        .collect();
    let mut rep = ValidationReport {
        dialogues: corpus.len(),
        schema,
        durations: Vec::new(),
        total_duration_s: 0.0,
        wer: None,
    };
    if let Some(root) = audio_root {
        for d in &corpus {
            let r = verify_durations(d, root);
            rep.durations.extend(r.violations);
            rep.total_duration_s += r.total_s;
        }
        let n = wer_sample.unwrap_or(cfg.validation.wer_sample);
        let wer = if cli.stub {
            let asr = StubAsr::new(pipeline::reference_transcripts(&corpus, root))
                .with_corruption(asr_corruption, cfg.global_seed);
            pipeline::wer_validation(&corpus, root, n, &asr, cfg.global_seed)
        } else {
            let asr = HttpAsr::new(cfg.clients.asr.clone()).context("asr client")?;
            pipeline::wer_validation(&corpus, root, n, &asr, cfg.global_seed)
        };
        print!("{}", wer.table.render());
        if wer.asr_failures > 0 {
            println!("{} utterances excluded after ASR failures", wer.asr_failures);
        }
        rep.wer = Some(wer);
    }
    for s in &rep.schema {
        for i in &s.issues {
            println!("{}: {i}", s.dialogue_id);
        }
    }
    println!(
        "{} dialogues, {} with schema violations, {} duration violations, {:.1} s of audio",
        rep.dialogues,
        rep.schema.len(),
        rep.durations.len(),
        rep.total_duration_s
    );
    if let Some(p) = report {
        write_json(p, &rep)?;
    }
    Ok(if rep.schema.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn split(cfg: &PipelineConfig, input: &Path, output: &Path, ratios: Option<&[f64]>) -> Result<()> {
    let ratios = match ratios {
        Some(&[a, b, c]) => SplitRatios::new(a, b, c)?,
        Some(_) => bail!("--ratios takes three values"),
        None => cfg.split,
    };
    let corpus = read_corpus(input)?;
    let parts = pipeline::split(&corpus, &ratios, cfg.global_seed);
    fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    for (name, part) in [("train", &parts.train), ("valid", &parts.valid), ("test", &parts.test)] {
        io::write_dialogues(&output.join(format!("{name}.jsonl")), part)?;
    }
    let [a, b, c] = parts.sizes();
    println!("train {a}, valid {b}, test {c}");
    Ok(())
}

fn eval_turn_taking(
    frames: &Path,
    strategies: &[Strategy],
    thresholds: Option<(f64, f64)>,
    window: Option<usize>,
    json: Option<&Path>,
) -> Result<()> {
    let file = fs::File::open(frames).with_context(|| format!("opening {}", frames.display()))?;
    let streams = read_streams(BufReader::new(file))?;
    let strategies = if strategies.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        strategies.to_vec()
    };
    if thresholds.is_some() && strategies.len() != 1 {
        bail!("threshold overrides need exactly one --strategy");
    }
    let mut reports = Vec::new();
    for s in strategies {
        let mut cfg = StrategyConfig::defaults(s);
        if let Some((t, b)) = thresholds {
            cfg = cfg.with_thresholds(t, b);
        }
        if let Some(w) = window {
            cfg.window = w;
        }
        reports.push(evaluate_set(&streams, &cfg)?);
    }
    print!("{}", interruption_table(&reports));
    if let Some(p) = json {
        write_json(p, &reports)?;
    }
    Ok(())
}

#[derive(serde::Deserialize)]
struct Prediction {
    dialogue_id: String,
    state: BeliefState,
}

#[derive(Serialize)]
struct DialogueEval {
    goal: dialoguekit::metrics::GaSmr,
    slot_f1: Option<[f64; 3]>,
    speaker_similarity: Option<dialoguekit::metrics::SpeakerSimilarity>,
}

fn eval_dialogue(
    cli: &Cli,
    cfg: &PipelineConfig,
    input: &Path,
    curve: Option<&Path>,
    predictions: Option<&Path>,
    audio_root: Option<&Path>,
) -> Result<()> {
    let corpus = read_corpus(input)?;
    let clients = clients(cli, cfg)?;
    let states = corpus
        .iter()
        .map(|d| evaluate_dialogue(d, clients.chat.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let goal = ga_smr(&states);
    if let Some(p) = curve {
        fs::write(p, curve_csv(&disclosure_curve(&states))).with_context(|| format!("writing {}", p.display()))?;
    }
    let slot_f1 = match predictions {
        None => None,
        Some(p) => {
            let preds: BTreeMap<String, BeliefState> = io::read_records::<Prediction>(p)?
                .into_iter()
                .map(|r| (r.dialogue_id, r.state))
                .collect();
            let empty = BeliefState::new();
            let mut pairs = Vec::new();
            for d in &corpus {
                let gold = d
                    .state_per_turn
                    .as_ref()
                    .and_then(|s| s.values().next_back())
                    .unwrap_or(&empty);
                let pred = preds.get(&d.dialogue_id).unwrap_or_else(|| {
                    log::warn!("{}: no prediction, scored as empty", d.dialogue_id);
                    &empty
                });
                pairs.push((pred, gold));
            }
            let (p, r, f) = slot_f1_micro(pairs);
            Some([p, r, f])
        }
    };
    let speaker_similarity = match audio_root {
        None => None,
        Some(root) => {
            let embed: Arc<dyn dialoguekit::clients::EmbedClient> = if cli.stub {
                let owners = corpus
                    .iter()
                    .filter_map(|d| Some((d, d.user_speaker.as_ref()?)))
                    .flat_map(|(d, s)| {
                        d.turns
                            .iter()
                            .filter_map(move |t| Some((root.join(t.audio_ref.as_ref()?), s.speaker_id.clone())))
                    })
                    .collect();
                Arc::new(StubEmbed::new(64, owners))
            } else {
                clients.embed.clone()
            };
            let vectors = corpus
                .iter()
                .map(|d| user_turn_embeddings(d, root, embed.as_ref()))
                .collect::<Result<Vec<_>, _>>()?;
            Some(speaker_similarity(&vectors))
        }
    };
    print_json(&DialogueEval {
        goal,
        slot_f1,
        speaker_similarity,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    let augment_only = StageToggles {
        speakers: false,
        synthesis: false,
        ..cfg.stages
    };
    let voice_only = StageToggles {
        speakers: true,
        synthesis: true,
        ..StageToggles::none()
    };
    match &cli.command {
        Command::Ingest { source, input, output } => ingest(source, input, output)?,
        Command::Augment(a) => run_stages(cli, cfg, a, Some(augment_only))?,
        Command::Synthesize(a) => run_stages(cli, cfg, a, Some(StageToggles { validation: true, ..voice_only }))?,
        Command::Run(a) => run_stages(cli, cfg, a, None)?,
        Command::Validate {
            input,
            audio_root,
            wer_sample,
            asr_corruption,
            report,
        } => {
            return validate(
                cli,
                &cfg,
                input,
                audio_root.as_deref(),
                *wer_sample,
                *asr_corruption,
                report.as_deref(),
            )
        }
        Command::Split { input, output, ratios } => split(&cfg, input, output, ratios.as_deref())?,
        Command::Stats { input } => print_json(&dataset_stats(&read_corpus(input)?))?,
        Command::EvalTurnTaking {
            frames,
            strategy,
            turnend,
            bargein,
            window,
            json,
        } => eval_turn_taking(frames, strategy, turnend.zip(*bargein), *window, json.as_deref())?,
        Command::EvalDialogue {
            input,
            curve,
            predictions,
            audio_root,
        } => eval_dialogue(cli, &cfg, input, curve.as_deref(), predictions.as_deref(), audio_root.as_deref())?,
    }
    Ok(ExitCode::SUCCESS)
}
