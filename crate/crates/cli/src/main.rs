mod io;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use tajfar_core::corpus::{self, CorpusFormat, ParallelCorpus, SplitSpec};
use tajfar_core::lexicon::builtin_lexicon_ruleset;
use tajfar_core::metrics::{self, EvalConfig};
use tajfar_core::normalize::{normalize_text, NormalizeConfig, ZwnjMode};
use tajfar_core::rules::{builtin_ruleset, Lexicon};
use tajfar_core::script::{self, Script};
use tajfar_core::translit::{translit_lattice, translit_one_to_one, LatticeConfig};
use tajfar_core::Direction;
use tajfar_neural::{checkpoint, parse_config, train, Example, Transducer, Vocabulary};

use crate::io::{lines_to_text, read_lines, read_text, usage, write_text, UsageError};
use crate::manifest::{sibling, Run};

#[derive(Parser)]
#[command(name = "tajfar", version, about = "Tajik Cyrillic / Perso-Arabic transliteration toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Engine {
    Naive,
    Lattice,
    Model,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a text file line by line.
    Normalize {
        #[arg(long, value_parser = parse_script)]
        script: Script,
        /// Leave split Persian affixes as they are.
        #[arg(long)]
        no_join_affixes: bool,
        #[arg(long, default_value = "keep", value_parser = parse_zwnj)]
        zwnj: ZwnjMode,
        #[arg(long)]
        keep_diacritics: bool,
        #[arg(long)]
        keep_punct: bool,
        input: PathBuf,
        output: PathBuf,
    },
    /// Sentence-align two files with Gale-Church.
    Align {
        src: PathBuf,
        tgt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transliterate a file line by line.
    Translit {
        #[arg(long, value_enum, default_value = "lattice")]
        engine: Engine,
        #[arg(long, value_parser = parse_direction)]
        direction: Direction,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Target-side word list (`word<TAB>count` lines) for lattice ranking.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Emit up to N tab-separated alternatives per line (lattice engine).
        #[arg(long)]
        nbest: Option<usize>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Train a transducer on one fold of a parallel corpus.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        fold: usize,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the `direction` key of the config (default fa2tj).
        #[arg(long, value_parser = parse_direction)]
        direction: Option<Direction>,
        /// Overrides the `seed` key of the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score hypotheses against references.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Delete ZWNJ from both sides before scoring.
        #[arg(long)]
        strip_zwnj: bool,
        /// Script of the texts; detected from the references when omitted.
        #[arg(long, value_parser = parse_script)]
        script: Option<Script>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Per-line distances as TSV.
        #[arg(long)]
        per_pair: Option<PathBuf>,
    },
    /// Print corpus size statistics.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
}

fn parse_script(s: &str) -> Result<Script, String> {
    s.parse::<Script>().map_err(|e| e.to_string())
}

fn parse_zwnj(s: &str) -> Result<ZwnjMode, String> {
    s.parse()
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Normalize {
            script,
            no_join_affixes,
            zwnj,
            keep_diacritics,
            keep_punct,
            input,
            output,
        } => {
            let cfg = NormalizeConfig {
                strip_diacritics: !keep_diacritics,
                strip_digits_punct: !keep_punct,
                strip_tajik_hyphen: true,
                join_affixes: script == Script::PersoArabic && !no_join_affixes && zwnj == ZwnjMode::Keep,
                zwnj_mode: zwnj,
            };
            normalize(script, &cfg, &input, &output)
        }
        Command::Align { src, tgt, out } => align(&src, &tgt, &out),
        Command::Translit {
            engine,
            direction,
            checkpoint,
            lexicon,
            nbest,
            input,
            output,
        } => translit(engine, direction, checkpoint.as_deref(), lexicon.as_deref(), nbest, &input, &output),
        Command::Train {
            config,
            corpus,
            fold,
            out,
            direction,
            seed,
        } => train_cmd(&config, &corpus, fold, &out, direction, seed),
        Command::Evaluate {
            hyp,
            reference,
            strip_zwnj,
            script,
            json,
            per_pair,
        } => evaluate(&hyp, &reference, strip_zwnj, script, json.as_deref(), per_pair.as_deref()),
        Command::Stats { corpus } => {
            let c = load_corpus(&corpus)?;
            print!("{}", corpus::corpus_stats(&c).render());
            Ok(())
        }
    }
}

fn normalize(script: Script, cfg: &NormalizeConfig, input: &Path, output: &Path) -> Result<()> {
    let run = Run::start("normalize");
    let lines = read_lines(input)?;
    let out: Vec<String> = lines.iter().map(|l| normalize_text(l, script, cfg)).collect();
    write_text(output, &lines_to_text(&out))?;
    run.finish(output, json!({ "script": script.to_string(), "normalize": cfg }), &[input], None)
}

#[derive(Serialize)]
struct BeadLine<'a> {
    src: &'a [usize],
    tgt: &'a [usize],
    src_text: String,
    tgt_text: String,
}

fn align(src: &Path, tgt: &Path, out: &Path) -> Result<()> {
    let run = Run::start("align");
    let a = read_lines(src)?;
    let b = read_lines(tgt)?;
    let beads = corpus::gale_church_align(&a, &b)?;
    let mut text = String::new();
    for bead in &beads {
        let join = |ids: &[usize], lines: &[String]| ids.iter().map(|&i| lines[i].as_str()).collect::<Vec<_>>().join(" ");
        let line = BeadLine {
            src: &bead.src,
            tgt: &bead.tgt,
            src_text: join(&bead.src, &a),
            tgt_text: join(&bead.tgt, &b),
        };
        text.push_str(&serde_json::to_string(&line)?);
        text.push('\n');
    }
    write_text(out, &text)?;
    run.finish(out, json!({ "aligner": "gale-church", "beads": beads.len() }), &[src, tgt], None)
}

fn translit(
    engine: Engine,
    direction: Direction,
    checkpoint_path: Option<&Path>,
    lexicon: Option<&Path>,
    nbest: Option<usize>,
    input: &Path,
    output: &Path,
) -> Result<()> {
    let run = Run::start("translit");
    if nbest == Some(0) {
        bail!(usage("--nbest must be at least 1"));
    }
    if nbest.is_some() && !matches!(engine, Engine::Lattice) {
        bail!(usage("--nbest needs the lattice engine"));
    }
    if checkpoint_path.is_some() && !matches!(engine, Engine::Model) {
        bail!(usage("--checkpoint is only used by the model engine"));
    }
    let model = match engine {
        Engine::Model => {
            let path = checkpoint_path.ok_or_else(|| usage("the model engine needs --checkpoint"))?;
            if !path.exists() {
                bail!(usage(format!("cannot read {}", path.display())));
            }
            let (model, meta) = checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(d) = meta.extra.get("direction") {
                if d != direction.code() {
                    bail!(usage(format!("checkpoint was trained for {d}, not {direction}")));
                }
            }
            Some(model)
        }
        _ => None,
    };
    let lines = read_lines(input)?;
    let norm = NormalizeConfig::default();
    let sources: Vec<String> = lines.iter().map(|l| normalize_text(l, direction.source(), &norm)).collect();
    let mut inputs: Vec<&Path> = vec![input];
    let out: Vec<String> = match engine {
        Engine::Naive => {
            let rules = builtin_ruleset(direction);
            sources
                .iter()
                .enumerate()
                .map(|(i, s)| translit_one_to_one(s, &rules).with_context(|| format!("line {}", i + 1)))
                .collect::<Result<_>>()?
        }
        Engine::Lattice => {
            let rules = match lexicon {
                Some(path) => {
                    inputs.push(path);
                    let lex = Lexicon::parse(&read_text(path)?).with_context(|| format!("{}", path.display()))?;
                    builtin_ruleset(direction).with_lexicon(lex)
                }
                None => builtin_lexicon_ruleset(direction),
            };
            let cfg = LatticeConfig {
                beam: LatticeConfig::default().beam.max(nbest.unwrap_or(1)),
                ..LatticeConfig::default()
            };
            sources
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let r = translit_lattice(s, &rules, &cfg).with_context(|| format!("line {}", i + 1))?;
                    Ok(match nbest {
                        Some(n) => r.alternatives.iter().take(n).map(|a| a.0.as_str()).collect::<Vec<_>>().join("\t"),
                        None => r.best,
                    })
                })
                .collect::<Result<_>>()?
        }
        Engine::Model => {
            let model = model.expect("loaded above");
            let mut out = Vec::with_capacity(sources.len());
            for chunk in sources.chunks(32) {
                let refs: Vec<&str> = chunk.iter().map(String::as_str).collect();
                out.extend(model.decode_batch(&refs, None));
            }
            out
        }
    };
    write_text(output, &lines_to_text(&out))?;
    if let Some(p) = checkpoint_path {
        inputs.push(p);
    }
    let config = json!({ "engine": engine, "direction": direction.code(), "nbest": nbest });
    run.finish(output, config, &inputs, None)
}

fn load_corpus(path: &Path) -> Result<ParallelCorpus> {
    let text = read_text(path)?;
    ParallelCorpus::parse(&text, CorpusFormat::from_path(path)).with_context(|| format!("{}", path.display()))
}

fn train_cmd(
    config_path: &Path,
    corpus_path: &Path,
    fold: usize,
    out: &Path,
    direction: Option<Direction>,
    seed: Option<u64>,
) -> Result<()> {
    let run = Run::start("train");
    let mut cfg = parse_config(&read_text(config_path)?).map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let direction = match (direction, cfg.extra.get("direction")) {
        (Some(d), _) => d,
        (None, Some(d)) => d.parse().map_err(usage)?,
        (None, None) => Direction::FarsiToTajik,
    };
    cfg.extra.insert("direction".into(), direction.code().into());
    let spec = SplitSpec {
        seed: cfg.train.seed,
        ..SplitSpec::default()
    };
    if fold >= spec.folds {
        bail!(usage(format!("fold {fold} is out of range (0..{})", spec.folds)));
    }
    let corpus = load_corpus(corpus_path)?;
    let splits = corpus::make_splits(&corpus, &spec)?;
    let split = &splits[fold];

    let norm = NormalizeConfig::default();
    let side = |ids: &[usize]| -> Vec<(String, String)> {
        corpus
            .select(ids)
            .into_iter()
            .map(|p| {
                let fa = normalize_text(&p.farsi, Script::PersoArabic, &norm);
                let tj = normalize_text(&p.tajik, Script::TajikCyrillic, &norm);
                match direction {
                    Direction::FarsiToTajik => (fa, tj),
                    Direction::TajikToFarsi => (tj, fa),
                }
            })
            .filter(|(s, t)| !s.is_empty() && !t.is_empty())
            .collect()
    };
    let train_pairs = side(&split.train);
    let dev_pairs = side(&split.dev);
    if train_pairs.is_empty() || dev_pairs.is_empty() {
        bail!("fold {fold} leaves no training or no dev pairs");
    }
    let src_vocab = Vocabulary::build(train_pairs.iter().map(|p| p.0.as_str()));
    let tgt_vocab = Vocabulary::build(train_pairs.iter().map(|p| p.1.as_str()));
    let mut model = Transducer::<f32>::new(cfg.model.clone(), src_vocab, tgt_vocab, cfg.train.seed)
        .map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    let max = cfg.model.max_seq_len;
    let fits = |e: &Example| e.src.len() < max && e.tgt.len() < max;
    let encode = |pairs: &[(String, String)]| -> Vec<Example> { pairs.iter().map(|(s, t)| model.example(s, t)).collect() };
    let (train_ex, dev_ex) = (encode(&train_pairs), encode(&dev_pairs));
    let skipped = train_ex.iter().chain(&dev_ex).filter(|e| !fits(e)).count();
    let train_ex: Vec<Example> = train_ex.into_iter().filter(fits).collect();
    let dev_ex: Vec<Example> = dev_ex.into_iter().filter(fits).collect();
    if skipped > 0 {
        eprintln!("skipping {skipped} pair(s) longer than max_seq_len {max}");
    }

    let mut csv = String::from("epoch,train_loss,dev_loss,lr\n");
    let log = train(&mut model, &train_ex, &dev_ex, &cfg.train, |e| {
        eprintln!(
            "epoch {:>3}  train {:.4}  dev {:.4}  lr {:.2e}",
            e.epoch, e.train_loss, e.dev_loss, e.lr
        );
    })?;
    for e in &log {
        csv.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.dev_loss, e.lr));
    }
    checkpoint::save(out, &model, Some(&cfg.train), &cfg.extra)?;
    write_text(&sibling(out, "epochs.csv"), &csv)?;
    write_text(&sibling(out, "splits.jsonl"), &corpus::split_manifest(std::slice::from_ref(split)))?;
    let config = json!({
        "config": cfg.to_text(),
        "direction": direction.code(),
        "fold": fold,
        "train_pairs": train_ex.len(),
        "dev_pairs": dev_ex.len(),
        "skipped_pairs": skipped,
        "parameters": model.parameter_count(),
        "decisions": checkpoint::decisions(),
    });
    run.finish(out, config, &[config_path, corpus_path], Some(cfg.train.seed))
}

/// The script with more letters in `lines`.
fn detect_script(lines: &[String]) -> Script {
    let mut counts: BTreeMap<bool, usize> = BTreeMap::new();
    for c in lines.iter().flat_map(|l| l.chars()) {
        if script::is_inventory_char(c, Script::PersoArabic).is_some() {
            *counts.entry(true).or_default() += 1;
        } else if script::is_inventory_char(c, Script::TajikCyrillic).is_some() {
            *counts.entry(false).or_default() += 1;
        }
    }
    let fa = counts.get(&true).copied().unwrap_or(0);
    let tj = counts.get(&false).copied().unwrap_or(0);
    if fa > tj {
        Script::PersoArabic
    } else {
        Script::TajikCyrillic
    }
}

fn evaluate(
    hyp: &Path,
    reference: &Path,
    strip_zwnj: bool,
    script: Option<Script>,
    json_out: Option<&Path>,
    per_pair: Option<&Path>,
) -> Result<()> {
    let run = Run::start("evaluate");
    let h = read_lines(hyp)?;
    let r = read_lines(reference)?;
    let script = script.unwrap_or_else(|| detect_script(&r));
    let hs: Vec<&str> = h.iter().map(String::as_str).collect();
    let rs: Vec<&str> = r.iter().map(String::as_str).collect();
    let pairs = metrics::zip_lines(&hs, &rs)?;
    let cfg = EvalConfig {
        strip_zwnj,
        ..EvalConfig::default()
    };
    let report = metrics::evaluate(&pairs, script, &cfg)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(p) = per_pair {
        write_text(p, &metrics::per_pair_tsv(&pairs, &cfg))?;
    }
    let config = json!({ "script": script.to_string(), "strip_zwnj": strip_zwnj });
    match json_out {
        Some(p) => {
            write_text(p, &text)?;
            println!(
                "chrF++ {:.2}  seq_acc {:.4}  rsa1 {:.4}  rsa2 {:.4}  avg_ld {:.4}  ld_ratio {:.4}  pairs {}",
                report.chrf_pp, report.seq_acc, report.rsa1, report.rsa2, report.avg_ld, report.ld_ratio, report.n_pairs
            );
            run.finish(p, config, &[hyp, reference], None)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
