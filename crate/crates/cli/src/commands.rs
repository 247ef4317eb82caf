use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::Path;

use anaphora_core::aligner::{align_corpus, read_pharaoh, write_pharaoh, AlignerConfig, DiagonalParams, TokenPair};
use anaphora_core::corpus::{self, build_manifest, flatten, tokenize, CorpusFormat, Document, PronounLexicon};
use anaphora_core::metrics::{
    agreement_by_pronoun_pair, agreement_report, error_report_tsv, forms_by_item, normalize_judgments,
    pronoun_pair_error_report, read_judgments,
};
use anaphora_core::miner::{filter_pairs, harvest, read_pairs, write_pairs, AgreementTable, FilterMode, HarvestMode, HarvestOptions};
use anaphora_core::model::{
    export_attention, load_checkpoint, save_checkpoint, ContextMode, Encoder, Model, ModelConfig, Scorer, ScoringInput,
};
use anaphora_core::synthetic::{generate, SyntheticConfig};
use anaphora_core::trainer::{evaluate_accuracy, train, TrainConfig};
use anaphora_service::{Campaign, CampaignConfig, Store};

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Data(format!("cannot write to stdout: {e}"))),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    write_out(Some(path), &(text + "\n"))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn corpus_format(f: Format) -> CorpusFormat {
    match f {
        Format::Flat => CorpusFormat::Flat,
        Format::DocBlocks => CorpusFormat::DocBlocks,
    }
}

fn aligner_config(opts: &AlignerOpts) -> Result<AlignerConfig> {
    let params = DiagonalParams::new(opts.tension, opts.null_prob).map_err(|e| CliError::Usage(e.to_string()))?;
    let heuristic = opts.heuristic.parse().map_err(|e: String| CliError::Usage(format!("--heuristic: {e}")))?;
    Ok(AlignerConfig {
        model1_iterations: opts.model1_iterations,
        diagonal_iterations: opts.diagonal_iterations,
        params,
        heuristic,
    })
}

fn token_pairs(source: &[Document], target: &[Document]) -> Result<Vec<TokenPair>> {
    let s: Vec<_> = flatten(source).collect();
    let t: Vec<_> = flatten(target).collect();
    if s.len() != t.len() {
        return Err(CliError::Data(format!("{} source sentences vs {} target sentences", s.len(), t.len())));
    }
    Ok(s.iter().zip(&t).map(|(a, b)| (a.lower_forms(), b.lower_forms())).collect())
}

pub fn tokenize_cmd(a: &TokenizeArgs) -> Result<()> {
    let text = read_text(&a.input)?;
    let mut out = String::with_capacity(text.len() + text.len() / 4);
    for line in text.lines() {
        let toks = tokenize(line);
        let words: Vec<&str> = toks.iter().map(|t| if a.lower { t.lower.as_str() } else { t.surface.as_str() }).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    write_out(a.output.as_deref(), &out)
}

pub fn align(a: &AlignArgs) -> Result<()> {
    let cfg = aligner_config(&a.aligner)?;
    let src = corpus::load_corpus(&a.source, CorpusFormat::Flat)?;
    let tgt = corpus::load_corpus(&a.target, CorpusFormat::Flat)?;
    let pairs = token_pairs(&src, &tgt)?;
    let links = align_corpus(&pairs, &cfg)?;
    write_pharaoh(&a.output, &links)?;
    if let Some(path) = &a.save_model {
        cfg.train(&pairs)?.save(path)?;
    }
    println!("aligned {} sentence pairs", links.len());
    Ok(())
}

pub fn mine(a: &MineArgs) -> Result<()> {
    let format = corpus_format(a.format);
    let refs = corpus::load_corpus(&a.reference, format)?;
    let syss = corpus::load_corpus(&a.system, format)?;
    let source = a.source_text.as_deref().map(|p| corpus::load_corpus(p, format)).transpose()?;
    let mut lexicon = match &a.lexicon {
        Some(p) => PronounLexicon::load(p)?,
        None => PronounLexicon::english(),
    };
    if let Some(p) = &a.error_dimensions {
        lexicon.load_error_dimensions(p)?;
    }
    let alignments = match &a.alignment {
        Some(p) => read_pharaoh(p)?,
        None => align_corpus(&token_pairs(&syss, &refs)?, &aligner_config(&a.aligner)?)?,
    };
    let opts = HarvestOptions {
        mode: match a.mode {
            MineMode::Noisy => HarvestMode::RefVsNoisy,
            MineMode::Sys => HarvestMode::RefVsSys,
        },
        context_k: a.context_k,
        lang_pair: a.lang_pair.clone(),
        source: source.as_deref(),
    };
    let pairs = harvest(&refs, &syss, &alignments, &lexicon, &opts)?;
    write_pairs(&a.output, &pairs)?;
    println!("wrote {} pairs to {}", pairs.len(), a.output.display());
    Ok(())
}

pub fn filter(a: &FilterArgs) -> Result<()> {
    let pairs = read_pairs(&a.pairs)?;
    let table = match (&a.agreement, &a.judgments) {
        (Some(p), _) => AgreementTable::load(p)?,
        (None, Some(j)) => {
            let assignments = normalize_judgments(&read_judgments(j)?)?;
            agreement_by_pronoun_pair(&assignments, &forms_by_item(&pairs))?
        }
        (None, None) => return Err(CliError::Usage("one of --agreement or --judgments is required".into())),
    };
    if !(0.0..=1.0).contains(&a.tau) {
        return Err(CliError::Usage(format!("--tau must be in [0, 1], got {}", a.tau)));
    }
    let mode = if a.permissive { FilterMode::Permissive } else { FilterMode::Strict };
    let kept = filter_pairs(&pairs, &table, a.tau, mode)?;
    write_pairs(&a.output, &kept)?;
    println!("kept {} of {} pairs", kept.len(), pairs.len());
    Ok(())
}

fn context_mode(c: ContextArg) -> ContextMode {
    match c {
        ContextArg::Nc => ContextMode::Nc,
        ContextArg::Rc => ContextMode::Rc,
        ContextArg::Crc => ContextMode::Crc,
    }
}

pub fn train_cmd(a: &TrainArgs) -> Result<()> {
    let (encoder, scorer) = if a.baseline {
        (Encoder::Embeddings, Scorer::Average)
    } else {
        (
            match a.encoder {
                EncoderArg::Bilstm => Encoder::Bilstm,
                EncoderArg::Embeddings => Encoder::Embeddings,
            },
            match a.scorer {
                ScorerArg::Attention => Scorer::Attention,
                ScorerArg::Average => Scorer::Average,
            },
        )
    };
    let model_cfg = ModelConfig {
        d: a.d,
        h: a.h,
        v: 1,
        max_slots: a.max_slots,
        context_mode: context_mode(a.context_mode),
        encoder,
        scorer,
        margin: a.margin,
    };
    model_cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size,
        max_epochs: a.epochs,
        patience: a.patience,
        seed: a.seed,
        clip_norm: a.clip_norm,
        record_wall_time: a.wall_time,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let tr = read_pairs(&a.train)?;
    let dev = read_pairs(&a.dev)?;
    let (model, log) = train(&tr, &dev, &cfg, &model_cfg, a.embeddings.as_deref())?;
    save_checkpoint(&model, &a.output)?;
    if let Some(p) = &a.log {
        log.save(p)?;
    }
    let best = &log.records[log.best_epoch - 1];
    println!(
        "trained {} epochs; best epoch {} with dev accuracy {:.4}; saved {}",
        log.records.len(),
        log.best_epoch,
        best.dev_accuracy,
        a.output.display()
    );
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let model = load_checkpoint(&a.model)?;
    let pairs = read_pairs(&a.pairs)?;
    let report = evaluate_accuracy(&model, &pairs)?;
    println!("accuracy {:.4} ({}/{} correct, {} ties)", report.accuracy, report.correct, report.n, report.ties);
    if let Some(p) = &a.report {
        write_json(p, &report)?;
    }
    if let Some(p) = &a.breakdown {
        let train = a.train_pairs.as_deref().map(read_pairs).transpose()?.unwrap_or_default();
        write_out(Some(p), &error_report_tsv(&pronoun_pair_error_report(&report, &train)))?;
    }
    Ok(())
}

fn context_for(model: &Model, context: &[String]) -> Vec<String> {
    match model.config.context_mode {
        ContextMode::Nc => vec![],
        _ => context.to_vec(),
    }
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let model = load_checkpoint(&a.model)?;
    let lex = PronounLexicon::english();
    let ctx = context_for(&model, &a.context);
    let side = |text: &str, flag: &str| {
        model
            .score_input(&ScoringInput::from_texts(&ctx, text, &lex))
            .map_err(|e| CliError::Data(format!("{flag}: {e}")))
    };
    let ya = side(&a.candidate_a, "--candidate-a")?;
    let yb = side(&a.candidate_b, "--candidate-b")?;
    let preferred = if ya > yb {
        "A"
    } else if yb > ya {
        "B"
    } else {
        "tie"
    };
    println!("A\t{ya}\nB\t{yb}\npreferred\t{preferred}");
    Ok(())
}

pub fn attn_export(a: &AttnExportArgs) -> Result<()> {
    let model = load_checkpoint(&a.model)?;
    let input = match (&a.sentence, &a.pairs, &a.item) {
        (Some(s), _, _) => ScoringInput::from_texts(&context_for(&model, &a.context), s, &PronounLexicon::english()),
        (None, Some(p), Some(item)) => {
            let pairs = read_pairs(p)?;
            let pair = pairs
                .iter()
                .find(|x| &x.id == item)
                .ok_or_else(|| CliError::Data(format!("{}: no pair with id `{item}`", p.display())))?;
            let (r, s) = ScoringInput::from_pair(pair, model.config.context_mode);
            match a.side.as_str() {
                "ref" => r,
                "sys" => s,
                other => return Err(CliError::Usage(format!("--side must be ref or sys, got `{other}`"))),
            }
        }
        _ => return Err(CliError::Usage("give --sentence, or --pairs with --item".into())),
    };
    let (_, trace) = model.pronoun_attention(&input)?;
    export_attention(&trace, &a.output)?;
    println!("wrote attention for {} pronoun(s) to {}", trace.slots.len(), a.output.display());
    Ok(())
}

pub fn agree(a: &AgreeArgs) -> Result<()> {
    let records = read_judgments(&a.judgments)?;
    let assignments = normalize_judgments(&records)?;
    let report = agreement_report(&assignments)?;
    let excl = report.ac1_excl_ties.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("items\t{}", report.n_items);
    println!("annotators\t{}", report.n_annotators);
    println!("ac1_incl_ties\t{:.4}", report.ac1_incl_ties);
    println!("ac1_excl_ties\t{excl}");
    println!("avg_pct_ref\t{:.4}", report.avg_pct_ref);
    if report.excluded_neither + report.excluded_invalid > 0 {
        println!("excluded\t{} neither, {} invalid", report.excluded_neither, report.excluded_invalid);
    }
    if let Some(p) = &a.output {
        write_json(p, &report)?;
    }
    if let (Some(pairs), Some(table_path)) = (&a.pairs, &a.table) {
        let table = agreement_by_pronoun_pair(&assignments, &forms_by_item(&read_pairs(pairs)?))?;
        table.save(table_path)?;
    }
    Ok(())
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let mut store = Store::open(&a.data_dir)?;
    if let (Some(id), Some(pairs), Some(cfg)) = (&a.campaign, &a.pairs, &a.campaign_config) {
        let mut config = CampaignConfig::load(cfg)?;
        if let Some(seed) = a.seed {
            config.seed = seed;
        }
        let campaign = Campaign::create(id, read_pairs(pairs)?, config)?;
        let n = campaign.pairs.len();
        if store.add_campaign(campaign)? {
            eprintln!("created campaign {id} with {n} items");
        }
    }
    let ip: IpAddr = a.host.parse().map_err(|_| CliError::Usage(format!("--host: not an IP address: `{}`", a.host)))?;
    let addr = SocketAddr::new(ip, a.port);
    let ids: Vec<String> = store.campaign_ids().map(String::from).collect();
    eprintln!("serving campaigns [{}] on http://{addr}", ids.join(", "));
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(anaphora_service::serve(addr, anaphora_service::shared(store)))
        .map_err(|e| CliError::Data(format!("cannot serve on {addr}: {e}")))
}

pub fn suite_manifest(a: &SuiteManifestArgs) -> Result<()> {
    let manifest = build_manifest(&a.suite)?;
    match &a.output {
        Some(p) => Ok(manifest.save(p)?),
        None => write_out(None, &manifest.to_tsv()),
    }
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let corpus = generate(&SyntheticConfig { sentences: a.sentences, seed: a.seed, ..SyntheticConfig::default() })
        .map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::create_dir_all(&a.output_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", a.output_dir.display())))?;
    for (name, pairs) in [("train", &corpus.train), ("dev", &corpus.dev), ("test", &corpus.test)] {
        write_pairs(&a.output_dir.join(format!("{name}.jsonl")), pairs)?;
    }
    println!(
        "wrote {} train, {} dev, {} test pairs to {}",
        corpus.train.len(),
        corpus.dev.len(),
        corpus.test.len(),
        a.output_dir.display()
    );
    Ok(())
}
