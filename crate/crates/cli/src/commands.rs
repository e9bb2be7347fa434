use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use seqtag::bilstm::{decode_bilstm, fit_bilstm, BiLstmCrfModel};
use seqtag::corpus::{
    generate_synthetic, load_conll_corpus, load_conll_corpus_untagged, lowercase_corpus,
    parse_brat_with, serialize_document, validate_bio, BratPolicy, Document, Sentence, TagSide,
    Tokenizer,
};
use seqtag::crf::{build_instances, train as train_crf, transition_mask, CrfModel, TransitionMask};
use seqtag::eval::{evaluate, render_report, render_tsv};
use seqtag::features::{build_gazetteer, fit_index, Gazetteer};
use seqtag::model_io::{sniff_kind, ModelKind};
use seqtag::LabelScheme;

use crate::config::{ModelArg, Overrides, RunConfig};
use crate::error::CliError;
use crate::sweep::SweepGrid;

#[derive(Args)]
pub struct TuningOpts {
    /// Config file with key=value lines, read before flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Model family to train
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// AdaGrad learning rate (default 0.1 for crf, 0.05 for bilstm)
    #[arg(long)]
    lr: Option<f64>,
    /// L2 penalty coefficient (default 0.005)
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Passes over the training corpus (default 3)
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for shuffling and initialization (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Lowercase every surface before training
    #[arg(long)]
    lowercase: bool,
    /// Drop words below this training frequency from the bilstm vocabulary
    #[arg(long)]
    min_freq: Option<usize>,
    /// Word-embedding width for bilstm models
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Recurrent width per direction for bilstm models
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Context-window radius for neighbor features
    #[arg(long)]
    radius: Option<usize>,
    /// Longest prefix and suffix emitted as features
    #[arg(long)]
    affix_max: Option<usize>,
}

impl TuningOpts {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let flags = Overrides {
            model: self.model,
            lr: self.lr,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            seed: self.seed,
            lowercase: self.lowercase.then_some(true),
            constrain: None,
            min_freq: self.min_freq,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            radius: self.radius,
            affix_max: self.affix_max,
            use_shape: None,
            use_gazetteer: None,
        };
        RunConfig::resolve(self.config.as_deref(), &flags)
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training corpus: a .conll file or a directory of them
    #[arg(long, value_name = "PATH")]
    train: PathBuf,
    /// Where to write the trained model
    #[arg(long, value_name = "PATH")]
    model_out: PathBuf,
    /// Loss trace destination (default: <model-out>.trace)
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
    /// Extra gazetteer entries as type<TAB>phrase lines
    #[arg(long, value_name = "PATH")]
    gazetteer: Option<PathBuf>,
    #[command(flatten)]
    tuning: TuningOpts,
}

#[derive(Args)]
pub struct TagArgs {
    /// Trained model file
    model: PathBuf,
    /// Corpus to tag: a .conll file or a directory (tag column optional)
    input: PathBuf,
    /// Destination file or directory, mirroring the input shape
    output: PathBuf,
    /// Decode without the BIO transition mask
    #[arg(long)]
    no_constrain: bool,
    /// Lowercase surfaces first (for models trained on lowercased text)
    #[arg(long)]
    lowercase: bool,
    /// Config file with key=value lines, read before flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed recorded in the output header (default 42)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Gold corpus: a .conll file or a directory
    gold: PathBuf,
    /// Predicted corpus with the same documents and tokenization
    pred: PathBuf,
    /// Also write a tab-separated count table here
    #[arg(long, value_name = "PATH")]
    tsv: Option<PathBuf>,
    /// Config file with key=value lines, read before flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed recorded in the output header (default 42)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Corpus to check: a .conll file or a directory
    input: PathBuf,
}

#[derive(Args)]
pub struct ConvertArgs {
    /// Directory of paired .txt/.ann BRAT files
    input: PathBuf,
    /// Destination directory for .conll files
    output: PathBuf,
    /// Config file with key=value lines, read before flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed recorded in the output header (default 42)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Training split: a .conll file or a directory
    #[arg(long, value_name = "PATH")]
    train: PathBuf,
    /// Development split scored once per cell
    #[arg(long, value_name = "PATH")]
    dev: PathBuf,
    /// Comma-separated learning rates, one table column each
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    lr_grid: Vec<f64>,
    /// Comma-separated weight decays, one table row each
    #[arg(long, value_name = "LIST", value_delimiter = ',', required = true)]
    wd_grid: Vec<f64>,
    /// Where to write the result table
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
    #[command(flatten)]
    tuning: TuningOpts,
}

#[derive(Args)]
pub struct GenSyntheticArgs {
    /// Destination directory for the generated .conll files
    output: PathBuf,
    /// Number of documents to generate
    #[arg(long, default_value_t = 370)]
    n_docs: usize,
    /// Generation seed (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Config file with key=value lines, read before flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

pub(crate) enum AnyModel {
    Crf(Box<CrfModel>),
    Bilstm(Box<BiLstmCrfModel>),
}

impl AnyModel {
    fn scheme(&self) -> &LabelScheme {
        match self {
            Self::Crf(m) => &m.scheme,
            Self::Bilstm(m) => &m.scheme,
        }
    }
}

/// Fit one model according to the resolved config. Shared by `train` and the
/// sweep cells so a 1x1 sweep reproduces `train` exactly.
pub(crate) fn fit_model(
    docs: &[Document],
    scheme: &LabelScheme,
    rc: &RunConfig,
    extra_gazetteer: Option<&Gazetteer>,
) -> Result<(AnyModel, Vec<f64>), CliError> {
    let tc = rc.train_config();
    tc.validate()?;
    match rc.model {
        ModelArg::Crf => {
            let mut gazetteer = build_gazetteer(docs, scheme);
            if let Some(extra) = extra_gazetteer {
                gazetteer.merge(extra);
            }
            let feature_config = rc.feature_config();
            let index = fit_index(docs, &feature_config, &gazetteer);
            let mut model = CrfModel::new(scheme.clone(), feature_config, gazetteer, index);
            let instances = build_instances(docs, &model)?;
            let trace = train_crf(&mut model, &instances, &tc)?;
            Ok((AnyModel::Crf(Box::new(model)), trace))
        }
        ModelArg::Bilstm => {
            let bilstm_config = rc.bilstm_config();
            bilstm_config.validate()?;
            let (model, trace) = fit_bilstm(docs, scheme, &bilstm_config, &tc)?;
            Ok((AnyModel::Bilstm(Box::new(model)), trace))
        }
    }
}

/// Decode every sentence in place, returning the BIO violation count of the
/// predictions.
pub(crate) fn tag_documents(
    model: &AnyModel,
    docs: &mut [Document],
    mask: Option<&TransitionMask>,
) -> Result<usize, CliError> {
    let scheme = model.scheme().clone();
    let mut violations = 0;
    for doc in docs.iter_mut() {
        for sentence in &mut doc.sentences {
            let path = match model {
                AnyModel::Crf(m) => m.decode_sentence(sentence, mask)?,
                AnyModel::Bilstm(m) => {
                    let surfaces = sentence.surfaces();
                    let word_ids = m.word_ids(&surfaces);
                    decode_bilstm(m, &word_ids, mask)?
                }
            };
            violations += apply_tags(sentence, &path, &scheme);
        }
    }
    Ok(violations)
}

fn apply_tags(sentence: &mut Sentence, path: &[usize], scheme: &LabelScheme) -> usize {
    let tags: Vec<String> = path
        .iter()
        .map(|&id| scheme.tag_name(id).to_string())
        .collect();
    let violations = validate_bio(&tags, scheme).len();
    for (token, tag) in sentence.tokens.iter_mut().zip(tags) {
        token.pred_tag = Some(tag);
    }
    violations
}

pub(crate) fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| CliError::input(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn load_corpus(path: &Path, scheme: &LabelScheme) -> Result<Vec<Document>, CliError> {
    load_conll_corpus(path, scheme).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn default_trace_path(model_out: &Path) -> PathBuf {
    let mut name = model_out.as_os_str().to_owned();
    name.push(".trace");
    PathBuf::from(name)
}

pub fn train(args: &TrainArgs) -> Result<ExitCode, CliError> {
    let rc = args.tuning.resolve()?;
    rc.train_config().validate()?;
    if rc.model == ModelArg::Bilstm {
        rc.bilstm_config().validate()?;
        if args.gazetteer.is_some() {
            eprintln!("warning: --gazetteer is ignored for bilstm models");
        }
    }

    let scheme = LabelScheme::wnut();
    let mut docs = load_corpus(&args.train, &scheme)?;
    if rc.lowercase {
        lowercase_corpus(&mut docs);
    }

    let extra = match &args.gazetteer {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Some(Gazetteer::parse_tsv(&text, &scheme)?)
        }
        None => None,
    };

    let (model, trace) = fit_model(&docs, &scheme, &rc, extra.as_ref())?;
    match &model {
        AnyModel::Crf(m) => seqtag::crf::io::save_model(m, &args.model_out)?,
        AnyModel::Bilstm(m) => seqtag::bilstm::io::save_model(m, &args.model_out)?,
    }

    let trace_path = args
        .trace_out
        .clone()
        .unwrap_or_else(|| default_trace_path(&args.model_out));
    let mut text = rc.header();
    text.push('\n');
    for (epoch, loss) in trace.iter().enumerate() {
        text.push_str(&format!("{epoch}\t{loss:.6}\n"));
    }
    write_text_atomic(&trace_path, &text)?;

    let sentences: usize = docs.iter().map(|d| d.sentences.len()).sum();
    println!(
        "trained {} model on {} documents ({sentences} sentences)",
        rc.model,
        docs.len()
    );
    if let Some(last) = trace.last() {
        println!("final epoch loss {last:.6}");
    }
    println!("model written to {}", args.model_out.display());
    println!("trace written to {}", trace_path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn tag(args: &TagArgs) -> Result<ExitCode, CliError> {
    let flags = Overrides {
        seed: args.seed,
        lowercase: args.lowercase.then_some(true),
        constrain: args.no_constrain.then_some(false),
        ..Default::default()
    };
    let rc = RunConfig::resolve(args.config.as_deref(), &flags)?;

    let scheme = LabelScheme::wnut();
    let kind = sniff_kind(&args.model)
        .map_err(|e| CliError::input(format!("{}: {e}", args.model.display())))?;
    let model = match kind {
        ModelKind::Crf => AnyModel::Crf(Box::new(seqtag::crf::io::load_model(&args.model)?)),
        ModelKind::Bilstm => {
            AnyModel::Bilstm(Box::new(seqtag::bilstm::io::load_model(&args.model)?))
        }
    };

    let mut docs = load_conll_corpus_untagged(&args.input, &scheme)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    if rc.lowercase {
        lowercase_corpus(&mut docs);
    }

    let mask = transition_mask(model.scheme());
    let mask_ref = if rc.constrain { Some(&mask) } else { None };
    let violations = tag_documents(&model, &mut docs, mask_ref)?;
    if !rc.constrain {
        eprintln!("warning: {violations} BIO violations in unconstrained output");
    }

    let header = rc.header();
    if args.input.is_dir() {
        fs::create_dir_all(&args.output)?;
        for doc in &docs {
            let body = serialize_document(doc, TagSide::Pred)?;
            let path = args.output.join(format!("{}.conll", doc.id));
            write_text_atomic(&path, &format!("{header}\n{body}"))?;
        }
    } else {
        let body = serialize_document(&docs[0], TagSide::Pred)?;
        write_text_atomic(&args.output, &format!("{header}\n{body}"))?;
    }

    let tokens: usize = docs
        .iter()
        .flat_map(|d| &d.sentences)
        .map(|s| s.tokens.len())
        .sum();
    println!(
        "tagged {} documents ({tokens} tokens) to {}",
        docs.len(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn eval(args: &EvalArgs) -> Result<ExitCode, CliError> {
    let flags = Overrides {
        seed: args.seed,
        ..Default::default()
    };
    let rc = RunConfig::resolve(args.config.as_deref(), &flags)?;

    let scheme = LabelScheme::wnut();
    let gold = load_corpus(&args.gold, &scheme)?;
    let pred = load_corpus(&args.pred, &scheme)?;
    let report = evaluate(&gold, &pred, &scheme)?;

    print!("{}", render_report(&report));
    println!("F1={:.4}", report.micro().f1());

    if let Some(path) = &args.tsv {
        let text = format!("{}\n{}", rc.header(), render_tsv(&report));
        write_text_atomic(path, &text)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn validate(args: &ValidateArgs) -> Result<ExitCode, CliError> {
    let scheme = LabelScheme::wnut();
    let docs = load_corpus(&args.input, &scheme)?;

    let mut count = 0usize;
    for doc in &docs {
        for (s_idx, sentence) in doc.sentences.iter().enumerate() {
            let tags: Vec<&str> = sentence
                .tokens
                .iter()
                .filter_map(|t| t.gold_tag.as_deref())
                .collect();
            for violation in validate_bio(&tags, &scheme) {
                println!("{}:{s_idx}:{violation}", doc.id);
                count += 1;
            }
        }
    }

    if count == 0 {
        eprintln!("no violations");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{count} violations");
        Ok(ExitCode::from(3))
    }
}

pub fn convert(args: &ConvertArgs) -> Result<ExitCode, CliError> {
    let flags = Overrides {
        seed: args.seed,
        ..Default::default()
    };
    let rc = RunConfig::resolve(args.config.as_deref(), &flags)?;

    if !args.input.is_dir() {
        return Err(CliError::input(format!(
            "{}: expected a directory of .txt/.ann pairs",
            args.input.display()
        )));
    }
    let mut txt_files = Vec::new();
    let mut ann_files = Vec::new();
    for entry in fs::read_dir(&args.input)? {
        let path = entry?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => txt_files.push(path),
            Some("ann") => ann_files.push(path),
            _ => {}
        }
    }
    txt_files.sort();
    for txt in &txt_files {
        if !txt.with_extension("ann").exists() {
            return Err(CliError::input(format!(
                "{}: missing matching .ann file",
                txt.display()
            )));
        }
    }
    for ann in &ann_files {
        if !ann.with_extension("txt").exists() {
            return Err(CliError::input(format!(
                "{}: missing matching .txt file",
                ann.display()
            )));
        }
    }
    if txt_files.is_empty() {
        return Err(CliError::input(format!(
            "{}: no .txt files found",
            args.input.display()
        )));
    }

    let scheme = LabelScheme::wnut();
    let tokenizer = Tokenizer;
    let header = rc.header();
    fs::create_dir_all(&args.output)?;

    let mut converted = 0usize;
    let mut dropped = 0usize;
    for txt_path in &txt_files {
        let stem = txt_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "doc".to_string());
        let txt = fs::read_to_string(txt_path)?;
        let ann = fs::read_to_string(txt_path.with_extension("ann"))?;
        let parsed = parse_brat_with(&txt, &ann, &tokenizer, &scheme, BratPolicy::DropInvalid)
            .map_err(|e| CliError::input(format!("{}: {e}", txt_path.display())))?;
        for warning in &parsed.warnings {
            eprintln!("{stem}: {warning}");
        }
        dropped += parsed.warnings.len();

        let mut doc = parsed.document;
        doc.id = stem.clone();
        let body = serialize_document(&doc, TagSide::Gold)?;
        let out_path = args.output.join(format!("{stem}.conll"));
        write_text_atomic(&out_path, &format!("{header}\n{body}"))?;
        converted += 1;
    }

    println!("converted {converted} files ({dropped} annotations dropped)");
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    let rc = args.tuning.resolve()?;
    let scheme = LabelScheme::wnut();

    let mut train_docs = load_corpus(&args.train, &scheme)?;
    let mut dev_docs = load_corpus(&args.dev, &scheme)?;
    if rc.lowercase {
        lowercase_corpus(&mut train_docs);
        lowercase_corpus(&mut dev_docs);
    }

    let mut grid = SweepGrid::new(args.lr_grid.clone(), args.wd_grid.clone(), rc.clone())?;
    let failures = grid.run(&train_docs, &dev_docs, &scheme);

    let table = grid.render();
    let text = format!("{}\n{table}", rc.header());
    write_text_atomic(&args.output, &text)?;

    print!("{table}");
    if failures > 0 {
        eprintln!("warning: {failures} cells failed");
    }
    println!("sweep table written to {}", args.output.display());
    Ok(ExitCode::SUCCESS)
}

pub fn gen_synthetic(args: &GenSyntheticArgs) -> Result<ExitCode, CliError> {
    let flags = Overrides {
        seed: args.seed,
        ..Default::default()
    };
    let rc = RunConfig::resolve(args.config.as_deref(), &flags)?;
    if args.n_docs < 1 {
        return Err(CliError::input("--n-docs must be at least 1"));
    }

    let scheme = LabelScheme::wnut();
    let docs = generate_synthetic(rc.seed, args.n_docs, &scheme);
    fs::create_dir_all(&args.output)?;
    let header = rc.header();
    for doc in &docs {
        let body = serialize_document(doc, TagSide::Gold)?;
        let path = args.output.join(format!("{}.conll", doc.id));
        write_text_atomic(&path, &format!("{header}\n{body}"))?;
    }

    println!(
        "wrote {} documents to {}",
        docs.len(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}
