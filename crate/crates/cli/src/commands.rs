use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dynk_core::agreement::Evaluator;
use dynk_core::report::{
    delta_table, length_bias, topk_records, write_agreement, write_apd, write_bias, write_delta,
    write_topk, write_validation, InputInfo, ReportError, ReportMetadata, ValidationSummary,
};
use dynk_core::runs::{apd_select, build_run_matrix, check_aligned};
use dynk_core::synth::{self, SynthConfig};
use dynk_core::{
    load_corpus, CombineMode, Corpus, IngestMode, KSpec, LoadedCorpus, PunctuationSet,
    ScoreTransform, SelectionOptions, SelectorSpec, TieBreak,
};

use crate::args::{
    AgreeArgs, ApdArgs, BiasArgs, DeltaArgs, InputArgs, SelectionArgs, SelectorArgs, SelectorsArg,
    SynthArgs, TieArg, TopkArgs, ValidateArgs,
};
use crate::error::CliError;

const NO_TRUNCATION_NOTE: &str =
    "method selections use the requested k on every instance and are not truncated to the number of annotator-selected tokens";

struct Input {
    corpus: Corpus,
    info: InputInfo,
    punctuation_zeroed: bool,
}

fn ingest_mode(lenient: bool) -> IngestMode {
    if lenient {
        IngestMode::Lenient
    } else {
        IngestMode::Strict
    }
}

fn load(path: &Path, lenient: bool) -> Result<LoadedCorpus, CliError> {
    let loaded = load_corpus(path, ingest_mode(lenient))?;
    for skipped in &loaded.skipped {
        eprintln!("warning: skipped line {}: {}", skipped.line, skipped.reason);
    }
    Ok(loaded)
}

fn input_info(path: &Path, loaded: &LoadedCorpus, run_id: Option<String>) -> InputInfo {
    InputInfo {
        run_id,
        path: path.display().to_string(),
        sha256: loaded.checksum.clone(),
        instances: loaded.corpus.len(),
        skipped_records: loaded.skip_count(),
    }
}

fn read_input(args: &InputArgs) -> Result<Input, CliError> {
    let loaded = load(&args.input, args.lenient)?;
    let info = input_info(&args.input, &loaded, None);
    let mut corpus = loaded.corpus;
    if corpus.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no instances",
            args.input.display()
        )));
    }
    if args.zero_punctuation {
        corpus = corpus.zero_punctuation(&PunctuationSet::default());
    }
    Ok(Input {
        corpus,
        info,
        punctuation_zeroed: args.zero_punctuation,
    })
}

fn options(args: &SelectionArgs) -> SelectionOptions {
    SelectionOptions {
        tie: match args.tie {
            TieArg::Earliest => TieBreak::EarliestIndex,
            TieArg::Random => TieBreak::SeededRandom(args.seed.unwrap_or(0)),
        },
        transform: if args.abs {
            ScoreTransform::Absolute
        } else {
            ScoreTransform::Raw
        },
    }
}

fn metadata(
    command: &str,
    input: &Input,
    args: &SelectionArgs,
    k_specs: &[KSpec],
) -> ReportMetadata {
    let opts = options(args);
    ReportMetadata {
        command: command.to_owned(),
        inputs: vec![input.info.clone()],
        k_specs: k_specs.iter().map(KSpec::to_string).collect(),
        combine: None,
        tie: opts.tie.to_string(),
        seed: match opts.tie {
            TieBreak::SeededRandom(seed) => Some(seed),
            TieBreak::EarliestIndex => args.seed,
        },
        transform: opts.transform.to_string(),
        punctuation_zeroed: input.punctuation_zeroed,
        notes: Vec::new(),
    }
}

fn selector_spec(args: &SelectorArgs) -> Result<SelectorSpec, CliError> {
    let wanted = match args.selectors {
        SelectorsArg::AllPairs | SelectorsArg::AllHuman => 0,
        SelectorsArg::Human => 1,
        SelectorsArg::Pair => 2,
    };
    if args.methods.len() != wanted {
        return Err(CliError::usage(format!(
            "--selectors {} takes {wanted} --method value(s), got {}",
            args.selectors
                .to_possible_value()
                .expect("no skipped variants")
                .get_name(),
            args.methods.len()
        )));
    }
    Ok(match args.selectors {
        SelectorsArg::AllPairs => SelectorSpec::AllPairs,
        SelectorsArg::AllHuman => SelectorSpec::AllHuman,
        SelectorsArg::Human => SelectorSpec::Human(args.methods[0].clone()),
        SelectorsArg::Pair => SelectorSpec::Pair(args.methods[0].clone(), args.methods[1].clone()),
    })
}

fn uses_humans(spec: &SelectorSpec) -> bool {
    matches!(spec, SelectorSpec::Human(_) | SelectorSpec::AllHuman)
}

/// Notes with per-method dynamic k mean and sd over the whole corpus.
fn dynamic_k_notes(evaluator: &mut Evaluator<'_>) -> Result<Vec<String>, CliError> {
    let corpus = evaluator.corpus();
    let mut notes = Vec::new();
    for method in corpus.method_names() {
        let stats = evaluator.method_k_stats(method, KSpec::Dynamic)?;
        notes.push(format!(
            "dynamic k {}: {} +/- {} ({} fallbacks)",
            method,
            dynk_core::report::fmt6(stats.mean),
            dynk_core::report::fmt6(stats.sd),
            stats.fallbacks
        ));
    }
    Ok(notes)
}

/// Runs `write` against the output file or stdout.
fn emit<F>(path: Option<&PathBuf>, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), ReportError>,
{
    match path {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            write(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            write(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(f))
}

pub fn agree(args: AgreeArgs) -> Result<(), CliError> {
    let input = read_input(&args.input)?;
    let spec = selector_spec(&args.selectors)?;
    let combine = CombineMode::from(args.selectors.combine);
    let k_specs = &args.k.0;
    let mut meta = metadata("agree", &input, &args.selection, k_specs);

    let (entries, notes) = with_pool(args.output.jobs, || -> Result<_, CliError> {
        let mut ev = Evaluator::new(&input.corpus, options(&args.selection), combine);
        let pairs = spec.expand(&input.corpus)?;
        let mut entries = Vec::with_capacity(pairs.len() * k_specs.len());
        for pair in &pairs {
            for &k in k_specs {
                entries.push(ev.entry(pair, k)?);
            }
        }
        let notes = if k_specs.iter().any(KSpec::is_dynamic) {
            dynamic_k_notes(&mut ev)?
        } else {
            Vec::new()
        };
        Ok((entries, notes))
    })??;

    if uses_humans(&spec) {
        meta.combine = Some(combine.to_string());
        meta.notes.push(NO_TRUNCATION_NOTE.to_owned());
    }
    meta.notes.extend(notes);
    emit(args.output.output.as_ref(), |out| {
        write_agreement(&entries, &meta, args.output.format.into(), out)
    })
}

pub fn delta(args: DeltaArgs) -> Result<(), CliError> {
    let input = read_input(&args.input)?;
    let spec = selector_spec(&args.selectors)?;
    let combine = CombineMode::from(args.selectors.combine);
    let mut k_specs: Vec<KSpec> = args
        .fixed_ks
        .iter()
        .map(|&k| KSpec::fixed(k).map_err(|e| CliError::usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    k_specs.push(KSpec::Dynamic);
    let mut meta = metadata("delta", &input, &args.selection, &k_specs);

    let (table, notes) = with_pool(args.output.jobs, || -> Result<_, CliError> {
        let mut ev = Evaluator::new(&input.corpus, options(&args.selection), combine);
        let table = delta_table(&mut ev, &spec, &args.fixed_ks, args.aggregate.into())?;
        Ok((table, dynamic_k_notes(&mut ev)?))
    })??;

    if uses_humans(&spec) {
        meta.combine = Some(combine.to_string());
        meta.notes.push(NO_TRUNCATION_NOTE.to_owned());
    }
    meta.notes.push(format!(
        "method-method agreements folded by {}",
        args.aggregate_name()
    ));
    meta.notes.extend(notes);
    emit(args.output.output.as_ref(), |out| {
        write_delta(&table, &meta, args.output.format.into(), out)
    })
}

impl DeltaArgs {
    fn aggregate_name(&self) -> String {
        dynk_core::report::Aggregate::from(self.aggregate).to_string()
    }
}

pub fn bias(args: BiasArgs) -> Result<(), CliError> {
    let input = read_input(&args.input)?;
    let k_specs = &args.k.0;
    let mut meta = metadata("bias", &input, &args.selection, k_specs);
    meta.notes.push(format!("bins {:?}", args.bins));

    let rows = with_pool(args.output.jobs, || -> Result<_, CliError> {
        let mut ev = Evaluator::new(
            &input.corpus,
            options(&args.selection),
            CombineMode::default(),
        );
        Ok(length_bias(&mut ev, &args.bins, k_specs)?)
    })??;

    emit(args.output.output.as_ref(), |out| {
        write_bias(&rows, &meta, args.output.format.into(), out)
    })
}

pub fn topk(args: TopkArgs) -> Result<(), CliError> {
    let input = read_input(&args.input)?;
    for m in &args.methods {
        if input.corpus.method_index(m).is_none() {
            return Err(CliError::usage(format!("unknown method '{m}'")));
        }
    }
    let k_specs = &args.k.0;
    let meta = metadata("topk", &input, &args.selection, k_specs);

    let mut records = with_pool(args.output.jobs, || -> Result<_, CliError> {
        let mut ev = Evaluator::new(
            &input.corpus,
            options(&args.selection),
            CombineMode::default(),
        );
        Ok(topk_records(&mut ev, k_specs)?)
    })??;
    if !args.methods.is_empty() {
        records.retain(|r| args.methods.contains(&r.method));
    }

    emit(args.output.output.as_ref(), |out| {
        write_topk(&records, &meta, args.output.format.into(), out)
    })
}

pub fn apd(args: ApdArgs) -> Result<(), CliError> {
    let mut runs = args.runs.clone();
    for path in &args.inputs {
        let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| {
            CliError::usage(format!("cannot derive a run id from {}", path.display()))
        })?;
        runs.push((stem.to_owned(), path.clone()));
    }
    if runs.len() < 2 {
        return Err(CliError::usage(format!(
            "apd needs at least two runs (--run ID=PATH or --input PATH), got {}",
            runs.len()
        )));
    }

    let mut corpora = Vec::with_capacity(runs.len());
    let mut infos = Vec::with_capacity(runs.len());
    for (id, path) in &runs {
        let loaded = load(path, args.lenient)?;
        infos.push(input_info(path, &loaded, Some(id.clone())));
        corpora.push(loaded.corpus);
    }
    let reference = &corpora[0];
    if reference.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no instances",
            runs[0].1.display()
        )));
    }
    for ((id, _), corpus) in runs.iter().zip(&corpora).skip(1) {
        check_aligned(reference, corpus, id)?;
    }

    let selection = with_pool(args.output.jobs, || {
        let matrices: Vec<_> = runs
            .iter()
            .zip(&corpora)
            .map(|((id, _), corpus)| build_run_matrix(corpus, id.clone()))
            .collect();
        apd_select(&matrices)
    })??;

    let order: Vec<String> = runs.iter().map(|(id, _)| id.clone()).collect();
    let meta = ReportMetadata {
        command: "apd".to_owned(),
        inputs: infos,
        tie: "lowest run id".to_owned(),
        transform: ScoreTransform::Raw.to_string(),
        notes: vec![format!("{} pairwise comparisons", selection.comparisons)],
        ..ReportMetadata::default()
    };
    emit(args.output.output.as_ref(), |out| {
        write_apd(&selection, &order, &meta, args.output.format.into(), out)
    })
}

pub fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let loaded = load(&args.input.input, args.input.lenient)?;
    let corpus = &loaded.corpus;
    let lengths: Vec<usize> = corpus.instances().iter().map(|i| i.len()).collect();
    let summary = ValidationSummary {
        path: args.input.input.display().to_string(),
        sha256: loaded.checksum.clone(),
        instances: corpus.len(),
        methods: corpus.method_names().to_vec(),
        annotated: corpus.annotated_count(),
        skipped_records: loaded.skip_count(),
        min_len: lengths.iter().copied().min().unwrap_or(0),
        max_len: lengths.iter().copied().max().unwrap_or(0),
        mean_len: if lengths.is_empty() {
            0.0
        } else {
            lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
        },
    };
    emit(args.output.as_ref(), |out| {
        write_validation(&summary, args.format.into(), out)
    })
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.min_len > args.max_len {
        return Err(CliError::usage("--min-len must not exceed --max-len"));
    }
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(CliError::usage(
            "--noise must be a finite non-negative number",
        ));
    }
    let config = SynthConfig {
        seed: args.seed,
        instances: args.instances,
        methods: args.methods,
        min_len: args.min_len,
        max_len: args.max_len,
        annotators: args.annotators,
    };
    let base = match &args.base {
        Some(path) => load(path, false)?.corpus,
        None => synth::generate(&config),
    };
    let write_corpus = |corpus: &Corpus, path: Option<&PathBuf>| {
        emit(path, |out| corpus.write_jsonl(out).map_err(ReportError::Io))
    };
    match args.runs {
        None => write_corpus(&base, args.output.as_ref()),
        Some(n) => {
            let dir = args
                .output
                .as_ref()
                .ok_or_else(|| CliError::usage("--runs needs --output DIR"))?;
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
            for i in 1..=n {
                let run = synth::perturb(&base, args.seed.wrapping_add(i as u64), args.noise);
                write_corpus(&run, Some(&dir.join(format!("run_{i}.jsonl"))))?;
            }
            Ok(())
        }
    }
}
