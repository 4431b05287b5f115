use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use tonal_hmm::analytics::{
    compare_annotations, compare_chord_categories, compare_keys, doubling_csv, doubling_report, modulation_map,
    nonharmonic_catalog, progression_map, transition_report, AccuracyReport, WorkAccuracy,
};
use tonal_hmm::chord_layer::{self, ChordFitConfig, ChordTrack, EmissionMode};
use tonal_hmm::key_layer::{self, KeyFitConfig, KeyTrack};
use tonal_hmm::score_io::{
    parse_corpus, parse_ground_truth, segment_steps, write_annotation_dir, RomanAnnotation, StepSequence,
};
use tonal_hmm::tied_hmm::{write_fit_log, FitOptions, FitReport, ParamFile, TiedHmmParams};
use tonal_hmm::translate::{
    build_progression_table, build_spans, method1, method2, method3, smooth_keys, ProgressionTable, Translation,
};

use crate::{AnnotateArgs, CorpusArgs, EvaluateArgs, FitArgs, FitChordsArgs, FitKeysArgs, StatsArgs};

/// Bad usage or missing input; exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(message: impl Into<String>) -> anyhow::Error {
    InputError(message.into()).into()
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        return Err(input_error(format!("{what} not found: {}", path.display())));
    }
    Ok(())
}

const CHORD_PARAMS: &str = "chord_params.json";
const KEY_PARAMS: &str = "key_params.json";
const CHORD_TRACKS: &str = "chord_tracks.csv";
const KEY_TRACKS: &str = "key_tracks.csv";
const PROGRESSIONS: &str = "progressions.csv";

/// Output subdirectory of each translation method.
fn method_dir(method: u8) -> &'static str {
    match method {
        1 => "raw",
        2 => "standard",
        _ => "pruned",
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Vec<StepSequence>> {
    require(&args.corpus, "corpus")?;
    let works = parse_corpus(&args.corpus).with_context(|| format!("reading {}", args.corpus.display()))?;
    if works.is_empty() {
        return Err(input_error(format!("no work files in {}", args.corpus.display())));
    }
    for w in &works {
        w.validate()?;
    }
    Ok(works.par_iter().map(segment_steps).collect())
}

fn emission_mode(args: &CorpusArgs) -> EmissionMode {
    if args.distinct_pcs {
        EmissionMode::DistinctPitchClasses
    } else {
        EmissionMode::PerVoice
    }
}

fn fit_options(args: &FitArgs) -> Result<FitOptions> {
    if args.runs == 0 {
        return Err(input_error("--runs must be at least 1"));
    }
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        return Err(input_error("--tol must be a nonnegative number"));
    }
    Ok(FitOptions {
        tol: args.tol,
        max_iters: args.max_iters,
        ..FitOptions::default()
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_params(path: &Path, what: &str) -> Result<TiedHmmParams> {
    require(path, what)?;
    let file = ParamFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(file.params()?)
}

fn runs_csv(report: &FitReport) -> String {
    let mut out = String::from("run,loglik,best\n");
    for (i, ll) in report.run_logliks.iter().enumerate() {
        out.push_str(&format!("{i},{ll},{}\n", u8::from(i == report.best_run)));
    }
    out
}

/// Writes `<prefix>_params.json`, `_fit.log`, `_emissions.csv` and `_runs.csv`.
fn write_fit(out: &Path, prefix: &str, report: &FitReport, emissions: &str) -> Result<()> {
    ParamFile::from_report(&report.params, report).write(&out.join(format!("{prefix}_params.json")))?;
    let log_path = out.join(format!("{prefix}_fit.log"));
    let mut log =
        BufWriter::new(fs::File::create(&log_path).with_context(|| format!("writing {}", log_path.display()))?);
    write_fit_log(&mut log, &report.history)?;
    log.flush()?;
    write_file(&out.join(format!("{prefix}_emissions.csv")), emissions)?;
    write_file(&out.join(format!("{prefix}_runs.csv")), &runs_csv(report))?;
    let degenerate = report.run_logliks.iter().filter(|l| !l.is_finite()).count();
    eprintln!(
        "{prefix}: log-likelihood {:.4} from run {} of {} ({} iterations{}){}",
        report.loglik,
        report.best_run,
        report.run_logliks.len(),
        report.n_iters,
        if report.converged { "" } else { ", not converged" },
        if degenerate > 0 {
            format!(", {degenerate} degenerate runs")
        } else {
            String::new()
        },
    );
    Ok(())
}

pub fn fit_chords(args: &FitChordsArgs) -> Result<()> {
    if args.chord_types < 2 {
        return Err(input_error("--chord-types must be at least 2"));
    }
    let fit = fit_options(&args.fit)?;
    let seqs = load_corpus(&args.corpus)?;
    let mode = emission_mode(&args.corpus);
    let config = ChordFitConfig {
        n_types: args.chord_types,
        n_runs: args.fit.runs,
        seed: args.fit.seed,
        mode,
        fit,
    };
    let report = chord_layer::fit_chord_model(&seqs, &config)?;
    let out = &args.out.out;
    create_dir(out)?;
    write_fit(
        out,
        "chord",
        &report,
        &chord_layer::chord_emission_report(&report.params),
    )?;
    let tracks = chord_layer::decode_corpus(&report.params, &seqs, mode)?;
    chord_layer::write_chord_tracks(&out.join(CHORD_TRACKS), &tracks)?;
    Ok(())
}

fn decode_chords(out: &Path, corpus: &CorpusArgs, seqs: &[StepSequence]) -> Result<(TiedHmmParams, Vec<ChordTrack>)> {
    let params = load_params(&out.join(CHORD_PARAMS), "chord parameters (run fit-chords first)")?;
    let tracks = chord_layer::decode_corpus(&params, seqs, emission_mode(corpus))?;
    Ok((params, tracks))
}

pub fn fit_keys(args: &FitKeysArgs) -> Result<()> {
    if args.key_types < 1 {
        return Err(input_error("--key-types must be at least 1"));
    }
    let fit = fit_options(&args.fit)?;
    let out = &args.out.out;
    require(&out.join(CHORD_PARAMS), "chord parameters (run fit-chords first)")?;
    let seqs = load_corpus(&args.corpus)?;
    let (chord_params, chords) = decode_chords(out, &args.corpus, &seqs)?;
    let config = KeyFitConfig {
        n_types: args.key_types,
        n_chord_types: chord_params.n_types(),
        n_runs: args.fit.runs,
        seed: args.fit.seed,
        fit,
    };
    let report = key_layer::fit_key_model(&chords, &config)?;
    write_fit(out, "key", &report, &key_layer::key_emission_report(&report.params))?;
    let keys = key_layer::decode_corpus(&report.params, &chords)?;
    key_layer::write_key_tracks(&out.join(KEY_TRACKS), &keys)?;
    Ok(())
}

fn flags_csv(translations: &BTreeMap<String, Translation>) -> String {
    let mut out = String::from("work_id,start,end,kind\n");
    for (id, t) in translations {
        for f in &t.flags {
            out.push_str(&format!("{id},{},{},{}\n", f.start, f.end, f.kind.as_str()));
        }
    }
    out
}

fn translate_all(
    seqs: &[StepSequence],
    chords: &[ChordTrack],
    keys: &[KeyTrack],
    method: u8,
    region_max: usize,
    table: Option<&ProgressionTable>,
) -> Result<BTreeMap<String, Translation>> {
    let done: Vec<(String, Translation)> = seqs
        .par_iter()
        .zip(chords)
        .zip(keys)
        .map(|((seq, chord), key)| {
            let spans = build_spans(chord, seq)?;
            let t = match method {
                1 => method1(&spans, key, seq)?,
                _ => {
                    let key = smooth_keys(key, chord, region_max)?;
                    match table {
                        Some(table) => method3(&spans, &key, seq, table)?,
                        None => method2(&spans, &key, seq)?,
                    }
                }
            };
            Ok((seq.work_id.clone(), t))
        })
        .collect::<tonal_hmm::Result<_>>()?;
    Ok(done.into_iter().collect())
}

pub fn annotate(args: &AnnotateArgs) -> Result<()> {
    let out = &args.out.out;
    require(&out.join(CHORD_PARAMS), "chord parameters (run fit-chords first)")?;
    require(&out.join(KEY_PARAMS), "key parameters (run fit-keys first)")?;
    if let Some(t) = &args.table {
        require(t, "progression table")?;
    }
    let seqs = load_corpus(&args.corpus)?;
    let (_, chords) = decode_chords(out, &args.corpus, &seqs)?;
    let key_params = load_params(&out.join(KEY_PARAMS), "key parameters")?;
    let keys = key_layer::decode_corpus(&key_params, &chords)?;

    let table = if args.method == 3 {
        let table = match &args.table {
            Some(path) => ProgressionTable::read(path)?,
            None => {
                let standard = translate_all(&seqs, &chords, &keys, 2, args.region_max, None)?;
                let anns: Vec<RomanAnnotation> = standard.into_values().map(|t| t.annotation).collect();
                build_progression_table(&anns)
            }
        };
        table.write(&out.join(PROGRESSIONS))?;
        Some(table)
    } else {
        None
    };
    let translations = translate_all(&seqs, &chords, &keys, args.method, args.region_max, table.as_ref())?;
    let dir = out.join(method_dir(args.method));
    let anns: BTreeMap<String, RomanAnnotation> = translations
        .iter()
        .map(|(id, t)| (id.clone(), t.annotation.clone()))
        .collect();
    write_annotation_dir(&dir, &anns)?;
    write_file(&dir.join("flags.csv"), &flags_csv(&translations))?;
    let n_flags: usize = translations.values().map(|t| t.flags.len()).sum();
    eprintln!(
        "method {}: annotated {} works into {} ({n_flags} flagged spans)",
        args.method,
        anns.len(),
        dir.display()
    );
    Ok(())
}

fn read_tracks(out: &Path) -> Result<(Vec<ChordTrack>, BTreeMap<String, KeyTrack>)> {
    let (cp, kp) = (out.join(CHORD_TRACKS), out.join(KEY_TRACKS));
    require(&cp, "chord tracks (run fit-chords first)")?;
    require(&kp, "key tracks (run fit-keys first)")?;
    let chords = chord_layer::read_chord_tracks(&cp)?;
    let keys = key_layer::read_key_tracks(&kp)?
        .into_iter()
        .map(|k| (k.work_id.clone(), k))
        .collect();
    Ok((chords, keys))
}

fn key_track<'a>(keys: &'a BTreeMap<String, KeyTrack>, id: &str) -> Result<&'a KeyTrack> {
    keys.get(id)
        .ok_or_else(|| input_error(format!("no key track for work {id}")))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    require(&args.ground_truth, "ground truth")?;
    let out = &args.out.out;
    let (chords, keys) = read_tracks(out)?;
    let truth = parse_ground_truth(&args.ground_truth)?;
    if truth.is_empty() {
        return Err(input_error(format!(
            "no annotations in {}",
            args.ground_truth.display()
        )));
    }
    let mut methods: Vec<(String, BTreeMap<String, RomanAnnotation>)> = Vec::new();
    for m in 1..=3 {
        let dir = out.join(method_dir(m));
        if dir.is_dir() {
            methods.push((m.to_string(), parse_ground_truth(&dir)?));
        }
    }

    let mut report = AccuracyReport::default();
    let mut missing = Vec::new();
    for chord in &chords {
        let Some(human) = truth.get(&chord.work_id) else {
            missing.push(chord.work_id.clone());
            continue;
        };
        let key = key_track(&keys, &chord.work_id)?;
        let smoothed = smooth_keys(key, chord, args.region_max)?;
        let mut work = WorkAccuracy {
            work_id: chord.work_id.clone(),
            chord_category: compare_chord_categories(chord, human)?,
            key: compare_keys(key, human, args.key_slack)?,
            key_smoothed: compare_keys(&smoothed, human, args.key_slack)?,
            method_chord: BTreeMap::new(),
        };
        let mut confusion = BTreeMap::new();
        for (m, anns) in &methods {
            if let Some(machine) = anns.get(&chord.work_id) {
                let cmp = compare_annotations(machine, human)?;
                work.method_chord.insert(m.clone(), cmp.chord);
                confusion.insert(m.clone(), cmp.confusion);
            }
        }
        report.add_work(work, confusion);
    }
    if !missing.is_empty() {
        eprintln!(
            "warning: {} works have no ground truth: {}",
            missing.len(),
            missing.join(" ")
        );
    }
    if report.per_work.is_empty() {
        return Err(input_error("no decoded work has a ground-truth annotation"));
    }

    let dir = out.join("evaluation");
    create_dir(&dir)?;
    let summary = report.summary();
    write_file(&dir.join("summary.txt"), &summary)?;
    write_file(&dir.join("per_work.csv"), &report.per_work_csv())?;
    for (m, _) in &methods {
        write_file(&dir.join(format!("confusion_method{m}.csv")), &report.confusion_csv(m))?;
    }
    print!("{summary}");
    Ok(())
}

pub fn stats(args: &StatsArgs) -> Result<()> {
    let out = &args.out.out;
    let (chords, keys) = read_tracks(out)?;
    let key_list: Vec<KeyTrack> = keys.values().cloned().collect();
    let annotations: PathBuf = args.annotations.clone().unwrap_or_else(|| out.join(method_dir(2)));
    require(
        &annotations,
        "annotations (run annotate --method 2 first or pass --annotations)",
    )?;
    let seqs = load_corpus(&args.corpus)?;
    let anns = parse_ground_truth(&annotations)?;

    let dir = out.join("stats");
    create_dir(&dir)?;
    let transitions = transition_report(&chords, &key_list);
    write_file(&dir.join("chord_transitions.csv"), &transitions.chord.to_csv())?;
    write_file(&dir.join("key_transitions.csv"), &transitions.key.to_csv())?;
    let modulations = modulation_map(&key_list);
    write_file(&dir.join("modulations.csv"), &modulations.to_csv())?;

    let mut paired_anns = Vec::new();
    let mut paired_seqs = Vec::new();
    for seq in seqs {
        if let Some(a) = anns.get(&seq.work_id) {
            paired_anns.push(a.clone());
            paired_seqs.push(seq);
        }
    }
    if paired_anns.is_empty() {
        bail!(
            "no annotation in {} matches a work of the corpus",
            annotations.display()
        );
    }
    let map = progression_map(&paired_anns, args.min_chord_pct, args.min_trans_pct);
    write_file(&dir.join("progression_map.csv"), &map.to_csv())?;
    let doubling = doubling_report(&paired_anns, &paired_seqs, args.min_count)?;
    write_file(&dir.join("doubling.csv"), &doubling_csv(&doubling))?;
    let catalog = nonharmonic_catalog(&paired_anns, &paired_seqs)?;
    write_file(&dir.join("nonharmonic.csv"), &catalog.to_csv())?;

    let summary = format!(
        "chord transitions: {}\nkey transitions: {}\nworks returning to their first key: {} of {} ({} without modulation)\n\
         annotated works: {}\nnonharmonic notes: {}\n",
        transitions.chord.total(),
        transitions.key.total(),
        modulations.works_retained,
        modulations.works_total,
        modulations.works_static,
        paired_anns.len(),
        catalog.total(),
    );
    write_file(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
