use std::fs;
use std::io::Write;
use std::path::Path;

use clinorm_core::augment::{augment_corpus, AugmentConfig, ConfusionTable, ConfusionTables};
use clinorm_core::eval::{parse_hypotheses, render_table, run_evaluation};
use clinorm_core::filter::filter_pipeline;
use clinorm_core::standardize::standardize_text;
use clinorm_core::synth::{synth_corpus, SynthConfig};
use clinorm_core::terminology::{extract_candidate_phrases, read_entries, reference_terminology, validate_entries};
use clinorm_core::{load_corpus, load_terminology, Corpus, Language, ReportPair, Terminology};
use clinorm_llm::prompt::{Exemplar, PromptTemplate, ShotMode};
use clinorm_llm::standardize::LlmStandardizer;
use clinorm_llm::translate::translate_pairs;
use clinorm_llm::{batch_map, ClientConfig, ConfigLayer, HttpChatClient, LlmError};
use log::info;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::{
    AugmentArgs, EvaluateArgs, ExtractArgs, FilterArgs, LlmArgs, StandardizeArgs, SynthArgs, TermsArg,
    TranslateArgs, ValidateArgs,
};

pub fn terminology(path: Option<&Path>) -> CliResult<Terminology> {
    match path {
        Some(p) => Ok(load_terminology(p)?),
        None => Ok(reference_terminology()),
    }
}

fn terms(a: &TermsArg) -> CliResult<Terminology> {
    terminology(a.terms.as_deref())
}

pub fn corpus(path: &Path) -> CliResult<Corpus> {
    load_corpus(path).map_err(|e| match e {
        e @ clinorm_core::corpus::CorpusError::Io { .. } => CliError::from(e),
        e => CliError::from(e).context(path.display()),
    })
}

pub fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data(format!("stdout: {e}"))),
    }
}

pub fn candidates_tsv(c: &Corpus, lang: Language, min_freq: usize, max_len: usize, known: Option<&Terminology>) -> CliResult<String> {
    let mut out = String::from("phrase\tfrequency\n");
    for (phrase, n) in extract_candidate_phrases(c, lang, min_freq, max_len, known)? {
        out.push_str(&format!("{phrase}\t{n}\n"));
    }
    Ok(out)
}

pub fn extract_terms(a: ExtractArgs) -> CliResult {
    let c = corpus(&a.corpus)?;
    let known = a.terms.as_deref().map(|p| terminology(Some(p))).transpose()?;
    let tsv = candidates_tsv(&c, a.lang.into(), a.min_freq, a.max_len, known.as_ref())?;
    emit(a.out.as_deref(), &tsv)
}

pub fn validate_terms(a: ValidateArgs) -> CliResult {
    let entries = read_entries(&a.terms)?;
    let violations = validate_entries(&entries);
    if violations.is_empty() {
        println!("ok: {} entries", entries.len());
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    Err(CliError::data(format!(
        "{}: {} violation(s)",
        a.terms.display(),
        violations.len()
    )))
}

pub fn confusion_tables(zh: Option<&Path>, en: Option<&Path>) -> CliResult<ConfusionTables> {
    let mut tables = ConfusionTables::default();
    if let Some(p) = zh {
        tables.zh = ConfusionTable::load(p)?;
    }
    if let Some(p) = en {
        tables.en = ConfusionTable::load(p)?;
    }
    Ok(tables)
}

pub fn augment(a: AugmentArgs) -> CliResult {
    let mut c = corpus(&a.corpus)?;
    let t = terms(&a.terms)?;
    let mut cfg = match &a.config {
        Some(p) => AugmentConfig::load(p)?,
        None => AugmentConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(k) = a.source_size {
        if k > c.len() {
            return Err(CliError::data(format!("--source-size {k} exceeds corpus size {}", c.len())));
        }
        c.pairs.truncate(k);
    }
    let tables = confusion_tables(a.confusion_zh.as_deref(), a.confusion_en.as_deref())?;
    let out = augment_corpus(&c, &t, &cfg, &tables, a.target_size)?;
    info!("augmented {} -> {} pairs (seed {})", c.len(), out.len(), cfg.seed);
    write_file(&a.out, &out.to_jsonl())
}

fn client_config(a: &LlmArgs) -> CliResult<ClientConfig> {
    let mut layer = ConfigLayer::from_env();
    if let Some(p) = &a.llm_config {
        if !p.exists() {
            return Err(CliError::data(format!("{}: file not found", p.display())));
        }
        layer = layer.overlay(ConfigLayer::from_file(p).map_err(|e| CliError::data(e.to_string()))?);
    }
    let cli = ConfigLayer {
        api_base: a.api_base.clone(),
        model: a.model.clone(),
        temperature: a.temperature,
        timeout_secs: a.timeout,
        max_retries: a.max_retries,
        parallelism: a.parallelism,
        ..ConfigLayer::default()
    };
    Ok(layer.overlay(cli).resolve()?)
}

fn exemplars_for(c: Option<&Corpus>, lang: Language, shots: usize) -> Vec<Exemplar> {
    c.map(|c| {
        c.iter()
            .filter(|p| p.lang == lang)
            .take(shots)
            .map(|p| Exemplar {
                original: p.original.clone(),
                standard: p.standard.clone(),
            })
            .collect()
    })
    .unwrap_or_default()
}

pub fn standardize(a: StandardizeArgs) -> CliResult {
    let c = corpus(&a.input)?;
    let t = terms(&a.terms)?;
    let lines: Vec<String> = match a.engine {
        crate::Engine::Rule => c.iter().map(|p| standardize_text(&p.original, &t)).collect(),
        crate::Engine::Llm => {
            let cfg = client_config(&a.llm)?;
            let shots = a.exemplars.as_deref().map(corpus).transpose()?;
            let template = a.prompt_template.as_deref().map(PromptTemplate::load).transpose()?;
            let client = HttpChatClient::new(cfg.clone())?;
            let engines: Vec<LlmStandardizer<'_, HttpChatClient>> = Language::ALL
                .iter()
                .map(|&lang| {
                    let exemplars = exemplars_for(shots.as_ref(), lang, a.shots);
                    LlmStandardizer {
                        backend: &client,
                        terminology: &t,
                        template: template.clone().unwrap_or_else(|| PromptTemplate::default_for(lang)),
                        mode: if exemplars.is_empty() { ShotMode::Zero } else { ShotMode::Few },
                        exemplars,
                        lang,
                    }
                })
                .collect();
            let results = batch_map(&c.pairs, cfg.parallelism, |p: &ReportPair| {
                let engine = engines.iter().find(|e| e.lang == p.lang).expect("one engine per language");
                engine.standardize(&p.original).map_err(|e| (p.id.clone(), e))
            });
            results
                .into_iter()
                .collect::<Result<_, (String, LlmError)>>()
                .map_err(|(id, e)| CliError::from(e).context(format!("pair {id}")))?
        }
    };
    let mut text = lines.join("\n");
    if !lines.is_empty() {
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)
}

pub fn filter(a: FilterArgs) -> CliResult {
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(CliError::usage(format!("--threshold {} is outside [0, 1]", a.threshold)));
    }
    let c = corpus(&a.corpus)?;
    let t = terms(&a.terms)?;
    let report = filter_pipeline(&c, &t, a.threshold);
    report.write(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    println!("{}", report.summary());
    Ok(())
}

pub fn translate(a: TranslateArgs) -> CliResult {
    let c = corpus(&a.corpus)?;
    let t = terms(&a.terms)?;
    let cfg = client_config(&a.llm)?;
    let client = HttpChatClient::new(cfg.clone())?;
    let zh: Vec<ReportPair> = c.iter().filter(|p| p.lang == Language::Zh).cloned().collect();
    if zh.is_empty() {
        return Err(CliError::data(format!("{}: no zh pairs to translate", a.corpus.display())));
    }
    let mut pairs = Vec::with_capacity(zh.len());
    let mut flag_lines = String::new();
    let mut flagged = 0;
    for (src, r) in zh.iter().zip(translate_pairs(&zh, &client, &t, cfg.parallelism)) {
        let out = r.map_err(|e| CliError::from(e).context(format!("pair {}", src.id)))?;
        if !out.flags.is_empty() {
            flagged += 1;
        }
        flag_lines.push_str(
            &json!({"id": out.pair.id, "source_id": src.id, "repaired": out.repaired, "flags": out.flags})
                .to_string(),
        );
        flag_lines.push('\n');
        pairs.push(out.pair);
    }
    write_file(&a.out, &Corpus::new(pairs)?.to_jsonl())?;
    if let Some(p) = &a.flags {
        write_file(p, &flag_lines)?;
    }
    eprintln!("translated {} pairs, {flagged} flagged", zh.len());
    Ok(())
}

pub fn infer_lang(c: &Corpus, given: Option<Language>, path: &Path) -> CliResult<Language> {
    if let Some(l) = given {
        return Ok(l);
    }
    let first = c
        .iter()
        .next()
        .ok_or_else(|| CliError::data(format!("{}: empty test set", path.display())))?
        .lang;
    if c.iter().any(|p| p.lang != first) {
        return Err(CliError::usage(format!(
            "{} mixes languages; pass --lang",
            path.display()
        )));
    }
    Ok(first)
}

pub fn evaluate(a: EvaluateArgs) -> CliResult {
    let test = corpus(&a.test)?;
    let lang = infer_lang(&test, a.lang.map(Into::into), &a.test)?;
    let mut outputs = Vec::with_capacity(a.hyps.len());
    for (name, path) in &a.hyps {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        outputs.push((name.clone(), parse_hypotheses(&text)));
    }
    let runs = run_evaluation(&test, &outputs, lang)?;
    print!("{}", render_table(&runs, a.format.into()));
    Ok(())
}

pub fn synth(a: SynthArgs) -> CliResult {
    let t = terms(&a.terms)?;
    let langs: Vec<Language> = match a.lang {
        Some(l) => vec![l.into()],
        None => Language::ALL.to_vec(),
    };
    let c = synth_corpus(a.per_lang, a.seed, &t, &langs, &SynthConfig::default());
    write_file(&a.out, &c.to_jsonl())
}

