//! Scout predictions over selected candidates, agreement counting, and
//! per-sample weights.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::{Corpus, Labels, Sample, Task};
use crate::error::{Error, Result};
use crate::selector::{self, SelectionConfig, Strategy};
use crate::tags::repair_iob2;
use crate::tokenizer::{
    sample_candidates, tokenize_deterministic, Candidate, RegularizationConfig, Vocab,
};
use crate::weights::{fraction_to_f64, Fraction, MinWeight, SampleWeight, WeightTable};

/// A scouting model: maps one tokenization candidate to labels.
pub trait Predictor: Sync {
    fn task(&self) -> Task;

    /// Labels for `candidate`. NER predictions carry one tag per word.
    fn predict(&self, candidate: &Candidate) -> Result<Labels>;
}

/// First-subword lookup table trained on deterministic tokenizations.
#[derive(Debug, Clone)]
pub struct DictionaryPredictor {
    table: FxHashMap<String, String>,
}

impl DictionaryPredictor {
    /// Each first subword maps to its most frequent gold tag; ties go to the
    /// lexicographically smallest tag.
    pub fn train(corpus: &Corpus, vocab: &Vocab) -> Result<Self> {
        if corpus.task() != Task::Ner {
            return Err(Error::Training(
                "dictionary predictor needs an NER corpus".into(),
            ));
        }
        if corpus.is_empty() {
            return Err(Error::Training("empty training corpus".into()));
        }
        let mut counts: FxHashMap<String, BTreeMap<&str, usize>> = FxHashMap::default();
        for sample in corpus.samples() {
            let tags = sample.tags().expect("NER corpus");
            let cand =
                tokenize_deterministic(&sample.words, vocab).map_err(|e| e.in_sample(sample.id))?;
            for (first, tag) in cand.first_subwords().zip(tags) {
                *counts
                    .entry(first.to_string())
                    .or_default()
                    .entry(tag.as_str())
                    .or_insert(0) += 1;
            }
        }
        let table = counts
            .into_iter()
            .map(|(subword, tags)| {
                let mut best: (&str, usize) = ("", 0);
                for (tag, n) in tags {
                    if n > best.1 {
                        best = (tag, n);
                    }
                }
                (subword, best.0.to_string())
            })
            .collect();
        Ok(DictionaryPredictor { table })
    }

    pub fn lookup(&self, subword: &str) -> Option<&str> {
        self.table.get(subword).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Predictor for DictionaryPredictor {
    fn task(&self) -> Task {
        Task::Ner
    }

    /// Unseen first subwords predict `O`; the sequence is then repaired to
    /// valid IOB2.
    fn predict(&self, candidate: &Candidate) -> Result<Labels> {
        let mut tags: Vec<String> = candidate
            .first_subwords()
            .map(|s| self.lookup(s).unwrap_or("O").to_string())
            .collect();
        repair_iob2(&mut tags);
        Ok(Labels::Tags(tags))
    }
}

/// Multinomial naive Bayes over subword counts with add-one smoothing.
#[derive(Debug, Clone)]
pub struct NaiveBayes {
    /// Sorted by class name.
    classes: Vec<NbClass>,
    vocab_size: usize,
}

#[derive(Debug, Clone)]
struct NbClass {
    label: String,
    log_prior: f64,
    counts: FxHashMap<String, u64>,
    total: u64,
}

impl NaiveBayes {
    pub fn train(corpus: &Corpus, vocab: &Vocab) -> Result<Self> {
        if corpus.task() != Task::Classification {
            return Err(Error::Training(
                "naive Bayes needs a classification corpus".into(),
            ));
        }
        let mut per_class: BTreeMap<String, (usize, FxHashMap<String, u64>)> = BTreeMap::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for sample in corpus.samples() {
            let Labels::Class(label) = &sample.labels else {
                unreachable!("classification corpus")
            };
            let cand =
                tokenize_deterministic(&sample.words, vocab).map_err(|e| e.in_sample(sample.id))?;
            let entry = per_class.entry(label.clone()).or_default();
            entry.0 += 1;
            for s in cand.subwords {
                seen.insert(s.clone());
                *entry.1.entry(s).or_insert(0) += 1;
            }
        }
        if per_class.len() < 2 {
            return Err(Error::Training(format!(
                "naive Bayes needs at least 2 classes, found {}",
                per_class.len()
            )));
        }
        let docs = corpus.len() as f64;
        let classes = per_class
            .into_iter()
            .map(|(label, (n, counts))| NbClass {
                label,
                log_prior: (n as f64 / docs).ln(),
                total: counts.values().sum(),
                counts,
            })
            .collect();
        Ok(NaiveBayes {
            classes,
            vocab_size: seen.len(),
        })
    }

    /// Unnormalized log posterior of every class, in class-name order.
    pub fn log_scores(&self, subwords: &[String]) -> Vec<(&str, f64)> {
        let v = self.vocab_size as f64;
        self.classes
            .iter()
            .map(|c| {
                let denom = (c.total as f64 + v).ln();
                let ll: f64 = subwords
                    .iter()
                    .map(|s| (*c.counts.get(s).unwrap_or(&0) as f64 + 1.0).ln() - denom)
                    .sum();
                (c.label.as_str(), c.log_prior + ll)
            })
            .collect()
    }

    pub fn classify(&self, subwords: &[String]) -> &str {
        let mut best: Option<(&str, f64)> = None;
        for (label, score) in self.log_scores(subwords) {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((label, score));
            }
        }
        best.expect("at least two classes").0
    }
}

impl Predictor for NaiveBayes {
    fn task(&self) -> Task {
        Task::Classification
    }

    fn predict(&self, candidate: &Candidate) -> Result<Labels> {
        Ok(Labels::Class(
            self.classify(&candidate.subwords).to_string(),
        ))
    }
}

/// Predictions supplied by an outside model, keyed by
/// `(sample_id, candidate_index)`.
#[derive(Debug, Clone)]
pub struct ExternalPredictions {
    task: Task,
    table: HashMap<(usize, usize), Labels>,
}

impl ExternalPredictions {
    /// Lines are `sample_id<TAB>candidate_index<TAB>prediction`, the
    /// prediction being space-joined tags (NER) or one class label.
    pub fn read<R: Read>(mut source: R, task: Task) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Encoding {
            offset: e.utf8_error().valid_up_to(),
        })?;
        let mut table = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(id), Some(ci), Some(pred)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(line_no, "expected 3 TAB-separated columns"));
            };
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad sample id {id:?}")))?;
            let ci: usize = ci
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad candidate index {ci:?}")))?;
            let labels = match task {
                Task::Ner => Labels::Tags(pred.split_whitespace().map(str::to_string).collect()),
                Task::Classification => Labels::Class(pred.trim().to_string()),
            };
            if table.insert((id, ci), labels).is_some() {
                return Err(Error::Format(format!(
                    "line {line_no}: duplicate prediction for sample {id} candidate {ci}"
                )));
            }
        }
        Ok(ExternalPredictions { task, table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Predictor for ExternalPredictions {
    fn task(&self) -> Task {
        self.task
    }

    fn predict(&self, candidate: &Candidate) -> Result<Labels> {
        self.table
            .get(&(candidate.sample_id, candidate.candidate_index))
            .cloned()
            .ok_or(Error::MissingPrediction {
                sample_id: candidate.sample_id,
                candidate_index: candidate.candidate_index,
            })
    }
}

/// Whole-sample equality: one differing tag means disagreement.
pub fn agreement(prediction: &Labels, gold: &Labels) -> Result<bool> {
    match (prediction, gold) {
        (Labels::Tags(p), Labels::Tags(g)) if p.len() != g.len() => Err(Error::Shape(format!(
            "prediction has {} tags for {} words",
            p.len(),
            g.len()
        ))),
        (Labels::Tags(p), Labels::Tags(g)) => Ok(p == g),
        (Labels::Class(p), Labels::Class(g)) => Ok(p == g),
        _ => Err(Error::Shape(
            "prediction and gold label kinds differ".into(),
        )),
    }
}

/// `max(w_min, C / k)` over `k = agreements.len()` scored candidates.
pub fn weigh_sample(agreements: &[bool], w_min: MinWeight) -> Result<SampleWeight> {
    if agreements.is_empty() {
        return Err(Error::Contract("no agreements to weigh".into()));
    }
    let c = agreements.iter().filter(|&&a| a).count();
    let k = agreements.len();
    let ratio = Fraction::new(c as u64, k as u64);
    Ok(SampleWeight {
        weight: ratio.max(w_min.value()),
        agreement_count: c,
        k_effective: k,
    })
}

/// Per-sample loss scaled by its weight.
pub fn weighted_loss(weight: f64, loss: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&weight) && loss >= 0.0);
    weight * loss
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeighConfig {
    pub k: usize,
    pub n: usize,
    pub p: f64,
    pub w_min: MinWeight,
    pub seed: u64,
    pub strategy: Strategy,
    pub kmeans_max_iters: usize,
    /// Fan samples out over the rayon pool. Output does not depend on it.
    pub parallel: bool,
}

impl Default for WeighConfig {
    fn default() -> Self {
        WeighConfig {
            k: 10,
            n: 500,
            p: 0.1,
            w_min: MinWeight::default(),
            seed: 0,
            strategy: Strategy::KMeans,
            kmeans_max_iters: 100,
            parallel: false,
        }
    }
}

impl WeighConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::Contract(format!(
                "need 1 <= K <= N, got K={} N={}",
                self.k, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Contract(format!(
                "dropout probability {} outside [0, 1]",
                self.p
            )));
        }
        if self.kmeans_max_iters == 0 {
            return Err(Error::Contract(
                "kmeans_max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            strategy: self.strategy,
            k: self.k,
            kmeans_max_iters: self.kmeans_max_iters,
            seed: self.seed,
        }
    }

    fn regularization(&self, vocab: &Vocab) -> RegularizationConfig {
        RegularizationConfig {
            p: self.p,
            seed: self.seed,
            scheme: vocab.scheme(),
        }
    }
}

/// Time spent per pipeline stage, summed over samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub sampling: Duration,
    pub selection: Duration,
    pub prediction: Duration,
    pub wall: Duration,
}

impl std::ops::AddAssign for StageTimings {
    fn add_assign(&mut self, rhs: Self) {
        self.sampling += rhs.sampling;
        self.selection += rhs.selection;
        self.prediction += rhs.prediction;
    }
}

fn select_timed(
    sample: &Sample,
    vocab: &Vocab,
    cfg: &WeighConfig,
    timings: &mut StageTimings,
) -> Result<Vec<Candidate>> {
    let t0 = Instant::now();
    let anchor = tokenize_deterministic(&sample.words, vocab)?;
    if sample.words.is_empty() {
        timings.sampling += t0.elapsed();
        return Ok(vec![Candidate {
            sample_id: sample.id,
            ..anchor
        }]);
    }
    let pool = sample_candidates(
        &sample.words,
        vocab,
        &cfg.regularization(vocab),
        cfg.n,
        sample.id,
    )?;
    let t1 = Instant::now();
    timings.sampling += t1 - t0;
    let picked = selector::select(&pool, &anchor, &cfg.selection())?;
    timings.selection += t1.elapsed();
    Ok(picked)
}

/// The K candidates scored for `sample`: N stochastic draws reduced by the
/// configured strategy. Depends only on the sample, vocabulary and config.
pub fn selected_candidates(
    sample: &Sample,
    vocab: &Vocab,
    cfg: &WeighConfig,
) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    select_timed(sample, vocab, cfg, &mut StageTimings::default())
        .map_err(|e| e.in_sample(sample.id))
}

fn weigh_one(
    sample: &Sample,
    vocab: &Vocab,
    predictor: &dyn Predictor,
    cfg: &WeighConfig,
) -> Result<(SampleWeight, StageTimings)> {
    let mut timings = StageTimings::default();
    let picked = select_timed(sample, vocab, cfg, &mut timings)?;
    let t = Instant::now();
    let agreements = picked
        .iter()
        .map(|c| agreement(&predictor.predict(c)?, &sample.labels))
        .collect::<Result<Vec<bool>>>()?;
    timings.prediction += t.elapsed();
    Ok((weigh_sample(&agreements, cfg.w_min)?, timings))
}

#[derive(Debug, Clone)]
pub struct WeighOutcome {
    pub table: WeightTable,
    pub timings: StageTimings,
}

/// Weigh every sample of `corpus`. Results are identical whether or not
/// `cfg.parallel` is set.
pub fn weigh_corpus(
    corpus: &Corpus,
    vocab: &Vocab,
    predictor: &dyn Predictor,
    cfg: &WeighConfig,
) -> Result<WeighOutcome> {
    cfg.validate()?;
    if predictor.task() != corpus.task() {
        return Err(Error::Contract(format!(
            "predictor for {:?} applied to a {:?} corpus",
            predictor.task(),
            corpus.task()
        )));
    }
    let start = Instant::now();
    let run = |s: &Sample| weigh_one(s, vocab, predictor, cfg).map_err(|e| e.in_sample(s.id));
    let results: Vec<Result<(SampleWeight, StageTimings)>> = if cfg.parallel {
        corpus.samples().par_iter().map(run).collect()
    } else {
        corpus.samples().iter().map(run).collect()
    };
    let mut table = WeightTable::new();
    let mut timings = StageTimings::default();
    for (sample, result) in corpus.samples().iter().zip(results) {
        let (weight, t) = result?;
        table.insert(sample.id, weight)?;
        timings += t;
    }
    timings.wall = start.elapsed();
    Ok(WeighOutcome { table, timings })
}

/// Count of samples at each distinct weight, ascending.
pub fn weight_histogram(table: &WeightTable) -> BTreeMap<Fraction, usize> {
    let mut hist = BTreeMap::new();
    for (_, w) in table.iter() {
        *hist.entry(w.weight).or_insert(0) += 1;
    }
    hist
}

/// Mean raw agreement ratio of clean and corrupted samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightReport {
    pub clean_count: usize,
    pub corrupted_count: usize,
    /// `None` when there are no clean samples.
    pub mean_clean: Option<f64>,
    /// `None` when there are no corrupted samples.
    pub mean_corrupted: Option<f64>,
}

impl WeightReport {
    /// `mean_clean / mean_corrupted`; infinite when the corrupted mean is 0.
    pub fn ratio(&self) -> Option<f64> {
        match (self.mean_clean, self.mean_corrupted) {
            (Some(c), Some(0.0)) => Some(if c == 0.0 { f64::NAN } else { f64::INFINITY }),
            (Some(c), Some(i)) => Some(c / i),
            _ => None,
        }
    }
}

fn fmt_stat(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) if x.is_nan() => "nan".into(),
        Some(x) => format!("{x:.4}"),
        None => "nan".into(),
    }
}

impl fmt::Display for WeightReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples={}", self.clean_count + self.corrupted_count)?;
        writeln!(f, "clean={}", self.clean_count)?;
        writeln!(f, "corrupted={}", self.corrupted_count)?;
        writeln!(f, "w_cor={}", fmt_stat(self.mean_clean))?;
        writeln!(f, "w_incor={}", fmt_stat(self.mean_corrupted))?;
        writeln!(f, "ratio={}", fmt_stat(self.ratio()))
    }
}

/// Split `table` by `corrupted` ids and average `C / k_effective` on each
/// side. Every masked id must be in the table.
pub fn weight_report(table: &WeightTable, corrupted: &BTreeSet<usize>) -> Result<WeightReport> {
    if let Some(id) = corrupted.iter().find(|&&id| !table.contains(id)) {
        return Err(Error::Consistency(format!(
            "masked sample {id} has no weight"
        )));
    }
    let (mut clean, mut dirty) = ((0usize, 0.0f64), (0usize, 0.0f64));
    for (id, w) in table.iter() {
        let side = if corrupted.contains(&id) {
            &mut dirty
        } else {
            &mut clean
        };
        side.0 += 1;
        side.1 += fraction_to_f64(w.raw_ratio());
    }
    let mean = |(n, sum): (usize, f64)| (n > 0).then(|| sum / n as f64);
    Ok(WeightReport {
        clean_count: clean.0,
        corrupted_count: dirty.0,
        mean_clean: mean(clean),
        mean_corrupted: mean(dirty),
    })
}

/// One line per candidate: `sample_id<TAB>candidate_index<TAB>subwords`.
pub fn write_candidates<'a, W: Write>(
    candidates: impl IntoIterator<Item = &'a Candidate>,
    mut sink: W,
) -> Result<()> {
    for c in candidates {
        writeln!(
            sink,
            "{}\t{}\t{}",
            c.sample_id,
            c.candidate_index,
            c.joined()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_classification_tsv;
    use crate::tokenizer::{BpeVocab, WordPieceVocab};

    fn s(list: &[&str]) -> Vec<String> {
        list.iter().map(|w| w.to_string()).collect()
    }

    fn ner_corpus(rows: &[(&[&str], &[&str])]) -> Corpus {
        let samples = rows
            .iter()
            .enumerate()
            .map(|(id, (w, t))| Sample {
                id,
                words: s(w),
                labels: Labels::Tags(s(t)),
                doc_boundary: false,
            })
            .collect();
        Corpus::new(samples, Task::Ner).unwrap()
    }

    fn char_vocab() -> Vocab {
        // "EU" is one token deterministically but can split into E + U.
        Vocab::Bpe(BpeVocab::new(&[("E".into(), "U".into())], None, None).unwrap())
    }

    fn cand(subwords: &[&str], starts: &[usize]) -> Candidate {
        Candidate {
            subwords: s(subwords),
            word_starts: starts.to_vec(),
            sample_id: 0,
            candidate_index: 0,
        }
    }

    #[test]
    fn dictionary_majority_and_unseen() {
        let corpus = ner_corpus(&[(&["EU", "U"], &["B-ORG", "O"]), (&["EU"], &["B-ORG"])]);
        let p = DictionaryPredictor::train(&corpus, &char_vocab()).unwrap();
        let whole = cand(&["EU", "U"], &[0, 1]);
        assert_eq!(p.predict(&whole).unwrap(), Labels::Tags(s(&["B-ORG", "O"])));
        let split = cand(&["E", "U", "U"], &[0, 2]);
        assert_eq!(p.predict(&split).unwrap(), Labels::Tags(s(&["O", "O"])));
    }

    #[test]
    fn dictionary_ties_and_counts() {
        let corpus = ner_corpus(&[
            (&["EU"], &["B-PER"]),
            (&["EU"], &["B-PER"]),
            (&["EU"], &["B-LOC"]),
            (&["U"], &["B-PER"]),
            (&["U"], &["B-LOC"]),
        ]);
        let p = DictionaryPredictor::train(&corpus, &char_vocab()).unwrap();
        assert_eq!(p.lookup("EU"), Some("B-PER"));
        assert_eq!(p.lookup("U"), Some("B-LOC"));
    }

    #[test]
    fn dictionary_repairs_orphan_inside() {
        let corpus = ner_corpus(&[(&["E", "U"], &["B-ORG", "I-ORG"])]);
        let p = DictionaryPredictor::train(&corpus, &char_vocab()).unwrap();
        let c = cand(&["X", "U"], &[0, 1]);
        assert_eq!(p.predict(&c).unwrap(), Labels::Tags(s(&["O", "B-ORG"])));
        let empty = Corpus::new(vec![], Task::Ner).unwrap();
        assert!(matches!(
            DictionaryPredictor::train(&empty, &char_vocab()),
            Err(Error::Training(_))
        ));
    }

    fn wp_vocab() -> Vocab {
        Vocab::WordPiece(
            WordPieceVocab::new(["good", "bad", "fine", "movie", "plot"], "##", "[UNK]").unwrap(),
        )
    }

    #[test]
    fn naive_bayes_separable_and_prior() {
        let corpus = read_classification_tsv("good\t1\nbad\t0\nfine\t1\n".as_bytes()).unwrap();
        let nb = NaiveBayes::train(&corpus, &wp_vocab()).unwrap();
        assert_eq!(nb.classify(&s(&["good"])), "1");
        assert_eq!(nb.classify(&s(&["bad"])), "0");
        // Unseen subwords leave the prior to decide.
        assert_eq!(nb.classify(&s(&["[UNK]"])), "1");
    }

    #[test]
    fn naive_bayes_hand_posterior() {
        // Docs: "good movie"->1, "good plot"->1, "bad movie"->0. |V| = 4.
        let corpus =
            read_classification_tsv("good movie\t1\ngood plot\t1\nbad movie\t0\n".as_bytes())
                .unwrap();
        let nb = NaiveBayes::train(&corpus, &wp_vocab()).unwrap();
        let scores = nb.log_scores(&s(&["bad", "plot"]));
        // Class 0: prior 1/3, total 2; bad 1, plot 0.
        let c0 = (1.0f64 / 3.0).ln() + (2.0f64 / 6.0).ln() + (1.0f64 / 6.0).ln();
        // Class 1: prior 2/3, total 4; bad 0, plot 1.
        let c1 = (2.0f64 / 3.0).ln() + (1.0f64 / 8.0).ln() + (2.0f64 / 8.0).ln();
        assert_eq!(scores[0].0, "0");
        assert!((scores[0].1 - c0).abs() < 1e-12);
        assert!((scores[1].1 - c1).abs() < 1e-12);
        assert_eq!(
            nb.classify(&s(&["bad", "plot"])),
            if c0 > c1 { "0" } else { "1" }
        );
    }

    #[test]
    fn naive_bayes_needs_two_classes() {
        let corpus = read_classification_tsv("good\t1\nfine\t1\n".as_bytes()).unwrap();
        assert!(matches!(
            NaiveBayes::train(&corpus, &wp_vocab()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn external_table() {
        let ext = ExternalPredictions::read("0\t2\tB-ORG O\n".as_bytes(), Task::Ner).unwrap();
        let mut c = cand(&["a", "b"], &[0, 1]);
        c.candidate_index = 2;
        assert_eq!(ext.predict(&c).unwrap(), Labels::Tags(s(&["B-ORG", "O"])));
        c.candidate_index = 3;
        let err = ext.predict(&c).unwrap_err();
        assert!(matches!(
            err,
            Error::MissingPrediction {
                sample_id: 0,
                candidate_index: 3
            }
        ));
        let dup = ExternalPredictions::read("0\t2\tO\n0\t2\tO\n".as_bytes(), Task::Ner);
        assert!(matches!(dup, Err(Error::Format(m)) if m.contains("line 2")));
    }

    #[test]
    fn agreement_is_whole_sequence() {
        let t = |x: &[&str]| Labels::Tags(s(x));
        assert!(agreement(&t(&["B-ORG", "O"]), &t(&["B-ORG", "O"])).unwrap());
        assert!(!agreement(&t(&["B-ORG", "O"]), &t(&["B-ORG", "I-ORG"])).unwrap());
        assert!(agreement(&Labels::Class("1".into()), &Labels::Class("1".into())).unwrap());
        assert!(matches!(
            agreement(&t(&["O"]), &t(&["O", "O"])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn weigh_sample_examples() {
        let third = MinWeight::default();
        let w = weigh_sample(&[true, true, true], third).unwrap();
        assert_eq!(w.weight, Fraction::from_integer(1));
        let w = weigh_sample(&[false; 10], third).unwrap();
        assert_eq!(w.weight, Fraction::new(1, 3));
        assert_eq!(w.raw_ratio(), Fraction::from_integer(0));
        let mut seven = vec![true; 7];
        seven.extend([false; 3]);
        let w = weigh_sample(&seven, third).unwrap();
        assert_eq!(
            (w.weight, w.agreement_count, w.k_effective),
            (Fraction::new(7, 10), 7, 10)
        );
        assert!(weigh_sample(&[], third).is_err());
    }

    #[test]
    fn weighted_loss_examples() {
        assert_eq!(weighted_loss(1.0, 2.5), 2.5);
        assert_eq!(weighted_loss(0.0, 2.5), 0.0);
        assert!((weighted_loss(1.0 / 3.0, 3.0) - 1.0).abs() < 1e-15);
    }

    fn table(rows: &[(usize, usize)]) -> WeightTable {
        let mut t = WeightTable::new();
        for (id, &(c, k)) in rows.iter().enumerate() {
            let agreements: Vec<bool> = (0..k).map(|i| i < c).collect();
            t.insert(id, weigh_sample(&agreements, MinWeight::default()).unwrap())
                .unwrap();
        }
        t
    }

    #[test]
    fn report_partitions() {
        let t = table(&[(3, 3), (3, 3)]);
        let r = weight_report(&t, &BTreeSet::new()).unwrap();
        assert_eq!(r.mean_clean, Some(1.0));
        assert_eq!(r.mean_corrupted, None);
        assert!(r.to_string().contains("w_incor=nan\n"));

        let t = table(&[(0, 10), (10, 10)]);
        let r = weight_report(&t, &BTreeSet::from([0])).unwrap();
        assert_eq!((r.mean_clean, r.mean_corrupted), (Some(1.0), Some(0.0)));
        assert_eq!(r.ratio(), Some(f64::INFINITY));
        assert!(r.to_string().ends_with("ratio=inf\n"));

        assert!(weight_report(&t, &BTreeSet::from([7])).is_err());
    }

    #[test]
    fn weigh_corpus_single_char_words() {
        let corpus = ner_corpus(&[(&["E", "U"], &["B-ORG", "O"]), (&["U"], &["O"])]);
        let vocab = char_vocab();
        let p = DictionaryPredictor::train(&corpus, &vocab).unwrap();
        let cfg = WeighConfig {
            n: 20,
            ..WeighConfig::default()
        };
        let out = weigh_corpus(&corpus, &vocab, &p, &cfg).unwrap();
        for (_, w) in out.table.iter() {
            assert_eq!((w.k_effective, w.agreement_count), (1, 1));
        }
    }

    #[test]
    fn weigh_corpus_propagates_missing_prediction() {
        let corpus = ner_corpus(&[(&["EU"], &["B-ORG"])]);
        let ext = ExternalPredictions::read("".as_bytes(), Task::Ner).unwrap();
        let cfg = WeighConfig {
            n: 20,
            ..WeighConfig::default()
        };
        let err = weigh_corpus(&corpus, &char_vocab(), &ext, &cfg).unwrap_err();
        assert!(matches!(err, Error::Sample { sample_id: 0, .. }), "{err}");
    }
}
