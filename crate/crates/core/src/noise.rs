//! Pseudo-incorrect label injection for NER corpora, keeping IOB2 valid.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Corpus, Labels, Sample, Task};
use crate::error::{Error, Result};
use crate::seed;
use crate::tags::Tag;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionConfig {
    fraction: f64,
    pub seed: u64,
}

impl InjectionConfig {
    /// `fraction` must lie strictly between 0 and 1.
    pub fn new(fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Contract(format!(
                "injection fraction {fraction} outside (0, 1)"
            )));
        }
        Ok(InjectionConfig { fraction, seed })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }
}

#[derive(Debug, Clone)]
pub struct InjectionResult {
    pub corpus: Corpus,
    /// `(sample_id, token_index)` of every label that differs from the input.
    pub changed_positions: BTreeSet<(usize, usize)>,
    pub touched_samples: BTreeSet<usize>,
    pub total_labels: usize,
    /// `ceil(fraction * total_labels)`.
    pub target: usize,
    /// False when positions ran out before the target was met.
    pub budget_reached: bool,
}

impl InjectionResult {
    pub fn changed_labels(&self) -> usize {
        self.changed_positions.len()
    }

    pub fn changed_fraction(&self) -> f64 {
        self.changed_labels() as f64 / self.total_labels as f64
    }
}

struct Flipper<'a> {
    labels: Vec<Vec<String>>,
    original: Vec<Vec<String>>,
    changed: BTreeSet<(usize, usize)>,
    types: &'a [String],
}

impl Flipper<'_> {
    fn set(&mut self, s: usize, t: usize, label: String) {
        if label == self.original[s][t] {
            self.changed.remove(&(s, t));
        } else {
            self.changed.insert((s, t));
        }
        self.labels[s][t] = label;
    }

    /// Relabel `(s, t)` and apply the follow-up repairs that keep the
    /// sentence valid IOB2.
    fn flip(&mut self, s: usize, t: usize, new: String) {
        let old = self.labels[s][t].clone();
        self.set(s, t, new.clone());
        let Some(next) = self.labels[s].get(t + 1).cloned() else {
            return;
        };
        let old_tag = Tag::parse(&old).expect("valid corpus label");
        let new_tag = Tag::parse(&new).expect("generated label");
        let old_type = old_tag.entity_type().map(str::to_string);
        let new_type = new_tag.entity_type().map(str::to_string);
        let next = Tag::parse(&next).expect("valid corpus label");
        match (old_tag, new_tag, next) {
            // O -> B-x followed by B-x: the two fuse into one entity.
            (Tag::Outside, Tag::Begin(x), Tag::Begin(y)) if x == y => {
                self.set(s, t + 1, format!("I-{y}"));
            }
            // B/I-x -> O followed by I-x: the remainder starts afresh.
            (Tag::Begin(_) | Tag::Inside(_), Tag::Outside, Tag::Inside(y)) => {
                self.set(s, t + 1, format!("B-{y}"));
            }
            // B/I-x -> B-y: the continuation follows the new type.
            (Tag::Begin(_) | Tag::Inside(_), Tag::Begin(_), Tag::Inside(_))
                if old_type != new_type =>
            {
                let (x, y) = (old_type.unwrap(), new_type.unwrap());
                let mut i = t + 1;
                while i < self.labels[s].len() && self.labels[s][i] == format!("I-{x}") {
                    self.set(s, i, format!("I-{y}"));
                    i += 1;
                }
            }
            _ => {}
        }
    }

    fn choices(&self, current: &str) -> Vec<String> {
        self.types
            .iter()
            .map(|t| format!("B-{t}"))
            .chain(std::iter::once("O".to_string()))
            .filter(|l| l != current)
            .collect()
    }
}

/// Relabel randomly chosen tokens until at least `ceil(fraction * total)`
/// labels differ from the input. Each position is picked at most once and
/// receives a uniformly chosen `B-x` (x an entity type of the corpus) or
/// `O` different from its current label. Repairs that keep the sentence
/// valid count toward the budget.
pub fn inject(corpus: &Corpus, cfg: &InjectionConfig) -> Result<InjectionResult> {
    if corpus.task() != Task::Ner {
        return Err(Error::Contract(
            "label injection needs an NER corpus".into(),
        ));
    }
    let original: Vec<Vec<String>> = corpus
        .samples()
        .iter()
        .map(|s| s.tags().expect("NER corpus").to_vec())
        .collect();
    let total: usize = original.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Contract("corpus has no labels to corrupt".into()));
    }
    let target = (cfg.fraction * total as f64).ceil() as usize;
    let types: Vec<String> = corpus.entity_types().into_iter().collect();

    let mut positions: Vec<(usize, usize)> = original
        .iter()
        .enumerate()
        .flat_map(|(s, tags)| (0..tags.len()).map(move |t| (s, t)))
        .collect();
    let mut rng = seed::stream(cfg.seed, "inject", 0, 0);
    positions.shuffle(&mut rng);

    let mut f = Flipper {
        labels: original.clone(),
        original,
        changed: BTreeSet::new(),
        types: &types,
    };
    for (s, t) in positions {
        if f.changed.len() >= target {
            break;
        }
        if f.changed.contains(&(s, t)) {
            continue;
        }
        let options = f.choices(&f.labels[s][t]);
        if options.is_empty() {
            continue;
        }
        let new = options[rng.gen_range(0..options.len())].clone();
        f.flip(s, t, new);
    }

    let budget_reached = f.changed.len() >= target;
    let samples = corpus
        .samples()
        .iter()
        .zip(f.labels)
        .map(|(s, tags)| Sample {
            labels: Labels::Tags(tags),
            ..s.clone()
        })
        .collect();
    let touched_samples = f
        .changed
        .iter()
        .map(|&(s, _)| corpus.samples()[s].id)
        .collect();
    Ok(InjectionResult {
        corpus: Corpus::new(samples, Task::Ner)?,
        changed_positions: f.changed,
        touched_samples,
        total_labels: total,
        target,
        budget_reached,
    })
}

/// Header `# changed_labels=<n> total=<m>`, then one touched sample id per
/// line, ascending.
pub fn write_mask<W: Write>(result: &InjectionResult, mut sink: W) -> Result<()> {
    writeln!(
        sink,
        "# changed_labels={} total={}",
        result.changed_labels(),
        result.total_labels
    )?;
    for id in &result.touched_samples {
        writeln!(sink, "{id}")?;
    }
    Ok(())
}

/// Sample ids listed in a mask file. `#` lines are ignored.
pub fn read_mask<R: Read>(mut source: R) -> Result<BTreeSet<usize>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Encoding { offset: 0 },
            _ => Error::Io(e),
        })?;
    let mut ids = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id = line
            .parse()
            .map_err(|_| Error::parse(idx + 1, format!("bad sample id {line:?}")))?;
        ids.insert(id);
    }
    Ok(ids)
}
