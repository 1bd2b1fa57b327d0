//! Labeled corpora: CoNLL-style NER files, `text<TAB>label` classification
//! files, and the weighted outputs written for final-model training.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tags::{iob1_to_iob2, parse_tag, validate_iob2};
use crate::weights::{fraction_to_f64, Fraction, SampleWeight, WeightTable};

pub const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Ner,
    Classification,
}

/// Tagging scheme of an input CoNLL file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Iob1,
    #[default]
    Iob2,
}

/// Gold labels of a sample, or labels predicted for one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Labels {
    /// One tag per word.
    Tags(Vec<String>),
    Class(String),
}

impl Labels {
    pub fn task(&self) -> Task {
        match self {
            Labels::Tags(_) => Task::Ner,
            Labels::Class(_) => Task::Classification,
        }
    }

    pub fn as_tags(&self) -> Option<&[String]> {
        match self {
            Labels::Tags(t) => Some(t),
            Labels::Class(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: usize,
    pub words: Vec<String>,
    pub labels: Labels,
    /// Set when a `-DOCSTART-` marker preceded this sample.
    pub doc_boundary: bool,
}

impl Sample {
    pub fn tags(&self) -> Option<&[String]> {
        self.labels.as_tags()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    samples: Vec<Sample>,
    task: Task,
    label_set: BTreeSet<String>,
}

impl Corpus {
    /// Checks ids, shapes and (for NER) IOB2 validity.
    pub fn new(samples: Vec<Sample>, task: Task) -> Result<Self> {
        let mut label_set = BTreeSet::new();
        for (i, sample) in samples.iter().enumerate() {
            if sample.id != i {
                return Err(Error::Consistency(format!(
                    "sample at position {i} has id {}",
                    sample.id
                )));
            }
            if let Some(w) = sample
                .words
                .iter()
                .find(|w| w.is_empty() || w.chars().any(char::is_whitespace))
            {
                return Err(Error::Format(format!(
                    "sample {i}: word {w:?} is empty or contains whitespace"
                )));
            }
            match (&sample.labels, task) {
                (Labels::Tags(tags), Task::Ner) => {
                    if tags.len() != sample.words.len() {
                        return Err(Error::Shape(format!(
                            "sample {i}: {} words but {} tags",
                            sample.words.len(),
                            tags.len()
                        )));
                    }
                    if let Some(v) = validate_iob2(tags).first() {
                        return Err(Error::Format(format!("sample {i}: {v}")));
                    }
                    label_set.extend(tags.iter().cloned());
                }
                (Labels::Class(c), Task::Classification) => {
                    label_set.insert(c.clone());
                }
                _ => {
                    return Err(Error::Shape(format!(
                        "sample {i}: label kind does not match task {task:?}"
                    )))
                }
            }
        }
        Ok(Corpus {
            samples,
            task,
            label_set,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Entity types seen in `B-x`/`I-x` labels.
    pub fn entity_types(&self) -> BTreeSet<String> {
        self.label_set
            .iter()
            .filter_map(|l| {
                crate::tags::Tag::parse(l)?
                    .entity_type()
                    .map(str::to_string)
            })
            .collect()
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

fn read_utf8<R: Read>(mut source: R) -> Result<String> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    String::from_utf8(bytes).map_err(|e| Error::Encoding {
        offset: e.utf8_error().valid_up_to(),
    })
}

/// Read a CoNLL file: whitespace-separated columns, word first, tag last,
/// blank lines between sentences. `-DOCSTART-` lines mark the next sample
/// as a document start and are not samples themselves.
pub fn read_conll<R: Read>(source: R, scheme: Scheme) -> Result<Corpus> {
    let text = read_utf8(source)?;
    let mut samples = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut first_line = 0;
    let mut pending_doc = false;

    let mut flush = |words: &mut Vec<String>,
                     tags: &mut Vec<String>,
                     first_line: usize,
                     pending_doc: &mut bool|
     -> Result<()> {
        if words.is_empty() {
            return Ok(());
        }
        let labels = match scheme {
            Scheme::Iob1 => iob1_to_iob2(tags)?,
            Scheme::Iob2 => std::mem::take(tags),
        };
        if let Some(v) = validate_iob2(&labels).first() {
            return Err(Error::Format(format!(
                "sentence starting at line {first_line}: {v}"
            )));
        }
        samples.push(Sample {
            id: samples.len(),
            words: std::mem::take(words),
            labels: Labels::Tags(labels),
            doc_boundary: std::mem::take(pending_doc),
        });
        tags.clear();
        Ok(())
    };

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut cols = line.split_whitespace();
        let Some(word) = cols.next() else {
            flush(&mut words, &mut tags, first_line, &mut pending_doc)?;
            continue;
        };
        if word == DOCSTART {
            flush(&mut words, &mut tags, first_line, &mut pending_doc)?;
            pending_doc = true;
            continue;
        }
        let Some(tag) = cols.last() else {
            return Err(Error::parse(line_no, "expected at least two columns"));
        };
        parse_tag(tag)
            .map_err(|_| Error::Format(format!("line {line_no}: invalid tag {tag:?}")))?;
        if words.is_empty() {
            first_line = line_no;
        }
        words.push(word.to_string());
        tags.push(tag.to_string());
    }
    flush(&mut words, &mut tags, first_line, &mut pending_doc)?;
    Corpus::new(samples, Task::Ner)
}

/// Write an NER corpus as two-column CoNLL.
pub fn write_conll<W: Write>(corpus: &Corpus, mut sink: W) -> Result<()> {
    for sample in corpus.samples() {
        write_conll_sample(sample, &mut sink)?;
    }
    Ok(())
}

fn write_conll_sample<W: Write>(sample: &Sample, sink: &mut W) -> Result<()> {
    let tags = sample
        .tags()
        .ok_or_else(|| Error::Shape(format!("sample {} has no tag sequence", sample.id)))?;
    if sample.doc_boundary {
        writeln!(sink, "{DOCSTART} -X- -X- O\n")?;
    }
    for (word, tag) in sample.words.iter().zip(tags) {
        writeln!(sink, "{word} {tag}")?;
    }
    writeln!(sink)?;
    Ok(())
}

/// Read `text<TAB>label` lines; the text is split on whitespace. Blank lines
/// are skipped.
pub fn read_classification_tsv<R: Read>(source: R) -> Result<Corpus> {
    let text = read_utf8(source)?;
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (body, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| Error::parse(line_no, "missing TAB between text and label"))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::parse(line_no, "empty label"));
        }
        let words: Vec<String> = body.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return Err(Error::parse(line_no, "empty text"));
        }
        samples.push(Sample {
            id: samples.len(),
            words,
            labels: Labels::Class(label.to_string()),
            doc_boundary: false,
        });
    }
    Corpus::new(samples, Task::Classification)
}

pub fn write_classification_tsv<W: Write>(corpus: &Corpus, mut sink: W) -> Result<()> {
    for sample in corpus.samples() {
        write_tsv_sample(sample, &mut sink)?;
    }
    Ok(())
}

fn write_tsv_sample<W: Write>(sample: &Sample, sink: &mut W) -> Result<()> {
    match &sample.labels {
        Labels::Class(label) => {
            writeln!(sink, "{}\t{label}", sample.words.join(" "))?;
            Ok(())
        }
        Labels::Tags(_) => Err(Error::Shape(format!(
            "sample {} has a tag sequence, not a class label",
            sample.id
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightFormat {
    /// `id<TAB>weight<TAB>agreement_count<TAB>k_effective` per sample.
    Sidecar,
    /// The corpus in its own format, each sample preceded by `# weight=<w>`.
    Inline,
}

pub fn format_weight(weight: Fraction) -> String {
    format!("{:.6}", fraction_to_f64(weight))
}

pub fn write_weighted<W: Write>(
    corpus: &Corpus,
    weights: &WeightTable,
    mut sink: W,
    format: WeightFormat,
) -> Result<()> {
    let mut rows = Vec::with_capacity(corpus.len());
    for sample in corpus.samples() {
        let w = weights
            .get(sample.id)
            .ok_or_else(|| Error::Consistency(format!("no weight for sample {}", sample.id)))?;
        rows.push((sample, w));
    }
    if weights.len() != corpus.len() {
        return Err(Error::Consistency(format!(
            "weight table has {} entries for {} samples",
            weights.len(),
            corpus.len()
        )));
    }
    for (sample, w) in rows {
        match format {
            WeightFormat::Sidecar => writeln!(
                sink,
                "{}\t{}\t{}\t{}",
                sample.id,
                format_weight(w.weight),
                w.agreement_count,
                w.k_effective
            )?,
            WeightFormat::Inline => match corpus.task() {
                Task::Ner => {
                    // The boundary marker stays ahead of the weight comment.
                    if sample.doc_boundary {
                        writeln!(sink, "{DOCSTART} -X- -X- O\n")?;
                    }
                    writeln!(sink, "# weight={}", format_weight(w.weight))?;
                    let plain = Sample {
                        doc_boundary: false,
                        ..sample.clone()
                    };
                    write_conll_sample(&plain, &mut sink)?;
                }
                Task::Classification => {
                    writeln!(sink, "# weight={}", format_weight(w.weight))?;
                    write_tsv_sample(sample, &mut sink)?;
                }
            },
        }
    }
    Ok(())
}

/// Read a sidecar weight file back into a table.
pub fn read_sidecar<R: Read>(source: R) -> Result<WeightTable> {
    let text = read_utf8(source)?;
    let mut table = WeightTable::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(line_no, "expected 4 TAB-separated columns"));
        }
        let field = |i: usize, what: &str| -> Result<usize> {
            cols[i]
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad {what} {:?}", cols[i])))
        };
        let id = field(0, "sample id")?;
        let agreement_count = field(2, "agreement count")?;
        let k_effective = field(3, "k_effective")?;
        let weight = crate::weights::parse_fraction(cols[1])
            .ok_or_else(|| Error::parse(line_no, format!("bad weight {:?}", cols[1])))?;
        if k_effective == 0 || agreement_count > k_effective {
            return Err(Error::parse(
                line_no,
                format!("agreement count {agreement_count} out of range for k={k_effective}"),
            ));
        }
        table
            .insert(
                id,
                SampleWeight {
                    weight,
                    agreement_count,
                    k_effective,
                },
            )
            .map_err(|_| Error::parse(line_no, format!("duplicate sample id {id}")))?;
    }
    Ok(table)
}
