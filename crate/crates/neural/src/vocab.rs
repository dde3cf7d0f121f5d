//! Word vocabularies and word-vector files.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tdp_core::Document;

use crate::{Error, Result};

pub const UNK: &str = "<unk>";

/// Lower-cased word types, `<unk>` first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocabulary { words, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

impl Vocabulary {
    /// Every word of `docs` plus the DCT strings, sorted.
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut words: Vec<String> = docs
            .into_iter()
            .flat_map(|d| {
                d.sentences()
                    .iter()
                    .flatten()
                    .map(String::as_str)
                    .chain(d.dct_text().split_whitespace())
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .collect();
        words.sort();
        words.dedup();
        words.retain(|w| w != UNK);
        words.insert(0, UNK.to_owned());
        words.into()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Id of the lower-cased word, `<unk>` when absent.
    pub fn id(&self, word: &str) -> u32 {
        self.index.get(&word.to_lowercase()).copied().unwrap_or(0)
    }
}

/// Reads vectors in the whitespace-separated text format (`word v1 v2 ...`,
/// one word per line), keeping only words accepted by `keep`.
///
/// An optional first line holding just `count dim` is skipped. Every vector
/// must have the same dimension.
pub fn load_word_vectors(
    path: impl AsRef<Path>,
    mut keep: impl FnMut(&str) -> bool,
) -> Result<(usize, HashMap<String, Vec<f32>>)> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut dim = None;
    let mut vectors = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() {
            continue;
        }
        let bad = |reason: String| Error::Config(format!("{} line {}: {reason}", path.display(), i + 1));
        match dim {
            None => dim = Some(rest.len()),
            Some(d) if d != rest.len() => return Err(bad(format!("expected {d} values, found {}", rest.len()))),
            _ => {}
        }
        if !keep(word) {
            continue;
        }
        let values = rest
            .iter()
            .map(|v| v.parse::<f32>().map_err(|e| bad(format!("`{v}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        vectors.insert(word.to_owned(), values);
    }
    let dim = dim.filter(|&d| d > 0).ok_or_else(|| Error::Config(format!("{} holds no vectors", path.display())))?;
    Ok((dim, vectors))
}
