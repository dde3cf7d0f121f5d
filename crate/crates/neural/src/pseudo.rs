//! Pseudo-sentences presenting a (parent, child) pair to a sentence-pair
//! transformer.

use serde::{Deserialize, Serialize};
use tdp_core::{Document, Mention, MentionId, MentionKind};

use crate::{Error, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const NODE_SEPARATOR: &str = ":";

/// One side of a pair: node words, node label, `:`, containing sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoSentence {
    pub words: Vec<String>,
    pub label: String,
    pub sentence: Vec<String>,
}

impl PseudoSentence {
    pub fn of(doc: &Document, node: &Mention) -> Self {
        let words = match node.kind {
            MentionKind::Root => vec!["root".to_owned()],
            MentionKind::Dct => split(doc.dct_text()),
            _ => split(&node.text),
        };
        let label = match node.kind {
            MentionKind::Event => "EVENT",
            _ => "TIMEX",
        };
        PseudoSentence {
            words,
            label: label.to_owned(),
            sentence: doc.sentence_of(node).to_vec(),
        }
    }

    /// Words, label and separator: the part truncation never touches.
    pub fn head(&self) -> Vec<String> {
        let mut out = self.words.clone();
        out.push(self.label.clone());
        out.push(NODE_SEPARATOR.to_owned());
        out
    }

    pub fn tokens(&self) -> Vec<String> {
        let mut out = self.head();
        out.extend(self.sentence.iter().cloned());
        out
    }
}

fn split(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoSentencePair {
    pub parent_side: PseudoSentence,
    pub child_side: PseudoSentence,
}

impl PseudoSentencePair {
    /// `[CLS]`, parent side, `[SEP]`, child side.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = vec![CLS.to_owned()];
        out.extend(self.parent_side.tokens());
        out.push(SEP.to_owned());
        out.extend(self.child_side.tokens());
        out
    }
}

pub fn build_pseudo_sentence_pair(doc: &Document, parent: &MentionId, child: &MentionId) -> Result<PseudoSentencePair> {
    if parent == child {
        return Err(Error::Config(format!("`{child}` cannot be paired with itself")));
    }
    let parent = doc.node(doc.require(parent)?);
    let child = doc.node(doc.require(child)?);
    Ok(PseudoSentencePair {
        parent_side: PseudoSentence::of(doc, parent),
        child_side: PseudoSentence::of(doc, child),
    })
}

/// Subword ids of a pair after truncation, with segment ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedPair {
    pub ids: Vec<u32>,
    pub type_ids: Vec<u32>,
}

/// Assembles subword pieces into at most `max_len` ids.
///
/// Sentence tails are cut one piece at a time from whichever side
/// currently has the longer sentence (the parent side on ties).
pub(crate) fn assemble(
    cls: u32,
    sep: u32,
    parent: (Vec<u32>, Vec<u32>),
    child: (Vec<u32>, Vec<u32>),
    max_len: usize,
) -> Result<EncodedPair> {
    let (parent_head, mut parent_sentence) = parent;
    let (child_head, mut child_sentence) = child;
    let fixed = 2 + parent_head.len() + child_head.len();
    if fixed > max_len {
        return Err(Error::Config(format!(
            "node words alone need {fixed} subword positions, max_sequence_length is {max_len}"
        )));
    }
    while fixed + parent_sentence.len() + child_sentence.len() > max_len {
        if parent_sentence.len() >= child_sentence.len() {
            parent_sentence.pop();
        } else {
            child_sentence.pop();
        }
    }
    let first = 2 + parent_head.len() + parent_sentence.len();
    let mut ids = Vec::with_capacity(first + child_head.len() + child_sentence.len());
    ids.push(cls);
    ids.extend(parent_head);
    ids.extend(parent_sentence);
    ids.push(sep);
    ids.extend(child_head);
    ids.extend(child_sentence);
    let mut type_ids = vec![0; first];
    type_ids.resize(ids.len(), 1);
    Ok(EncodedPair { ids, type_ids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdp_core::fixtures::example_one;

    fn words(s: &str) -> Vec<String> {
        split(s)
    }

    #[test]
    fn same_sentence_on_both_sides() {
        let (doc, _) = example_one();
        let pair = build_pseudo_sentence_pair(&doc, &"called".into(), &"saying".into()).unwrap();
        assert_eq!(pair.parent_side.sentence, pair.child_side.sentence);
        assert_eq!(pair.parent_side.sentence, doc.sentences()[2]);
    }

    #[test]
    fn root_and_dct() {
        let (doc, _) = example_one();
        let pair = build_pseudo_sentence_pair(&doc, &MentionId::root(), &"feb27".into()).unwrap();
        assert_eq!(pair.parent_side.tokens(), words("root TIMEX :"));
        let pair = build_pseudo_sentence_pair(&doc, &MentionId::dct(), &"share".into()).unwrap();
        assert_eq!(pair.parent_side.tokens(), words("March 1, 1998 TIMEX :"));
        assert!(build_pseudo_sentence_pair(&doc, &"share".into(), &"share".into()).is_err());
    }

    #[test]
    fn truncation_keeps_heads() {
        let out = assemble(100, 101, (vec![1, 2], vec![3, 4, 5, 6]), (vec![7], vec![8, 9]), 9).unwrap();
        assert_eq!(out.ids, vec![100, 1, 2, 3, 4, 101, 7, 8, 9]);
        assert_eq!(out.type_ids, vec![0, 0, 0, 0, 0, 0, 1, 1, 1]);
        let out = assemble(100, 101, (vec![1], vec![3, 4]), (vec![7], vec![8, 9]), 6).unwrap();
        assert_eq!(out.ids, vec![100, 1, 3, 101, 7, 8]);
        assert!(assemble(100, 101, (vec![1, 2], vec![]), (vec![7, 8], vec![]), 5).is_err());
    }
}
