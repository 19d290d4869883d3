//! Tokenization, frequency vocabularies, and per-node token-id sequences.
//!
//! Attribute text is lowercased and split on Unicode whitespace, with
//! punctuation stripped from token edges so "BPA-Free 4oz!" keeps its
//! interior hyphen. The vocabulary keeps the `max_size` most frequent
//! tokens (ties broken lexicographically) and reserves id 0 for UNK, which
//! also stands in for empty or missing attribute text so every node has at
//! least one input token.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NodeId;

pub const UNK_TOKEN: &str = "<UNK>";
pub const UNK: u32 = 0;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.to_lowercase()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_size: usize,
}

impl Vocabulary {
    /// Ranks corpus tokens by descending frequency (ties lexicographically
    /// ascending), keeps the top `max_size`, and prepends UNK as id 0.
    pub fn build<'a>(corpus: impl IntoIterator<Item = &'a str>, max_size: usize) -> Vocabulary {
        assert!(max_size >= 1, "max_size must be at least 1");
        let mut freq: HashMap<String, u64> = HashMap::new();
        for text in corpus {
            for tok in tokenize(text) {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size);

        let mut tokens = Vec::with_capacity(ranked.len() + 1);
        tokens.push(UNK_TOKEN.to_string());
        tokens.extend(ranked.into_iter().map(|(t, _)| t));
        Vocabulary::from_tokens(tokens, max_size)
    }

    fn from_tokens(tokens: Vec<String>, max_size: usize) -> Vocabulary {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            index,
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // UNK is always present
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// One token per line; the line number minus one is the id.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for tok in &self.tokens {
            writeln!(w, "{tok}")?;
        }
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Vocabulary> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::read_from(BufReader::new(file), path)
    }

    pub fn read_from(reader: impl Read, path: &Path) -> Result<Vocabulary> {
        let mut tokens = Vec::new();
        let mut seen = HashMap::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let tok = line.trim_end_matches(['\r', '\n']);
            if i == 0 && tok != UNK_TOKEN {
                return Err(Error::parse(
                    path,
                    1,
                    format!("first vocabulary line must be {UNK_TOKEN}"),
                ));
            }
            if seen.insert(tok.to_string(), i).is_some() {
                return Err(Error::parse(path, i + 1, format!("duplicate token {tok:?}")));
            }
            tokens.push(tok.to_string());
        }
        if tokens.is_empty() {
            return Err(Error::parse(path, 1, "empty vocabulary file"));
        }
        let max_size = tokens.len() - 1;
        Ok(Vocabulary::from_tokens(tokens, max_size))
    }
}

/// A node's attribute tokens mapped to vocabulary ids. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub node: NodeId,
    pub ids: Vec<u32>,
}

/// Tokenizes, maps out-of-vocabulary tokens to UNK, replaces an empty
/// result with `[UNK]`, and keeps only the first `max_len` ids.
pub fn encode_sequence(vocab: &Vocabulary, text: &str, max_len: usize) -> Vec<u32> {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut ids: Vec<u32> = tokenize(text)
        .iter()
        .map(|t| vocab.id(t).unwrap_or(UNK))
        .collect();
    if ids.is_empty() {
        ids.push(UNK);
    }
    ids.truncate(max_len);
    ids
}

/// Encoded attribute sequences for a fixed universe of node labels.
///
/// Each node holds exactly `arity` sequences. Multi-part attribute text is
/// written as `part1|||part2|||...`; short inputs are padded with `[UNK]`
/// parts and long ones truncated, so typed encoders always see their
/// expected arity. Nodes absent from the attribute file fall back to all-UNK
/// parts and are counted in `fallback_nodes`.
#[derive(Debug, Clone)]
pub struct AttrStore {
    labels: Vec<String>,
    parts: Vec<Vec<Vec<u32>>>,
    arity: usize,
    vocab_size: usize,
    pub fallback_nodes: usize,
}

pub const PART_SEPARATOR: &str = "|||";

impl AttrStore {
    pub fn build(
        labels: &[String],
        text: &BTreeMap<String, String>,
        vocab: &Vocabulary,
        arity: usize,
        max_len: usize,
    ) -> AttrStore {
        assert!(arity >= 1, "arity must be at least 1");
        let mut parts = Vec::with_capacity(labels.len());
        let mut fallback_nodes = 0;
        for label in labels {
            match text.get(label) {
                Some(raw) => parts.push(encode_parts(vocab, raw, arity, max_len)),
                None => {
                    fallback_nodes += 1;
                    parts.push(vec![vec![UNK]; arity]);
                }
            }
        }
        AttrStore {
            labels: labels.to_vec(),
            parts,
            arity,
            vocab_size: vocab.len(),
            fallback_nodes,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Size of the vocabulary the sequences were encoded against.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v as usize]
    }

    /// The node's `arity` sequences, or an error naming the node when it is
    /// outside the store's universe.
    pub fn parts(&self, v: NodeId) -> Result<&[Vec<u32>]> {
        self.parts
            .get(v as usize)
            .map(|p| p.as_slice())
            .ok_or_else(|| Error::MissingAttributes {
                node: format!("node id {v}"),
            })
    }

    pub fn sequences(&self) -> impl Iterator<Item = TokenSequence> + '_ {
        self.parts.iter().enumerate().map(|(i, p)| TokenSequence {
            node: i as NodeId,
            ids: p[0].clone(),
        })
    }
}

fn encode_parts(vocab: &Vocabulary, raw: &str, arity: usize, max_len: usize) -> Vec<Vec<u32>> {
    if arity == 1 {
        return vec![encode_sequence(vocab, raw, max_len)];
    }
    let mut out: Vec<Vec<u32>> = raw
        .split(PART_SEPARATOR)
        .take(arity)
        .map(|p| encode_sequence(vocab, p, max_len))
        .collect();
    while out.len() < arity {
        out.push(vec![UNK]);
    }
    out
}
