use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};

pub const DEFAULT_DIM: usize = 300;

const HASH_DOMAIN: &[u8] = b"vgr-hash-embedding";

/// Deterministic unit-norm pseudo-random embedding for `word`.
pub fn hash_embedding<T: Scalar>(word: &str, dim: usize, seed: u64) -> Vec<T> {
    let digest: [u8; 32] = Sha256::new()
        .chain_update(HASH_DOMAIN)
        .chain_update(seed.to_le_bytes())
        .chain_update(word.as_bytes())
        .finalize()
        .into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let length = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| T::lit(x / length)).collect()
}

/// Word → vector lookup with a hash-embedding fallback for unknown words.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    entries: BTreeMap<String, Vec<T>>,
    hash_seed: u64,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// A table with no entries: every lookup uses the hash fallback.
    pub fn hashed(dim: usize, hash_seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            entries: BTreeMap::new(),
            hash_seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, word: &str, vector: Vec<T>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Embedding(format!(
                "`{word}` has {} coordinates, table dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        self.entries.insert(word.to_string(), vector);
        Ok(())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    /// Table entry if present, hash embedding otherwise.
    pub fn embed(&self, word: &str) -> Vec<T> {
        debug_assert!(!word.is_empty(), "embedding an empty word");
        match self.entries.get(word) {
            Some(v) => v.clone(),
            None => hash_embedding(word, self.dim, self.hash_seed),
        }
    }

    /// Fails if two distinct words map to bit-identical vectors.
    pub fn ensure_distinct<'a>(&self, words: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let mut seen: HashMap<Vec<u64>, &str> = HashMap::new();
        for word in words {
            let key: Vec<u64> = self
                .embed(word)
                .iter()
                .map(|x| x.to_f64_lossy().to_bits())
                .collect();
            if let Some(prev) = seen.insert(key, word) {
                if prev != word {
                    return Err(Error::Embedding(format!(
                        "`{prev}` and `{word}` share an embedding"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reads the word2vec text format: `word v1 … vD` per line, with an
    /// optional `count dim` header line.
    pub fn from_word2vec_reader(reader: impl Read, source: &str, hash_seed: u64) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (index, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                path: source.to_string(),
                line: index + 1,
                message: e.to_string(),
            })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if index == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())
            {
                continue;
            }
            let parse_error = |message: String| Error::Parse {
                path: source.to_string(),
                line: index + 1,
                message,
            };
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| parse_error(e.to_string()))?;
            if values.is_empty() {
                return Err(parse_error("missing coordinates".into()));
            }
            let table = table.get_or_insert_with(|| Self::hashed(values.len(), hash_seed));
            table
                .insert(fields[0], values)
                .map_err(|e| parse_error(e.to_string()))?;
        }
        let table = table.ok_or_else(|| Error::Embedding(format!("{source}: no entries")))?;
        table.ensure_distinct(table.entries.keys().map(String::as_str))?;
        Ok(table)
    }

    pub fn from_word2vec_file(path: &Path, hash_seed: u64) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_word2vec_reader(file, &path.display().to_string(), hash_seed)
    }
}

/// Unit-length copy; zero vectors stay zero.
pub(crate) fn normalized<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = norm(v);
    if n == T::zero() {
        v.to_vec()
    } else {
        v.iter().map(|&x| x / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Ontology;

    #[test]
    fn hash_embedding_is_deterministic_and_unit_norm() {
        let a: Vec<f64> = hash_embedding("cat", 300, 0);
        let b: Vec<f64> = hash_embedding("cat", 300, 0);
        assert_eq!(a, b);
        assert!((norm(&a) - 1.0).abs() < 1e-12);
        let c: Vec<f64> = hash_embedding("cat", 300, 1);
        assert_ne!(a, c);
    }

    #[test]
    fn table_entry_takes_precedence() {
        let mut table = EmbeddingTable::<f64>::hashed(3, 0);
        table.insert("cat", vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(table.embed("cat"), vec![1.0, 2.0, 3.0]);
        assert_eq!(table.embed("dog"), hash_embedding::<f64>("dog", 3, 0));
        assert!(table.insert("cow", vec![1.0]).is_err());
    }

    #[test]
    fn shipped_vocabulary_hashes_pairwise_distinct() {
        let o = Ontology::builtin();
        let table = EmbeddingTable::<f64>::hashed(DEFAULT_DIM, 0);
        let words: Vec<&str> = o
            .names()
            .chain(o.attribute_vocab().iter().map(String::as_str))
            .chain(o.categories().keys().map(String::as_str))
            .collect();
        let vectors: Vec<Vec<f64>> = words.iter().map(|w| table.embed(w)).collect();
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                assert!(
                    vectors[i].iter().zip(&vectors[j]).any(|(a, b)| a != b),
                    "{} and {} collide",
                    words[i],
                    words[j]
                );
            }
        }
        table.ensure_distinct(words.iter().copied()).unwrap();
    }

    #[test]
    fn word2vec_text_with_header() {
        let text = "2 3\ncat 1 0 0\ndog 0 1 0\n";
        let table = EmbeddingTable::<f32>::from_word2vec_reader(text.as_bytes(), "mem", 0).unwrap();
        assert_eq!(table.dim(), 3);
        assert_eq!(table.embed("dog"), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn word2vec_errors_carry_line_numbers() {
        let text = "cat 1 0 0\ndog 0 1\n";
        let err =
            EmbeddingTable::<f64>::from_word2vec_reader(text.as_bytes(), "mem", 0).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let dup = "cat 1 0\ndog 1 0\n";
        assert!(EmbeddingTable::<f64>::from_word2vec_reader(dup.as_bytes(), "mem", 0).is_err());
    }
}
