//! WordNet taxonomy loaded from WNDB database files (`data.noun`,
//! `index.noun`, `data.verb`, `index.verb`).
//!
//! Only hypernym pointers (`@`, `@i`) are kept. Every part of speech gets a
//! virtual root placed above all of its root synsets, so that any two synsets
//! of the same part of speech share at least one ancestor.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("synset {from} points to missing hypernym {to}")]
    DanglingPointer { from: SynsetKey, to: SynsetKey },
    #[error("hypernym cycle through synset {0}")]
    Cycle(SynsetKey),
    #[error("unknown synset {0}")]
    UnknownSynset(SynsetKey),
    #[error("synsets {0} and {1} have different parts of speech")]
    PosMismatch(SynsetKey, SynsetKey),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartOfSpeech {
    Noun,
    Verb,
}

impl PartOfSpeech {
    fn tag(self) -> char {
        match self {
            PartOfSpeech::Noun => 'n',
            PartOfSpeech::Verb => 'v',
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "n" => Some(PartOfSpeech::Noun),
            "v" => Some(PartOfSpeech::Verb),
            _ => None,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Identifies a synset, or the virtual root of a part of speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynsetKey {
    Root(PartOfSpeech),
    Synset(PartOfSpeech, u64),
}

impl SynsetKey {
    pub fn pos(self) -> PartOfSpeech {
        match self {
            SynsetKey::Root(p) | SynsetKey::Synset(p, _) => p,
        }
    }

    // Least-common-subsumer tie order: smaller offsets first, virtual root last.
    fn tie_order(self) -> (bool, u64) {
        match self {
            SynsetKey::Root(_) => (true, 0),
            SynsetKey::Synset(_, off) => (false, off),
        }
    }
}

impl std::fmt::Display for SynsetKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SynsetKey::Root(p) => write!(f, "<root>.{}", p.tag()),
            SynsetKey::Synset(p, off) => write!(f, "{off:08}.{}", p.tag()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    pub key: SynsetKey,
    pub lemmas: Vec<String>,
    /// Direct hypernyms; root synsets list the virtual root here.
    pub hypernyms: Vec<SynsetKey>,
}

#[derive(Debug)]
struct Node {
    synset: Synset,
    parents: Vec<usize>,
    depth: usize,
}

#[derive(Debug)]
pub struct SynsetGraph {
    nodes: Vec<Node>,
    lookup: HashMap<SynsetKey, usize>,
    lemma_index: HashMap<(PartOfSpeech, String), Vec<SynsetKey>>,
    version: Option<String>,
}

const ROOTS: [PartOfSpeech; 2] = [PartOfSpeech::Noun, PartOfSpeech::Verb];

struct DataFile<'a> {
    name: &'static str,
    pos: PartOfSpeech,
    text: &'a str,
}

impl SynsetGraph {
    /// Parses the four WNDB files that make up the noun and verb taxonomies.
    pub fn parse_wndb(
        data_noun: &str,
        index_noun: &str,
        data_verb: &str,
        index_verb: &str,
    ) -> Result<SynsetGraph, WordNetError> {
        let mut graph = SynsetGraph {
            nodes: Vec::new(),
            lookup: HashMap::new(),
            lemma_index: HashMap::new(),
            version: None,
        };
        for pos in ROOTS {
            let key = SynsetKey::Root(pos);
            graph.lookup.insert(key, graph.nodes.len());
            graph.nodes.push(Node {
                synset: Synset {
                    key,
                    lemmas: Vec::new(),
                    hypernyms: Vec::new(),
                },
                parents: Vec::new(),
                depth: 1,
            });
        }

        let files = [
            DataFile {
                name: "data.noun",
                pos: PartOfSpeech::Noun,
                text: data_noun,
            },
            DataFile {
                name: "data.verb",
                pos: PartOfSpeech::Verb,
                text: data_verb,
            },
        ];
        for file in &files {
            graph.read_data(file)?;
        }
        graph.link()?;
        graph.compute_depths()?;
        graph.read_index("index.noun", PartOfSpeech::Noun, index_noun)?;
        graph.read_index("index.verb", PartOfSpeech::Verb, index_verb)?;
        Ok(graph)
    }

    /// Loads `data.{noun,verb}` and `index.{noun,verb}` from a WordNet `dict` directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<SynsetGraph, WordNetError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read(&path)
                .map(|b| String::from_utf8_lossy(&b).into_owned())
                .map_err(|source| WordNetError::Io {
                    path: path.display().to_string(),
                    source,
                })
        };
        Self::parse_wndb(
            &read("data.noun")?,
            &read("index.noun")?,
            &read("data.verb")?,
            &read("index.verb")?,
        )
    }

    fn read_data(&mut self, file: &DataFile<'_>) -> Result<(), WordNetError> {
        for (lineno, line) in file.text.lines().enumerate() {
            let lineno = lineno + 1;
            if line.starts_with("  ") {
                if self.version.is_none() {
                    self.version = declared_version(line);
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let synset =
                parse_data_line(line, file.pos).map_err(|message| WordNetError::Malformed {
                    file: file.name,
                    line: lineno,
                    message,
                })?;
            if self.lookup.contains_key(&synset.key) {
                return Err(WordNetError::Malformed {
                    file: file.name,
                    line: lineno,
                    message: format!("duplicate synset offset {}", synset.key),
                });
            }
            self.lookup.insert(synset.key, self.nodes.len());
            self.nodes.push(Node {
                synset,
                parents: Vec::new(),
                depth: 0,
            });
        }
        Ok(())
    }

    fn link(&mut self) -> Result<(), WordNetError> {
        for i in ROOTS.len()..self.nodes.len() {
            let key = self.nodes[i].synset.key;
            let mut parents = Vec::with_capacity(self.nodes[i].synset.hypernyms.len());
            for &h in &self.nodes[i].synset.hypernyms {
                let Some(&p) = self.lookup.get(&h) else {
                    return Err(WordNetError::DanglingPointer { from: key, to: h });
                };
                if h.pos() != key.pos() {
                    return Err(WordNetError::PosMismatch(key, h));
                }
                parents.push(p);
            }
            if parents.is_empty() {
                parents.push(key.pos().index());
                self.nodes[i]
                    .synset
                    .hypernyms
                    .push(SynsetKey::Root(key.pos()));
            }
            self.nodes[i].parents = parents;
        }
        Ok(())
    }

    // Shortest hypernym path to the virtual root, counting both ends.
    fn compute_depths(&mut self) -> Result<(), WordNetError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Open,
            Done,
        }
        let mut mark = vec![Mark::New; self.nodes.len()];
        mark[..ROOTS.len()].fill(Mark::Done);
        for start in ROOTS.len()..self.nodes.len() {
            if mark[start] == Mark::Done {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            mark[start] = Mark::Open;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if let Some(&parent) = self.nodes[node].parents.get(*next) {
                    *next += 1;
                    match mark[parent] {
                        Mark::Done => {}
                        Mark::Open => {
                            return Err(WordNetError::Cycle(self.nodes[parent].synset.key))
                        }
                        Mark::New => {
                            mark[parent] = Mark::Open;
                            stack.push((parent, 0));
                        }
                    }
                } else {
                    let depth = self.nodes[node]
                        .parents
                        .iter()
                        .map(|&p| self.nodes[p].depth)
                        .min()
                        .expect("linked synsets have a parent")
                        + 1;
                    self.nodes[node].depth = depth;
                    mark[node] = Mark::Done;
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    fn read_index(
        &mut self,
        name: &'static str,
        pos: PartOfSpeech,
        text: &str,
    ) -> Result<(), WordNetError> {
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with("  ") || line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| WordNetError::Malformed {
                file: name,
                line: lineno + 1,
                message,
            };
            let (lemma, offsets) = parse_index_line(line, pos).map_err(malformed)?;
            let mut keys = Vec::with_capacity(offsets.len());
            for off in offsets {
                let key = SynsetKey::Synset(pos, off);
                if !self.lookup.contains_key(&key) {
                    return Err(malformed(format!("index references unknown synset {key}")));
                }
                keys.push(key);
            }
            self.lemma_index.insert((pos, lemma), keys);
        }
        Ok(())
    }

    /// Version declared in the license header of the data files, e.g. `3.0`.
    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    /// Number of real synsets (virtual roots excluded).
    pub fn len(&self) -> usize {
        self.nodes.len() - ROOTS.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.nodes[ROOTS.len()..].iter().map(|n| &n.synset)
    }

    pub fn synset(&self, key: SynsetKey) -> Option<&Synset> {
        self.lookup.get(&key).map(|&i| &self.nodes[i].synset)
    }

    /// Synsets of a lemma, in index order. Lookup is by lowercase exact match,
    /// with spaces mapped to underscores as in the WNDB files.
    pub fn lookup(&self, lemma: &str, pos: PartOfSpeech) -> &[SynsetKey] {
        let key = lemma.to_lowercase().replace(' ', "_");
        self.lemma_index
            .get(&(pos, key))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Noun and verb synsets of a lemma.
    pub fn senses(&self, lemma: &str) -> impl Iterator<Item = SynsetKey> + '_ {
        let nouns = self.lookup(lemma, PartOfSpeech::Noun).iter();
        let verbs = self.lookup(lemma, PartOfSpeech::Verb).iter();
        nouns.chain(verbs).copied()
    }

    fn node(&self, key: SynsetKey) -> Result<usize, WordNetError> {
        self.lookup
            .get(&key)
            .copied()
            .ok_or(WordNetError::UnknownSynset(key))
    }

    pub fn depth(&self, key: SynsetKey) -> Result<usize, WordNetError> {
        Ok(self.nodes[self.node(key)?].depth)
    }

    fn ancestors(&self, start: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &p in &self.nodes[n].parents {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Deepest common ancestor of two synsets of the same part of speech.
    pub fn least_common_subsumer(
        &self,
        a: SynsetKey,
        b: SynsetKey,
    ) -> Result<SynsetKey, WordNetError> {
        if a.pos() != b.pos() {
            return Err(WordNetError::PosMismatch(a, b));
        }
        let (ia, ib) = (self.node(a)?, self.node(b)?);
        let up_a = self.ancestors(ia);
        let up_b = self.ancestors(ib);
        let lcs = up_a
            .intersection(&up_b)
            .map(|&i| &self.nodes[i])
            .min_by_key(|n| (std::cmp::Reverse(n.depth), n.synset.key.tie_order()))
            .expect("synsets of one part of speech share the virtual root");
        Ok(lcs.synset.key)
    }

    /// Wu-Palmer similarity `2·depth(lcs) / (depth(a) + depth(b))`.
    pub fn wu_palmer<T: Scalar>(&self, a: SynsetKey, b: SynsetKey) -> Result<T, WordNetError> {
        let lcs = self.least_common_subsumer(a, b)?;
        let num = 2 * self.depth(lcs)?;
        let den = self.depth(a)? + self.depth(b)?;
        Ok(T::of_usize(num) / T::of_usize(den))
    }
}

fn declared_version(header: &str) -> Option<String> {
    let rest = &header[header.find("WordNet ")? + "WordNet ".len()..];
    let version: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    let version = version.trim_end_matches('.');
    (!version.is_empty()).then(|| version.to_owned())
}

fn parse_data_line(line: &str, expected: PartOfSpeech) -> Result<Synset, String> {
    let body = line.split(" | ").next().unwrap_or(line);
    let mut fields = body.split_ascii_whitespace();
    let mut next = |what: &str| fields.next().ok_or_else(|| format!("missing {what}"));

    let offset: u64 = next("synset_offset")?
        .parse()
        .map_err(|e| format!("bad synset_offset: {e}"))?;
    next("lex_filenum")?;
    let ss_type = next("ss_type")?;
    if PartOfSpeech::from_tag(ss_type) != Some(expected) {
        return Err(format!(
            "ss_type `{ss_type}` does not match {} file",
            expected.tag()
        ));
    }
    let w_cnt = usize::from_str_radix(next("w_cnt")?, 16).map_err(|e| format!("bad w_cnt: {e}"))?;
    let mut lemmas = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let word = next("word")?;
        next("lex_id")?;
        // adjective markers like `(p)` never occur for nouns/verbs but are harmless to strip
        let word = word.split('(').next().unwrap_or(word);
        lemmas.push(word.to_lowercase());
    }
    let p_cnt: usize = next("p_cnt")?
        .parse()
        .map_err(|e| format!("bad p_cnt: {e}"))?;
    let mut hypernyms = Vec::new();
    for _ in 0..p_cnt {
        let symbol = next("pointer_symbol")?;
        let target: u64 = next("pointer offset")?
            .parse()
            .map_err(|e| format!("bad pointer offset: {e}"))?;
        let pos_tag = next("pointer pos")?;
        let source_target = next("source/target")?;
        if source_target.len() != 4 || u16::from_str_radix(source_target, 16).is_err() {
            return Err(format!("bad source/target field `{source_target}`"));
        }
        if symbol == "@" || symbol == "@i" {
            let pos = PartOfSpeech::from_tag(pos_tag)
                .ok_or_else(|| format!("hypernym pointer to unsupported pos `{pos_tag}`"))?;
            hypernyms.push(SynsetKey::Synset(pos, target));
        }
    }
    Ok(Synset {
        key: SynsetKey::Synset(expected, offset),
        lemmas,
        hypernyms,
    })
}

fn parse_index_line(line: &str, expected: PartOfSpeech) -> Result<(String, Vec<u64>), String> {
    let mut fields = line.split_ascii_whitespace();
    let mut next = |what: &str| fields.next().ok_or_else(|| format!("missing {what}"));
    let lemma = next("lemma")?.to_lowercase();
    let pos = next("pos")?;
    if PartOfSpeech::from_tag(pos) != Some(expected) {
        return Err(format!(
            "pos `{pos}` does not match {} index",
            expected.tag()
        ));
    }
    let synset_cnt: usize = next("synset_cnt")?
        .parse()
        .map_err(|e| format!("bad synset_cnt: {e}"))?;
    let p_cnt: usize = next("p_cnt")?
        .parse()
        .map_err(|e| format!("bad p_cnt: {e}"))?;
    for _ in 0..p_cnt {
        next("ptr_symbol")?;
    }
    next("sense_cnt")?;
    next("tagsense_cnt")?;
    let offsets = (0..synset_cnt)
        .map(|_| {
            next("synset_offset")?
                .parse::<u64>()
                .map_err(|e| format!("bad synset_offset: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((lemma, offsets))
}

#[cfg(test)]
pub(crate) mod fixtures {
    /// root → animal → {dog, cat}, plus an isolated `rock` tree.
    pub const DATA_NOUN: &str =
        "  1 This software and database is being provided to you, the LICENSEE, by
  2 Princeton University under the following license. WordNet 3.0 Copyright 2006
00000100 03 n 01 entity 0 000 | that which is perceived
00000200 05 n 01 animal 0 001 @ 00000100 n 0000 | a living organism
00000300 05 n 02 dog 0 domestic_dog 0 001 @ 00000200 n 0000 | a canine
00000400 05 n 01 cat 0 001 @ 00000200 n 0000 | a feline
00000500 17 n 01 rock 0 000 | a stone
";
    pub const INDEX_NOUN: &str = "  1 This software and database is being provided to you
entity n 1 1 ~ 1 0 00000100
animal n 1 2 @ ~ 1 0 00000200
dog n 1 1 @ 1 0 00000300
domestic_dog n 1 1 @ 1 0 00000300
cat n 1 1 @ 1 0 00000400
rock n 1 0 1 0 00000500
";
    pub const DATA_VERB: &str = "00001000 29 v 01 run 0 000 01 + 02 00 | move fast
00001100 29 v 01 sprint 0 001 @ 00001000 v 0000 01 + 02 00 | run very fast
00001200 30 v 01 think 0 000 01 + 08 00 | reason
";
    pub const INDEX_VERB: &str = "run v 1 0 1 0 00001000
sprint v 1 1 @ 1 0 00001100
think v 1 0 1 0 00001200
";
}
