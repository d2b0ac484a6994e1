//! Toy language: `l` nouns, `l` intransitive verbs, two-word sentences.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NemoError, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
}

impl Pos {
    pub fn other(self) -> Pos {
        match self {
            Pos::Noun => Pos::Verb,
            Pos::Verb => Pos::Noun,
        }
    }
}

/// Principal word order of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordOrder {
    SV,
    VS,
}

impl std::fmt::Display for WordOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WordOrder::SV => "SV",
            WordOrder::VS => "VS",
        })
    }
}

impl std::str::FromStr for WordOrder {
    type Err = NemoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SV" | "sv" => Ok(WordOrder::SV),
            "VS" | "vs" => Ok(WordOrder::VS),
            other => Err(NemoError::param(
                "order",
                format!("expected SV|VS, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub id: usize,
    pub pos: Pos,
    /// Extra context area implicated by the word; `None` when there are none.
    pub context_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    nouns: Vec<Word>,
    verbs: Vec<Word>,
    contexts: usize,
}

impl Lexicon {
    /// Nouns get ids `0..l`, verbs `l..2l`. Each word draws its context
    /// area uniformly from `0..contexts`; collisions are allowed.
    pub fn build(l: usize, contexts: usize, seed: u64) -> Result<Self> {
        if l == 0 {
            return Err(NemoError::param(
                "l",
                "lexicon needs at least one noun and one verb",
            ));
        }
        let mut rng = rng::stream(seed, "lexicon");
        let mut word = |id, pos| Word {
            id,
            pos,
            context_index: (contexts > 0).then(|| rng.random_range(0..contexts)),
        };
        let nouns = (0..l).map(|i| word(i, Pos::Noun)).collect();
        let verbs = (l..2 * l).map(|i| word(i, Pos::Verb)).collect();
        Ok(Self {
            nouns,
            verbs,
            contexts,
        })
    }

    /// Words per part of speech.
    pub fn l(&self) -> usize {
        self.nouns.len()
    }

    pub fn len(&self) -> usize {
        self.nouns.len() + self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn nouns(&self) -> &[Word] {
        &self.nouns
    }

    pub fn verbs(&self) -> &[Word] {
        &self.verbs
    }

    pub fn of(&self, pos: Pos) -> &[Word] {
        match pos {
            Pos::Noun => &self.nouns,
            Pos::Verb => &self.verbs,
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.nouns.iter().chain(&self.verbs)
    }

    pub fn word(&self, id: usize) -> Result<&Word> {
        self.words()
            .find(|w| w.id == id)
            .ok_or(NemoError::UnknownWord(id))
    }

    /// True if `w` is exactly an entry of this lexicon.
    pub fn contains(&self, w: &Word) -> bool {
        self.word(w.id).is_ok_and(|x| x == w)
    }

    /// JSON list of `{id, pos, context_index}` records.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.words().collect::<Vec<_>>()).expect("plain records")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub words: [Word; 2],
    pub order: WordOrder,
}

impl Sentence {
    pub fn new(noun: Word, verb: Word, order: WordOrder) -> Self {
        let words = match order {
            WordOrder::SV => [noun, verb],
            WordOrder::VS => [verb, noun],
        };
        Self { words, order }
    }

    pub fn noun(&self) -> Word {
        match self.order {
            WordOrder::SV => self.words[0],
            WordOrder::VS => self.words[1],
        }
    }

    pub fn verb(&self) -> Word {
        match self.order {
            WordOrder::SV => self.words[1],
            WordOrder::VS => self.words[0],
        }
    }
}

/// Draws a noun and a verb independently and uniformly.
pub fn sample_sentence<R: Rng + ?Sized>(
    lexicon: &Lexicon,
    order: WordOrder,
    rng: &mut R,
) -> Sentence {
    let noun = lexicon.nouns[rng.random_range(0..lexicon.nouns.len())];
    let verb = lexicon.verbs[rng.random_range(0..lexicon.verbs.len())];
    Sentence::new(noun, verb, order)
}
