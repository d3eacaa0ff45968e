use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize;

pub const PAD_TOKEN: &str = "<pad>";
pub const PAD_ID: u32 = 0;

/// Dense token ids with the padding token at 0; remaining tokens sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

/// Ids for the known tokens of a text, plus the tokens that were dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub ids: Vec<u32>,
    pub unknown: Vec<String>,
}

impl Vocabulary {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let distinct: BTreeSet<String> = texts.into_iter().flat_map(tokenize).collect();
        Self::from_tokens(distinct)
    }

    fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut list = vec![PAD_TOKEN.to_string()];
        list.extend(tokens.into_iter().filter(|t| t != PAD_TOKEN));
        let ids = list.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens: list, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, text: &str) -> Encoded {
        let mut out = Encoded {
            ids: Vec::new(),
            unknown: Vec::new(),
        };
        for tok in tokenize(text) {
            match self.id(&tok) {
                Some(id) if id != PAD_ID => out.ids.push(id),
                _ => out.unknown.push(tok),
            }
        }
        out
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Self::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens.into_iter().skip(1).collect()
    }
}
