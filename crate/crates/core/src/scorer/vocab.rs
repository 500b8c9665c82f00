use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ScorerError;
use crate::mr::MrTree;
use crate::token::{Token, CLOSE_TEXT, EOS_TEXT};

pub type TokenId = u32;

pub const UNK_ID: TokenId = 0;
pub const CLOSE_ID: TokenId = 1;
pub const EOS_ID: TokenId = 2;
const UNK_TEXT: &str = "<unk>";

/// Dense bidirectional token map. Ids 0-2 are reserved for `<unk>`, `]`
/// and `<eos>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    items: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(items: Vec<String>) -> Self {
        let mut v = Vocabulary::new();
        for it in items.iter().skip(3) {
            v.add(it);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.items
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let mut v = Vocabulary { items: Vec::new(), index: HashMap::new() };
        for r in [UNK_TEXT, CLOSE_TEXT, EOS_TEXT] {
            v.add(r);
        }
        v
    }

    pub fn add(&mut self, item: &str) -> TokenId {
        if let Some(&id) = self.index.get(item) {
            return id;
        }
        let id = self.items.len() as TokenId;
        self.items.push(item.to_string());
        self.index.insert(item.to_string(), id);
        id
    }

    pub fn add_token(&mut self, t: &Token) -> TokenId {
        self.add(&t.to_string())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, item: &str) -> Option<TokenId> {
        self.index.get(item).copied()
    }

    /// Id of `t`, or `<unk>`.
    pub fn id(&self, t: &Token) -> TokenId {
        self.get(&t.to_string()).unwrap_or(UNK_ID)
    }

    pub fn ids(&self, tokens: &[Token]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn item(&self, id: TokenId) -> Option<&str> {
        self.items.get(id as usize).map(String::as_str)
    }

    pub fn token(&self, id: TokenId) -> Token {
        Token::from_item(self.item(id).unwrap_or(UNK_TEXT))
    }

    pub fn tokens(&self, ids: &[TokenId]) -> Vec<Token> {
        ids.iter().map(|&i| self.token(i)).collect()
    }

    pub fn check_ids(&self, ids: &[TokenId]) -> Result<(), ScorerError> {
        match ids.iter().find(|&&i| i as usize >= self.items.len()) {
            Some(&bad) => Err(ScorerError::UnknownToken(bad)),
            None => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &str)> {
        self.items.iter().enumerate().map(|(i, s)| (i as TokenId, s.as_str()))
    }
}

/// What a scorer knows about the MR being realized: its canonical
/// linearization as ids and its structure-only signature.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MrContext {
    pub token_ids: Vec<TokenId>,
    pub signature: String,
}

impl MrContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mr: &MrTree, vocab: &Vocabulary) -> Self {
        let toks = mr.canonicalize().linearize();
        MrContext { token_ids: vocab.ids(&toks), signature: mr.signature() }
    }

    /// Rebuilds the context from ids alone (the external wire format).
    /// Word items never enter the signature, so unknown values are fine.
    pub fn from_ids(ids: &[TokenId], vocab: &Vocabulary) -> Self {
        let skeleton: Vec<&str> =
            ids.iter().filter_map(|&i| vocab.item(i)).filter(|s| s.starts_with('[') || *s == CLOSE_TEXT).collect();
        MrContext { token_ids: ids.to_vec(), signature: skeleton.join(" ") }
    }
}
