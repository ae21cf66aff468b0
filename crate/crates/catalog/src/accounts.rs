//! Contributor and curator accounts authenticated by static bearer tokens.
//!
//! Tokens are never stored; each account keeps a random salt and the
//! SHA-256 of `salt:token`.

use std::fs;
use std::io;
use std::path::Path;

use oc_core::pipeline::Role;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AccountError {
    #[error("accounts file unreadable: {0}")]
    Io(#[from] io::Error),
    #[error("accounts file malformed: {0}")]
    Malformed(String),
    #[error("account id must not be empty")]
    EmptyId,
    #[error("token must be at least 8 characters")]
    WeakToken,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: String,
    pub role: Role,
    pub salt: String,
    pub token_sha256: String,
}

impl Account {
    pub fn new(id: &str, role: Role, token: &str) -> Result<Self, AccountError> {
        if id.trim().is_empty() {
            return Err(AccountError::EmptyId);
        }
        if token.len() < 8 {
            return Err(AccountError::WeakToken);
        }
        let mut salt = [0u8; 16];
        rand::rng().fill_bytes(&mut salt);
        let salt = hex(&salt);
        let token_sha256 = token_hash(&salt, token);
        Ok(Account { id: id.trim().to_string(), role, salt, token_sha256 })
    }

    pub fn verify(&self, token: &str) -> bool {
        let computed = token_hash(&self.salt, token);
        // length is fixed, so a byte-wise fold keeps timing independent of the mismatch position
        computed.len() == self.token_sha256.len()
            && computed.bytes().zip(self.token_sha256.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
    }

    pub fn is_curator(&self) -> bool {
        self.role == Role::Curator
    }
}

fn token_hash(salt: &str, token: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(b":");
    h.update(token.as_bytes());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounts {
    pub accounts: Vec<Account>,
}

impl Accounts {
    /// Missing file reads as an empty account list.
    pub fn load(path: &Path) -> Result<Self, AccountError> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| AccountError::Malformed(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Accounts::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AccountError> {
        let value = serde_json::to_value(self).map_err(|e| AccountError::Malformed(e.to_string()))?;
        let mut text = oc_core::json::to_canonical_string(&value);
        text.push('\n');
        crate::store::write_atomic(path, text.as_bytes())?;
        Ok(())
    }

    /// Adds or replaces the account with the same id.
    pub fn upsert(&mut self, account: Account) {
        self.accounts.retain(|a| a.id != account.id);
        self.accounts.push(account);
        self.accounts.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn find(&self, id: &str) -> Option<&Account> {
        self.accounts.iter().find(|a| a.id == id)
    }

    pub fn authenticate(&self, token: &str) -> Option<&Account> {
        self.accounts.iter().find(|a| a.verify(token))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_round_trip() {
        let a = Account::new("cur-1", Role::Curator, "correct horse").unwrap();
        assert!(a.verify("correct horse"));
        assert!(!a.verify("correct horsf"));
        assert!(!a.token_sha256.contains("correct"));
    }

    #[test]
    fn salts_differ_per_account() {
        let a = Account::new("a", Role::Contributor, "same-token").unwrap();
        let b = Account::new("b", Role::Contributor, "same-token").unwrap();
        assert_ne!(a.salt, b.salt);
        assert_ne!(a.token_sha256, b.token_sha256);
    }

    #[test]
    fn rejects_short_tokens_and_blank_ids() {
        assert!(matches!(Account::new("a", Role::Curator, "short"), Err(AccountError::WeakToken)));
        assert!(matches!(Account::new("  ", Role::Curator, "long enough"), Err(AccountError::EmptyId)));
    }

    #[test]
    fn save_load_authenticate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("accounts.json");
        assert!(Accounts::load(&path).unwrap().accounts.is_empty());
        let mut accts = Accounts::default();
        accts.upsert(Account::new("zed", Role::Contributor, "contrib-token").unwrap());
        accts.upsert(Account::new("amy", Role::Curator, "curator-token").unwrap());
        accts.save(&path).unwrap();
        let back = Accounts::load(&path).unwrap();
        assert_eq!(back, accts);
        assert_eq!(back.authenticate("curator-token").unwrap().id, "amy");
        assert!(back.authenticate("nope-nope").is_none());
        assert_eq!(back.accounts[0].id, "amy");
    }
}
