//! Controlled vocabularies for the descriptor groups that are not free text.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::DescriptorGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("alias `{alias}` maps to `{target}`, which is not a term of vocabulary `{vocab}`")]
    DanglingAlias { vocab: String, alias: String, target: String },
    #[error("malformed vocabulary document: {0}")]
    Malformed(String),
    #[error("unknown vocabulary `{0}`")]
    UnknownName(String),
}

fn lookup_key(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A closed, alias-aware term set. Lookup is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlledVocabulary {
    name: String,
    terms: BTreeSet<String>,
    aliases: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    name: String,
    terms: Vec<String>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

impl ControlledVocabulary {
    pub fn new<T, A, K, V>(name: &str, terms: T, aliases: A) -> Result<Self, VocabError>
    where
        T: IntoIterator,
        T::Item: AsRef<str>,
        A: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let terms: BTreeSet<String> = terms.into_iter().map(|t| lookup_key(t.as_ref())).collect();
        let mut alias_map = BTreeMap::new();
        for (alias, target) in aliases {
            let target = lookup_key(target.as_ref());
            if !terms.contains(&target) {
                return Err(VocabError::DanglingAlias {
                    vocab: name.into(),
                    alias: alias.as_ref().into(),
                    target,
                });
            }
            alias_map.insert(lookup_key(alias.as_ref()), target);
        }
        Ok(ControlledVocabulary { name: name.into(), terms, aliases: alias_map })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, VocabError> {
        let file: VocabularyFile =
            serde_json::from_slice(bytes).map_err(|e| VocabError::Malformed(e.to_string()))?;
        ControlledVocabulary::new(&file.name, file.terms, file.aliases)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(VocabularyFile {
            name: self.name.clone(),
            terms: self.terms.iter().cloned().collect(),
            aliases: self.aliases.clone(),
        })
        .unwrap_or_default()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    /// Canonical form of `term`, trying terms first and aliases second.
    pub fn lookup(&self, term: &str) -> Option<&str> {
        let key = lookup_key(term);
        if let Some(t) = self.terms.get(&key) {
            return Some(t.as_str());
        }
        self.aliases.get(&key).map(String::as_str)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.lookup(term).is_some()
    }
}

/// The vocabularies backing every controlled descriptor group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabularySet {
    pub modalities: ControlledVocabulary,
    pub tasks: ControlledVocabulary,
    pub phases: ControlledVocabulary,
    pub oer_format: ControlledVocabulary,
}

impl VocabularySet {
    pub fn for_group(&self, group: DescriptorGroup) -> Option<&ControlledVocabulary> {
        match group {
            DescriptorGroup::Modalities => Some(&self.modalities),
            DescriptorGroup::Tasks => Some(&self.tasks),
            DescriptorGroup::Phases => Some(&self.phases),
            DescriptorGroup::OerFormat => Some(&self.oer_format),
            _ => None,
        }
    }

    /// Replaces the vocabulary whose name matches `vocab`.
    pub fn replace(&mut self, vocab: ControlledVocabulary) -> Result<(), VocabError> {
        let slot = match vocab.name() {
            "modalities" => &mut self.modalities,
            "tasks" => &mut self.tasks,
            "phases" => &mut self.phases,
            "oer_format" => &mut self.oer_format,
            other => return Err(VocabError::UnknownName(other.into())),
        };
        *slot = vocab;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &ControlledVocabulary> {
        [&self.modalities, &self.tasks, &self.phases, &self.oer_format].into_iter()
    }
}

impl Default for VocabularySet {
    /// Category labels of the published catalog statistics, with common spellings as aliases.
    fn default() -> Self {
        let modalities = ControlledVocabulary::new(
            "modalities",
            ["ground-level rgb", "aerial rgb", "point cloud", "synthetic", "thermal", "video"],
            [
                ("ground level rgb", "ground-level rgb"),
                ("rgb", "ground-level rgb"),
                ("rgb images", "ground-level rgb"),
                ("aerial", "aerial rgb"),
                ("uav", "aerial rgb"),
                ("drone imagery", "aerial rgb"),
                ("point clouds", "point cloud"),
                ("lidar", "point cloud"),
                ("synthetic data", "synthetic"),
                ("infrared", "thermal"),
                ("thermal imagery", "thermal"),
                ("videos", "video"),
            ],
        );
        let tasks = ControlledVocabulary::new(
            "tasks",
            [
                "object detection",
                "segmentation",
                "tracking",
                "pose estimation",
                "slam",
                "image captioning",
                "3d reconstruction",
                "other",
            ],
            [
                ("detection", "object detection"),
                ("semantic segmentation", "segmentation"),
                ("instance segmentation", "segmentation"),
                ("object tracking", "tracking"),
                ("pose", "pose estimation"),
                ("human pose estimation", "pose estimation"),
                ("simultaneous localization and mapping", "slam"),
                ("captioning", "image captioning"),
                ("3d-reconstruction", "3d reconstruction"),
            ],
        );
        let phases = ControlledVocabulary::new(
            "phases",
            ["design", "preconstruction", "construction", "operations and maintenance"],
            [
                ("pre-construction", "preconstruction"),
                ("o&m", "operations and maintenance"),
                ("operations & maintenance", "operations and maintenance"),
                ("operation and maintenance", "operations and maintenance"),
                ("maintenance", "operations and maintenance"),
            ],
        );
        let oer_format = ControlledVocabulary::new(
            "oer_format",
            ["textbook", "slides"],
            [("open textbook", "textbook"), ("book", "textbook"), ("slide deck", "slides")],
        );
        // The built-in tables are closed under their aliases.
        VocabularySet {
            modalities: modalities.expect("built-in vocabulary"),
            tasks: tasks.expect("built-in vocabulary"),
            phases: phases.expect("built-in vocabulary"),
            oer_format: oer_format.expect("built-in vocabulary"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_examples() {
        let v = VocabularySet::default();
        assert_eq!(v.tasks.lookup("Object Detection"), Some("object detection"));
        assert_eq!(v.tasks.lookup("slam"), Some("slam"));
        assert_eq!(v.tasks.lookup("SLAM"), Some("slam"));
        assert_eq!(v.tasks.lookup("holography"), None);
        assert_eq!(v.modalities.lookup("  LiDAR "), Some("point cloud"));
        assert_eq!(v.phases.lookup("O&M"), Some("operations and maintenance"));
    }

    #[test]
    fn dangling_alias_rejected() {
        let err = ControlledVocabulary::new("t", ["a"], [("b", "c")]).unwrap_err();
        assert!(matches!(err, VocabError::DanglingAlias { .. }));
    }

    #[test]
    fn json_round_trip_and_replace() {
        let v = VocabularySet::default();
        let bytes = serde_json::to_vec(&v.tasks.to_json()).unwrap();
        let back = ControlledVocabulary::from_json(&bytes).unwrap();
        assert_eq!(back, v.tasks);

        let mut set = VocabularySet::default();
        let extra = ControlledVocabulary::new(
            "tasks",
            ["object detection", "holography"],
            core::iter::empty::<(&str, &str)>(),
        )
        .unwrap();
        set.replace(extra).unwrap();
        assert_eq!(set.tasks.lookup("Holography"), Some("holography"));
        let bad = ControlledVocabulary::new("colours", ["red"], core::iter::empty::<(&str, &str)>())
            .unwrap();
        assert!(set.replace(bad).is_err());
    }

    #[test]
    fn all_default_aliases_resolve_to_members() {
        for vocab in VocabularySet::default().iter() {
            for (alias, target) in &vocab.aliases {
                assert!(vocab.terms.contains(target), "{alias} -> {target}");
            }
        }
    }
}
