use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "PD")]
    Pd,
    #[serde(rename = "HC")]
    Hc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    Fr,
    En,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

impl Label {
    /// Rank encoding used when demographics enter a correlation grid.
    pub fn encoded(self) -> f64 {
        match self {
            Label::Hc => 0.0,
            Label::Pd => 1.0,
        }
    }
}

impl Language {
    pub fn encoded(self) -> f64 {
        match self {
            Language::Fr => 0.0,
            Language::En => 1.0,
        }
    }
}

impl Sex {
    pub fn encoded(self) -> f64 {
        match self {
            Sex::M => 0.0,
            Sex::F => 1.0,
        }
    }
}

/// Identity and grouping metadata carried by every sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub id: String,
    pub speaker: String,
    pub label: Label,
    pub language: Language,
    pub sex: Sex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleKind {
    #[serde(rename = "embedding")]
    Embedding,
    #[serde(rename = "wav")]
    Wav,
}

/// One JSON-lines manifest row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub speaker: String,
    pub label: Label,
    pub language: Language,
    pub sex: Sex,
    pub path: String,
    pub kind: SampleKind,
}

impl ManifestEntry {
    pub fn meta(&self) -> SampleMeta {
        SampleMeta {
            id: self.id.clone(),
            speaker: self.speaker.clone(),
            label: self.label,
            language: self.language,
            sex: self.sex,
        }
    }

    /// Entry paths are relative to the manifest's directory.
    pub fn resolve(&self, manifest_path: &Path) -> PathBuf {
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        base.join(&self.path)
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| {
            CoreError::format(
                path.display().to_string(),
                format!("line {}: {e}", lineno + 1),
            )
        })?;
        entries.push(entry);
    }
    if entries.is_empty() {
        return Err(CoreError::Input(format!(
            "manifest {} has no entries",
            path.display()
        )));
    }
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut file =
        fs::File::create(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    for entry in entries {
        let line = serde_json::to_string(entry)
            .map_err(|e| CoreError::Input(format!("manifest serialization: {e}")))?;
        writeln!(file, "{line}").map_err(|e| CoreError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        let entries = vec![
            ManifestEntry {
                id: "s0".into(),
                speaker: "spk0".into(),
                label: Label::Pd,
                language: Language::Fr,
                sex: Sex::M,
                path: "embeddings/s0.sbem".into(),
                kind: SampleKind::Embedding,
            },
            ManifestEntry {
                id: "s1".into(),
                speaker: "spk1".into(),
                label: Label::Hc,
                language: Language::En,
                sex: Sex::F,
                path: "wavs/s1.wav".into(),
                kind: SampleKind::Wav,
            },
        ];
        write_manifest(&path, &entries).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].label, Label::Pd);
        assert_eq!(back[1].kind, SampleKind::Wav);
        assert_eq!(
            back[0].resolve(&path),
            dir.path().join("embeddings/s0.sbem")
        );
    }

    #[test]
    fn labels_serialize_with_clinical_names() {
        let json = serde_json::to_string(&Label::Pd).unwrap();
        assert_eq!(json, "\"PD\"");
    }
}
