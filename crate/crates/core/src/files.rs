//! JSON artifacts: channel files, session configs, content hashes.
//!
//! Every JSON document written by this crate goes through [`to_stable_json`],
//! which sorts object keys so outputs diff cleanly and hash reproducibly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codebook::{CodeError, Codebook};
use crate::dmc::{ChannelError, DisproverPolicy, Dmc};
use crate::protocol::GammaSchedule;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Channel {
        path: PathBuf,
        #[source]
        source: ChannelError,
    },
    #[error("{path}: {source}")]
    Code {
        path: PathBuf,
        #[source]
        source: CodeError,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
}

/// Pretty JSON with object keys in sorted order.
pub fn to_stable_json<T: Serialize + ?Sized>(value: &T) -> String {
    // serde_json::Value keeps objects in a BTreeMap unless `preserve_order` is on.
    let v = serde_json::to_value(value).expect("artifact types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

/// Hex SHA-256 of the compact sorted-key JSON encoding.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("artifact types serialize");
    let bytes = serde_json::to_vec(&v).expect("values serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    fs::write(path, text).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `{"name", "inputs", "outputs", "rows", "output_labels"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_labels: Option<Vec<String>>,
}

impl ChannelFile {
    pub fn from_dmc(name: impl Into<String>, ch: &Dmc) -> Self {
        ChannelFile {
            name: name.into(),
            inputs: ch.input_size(),
            outputs: ch.output_size(),
            rows: ch.rows().to_vec(),
            output_labels: None,
        }
    }

    pub fn to_dmc(&self) -> Result<Dmc, ChannelError> {
        let ch = Dmc::new(self.rows.clone())?;
        if ch.input_size() != self.inputs {
            return Err(ChannelError::SizeMismatch {
                what: "input",
                declared: self.inputs,
                actual: ch.input_size(),
            });
        }
        if ch.output_size() != self.outputs {
            return Err(ChannelError::SizeMismatch {
                what: "output",
                declared: self.outputs,
                actual: ch.output_size(),
            });
        }
        if let Some(labels) = &self.output_labels {
            if labels.len() != self.outputs {
                return Err(ChannelError::SizeMismatch {
                    what: "output label",
                    declared: labels.len(),
                    actual: self.outputs,
                });
            }
        }
        Ok(ch)
    }
}

/// Hash of the transition table alone; the channel's name does not count.
pub fn channel_hash(ch: &Dmc) -> String {
    content_hash(&ch.rows())
}

pub fn load_channel(path: &Path) -> Result<(ChannelFile, Dmc), FileError> {
    let file: ChannelFile = read_json(path)?;
    let ch = file.to_dmc().map_err(|source| FileError::Channel {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((file, ch))
}

pub fn load_codebook(path: &Path) -> Result<Codebook, FileError> {
    let text = fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| FileError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Noiseless,
    Noisy,
}

/// Session configuration file. Paths are resolved relative to the file itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionFile {
    pub mode: Mode,
    /// Forward channel file.
    #[serde(alias = "channel")]
    pub forward: PathBuf,
    /// Backward channel file; required in noisy mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<PathBuf>,
    pub code: PathBuf,
    #[serde(default)]
    pub gamma: GammaSchedule,
    #[serde(default)]
    pub disprover_policy: DisproverPolicy,
}

impl SessionFile {
    /// Load the referenced channel and code files.
    pub fn load(path: &Path) -> Result<LoadedSession, FileError> {
        let file: SessionFile = read_json(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let (forward_file, forward) = load_channel(&base.join(&file.forward))?;
        let backward = match (&file.mode, &file.backward) {
            (Mode::Noisy, Some(b)) => Some(load_channel(&base.join(b))?),
            (Mode::Noisy, None) => {
                return Err(FileError::Config {
                    path: path.to_path_buf(),
                    message: "noisy mode needs a \"backward\" channel".into(),
                })
            }
            (Mode::Noiseless, _) => None,
        };
        let code = load_codebook(&base.join(&file.code))?;
        Ok(LoadedSession {
            file,
            forward_name: forward_file.name,
            forward,
            backward: backward.map(|(f, ch)| (f.name, ch)),
            code,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSession {
    pub file: SessionFile,
    pub forward_name: String,
    pub forward: Dmc,
    pub backward: Option<(String, Dmc)>,
    pub code: Codebook,
}

/// Content hashes tying derived artifacts back to their inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: Mode,
    pub forward_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward_hash: Option<String>,
    pub code_hash: String,
    pub n: usize,
    pub gamma: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_file_roundtrip_and_checks() {
        let text = r#"{"name":"bec","inputs":2,"outputs":3,"rows":[[0.7,0.3,0],[0.0,0.3,0.7]],"output_labels":["0","e","1"]}"#;
        let f: ChannelFile = serde_json::from_str(text).unwrap();
        let ch = f.to_dmc().unwrap();
        assert_eq!(ch, Dmc::bec(0.3).unwrap());
        assert_eq!(ch.prob(0, 2), 0.0);

        let wrong: ChannelFile = serde_json::from_str(r#"{"name":"x","inputs":3,"outputs":2,"rows":[[1,0],[0,1]]}"#).unwrap();
        assert!(matches!(wrong.to_dmc(), Err(ChannelError::SizeMismatch { what: "input", .. })));
    }

    #[test]
    fn stable_json_sorts_keys() {
        let f = ChannelFile::from_dmc("z", &Dmc::z_channel(0.5).unwrap());
        let s = to_stable_json(&f);
        let inputs = s.find("\"inputs\"").unwrap();
        let name = s.find("\"name\"").unwrap();
        let rows = s.find("\"rows\"").unwrap();
        assert!(inputs < name && name < rows);
        assert_eq!(content_hash(&f), content_hash(&f.clone()));
        assert_ne!(
            channel_hash(&Dmc::z_channel(0.5).unwrap()),
            channel_hash(&Dmc::z_channel(0.4).unwrap())
        );
    }

    #[test]
    fn session_file_loads_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write_text(&p.join("f.json"), &to_stable_json(&ChannelFile::from_dmc("f", &Dmc::bec(0.3).unwrap()))).unwrap();
        write_text(&p.join("b.json"), &to_stable_json(&ChannelFile::from_dmc("b", &Dmc::z_channel(0.4).unwrap()))).unwrap();
        write_text(&p.join("c.json"), r#"{"n":1,"messages":2,"codewords":[[0],[1]]}"#).unwrap();
        write_text(
            &p.join("s.json"),
            r#"{"mode":"noisy","forward":"f.json","backward":"b.json","code":"c.json","gamma":2,"disprover_policy":"max_prob"}"#,
        )
        .unwrap();
        let s = SessionFile::load(&p.join("s.json")).unwrap();
        assert_eq!(s.file.gamma, GammaSchedule::Fixed(2));
        assert_eq!(s.backward.as_ref().unwrap().1, Dmc::z_channel(0.4).unwrap());

        write_text(&p.join("bad.json"), r#"{"mode":"noisy","forward":"f.json","code":"c.json"}"#).unwrap();
        assert!(matches!(SessionFile::load(&p.join("bad.json")), Err(FileError::Config { .. })));
    }
}
