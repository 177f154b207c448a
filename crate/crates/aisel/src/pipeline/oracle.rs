//! Oracle labeling: a deterministic analytic rule on image content, a
//! checkpoint-backed classifier, or an external command speaking a
//! line-oriented wire protocol (`width height p1 ... pN` in, one integer
//! class out).

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::blobs::{mass_label, DEFAULT_TAU_MASS};
use crate::gin::Image;
use crate::nn::load_network;
use crate::uncertainty::{predict, Classifier};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Fixed-threshold bright-mass rule, independent of any learned model.
    AnalyticBlob {
        #[serde(default = "default_tau")]
        tau_mass: f64,
    },
    /// Argmax of a classifier loaded from a checkpoint.
    ClassifierBacked { checkpoint: PathBuf },
    /// One request per line on the child's stdin, one integer class back.
    ExternalCommand { command: Vec<String> },
}

fn default_tau() -> f64 {
    DEFAULT_TAU_MASS
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec::AnalyticBlob {
            tau_mass: DEFAULT_TAU_MASS,
        }
    }
}

pub fn oracle_label(spec: &OracleSpec, images: &[Image]) -> Result<Vec<usize>> {
    match spec {
        OracleSpec::AnalyticBlob { tau_mass } => {
            Ok(images.iter().map(|img| mass_label(img, *tau_mass)).collect())
        }
        OracleSpec::ClassifierBacked { checkpoint } => {
            let net = load_network(checkpoint)?;
            let classes = net.out_dim();
            let clf = Classifier { net, classes };
            predict(&clf, images)
        }
        OracleSpec::ExternalCommand { command } => label_by_command(command, images),
    }
}

fn label_by_command(command: &[String], images: &[Image]) -> Result<Vec<usize>> {
    if command.is_empty() {
        return Err(Error::Oracle("empty external command".into()));
    }
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Oracle(format!("spawn {:?}: {e}", command[0])))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");
    let mut reader = BufReader::new(stdout);

    let mut labels = Vec::with_capacity(images.len());
    let result = (|| -> Result<()> {
        for img in images {
            let mut line = format!("{} {}", img.width, img.height);
            for p in &img.pixels {
                line.push(' ');
                line.push_str(&p.to_string());
            }
            line.push('\n');
            stdin
                .write_all(line.as_bytes())
                .map_err(|e| Error::Oracle(format!("write to oracle: {e}")))?;
            stdin.flush().map_err(|e| Error::Oracle(format!("flush: {e}")))?;
            let mut reply = String::new();
            let n = reader
                .read_line(&mut reply)
                .map_err(|e| Error::Oracle(format!("read from oracle: {e}")))?;
            if n == 0 {
                return Err(Error::Oracle("oracle closed its output early".into()));
            }
            let label: usize = reply
                .trim()
                .parse()
                .map_err(|_| Error::Oracle(format!("non-integer reply {:?}", reply.trim())))?;
            labels.push(label);
        }
        Ok(())
    })();
    drop(stdin);
    let status = child.wait().map_err(|e| Error::Oracle(format!("wait: {e}")))?;
    result?;
    if !status.success() {
        return Err(Error::Oracle(format!("oracle exited with {status}")));
    }
    Ok(labels)
}
