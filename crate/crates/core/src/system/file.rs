//! TOML system files.
//!
//! ```toml
//! n = 2
//! seed = 1          # optional, also tol, eps_hyp, samples
//!
//! [lambda]
//! l1 = "u2"
//! l2 = "u1"
//!
//! [domain]
//! u1 = [1.5, 3.0]
//! u2 = [0.2, 1.2]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiagonalSystem, SystemError};
use crate::expr::parse;

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub lambda: BTreeMap<String, String>,
    pub domain: BTreeMap<String, [f64; 2]>,
    pub tol: Option<f64>,
    pub eps_hyp: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl SystemFile {
    pub fn from_toml(text: &str) -> Result<Self, SystemError> {
        toml::from_str(text).map_err(|e| SystemError::File(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, SystemError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SystemError::File(format!("{}: {e}", path.display())))?;
        SystemFile::from_toml(&text)
    }

    pub fn into_system(self) -> Result<DiagonalSystem, SystemError> {
        let n = self.n;
        if n < 2 {
            return Err(SystemError::Dimension(n));
        }
        let expect = |what: &'static str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(SystemError::Count {
                    what,
                    expected: n,
                    got,
                })
            }
        };
        expect("lambda entries", self.lambda.len())?;
        expect("domain entries", self.domain.len())?;
        let mut lambdas = Vec::with_capacity(n);
        let mut domain = Vec::with_capacity(n);
        for k in 1..=n {
            let text = self
                .lambda
                .get(&format!("l{k}"))
                .ok_or_else(|| SystemError::File(format!("missing lambda.l{k}")))?;
            lambdas.push(parse(text, n).map_err(|source| SystemError::Parse { index: k, source })?);
            let [lo, hi] = *self
                .domain
                .get(&format!("u{k}"))
                .ok_or_else(|| SystemError::File(format!("missing domain.u{k}")))?;
            domain.push((lo, hi));
        }
        let mut sys = DiagonalSystem::new(lambdas, domain)?;
        if let Some(t) = self.tol {
            sys.tol = t;
        }
        if let Some(e) = self.eps_hyp {
            sys.eps_hyp = e;
        }
        if let Some(s) = self.samples {
            sys.samples = s;
        }
        if let Some(s) = self.seed {
            sys.seed = s;
        }
        Ok(sys)
    }
}

impl DiagonalSystem {
    pub fn from_toml(text: &str) -> Result<Self, SystemError> {
        SystemFile::from_toml(text)?.into_system()
    }

    pub fn load(path: &Path) -> Result<Self, SystemError> {
        SystemFile::read(path)?.into_system()
    }
}
