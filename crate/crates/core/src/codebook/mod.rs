//! Recursive random Gilbert-Varshamov (RGV) codebooks.
//!
//! Codewords are generated source type by source type, in lexicographic
//! order. Each draw is uniform over the sequences of the assigned type class
//! that are farther than the applicable threshold from every earlier codeword.

mod census;
mod config;
mod construct;
mod counting;
mod format;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use census::{joint_census, marginal_census, Census, JointCensus};
pub use config::{exceeds, AssignmentRule, CodeConfig, COMPARE_TOLERANCE};
pub use construct::{
    construct, construct_traced, verify_min_distance, ConstructMode, ConstructionTrace,
    Constructor, MinDistanceReport, Violation, ENUMERATE_LIMIT, REJECTION_ATTEMPTS,
};
pub use counting::{
    discarded_count, discarded_count_by_representative, feasibility_check, ClassFeasibility,
    FeasibilityReport,
};

use crate::error::{Error, Result};
use crate::types::{type_class_sequences, type_of, Symbol};

/// Parameters recorded alongside a codebook.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookHeader {
    pub k: u64,
    pub n: u64,
    pub source_alphabet: usize,
    pub input_alphabet: usize,
    pub palette: Vec<Vec<u64>>,
    pub assignment: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub delta: f64,
    pub seed: Option<u64>,
    pub distance: String,
}

impl CodebookHeader {
    pub fn from_config(cfg: &CodeConfig, seed: Option<u64>) -> Self {
        CodebookHeader {
            k: cfg.k(),
            n: cfg.n(),
            source_alphabet: cfg.source().p_v.len(),
            input_alphabet: cfg.input().size(),
            palette: cfg.palette().iter().map(|t| t.counts().to_vec()).collect(),
            assignment: cfg.assignment().to_vec(),
            thresholds: cfg.thresholds().to_vec(),
            delta: cfg.delta(),
            seed,
            distance: cfg.distance().name().to_string(),
        }
    }
}

/// One message and its codeword.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookEntry {
    pub message: Vec<Symbol>,
    pub codeword: Vec<Symbol>,
    pub type_index: usize,
}

/// Mapping from source sequences to channel-input sequences, grouped by
/// source type class.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    header: CodebookHeader,
    entries: Vec<CodebookEntry>,
    index: HashMap<Vec<Symbol>, usize>,
}

impl Codebook {
    /// Builds a codebook from codewords listed in message order.
    pub fn from_codewords(
        cfg: &CodeConfig,
        codewords: Vec<Vec<Symbol>>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let messages = message_order(cfg);
        if messages.len() != codewords.len() {
            return Err(Error::LengthMismatch(codewords.len(), messages.len()));
        }
        let entries = messages
            .into_iter()
            .zip(codewords)
            .map(|((type_index, message), codeword)| CodebookEntry {
                message,
                codeword,
                type_index,
            })
            .collect();
        let cb = Codebook::from_parts(CodebookHeader::from_config(cfg, seed), entries)?;
        cb.check_types(cfg)?;
        Ok(cb)
    }

    pub(crate) fn from_parts(header: CodebookHeader, entries: Vec<CodebookEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (m, e) in entries.iter().enumerate() {
            if e.message.len() as u64 != header.k || e.codeword.len() as u64 != header.n {
                return Err(Error::LengthMismatch(e.codeword.len(), header.n as usize));
            }
            if index.insert(e.message.clone(), m).is_some() {
                return Err(Error::InvalidConfig(format!("message {m} listed twice")));
            }
        }
        Ok(Codebook {
            header,
            entries,
            index,
        })
    }

    /// Checks that every codeword lies in the type class assigned to its message.
    pub fn check_types(&self, cfg: &CodeConfig) -> Result<()> {
        for (m, e) in self.entries.iter().enumerate() {
            let t = type_of(&e.codeword, cfg.input())?;
            if &t != cfg.codeword_type(e.type_index) {
                return Err(Error::InvalidConfig(format!(
                    "codeword of message {m} has type {:?}, expected {:?}",
                    t.counts(),
                    cfg.codeword_type(e.type_index).counts()
                )));
            }
        }
        Ok(())
    }

    pub fn header(&self) -> &CodebookHeader {
        &self.header
    }

    pub fn entries(&self) -> &[CodebookEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position of `message` in the fixed message order.
    pub fn message_index(&self, message: &[Symbol]) -> Option<usize> {
        self.index.get(message).copied()
    }

    pub fn encode(&self, message: &[Symbol]) -> Option<&[Symbol]> {
        self.message_index(message)
            .map(|m| self.entries[m].codeword.as_slice())
    }
}

/// All messages as `(source type index, sequence)`, types lexicographic and
/// sequences lexicographic within a type.
pub fn message_order(cfg: &CodeConfig) -> Vec<(usize, Vec<Symbol>)> {
    cfg.source_types()
        .iter()
        .enumerate()
        .flat_map(|(i, t)| type_class_sequences(t).into_iter().map(move |s| (i, s)))
        .collect()
}

#[cfg(test)]
mod tests;
