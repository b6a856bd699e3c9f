//! JSON file formats. Ids are 1-based; values are integers or `"p/q"` strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{make_instance, Allocation, Instance, ItemKind, OrderedInstance};
use crate::value::WireRational;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub kind: ItemKind,
    pub n: usize,
    pub m: usize,
    pub valuations: Vec<Vec<WireRational>>,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            kind: inst.kind(),
            n: inst.n(),
            m: inst.m(),
            valuations: inst
                .valuations()
                .iter()
                .map(|r| r.iter().cloned().map(WireRational).collect())
                .collect(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        if self.valuations.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "n = {} but {} rows",
                self.n,
                self.valuations.len()
            )));
        }
        if let Some(row) = self.valuations.iter().find(|r| r.len() != self.m) {
            return Err(Error::ShapeMismatch(format!(
                "m = {} but a row has {} values",
                self.m,
                row.len()
            )));
        }
        if self.n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let rows = self
            .valuations
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.0).collect())
            .collect();
        make_instance(self.kind, rows)
    }
}

/// An ordered instance plus, per agent, the original item at each position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderedFile {
    #[serde(flatten)]
    pub instance: InstanceFile,
    pub source_ranks: Vec<Vec<usize>>,
}

impl From<&OrderedInstance> for OrderedFile {
    fn from(ord: &OrderedInstance) -> Self {
        OrderedFile {
            instance: InstanceFile::from(&ord.instance),
            source_ranks: ord.source_ranks.clone(),
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(inst)).expect("instances serialize")
}

pub fn parse_allocation(text: &str) -> Result<Allocation> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}
