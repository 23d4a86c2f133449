//! JSON encodings.
//!
//! * set partitions: array of blocks in canonical order, e.g. `[[1],[2,3]]`
//! * compositions: array of parts
//! * trees: `{"block":[1,2,3],"children":[…]}`
//! * split tables: `{"n_max":4,"entries":[{"n":2,"parts":[1,1],"p":1.0},…]}`

use serde::{Deserialize, Serialize};
use spinal_core::{Composition, FragTree, Label, OrderedPartition, PnTable, SetPartition};

use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJson {
    pub block: Vec<Label>,
    #[serde(default)]
    pub children: Vec<TreeJson>,
}

impl From<&FragTree> for TreeJson {
    fn from(t: &FragTree) -> Self {
        TreeJson {
            block: t.block().to_vec(),
            children: t.children().iter().map(TreeJson::from).collect(),
        }
    }
}

impl TryFrom<&TreeJson> for FragTree {
    type Error = Error;

    fn try_from(t: &TreeJson) -> Result<Self, Error> {
        let children = t
            .children
            .iter()
            .map(FragTree::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FragTree::from_parts(t.block.clone(), children)?)
    }
}

pub fn partition_json(p: &SetPartition) -> Vec<Vec<Label>> {
    p.blocks().to_vec()
}

pub fn ordered_json(p: &OrderedPartition) -> Vec<Vec<Label>> {
    p.blocks().to_vec()
}

pub fn partition_from_json(blocks: Vec<Vec<Label>>) -> Result<SetPartition, Error> {
    Ok(SetPartition::canonicalize(blocks)?)
}

pub fn composition_json(c: &Composition) -> Vec<usize> {
    c.parts().to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub n: usize,
    pub parts: Vec<usize>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableJson {
    pub n_max: usize,
    pub entries: Vec<TableEntry>,
}

impl From<&PnTable> for TableJson {
    fn from(t: &PnTable) -> Self {
        TableJson {
            n_max: t.n_max(),
            entries: t
                .entries()
                .map(|((n, parts), p)| TableEntry {
                    n: *n,
                    parts: parts.clone(),
                    p: *p,
                })
                .collect(),
        }
    }
}

impl TryFrom<TableJson> for PnTable {
    type Error = Error;

    fn try_from(t: TableJson) -> Result<Self, Error> {
        Ok(PnTable::from_entries(
            t.n_max,
            t.entries.into_iter().map(|e| (e.n, e.parts, e.p)),
        )?)
    }
}

pub fn table_to_string(t: &PnTable) -> String {
    serde_json::to_string(&TableJson::from(t)).expect("table serialises")
}

pub fn table_from_str(s: &str) -> Result<PnTable, Error> {
    let json: TableJson = serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))?;
    PnTable::try_from(json)
}

/// Reads one tree from a JSON value: either a bare tree or a record with a
/// `"tree"` field, as written by `sample-tree`.
pub fn tree_from_value(v: &serde_json::Value) -> Result<Option<FragTree>, Error> {
    let inner = match v.get("tree") {
        Some(t) => t,
        None if v.get("type").is_some() => return Ok(None),
        None => v,
    };
    let json: TreeJson =
        serde_json::from_value(inner.clone()).map_err(|e| Error::Input(e.to_string()))?;
    FragTree::try_from(&json).map(Some)
}

/// `x` with 15 significant digits.
pub fn sig15(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.14e}")
    }
}
