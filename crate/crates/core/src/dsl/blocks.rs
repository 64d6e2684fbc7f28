//! The canvas projection of a pipeline: blocks with positions, and the chain
//! of block ids attached below the Start block. Blocks outside the chain are
//! inert.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ast::{Arg, ArgKey, Invocation, PipelineAst};
use crate::registry::literal_json;

const ROW_HEIGHT: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: String,
    pub invocation: Invocation,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockGraph {
    pub blocks: Vec<Block>,
    pub chain: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlockGraphError {
    #[error("chain references unknown block '{0}'")]
    DanglingId(String),
    #[error("block '{0}' appears more than once in the chain")]
    RepeatedChainId(String),
    #[error("duplicate block id '{0}'")]
    DuplicateBlockId(String),
    #[error("malformed block graph: {0}")]
    Malformed(String),
}

impl BlockGraph {
    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn detached(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| !self.chain.contains(&b.id))
    }

    pub fn check(&self) -> Result<(), BlockGraphError> {
        let mut ids = HashSet::new();
        for b in &self.blocks {
            if !ids.insert(b.id.as_str()) {
                return Err(BlockGraphError::DuplicateBlockId(b.id.clone()));
            }
        }
        let mut seen = HashSet::new();
        for id in &self.chain {
            if !ids.contains(id.as_str()) {
                return Err(BlockGraphError::DanglingId(id.clone()));
            }
            if !seen.insert(id.as_str()) {
                return Err(BlockGraphError::RepeatedChainId(id.clone()));
            }
        }
        Ok(())
    }

    fn fresh_id(&self, taken: &HashSet<String>) -> String {
        let mut n = self.blocks.len() + 1;
        loop {
            let id = format!("b{n}");
            if !taken.contains(&id) {
                return id;
            }
            n += 1;
        }
    }

    pub fn to_wire(&self) -> serde_json::Value {
        serde_json::to_value(WireGraph::from(self)).expect("wire graph serializes")
    }

    pub fn from_wire(value: &serde_json::Value) -> Result<BlockGraph, BlockGraphError> {
        let wire: WireGraph = serde_json::from_value(value.clone())
            .map_err(|e| BlockGraphError::Malformed(e.to_string()))?;
        wire.try_into()
    }
}

/// Active pipeline of a graph: the chained blocks in chain order.
pub fn blocks_to_pipeline(graph: &BlockGraph) -> Result<PipelineAst, BlockGraphError> {
    graph.check()?;
    let steps = graph
        .chain
        .iter()
        .map(|id| graph.block(id).map(|b| b.invocation.clone()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| BlockGraphError::Malformed("chain/block mismatch".into()))?;
    Ok(PipelineAst { steps })
}

/// Rebuilds the chain so it spells `ast`, keeping detached blocks untouched.
///
/// A chained block keeps its id and position when the step at the same chain
/// position uses the same operator (its arguments are updated in place). Other
/// steps get fresh ids, placed below the tail of the chain.
pub fn pipeline_to_blocks(ast: &PipelineAst, existing: &BlockGraph) -> BlockGraph {
    let old_chain: Vec<&Block> = existing
        .chain
        .iter()
        .filter_map(|id| existing.block(id))
        .collect();
    let mut taken: HashSet<String> = existing.blocks.iter().map(|b| b.id.clone()).collect();
    let mut chained = Vec::with_capacity(ast.steps.len());
    let (mut tail_x, mut tail_y) = (0.0, 0.0);
    for (i, step) in ast.steps.iter().enumerate() {
        let block = match old_chain.get(i) {
            Some(old) if old.invocation.operator == step.operator => Block {
                invocation: step.clone(),
                ..(*old).clone()
            },
            _ => {
                let id = existing.fresh_id(&taken);
                taken.insert(id.clone());
                Block {
                    id,
                    invocation: step.clone(),
                    x: tail_x,
                    y: tail_y + ROW_HEIGHT,
                }
            }
        };
        tail_x = block.x;
        tail_y = block.y;
        chained.push(block);
    }

    let chain: Vec<String> = chained.iter().map(|b| b.id.clone()).collect();
    // keep the original block order for surviving blocks, then new ones
    let mut blocks: Vec<Block> = Vec::with_capacity(existing.blocks.len() + chained.len());
    for b in &existing.blocks {
        if let Some(updated) = chained.iter().find(|c| c.id == b.id) {
            blocks.push(updated.clone());
        } else if !existing.chain.contains(&b.id) {
            blocks.push(b.clone());
        }
    }
    for c in chained {
        if !blocks.iter().any(|b| b.id == c.id) {
            blocks.push(c);
        }
    }
    BlockGraph { blocks, chain }
}

#[derive(Serialize, Deserialize)]
struct WireArg {
    name: String,
    #[serde(with = "literal_json")]
    value: super::ArgValue,
}

#[derive(Serialize, Deserialize)]
struct WireBlock {
    id: String,
    operator: String,
    #[serde(default)]
    args: Vec<WireArg>,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
}

#[derive(Serialize, Deserialize)]
struct WireGraph {
    #[serde(default)]
    blocks: Vec<WireBlock>,
    #[serde(default)]
    chain: Vec<String>,
}

impl From<&BlockGraph> for WireGraph {
    fn from(g: &BlockGraph) -> Self {
        WireGraph {
            blocks: g
                .blocks
                .iter()
                .map(|b| WireBlock {
                    id: b.id.clone(),
                    operator: b.invocation.operator.clone(),
                    args: b
                        .invocation
                        .args
                        .iter()
                        .map(|a| WireArg {
                            name: a.key.to_string(),
                            value: a.value.clone(),
                        })
                        .collect(),
                    x: b.x,
                    y: b.y,
                })
                .collect(),
            chain: g.chain.clone(),
        }
    }
}

impl TryFrom<WireGraph> for BlockGraph {
    type Error = BlockGraphError;

    fn try_from(w: WireGraph) -> Result<Self, Self::Error> {
        let blocks = w
            .blocks
            .into_iter()
            .map(|b| Block {
                id: b.id,
                invocation: Invocation {
                    operator: b.operator,
                    args: b
                        .args
                        .into_iter()
                        .map(|a| Arg {
                            key: ArgKey::from_wire(&a.name),
                            value: a.value,
                        })
                        .collect(),
                },
                x: b.x,
                y: b.y,
            })
            .collect();
        let graph = BlockGraph {
            blocks,
            chain: w.chain,
        };
        graph.check()?;
        Ok(graph)
    }
}
