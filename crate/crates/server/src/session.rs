use std::path::Path;
use std::sync::Arc;

use lowcode_core::dsl::BlockGraph;
use lowcode_core::Dataset;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nl,
    Keyword,
}

/// One user's workbench: a dataset, the canvas and the palette filter.
#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub dataset: Arc<Dataset>,
    pub graph: BlockGraph,
    pub palette_filter: Option<Vec<String>>,
    pub mode: Mode,
    pub seed: u64,
}

/// On-disk form of a session; the dataset is stored by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub dataset: String,
    pub graph: serde_json::Value,
    pub palette_filter: Option<Vec<String>>,
    pub mode: Mode,
    pub seed: u64,
}

impl Session {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id.clone(),
            dataset: self.dataset.name.clone(),
            graph: self.graph.to_wire(),
            palette_filter: self.palette_filter.clone(),
            mode: self.mode,
            seed: self.seed,
        }
    }
}

pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{}.json.tmp", snap.id));
    std::fs::write(
        &tmp,
        serde_json::to_vec_pretty(snap).map_err(std::io::Error::other)?,
    )?;
    std::fs::rename(tmp, dir.join(format!("{}.json", snap.id)))
}

/// Snapshots in `dir`, ordered by file name. Unreadable files are skipped
/// with a warning.
pub fn read_snapshots(dir: &Path) -> Vec<Snapshot> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .filter_map(|p| {
            let parsed = std::fs::read(&p)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice(&b).map_err(|e| e.to_string()));
            parsed
                .map_err(|e| log::warn!("skipping snapshot {}: {e}", p.display()))
                .ok()
        })
        .collect()
}
