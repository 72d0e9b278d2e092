//! The world interchange format and its inverse.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{CellState, ElementRef, PlacedLocation, PlacedObject, WorldGrid};
use super::{GameWorld, GenerationConfig, Provenance};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("world json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed world: {0}")]
    Malformed(String),
}

#[derive(Serialize, Deserialize)]
struct ExportObject {
    id: String,
    name: String,
    #[serde(default)]
    is_container: bool,
    #[serde(default)]
    contained: Vec<ElementRef>,
}

#[derive(Serialize, Deserialize)]
struct ExportCell {
    index: usize,
    x: usize,
    y: usize,
    state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_filler: Option<bool>,
    #[serde(default)]
    characters: Vec<ElementRef>,
    #[serde(default)]
    objects: Vec<ExportObject>,
}

#[derive(Serialize, Deserialize)]
struct Export {
    width: usize,
    height: usize,
    cells: Vec<ExportCell>,
    /// Cell-index pairs, lower index first.
    exits: Vec<[usize; 2]>,
    config: GenerationConfig,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    created_at: Option<String>,
}

impl GameWorld {
    /// Interchange JSON: dimensions, cells, exit pairs, config and provenance.
    pub fn export_json(&self) -> String {
        let g = &self.grid;
        let cells = g
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (x, y) = g.coords(i);
                let loc = c.location();
                ExportCell {
                    index: i,
                    x,
                    y,
                    state: match c.state {
                        CellState::Blocked => "blocked",
                        CellState::Empty => "empty",
                        CellState::Filled { .. } => "filled",
                    }
                    .to_string(),
                    location_id: loc.map(|l| l.id.clone()),
                    location_name: loc.map(|l| l.name.clone()),
                    is_filler: loc.map(|l| l.is_filler),
                    characters: loc.map(|l| l.characters.clone()).unwrap_or_default(),
                    objects: loc
                        .map(|l| {
                            l.objects
                                .iter()
                                .map(|o| ExportObject {
                                    id: o.id.clone(),
                                    name: o.name.clone(),
                                    is_container: o.is_container,
                                    contained: o.contents.clone(),
                                })
                                .collect()
                        })
                        .unwrap_or_default(),
                }
            })
            .collect();
        let export = Export {
            width: g.width,
            height: g.height,
            cells,
            exits: g.exit_pairs(),
            config: self.config.clone(),
            provenance: self.provenance.clone(),
            created_at: self.created_at.clone(),
        };
        serde_json::to_string_pretty(&export).expect("world serializes")
    }

    /// Parse the output of [`GameWorld::export_json`].
    pub fn from_export_json(json: &str) -> Result<GameWorld, ExportError> {
        let export: Export = serde_json::from_str(json)?;
        let bad = |m: String| Err(ExportError::Malformed(m));
        let mut grid = WorldGrid::new(export.width, export.height);
        if export.cells.len() != grid.len() {
            return bad(format!(
                "{} cells for a {}x{} grid",
                export.cells.len(),
                export.width,
                export.height
            ));
        }
        for cell in export.cells {
            if cell.index >= grid.len() {
                return bad(format!("cell index {} out of range", cell.index));
            }
            grid.cells[cell.index].state = match cell.state.as_str() {
                "blocked" => CellState::Blocked,
                "empty" => CellState::Empty,
                "filled" => {
                    let (Some(id), Some(name)) = (cell.location_id, cell.location_name) else {
                        return bad(format!("filled cell {} has no location", cell.index));
                    };
                    CellState::Filled {
                        location: PlacedLocation {
                            id,
                            name,
                            is_filler: cell.is_filler.unwrap_or(false),
                            characters: cell.characters,
                            objects: cell
                                .objects
                                .into_iter()
                                .map(|o| PlacedObject {
                                    id: o.id,
                                    name: o.name,
                                    is_container: o.is_container,
                                    contents: o.contained,
                                })
                                .collect(),
                        },
                    }
                }
                other => return bad(format!("unknown cell state `{other}`")),
            };
        }
        for [a, b] in export.exits {
            let Some(d) = (a < grid.len()).then(|| grid.direction_between(a, b)).flatten() else {
                return bad(format!("exit {a}-{b} does not join adjacent cells"));
            };
            grid.set_exit(a, d, true);
        }
        Ok(GameWorld {
            grid,
            config: export.config,
            provenance: export.provenance,
            created_at: export.created_at,
        })
    }
}
