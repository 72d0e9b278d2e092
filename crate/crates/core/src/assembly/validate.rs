use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::grid::{CellState, Direction};
use super::GameWorld;
use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldIssueCode {
    CellCountMismatch,
    DuplicateLocation,
    AsymmetricExit,
    ExitOffGrid,
    ExitToUnfilledCell,
    BlockedCellWithExits,
    EmptyCellWithExits,
    CenterNotFilled,
    Unreachable,
    ContentsOnNonContainer,
    DuplicateWithinLocation,
    TooManyLocations,
    UnknownElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldIssue {
    pub code: WorldIssueCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldReport {
    pub issues: Vec<WorldIssue>,
}

impl WorldReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, code: WorldIssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }
}

/// Check grid structure, content rules and reachability from the centre.
/// With a corpus, element ids must also resolve.
pub fn validate_world(world: &GameWorld, corpus: Option<&Corpus>) -> WorldReport {
    let mut issues = Vec::new();
    let mut push = |code, cell: Option<usize>, message: String| issues.push(WorldIssue { code, cell, message });
    let g = &world.grid;
    if g.cells.len() != g.width * g.height {
        push(
            WorldIssueCode::CellCountMismatch,
            None,
            format!("{} cells for a {}x{} grid", g.cells.len(), g.width, g.height),
        );
        return WorldReport { issues };
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, cell) in g.cells.iter().enumerate() {
        for d in Direction::ALL {
            if !cell.exits[d.index()] {
                continue;
            }
            match g.neighbor(i, d) {
                None => push(
                    WorldIssueCode::ExitOffGrid,
                    Some(i),
                    format!("cell {i} exit {d:?} leaves the grid"),
                ),
                Some(j) => {
                    if !g.cells[j].exits[d.opposite().index()] {
                        push(
                            WorldIssueCode::AsymmetricExit,
                            Some(i),
                            format!("exit {i}->{j} has no return"),
                        );
                    }
                    if cell.is_filled() && !g.cells[j].is_filled() {
                        push(
                            WorldIssueCode::ExitToUnfilledCell,
                            Some(i),
                            format!("cell {i} opens onto unfilled cell {j}"),
                        );
                    }
                }
            }
        }
        match &cell.state {
            CellState::Blocked if cell.exit_count() > 0 => push(
                WorldIssueCode::BlockedCellWithExits,
                Some(i),
                format!("blocked cell {i} has exits"),
            ),
            CellState::Empty if cell.exit_count() > 0 => push(
                WorldIssueCode::EmptyCellWithExits,
                Some(i),
                format!("empty cell {i} has exits"),
            ),
            CellState::Filled { location } => {
                if !location.is_filler {
                    if let Some(prev) = seen.insert(&location.id, i) {
                        push(
                            WorldIssueCode::DuplicateLocation,
                            Some(i),
                            format!("location `{}` placed in cells {prev} and {i}", location.name),
                        );
                    }
                }
                let mut ids = HashSet::new();
                for c in &location.characters {
                    if !ids.insert(("c", c.id.as_str())) {
                        push(
                            WorldIssueCode::DuplicateWithinLocation,
                            Some(i),
                            format!("character `{}` repeated in cell {i}", c.name),
                        );
                    }
                }
                for o in &location.objects {
                    if !ids.insert(("o", o.id.as_str())) {
                        push(
                            WorldIssueCode::DuplicateWithinLocation,
                            Some(i),
                            format!("object `{}` repeated in cell {i}", o.name),
                        );
                    }
                    let container = match corpus.and_then(|c| c.object_by_id(&o.id)) {
                        Some(card) => card.is_container(),
                        None => o.is_container,
                    };
                    if !o.contents.is_empty() && !container {
                        push(
                            WorldIssueCode::ContentsOnNonContainer,
                            Some(i),
                            format!("`{}` in cell {i} holds objects but is not a container", o.name),
                        );
                    }
                }
                if let Some(corpus) = corpus {
                    let mut unknown = Vec::new();
                    if corpus.location_by_id(&location.id).is_none() {
                        unknown.push(location.id.as_str());
                    }
                    unknown.extend(
                        location
                            .characters
                            .iter()
                            .filter(|c| corpus.character_by_id(&c.id).is_none())
                            .map(|c| c.id.as_str()),
                    );
                    for o in &location.objects {
                        if corpus.object_by_id(&o.id).is_none() {
                            unknown.push(&o.id);
                        }
                        unknown.extend(
                            o.contents
                                .iter()
                                .filter(|c| corpus.object_by_id(&c.id).is_none())
                                .map(|c| c.id.as_str()),
                        );
                    }
                    for id in unknown {
                        push(
                            WorldIssueCode::UnknownElement,
                            Some(i),
                            format!("cell {i} references unknown `{id}`"),
                        );
                    }
                }
            }
            _ => {}
        }
    }

    let filled = g.filled_count();
    if filled > world.config.max_locations {
        push(
            WorldIssueCode::TooManyLocations,
            None,
            format!("{filled} locations exceed the limit of {}", world.config.max_locations),
        );
    }
    if filled > 0 {
        let center = g.center();
        if !g.cells[center].is_filled() {
            push(
                WorldIssueCode::CenterNotFilled,
                Some(center),
                "centre cell is not filled".into(),
            );
        } else {
            let mut reached = vec![false; g.cells.len()];
            reached[center] = true;
            let mut queue = VecDeque::from([center]);
            while let Some(i) = queue.pop_front() {
                for d in Direction::ALL {
                    if !g.cells[i].exits[d.index()] {
                        continue;
                    }
                    if let Some(j) = g.neighbor(i, d) {
                        if !reached[j] && g.cells[j].is_filled() && g.cells[j].exits[d.opposite().index()] {
                            reached[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
            for (i, _) in g.filled() {
                if !reached[i] {
                    push(
                        WorldIssueCode::Unreachable,
                        Some(i),
                        format!("cell {i} is not reachable from the centre"),
                    );
                }
            }
        }
    }
    WorldReport { issues }
}

#[cfg(test)]
mod tests {
    use super::super::{GenerationConfig, PlacedLocation, Provenance, WorldGrid};
    use super::*;
    use std::collections::BTreeMap;

    fn loc(id: &str, filler: bool) -> CellState {
        CellState::Filled {
            location: PlacedLocation {
                id: id.into(),
                name: id.into(),
                is_filler: filler,
                characters: vec![],
                objects: vec![],
            },
        }
    }

    fn world(grid: WorldGrid) -> GameWorld {
        GameWorld {
            grid,
            config: GenerationConfig {
                grid_width: 3,
                grid_height: 3,
                ..GenerationConfig::default()
            },
            provenance: Provenance {
                scorers: BTreeMap::new(),
                corpus_hash: String::new(),
            },
            created_at: None,
        }
    }

    #[test]
    fn duplicate_location_is_reported() {
        let mut g = WorldGrid::new(3, 3);
        g.cells[4].state = loc("inn", false);
        g.cells[5].state = loc("inn", false);
        g.set_exit(4, Direction::East, true);
        let report = validate_world(&world(g), None);
        assert!(report.has(WorldIssueCode::DuplicateLocation));
        assert_eq!(report.issues.len(), 1);
    }

    #[test]
    fn fillers_may_repeat() {
        let mut g = WorldGrid::new(3, 3);
        g.cells[4].state = loc("inn", false);
        g.cells[5].state = loc("closet", true);
        g.cells[3].state = loc("closet", true);
        g.set_exit(4, Direction::East, true);
        g.set_exit(4, Direction::West, true);
        assert!(validate_world(&world(g), None).is_clean());
    }

    #[test]
    fn isolated_cell_is_unreachable() {
        let mut g = WorldGrid::new(3, 3);
        g.cells[4].state = loc("inn", false);
        g.cells[0].state = loc("cave", false);
        let report = validate_world(&world(g), None);
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].code, WorldIssueCode::Unreachable);
        assert_eq!(report.issues[0].cell, Some(0));
    }

    #[test]
    fn structural_exit_problems() {
        let mut g = WorldGrid::new(3, 3);
        g.cells[4].state = loc("inn", false);
        g.cells[1].state = CellState::Blocked;
        g.cells[4].exits[Direction::North.index()] = true;
        g.cells[1].exits[Direction::South.index()] = true;
        g.cells[0].exits[Direction::North.index()] = true;
        let report = validate_world(&world(g), None);
        assert!(report.has(WorldIssueCode::BlockedCellWithExits));
        assert!(report.has(WorldIssueCode::ExitToUnfilledCell));
        assert!(report.has(WorldIssueCode::ExitOffGrid));
        assert!(report.has(WorldIssueCode::EmptyCellWithExits));
    }

    #[test]
    fn contents_need_a_container() {
        let mut g = WorldGrid::new(3, 3);
        let mut cell = loc("inn", false);
        if let CellState::Filled { location } = &mut cell {
            location.objects.push(super::super::PlacedObject {
                id: "obj_candle".into(),
                name: "candle".into(),
                is_container: false,
                contents: vec![super::super::ElementRef {
                    id: "obj_coins".into(),
                    name: "coins".into(),
                }],
            });
        }
        g.cells[4].state = cell;
        assert!(validate_world(&world(g), None).has(WorldIssueCode::ContentsOnNonContainer));
    }
}
