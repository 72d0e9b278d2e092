//! Session state as a fold over an append-only event log.

use serde::{Deserialize, Serialize};
use worldsmith_core::assembly::{CellState, Direction, ElementRef, PlacedLocation, PlacedObject, WorldGrid};
use worldsmith_core::generator::GeneratedCard;

use crate::error::{ApiError, ApiResult, ErrorCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: String,
        width: usize,
        height: usize,
        seed: u64,
        suggestions_enabled: bool,
        center: PlacedLocation,
        at: String,
    },
    PlaceLocation {
        cell: usize,
        location: PlacedLocation,
        connect: Vec<Direction>,
        at: String,
    },
    PlaceCharacter {
        cell: usize,
        character: ElementRef,
        at: String,
    },
    PlaceObject {
        cell: usize,
        object: PlacedObject,
        at: String,
    },
    PlaceContained {
        cell: usize,
        container_id: String,
        item: ElementRef,
        at: String,
    },
    RemoveLocation {
        cell: usize,
        at: String,
    },
    RemoveCharacter {
        cell: usize,
        id: String,
        at: String,
    },
    RemoveObject {
        cell: usize,
        id: String,
        at: String,
    },
    RemoveContained {
        cell: usize,
        container_id: String,
        id: String,
        at: String,
    },
    SetExit {
        cell: usize,
        direction: Direction,
        open: bool,
        at: String,
    },
    Generated {
        card: GeneratedCard,
        at: String,
    },
    Undo {
        at: String,
    },
}

impl Event {
    pub fn at(&self) -> &str {
        match self {
            Event::Created { at, .. }
            | Event::PlaceLocation { at, .. }
            | Event::PlaceCharacter { at, .. }
            | Event::PlaceObject { at, .. }
            | Event::PlaceContained { at, .. }
            | Event::RemoveLocation { at, .. }
            | Event::RemoveCharacter { at, .. }
            | Event::RemoveObject { at, .. }
            | Event::RemoveContained { at, .. }
            | Event::SetExit { at, .. }
            | Event::Generated { at, .. }
            | Event::Undo { at } => at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub suggestions_enabled: bool,
    pub grid: WorldGrid,
    pub generated: Vec<GeneratedCard>,
    /// Effective edits, oldest first; undo pops from the end.
    pub history: Vec<Event>,
    /// Every event ever logged, undo events included.
    pub events_logged: u64,
    pub created_at: String,
    pub updated_at: String,
}

fn reject(code: ErrorCode, message: impl Into<String>) -> ApiError {
    ApiError::new(code, message)
}

impl SessionState {
    pub fn from_created(event: &Event) -> ApiResult<Self> {
        let Event::Created {
            id,
            width,
            height,
            seed,
            suggestions_enabled,
            center,
            at,
        } = event
        else {
            return Err(ApiError::internal("log does not start with a creation event"));
        };
        let mut grid = WorldGrid::new(*width, *height);
        let c = grid.center();
        grid.cells[c].state = CellState::Filled {
            location: center.clone(),
        };
        Ok(SessionState {
            id: id.clone(),
            width: *width,
            height: *height,
            seed: *seed,
            suggestions_enabled: *suggestions_enabled,
            grid,
            generated: Vec::new(),
            history: vec![event.clone()],
            events_logged: 1,
            created_at: at.clone(),
            updated_at: at.clone(),
        })
    }

    /// Apply one event. On error the state is unchanged.
    pub fn apply(&mut self, event: &Event) -> ApiResult<()> {
        let mut next = self.clone();
        match event {
            Event::Created { .. } => return Err(ApiError::internal("session already created")),
            Event::Undo { .. } => {
                if next.history.len() <= 1 {
                    return Err(reject(ErrorCode::NothingToUndo, "no edits to undo"));
                }
                next.history.pop();
                let mut rebuilt = SessionState::from_created(&next.history[0])?;
                for e in &next.history[1..] {
                    rebuilt.mutate(e)?;
                    rebuilt.history.push(e.clone());
                }
                rebuilt.events_logged = next.events_logged;
                next = rebuilt;
            }
            e => {
                next.mutate(e)?;
                next.history.push(e.clone());
            }
        }
        next.events_logged += 1;
        next.updated_at = event.at().to_string();
        *self = next;
        Ok(())
    }

    fn cell(&self, cell: usize) -> ApiResult<()> {
        if cell >= self.grid.len() {
            return Err(reject(
                ErrorCode::InvalidCell,
                format!("cell {cell} is outside the grid"),
            ));
        }
        Ok(())
    }

    pub fn location_at(&self, cell: usize) -> ApiResult<&PlacedLocation> {
        self.cell(cell)?;
        self.grid.cells[cell]
            .location()
            .ok_or_else(|| reject(ErrorCode::CellNotFilled, format!("cell {cell} holds no location")))
    }

    fn location_mut(&mut self, cell: usize) -> ApiResult<&mut PlacedLocation> {
        self.cell(cell)?;
        self.grid.cells[cell]
            .location_mut()
            .ok_or_else(|| reject(ErrorCode::CellNotFilled, format!("cell {cell} holds no location")))
    }

    /// Cell holding the non-filler location `id`, if any.
    pub fn placed_cell(&self, id: &str) -> Option<usize> {
        self.grid
            .filled()
            .find(|(_, l)| !l.is_filler && l.id == id)
            .map(|(i, _)| i)
    }

    fn mutate(&mut self, event: &Event) -> ApiResult<()> {
        match event {
            Event::PlaceLocation {
                cell,
                location,
                connect,
                ..
            } => {
                self.cell(*cell)?;
                if !self.grid.cells[*cell].is_empty() {
                    return Err(reject(ErrorCode::CellNotEmpty, format!("cell {cell} is not empty")));
                }
                if !location.is_filler {
                    if let Some(other) = self.placed_cell(&location.id) {
                        return Err(reject(
                            ErrorCode::DuplicateLocation,
                            format!("`{}` is already placed in cell {other}", location.name),
                        )
                        .with_details(
                            serde_json::json!({ "invariant": "unique_non_filler_location", "cell": other }),
                        ));
                    }
                }
                for d in connect {
                    match self.grid.neighbor(*cell, *d) {
                        Some(n) if self.grid.cells[n].is_filled() => {}
                        _ => {
                            return Err(reject(
                                ErrorCode::NotAdjacent,
                                format!("no filled cell {d:?} of cell {cell}"),
                            ))
                        }
                    }
                }
                self.grid.cells[*cell].state = CellState::Filled {
                    location: location.clone(),
                };
                for d in connect {
                    self.grid.set_exit(*cell, *d, true);
                }
            }
            Event::PlaceCharacter { cell, character, .. } => {
                let loc = self.location_mut(*cell)?;
                if loc.characters.iter().any(|c| c.id == character.id) {
                    return Err(reject(
                        ErrorCode::DuplicateInLocation,
                        format!("`{}` is already in cell {cell}", character.name),
                    ));
                }
                loc.characters.push(character.clone());
            }
            Event::PlaceObject { cell, object, .. } => {
                let loc = self.location_mut(*cell)?;
                if loc.objects.iter().any(|o| o.id == object.id) {
                    return Err(reject(
                        ErrorCode::DuplicateInLocation,
                        format!("`{}` is already in cell {cell}", object.name),
                    ));
                }
                loc.objects.push(object.clone());
            }
            Event::PlaceContained {
                cell,
                container_id,
                item,
                ..
            } => {
                let loc = self.location_mut(*cell)?;
                let container = loc.objects.iter_mut().find(|o| o.id == *container_id).ok_or_else(|| {
                    reject(
                        ErrorCode::UnknownElement,
                        format!("no object `{container_id}` in cell {cell}"),
                    )
                })?;
                if !container.is_container {
                    return Err(reject(
                        ErrorCode::NotAContainer,
                        format!("`{}` is not a container", container.name),
                    ));
                }
                if item.id == container.id {
                    return Err(reject(ErrorCode::BadRequest, "an object cannot contain itself"));
                }
                if container.contents.iter().any(|c| c.id == item.id) {
                    return Err(reject(
                        ErrorCode::DuplicateInLocation,
                        format!("`{}` already holds `{}`", container.name, item.name),
                    ));
                }
                container.contents.push(item.clone());
            }
            Event::RemoveLocation { cell, .. } => {
                self.location_at(*cell)?;
                self.grid.clear_exits(*cell);
                self.grid.cells[*cell].state = CellState::Empty;
            }
            Event::RemoveCharacter { cell, id, .. } => {
                let loc = self.location_mut(*cell)?;
                let i =
                    loc.characters.iter().position(|c| c.id == *id).ok_or_else(|| {
                        reject(ErrorCode::UnknownElement, format!("no character `{id}` in cell {cell}"))
                    })?;
                loc.characters.remove(i);
            }
            Event::RemoveObject { cell, id, .. } => {
                let loc = self.location_mut(*cell)?;
                let i = loc
                    .objects
                    .iter()
                    .position(|o| o.id == *id)
                    .ok_or_else(|| reject(ErrorCode::UnknownElement, format!("no object `{id}` in cell {cell}")))?;
                loc.objects.remove(i);
            }
            Event::RemoveContained {
                cell, container_id, id, ..
            } => {
                let loc = self.location_mut(*cell)?;
                let container = loc.objects.iter_mut().find(|o| o.id == *container_id).ok_or_else(|| {
                    reject(
                        ErrorCode::UnknownElement,
                        format!("no object `{container_id}` in cell {cell}"),
                    )
                })?;
                let i = container.contents.iter().position(|c| c.id == *id).ok_or_else(|| {
                    reject(
                        ErrorCode::UnknownElement,
                        format!("`{container_id}` does not hold `{id}`"),
                    )
                })?;
                container.contents.remove(i);
            }
            Event::SetExit {
                cell, direction, open, ..
            } => {
                self.location_at(*cell)?;
                match self.grid.neighbor(*cell, *direction) {
                    Some(n) if !*open || self.grid.cells[n].is_filled() => {
                        self.grid.set_exit(*cell, *direction, *open);
                    }
                    _ => {
                        return Err(reject(
                            ErrorCode::NotAdjacent,
                            format!("no filled cell {direction:?} of cell {cell}"),
                        ))
                    }
                }
            }
            Event::Generated { card, .. } => self.generated.push(card.clone()),
            Event::Created { .. } | Event::Undo { .. } => unreachable!("handled in apply"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(id: &str, filler: bool) -> PlacedLocation {
        PlacedLocation {
            id: id.into(),
            name: id.into(),
            is_filler: filler,
            characters: vec![],
            objects: vec![],
        }
    }

    fn created() -> SessionState {
        SessionState::from_created(&Event::Created {
            id: "s".into(),
            width: 3,
            height: 3,
            seed: 0,
            suggestions_enabled: true,
            center: loc("inn", false),
            at: "t0".into(),
        })
        .unwrap()
    }

    fn place(cell: usize, id: &str, filler: bool, connect: Vec<Direction>) -> Event {
        Event::PlaceLocation {
            cell,
            location: loc(id, filler),
            connect,
            at: "t".into(),
        }
    }

    #[test]
    fn duplicate_non_filler_rejected_and_state_unchanged() {
        let mut s = created();
        s.apply(&place(5, "mill", false, vec![Direction::West])).unwrap();
        let before = s.clone();
        let err = s.apply(&place(3, "mill", false, vec![])).unwrap_err();
        assert_eq!(err.code, ErrorCode::DuplicateLocation);
        assert_eq!(s, before);
        s.apply(&place(3, "closet", true, vec![])).unwrap();
        s.apply(&place(1, "closet", true, vec![Direction::South])).unwrap();
    }

    #[test]
    fn undo_restores_previous_state() {
        let mut s = created();
        s.apply(&place(5, "mill", false, vec![Direction::West])).unwrap();
        let placed = s.clone();
        s.apply(&Event::RemoveLocation {
            cell: 5,
            at: "t".into(),
        })
        .unwrap();
        assert!(s.grid.cells[4].exits.iter().all(|e| !e));
        s.apply(&Event::Undo { at: "t".into() }).unwrap();
        assert_eq!(s.grid, placed.grid);
        assert_eq!(s.history, placed.history);
        s.apply(&Event::Undo { at: "t".into() }).unwrap();
        let err = s.apply(&Event::Undo { at: "t".into() }).unwrap_err();
        assert_eq!(err.code, ErrorCode::NothingToUndo);
    }

    #[test]
    fn connect_requires_filled_neighbour() {
        let mut s = created();
        let err = s.apply(&place(0, "mill", false, vec![Direction::East])).unwrap_err();
        assert_eq!(err.code, ErrorCode::NotAdjacent);
        let err = s.apply(&place(99, "mill", false, vec![])).unwrap_err();
        assert_eq!(err.code, ErrorCode::InvalidCell);
    }
}
