//! Session operations independent of the HTTP layer.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{SecondsFormat, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};
use worldsmith_core::assembly::{
    validate_world, Direction, ElementRef, GameWorld, GenerationConfig, PlacedLocation, PlacedObject, Provenance,
    WorldGrid,
};
use worldsmith_core::corpus::{CorpusStats, FeatureMode, Task};
use worldsmith_core::generator::{ElementGenerator, ElementKind, GeneratedCard, GeneratedElement};
use worldsmith_core::ranking::{rank_scores, Candidate, Scorer, ScorerInput};
use worldsmith_core::rng;
use worldsmith_core::text::normalize_name;
use worldsmith_core::Corpus;

use crate::error::{ApiError, ApiResult, ErrorCode};
use crate::session::{Event, SessionState};
use crate::store::{self, EventLog};

/// Owned scorer per placement task, shared by every session.
#[derive(Clone)]
pub struct ScorerBundle {
    pub location: Arc<dyn Scorer>,
    pub character: Arc<dyn Scorer>,
    pub object: Arc<dyn Scorer>,
    pub container: Arc<dyn Scorer>,
}

impl ScorerBundle {
    pub fn uniform(scorer: Arc<dyn Scorer>) -> Self {
        ScorerBundle {
            location: scorer.clone(),
            character: scorer.clone(),
            object: scorer.clone(),
            container: scorer,
        }
    }

    pub fn get(&self, task: Task) -> &dyn Scorer {
        match task {
            Task::Location => self.location.as_ref(),
            Task::Character => self.character.as_ref(),
            Task::Object => self.object.as_ref(),
            Task::Container => self.container.as_ref(),
        }
    }

    pub fn names(&self) -> BTreeMap<Task, String> {
        Task::ALL.into_iter().map(|t| (t, self.get(t).name())).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Where session logs live; `None` keeps sessions in memory only.
    pub data_dir: Option<PathBuf>,
    /// Server-wide switch; a session's own flag can only narrow it.
    pub suggestions_enabled: bool,
    pub feature_mode: FeatureMode,
    pub suggest_k: usize,
    pub default_width: usize,
    pub default_height: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: None,
            suggestions_enabled: true,
            feature_mode: FeatureMode::NameAndDescription,
            suggest_k: 10,
            default_width: 3,
            default_height: 3,
        }
    }
}

/// What can be placed into a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceKind {
    Location,
    Character,
    Object,
    /// An object inside a container already in the cell.
    Contained,
}

impl PlaceKind {
    fn task(self) -> Task {
        match self {
            PlaceKind::Location => Task::Location,
            PlaceKind::Character => Task::Character,
            PlaceKind::Object => Task::Object,
            PlaceKind::Contained => Task::Container,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSessionRequest {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub seed: Option<u64>,
    pub suggestions_enabled: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaceRequest {
    pub cell: usize,
    pub kind: PlaceKind,
    pub name: String,
    /// Container name or id, for `contained`.
    #[serde(default)]
    pub container: Option<String>,
    /// Exits to open for a location; defaults to every filled neighbour.
    #[serde(default)]
    pub connect: Option<Vec<Direction>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoveRequest {
    pub cell: usize,
    pub kind: PlaceKind,
    /// Element id or name; ignored when removing the location.
    #[serde(default)]
    pub element: Option<String>,
    #[serde(default)]
    pub container: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitRequest {
    pub cell: usize,
    pub direction: Direction,
    pub open: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuggestQuery {
    pub cell: usize,
    pub kind: PlaceKind,
    #[serde(default)]
    pub container: Option<String>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub rank: usize,
    pub name: String,
    pub id: String,
    pub score: f64,
    pub kind: PlaceKind,
    pub generated: bool,
}

/// The exact ranking problem behind a suggestion list.
#[derive(Debug, Clone)]
pub struct SuggestionPlan {
    pub input: ScorerInput,
    pub ids: Vec<String>,
    pub generated: Vec<bool>,
    /// Seed of the stream handed to the scorer.
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchQuery {
    #[serde(default)]
    pub q: String,
    #[serde(default)]
    pub kind: Option<ElementKind>,
    #[serde(default)]
    pub limit: Option<usize>,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub name: String,
    pub kind: ElementKind,
    pub is_filler: bool,
    pub generated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub name: String,
    pub kind: ElementKind,
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub element: GeneratedElement,
    pub card: GeneratedCard,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub suggestions_enabled: bool,
    pub grid: WorldGrid,
    pub generated: Vec<GeneratedCard>,
    pub undo_depth: usize,
    pub events_logged: u64,
    pub created_at: String,
    pub updated_at: String,
}

impl From<&SessionState> for SessionView {
    fn from(s: &SessionState) -> Self {
        SessionView {
            id: s.id.clone(),
            width: s.width,
            height: s.height,
            seed: s.seed,
            suggestions_enabled: s.suggestions_enabled,
            grid: s.grid.clone(),
            generated: s.generated.clone(),
            undo_depth: s.history.len() - 1,
            events_logged: s.events_logged,
            created_at: s.created_at.clone(),
            updated_at: s.updated_at.clone(),
        }
    }
}

/// A placeable card reduced to what the editor needs.
#[derive(Debug, Clone)]
struct Element {
    id: String,
    name: String,
    description: String,
    is_filler: bool,
    is_container: bool,
    generated: bool,
}

impl Element {
    fn from_card(card: &GeneratedCard) -> (ElementKind, Element) {
        match card {
            GeneratedCard::Location(c) => (
                ElementKind::Location,
                Element {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    description: c.description.clone(),
                    is_filler: c.is_filler,
                    is_container: false,
                    generated: true,
                },
            ),
            GeneratedCard::Character(c) => (
                ElementKind::Character,
                Element {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    description: c.description.clone(),
                    is_filler: false,
                    is_container: false,
                    generated: true,
                },
            ),
            GeneratedCard::Object(c) => (
                ElementKind::Object,
                Element {
                    id: c.id.clone(),
                    name: c.name.clone(),
                    description: c.description.clone(),
                    is_filler: false,
                    is_container: c.is_container(),
                    generated: true,
                },
            ),
        }
    }
}

struct Session {
    state: SessionState,
    log: Option<EventLog>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn kind_index(kind: ElementKind) -> usize {
    match kind {
        ElementKind::Location => 0,
        ElementKind::Character => 1,
        ElementKind::Object => 2,
    }
}

fn bad(code: ErrorCode, message: impl Into<String>) -> ApiError {
    ApiError::new(code, message)
}

pub struct Engine {
    corpus: Arc<Corpus>,
    scorers: ScorerBundle,
    generator: Arc<dyn ElementGenerator>,
    config: ServiceConfig,
    /// Corpus elements per kind, locations followed by fillers.
    catalog: [Vec<Element>; 3],
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Engine {
    /// Build an engine and load every session found under `data_dir`.
    pub fn new(
        corpus: Arc<Corpus>,
        scorers: ScorerBundle,
        generator: Arc<dyn ElementGenerator>,
        config: ServiceConfig,
    ) -> ApiResult<Self> {
        if corpus.locations().is_empty() {
            return Err(ApiError::internal("corpus has no non-filler locations"));
        }
        let element = |id: &str, name: &str, description: &str, is_filler, is_container| Element {
            id: id.into(),
            name: name.into(),
            description: description.into(),
            is_filler,
            is_container,
            generated: false,
        };
        let catalog = [
            corpus
                .locations()
                .iter()
                .chain(corpus.filler_locations())
                .map(|c| element(&c.id, &c.name, &c.description, c.is_filler, false))
                .collect(),
            corpus
                .characters()
                .iter()
                .map(|c| element(&c.id, &c.name, &c.description, false, false))
                .collect(),
            corpus
                .objects()
                .iter()
                .map(|c| element(&c.id, &c.name, &c.description, false, c.is_container()))
                .collect(),
        ];
        let engine = Engine {
            corpus,
            scorers,
            generator,
            config,
            catalog,
            sessions: RwLock::new(HashMap::new()),
        };
        engine.load_all()?;
        Ok(engine)
    }

    fn load_all(&self) -> ApiResult<()> {
        let Some(dir) = &self.config.data_dir else {
            return Ok(());
        };
        let mut sessions = self.sessions.write().unwrap();
        for id in store::session_ids(dir).map_err(ApiError::internal)? {
            let (state, log) = store::load_session(dir, &id)?;
            sessions.insert(id, Arc::new(Mutex::new(Session { state, log: Some(log) })));
        }
        Ok(())
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| bad(ErrorCode::SessionNotFound, format!("no session `{id}`")))
    }

    /// Run `f` on a consistent view of the session.
    fn read<T>(&self, id: &str, f: impl FnOnce(&SessionState) -> ApiResult<T>) -> ApiResult<T> {
        let session = self.session(id)?;
        let guard = session.lock().unwrap();
        f(&guard.state)
    }

    /// Derive an event from the current state, apply it and log it. Nothing
    /// changes unless every step succeeds.
    fn mutate(&self, id: &str, f: impl FnOnce(&SessionState) -> ApiResult<Event>) -> ApiResult<SessionState> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap();
        let event = f(&guard.state)?;
        let mut next = guard.state.clone();
        next.apply(&event)?;
        if let Some(log) = guard.log.as_mut() {
            log.append(&event, &next).map_err(ApiError::internal)?;
        }
        guard.state = next;
        Ok(guard.state.clone())
    }

    pub fn create_session(&self, req: &CreateSessionRequest) -> ApiResult<SessionView> {
        let width = req.width.unwrap_or(self.config.default_width);
        let height = req.height.unwrap_or(self.config.default_height);
        if width == 0 || height == 0 || width.saturating_mul(height) > 10_000 {
            return Err(bad(
                ErrorCode::InvalidDims,
                format!("grid {width}x{height} must have between 1 and 10000 cells"),
            ));
        }
        let seed = req.seed.unwrap_or_else(rand::random);
        let mut stream = rng::derived_stream(seed, "session", 0);
        let locations = self.corpus.locations();
        let card = &locations[stream.gen_range(0..locations.len())];
        let id = format!("{:032x}", rand::random::<u128>());
        let event = Event::Created {
            id: id.clone(),
            width,
            height,
            seed,
            suggestions_enabled: req.suggestions_enabled.unwrap_or(true),
            center: PlacedLocation {
                id: card.id.clone(),
                name: card.name.clone(),
                is_filler: false,
                characters: Vec::new(),
                objects: Vec::new(),
            },
            at: now(),
        };
        let state = SessionState::from_created(&event)?;
        let log = match &self.config.data_dir {
            Some(dir) => Some(EventLog::create(dir, &state).map_err(ApiError::internal)?),
            None => None,
        };
        let view = SessionView::from(&state);
        self.sessions
            .write()
            .unwrap()
            .insert(id, Arc::new(Mutex::new(Session { state, log })));
        Ok(view)
    }

    pub fn get_session(&self, id: &str) -> ApiResult<SessionView> {
        self.read(id, |s| Ok(SessionView::from(s)))
    }

    /// Full internal state, history included.
    pub fn session_state(&self, id: &str) -> ApiResult<SessionState> {
        self.read(id, |s| Ok(s.clone()))
    }

    /// Corpus elements of `kind` followed by the session's generated ones.
    fn elements(&self, state: Option<&SessionState>, kind: ElementKind) -> Vec<Element> {
        let mut out = self.catalog[kind_index(kind)].clone();
        if let Some(state) = state {
            out.extend(
                state
                    .generated
                    .iter()
                    .map(Element::from_card)
                    .filter(|(k, _)| *k == kind)
                    .map(|(_, e)| e),
            );
        }
        out
    }

    fn resolve(&self, state: &SessionState, kind: ElementKind, name: &str) -> ApiResult<Element> {
        let key = normalize_name(name);
        self.elements(Some(state), kind)
            .into_iter()
            .find(|e| normalize_name(&e.name) == key || e.id == name)
            .ok_or_else(|| bad(ErrorCode::UnknownElement, format!("no {kind} named `{name}`")))
    }

    fn location_text(&self, state: &SessionState, location: &PlacedLocation) -> String {
        let description = self
            .corpus
            .location_by_id(&location.id)
            .map(|c| c.description.clone())
            .or_else(|| {
                state.generated.iter().find_map(|g| match g {
                    GeneratedCard::Location(c) if c.id == location.id => Some(c.description.clone()),
                    _ => None,
                })
            })
            .unwrap_or_default();
        self.config.feature_mode.render(&location.name, &description)
    }

    fn container<'s>(state: &'s SessionState, cell: usize, key: &str) -> ApiResult<&'s PlacedObject> {
        let folded = normalize_name(key);
        state
            .location_at(cell)?
            .objects
            .iter()
            .find(|o| o.id == key || normalize_name(&o.name) == folded)
            .ok_or_else(|| bad(ErrorCode::UnknownElement, format!("no object `{key}` in cell {cell}")))
    }

    pub fn place(&self, id: &str, req: &PlaceRequest) -> ApiResult<SessionView> {
        let state = self.mutate(id, |s| {
            let at = now();
            Ok(match req.kind {
                PlaceKind::Location => {
                    let e = self.resolve(s, ElementKind::Location, &req.name)?;
                    let connect = match &req.connect {
                        Some(c) => c.clone(),
                        None if req.cell < s.grid.len() => Direction::ALL
                            .into_iter()
                            .filter(|d| {
                                s.grid
                                    .neighbor(req.cell, *d)
                                    .is_some_and(|n| s.grid.cells[n].is_filled())
                            })
                            .collect(),
                        None => Vec::new(),
                    };
                    Event::PlaceLocation {
                        cell: req.cell,
                        location: PlacedLocation {
                            id: e.id,
                            name: e.name,
                            is_filler: e.is_filler,
                            characters: Vec::new(),
                            objects: Vec::new(),
                        },
                        connect,
                        at,
                    }
                }
                PlaceKind::Character => {
                    let e = self.resolve(s, ElementKind::Character, &req.name)?;
                    Event::PlaceCharacter {
                        cell: req.cell,
                        character: ElementRef { id: e.id, name: e.name },
                        at,
                    }
                }
                PlaceKind::Object => {
                    let e = self.resolve(s, ElementKind::Object, &req.name)?;
                    Event::PlaceObject {
                        cell: req.cell,
                        object: PlacedObject {
                            id: e.id,
                            name: e.name,
                            is_container: e.is_container,
                            contents: Vec::new(),
                        },
                        at,
                    }
                }
                PlaceKind::Contained => {
                    let key = req
                        .container
                        .as_deref()
                        .ok_or_else(|| bad(ErrorCode::BadRequest, "`container` is required for contained items"))?;
                    let container_id = Self::container(s, req.cell, key)?.id.clone();
                    let e = self.resolve(s, ElementKind::Object, &req.name)?;
                    Event::PlaceContained {
                        cell: req.cell,
                        container_id,
                        item: ElementRef { id: e.id, name: e.name },
                        at,
                    }
                }
            })
        })?;
        Ok(SessionView::from(&state))
    }

    pub fn remove(&self, id: &str, req: &RemoveRequest) -> ApiResult<SessionView> {
        let state = self.mutate(id, |s| {
            let at = now();
            let cell = req.cell;
            let element = || {
                req.element
                    .as_deref()
                    .ok_or_else(|| bad(ErrorCode::BadRequest, "`element` is required"))
            };
            let pick = |refs: Vec<(&str, &str)>, key: &str| {
                let folded = normalize_name(key);
                refs.into_iter()
                    .find(|(id, name)| *id == key || normalize_name(name) == folded)
                    .map(|(id, _)| id.to_string())
                    .ok_or_else(|| bad(ErrorCode::UnknownElement, format!("no `{key}` in cell {cell}")))
            };
            Ok(match req.kind {
                PlaceKind::Location => Event::RemoveLocation { cell, at },
                PlaceKind::Character => {
                    let loc = s.location_at(cell)?;
                    let key = element()?;
                    let id = pick(
                        loc.characters
                            .iter()
                            .map(|c| (c.id.as_str(), c.name.as_str()))
                            .collect(),
                        key,
                    )?;
                    Event::RemoveCharacter { cell, id, at }
                }
                PlaceKind::Object => {
                    let loc = s.location_at(cell)?;
                    let key = element()?;
                    let id = pick(
                        loc.objects.iter().map(|o| (o.id.as_str(), o.name.as_str())).collect(),
                        key,
                    )?;
                    Event::RemoveObject { cell, id, at }
                }
                PlaceKind::Contained => {
                    let key = req
                        .container
                        .as_deref()
                        .ok_or_else(|| bad(ErrorCode::BadRequest, "`container` is required for contained items"))?;
                    let container = Self::container(s, cell, key)?;
                    let id = pick(
                        container
                            .contents
                            .iter()
                            .map(|c| (c.id.as_str(), c.name.as_str()))
                            .collect(),
                        element()?,
                    )?;
                    Event::RemoveContained {
                        cell,
                        container_id: container.id.clone(),
                        id,
                        at,
                    }
                }
            })
        })?;
        Ok(SessionView::from(&state))
    }

    pub fn set_exit(&self, id: &str, req: &ExitRequest) -> ApiResult<SessionView> {
        let state = self.mutate(id, |_| {
            Ok(Event::SetExit {
                cell: req.cell,
                direction: req.direction,
                open: req.open,
                at: now(),
            })
        })?;
        Ok(SessionView::from(&state))
    }

    pub fn undo(&self, id: &str) -> ApiResult<SessionView> {
        let state = self.mutate(id, |_| Ok(Event::Undo { at: now() }))?;
        Ok(SessionView::from(&state))
    }

    /// Context, candidates and scorer stream seed for a suggestion request.
    pub fn suggestion_input(&self, id: &str, query: &SuggestQuery) -> ApiResult<SuggestionPlan> {
        self.read(id, |s| self.plan(s, query))
    }

    fn plan(&self, s: &SessionState, q: &SuggestQuery) -> ApiResult<SuggestionPlan> {
        let mode = self.config.feature_mode;
        let mut seen = HashSet::new();
        let mut pool: Vec<(Element, Candidate)> = Vec::new();
        let mut add = |e: Element, name_only: bool| {
            if seen.insert(normalize_name(&e.name)) {
                let c = if name_only {
                    Candidate::named(e.name.clone())
                } else {
                    Candidate::new(e.name.clone(), mode.render(&e.name, &e.description))
                };
                pool.push((e, c));
            }
        };
        let context = match q.kind {
            PlaceKind::Location => {
                if q.cell >= s.grid.len() {
                    return Err(bad(
                        ErrorCode::InvalidCell,
                        format!("cell {} is outside the grid", q.cell),
                    ));
                }
                if !s.grid.cells[q.cell].is_empty() {
                    return Err(bad(ErrorCode::CellNotEmpty, format!("cell {} is not empty", q.cell)));
                }
                let mut neighbours: Vec<usize> = Direction::ALL
                    .into_iter()
                    .filter_map(|d| s.grid.neighbor(q.cell, d))
                    .filter(|&n| s.grid.cells[n].is_filled())
                    .collect();
                if neighbours.is_empty() {
                    return Err(bad(
                        ErrorCode::NotAdjacent,
                        format!("cell {} has no filled neighbour", q.cell),
                    ));
                }
                neighbours.sort_unstable();
                let placed: HashSet<&str> = s
                    .grid
                    .filled()
                    .filter(|(_, l)| !l.is_filler)
                    .map(|(_, l)| l.id.as_str())
                    .collect();
                for e in self.elements(Some(s), ElementKind::Location) {
                    if !e.is_filler && !placed.contains(e.id.as_str()) {
                        add(e, false);
                    }
                }
                neighbours
                    .iter()
                    .map(|&n| self.location_text(s, s.grid.cells[n].location().expect("filled")))
                    .collect::<Vec<_>>()
                    .join(" ")
            }
            PlaceKind::Character | PlaceKind::Object => {
                let loc = s.location_at(q.cell)?;
                let (kind, present): (ElementKind, HashSet<&str>) = if q.kind == PlaceKind::Character {
                    (
                        ElementKind::Character,
                        loc.characters.iter().map(|c| c.id.as_str()).collect(),
                    )
                } else {
                    (ElementKind::Object, loc.objects.iter().map(|o| o.id.as_str()).collect())
                };
                for e in self.elements(Some(s), kind) {
                    if !present.contains(e.id.as_str()) {
                        add(e, false);
                    }
                }
                self.location_text(s, loc)
            }
            PlaceKind::Contained => {
                let key = q
                    .container
                    .as_deref()
                    .ok_or_else(|| bad(ErrorCode::BadRequest, "`container` is required for contained items"))?;
                let container = Self::container(s, q.cell, key)?;
                if !container.is_container {
                    return Err(bad(
                        ErrorCode::NotAContainer,
                        format!("`{}` is not a container", container.name),
                    ));
                }
                let present: HashSet<&str> = container.contents.iter().map(|c| c.id.as_str()).collect();
                for e in self.elements(Some(s), ElementKind::Object) {
                    if e.id != container.id && !present.contains(e.id.as_str()) {
                        add(e, true);
                    }
                }
                container.name.clone()
            }
        };
        let (elements, candidates): (Vec<Element>, Vec<Candidate>) = pool.into_iter().unzip();
        Ok(SuggestionPlan {
            input: ScorerInput::new(q.kind.task(), context, candidates),
            ids: elements.iter().map(|e| e.id.clone()).collect(),
            generated: elements.iter().map(|e| e.generated).collect(),
            seed: rng::derive_seed(s.seed, "suggest", s.events_logged),
        })
    }

    /// Top-k candidates in [`worldsmith_core::ranking::rank`] order.
    pub fn suggest(&self, id: &str, query: &SuggestQuery) -> ApiResult<Vec<Suggestion>> {
        let (enabled, plan) = self.read(id, |s| Ok((s.suggestions_enabled, self.plan(s, query)?)))?;
        if !enabled || !self.config.suggestions_enabled || plan.input.candidates.is_empty() {
            return Ok(Vec::new());
        }
        let scorer = self.scorers.get(plan.input.task);
        let scores = scorer
            .score(&plan.input, &mut rng::stream(plan.seed))
            .map_err(ApiError::internal)?;
        let k = query.k.unwrap_or(self.config.suggest_k);
        Ok(rank_scores(&scores)
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(rank, i)| Suggestion {
                rank,
                name: plan.input.candidates[i].name.clone(),
                id: plan.ids[i].clone(),
                score: scores[i],
                kind: query.kind,
                generated: plan.generated[i],
            })
            .collect())
    }

    /// Case-insensitive autocomplete: prefix matches first, then substring
    /// matches, each alphabetical.
    pub fn search(&self, query: &SearchQuery) -> ApiResult<Vec<SearchHit>> {
        let q = query.q.trim().to_lowercase();
        if q.is_empty() {
            return Ok(Vec::new());
        }
        let session = match &query.session_id {
            Some(id) => Some(self.session_state(id)?),
            None => None,
        };
        let kinds = match query.kind {
            Some(k) => vec![k],
            None => ElementKind::ALL.to_vec(),
        };
        let mut seen = HashSet::new();
        let mut hits: Vec<(u8, String, SearchHit)> = Vec::new();
        for kind in kinds {
            for e in self.elements(session.as_ref(), kind) {
                let lower = e.name.to_lowercase();
                let tier = if lower.starts_with(&q) {
                    0
                } else if lower.contains(&q) {
                    1
                } else {
                    continue;
                };
                if !seen.insert((kind, normalize_name(&e.name))) {
                    continue;
                }
                hits.push((
                    tier,
                    lower,
                    SearchHit {
                        id: e.id,
                        name: e.name,
                        kind,
                        is_filler: e.is_filler,
                        generated: e.generated,
                    },
                ));
            }
        }
        hits.sort_by(|a, b| (a.0, &a.1, a.2.kind.as_str()).cmp(&(b.0, &b.1, b.2.kind.as_str())));
        Ok(hits
            .into_iter()
            .take(query.limit.unwrap_or(20))
            .map(|(_, _, h)| h)
            .collect())
    }

    pub fn generate_element(&self, req: &GenerateRequest) -> ApiResult<GenerateResponse> {
        if req.name.trim().is_empty() {
            return Err(bad(ErrorCode::EmptyName, "element name must not be empty"));
        }
        let run = |seed: u64, card_id: String| -> ApiResult<(GeneratedElement, GeneratedCard)> {
            let element = self
                .generator
                .generate(req.name.trim(), req.kind, seed)
                .map_err(ApiError::internal)?;
            let card = element.to_card(card_id);
            Ok((element, card))
        };
        let Some(sid) = &req.session_id else {
            let seed = req.seed.unwrap_or(0);
            let (element, card) = run(seed, format!("generated_{}", req.kind))?;
            return Ok(GenerateResponse {
                element,
                card,
                session_id: None,
            });
        };
        let mut out = None;
        self.mutate(sid, |s| {
            let seed = req
                .seed
                .unwrap_or_else(|| rng::derive_seed(s.seed, "generate", s.events_logged));
            let card_id = format!("gen_{}_{}", &s.id[..8.min(s.id.len())], s.events_logged);
            let (element, card) = run(seed, card_id)?;
            out = Some((element, card.clone()));
            Ok(Event::Generated { card, at: now() })
        })?;
        let (element, card) = out.expect("set on success");
        Ok(GenerateResponse {
            element,
            card,
            session_id: Some(sid.clone()),
        })
    }

    /// The session as a world, rejected when it fails validation.
    pub fn export(&self, id: &str) -> ApiResult<GameWorld> {
        let state = self.session_state(id)?;
        let cells = state.width * state.height;
        let world = GameWorld {
            grid: state.grid.clone(),
            config: GenerationConfig {
                grid_width: state.width,
                grid_height: state.height,
                max_locations: cells,
                blocked_fraction: 0.0,
                feature_mode: self.config.feature_mode,
                seed: state.seed,
                ..GenerationConfig::default()
            },
            provenance: Provenance {
                scorers: self.scorers.names(),
                corpus_hash: self.corpus.content_hash(),
            },
            created_at: Some(state.updated_at.clone()),
        };
        let report = if state.generated.is_empty() {
            validate_world(&world, Some(&self.corpus))
        } else {
            let mut doc = self.corpus.document().clone();
            for card in &state.generated {
                match card {
                    GeneratedCard::Location(c) => doc.locations.push(c.clone()),
                    GeneratedCard::Character(c) => doc.characters.push(c.clone()),
                    GeneratedCard::Object(c) => doc.objects.push(c.clone()),
                }
            }
            let extended = Corpus::from_document(doc).map_err(ApiError::internal)?;
            validate_world(&world, Some(&extended))
        };
        if !report.is_clean() {
            return Err(bad(ErrorCode::WorldInvalid, "session does not form a valid world")
                .with_details(serde_json::json!({ "issues": report.issues })));
        }
        Ok(world)
    }

    pub fn corpus_stats(&self) -> CorpusStats {
        self.corpus.stats()
    }

    /// Sync every log to disk and write fresh snapshots.
    pub fn flush(&self) -> ApiResult<()> {
        let sessions: Vec<_> = self.sessions.read().unwrap().values().cloned().collect();
        for s in sessions {
            let guard = s.lock().unwrap();
            if let Some(log) = &guard.log {
                log.sync().map_err(ApiError::internal)?;
                log.snapshot(&guard.state).map_err(ApiError::internal)?;
            }
        }
        Ok(())
    }
}
