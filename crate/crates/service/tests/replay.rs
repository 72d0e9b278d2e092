use std::sync::Arc;

use proptest::prelude::*;
use worldsmith_core::assembly::Direction;
use worldsmith_core::corpus::sample_corpus;
use worldsmith_core::generator::BaselineGenerator;
use worldsmith_core::ranking::RandomScorer;
use worldsmith_core::Corpus;
use worldsmith_service::{
    CreateSessionRequest, Engine, ExitRequest, PlaceKind, PlaceRequest, RemoveRequest, ScorerBundle, ServiceConfig,
    SessionState,
};

#[derive(Debug, Clone)]
enum Op {
    Place(usize, PlaceKind, usize),
    Remove(usize, PlaceKind, usize),
    Exit(usize, usize, bool),
    Undo,
}

fn op() -> impl Strategy<Value = Op> {
    let kind = prop_oneof![
        Just(PlaceKind::Location),
        Just(PlaceKind::Character),
        Just(PlaceKind::Object),
        Just(PlaceKind::Contained),
    ];
    prop_oneof![
        4 => (0..9usize, kind.clone(), 0..40usize).prop_map(|(c, k, i)| Op::Place(c, k, i)),
        2 => (0..9usize, kind, 0..40usize).prop_map(|(c, k, i)| Op::Remove(c, k, i)),
        1 => (0..9usize, 0..4usize, any::<bool>()).prop_map(|(c, d, o)| Op::Exit(c, d, o)),
        1 => Just(Op::Undo),
    ]
}

fn name(corpus: &Corpus, kind: PlaceKind, i: usize) -> String {
    match kind {
        PlaceKind::Location if i.is_multiple_of(4) => corpus.filler_locations()[i % 5].name.clone(),
        PlaceKind::Location => corpus.locations()[i % 12].name.clone(),
        PlaceKind::Character => corpus.characters()[i % 10].name.clone(),
        PlaceKind::Object | PlaceKind::Contained => corpus.objects()[i % 20].name.clone(),
    }
}

fn containers(corpus: &Corpus) -> Vec<String> {
    corpus
        .objects()
        .iter()
        .filter(|o| o.is_container())
        .take(3)
        .map(|o| o.name.clone())
        .collect()
}

fn engine(dir: &std::path::Path) -> Engine {
    let corpus = Arc::new(sample_corpus());
    let generator = Arc::new(BaselineGenerator::new(&corpus));
    let config = ServiceConfig {
        data_dir: Some(dir.to_path_buf()),
        ..ServiceConfig::default()
    };
    Engine::new(corpus, ScorerBundle::uniform(Arc::new(RandomScorer)), generator, config).unwrap()
}

/// Fold the effective history from scratch.
fn refold(state: &SessionState) -> SessionState {
    let mut s = SessionState::from_created(&state.history[0]).unwrap();
    for e in &state.history[1..] {
        s.apply(e).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_equals_replay(ops in proptest::collection::vec(op(), 1..60)) {
        let corpus = sample_corpus();
        let boxes = containers(&corpus);
        let dir = tempfile::tempdir().unwrap();
        let e = engine(dir.path());
        let id = e.create_session(&CreateSessionRequest { seed: Some(1), ..Default::default() }).unwrap().id;
        for op in &ops {
            let before = e.session_state(&id).unwrap();
            let result = match op {
                Op::Place(cell, kind, i) => e.place(&id, &PlaceRequest {
                    cell: *cell,
                    kind: *kind,
                    name: name(&corpus, *kind, *i),
                    container: Some(boxes[i % boxes.len()].clone()),
                    connect: None,
                }),
                Op::Remove(cell, kind, i) => e.remove(&id, &RemoveRequest {
                    cell: *cell,
                    kind: *kind,
                    element: Some(name(&corpus, *kind, *i)),
                    container: Some(boxes[i % boxes.len()].clone()),
                }),
                Op::Exit(cell, d, open) => e.set_exit(&id, &ExitRequest {
                    cell: *cell,
                    direction: Direction::ALL[*d],
                    open: *open,
                }),
                Op::Undo => e.undo(&id),
            };
            let after = e.session_state(&id).unwrap();
            if result.is_err() {
                // Rejected edits leave no trace.
                prop_assert_eq!(&after, &before);
            }
            // Non-filler locations stay unique and exits stay symmetric.
            let mut ids: Vec<&str> = after.grid.filled().filter(|(_, l)| !l.is_filler).map(|(_, l)| l.id.as_str()).collect();
            let n = ids.len();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
            for (i, cell) in after.grid.cells.iter().enumerate() {
                for d in Direction::ALL {
                    if cell.exits[d.index()] {
                        let j = after.grid.neighbor(i, d).unwrap();
                        prop_assert!(after.grid.cells[j].exits[d.opposite().index()]);
                        prop_assert!(cell.is_filled() && after.grid.cells[j].is_filled());
                    }
                }
            }
            prop_assert_eq!(&refold(&after).grid, &after.grid);
        }
        let live = e.session_state(&id).unwrap();
        drop(e);
        let reloaded = engine(dir.path());
        prop_assert_eq!(reloaded.session_state(&id).unwrap(), live);
    }
}
