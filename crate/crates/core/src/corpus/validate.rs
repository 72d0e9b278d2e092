use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Corpus, Split};
use crate::text::normalize_name;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    EmptyName,
    DanglingReference,
    DuplicateListEntry,
    FillerWithContent,
    FillerFlagMismatch,
    OverlappingObjectLists,
    DuplicateAffordance,
    ContentsWithoutContainer,
    NameCollision,
    SplitOverlap,
    UnknownSplitId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    pub card_id: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} [{}] {}: {}",
            self.severity,
            self.card_id,
            serde_json::to_string(&self.code).unwrap_or_default().trim_matches('"'),
            self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn count(&self, code: IssueCode) -> usize {
        self.issues.iter().filter(|i| i.code == code).count()
    }

    fn push(&mut self, severity: Severity, code: IssueCode, card_id: &str, message: String) {
        self.issues.push(ValidationIssue {
            severity,
            code,
            card_id: card_id.to_string(),
            message,
        });
    }

    fn error(&mut self, code: IssueCode, card_id: &str, message: String) {
        self.push(Severity::Error, code, card_id, message);
    }
}

fn check_list(report: &mut ValidationReport, card_id: &str, field: &str, names: &[String]) {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(normalize_name(n)) {
            report.error(
                IssueCode::DuplicateListEntry,
                card_id,
                format!("`{n}` listed twice in {field}"),
            );
        }
    }
}

fn check_refs<F>(report: &mut ValidationReport, card_id: &str, field: &str, names: &[String], resolves: F)
where
    F: Fn(&str) -> bool,
{
    for n in names {
        if !resolves(n) {
            report.error(
                IssueCode::DanglingReference,
                card_id,
                format!("{field} entry `{n}` does not resolve to a card"),
            );
        }
    }
}

/// Report every broken corpus invariant. An empty report means the corpus is
/// clean; nothing here fails.
pub fn validate(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport::default();
    let has_location = |n: &str| corpus.location_by_name(n).is_some();
    let has_character = |n: &str| corpus.character_by_name(n).is_some();
    let has_object = |n: &str| corpus.object_by_name(n).is_some();

    let all_locations = corpus
        .locations()
        .iter()
        .map(|c| (c, false))
        .chain(corpus.filler_locations().iter().map(|c| (c, true)));
    for (card, in_filler_list) in all_locations {
        if card.name.trim().is_empty() {
            report.error(IssueCode::EmptyName, &card.id, "location name is empty".into());
        }
        if card.is_filler != in_filler_list {
            report.error(
                IssueCode::FillerFlagMismatch,
                &card.id,
                "is_filler flag disagrees with the list the card is stored in".into(),
            );
        }
        if card.is_filler && !(card.neighbors.is_empty() && card.characters.is_empty() && card.objects.is_empty()) {
            report.error(
                IssueCode::FillerWithContent,
                &card.id,
                "filler location lists neighbors, characters or objects".into(),
            );
        }
        check_list(&mut report, &card.id, "neighbors", &card.neighbors);
        check_list(&mut report, &card.id, "characters", &card.characters);
        check_list(&mut report, &card.id, "objects", &card.objects);
        check_refs(&mut report, &card.id, "neighbors", &card.neighbors, has_location);
        check_refs(&mut report, &card.id, "characters", &card.characters, has_character);
        check_refs(&mut report, &card.id, "objects", &card.objects, has_object);
    }

    for card in corpus.characters() {
        if card.name.trim().is_empty() {
            report.error(IssueCode::EmptyName, &card.id, "character name is empty".into());
        }
        let lists = [
            ("carrying", &card.carrying),
            ("wearing", &card.wearing),
            ("wielding", &card.wielding),
        ];
        for (field, list) in lists {
            check_list(&mut report, &card.id, field, list);
            check_refs(&mut report, &card.id, field, list, has_object);
        }
        for (i, (fa, a)) in lists.iter().enumerate() {
            for (fb, b) in &lists[i + 1..] {
                let a: HashSet<_> = a.iter().map(|n| normalize_name(n)).collect();
                for n in b.iter() {
                    if a.contains(&normalize_name(n)) {
                        report.error(
                            IssueCode::OverlappingObjectLists,
                            &card.id,
                            format!("`{n}` appears in both {fa} and {fb}"),
                        );
                    }
                }
            }
        }
    }

    for card in corpus.objects() {
        if card.name.trim().is_empty() {
            report.error(IssueCode::EmptyName, &card.id, "object name is empty".into());
        }
        let mut seen = HashSet::new();
        for a in &card.affordances {
            if !seen.insert(*a) {
                report.error(
                    IssueCode::DuplicateAffordance,
                    &card.id,
                    format!("affordance `{a}` listed twice"),
                );
            }
        }
        if !card.contained_examples.is_empty() && !card.is_container() {
            report.error(
                IssueCode::ContentsWithoutContainer,
                &card.id,
                "contained_examples present without the container affordance".into(),
            );
        }
        check_list(&mut report, &card.id, "contained_examples", &card.contained_examples);
        check_refs(
            &mut report,
            &card.id,
            "contained_examples",
            &card.contained_examples,
            has_object,
        );
    }

    for (kind, groups) in corpus.name_groups() {
        let mut collisions: Vec<_> = groups.into_iter().filter(|(_, n)| *n > 1).collect();
        collisions.sort();
        for (name, n) in collisions {
            report.push(
                Severity::Warning,
                IssueCode::NameCollision,
                name,
                format!("{n} {kind} cards share the folded name `{name}`"),
            );
        }
    }

    for (task, sets) in corpus.splits() {
        for (i, a) in Split::ALL.iter().enumerate() {
            for b in &Split::ALL[i + 1..] {
                for id in sets.get(*a).intersection(sets.get(*b)) {
                    report.error(
                        IssueCode::SplitOverlap,
                        id,
                        format!("task {task}: id in both {a} and {b}"),
                    );
                }
            }
            for id in sets.get(*a) {
                if !corpus.contains_id(id) {
                    report.error(
                        IssueCode::UnknownSplitId,
                        id,
                        format!("task {task}: {a} split names an unknown id"),
                    );
                }
            }
        }
    }

    report
}
