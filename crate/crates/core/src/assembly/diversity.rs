use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::GameWorld;

/// Distinct elements seen after each map, in batch order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub locations: Vec<usize>,
    pub characters: Vec<usize>,
    pub objects: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub worlds: usize,
    /// Placements per location id (fillers included).
    pub location_frequency: BTreeMap<String, usize>,
    pub filler_ids: Vec<String>,
    /// Non-filler locations only.
    pub coverage: Coverage,
    pub locations_per_map: BTreeMap<usize, usize>,
    pub characters_per_location: BTreeMap<usize, usize>,
    pub objects_per_location: BTreeMap<usize, usize>,
    /// Placements outside the centre cell, and how many of them were fillers.
    pub non_center_placements: usize,
    pub filler_placements: usize,
}

/// Batch statistics over generated worlds. Contained objects count towards
/// object coverage but not towards objects per location.
pub fn diversity_report(worlds: &[GameWorld]) -> DiversityReport {
    let mut r = DiversityReport {
        worlds: worlds.len(),
        ..DiversityReport::default()
    };
    let mut fillers = HashSet::new();
    let mut locs = HashSet::new();
    let mut chars = HashSet::new();
    let mut objs = HashSet::new();
    for world in worlds {
        let center = world.grid.center();
        let mut placed = 0;
        for (i, loc) in world.grid.filled() {
            placed += 1;
            *r.location_frequency.entry(loc.id.clone()).or_insert(0) += 1;
            if loc.is_filler {
                fillers.insert(loc.id.clone());
            } else {
                locs.insert(loc.id.clone());
            }
            if i != center {
                r.non_center_placements += 1;
                r.filler_placements += usize::from(loc.is_filler);
            }
            *r.characters_per_location.entry(loc.characters.len()).or_insert(0) += 1;
            *r.objects_per_location.entry(loc.objects.len()).or_insert(0) += 1;
            chars.extend(loc.characters.iter().map(|c| c.id.clone()));
            for o in &loc.objects {
                objs.insert(o.id.clone());
                objs.extend(o.contents.iter().map(|c| c.id.clone()));
            }
        }
        *r.locations_per_map.entry(placed).or_insert(0) += 1;
        r.coverage.locations.push(locs.len());
        r.coverage.characters.push(chars.len());
        r.coverage.objects.push(objs.len());
    }
    r.filler_ids = fillers.into_iter().collect();
    r.filler_ids.sort();
    r
}

impl DiversityReport {
    pub fn total_placements(&self) -> usize {
        self.location_frequency.values().sum()
    }

    pub fn filler_fraction(&self) -> f64 {
        if self.non_center_placements == 0 {
            0.0
        } else {
            self.filler_placements as f64 / self.non_center_placements as f64
        }
    }

    /// `location_id,is_filler,placements`, most frequent first.
    pub fn frequency_csv(&self) -> Result<String, csv::Error> {
        let fillers: HashSet<&String> = self.filler_ids.iter().collect();
        let mut rows: Vec<(&String, &usize)> = self.location_frequency.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["location_id", "is_filler", "placements"])?;
        for (id, n) in rows {
            w.write_record([id.as_str(), &fillers.contains(id).to_string(), &n.to_string()])?;
        }
        finish(w)
    }

    /// `maps,locations,characters,objects`.
    pub fn coverage_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["maps", "locations", "characters", "objects"])?;
        for i in 0..self.coverage.locations.len() {
            w.write_record([
                (i + 1).to_string(),
                self.coverage.locations[i].to_string(),
                self.coverage.characters[i].to_string(),
                self.coverage.objects[i].to_string(),
            ])?;
        }
        finish(w)
    }

    /// `histogram,value,count` for the three count histograms.
    pub fn histograms_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["histogram", "value", "count"])?;
        for (name, h) in [
            ("locations_per_map", &self.locations_per_map),
            ("characters_per_location", &self.characters_per_location),
            ("objects_per_location", &self.objects_per_location),
        ] {
            for (v, c) in h {
                w.write_record([name, &v.to_string(), &c.to_string()])?;
            }
        }
        finish(w)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, csv::Error> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::super::{create_worlds, GenerationConfig, ScorerSet};
    use super::*;
    use crate::corpus::sample_corpus;
    use crate::ranking::RandomScorer;

    fn batch(n: usize, seed: u64) -> Vec<GameWorld> {
        let config = GenerationConfig {
            seed,
            ..GenerationConfig::default()
        };
        create_worlds(&sample_corpus(), ScorerSet::uniform(&RandomScorer), &config, n).unwrap()
    }

    #[test]
    fn single_world_coverage() {
        let worlds = batch(1, 4);
        let r = diversity_report(&worlds);
        let w = &worlds[0];
        let locs: HashSet<_> = w
            .grid
            .filled()
            .filter(|(_, l)| !l.is_filler)
            .map(|(_, l)| &l.id)
            .collect();
        assert_eq!(r.coverage.locations, vec![locs.len()]);
        assert_eq!(r.total_placements(), w.location_count());
        assert_eq!(r.locations_per_map, BTreeMap::from([(w.location_count(), 1)]));
    }

    #[test]
    fn identical_worlds_give_flat_coverage() {
        let w = batch(1, 9).pop().unwrap();
        let r = diversity_report(&[w.clone(), w.clone(), w]);
        for curve in [&r.coverage.locations, &r.coverage.characters, &r.coverage.objects] {
            assert!(curve.windows(2).all(|p| p[0] == p[1]));
        }
    }

    #[test]
    fn invariants_and_csv() {
        let worlds = batch(30, 100);
        let r = diversity_report(&worlds);
        let corpus = sample_corpus();
        for curve in [&r.coverage.locations, &r.coverage.characters, &r.coverage.objects] {
            assert!(curve.windows(2).all(|p| p[0] <= p[1]));
        }
        assert!(*r.coverage.locations.last().unwrap() <= corpus.locations().len());
        let placed: usize = worlds.iter().map(|w| w.location_count()).sum();
        assert_eq!(r.total_placements(), placed);
        assert_eq!(r.coverage_csv().unwrap().lines().count(), 31);
        assert!(r
            .frequency_csv()
            .unwrap()
            .starts_with("location_id,is_filler,placements\n"));
        assert!(r.histograms_csv().unwrap().contains("characters_per_location"));
    }
}
