//! Relation statements over city pairs and corpus sampling.
//!
//! Every ordered pair of cities yields exactly one three-token statement,
//! `[city] [relation] [city]`. A corpus is a multiset of those statements,
//! drawn either uniformly (every statement equally often) or with
//! probability tied to the distance between the two cities.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapgen::{true_distances, CityMap, TrueDistances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    NearTo,
    FarFrom,
    NorthOf,
    SouthOf,
    EastOf,
    WestOf,
}

impl Relation {
    pub fn token(&self) -> &'static str {
        match self {
            Relation::NearTo => "near_to",
            Relation::FarFrom => "far_from",
            Relation::NorthOf => "north_of",
            Relation::SouthOf => "south_of",
            Relation::EastOf => "east_of",
            Relation::WestOf => "west_of",
        }
    }

    pub fn from_token(token: &str) -> Result<Relation> {
        match token {
            "near_to" => Ok(Relation::NearTo),
            "far_from" => Ok(Relation::FarFrom),
            "north_of" => Ok(Relation::NorthOf),
            "south_of" => Ok(Relation::SouthOf),
            "east_of" => Ok(Relation::EastOf),
            "west_of" => Ok(Relation::WestOf),
            other => Err(Error::parse(format!("unknown relation token '{other}'"))),
        }
    }
}

/// Which family of relations a statement set uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationSet {
    #[serde(rename = "nf")]
    NearFar,
    #[serde(rename = "nsew")]
    Cardinal,
}

impl RelationSet {
    pub fn all() -> [RelationSet; 2] {
        [RelationSet::NearFar, RelationSet::Cardinal]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            RelationSet::NearFar => "nf",
            RelationSet::Cardinal => "nsew",
        }
    }
}

impl std::str::FromStr for RelationSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nf" => Ok(RelationSet::NearFar),
            "nsew" => Ok(RelationSet::Cardinal),
            other => Err(Error::parse(format!("unknown relation set '{other}'"))),
        }
    }
}

impl std::fmt::Display for RelationSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// One `[city] [relation] [city]` statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Statement {
    pub subject: String,
    pub relation: Relation,
    pub object: String,
}

impl Statement {
    pub fn line(&self) -> String {
        format!("{} {} {}", self.subject, self.relation.token(), self.object)
    }

    pub fn parse(line: &str) -> Result<Statement> {
        let mut it = line.split_whitespace();
        let (s, r, o) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some(s), Some(r), Some(o), None) => (s, r, o),
            _ => return Err(Error::parse(format!("expected 3 tokens in '{line}'"))),
        };
        if s == o {
            return Err(Error::parse(format!("statement relates '{s}' to itself")));
        }
        Ok(Statement {
            subject: s.to_string(),
            relation: Relation::from_token(r)?,
            object: o.to_string(),
        })
    }
}

/// Every ordered city pair described exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct StatementSet {
    pub statements: Vec<Statement>,
    pub relation_set: RelationSet,
    pub city_labels: Vec<String>,
}

impl StatementSet {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Sorted unique tokens over all statements.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut vocab: Vec<String> = self
            .statements
            .iter()
            .flat_map(|s| [s.subject.clone(), s.relation.token().to_string(), s.object.clone()])
            .collect();
        vocab.sort();
        vocab.dedup();
        vocab
    }
}

/// Near/far statements: a pair is `far_from` when its distance exceeds the
/// mean pairwise distance, `near_to` otherwise (ties go to near).
pub fn near_far_statements(map: &CityMap) -> StatementSet {
    let d = true_distances(map);
    let mean = d.mean_pairwise();
    let n = map.len();
    let mut statements = Vec::with_capacity(n * n.saturating_sub(1));
    for s in 0..n {
        for o in 0..n {
            if s == o {
                continue;
            }
            let relation = if d.get(s, o) > mean { Relation::FarFrom } else { Relation::NearTo };
            statements.push(Statement {
                subject: map.labels[s].clone(),
                relation,
                object: map.labels[o].clone(),
            });
        }
    }
    StatementSet {
        statements,
        relation_set: RelationSet::NearFar,
        city_labels: map.labels.clone(),
    }
}

/// Quadrant of a bearing measured counterclockwise from +x, with half-open
/// 90-degree sectors offset by 45 degrees: east [-45, 45), north [45, 135),
/// west [135, 225), south [225, 315).
fn quadrant(theta: f64) -> Relation {
    let shifted = (theta.to_degrees() + 45.0).rem_euclid(360.0);
    match (shifted / 90.0).floor() as i64 {
        0 => Relation::EastOf,
        1 => Relation::NorthOf,
        2 => Relation::WestOf,
        _ => Relation::SouthOf,
    }
}

/// Cardinal-direction statements: for each ordered pair, the statement
/// names the subject's position relative to the object, so a city straight
/// above `A` yields `B north_of A`.
pub fn cardinal_statements(map: &CityMap) -> StatementSet {
    let n = map.len();
    let mut statements = Vec::with_capacity(n * n.saturating_sub(1));
    for s in 0..n {
        for o in 0..n {
            if s == o {
                continue;
            }
            let (sx, sy) = map.coords[s];
            let (ox, oy) = map.coords[o];
            let relation = quadrant((sy - oy).atan2(sx - ox));
            statements.push(Statement {
                subject: map.labels[s].clone(),
                relation,
                object: map.labels[o].clone(),
            });
        }
    }
    StatementSet {
        statements,
        relation_set: RelationSet::Cardinal,
        city_labels: map.labels.clone(),
    }
}

pub fn statements_for(map: &CityMap, relations: RelationSet) -> StatementSet {
    match relations {
        RelationSet::NearFar => near_far_statements(map),
        RelationSet::Cardinal => cardinal_statements(map),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Uniform,
    Distance,
}

impl Sampling {
    pub fn all() -> [Sampling; 2] {
        [Sampling::Uniform, Sampling::Distance]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Sampling::Uniform => "uniform",
            Sampling::Distance => "distance",
        }
    }
}

impl std::str::FromStr for Sampling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::Uniform),
            "distance" => Ok(Sampling::Distance),
            other => Err(Error::parse(format!("unknown sampling mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Sampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// An ordered multiset of sampled statements plus its vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Statement>,
    /// Sorted unique tokens: city labels plus relation tokens.
    pub vocabulary: Vec<String>,
    pub sampling: Option<Sampling>,
    pub requested_size: usize,
    pub actual_size: usize,
}

impl Corpus {
    pub fn from_sentences(sentences: Vec<Statement>) -> Corpus {
        let mut vocabulary: Vec<String> = sentences
            .iter()
            .flat_map(|s| [s.subject.clone(), s.relation.token().to_string(), s.object.clone()])
            .collect();
        vocabulary.sort();
        vocabulary.dedup();
        let n = sentences.len();
        Corpus {
            sentences,
            vocabulary,
            sampling: None,
            requested_size: n,
            actual_size: n,
        }
    }

    /// City tokens, i.e. tokens observed in subject or object position.
    pub fn city_tokens(&self) -> Vec<String> {
        let mut cities: Vec<String> = self
            .sentences
            .iter()
            .flat_map(|s| [s.subject.clone(), s.object.clone()])
            .collect();
        cities.sort();
        cities.dedup();
        cities
    }
}

/// Draw a corpus from a statement set.
///
/// Uniform mode replicates every statement exactly `round(size / |set|)`
/// times and shuffles the result. Distance mode draws `size` statements
/// i.i.d. with replacement, weighted by `1/d` between the two cities so
/// that close pairs are mentioned more often; `literal_weights` flips the
/// weight to `d` itself.
pub fn sample_corpus(
    set: &StatementSet,
    mode: Sampling,
    distances: &TrueDistances,
    size: usize,
    seed: u64,
    literal_weights: bool,
) -> Result<Corpus> {
    if set.is_empty() {
        return Err(Error::invalid_argument("empty statement set"));
    }
    if size < set.len() {
        return Err(Error::invalid_argument(format!(
            "requested size {size} is smaller than the statement set ({})",
            set.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentences = match mode {
        Sampling::Uniform => {
            let copies = (size as f64 / set.len() as f64).round() as usize;
            let mut sentences = Vec::with_capacity(copies * set.len());
            for statement in &set.statements {
                for _ in 0..copies {
                    sentences.push(statement.clone());
                }
            }
            sentences.shuffle(&mut rng);
            sentences
        }
        Sampling::Distance => {
            let index: std::collections::BTreeMap<&str, usize> = distances
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.as_str(), i))
                .collect();
            let mut weights = Vec::with_capacity(set.len());
            for statement in &set.statements {
                let i = *index.get(statement.subject.as_str()).ok_or_else(|| {
                    Error::invalid_argument(format!("city '{}' missing from distance matrix", statement.subject))
                })?;
                let j = *index.get(statement.object.as_str()).ok_or_else(|| {
                    Error::invalid_argument(format!("city '{}' missing from distance matrix", statement.object))
                })?;
                let d = distances.get(i, j);
                if d <= 0.0 {
                    return Err(Error::invalid_state(format!(
                        "non-positive distance between '{}' and '{}'",
                        statement.subject, statement.object
                    )));
                }
                weights.push(if literal_weights { d } else { 1.0 / d });
            }
            let dist = WeightedIndex::new(&weights)
                .map_err(|e| Error::invalid_state(format!("bad sampling weights: {e}")))?;
            (0..size).map(|_| set.statements[dist.sample(&mut rng)].clone()).collect()
        }
    };

    let actual_size = sentences.len();
    let mut corpus = Corpus::from_sentences(sentences);
    // Vocabulary comes from the full statement set, so a statement that the
    // sampler happened to miss still contributes its tokens.
    corpus.vocabulary = set.vocabulary();
    corpus.sampling = Some(mode);
    corpus.requested_size = size;
    corpus.actual_size = actual_size;
    Ok(corpus)
}
