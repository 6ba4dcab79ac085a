//! JSON instance files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::games::keg::CycleClass;
use crate::games::knapsack::RangeRow;
use crate::games::{DuopolyGame, KegGame, KegGraph, KnapsackGame, KnapsackPlayer, LotPlayer, LotSizingGame};
use crate::model::BilateralGame;

/// Writes integral values as JSON integers.
fn numbers<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.fract() == 0.0 && x.abs() < 9.0e15 {
            seq.serialize_element(&(*x as i64))?;
        } else {
            seq.serialize_element(x)?;
        }
    }
    seq.end()
}

fn number<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        s.serialize_i64(*x as i64)
    } else {
        s.serialize_f64(*x)
    }
}

fn optional_numbers<S: Serializer>(v: &[Option<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        match x {
            Some(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => seq.serialize_element(&Some(*x as i64))?,
            Some(x) => seq.serialize_element(&Some(*x))?,
            None => seq.serialize_element(&None::<f64>)?,
        }
    }
    seq.end()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
struct Numbers(#[serde(serialize_with = "numbers")] Vec<f64>);

fn default_len() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowFile {
    w: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KnapsackPlayerFile {
    #[serde(serialize_with = "numbers")]
    v: Vec<f64>,
    w: Vec<i64>,
    #[serde(serialize_with = "number")]
    budget: f64,
    #[serde(default)]
    c: BTreeMap<String, Numbers>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    rows: Vec<RowFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexFile {
    id: u64,
    country: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LotPlayerFile {
    #[serde(rename = "F", serialize_with = "numbers")]
    setup: Vec<f64>,
    #[serde(rename = "C", serialize_with = "numbers")]
    unit: Vec<f64>,
    #[serde(rename = "H", default, serialize_with = "numbers")]
    holding: Vec<f64>,
    #[serde(rename = "M", default, serialize_with = "optional_numbers")]
    capacity: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "game", rename_all = "lowercase", deny_unknown_fields)]
enum InstanceFile {
    Knapsack {
        m: usize,
        n: usize,
        players: Vec<KnapsackPlayerFile>,
    },
    Keg {
        #[serde(rename = "L", default = "default_len")]
        max_len: usize,
        vertices: Vec<VertexFile>,
        arcs: Vec<[u64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        maximal: Option<bool>,
    },
    Lotsizing {
        m: usize,
        #[serde(rename = "T")]
        periods: usize,
        #[serde(serialize_with = "numbers")]
        a: Vec<f64>,
        #[serde(serialize_with = "numbers")]
        b: Vec<f64>,
        players: Vec<LotPlayerFile>,
    },
    Duopoly {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
}

/// A parsed game of any supported kind.
#[derive(Clone, Debug)]
pub enum Instance {
    Knapsack(KnapsackGame),
    Keg(KegGame),
    LotSizing(LotSizingGame),
    Duopoly(DuopolyGame),
}

impl Instance {
    pub fn game(&self) -> &dyn BilateralGame {
        match self {
            Instance::Knapsack(g) => g,
            Instance::Keg(g) => g,
            Instance::LotSizing(g) => g,
            Instance::Duopoly(g) => g,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Knapsack(_) => "knapsack",
            Instance::Keg(_) => "keg",
            Instance::LotSizing(_) => "lotsizing",
            Instance::Duopoly(_) => "duopoly",
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match file {
            InstanceFile::Knapsack { m, n, players } => knapsack_from_file(m, n, players).map(Instance::Knapsack),
            InstanceFile::Keg { max_len, vertices, arcs, maximal } => {
                let mut vs = Vec::with_capacity(vertices.len());
                for v in vertices {
                    let c = match v.country.as_str() {
                        "A" | "a" => 0,
                        "B" | "b" => 1,
                        other => return Err(Error::InvalidInput(format!("vertex {}: unknown country {other:?}", v.id))),
                    };
                    vs.push((v.id, c));
                }
                let graph = KegGraph::new(vs, arcs.into_iter().map(|[u, v]| (u, v)).collect(), max_len)?;
                Ok(Instance::Keg(KegGame::new(graph, maximal.unwrap_or(true))))
            }
            InstanceFile::Lotsizing { m, periods, a, b, players } => {
                if players.len() != m {
                    return Err(Error::InvalidInput(format!("m = {m} but {} players listed", players.len())));
                }
                let players = players
                    .into_iter()
                    .map(|pl| LotPlayer {
                        holding: if pl.holding.is_empty() { vec![0.0; periods] } else { pl.holding },
                        capacity: if pl.capacity.is_empty() { vec![None; periods] } else { pl.capacity },
                        setup: pl.setup,
                        unit: pl.unit,
                    })
                    .collect();
                Ok(Instance::LotSizing(LotSizingGame::new(periods, a, b, players)?))
            }
            InstanceFile::Duopoly { bound } => {
                if let Some(b) = bound {
                    if !(b.is_finite() && b >= 0.0) {
                        return Err(Error::InvalidInput(format!("duopoly bound must be finite and nonnegative, got {b}")));
                    }
                }
                Ok(Instance::Duopoly(DuopolyGame { bound }))
            }
        }
    }

    pub fn to_json(&self) -> String {
        let file = match self {
            Instance::Knapsack(g) => InstanceFile::Knapsack {
                m: g.players.len(),
                n: g.n,
                players: g
                    .players
                    .iter()
                    .map(|pl| KnapsackPlayerFile {
                        v: pl.v.clone(),
                        w: pl.w.clone(),
                        budget: pl.budget,
                        c: pl
                            .c
                            .iter()
                            .enumerate()
                            .filter(|(_, ck)| !ck.is_empty())
                            .map(|(k, ck)| (k.to_string(), Numbers(ck.clone())))
                            .collect(),
                        rows: pl.rows.iter().map(|r| RowFile { w: r.w.clone(), lo: r.lo, hi: r.hi }).collect(),
                    })
                    .collect(),
            },
            Instance::Keg(g) => InstanceFile::Keg {
                max_len: g.graph.max_len,
                vertices: g
                    .graph
                    .ids
                    .iter()
                    .zip(&g.graph.country)
                    .map(|(id, c)| VertexFile { id: *id, country: if *c == 0 { "A" } else { "B" }.to_string() })
                    .collect(),
                arcs: g.graph.arcs.iter().map(|&(u, v)| [g.graph.ids[u], g.graph.ids[v]]).collect(),
                maximal: Some(g.maximal),
            },
            Instance::LotSizing(g) => InstanceFile::Lotsizing {
                m: g.players.len(),
                periods: g.periods,
                a: g.a.clone(),
                b: g.b.clone(),
                players: g
                    .players
                    .iter()
                    .map(|pl| LotPlayerFile {
                        setup: pl.setup.clone(),
                        unit: pl.unit.clone(),
                        holding: pl.holding.clone(),
                        capacity: pl.capacity.clone(),
                    })
                    .collect(),
            },
            Instance::Duopoly(g) => InstanceFile::Duopoly { bound: g.bound },
        };
        let mut out = serde_json::to_string_pretty(&file).expect("instance serializes");
        out.push('\n');
        out
    }

    /// Number of national and international cycles, for kidney-exchange games.
    pub fn cycle_counts(&self) -> Option<[usize; 3]> {
        match self {
            Instance::Keg(g) => {
                let count = |cls: CycleClass| g.cycles.iter().filter(|c| c.class == cls).count();
                Some([count(CycleClass::National(0)), count(CycleClass::National(1)), count(CycleClass::International)])
            }
            _ => None,
        }
    }
}

fn knapsack_from_file(m: usize, n: usize, players: Vec<KnapsackPlayerFile>) -> Result<KnapsackGame> {
    if players.len() != m {
        return Err(Error::InvalidInput(format!("m = {m} but {} players listed", players.len())));
    }
    let mut out = Vec::with_capacity(m);
    for (p, pl) in players.into_iter().enumerate() {
        let mut c = vec![Vec::new(); m];
        for (key, row) in pl.c {
            let k: usize =
                key.parse().map_err(|_| Error::InvalidInput(format!("player {p}: interaction key {key:?} is not a player index")))?;
            if k >= m || k == p {
                return Err(Error::InvalidInput(format!("player {p}: interaction key {k} is not an opponent")));
            }
            c[k] = row.0;
        }
        for (k, ck) in c.iter_mut().enumerate() {
            if k != p && ck.is_empty() {
                *ck = vec![0.0; n];
            }
        }
        out.push(KnapsackPlayer {
            v: pl.v,
            w: pl.w,
            budget: pl.budget,
            c,
            rows: pl.rows.into_iter().map(|r| RangeRow { w: r.w, lo: r.lo, hi: r.hi }).collect(),
        });
    }
    KnapsackGame::new(n, out)
}
