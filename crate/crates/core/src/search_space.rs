//! Discrete parameter lattices and the neighbour operator shared by every
//! optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{self, RheaParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension `{0}` needs at least two values")]
    TooFewValues(String),
    #[error("a search space needs at least one dimension")]
    Empty,
    #[error("point {point:?} is outside the space (cardinalities {cardinalities:?})")]
    OutOfRange {
        point: Vec<usize>,
        cardinalities: Vec<usize>,
    },
    #[error("dimension {dim} holds {found}, expected {expected}")]
    WrongType {
        dim: usize,
        found: String,
        expected: &'static str,
    },
    #[error("{0}")]
    Agent(#[from] agents::InvalidRheaParams),
    #[error("reading space definition: {0}")]
    Json(String),
}

/// A legal value in a dimension's table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub values: Vec<ParamValue>,
}

/// An index vector into a [`SearchSpace`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchPoint(pub Vec<usize>);

impl SearchPoint {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn hamming(&self, other: &SearchPoint) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<usize>> for SearchPoint {
    fn from(v: Vec<usize>) -> Self {
        SearchPoint(v)
    }
}

impl std::fmt::Display for SearchPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceDoc", into = "SpaceDoc")]
pub struct SearchSpace {
    dims: Vec<Dimension>,
    cards: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    dimensions: Vec<Dimension>,
}

impl TryFrom<SpaceDoc> for SearchSpace {
    type Error = SpaceError;

    fn try_from(doc: SpaceDoc) -> Result<Self, Self::Error> {
        SearchSpace::new(doc.dimensions)
    }
}

impl From<SearchSpace> for SpaceDoc {
    fn from(s: SearchSpace) -> Self {
        SpaceDoc { dimensions: s.dims }
    }
}

impl SearchSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self, SpaceError> {
        if dims.is_empty() {
            return Err(SpaceError::Empty);
        }
        if let Some(d) = dims.iter().find(|d| d.values.len() < 2) {
            return Err(SpaceError::TooFewValues(d.name.clone()));
        }
        let cards = dims.iter().map(|d| d.values.len()).collect();
        Ok(SearchSpace { dims, cards })
    }

    /// Integer-valued dimensions `0..c` for each cardinality; handy for
    /// synthetic problems.
    pub fn with_cardinalities(cards: &[usize]) -> Result<Self, SpaceError> {
        SearchSpace::new(
            cards
                .iter()
                .enumerate()
                .map(|(i, &c)| Dimension {
                    name: format!("x{i}"),
                    values: (0..c as i64).map(ParamValue::Int).collect(),
                })
                .collect(),
        )
    }

    /// The five-dimensional RHEA parameter space (288 points).
    pub fn agent() -> Self {
        let ints = |v: &[i64]| v.iter().map(|&x| ParamValue::Int(x)).collect();
        let bools = || vec![ParamValue::Bool(false), ParamValue::Bool(true)];
        let dim = |name: &str, values| Dimension {
            name: name.into(),
            values,
        };
        SearchSpace::new(vec![
            dim(
                "nbMutatedPoints",
                ints(&agents::NB_MUTATED_POINTS.map(i64::from)),
            ),
            dim("flipAtLeastOneBit", bools()),
            dim("useShiftBuffer", bools()),
            dim("nbResamples", ints(&agents::NB_RESAMPLES.map(i64::from))),
            dim(
                "sequenceLength",
                ints(&agents::SEQUENCE_LENGTH.map(|l| l as i64)),
            ),
        ])
        .expect("agent space is well formed")
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        serde_json::from_str(text).map_err(|e| SpaceError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn dims(&self) -> usize {
        self.dims.len()
    }

    pub fn dimension(&self, d: usize) -> &Dimension {
        &self.dims[d]
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn size(&self) -> usize {
        self.cards.iter().product()
    }

    pub fn contains(&self, p: &SearchPoint) -> bool {
        p.0.len() == self.cards.len() && p.0.iter().zip(&self.cards).all(|(i, c)| i < c)
    }

    pub fn check(&self, p: &SearchPoint) -> Result<(), SpaceError> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(SpaceError::OutOfRange {
                point: p.0.clone(),
                cardinalities: self.cards.clone(),
            })
        }
    }

    /// Lexicographic rank of a point (last dimension varies fastest).
    pub fn rank(&self, p: &SearchPoint) -> usize {
        p.0.iter()
            .zip(&self.cards)
            .fold(0, |acc, (i, c)| acc * c + i)
    }

    pub fn unrank(&self, mut rank: usize) -> SearchPoint {
        let mut idx = vec![0; self.cards.len()];
        for (slot, c) in idx.iter_mut().zip(&self.cards).rev() {
            *slot = rank % c;
            rank /= c;
        }
        SearchPoint(idx)
    }

    /// All points in lexicographic order.
    pub fn enumerate(&self) -> impl Iterator<Item = SearchPoint> + '_ {
        (0..self.size()).map(|r| self.unrank(r))
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SearchPoint {
        SearchPoint(self.cards.iter().map(|&c| rng.gen_range(0..c)).collect())
    }

    /// Neighbour with the default per-dimension resampling rate `1/D`.
    pub fn mutate_point<R: Rng + ?Sized>(&self, p: &SearchPoint, rng: &mut R) -> SearchPoint {
        self.mutate_point_with_rate(p, 1.0 / self.dims() as f64, rng)
    }

    /// Resamples each dimension uniformly with probability `rate`, then forces
    /// one uniformly chosen dimension to an index different from the input's.
    /// The result never equals the input.
    pub fn mutate_point_with_rate<R: Rng + ?Sized>(
        &self,
        p: &SearchPoint,
        rate: f64,
        rng: &mut R,
    ) -> SearchPoint {
        let mut out = p.0.clone();
        for (x, &c) in out.iter_mut().zip(&self.cards) {
            if rng.gen::<f64>() < rate {
                *x = rng.gen_range(0..c);
            }
        }
        let d = rng.gen_range(0..self.dims());
        let c = self.cards[d];
        out[d] = (p.0[d] + rng.gen_range(1..c)) % c;
        SearchPoint(out)
    }

    pub fn value(&self, p: &SearchPoint, d: usize) -> &ParamValue {
        &self.dims[d].values[p.0[d]]
    }

    /// `name=value` pairs, for reports.
    pub fn describe(&self, p: &SearchPoint) -> String {
        (0..self.dims())
            .map(|d| format!("{}={}", self.dims[d].name, self.value(p, d)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Maps a point of a five-dimensional agent-shaped space to RHEA settings
    /// through the value tables.
    pub fn decode_agent(&self, p: &SearchPoint) -> Result<RheaParams, SpaceError> {
        self.check(p)?;
        if self.dims() != 5 {
            return Err(SpaceError::OutOfRange {
                point: p.0.clone(),
                cardinalities: self.cards.clone(),
            });
        }
        let int = |d: usize| match self.value(p, d) {
            ParamValue::Int(i) if *i >= 0 => Ok(*i as u64),
            ParamValue::Real(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as u64),
            other => Err(SpaceError::WrongType {
                dim: d,
                found: other.to_string(),
                expected: "non-negative integer",
            }),
        };
        let boolean = |d: usize| match self.value(p, d) {
            ParamValue::Bool(b) => Ok(*b),
            other => Err(SpaceError::WrongType {
                dim: d,
                found: other.to_string(),
                expected: "boolean",
            }),
        };
        let params = RheaParams {
            nb_mutated_points: int(0)? as u32,
            flip_at_least_one_bit: boolean(1)?,
            use_shift_buffer: boolean(2)?,
            nb_resamples: int(3)? as u32,
            sequence_length: int(4)? as usize,
        };
        params.validate()?;
        Ok(params)
    }

    /// Inverse of [`SearchSpace::decode_agent`].
    pub fn encode_agent(&self, params: &RheaParams) -> Option<SearchPoint> {
        self.enumerate()
            .find(|p| self.decode_agent(p).ok().as_ref() == Some(params))
    }
}
