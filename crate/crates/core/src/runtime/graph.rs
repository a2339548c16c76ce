use std::fmt;

use serde::{Deserialize, Serialize};

/// A task identifier drawn from a per-run counter. The root task is `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Timestamp(pub u32);

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// How a join is recorded. Cyclic mode resumes the parent under its old
/// timestamp and adds edges from the children back to it; standard mode
/// resumes under a fresh timestamp.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    Cyclic,
    Standard,
}

impl fmt::Display for GraphMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphMode::Cyclic => "cyclic",
            GraphMode::Standard => "standard",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Fork,
    Join,
}

/// The computation graph. Reachability is kept closed as edges arrive: each
/// vertex stores the bit set of the vertices that precede it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompGraph {
    mode: GraphMode,
    edges: Vec<(Timestamp, Timestamp, EdgeKind)>,
    ancestors: Vec<Vec<u64>>,
}

fn has(bits: &[u64], i: u32) -> bool {
    bits.get(i as usize / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
}

impl CompGraph {
    pub fn new(mode: GraphMode) -> CompGraph {
        CompGraph {
            mode,
            edges: Vec::new(),
            ancestors: Vec::new(),
        }
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    /// Number of timestamps minted so far.
    pub fn len(&self) -> usize {
        self.ancestors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ancestors.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Timestamp> {
        (0..self.ancestors.len() as u32).map(Timestamp)
    }

    pub fn edges(&self) -> &[(Timestamp, Timestamp, EdgeKind)] {
        &self.edges
    }

    pub fn add_vertex(&mut self) -> Timestamp {
        let t = self.ancestors.len() as u32;
        let mut bits = vec![0u64; t as usize / 64 + 1];
        bits[t as usize / 64] |= 1 << (t % 64);
        self.ancestors.push(bits);
        Timestamp(t)
    }

    pub fn add_edge(&mut self, from: Timestamp, to: Timestamp, kind: EdgeKind) {
        self.edges.push((from, to, kind));
        let src = self.ancestors[from.0 as usize].clone();
        for bits in self.ancestors.iter_mut() {
            if has(bits, to.0) {
                if bits.len() < src.len() {
                    bits.resize(src.len(), 0);
                }
                for (w, s) in bits.iter_mut().zip(&src) {
                    *w |= s;
                }
            }
        }
    }

    /// `t1 ≼ t2`: reflexive-transitive reachability.
    pub fn precedes(&self, t1: Timestamp, t2: Timestamp) -> bool {
        self.ancestors
            .get(t2.0 as usize)
            .is_some_and(|bits| has(bits, t1.0))
    }
}
