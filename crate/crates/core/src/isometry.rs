//! Isometry groups of finite metric spaces.
//!
//! Isometries are permutations of point indices. The full group is found by
//! backtracking over point images, pruned by each point's sorted distance
//! profile and by consistency with the images already assigned.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::metric::FiniteMetricSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsometryError {
    #[error("search budget exceeded: {0} points is above the configured limit")]
    SearchBudgetExceeded(usize),
    #[error("search budget exceeded: group order above {0}")]
    OrderBudgetExceeded(usize),
    #[error("isometries act on spaces of different sizes")]
    MismatchedSpaces,
    #[error("permutation {0} is not an element of this group")]
    UnknownElement(Isometry),
    #[error("invalid permutation text {0:?}")]
    BadPermutation(String),
}

pub type Result<T> = std::result::Result<T, IsometryError>;

/// A permutation of point indices in image notation: `perm[i]` is the image of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Isometry(Vec<usize>);

impl Isometry {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Wrap a vector after checking it is a permutation of `0..len`.
    pub fn from_perm(perm: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return None;
            }
        }
        Some(Self(perm))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        if self.len() != other.len() {
            return Err(IsometryError::MismatchedSpaces);
        }
        Ok(Isometry(other.0.iter().map(|&j| self.0[j]).collect()))
    }

    pub fn inverse(&self) -> Isometry {
        let mut inv = vec![0; self.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Isometry(inv)
    }

    /// Whether the permutation preserves every distance of `space` within its tolerance.
    pub fn preserves(&self, space: &FiniteMetricSpace) -> bool {
        let n = space.len();
        self.len() == n
            && (0..n).all(|i| {
                (i + 1..n).all(|j| space.approx_eq(space.dist(self.0[i], self.0[j]), space.dist(i, j)))
            })
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for Isometry {
    type Err = IsometryError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || IsometryError::BadPermutation(s.to_string());
        let inner = s.trim().strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
        let perm = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        Isometry::from_perm(perm).ok_or_else(bad)
    }
}

impl serde::Serialize for Isometry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Limits on the isometry search.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub max_points: usize,
    pub max_order: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_points: 64, max_order: 1 << 20 }
    }
}

/// The full isometry group of a finite metric space, materialized.
///
/// Element 0 is always the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryGroup {
    space: Arc<FiniteMetricSpace>,
    elements: Vec<Isometry>,
    index: HashMap<Isometry, usize>,
}

impl IsometryGroup {
    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn elements(&self) -> &[Isometry] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, idx: usize) -> &Isometry {
        &self.elements[idx]
    }

    pub fn identity(&self) -> &Isometry {
        &self.elements[0]
    }

    pub fn index_of(&self, g: &Isometry) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &Isometry) -> bool {
        self.index.contains_key(g)
    }

    fn require(&self, g: &Isometry) -> Result<usize> {
        if g.len() != self.space.len() {
            return Err(IsometryError::MismatchedSpaces);
        }
        self.index_of(g).ok_or_else(|| IsometryError::UnknownElement(g.clone()))
    }

    /// Group law on members; both arguments must belong to this group.
    pub fn compose(&self, g: &Isometry, h: &Isometry) -> Result<Isometry> {
        self.require(g)?;
        self.require(h)?;
        g.compose(h)
    }

    pub fn inverse(&self, g: &Isometry) -> Result<Isometry> {
        self.require(g)?;
        Ok(g.inverse())
    }

    /// Index of `g_a ∘ g_b`.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        let gh = self.elements[a].compose(&self.elements[b]).expect("same space");
        self.index[&gh]
    }

    /// Index of `g_a⁻¹`.
    pub fn inv(&self, a: usize) -> usize {
        self.index[&self.elements[a].inverse()]
    }

    /// Full multiplication table, `table[a][b] = mul(a, b)`.
    pub fn cayley_table(&self) -> Vec<Vec<usize>> {
        (0..self.order())
            .map(|a| (0..self.order()).map(|b| self.mul(a, b)).collect())
            .collect()
    }
}

pub fn isometry_group(space: &FiniteMetricSpace) -> Result<IsometryGroup> {
    isometry_group_with_limits(space, SearchLimits::default())
}

pub fn isometry_group_with_limits(space: &FiniteMetricSpace, limits: SearchLimits) -> Result<IsometryGroup> {
    let n = space.len();
    if n > limits.max_points {
        return Err(IsometryError::SearchBudgetExceeded(n));
    }

    let profiles: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = space.matrix()[i].clone();
            row.sort_by(f64::total_cmp);
            row
        })
        .collect();
    // candidates[i]: points whose distance profile matches that of i.
    let candidates: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    profiles[i]
                        .iter()
                        .zip(&profiles[j])
                        .all(|(a, b)| space.approx_eq(*a, *b))
                })
                .collect()
        })
        .collect();

    let mut search = Search {
        space,
        candidates: &candidates,
        image: Vec::with_capacity(n),
        used: vec![false; n],
        found: Vec::new(),
        max_order: limits.max_order,
    };
    search.extend()?;

    let elements = search.found;
    debug_assert!(elements.first().is_some_and(Isometry::is_identity));
    let index = elements.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
    Ok(IsometryGroup {
        space: Arc::new(space.clone()),
        elements,
        index,
    })
}

struct Search<'a> {
    space: &'a FiniteMetricSpace,
    candidates: &'a [Vec<usize>],
    image: Vec<usize>,
    used: Vec<bool>,
    found: Vec<Isometry>,
    max_order: usize,
}

impl Search<'_> {
    // Candidates are tried in increasing order, so the identity is found first
    // and elements come out in lexicographic order.
    fn extend(&mut self) -> Result<()> {
        let i = self.image.len();
        if i == self.space.len() {
            if self.found.len() == self.max_order {
                return Err(IsometryError::OrderBudgetExceeded(self.max_order));
            }
            self.found.push(Isometry(self.image.clone()));
            return Ok(());
        }
        for &j in &self.candidates[i] {
            if self.used[j] {
                continue;
            }
            let consistent = self
                .image
                .iter()
                .enumerate()
                .all(|(prev, &img)| self.space.approx_eq(self.space.dist(img, j), self.space.dist(prev, i)));
            if !consistent {
                continue;
            }
            self.used[j] = true;
            self.image.push(j);
            let r = self.extend();
            self.image.pop();
            self.used[j] = false;
            r?;
        }
        Ok(())
    }
}
