//! Concrete CSP instances: relations, constraints, assignments and the
//! versioned JSON instance file.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Params, MAX_TUPLE_SPACE};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// A set of permitted tuples over `[0, d)^arity`, stored as a bitset indexed
/// by the row-major tuple index `sum(t[i] * d^(arity - 1 - i))`. Index order
/// coincides with lexicographic tuple order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    arity: usize,
    d: usize,
    space: usize,
    len: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(arity: usize, d: usize) -> Result<Self> {
        let space = checked_space(d, arity)?;
        Ok(Relation {
            arity,
            d,
            space,
            len: 0,
            bits: vec![0; space.div_ceil(64)],
        })
    }

    pub fn full(arity: usize, d: usize) -> Result<Self> {
        let mut rel = Relation::empty(arity, d)?;
        for idx in 0..rel.space {
            rel.insert_index(idx);
        }
        Ok(rel)
    }

    pub fn from_indices(arity: usize, d: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut rel = Relation::empty(arity, d)?;
        for idx in indices {
            if idx >= rel.space {
                return Err(Error::IndexOutOfRange {
                    what: "tuple",
                    index: idx,
                    bound: rel.space,
                });
            }
            if !rel.insert_index(idx) {
                return Err(Error::MalformedInstance(format!("duplicate tuple index {idx}")));
            }
        }
        Ok(rel)
    }

    pub fn from_tuples<T: AsRef<[usize]>>(arity: usize, d: usize, tuples: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut rel = Relation::empty(arity, d)?;
        for t in tuples {
            let t = t.as_ref();
            let idx = rel.index_of(t)?;
            if !rel.insert_index(idx) {
                return Err(Error::MalformedInstance(format!("duplicate tuple {t:?}")));
            }
        }
        Ok(rel)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.d
    }

    /// `d^arity`.
    pub fn space(&self) -> usize {
        self.space
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Multiplier of coordinate `pos` in the tuple index.
    pub fn stride(&self, pos: usize) -> usize {
        self.d.pow((self.arity - 1 - pos) as u32)
    }

    #[inline]
    pub fn contains_index(&self, idx: usize) -> bool {
        self.bits[idx >> 6] >> (idx & 63) & 1 == 1
    }

    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.index_of(tuple).is_ok_and(|idx| self.contains_index(idx))
    }

    /// Returns `true` when the tuple was not present before.
    pub fn insert_index(&mut self, idx: usize) -> bool {
        let word = &mut self.bits[idx >> 6];
        let mask = 1u64 << (idx & 63);
        let fresh = *word & mask == 0;
        *word |= mask;
        self.len += usize::from(fresh);
        fresh
    }

    /// Returns `true` when the tuple was present before.
    pub fn remove_index(&mut self, idx: usize) -> bool {
        let word = &mut self.bits[idx >> 6];
        let mask = 1u64 << (idx & 63);
        let present = *word & mask != 0;
        *word &= !mask;
        self.len -= usize::from(present);
        present
    }

    pub fn index_of(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.arity {
            return Err(Error::DimensionMismatch(format!(
                "tuple of length {} for a relation of arity {}",
                tuple.len(),
                self.arity
            )));
        }
        tuple.iter().try_fold(0usize, |acc, &v| {
            if v >= self.d {
                Err(Error::IndexOutOfRange {
                    what: "value",
                    index: v,
                    bound: self.d,
                })
            } else {
                Ok(acc * self.d + v)
            }
        })
    }

    pub fn tuple_of(&self, mut idx: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.arity];
        for slot in tuple.iter_mut().rev() {
            *slot = idx % self.d;
            idx /= self.d;
        }
        tuple
    }

    /// Permitted tuple indices in increasing (lexicographic) order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + bit)
            })
        })
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.indices().map(|idx| self.tuple_of(idx))
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.tuples()).finish()
    }
}

fn checked_space(d: usize, arity: usize) -> Result<usize> {
    let overflow = || Error::TupleSpaceOverflow {
        d: d as u64,
        k: arity,
        max: MAX_TUPLE_SPACE,
    };
    let space = (d as u64)
        .checked_pow(u32::try_from(arity).map_err(|_| overflow())?)
        .ok_or_else(overflow)?;
    if space > MAX_TUPLE_SPACE {
        return Err(overflow());
    }
    Ok(space as usize)
}

/// A scope of distinct variables together with its permitted tuples.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub scope: Vec<usize>,
    pub relation: Relation,
}

impl Constraint {
    pub fn new(scope: Vec<usize>, relation: Relation) -> Result<Self> {
        if scope.len() != relation.arity() {
            return Err(Error::DimensionMismatch(format!(
                "scope of length {} with a relation of arity {}",
                scope.len(),
                relation.arity()
            )));
        }
        Ok(Constraint { scope, relation })
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn position_of(&self, var: usize) -> Option<usize> {
        self.scope.iter().position(|&x| x == var)
    }

    /// Whether the scope-projection of `values` is permitted.
    #[inline]
    pub fn allows(&self, values: &[usize]) -> bool {
        let d = self.relation.domain_size();
        let idx = self.scope.iter().fold(0usize, |acc, &x| acc * d + values[x]);
        self.relation.contains_index(idx)
    }
}

/// How an instance came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Symmetric,
    Handcrafted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    /// Shared symmetry set of the symmetric generator, as sorted tuples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_relation: Option<Vec<Vec<usize>>>,
    /// Transformations applied after generation, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derivation: Vec<String>,
}

impl Provenance {
    pub fn handcrafted() -> Self {
        Provenance {
            variant: Variant::Handcrafted,
            seed: None,
            params: None,
            base_relation: None,
            derivation: Vec::new(),
        }
    }

    pub fn generated(variant: Variant, params: Params) -> Self {
        Provenance {
            variant,
            seed: Some(params.seed),
            params: Some(params),
            base_relation: None,
            derivation: Vec::new(),
        }
    }

    pub(crate) fn derived(&self, step: String) -> Self {
        let mut next = self.clone();
        next.derivation.push(step);
        next
    }
}

/// A CSP over `n` variables sharing the domain `[0, d)`.
///
/// `k` is the arity the instance was generated with; restriction can leave
/// constraints of lower arity behind, never higher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "InstanceFile", try_from = "InstanceFile")]
pub struct Instance {
    n: usize,
    d: usize,
    k: usize,
    constraints: Vec<Constraint>,
    provenance: Provenance,
}

impl Instance {
    pub fn new(n: usize, d: usize, k: usize, constraints: Vec<Constraint>, provenance: Provenance) -> Result<Self> {
        if d == 0 {
            return Err(Error::MalformedInstance("domain size must be positive".into()));
        }
        for (i, c) in constraints.iter().enumerate() {
            if c.arity() > k {
                return Err(Error::MalformedInstance(format!(
                    "constraint {i} has arity {} above k = {k}",
                    c.arity()
                )));
            }
            if c.relation.domain_size() != d {
                return Err(Error::MalformedInstance(format!(
                    "constraint {i} uses domain size {} instead of {d}",
                    c.relation.domain_size()
                )));
            }
            for (j, &x) in c.scope.iter().enumerate() {
                if x >= n {
                    return Err(Error::MalformedInstance(format!(
                        "constraint {i} mentions variable {x} outside [0, {n})"
                    )));
                }
                if c.scope[..j].contains(&x) {
                    return Err(Error::MalformedInstance(format!(
                        "constraint {i} repeats variable {x} in its scope"
                    )));
                }
            }
        }
        Ok(Instance {
            n,
            d,
            k,
            constraints,
            provenance,
        })
    }

    pub fn handcrafted(n: usize, d: usize, k: usize, constraints: Vec<Constraint>) -> Result<Self> {
        Instance::new(n, d, k, constraints, Provenance::handcrafted())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `d^n` as a float, for guard checks.
    pub fn assignment_space(&self) -> f64 {
        (self.d as f64).powi(self.n as i32)
    }

    /// A validated instance on `n` variables sharing this one's domain, arity
    /// and provenance, with `step` appended to the derivation log.
    pub(crate) fn derive(&self, n: usize, constraints: Vec<Constraint>, step: String) -> Result<Self> {
        Instance::new(n, self.d, self.k, constraints, self.provenance.derived(step))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A total assignment of values to variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn check_against(&self, instance: &Instance) -> Result<()> {
        if self.0.len() != instance.n() {
            return Err(Error::DimensionMismatch(format!(
                "assignment of length {} for {} variables",
                self.0.len(),
                instance.n()
            )));
        }
        if let Some(&v) = self.0.iter().find(|&&v| v >= instance.d()) {
            return Err(Error::IndexOutOfRange {
                what: "value",
                index: v,
                bound: instance.d(),
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ConstraintFile {
    scope: Vec<usize>,
    relation: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    n: usize,
    d: usize,
    k: usize,
    constraints: Vec<ConstraintFile>,
    provenance: Provenance,
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile {
            version: INSTANCE_FORMAT_VERSION,
            n: inst.n,
            d: inst.d,
            k: inst.k,
            constraints: inst
                .constraints
                .iter()
                .map(|c| ConstraintFile {
                    scope: c.scope.clone(),
                    relation: c.relation.tuples().collect(),
                })
                .collect(),
            provenance: inst.provenance,
        }
    }
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.version != INSTANCE_FORMAT_VERSION {
            return Err(Error::MalformedInstance(format!(
                "unsupported instance format version {}",
                file.version
            )));
        }
        let constraints = file
            .constraints
            .into_iter()
            .map(|c| {
                let relation = Relation::from_tuples(c.scope.len(), file.d, &c.relation)?;
                Constraint::new(c.scope, relation)
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(file.n, file.d, file.k, constraints, file.provenance)
    }
}
