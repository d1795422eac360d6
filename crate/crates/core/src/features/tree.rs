//! Symbolic feature trees in canonical form.
//!
//! Canonical string grammar:
//!
//! ```text
//! tree    := "Ic" | "I[" body "]"
//! body    := forcing | factors | forcing ";" factors
//! forcing := "xi^" j            (j ≥ 1)
//! factors := factor ("," factor)*
//! factor  := "(" a "|" tree ")" a := n ("." n)*   (one entry per spatial axis)
//! ```
//!
//! Factors are sorted by `(child key, a)`, so equal trees have equal keys.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::{Error, Result};

/// A derivative order per spatial axis.
pub type MultiIndex = Vec<u32>;

#[derive(Clone, Debug)]
pub struct Factor {
    pub deriv: MultiIndex,
    pub child: FeatureTree,
}

impl Factor {
    pub fn plain(child: FeatureTree, dim: usize) -> Self {
        Self {
            deriv: vec![0; dim],
            child,
        }
    }

    pub fn order(&self) -> u32 {
        self.deriv.iter().sum()
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.child
            .key()
            .cmp(other.child.key())
            .then_with(|| self.deriv.cmp(&other.deriv))
    }
}

#[derive(Debug)]
pub enum Node {
    /// `I_c[u0]`: the initial condition propagated by the semigroup.
    Init,
    /// `I[ξ^j ∏ ∂^a f]`.
    Integral {
        forcing_power: u32,
        factors: Vec<Factor>,
    },
}

#[derive(Debug)]
struct Inner {
    node: Node,
    key: String,
    height: u32,
}

/// Shared, immutable feature tree. Equality, ordering and hashing go through
/// the canonical key.
#[derive(Clone)]
pub struct FeatureTree(Arc<Inner>);

impl FeatureTree {
    pub fn init() -> Self {
        FeatureTree(Arc::new(Inner {
            node: Node::Init,
            key: "Ic".into(),
            height: 0,
        }))
    }

    /// Builds `I[ξ^j ∏ ∂^a f]`, sorting factors into canonical order.
    pub fn integral(forcing_power: u32, mut factors: Vec<Factor>) -> Self {
        factors.sort_by(Factor::cmp_key);
        let mut key = String::from("I[");
        if forcing_power > 0 {
            key.push_str(&format!("xi^{forcing_power}"));
            if !factors.is_empty() {
                key.push(';');
            }
        }
        for (i, f) in factors.iter().enumerate() {
            if i > 0 {
                key.push(',');
            }
            key.push('(');
            let a: Vec<String> = f.deriv.iter().map(u32::to_string).collect();
            key.push_str(&a.join("."));
            key.push('|');
            key.push_str(f.child.key());
            key.push(')');
        }
        key.push(']');
        let height = 1 + factors.iter().map(|f| f.child.height()).max().unwrap_or(0);
        FeatureTree(Arc::new(Inner {
            node: Node::Integral {
                forcing_power,
                factors,
            },
            key,
            height,
        }))
    }

    /// `I[ξ]`.
    pub fn noise_integral() -> Self {
        Self::integral(1, Vec::new())
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn key(&self) -> &str {
        &self.0.key
    }

    /// Structural height: 0 for `I_c[u0]`, otherwise one more than the
    /// tallest child.
    pub fn height(&self) -> u32 {
        self.0.height
    }

    pub fn is_init(&self) -> bool {
        matches!(self.0.node, Node::Init)
    }

    pub fn factors(&self) -> &[Factor] {
        match &self.0.node {
            Node::Init => &[],
            Node::Integral { factors, .. } => factors,
        }
    }

    pub fn forcing_power(&self) -> u32 {
        match &self.0.node {
            Node::Init => 0,
            Node::Integral { forcing_power, .. } => *forcing_power,
        }
    }

    /// Spatial dimension implied by derivative multi-indices, if any factor
    /// exists anywhere in the tree.
    pub fn implied_dim(&self) -> Option<usize> {
        self.factors().first().map(|f| f.deriv.len()).or_else(|| {
            self.factors()
                .iter()
                .find_map(|f| f.child.implied_dim())
        })
    }

    /// Visits every distinct subtree (children before parents), including
    /// `self`.
    pub fn for_each_subtree(&self, f: &mut impl FnMut(&FeatureTree)) {
        for factor in self.factors() {
            factor.child.for_each_subtree(f);
        }
        f(self);
    }

    /// Parses a canonical key.
    pub fn parse(key: &str) -> Result<Self> {
        let mut p = KeyParser { s: key, pos: 0 };
        let t = p.tree()?;
        if p.pos != key.len() {
            return Err(p.err("trailing input"));
        }
        Ok(t)
    }
}

impl PartialEq for FeatureTree {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for FeatureTree {}

impl Hash for FeatureTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for FeatureTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FeatureTree {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(other.key())
    }
}

impl fmt::Debug for FeatureTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureTree({})", self.key())
    }
}

impl fmt::Display for FeatureTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

struct KeyParser<'a> {
    s: &'a str,
    pos: usize,
}

impl KeyParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            input: self.s.to_string(),
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.s[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<()> {
        if self.eat(lit) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{lit}`")))
        }
    }

    fn number(&mut self) -> Result<u32> {
        let start = self.pos;
        while self.s[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.s[start..self.pos]
            .parse()
            .map_err(|_| self.err("expected a number"))
    }

    fn tree(&mut self) -> Result<FeatureTree> {
        if self.eat("Ic") {
            return Ok(FeatureTree::init());
        }
        self.expect("I[")?;
        let mut j = 0;
        let mut factors = Vec::new();
        if self.eat("xi^") {
            j = self.number()?;
            if j == 0 {
                return Err(self.err("forcing power must be ≥ 1"));
            }
            if !self.eat(";") {
                self.expect("]")?;
                return Ok(FeatureTree::integral(j, factors));
            }
        }
        loop {
            self.expect("(")?;
            let mut deriv = vec![self.number()?];
            while self.eat(".") {
                deriv.push(self.number()?);
            }
            self.expect("|")?;
            let child = self.tree()?;
            self.expect(")")?;
            factors.push(Factor { deriv, child });
            if !self.eat(",") {
                break;
            }
        }
        self.expect("]")?;
        if factors.windows(2).any(|w| w[0].deriv.len() != w[1].deriv.len()) {
            return Err(self.err("inconsistent multi-index lengths"));
        }
        Ok(FeatureTree::integral(j, factors))
    }
}
