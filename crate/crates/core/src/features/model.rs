//! Inductive model generation with degree bookkeeping.
//!
//! ```text
//! M^0 = { I_c[u0] }
//! M^n = M^{n-1} ∪ { I[ξ^j ∏_{i=1..k} ∂^{a_i} f_i] : f_i ∈ M^{n-1}, |a_i| ≤ q,
//!                   0 ≤ j ≤ p, 1 ≤ k + j ≤ m·1[j=0] + l·1[j>0] }
//! ```
//!
//! keeping only trees whose degree does not exceed the cap, where
//! `deg I[f] = β + deg f`, `deg ∂^a f = deg f − |a|`, `deg ξ = −(d+2)/2` and
//! products add degrees.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tree::{Factor, FeatureTree, MultiIndex};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeRules {
    /// Degree gained by one application of `I`.
    pub beta: f64,
    /// `deg ξ`.
    pub noise: f64,
    /// `deg I_c[u0]`.
    pub init: f64,
    /// Largest admissible degree.
    pub cap: f64,
}

impl DegreeRules {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            beta: 2.0,
            noise: -((dim as f64) + 2.0) / 2.0,
            init: 2.0,
            cap: 7.5,
        }
    }
}

/// Degree of `tree` under `rules`.
pub fn degree(tree: &FeatureTree, rules: &DegreeRules) -> f64 {
    if tree.is_init() {
        return rules.init;
    }
    let mut d = rules.beta + tree.forcing_power() as f64 * rules.noise;
    for f in tree.factors() {
        d += degree(&f.child, rules) - f.order() as f64;
    }
    d
}

/// `α = (m, l, p, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alpha {
    /// Additive width: factor budget without forcing.
    pub m: u32,
    /// Multiplicative width: budget for forcing plus factors when ξ is present.
    pub l: u32,
    /// Forcing order.
    pub p: u32,
    /// Differentiation order.
    pub q: u32,
}

impl Alpha {
    pub fn new(m: u32, l: u32, p: u32, q: u32) -> Self {
        Self { m, l, p, q }
    }

    /// Total item budget `k + j` for forcing power `j`.
    pub fn width(&self, j: u32) -> u32 {
        if j == 0 {
            self.m
        } else {
            self.l
        }
    }
}

impl std::str::FromStr for Alpha {
    type Err = Error;

    /// Parses `m,l,p,q`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("alpha must be four integers m,l,p,q: `{s}`")))?;
        match parts[..] {
            [m, l, p, q] => Ok(Self { m, l, p, q }),
            _ => Err(Error::Config(format!("alpha must be four integers m,l,p,q: `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    /// The inductive definition exactly as written.
    #[default]
    Literal,
    /// Step 1 only produces pure forcing integrals `I[ξ^j]`; later steps are
    /// literal. Reproduces the shorter published listings.
    Compat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub alpha: Alpha,
    pub height: u32,
    pub dim: usize,
    pub rules: DegreeRules,
    #[serde(default)]
    pub mode: GenerationMode,
}

impl ModelSpec {
    pub fn new(alpha: Alpha, height: u32, dim: usize) -> Self {
        Self {
            alpha,
            height,
            dim,
            rules: DegreeRules::for_dim(dim),
            mode: GenerationMode::Literal,
        }
    }

    /// Dynamic Φ⁴₁: `α = (3, 1, 1, 0)`, d = 1.
    pub fn phi41(height: u32) -> Self {
        Self::new(Alpha::new(3, 1, 1, 0), height, 1)
    }

    /// Reaction-diffusion with multiplicative noise: `α = (3, 2, 1, 0)`, d = 1.
    pub fn rd_mult(height: u32) -> Self {
        Self::new(Alpha::new(3, 2, 1, 0), height, 1)
    }

    /// 2-d stochastic Navier–Stokes: `α = (2, 1, 1, 1)`, d = 2.
    pub fn ns2d(height: u32) -> Self {
        Self::new(Alpha::new(2, 1, 1, 1), height, 2)
    }

    pub fn with_mode(mut self, mode: GenerationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.rules.cap = cap;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::InvalidModel(format!("dimension {} not in {{1, 2}}", self.dim)));
        }
        if !(self.rules.cap > 0.0) {
            return Err(Error::InvalidModel(format!(
                "degree cap must be positive, got {}",
                self.rules.cap
            )));
        }
        Ok(())
    }

    /// Multi-indices `a ∈ ℕ^d` with `|a| ≤ q`, in lexicographic order.
    pub fn multi_indices(&self) -> Vec<MultiIndex> {
        let q = self.alpha.q;
        let mut out = Vec::new();
        match self.dim {
            1 => out.extend((0..=q).map(|a| vec![a])),
            _ => {
                for a in 0..=q {
                    for b in 0..=q - a {
                        out.push(vec![a, b]);
                    }
                }
            }
        }
        out
    }

    /// Literal-mode membership test: `tree ∈ M^{height}` without enumerating
    /// the whole model.
    pub fn admits(&self, tree: &FeatureTree) -> bool {
        self.admits_at(tree, self.height)
    }

    fn admits_at(&self, tree: &FeatureTree, height: u32) -> bool {
        if tree.is_init() {
            return true;
        }
        if height == 0 || degree(tree, &self.rules) > self.rules.cap {
            return false;
        }
        let j = tree.forcing_power();
        let k = tree.factors().len() as u32;
        if j > self.alpha.p || k + j < 1 || k + j > self.alpha.width(j) {
            return false;
        }
        tree.factors().iter().all(|f| {
            f.deriv.len() == self.dim
                && f.order() <= self.alpha.q
                && self.admits_at(&f.child, height - 1)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub key: String,
    pub degree: f64,
    /// Step of the induction at which the tree first appears.
    pub height: u32,
    #[serde(skip)]
    tree: Option<FeatureTree>,
}

impl BasisEntry {
    pub fn tree(&self) -> FeatureTree {
        match &self.tree {
            Some(t) => t.clone(),
            None => FeatureTree::parse(&self.key).expect("basis keys are canonical"),
        }
    }
}

/// Ordered, deduplicated model `M^n_α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBasis {
    pub spec: ModelSpec,
    pub entries: Vec<BasisEntry>,
}

impl ModelBasis {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trees(&self) -> Vec<FeatureTree> {
        self.entries.iter().map(BasisEntry::tree).collect()
    }

    pub fn contains(&self, tree: &FeatureTree) -> bool {
        self.entries.iter().any(|e| e.key == tree.key())
    }

    pub fn position(&self, key: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.key == key)
    }

    /// Re-attaches parsed trees after deserialisation.
    pub fn hydrate(&mut self) -> Result<()> {
        for e in &mut self.entries {
            if e.tree.is_none() {
                e.tree = Some(FeatureTree::parse(&e.key)?);
            }
        }
        Ok(())
    }
}

/// Visits every multiset of size `k` drawn from `0..n` as a nondecreasing
/// index sequence.
fn for_each_multiset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, f);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut Vec::with_capacity(k), f);
}

/// Generates `M^n_α` for `spec`.
pub fn generate_model(spec: &ModelSpec) -> Result<ModelBasis> {
    spec.validate()?;
    let rules = spec.rules;
    let init = FeatureTree::init();
    let mut degrees: HashMap<String, f64> = HashMap::new();
    degrees.insert(init.key().to_string(), rules.init);
    let mut entries = vec![BasisEntry {
        key: init.key().to_string(),
        degree: rules.init,
        height: 0,
        tree: Some(init.clone()),
    }];
    let derivs = spec.multi_indices();
    // Always build level 1 so that degenerate specs are rejected even at n = 0.
    let levels = spec.height.max(1);
    for level in 1..=levels {
        let previous: Vec<FeatureTree> = entries.iter().map(BasisEntry::tree).collect();
        let mut pool: Vec<(Factor, f64)> = Vec::new();
        if !(spec.mode == GenerationMode::Compat && level == 1) {
            for f in &previous {
                let df = degrees[f.key()];
                for a in &derivs {
                    let order: u32 = a.iter().sum();
                    pool.push((
                        Factor {
                            deriv: a.clone(),
                            child: f.clone(),
                        },
                        df - order as f64,
                    ));
                }
            }
        }
        let mut fresh = Vec::new();
        for j in 0..=spec.alpha.p {
            let width = spec.alpha.width(j);
            if width < j {
                continue;
            }
            let kmin = if j == 0 { 1 } else { 0 };
            for k in kmin..=(width - j) {
                if k as usize > 0 && pool.is_empty() {
                    continue;
                }
                for_each_multiset(pool.len(), k as usize, &mut |idx| {
                    let deg = rules.beta
                        + j as f64 * rules.noise
                        + idx.iter().map(|&i| pool[i].1).sum::<f64>();
                    if deg > rules.cap {
                        return;
                    }
                    let tree =
                        FeatureTree::integral(j, idx.iter().map(|&i| pool[i].0.clone()).collect());
                    if degrees.contains_key(tree.key()) {
                        return;
                    }
                    degrees.insert(tree.key().to_string(), deg);
                    fresh.push(BasisEntry {
                        key: tree.key().to_string(),
                        degree: deg,
                        height: level,
                        tree: Some(tree),
                    });
                });
            }
        }
        if level == 1 && fresh.is_empty() {
            return Err(Error::InvalidModel(format!(
                "α = {:?} with cap {} generates nothing at the first step",
                spec.alpha, rules.cap
            )));
        }
        if level <= spec.height {
            entries.extend(fresh);
        }
    }
    entries.sort_by(|a, b| {
        a.height
            .cmp(&b.height)
            .then(a.degree.total_cmp(&b.degree))
            .then_with(|| a.key.cmp(&b.key))
    });
    Ok(ModelBasis {
        spec: spec.clone(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ixi() -> FeatureTree {
        FeatureTree::noise_integral()
    }

    fn prod(dim: usize, fs: &[FeatureTree]) -> FeatureTree {
        FeatureTree::integral(0, fs.iter().map(|f| Factor::plain(f.clone(), dim)).collect())
    }

    #[test]
    fn degrees_by_hand() {
        let r1 = DegreeRules::for_dim(1);
        assert_eq!(r1.noise, -1.5);
        assert_eq!(degree(&ixi(), &r1), 0.5);
        assert_eq!(degree(&prod(1, &[ixi(), ixi(), ixi()]), &r1), 3.5);
        let r2 = DegreeRules::for_dim(2);
        let d1 = FeatureTree::integral(
            0,
            vec![Factor {
                deriv: vec![1, 0],
                child: ixi(),
            }],
        );
        assert_eq!(degree(&ixi(), &r2), 0.0);
        assert_eq!(degree(&d1, &r2), 1.0);
        // I[(I_c[u0])³] = 2 + 3·2 sits above the 7.5 cap.
        let init = FeatureTree::init();
        assert_eq!(degree(&prod(1, &[init.clone(), init.clone(), init]), &r1), 8.0);
    }

    #[test]
    fn height_zero_is_the_initial_signal() {
        let b = generate_model(&ModelSpec::phi41(0)).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.entries[0].key, "Ic");
    }

    #[test]
    fn empty_first_level_is_rejected() {
        let spec = ModelSpec::new(Alpha::new(0, 1, 0, 0), 2, 1);
        assert!(matches!(generate_model(&spec), Err(Error::InvalidModel(_))));
        let compat = ModelSpec::new(Alpha::new(3, 1, 0, 0), 1, 1).with_mode(GenerationMode::Compat);
        assert!(generate_model(&compat).is_err());
    }

    #[test]
    fn compat_phi41_height2_has_ten_features() {
        let b = generate_model(&ModelSpec::phi41(2).with_mode(GenerationMode::Compat)).unwrap();
        assert_eq!(b.len(), 10);
    }

    #[test]
    fn compat_ns_height2_has_29_features() {
        let b = generate_model(&ModelSpec::ns2d(2).with_mode(GenerationMode::Compat)).unwrap();
        assert_eq!(b.len(), 29);
    }

    #[test]
    fn ordering_and_uniqueness() {
        let b = generate_model(&ModelSpec::rd_mult(2)).unwrap();
        let mut keys: Vec<&str> = b.entries.iter().map(|e| e.key.as_str()).collect();
        for w in b.entries.windows(2) {
            let (a, c) = (&w[0], &w[1]);
            assert!((a.height, a.degree) <= (c.height, c.degree));
        }
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), b.len());
    }

    #[test]
    fn stored_degrees_match_recomputation() {
        for spec in [ModelSpec::phi41(3), ModelSpec::rd_mult(2), ModelSpec::ns2d(2)] {
            let b = generate_model(&spec).unwrap();
            for e in &b.entries {
                assert_eq!(e.degree, degree(&e.tree(), &spec.rules), "{}", e.key);
                assert!(e.degree <= spec.rules.cap);
                assert_eq!(e.height, e.tree().height());
            }
        }
    }

    #[test]
    fn models_are_nested() {
        for spec in [ModelSpec::phi41(3), ModelSpec::ns2d(2)] {
            let big = generate_model(&spec).unwrap();
            for n in 0..spec.height {
                let mut s = spec.clone();
                s.height = n;
                for e in generate_model(&s).unwrap().entries {
                    assert!(big.position(&e.key).is_some(), "{} missing at {}", e.key, spec.height);
                }
            }
        }
    }

    #[test]
    fn admits_agrees_with_enumeration() {
        for spec in [ModelSpec::phi41(2), ModelSpec::rd_mult(3), ModelSpec::ns2d(2)] {
            let basis = generate_model(&spec).unwrap();
            assert!(basis.trees().iter().all(|t| spec.admits(t)));
            // Every admissible tree built from the basis one level up is
            // either too tall or absent only because of the height limit.
            let mut taller = spec.clone();
            taller.height += 1;
            let next = if spec.dim == 2 { None } else { Some(generate_model(&taller).unwrap()) };
            if let Some(next) = next {
                for t in next.trees() {
                    assert_eq!(spec.admits(&t), basis.contains(&t), "{}", t.key());
                }
            }
        }
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("3,1,1,0".parse::<Alpha>().unwrap(), Alpha::new(3, 1, 1, 0));
        assert!("3,1,1".parse::<Alpha>().is_err());
        assert!("a,b,c,d".parse::<Alpha>().is_err());
    }
}
