//! Numerical evaluation of feature trees for one `(u0, ξ)` sample.
//!
//! Every distinct subtree (and every distinct derivative of one) is computed
//! once per evaluator and shared through a memo keyed by canonical string.

use std::collections::{HashMap, HashSet};

use super::tree::{Factor, FeatureTree};
use crate::ntensor::NTensor;
use crate::semigroup::SemigroupContext;
use crate::{Error, Result, SpaceTimeField, SpatialField};

pub struct FeatureEvaluator<'a> {
    ctx: &'a SemigroupContext,
    u0: &'a SpatialField,
    xi: &'a SpaceTimeField,
    memo: HashMap<String, SpaceTimeField>,
    evaluations: usize,
}

impl<'a> FeatureEvaluator<'a> {
    pub fn new(
        ctx: &'a SemigroupContext,
        u0: &'a SpatialField,
        xi: &'a SpaceTimeField,
    ) -> Result<Self> {
        if u0.grid().sizes() != ctx.grid().sizes() {
            return Err(Error::GridMismatch(format!(
                "u0 on {:?}, semigroup on {:?}",
                u0.grid().sizes(),
                ctx.grid().sizes()
            )));
        }
        ctx.grid().check_same(xi.grid(), "noise")?;
        Ok(Self {
            ctx,
            u0,
            xi,
            memo: HashMap::new(),
            evaluations: 0,
        })
    }

    /// Number of trees integrated or propagated so far (derivatives excluded).
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Full space-time value of `tree`.
    pub fn value(&mut self, tree: &FeatureTree) -> Result<&SpaceTimeField> {
        if !self.memo.contains_key(tree.key()) {
            let v = if tree.is_init() {
                self.ctx.apply_ic(&self.initial_on_ctx_grid())?
            } else {
                let integrand = self.integrand(tree)?;
                self.ctx.apply_i(&integrand)?
            };
            self.evaluations += 1;
            self.memo.insert(tree.key().to_string(), v);
        }
        Ok(&self.memo[tree.key()])
    }

    /// Value of `tree` at `t = T` only. Reuses the memo when available but
    /// does not populate it for `tree` itself.
    pub fn final_value(&mut self, tree: &FeatureTree) -> Result<SpatialField> {
        if let Some(v) = self.memo.get(tree.key()) {
            return Ok(v.final_slice());
        }
        self.evaluations += 1;
        if tree.is_init() {
            let u0 = self.initial_on_ctx_grid();
            return self.ctx.propagate(&u0, self.ctx.grid().horizon());
        }
        let integrand = self.integrand(tree)?;
        self.ctx.apply_i_final(&integrand)
    }

    fn initial_on_ctx_grid(&self) -> SpatialField {
        SpatialField::from_parts_unchecked(self.ctx.grid().clone(), self.u0.values().to_vec())
    }

    fn factor_value(&mut self, f: &Factor) -> Result<SpaceTimeField> {
        if f.order() == 0 {
            return Ok(self.value(&f.child)?.clone());
        }
        let key = format!(
            "d{}|{}",
            f.deriv.iter().map(u32::to_string).collect::<Vec<_>>().join("."),
            f.child.key()
        );
        if !self.memo.contains_key(&key) {
            let base = self.value(&f.child)?.clone();
            let d = self.ctx.derivative(&base, &f.deriv)?;
            self.memo.insert(key.clone(), d);
        }
        Ok(self.memo[&key].clone())
    }

    /// `ξ^j ∏ ∂^a f`, multiplied left to right in canonical factor order.
    fn integrand(&mut self, tree: &FeatureTree) -> Result<SpaceTimeField> {
        let j = tree.forcing_power();
        let mut acc: Option<SpaceTimeField> = None;
        if j > 0 {
            let mut v = self.xi.clone();
            for _ in 1..j {
                v.values_mut()
                    .iter_mut()
                    .zip(self.xi.values())
                    .for_each(|(a, b)| *a *= b);
            }
            acc = Some(v);
        }
        for f in tree.factors() {
            let v = self.factor_value(f)?;
            acc = Some(match acc {
                None => v,
                Some(mut a) => {
                    a.values_mut()
                        .iter_mut()
                        .zip(v.values())
                        .for_each(|(x, y)| *x *= y);
                    a
                }
            });
        }
        acc.ok_or_else(|| Error::InvalidModel(format!("empty integrand in {}", tree.key())))
    }
}

/// Full space-time values of `trees`, in order.
pub fn evaluate_features(
    trees: &[FeatureTree],
    u0: &SpatialField,
    xi: &SpaceTimeField,
    ctx: &SemigroupContext,
) -> Result<Vec<SpaceTimeField>> {
    let mut ev = FeatureEvaluator::new(ctx, u0, xi)?;
    trees.iter().map(|t| ev.value(t).cloned()).collect()
}

/// Values of `trees` at the final time. Trees that are subtrees of others are
/// evaluated in full (they are needed anyway); the rest only at `t = T`.
pub fn evaluate_final(
    trees: &[FeatureTree],
    u0: &SpatialField,
    xi: &SpaceTimeField,
    ctx: &SemigroupContext,
) -> Result<Vec<SpatialField>> {
    let mut inner: HashSet<String> = HashSet::new();
    for t in trees {
        for f in t.factors() {
            f.child.for_each_subtree(&mut |s| {
                inner.insert(s.key().to_string());
            });
        }
    }
    let mut ev = FeatureEvaluator::new(ctx, u0, xi)?;
    trees
        .iter()
        .map(|t| {
            if inner.contains(t.key()) {
                Ok(ev.value(t)?.final_slice())
            } else {
                ev.final_value(t)
            }
        })
        .collect()
}

/// Stacks final-time features and normalised coordinates into a
/// channel-last array of shape `(X_1, …, X_d, m + d)`.
pub fn assemble_input(features: &[SpatialField]) -> Result<NTensor> {
    let first = features
        .first()
        .ok_or_else(|| Error::InvalidModel("cannot assemble an input from zero features".into()))?;
    let grid = first.grid();
    for f in features {
        if f.grid().sizes() != grid.sizes() {
            return Err(Error::GridMismatch(format!(
                "feature on {:?}, expected {:?}",
                f.grid().sizes(),
                grid.sizes()
            )));
        }
    }
    let d = grid.dim();
    let channels = features.len() + d;
    let coords = grid.coordinates();
    let mut data = Vec::with_capacity(grid.points() * channels);
    for (p, x) in coords.iter().enumerate() {
        data.extend(features.iter().map(|f| f.values()[p]));
        data.extend_from_slice(x);
    }
    let mut shape = grid.spatial_shape();
    shape.push(channels);
    Ok(NTensor::new(shape, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::model::{generate_model, ModelSpec};
    use crate::noise::sample_white_noise;
    use crate::{Grid, RngStream};
    use std::f64::consts::PI;

    fn setup() -> (Grid, SemigroupContext, SpatialField, SpaceTimeField) {
        let g = Grid::new(1, &[32], 40, 0.05).unwrap();
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let u0 = SpatialField::from_fn(&g, |x| (2.0 * PI * x[0]).cos());
        let xi = sample_white_noise(&g, &mut RngStream::new(3, 0));
        (g, ctx, u0, xi)
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn primitive_features_match_the_operators() {
        let (_, ctx, u0, xi) = setup();
        let trees = [FeatureTree::noise_integral(), FeatureTree::init()];
        let v = evaluate_features(&trees, &u0, &xi, &ctx).unwrap();
        assert_eq!(v[0], ctx.apply_i(&xi).unwrap());
        assert_eq!(v[1], ctx.apply_ic(&u0).unwrap());
    }

    #[test]
    fn squared_noise_integral_matches_recomposition() {
        let (g, ctx, u0, xi) = setup();
        let ixi = FeatureTree::noise_integral();
        let t = FeatureTree::integral(0, vec![Factor::plain(ixi.clone(), 1), Factor::plain(ixi, 1)]);
        let v = evaluate_features(&[t], &u0, &xi, &ctx).unwrap();
        let inner = ctx.apply_i(&xi).unwrap();
        let sq: Vec<f64> = inner.values().iter().map(|v| v * v).collect();
        let expect = ctx
            .apply_i(&SpaceTimeField::new(g, sq).unwrap())
            .unwrap();
        assert!(max_diff(v[0].values(), expect.values()) < 1e-12);
    }

    #[test]
    fn memo_evaluates_each_subtree_once() {
        let (_, ctx, u0, xi) = setup();
        let basis = generate_model(&ModelSpec::phi41(2)).unwrap();
        let trees = basis.trees();
        let mut ev = FeatureEvaluator::new(&ctx, &u0, &xi).unwrap();
        for t in &trees {
            ev.value(t).unwrap();
        }
        assert_eq!(ev.evaluations(), trees.len());
        for t in &trees {
            ev.value(t).unwrap();
        }
        assert_eq!(ev.evaluations(), trees.len());
    }

    #[test]
    fn final_values_agree_with_full_evaluation() {
        let (_, ctx, u0, xi) = setup();
        let trees = generate_model(&ModelSpec::phi41(2)).unwrap().trees();
        let full = evaluate_features(&trees, &u0, &xi, &ctx).unwrap();
        let last = evaluate_final(&trees, &u0, &xi, &ctx).unwrap();
        for (f, l) in full.iter().zip(&last) {
            assert!(max_diff(f.final_slice().values(), l.values()) < 1e-13);
        }
    }

    #[test]
    fn linear_in_u0_without_forcing() {
        let (g, ctx, u0, xi) = setup();
        let t = FeatureTree::integral(0, vec![Factor::plain(FeatureTree::init(), 1)]);
        let tt = FeatureTree::integral(0, vec![Factor::plain(t.clone(), 1)]);
        let scaled = SpatialField::from_fn(&g, |x| 2.5 * (2.0 * PI * x[0]).cos());
        let a = evaluate_final(&[t.clone(), tt.clone()], &u0, &xi, &ctx).unwrap();
        let b = evaluate_final(&[t, tt], &scaled, &xi, &ctx).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let num: f64 = x.values().iter().zip(y.values()).map(|(p, q)| (2.5 * p - q).powi(2)).sum();
            let den: f64 = y.values().iter().map(|q| q * q).sum();
            assert!((num / den).sqrt() < 1e-12);
        }
    }

    #[test]
    fn derivative_factor_uses_spectral_derivative() {
        let g = Grid::new(2, &[8, 8], 5, 0.05).unwrap();
        let ctx = SemigroupContext::new(&g, 1.0).unwrap();
        let u0 = SpatialField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
        let xi = SpaceTimeField::zeros(&g);
        let t = FeatureTree::integral(
            0,
            vec![Factor {
                deriv: vec![1, 0],
                child: FeatureTree::init(),
            }],
        );
        let v = evaluate_features(&[t], &u0, &xi, &ctx).unwrap();
        let d = ctx.derivative(&ctx.apply_ic(&u0).unwrap(), &[1, 0]).unwrap();
        assert_eq!(v[0], ctx.apply_i(&d).unwrap());
    }

    #[test]
    fn assembled_input_layout() {
        let g = Grid::new(1, &[4], 1, 0.05).unwrap();
        let f = SpatialField::from_fn(&g, |x| 10.0 + x[0]);
        let a = assemble_input(&[f.clone(), f]).unwrap();
        assert_eq!(a.shape, vec![4, 3]);
        let coords: Vec<f64> = (0..4).map(|i| a.data[i * 3 + 2]).collect();
        assert_eq!(coords, vec![0.0, 0.25, 0.5, 0.75]);
        assert!(assemble_input(&[]).is_err());
        let g2 = Grid::new(2, &[64, 64], 1, 0.05).unwrap();
        let fs = vec![SpatialField::zeros(&g2); 29];
        assert_eq!(assemble_input(&fs).unwrap().shape, vec![64, 64, 31]);
    }
}
