//! Regularity-structure model features: symbolic trees, the inductive model
//! construction with degree pruning, a readable notation, and numerical
//! evaluation into space-time fields.

pub mod evaluate;
pub mod model;
pub mod notation;
pub mod tree;

pub use evaluate::{assemble_input, evaluate_features, evaluate_final, FeatureEvaluator};
pub use model::{
    degree, generate_model, Alpha, BasisEntry, DegreeRules, GenerationMode, ModelBasis, ModelSpec,
};
pub use tree::{Factor, FeatureTree, MultiIndex, Node};
