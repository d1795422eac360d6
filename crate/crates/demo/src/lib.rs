//! Browser demo: list model features, simulate the dynamic Φ⁴₁ model and
//! evaluate any listed feature on the same noise path.
//!
//! The plain functions are ordinary Rust and tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors for JavaScript. Space-time
//! results are row-major `(nt + 1) × nx` arrays, one row per storage time.

use nors_core::features::{generate_model, notation, FeatureEvaluator, FeatureTree, GenerationMode, ModelSpec};
use nors_core::noise::phi41_initial;
use nors_core::semigroup::SemigroupContext;
use nors_core::solve::{solve_phi41, EquationId, EquationSpec, SolverConfig};
use nors_core::{Grid, RngStream, SpaceTimeField, SpatialField};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Keeps a single request well under a second in the browser.
const MAX_POINTS: usize = 512;
const MAX_STEPS: usize = 2000;

/// Feature basis of `equation` at `height` as a JSON array of
/// `{key, height, degree, notation}`.
pub fn feature_listing(equation: &str, height: u32, mode: &str) -> Result<String, String> {
    let eq: EquationId = equation.parse().map_err(|e: nors_core::Error| e.to_string())?;
    if height > 3 {
        return Err("height is limited to 3 in the demo".into());
    }
    let spec = match eq {
        EquationId::Phi41 => ModelSpec::phi41(height),
        EquationId::RdMult => ModelSpec::rd_mult(height),
        EquationId::Ns2d => ModelSpec::ns2d(height),
    };
    let spec = match mode {
        "literal" => spec.with_mode(GenerationMode::Literal),
        "compat" => spec.with_mode(GenerationMode::Compat),
        m => return Err(format!("unknown mode `{m}` (literal | compat)")),
    };
    let symbol = if spec.dim == 2 { r"\omega_0" } else { "u_0" };
    let basis = generate_model(&spec).map_err(|e| e.to_string())?;
    let rows: Vec<_> = basis
        .entries
        .iter()
        .map(|e| {
            json!({
                "key": e.key,
                "height": e.height,
                "degree": e.degree,
                "notation": notation::render(&e.tree(), symbol),
            })
        })
        .collect();
    Ok(serde_json::Value::Array(rows).to_string())
}

/// One Φ⁴₁ sample: grid, noise scale and the seed of its random inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phi41Sample {
    pub nx: usize,
    pub nt: usize,
    pub sigma: f64,
    pub kappa: f64,
    pub seed: u64,
}

struct Drawn {
    eq: EquationSpec,
    u0: SpatialField,
    xi: SpaceTimeField,
}

impl Phi41Sample {
    fn draw(&self) -> Result<Drawn, String> {
        if !(4..=MAX_POINTS).contains(&self.nx) || !(1..=MAX_STEPS).contains(&self.nt) {
            return Err(format!("need 4 ≤ nx ≤ {MAX_POINTS} and 1 ≤ nt ≤ {MAX_STEPS}"));
        }
        if !(self.sigma >= 0.0 && self.kappa >= 0.0) {
            return Err("σ and κ must be non-negative".into());
        }
        let mut eq = EquationSpec::phi41();
        eq.forcing.sigma = self.sigma;
        let grid = Grid::new(1, &[self.nx], self.nt, eq.horizon).map_err(|e| e.to_string())?;
        // Same stream layout as dataset sample 0: child 0 for u0, child 1 for ξ.
        let sample = RngStream::derive(self.seed, 0);
        let u0 = phi41_initial(&grid, self.kappa, &mut sample.child(0), &eq.eta).map_err(|e| e.to_string())?;
        let xi = eq.forcing.sample_noise(&grid, &mut sample.child(1));
        Ok(Drawn { eq, u0, xi })
    }
}

/// Solution path `u(t, x)`.
pub fn phi41_solution(sample: &Phi41Sample) -> Result<Vec<f64>, String> {
    let d = sample.draw()?;
    let path = solve_phi41(&d.u0, &d.xi, &d.eq, &SolverConfig::for_id(EquationId::Phi41))
        .map_err(|e| e.to_string())?;
    Ok(path.into_values())
}

/// Space-time values of the feature with canonical `key` on the sample's
/// noise.
pub fn phi41_feature(sample: &Phi41Sample, key: &str) -> Result<Vec<f64>, String> {
    let tree = FeatureTree::parse(key).map_err(|e| e.to_string())?;
    let d = sample.draw()?;
    let ctx = SemigroupContext::new(d.xi.grid(), d.eq.nu).map_err(|e| e.to_string())?;
    let mut eval = FeatureEvaluator::new(&ctx, &d.u0, &d.xi).map_err(|e| e.to_string())?;
    let v = eval.value(&tree).map_err(|e| e.to_string())?;
    Ok(v.values().to_vec())
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = featureListing)]
pub fn feature_listing_js(equation: &str, height: u32, mode: &str) -> Result<String, JsError> {
    feature_listing(equation, height, mode).map_err(js)
}

#[wasm_bindgen(js_name = simulatePhi41)]
pub fn simulate_phi41_js(nx: usize, nt: usize, sigma: f64, kappa: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    phi41_solution(&Phi41Sample {
        nx,
        nt,
        sigma,
        kappa,
        seed: seed.into(),
    })
    .map_err(js)
}

#[wasm_bindgen(js_name = phi41Feature)]
pub fn phi41_feature_js(
    key: &str,
    nx: usize,
    nt: usize,
    sigma: f64,
    kappa: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let sample = Phi41Sample {
        nx,
        nt,
        sigma,
        kappa,
        seed: seed.into(),
    };
    phi41_feature(&sample, key).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Phi41Sample {
        Phi41Sample {
            nx: 32,
            nt: 20,
            sigma: 1.0,
            kappa: 0.0,
            seed: 4,
        }
    }

    #[test]
    fn listing_is_json_with_ten_compat_entries() {
        let v: serde_json::Value = serde_json::from_str(&feature_listing("phi41", 2, "compat").unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r["degree"].as_f64().unwrap() <= 7.5));
        assert!(feature_listing("phi41", 2, "other").is_err());
        assert!(feature_listing("heat", 2, "literal").is_err());
    }

    #[test]
    fn solution_has_one_row_per_storage_time() {
        let s = sample();
        let u = phi41_solution(&s).unwrap();
        assert_eq!(u.len(), 21 * 32);
        // Row 0 is the fixed initial condition x(1 - x).
        assert!((u[16] - 0.25).abs() < 1e-12);
        assert_eq!(u, phi41_solution(&s).unwrap());
    }

    #[test]
    fn features_share_the_solution_noise() {
        let s = sample();
        let init = phi41_feature(&s, "Ic").unwrap();
        let u = phi41_solution(&s).unwrap();
        assert_eq!(&init[..32], &u[..32]);
        let ixi = phi41_feature(&s, "I[xi^1]").unwrap();
        assert!(ixi[..32].iter().all(|&v| v == 0.0));
        assert!(ixi[32..].iter().any(|&v| v != 0.0));
        assert!(phi41_feature(&s, "I[").is_err());
    }

    #[test]
    fn rejects_oversized_requests() {
        let s = Phi41Sample { nx: 4096, ..sample() };
        assert!(phi41_solution(&s).is_err());
    }
}
