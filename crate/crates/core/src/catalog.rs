//! Named parameter sets.

use crate::config::{AttachmentSpec, DetachmentSpec, GrowthSpec, ModelConfig, SpeciesSpec};
use crate::error::Result;
use crate::model::FullState;
use crate::multispecies::{MultiSpeciesModel, SpeciesKinetics};

fn monod(mu_max: f64, k: f64) -> GrowthSpec {
    GrowthSpec::Monod { mu_max, k }
}

fn single(growth_u: GrowthSpec, growth_v: GrowthSpec, a: f64, b: f64, dilution: f64, s_in: f64) -> ModelConfig {
    ModelConfig {
        growth_u: Some(growth_u),
        growth_v: Some(growth_v),
        attachment: Some(AttachmentSpec::LinearTotal { a }),
        detachment: Some(DetachmentSpec::Constant { b }),
        dilution,
        s_in,
        d_u: None,
        d_v: None,
        epsilon: None,
        relax_removal_order: false,
        species: None,
        a: None,
        b: None,
    }
}

/// `mu_u = s/(1+s)`, `mu_v = 0.7 s/(1+s)`, `D = 0.5`, `S_in = 2`, `a = 1`,
/// `b = 0.5`, equal removal rates.
pub fn fig4(epsilon: Option<f64>) -> ModelConfig {
    ModelConfig {
        epsilon,
        ..single(monod(1.0, 1.0), monod(0.7, 1.0), 1.0, 0.5, 0.5, 2.0)
    }
}

pub const FIG4_EPSILONS: [f64; 2] = [2.0, 0.5];
pub const FIG4_T_END: f64 = 60.0;

/// Initial condition used for the slow-fast comparison.
pub fn fig4_initial_state() -> FullState {
    FullState::new(2.0, 0.05, 0.05)
}

/// `mu_u = 2s/(1+s)`, `mu_v = 1.5s/(0.8+s)`, `D = 1`, `D_u = 1`,
/// `D_v = 0.5`, `S_in = 0.9`, `a = 4`, `b = 1`.
///
/// Only the ratio `a/b` enters the reduced model.
pub fn fig6() -> ModelConfig {
    ModelConfig {
        d_u: Some(1.0),
        d_v: Some(0.5),
        ..single(monod(2.0, 1.0), monod(1.5, 0.8), 4.0, 1.0, 1.0, 0.9)
    }
}

/// Lower edge of the initial-condition rectangle (biomass must be positive).
pub const FAN_X_MIN: f64 = 0.01;
pub const FAN_X_MAX: f64 = 1.2;
pub const FAN_POINTS: usize = 12;

/// `n` points evenly spaced by arc length on the boundary of
/// `[0, s_max] x [x_min, x_max]`, offset by half a spacing from the corner
/// `(0, x_min)` and traversed counter-clockwise.
pub fn rectangle_fan(s_max: f64, x_min: f64, x_max: f64, n: usize) -> Vec<[f64; 2]> {
    let (w, h) = (s_max, x_max - x_min);
    let perimeter = 2.0 * (w + h);
    (0..n)
        .map(|k| {
            let mut d = (k as f64 + 0.5) * perimeter / n as f64;
            if d < w {
                return [d, x_min];
            }
            d -= w;
            if d < h {
                return [s_max, x_min + d];
            }
            d -= h;
            if d < w {
                return [s_max - d, x_max];
            }
            d -= w;
            [0.0, x_max - d]
        })
        .collect()
}

pub fn fig6_fan() -> Vec<[f64; 2]> {
    rectangle_fan(0.9, FAN_X_MIN, FAN_X_MAX, FAN_POINTS)
}

/// Two species that coexist thanks to attachment: `mu_u1 = s/(0.5+s)`,
/// `mu_u2 = s/(1+s)`, `mu_vi = 0.3 mu_ui`, `A = I`, `b = (0.5, 0.5)`,
/// `D = 0.5`, `S_in = 2`. Found by a coarse grid search.
pub fn coexistence_pair() -> ModelConfig {
    ModelConfig {
        species: Some(vec![
            SpeciesSpec {
                growth_u: monod(1.0, 0.5),
                growth_v: monod(0.3, 0.5),
            },
            SpeciesSpec {
                growth_u: monod(1.0, 1.0),
                growth_v: monod(0.3, 1.0),
            },
        ]),
        a: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        b: Some(vec![0.5, 0.5]),
        ..multi_base(0.5, 2.0)
    }
}

pub const COEXISTENCE_INITIAL_STATE: [f64; 3] = [2.0, 0.1, 0.1];
pub const COEXISTENCE_T_END: f64 = 500.0;

/// [`coexistence_pair`] without attachment.
pub fn coexistence_pair_planktonic() -> Result<MultiSpeciesModel> {
    let cfg = coexistence_pair();
    let species = cfg
        .species
        .iter()
        .flatten()
        .map(|sp| SpeciesKinetics::new(sp.growth_u.law(), sp.growth_v.law()))
        .collect();
    MultiSpeciesModel::planktonic(cfg.params()?, species)
}

/// Two identical species with a symmetric attachment matrix.
pub fn symmetric_pair() -> ModelConfig {
    let sp = SpeciesSpec {
        growth_u: monod(1.0, 1.0),
        growth_v: monod(0.7, 1.0),
    };
    ModelConfig {
        species: Some(vec![sp, sp]),
        a: Some(vec![vec![1.0, 0.5], vec![0.5, 1.0]]),
        b: Some(vec![0.5, 0.5]),
        ..multi_base(0.5, 2.0)
    }
}

fn multi_base(dilution: f64, s_in: f64) -> ModelConfig {
    ModelConfig {
        growth_u: None,
        growth_v: None,
        attachment: None,
        detachment: None,
        ..single(monod(1.0, 1.0), monod(0.5, 1.0), 1.0, 1.0, dilution, s_in)
    }
}

/// Number of uniform draws consumed by [`sampled_config`].
pub const SAMPLE_DIMENSION: usize = 10;

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

/// Maps draws in `[0, 1)` to Monod kinetics with linear attachment that
/// satisfy the model assumptions: `mu_v < mu_u` for all `s > 0` and
/// `D >= D_u >= D_v`. `D` ranges past `mu_max_u`, so both sides of the
/// coexistence condition are reached.
pub fn sampled_config(u: &[f64; SAMPLE_DIMENSION], equal_removal: bool) -> ModelConfig {
    let mu_max = lerp(0.5, 3.0, u[0]);
    let k = lerp(0.1, 3.0, u[1]);
    let mu_max_v = mu_max * lerp(0.1, 0.95, u[2]);
    let k_v = k * lerp(1.0, 3.0, u[3]);
    let s_in = lerp(0.5, 5.0, u[4]);
    let dilution = mu_max * lerp(0.05, 1.2, u[5]);
    let a = lerp(0.1, 5.0, u[6]);
    let b = lerp(0.1, 5.0, u[7]);
    let mut cfg = single(monod(mu_max, k), monod(mu_max_v, k_v), a, b, dilution, s_in);
    if !equal_removal {
        let d_u = dilution * lerp(0.5, 1.0, u[8]);
        cfg.d_u = Some(d_u);
        cfg.d_v = Some(d_u * lerp(0.2, 1.0, u[9]));
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries_validate() {
        fig4(Some(0.5)).chemostat().unwrap();
        fig4(None).chemostat().unwrap();
        let c = fig6().chemostat().unwrap();
        assert_eq!((c.params.d_u, c.params.d_v), (1.0, 0.5));
        assert_eq!(coexistence_pair().multispecies().unwrap().n(), 2);
        assert_eq!(symmetric_pair().multispecies().unwrap().n(), 2);
        assert!(coexistence_pair_planktonic().unwrap().attachment.is_none());
    }

    #[test]
    fn configs_roundtrip_through_json() {
        for cfg in [fig4(Some(2.0)), fig6(), coexistence_pair()] {
            let text = serde_json::to_string(&cfg).unwrap();
            assert_eq!(ModelConfig::from_json_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn samples_validate() {
        let mut u = [0.0; SAMPLE_DIMENSION];
        for k in 0..200 {
            for (i, v) in u.iter_mut().enumerate() {
                *v = ((k * 7 + i * 13) % 97) as f64 / 97.0;
            }
            sampled_config(&u, true).chemostat().unwrap();
            sampled_config(&u, false).chemostat().unwrap();
        }
    }

    #[test]
    fn fan_lies_on_the_boundary() {
        let fan = fig6_fan();
        assert_eq!(fan.len(), 12);
        for [s, x] in &fan {
            let on_side = *s == 0.0 || (*s - 0.9).abs() < 1e-12;
            let on_lid = *x == FAN_X_MIN || (*x - FAN_X_MAX).abs() < 1e-12;
            assert!(on_side || on_lid, "({s}, {x})");
            assert!((0.0..=0.9).contains(s) && *x >= FAN_X_MIN && *x <= FAN_X_MAX);
        }
        let mut uniq = fan.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 12);
    }
}
