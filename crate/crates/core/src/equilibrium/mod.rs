//! Steady states and their local stability.
//!
//! With equal removal rates the coexistence state is found from the
//! substrate balance on the interval between the two break-even
//! concentrations ([`equal`]). With distinct removal rates, equilibria of the
//! reduced model are roots of a scalar balance gap in the total biomass
//! ([`distinct`]).

pub mod distinct;
pub mod equal;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FullState, GrowthLaw, ReducedState};
use crate::roots::bisect;

pub use distinct::{find_equilibria_distinct_removal, gamma_curve, EquilibriumScan, GammaSample, ScanOptions};
pub use equal::{
    closed_form_jacobian, closed_form_trace_det, equal_removal_curves, solve_coexistence_equal_removal,
    EqualRemovalCurves,
};

/// Real parts within this distance of zero are reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Largest admissible max-norm of the vector field at a reported state.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Substrate level at which growth balances a removal rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BreakEven {
    At(f64),
    /// Growth never reaches the removal rate.
    Never,
}

impl BreakEven {
    pub fn value(self) -> Option<f64> {
        match self {
            BreakEven::At(l) => Some(l),
            BreakEven::Never => None,
        }
    }

    /// The break-even value, or `+inf` when it does not exist.
    pub fn or_infinity(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

/// Solves `mu(lambda) = removal`: closed form for Monod, bracketed bisection
/// otherwise.
pub fn break_even(growth: &GrowthLaw, removal: f64) -> Result<BreakEven> {
    if !(removal.is_finite() && removal > 0.0) {
        return Err(Error::domain(
            "break_even",
            format!("removal rate must be positive, got {removal}"),
        ));
    }
    match growth {
        GrowthLaw::Monod {
            mu_max,
            half_saturation,
        } => {
            if *mu_max <= removal {
                Ok(BreakEven::Never)
            } else {
                Ok(BreakEven::At(half_saturation * removal / (mu_max - removal)))
            }
        }
        GrowthLaw::Custom(_) => {
            let mut hi = 1.0;
            while growth.rate(hi) <= removal {
                hi *= 2.0;
                if hi > 1e12 {
                    return Ok(BreakEven::Never);
                }
            }
            let root = bisect("break_even", |s| growth.rate(s) - removal, 0.0, hi, 0.0)?;
            Ok(BreakEven::At(root))
        }
    }
}

/// `mu(s) - removal`: negative below the break-even, positive above.
pub fn net_growth(growth: &GrowthLaw, removal: f64, s: f64) -> f64 {
    growth.rate(s) - removal
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    Washout,
    Coexistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    Marginal,
}

impl Classification {
    pub fn is_stable(self) -> bool {
        matches!(self, Classification::StableNode | Classification::StableFocus)
    }
}

/// Linearization of a planar vector field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub jacobian: [[f64; 2]; 2],
    pub trace: f64,
    pub determinant: f64,
    pub eigenvalues: [Complex64; 2],
    pub classification: Classification,
}

impl Stability {
    pub fn from_jacobian(jacobian: [[f64; 2]; 2]) -> Self {
        let [[a, b], [c, d]] = jacobian;
        let trace = a + d;
        let determinant = a * d - b * c;
        let disc = 0.25 * trace * trace - determinant;
        let half = 0.5 * trace;
        let eigenvalues = if disc >= 0.0 {
            let r = disc.sqrt();
            // Avoid cancellation in the smaller root.
            let big = if half >= 0.0 { half + r } else { half - r };
            let small = if big != 0.0 { determinant / big } else { 0.0 };
            let (l1, l2) = if big <= small { (big, small) } else { (small, big) };
            [Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(half, -im), Complex64::new(half, im)]
        };
        let classification = classify(&eigenvalues);
        Stability {
            jacobian,
            trace,
            determinant,
            eigenvalues,
            classification,
        }
    }
}

fn classify(eig: &[Complex64; 2]) -> Classification {
    if eig.iter().any(|l| l.re.abs() < MARGINAL_TOL) {
        return Classification::Marginal;
    }
    let complex = eig[0].im != 0.0;
    let negatives = eig.iter().filter(|l| l.re < 0.0).count();
    match (negatives, complex) {
        (2, false) => Classification::StableNode,
        (2, true) => Classification::StableFocus,
        (0, false) => Classification::UnstableNode,
        (0, true) => Classification::UnstableFocus,
        _ => Classification::Saddle,
    }
}

/// Central-difference Jacobian with step `1e-6 * max(1, |y_i|)`.
pub fn jacobian_2d(field: impl Fn(&[f64; 2]) -> [f64; 2], at: [f64; 2]) -> [[f64; 2]; 2] {
    let mut jac = [[0.0; 2]; 2];
    for j in 0..2 {
        let h = 1e-6 * at[j].abs().max(1.0);
        let mut plus = at;
        let mut minus = at;
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (field(&plus), field(&minus));
        for i in 0..2 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Linearizes a planar field at `at` by central differences and classifies it.
pub fn classify_planar(field: impl Fn(&[f64; 2]) -> [f64; 2], at: [f64; 2]) -> Stability {
    Stability::from_jacobian(jacobian_2d(field, at))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumState {
    Full(FullState),
    Reduced(ReducedState),
}

impl EquilibriumState {
    pub fn substrate(&self) -> f64 {
        match self {
            EquilibriumState::Full(f) => f.s,
            EquilibriumState::Reduced(r) => r.s,
        }
    }

    pub fn total_biomass(&self) -> f64 {
        match self {
            EquilibriumState::Full(f) => f.u + f.v,
            EquilibriumState::Reduced(r) => r.x,
        }
    }
}

/// A located and classified steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub state: EquilibriumState,
    pub kind: EquilibriumKind,
    pub stability: Stability,
    /// Max-norm of the vector field at `state`.
    pub residual: f64,
    /// Sign of the slope of the balance gap at the root (distinct-removal
    /// path only).
    pub gamma_prime_sign: Option<i8>,
}

impl Equilibrium {
    pub fn classification(&self) -> Classification {
        self.stability.classification
    }

    pub fn record(&self) -> EquilibriumRecord {
        let state = match self.state {
            EquilibriumState::Full(f) => StateRecord::Full { s: f.s, u: f.u, v: f.v },
            EquilibriumState::Reduced(r) => StateRecord::Reduced { s: r.s, x: r.x },
        };
        EquilibriumRecord {
            state,
            kind: self.kind,
            classification: self.stability.classification,
            eigenvalues: self.stability.eigenvalues.map(|l| [l.re, l.im]),
            residual: self.residual,
            gamma_prime_sign: self.gamma_prime_sign,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StateRecord {
    Full { s: f64, u: f64, v: f64 },
    Reduced { s: f64, x: f64 },
}

/// Serialized form of an [`Equilibrium`] in equilibrium reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub state: StateRecord,
    pub kind: EquilibriumKind,
    pub classification: Classification,
    pub eigenvalues: [[f64; 2]; 2],
    pub residual: f64,
    pub gamma_prime_sign: Option<i8>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn monod_break_even_closed_form() {
        assert_eq!(
            break_even(&GrowthLaw::monod(1.0, 1.0), 0.5).unwrap(),
            BreakEven::At(1.0)
        );
        match break_even(&GrowthLaw::monod(0.7, 1.0), 0.5).unwrap() {
            BreakEven::At(l) => assert_relative_eq!(l, 2.5, epsilon = 1e-14),
            BreakEven::Never => panic!(),
        }
        assert_eq!(break_even(&GrowthLaw::monod(1.0, 1.0), 1.5).unwrap(), BreakEven::Never);
        assert!(break_even(&GrowthLaw::monod(1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn custom_break_even_by_bisection() {
        let g = GrowthLaw::custom("monod-like", |s| 2.0 * s / (1.0 + s));
        let l = break_even(&g, 1.0).unwrap().value().unwrap();
        assert!((g.rate(l) - 1.0).abs() <= 1e-12);
        assert_relative_eq!(l, 1.0, max_relative = 1e-12);
        let capped = GrowthLaw::custom("capped", |s| s / (1.0 + s));
        assert_eq!(break_even(&capped, 1.0).unwrap(), BreakEven::Never);
    }

    #[test]
    fn net_growth_values() {
        let gu = GrowthLaw::monod(1.0, 1.0);
        let gv = GrowthLaw::monod(0.7, 1.0);
        assert_eq!(net_growth(&gu, 0.5, 1.0), 0.0);
        assert_relative_eq!(net_growth(&gu, 0.5, 1.5), 0.1, epsilon = 1e-15);
        assert_relative_eq!(net_growth(&gv, 0.5, 1.5), -0.08, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_saddle() {
        let st = classify_planar(|y| [y[0], -y[1]], [0.0, 0.0]);
        assert_eq!(st.classification, Classification::Saddle);
        assert_relative_eq!(st.determinant, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn node_focus_and_marginal() {
        let node = Stability::from_jacobian([[-1.0, 0.0], [0.0, -2.0]]);
        assert_eq!(node.classification, Classification::StableNode);
        assert_eq!(node.eigenvalues[0].re, -2.0);
        let focus = Stability::from_jacobian([[-0.1, 1.0], [-1.0, -0.1]]);
        assert_eq!(focus.classification, Classification::StableFocus);
        assert_relative_eq!(focus.eigenvalues[1].im, 1.0, epsilon = 1e-12);
        let unstable = Stability::from_jacobian([[0.1, 1.0], [-1.0, 0.1]]);
        assert_eq!(unstable.classification, Classification::UnstableFocus);
        let source = Stability::from_jacobian([[1.0, 0.0], [0.0, 3.0]]);
        assert_eq!(source.classification, Classification::UnstableNode);
        let centre = Stability::from_jacobian([[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!(centre.classification, Classification::Marginal);
        let degenerate = Stability::from_jacobian([[-1.0, 0.0], [0.0, 1e-10]]);
        assert_eq!(degenerate.classification, Classification::Marginal);
    }
}
