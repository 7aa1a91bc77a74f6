//! Numerical verification: pull symbolic forms back along sections and
//! evaluate on grids to confirm on-shell conservation laws and diagnose
//! failures.
//!
//! Verification is substitution-first: the symbolic pullback is computed
//! exactly, and the numeric layer only evaluates the resulting base-space
//! coefficients. Grid evaluation reports the maximum absolute residual with
//! a deterministic reduction order (lexicographic grid index, first maximum
//! wins).

use crate::calcforms::{d_horizontal, pullback, BasisOne, Form};
use crate::jetgeom::{JetContext, Section, VecField};
use crate::symkernel::{eval_numeric, Atom, Expr, Rat, SymError};
use crate::varops::{self, VarError};
use num_bigint::BigInt;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("grid axis needs at least 2 samples and tol > 0")]
    BadGrid,
    #[error("grid has {got} axes but the base has dimension {need}")]
    AxisCount { got: usize, need: usize },
    #[error("a pulled-back form must be horizontal over the base, found {0}")]
    NotBaseForm(String),
    #[error("finite differences need a vertical field with base-only components")]
    BadVariationField,
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Var(#[from] VarError),
}

/// Rectangular sampling grid, one axis per base coordinate, with the
/// absolute tolerance and relative floor of the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    pub tol: f64,
    pub rel_floor: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn uniform(n: u8, lo: f64, hi: f64, count: usize, tol: f64) -> Self {
        GridSpec {
            axes: vec![Axis { lo, hi, count }; n as usize],
            tol,
            rel_floor: 0.0,
        }
    }

    pub fn validate(&self, ctx: &JetContext) -> Result<(), NumError> {
        if self.axes.len() != ctx.base_dim() as usize {
            return Err(NumError::AxisCount {
                got: self.axes.len(),
                need: ctx.base_dim() as usize,
            });
        }
        if self.tol <= 0.0 || self.axes.iter().any(|a| a.count < 2) {
            return Err(NumError::BadGrid);
        }
        Ok(())
    }

    fn point(&self, index: &[usize]) -> Vec<f64> {
        self.axes
            .iter()
            .zip(index)
            .map(|(a, &i)| a.lo + (a.hi - a.lo) * (i as f64) / ((a.count - 1) as f64))
            .collect()
    }

    fn indices(&self) -> GridIter {
        GridIter { counts: self.axes.iter().map(|a| a.count).collect(), next: Some(vec![0; self.axes.len()]) }
    }

    fn samples(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }
}

struct GridIter {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for GridIter {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        // Advance the last axis fastest: lexicographic order overall.
        let mut n = current.clone();
        let mut axis = self.counts.len();
        loop {
            if axis == 0 {
                self.next = None;
                break;
            }
            axis -= 1;
            n[axis] += 1;
            if n[axis] < self.counts[axis] {
                self.next = Some(n);
                break;
            }
            n[axis] = 0;
        }
        Some(current)
    }
}

/// Outcome of a grid evaluation. `max_magnitude` is the largest sum of
/// absolute term values encountered, the scale against which the relative
/// floor is applied: the verdict passes when the residual is within the
/// absolute tolerance or within `rel_floor` times that scale.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub max_residual: f64,
    pub argmax: Vec<f64>,
    pub pass: bool,
    pub samples: usize,
    pub max_magnitude: f64,
    pub wall_ms: f64,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({
            "schema": crate::modeldsl::JSON_SCHEMA,
            "kind": "verify_report",
            "report": self,
        });
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

/// The scalar coefficient of a base-space n-form (the factor of `ds`), plus
/// any lower-degree check that all contact structure is gone.
fn base_density(_ctx: &JetContext, rho: &Form) -> Result<Expr, NumError> {
    let mut acc = Expr::zero();
    for (mono, coeff) in rho.terms() {
        if mono.factors().iter().any(|b| !matches!(b, BasisOne::Dx(_))) {
            return Err(NumError::NotBaseForm(rho.to_string()));
        }
        // Canonical order makes every full dx-block equal to ds exactly.
        acc = &acc + coeff;
    }
    Ok(acc)
}

fn eval_on_grid(
    ctx: &JetContext,
    density: &Expr,
    grid: &GridSpec,
) -> Result<VerifyReport, NumError> {
    grid.validate(ctx)?;
    let start = Instant::now();
    let mut max_residual = f64::NEG_INFINITY;
    let mut max_magnitude: f64 = 0.0;
    let mut argmax = Vec::new();
    for index in grid.indices() {
        let point = grid.point(&index);
        let mut bind: BTreeMap<Atom, f64> = BTreeMap::new();
        for (i, v) in point.iter().enumerate() {
            bind.insert(Atom::base(i as u8 + 1), *v);
        }
        let value = eval_numeric(density, &bind)?.abs();
        max_magnitude = max_magnitude.max(eval_magnitude(density, &bind)?);
        if value > max_residual {
            max_residual = value;
            argmax = point;
        }
    }
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let pass = max_residual <= grid.tol || max_residual <= grid.rel_floor * max_magnitude;
    Ok(VerifyReport {
        max_residual,
        argmax,
        pass,
        samples: grid.samples(),
        max_magnitude,
        wall_ms,
    })
}

/// Sum of absolute term values: the evaluation-scale estimate used by the
/// relative floor.
fn eval_magnitude(e: &Expr, bind: &BTreeMap<Atom, f64>) -> Result<f64, NumError> {
    let mut total = 0.0;
    for (mono, coeff) in e.terms() {
        let single = Expr::from_terms([(mono.clone(), coeff.clone())]);
        total += eval_numeric(&single, bind)?.abs();
    }
    Ok(total)
}

/// Pulls an n-form (or an (n-1)-form current, whose horizontal differential
/// is taken first) back along the prolonged section and evaluates the
/// residual density on the grid.
pub fn pullback_eval(
    ctx: &JetContext,
    rho: &Form,
    gamma: &Section,
    grid: &GridSpec,
) -> Result<VerifyReport, NumError> {
    let n = ctx.base_dim() as usize;
    let target = if rho.degree() + 1 == n {
        d_horizontal(ctx, rho)
    } else {
        rho.clone()
    };
    let pb = pullback(ctx, &target, gamma);
    let density = base_density(ctx, &pb)?;
    eval_on_grid(ctx, &density, grid)
}

/// Central-difference check of the first variation: compares the Gateaux
/// derivative of the action along `psi` (computed from two perturbed
/// sections at `+h` and `-h`) against the integral of the symbolic
/// first-variation density, both integrated with the composite trapezoid
/// rule on the same grid.
pub fn finite_difference_check(
    ctx: &JetContext,
    lagrangian: &Form,
    gamma: &Section,
    psi: &VecField,
    h: &Rat,
    grid: &GridSpec,
) -> Result<VerifyReport, NumError> {
    grid.validate(ctx)?;
    if !psi.is_vertical() {
        return Err(NumError::BadVariationField);
    }
    let start = Instant::now();

    let shifted = |sign: i64| -> Result<Section, NumError> {
        let step = h * Rat::from_integer(BigInt::from(sign));
        let mut comps = BTreeMap::new();
        for f in ctx.variational_fields() {
            let comp = gamma.component(f);
            let delta = psi.fiber_component(f);
            if delta.atoms().any(|a| !matches!(a, Atom::Base(_) | Atom::Func(..))) {
                return Err(NumError::BadVariationField);
            }
            comps.insert(f, &comp + &delta.scale(&step));
        }
        Ok(Section::new(ctx, comps).expect("base-only components"))
    };

    let action = |section: &Section| -> Result<f64, NumError> {
        let pb = pullback(ctx, lagrangian, section);
        let density = base_density(ctx, &pb)?;
        integrate_trapezoid(&density, grid)
    };

    let h_f = rational_to_f64(h);
    let plus = action(&shifted(1)?)?;
    let minus = action(&shifted(-1)?)?;
    let gateaux = (plus - minus) / (2.0 * h_f);

    // Symbolic side: psi _| E(lambda) + d_H eps_psi(lambda).
    let el = varops::euler_lagrange(ctx, lagrangian)?;
    let eps = varops::noether_current(ctx, lagrangian, psi)?;
    let first_variation = el.contract(ctx, psi).add(ctx, &d_horizontal(ctx, eps.form()));
    let pb = pullback(ctx, &first_variation, gamma);
    let symbolic = integrate_trapezoid(&base_density(ctx, &pb)?, grid)?;

    let max_residual = (gateaux - symbolic).abs();
    let max_magnitude = gateaux.abs().max(symbolic.abs());
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let pass = max_residual <= grid.tol || max_residual <= grid.rel_floor * max_magnitude;
    Ok(VerifyReport {
        max_residual,
        argmax: Vec::new(),
        pass,
        samples: grid.samples(),
        max_magnitude,
        wall_ms,
    })
}

fn integrate_trapezoid(density: &Expr, grid: &GridSpec) -> Result<f64, NumError> {
    let mut acc = 0.0;
    for index in grid.indices() {
        let point = grid.point(&index);
        let mut bind: BTreeMap<Atom, f64> = BTreeMap::new();
        let mut weight = 1.0;
        for (axis, (a, &i)) in grid.axes.iter().zip(&index).enumerate() {
            bind.insert(Atom::base(axis as u8 + 1), point[axis]);
            let step = (a.hi - a.lo) / ((a.count - 1) as f64);
            weight *= if i == 0 || i == a.count - 1 { step / 2.0 } else { step };
        }
        acc += weight * eval_numeric(density, &bind)?;
    }
    Ok(acc)
}

fn rational_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("step size fits in f64")
}
