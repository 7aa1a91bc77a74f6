//! The su(2) Yang-Mills case study: model builder, literal reference
//! formulas, and the comparison harness proving the engine reproduces the
//! closed-form Euler-Lagrange expressions, the Jacobi-equation split, and
//! the pair conserved current.
//!
//! The reference expressions are data (indexed expressions in the model
//! files), not code paths, so each comparison sets an engine derivation
//! against an independently transcribed formula.

use crate::calcforms::{volume_contracted, Form};
use crate::jetgeom::VecField;
use crate::modeldsl::{DslError, ModelSpec};
use crate::symkernel::{Expr, FieldId};
use crate::varops::{self, SourceForm, VarError};
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum YmError {
    #[error("unsupported Yang-Mills dimension {0} (2, 3, and 4 are shipped)")]
    UnsupportedDim(u8),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Var(#[from] VarError),
}

const MODEL_D2: &str = include_str!("../../../models/yangmills_su2_d2.vf");
const MODEL_D3: &str = include_str!("../../../models/yangmills_su2_d3.vf");
const MODEL_D4: &str = include_str!("../../../models/yangmills_su2_d4.vf");

/// Source text of the shipped su(2) model for a supported dimension.
pub fn model_text(dim: u8) -> Result<&'static str, YmError> {
    match dim {
        2 => Ok(MODEL_D2),
        3 => Ok(MODEL_D3),
        4 => Ok(MODEL_D4),
        other => Err(YmError::UnsupportedDim(other)),
    }
}

/// Parses the shipped su(2) model at the requested base dimension. The fiber
/// dimension is `3 * dim` (Lie-algebra index times spacetime index,
/// first-slot major).
pub fn build_ym(dim: u8) -> Result<ModelSpec, YmError> {
    let spec = ModelSpec::parse(model_text(dim)?)?;
    debug_assert_eq!(spec.fiber_dim(), 3 * dim as usize);
    Ok(spec)
}

/// Evaluates a reference definition with free indices `[B, nu]` into a
/// degree-1 source form, fanning out per component.
fn source_form_from_def(spec: &ModelSpec, def: &str) -> Result<SourceForm, YmError> {
    let fam = spec
        .family("w")
        .ok_or_else(|| DslError::Model("model has no `w` family".into()))?;
    let combos = fam.all_indices();
    let coeffs: Result<Vec<(FieldId, Expr)>, DslError> = combos
        .par_iter()
        .map(|combo| {
            // Definition slots are [algebra, spacetime] in that order.
            let value = spec.def_value(def, combo)?;
            Ok((fam.sigma(combo).expect("enumerated combo"), value))
        })
        .collect();
    let table: BTreeMap<FieldId, Expr> = coeffs?.into_iter().collect();
    Ok(SourceForm::from_coefficients(spec.ctx(), &table))
}

/// The transcription of the closed-form Euler-Lagrange expression.
pub fn ym_reference_euler(spec: &ModelSpec) -> Result<SourceForm, YmError> {
    source_form_from_def(spec, "Eref")
}

/// The transcription of the Jacobi system (sum of the antisymmetric and
/// symmetric displayed parts) for the symbolic background field `psi`.
pub fn ym_reference_jacobi(spec: &ModelSpec) -> Result<SourceForm, YmError> {
    source_form_from_def(spec, "Jref")
}

/// The two displayed parts of the Jacobi system separately.
pub fn ym_reference_jacobi_split(spec: &ModelSpec) -> Result<(SourceForm, SourceForm), YmError> {
    Ok((source_form_from_def(spec, "JrefA")?, source_form_from_def(spec, "JrefS")?))
}

/// The transcription of the pair current for the backgrounds `psi`, `psit`,
/// assembled as `sum_xi Cref[xi] ds_xi`.
pub fn ym_reference_pair_current(spec: &ModelSpec) -> Result<Form, YmError> {
    let ctx = spec.ctx();
    let n = ctx.base_dim();
    let components: Result<Vec<(u8, Expr)>, DslError> = (1..=n)
        .into_par_iter()
        .map(|xi| Ok((xi, spec.def_value("Cref", &[xi])?)))
        .collect();
    let mut acc = Form::zero(n as usize - 1);
    for (xi, e) in components? {
        acc = acc.add(ctx, &volume_contracted(ctx, xi).scale_expr(ctx, &e));
    }
    Ok(acc)
}

/// The generic symbolic vertical field `psihat` (components are the `psi`
/// background parameters).
pub fn symbolic_field(spec: &ModelSpec) -> &VecField {
    spec.vecfield("psihat").expect("shipped model declares psihat")
}

pub fn symbolic_field_second(spec: &ModelSpec) -> &VecField {
    spec.vecfield("psithat").expect("shipped model declares psithat")
}

/// Outcome of one engine-versus-reference comparison.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub engine: Form,
    pub reference: Form,
    pub difference: Form,
}

impl Comparison {
    pub fn matches(&self) -> bool {
        self.difference.is_zero()
    }
}

fn compare(spec: &ModelSpec, engine: Form, reference: Form) -> Comparison {
    let difference = engine.sub(spec.ctx(), &reference);
    Comparison { engine, reference, difference }
}

/// Engine Euler-Lagrange form versus the transcription.
pub fn compare_euler(spec: &ModelSpec) -> Result<Comparison, YmError> {
    let engine = varops::euler_lagrange(spec.ctx(), &spec.lagrangian())?;
    let reference = ym_reference_euler(spec)?;
    Ok(compare(spec, engine.into_form(), reference.into_form()))
}

/// Engine Jacobi morphism at the symbolic field versus the transcription.
pub fn compare_jacobi(spec: &ModelSpec) -> Result<Comparison, YmError> {
    let engine = varops::jacobi_morphism(spec.ctx(), &spec.lagrangian(), symbolic_field(spec))?;
    let reference = ym_reference_jacobi(spec)?;
    Ok(compare(spec, engine.into_form(), reference.into_form()))
}

/// Engine pair current at the symbolic fields versus the transcription.
pub fn compare_pair_current(spec: &ModelSpec) -> Result<Comparison, YmError> {
    let engine = varops::pair_current(
        spec.ctx(),
        &spec.lagrangian(),
        symbolic_field(spec),
        symbolic_field_second(spec),
    )?;
    let reference = ym_reference_pair_current(spec)?;
    Ok(compare(spec, engine.into_form(), reference))
}

/// The degenerate pair current with both slots the same symbolic field;
/// reduces to a combination that cancels by index symmetry.
pub fn degenerate_pair_current(spec: &ModelSpec) -> Result<Form, YmError> {
    let psi = symbolic_field(spec);
    Ok(varops::pair_current(spec.ctx(), &spec.lagrangian(), psi, psi)?.into_form())
}
