//! The residual operator: the local strongly contact remainder in the
//! geometric integration-by-parts decomposition
//! `pi*(p_k rho) = I(rho) + p_k d p_k R(rho)`.

use super::source::{interior_euler, psi_table, SourceForm};
use super::VarError;
use crate::calcforms::{
    contact_split, ext_d, iterated_formal_derivative, volume_contracted, BasisOne, Form,
};
use crate::jetgeom::JetContext;
use crate::symkernel::{multi_indices, split_multiplicity, FieldId, MultiIndex, Rat};
use std::collections::BTreeMap;

/// Result of the decomposition: the canonical source-form part, the local
/// residual `R(rho)`, and the intermediate integration-by-parts tables.
#[derive(Clone, Debug)]
pub struct ResidualDecomposition {
    pub i_part: SourceForm,
    pub r_part: Form,
    /// `zeta^I_sigma` tables keyed by (field, multi-index).
    pub zeta: BTreeMap<(FieldId, MultiIndex), Form>,
    /// `Phi^I` (contact factors of `omega^sigma ^ zeta^I_sigma` with the
    /// volume stripped), keyed by multi-index.
    pub phi: BTreeMap<MultiIndex, Form>,
}

impl ResidualDecomposition {
    /// Left minus right of the decomposition identity; zero when the
    /// construction is consistent.
    pub fn identity_residual(&self, ctx: &JetContext, rho: &Form, k: usize) -> Form {
        let p = contact_split(ctx, rho).component(k).clone();
        let rhs_r = contact_split(ctx, &ext_d(ctx, &self.r_part)).component(k).clone();
        p.sub(ctx, self.i_part.form()).sub(ctx, &rhs_r)
    }
}

/// Computes the decomposition for an (n+k)-form, `k >= 1`.
///
/// Writing `p_k rho = sum_I omega^sigma_I ^ Psi^I_sigma`, the tables
/// `zeta^I_sigma` are solved top-down from
/// `Psi^A = sum_B M(A,B) d_B zeta^{BA}` (with `M` the Leibniz splitting
/// multiplicities of iterated derivatives over unordered classes), which
/// makes `sum_I d_I(omega^sigma ^ zeta^I_sigma)` reproduce `p_k rho`
/// exactly. The `|I| = 0` layer is the source-form part; the rest is
/// reorganized into `R(rho) = (-1)^k sum_j d_I Phi^{Ij} ^ ds_j`.
pub fn residual(ctx: &JetContext, rho: &Form, k: usize) -> Result<ResidualDecomposition, VarError> {
    if k == 0 {
        return Err(VarError::ZeroContactDegree);
    }
    let n = ctx.base_dim();
    let p = contact_split(ctx, rho).component(k).clone();
    let psi = psi_table(ctx, &p, k);
    let max_len = psi.keys().map(|(_, i)| i.len()).max().unwrap_or(0);
    let degree = n as usize + k - 1;

    // zeta^A = Psi^A - sum_{B != 0} M(A,B) d_B zeta^{BA}, solved by
    // descending |A|; entries above max_len vanish.
    let mut zeta: BTreeMap<(FieldId, MultiIndex), Form> = BTreeMap::new();
    for len in (0..=max_len).rev() {
        ctx.check_cancel()?;
        for index in multi_indices(n, len) {
            for field in ctx.variational_fields() {
                let mut acc = match psi.get(&(field, index.clone())) {
                    Some(f) => f.clone(),
                    None => Form::zero(degree),
                };
                for blen in 1..=(max_len - len) {
                    for b in multi_indices(n, blen) {
                        let key = (field, b.concat(&index));
                        let Some(z) = zeta.get(&key) else { continue };
                        if z.is_zero() {
                            continue;
                        }
                        let m = split_multiplicity(&index, &b) as i64;
                        let term =
                            iterated_formal_derivative(ctx, z, &b).scale(&Rat::from_integer(m.into()));
                        acc = acc.sub(ctx, &term);
                    }
                }
                if !acc.is_zero() {
                    zeta.insert((field, index.clone()), acc);
                }
            }
        }
    }

    // Phi^I ^ ds = sum_sigma omega^sigma ^ zeta^I_sigma, per |I| >= 1 class.
    let mut phi: BTreeMap<MultiIndex, Form> = BTreeMap::new();
    for ((field, index), z) in &zeta {
        if index.is_empty() {
            continue;
        }
        let w = Form::basis(ctx, BasisOne::Omega(*field, MultiIndex::empty()));
        let contacted = w.wedge(ctx, z);
        let stripped = strip_volume(ctx, &contacted, k)?;
        let entry = phi.entry(index.clone()).or_insert_with(|| Form::zero(k));
        *entry = entry.add(ctx, &stripped);
    }

    // R(rho) = (-1)^k sum_j d_I Phi^{Ij} ^ ds_j, with each class `Ij`
    // distributed symmetrically over its strippable last slots: the value
    // `j` receives weight mult(j)/|Ij|. Any weighting that sums to one per
    // class satisfies the decomposition identity; the symmetric one matches
    // the closed-form currents.
    let mut r_part = Form::zero(degree);
    for (index, f) in &phi {
        ctx.check_cancel()?;
        for j in index.distinct() {
            let rest = index.remove_one(j).expect("j occurs");
            let weight = Rat::new(
                (index.multiplicity(j) as i64).into(),
                (index.len() as i64).into(),
            );
            let derived = iterated_formal_derivative(ctx, f, &rest).scale(&weight);
            r_part = r_part.add(ctx, &derived.wedge(ctx, &volume_contracted(ctx, j)));
        }
    }
    if !k.is_multiple_of(2) {
        r_part = r_part.neg();
    }
    super::guard_order(ctx, &r_part)?;

    let i_part = interior_euler(ctx, rho, k)?;
    Ok(ResidualDecomposition { i_part, r_part, zeta, phi })
}

/// Factors out the volume element: for a term `c * ds ^ W` (contact block
/// `W` of length `contact`), returns `c' * W` with `c' ^ ds` reproducing the
/// term. Every term of the input must contain the full `dx` block.
fn strip_volume(ctx: &JetContext, form: &Form, contact: usize) -> Result<Form, VarError> {
    let n = ctx.base_dim() as usize;
    let mut raw = Vec::new();
    for (mono, coeff) in form.terms() {
        let (dx_count, rest): (usize, Vec<BasisOne>) = {
            let mut count = 0;
            let mut rest = Vec::new();
            for b in mono.factors() {
                match b {
                    BasisOne::Dx(_) => count += 1,
                    other => rest.push(other.clone()),
                }
            }
            (count, rest)
        };
        if dx_count != n {
            return Err(VarError::NotVolumeSaturated);
        }
        // Stored order is dx-block first: term = c ds ^ W = c (-1)^(n k) W ^ ds.
        let sign = if (n * contact).is_multiple_of(2) { 1 } else { -1 };
        let mono_rest = crate::calcforms::WedgeMono::from_factors(rest)
            .expect("contact factors distinct")
            .1;
        raw.push((mono_rest, coeff.scale(&Rat::from_integer(sign.into()))));
    }
    Ok(Form::assemble(ctx, contact, raw))
}

/// Generalized momentum `p_{d_V lambda} = -p_1 R(d lambda)` of a horizontal
/// n-form.
pub fn momentum(ctx: &JetContext, lagrangian: &Form) -> Result<Form, VarError> {
    if !lagrangian.is_horizontal() || lagrangian.degree() != ctx.base_dim() as usize {
        return Err(VarError::NotHorizontal);
    }
    let d = ext_d(ctx, lagrangian);
    let dec = residual(ctx, &d, 1)?;
    Ok(contact_split(ctx, &dec.r_part).component(1).neg())
}
