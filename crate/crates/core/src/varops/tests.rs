use super::*;
use crate::calcforms::{
    d_horizontal, ext_d, horizontal_n_form, volume, volume_contracted, BasisOne, Form,
};
use crate::jetgeom::{JetContext, Section, VecField};
use crate::symkernel::{partial, rat, Atom, Expr, FieldId, MultiIndex};
use std::collections::BTreeMap;

fn x(i: u8) -> Expr {
    Expr::atom(Atom::base(i))
}

fn y_i(ix: &[u8]) -> Expr {
    Expr::atom(Atom::jet(FieldId(0), MultiIndex::new(ix.to_vec())))
}

fn omega(ctx: &JetContext, ix: &[u8]) -> Form {
    Form::basis(ctx, BasisOne::Omega(FieldId(0), MultiIndex::new(ix.to_vec())))
}

fn free_particle() -> (JetContext, Form) {
    let ctx = JetContext::scalar_1d(2);
    let lag = horizontal_n_form(&ctx, y_i(&[1]).pow(2).scale(&rat(1, 2)));
    (ctx, lag)
}

fn wave() -> (JetContext, Form) {
    let ctx = JetContext::new(2, &["y"], 2);
    let density = (&y_i(&[1]).pow(2) - &y_i(&[2]).pow(2)).scale(&rat(1, 2));
    let lag = horizontal_n_form(&ctx, density);
    (ctx, lag)
}

fn vertical(ctx: &JetContext, component: Expr) -> VecField {
    VecField::vertical_scalar(ctx, component).unwrap()
}

/// Classical Euler-Lagrange coefficients
/// `sum_I (-1)^|I| d_I (dL/dy^sigma_I)`, computed with scalar calculus only.
fn classical_el(ctx: &JetContext, density: &Expr, sigma: FieldId) -> Expr {
    let mut acc = Expr::zero();
    for index in crate::symkernel::multi_indices_up_to(ctx.base_dim(), density.max_jet_order()) {
        let dl = partial(density, &Atom::jet(sigma, index.clone())).unwrap();
        if dl.is_zero() {
            continue;
        }
        let term = ctx.iterated_derivative(&dl, &index);
        acc = if index.len().is_multiple_of(2) { &acc + &term } else { &acc - &term };
    }
    acc
}

#[test]
fn source_forms_are_fixed_points() {
    let (ctx, _) = free_particle();
    let s = omega(&ctx, &[])
        .wedge(&ctx, &volume(&ctx))
        .scale_expr(&ctx, &(&y_i(&[1, 1]) * &x(1)));
    let i = interior_euler(&ctx, &s, 1).unwrap();
    assert!(i.form().equals(&ctx, &s));
}

#[test]
fn interior_euler_kills_exact_contact_forms() {
    // omega_1 ^ dx = -d(omega), and I of it vanishes.
    let (ctx, _) = free_particle();
    let rho = omega(&ctx, &[1]).wedge(&ctx, &volume(&ctx));
    let i = interior_euler(&ctx, &rho, 1).unwrap();
    assert!(i.is_zero());
}

#[test]
fn interior_euler_of_free_particle_action() {
    let (ctx, lag) = free_particle();
    let i = interior_euler(&ctx, &ext_d(&ctx, &lag), 1).unwrap();
    let expected = omega(&ctx, &[])
        .wedge(&ctx, &volume(&ctx))
        .scale_expr(&ctx, &-y_i(&[1, 1]));
    assert!(i.form().equals(&ctx, &expected));
    assert_eq!(i.coefficient(&ctx, FieldId(0)), -y_i(&[1, 1]));
}

#[test]
fn rejects_zero_contact_degree() {
    let (ctx, lag) = free_particle();
    assert!(matches!(interior_euler(&ctx, &lag, 0), Err(VarError::ZeroContactDegree)));
}

#[test]
fn decomposition_identity_for_source_form_input() {
    let (ctx, _) = free_particle();
    let s = omega(&ctx, &[]).wedge(&ctx, &volume(&ctx)).scale_expr(&ctx, &y_i(&[1]));
    let dec = residual(&ctx, &s, 1).unwrap();
    assert!(dec.r_part.is_zero());
    assert!(dec.identity_residual(&ctx, &s, 1).is_zero());
}

#[test]
fn residual_of_free_particle_exterior_derivative() {
    // p_1 R(d lambda) = -y_1 omega, so the momentum is +y_1 omega.
    let (ctx, lag) = free_particle();
    let dec = residual(&ctx, &ext_d(&ctx, &lag), 1).unwrap();
    let expected = omega(&ctx, &[]).scale_expr(&ctx, &-y_i(&[1]));
    assert!(dec.r_part.equals(&ctx, &expected));
    assert!(dec.identity_residual(&ctx, &ext_d(&ctx, &lag), 1).is_zero());
}

#[test]
fn decomposition_identity_on_mixed_second_order_input() {
    let (ctx, _) = free_particle();
    let rho = omega(&ctx, &[1, 1])
        .wedge(&ctx, &volume(&ctx))
        .scale_expr(&ctx, &(&y_i(&[]) * &y_i(&[1])))
        .add(
            &ctx,
            &omega(&ctx, &[1]).wedge(&ctx, &volume(&ctx)).scale_expr(&ctx, &x(1).pow(3)),
        );
    let dec = residual(&ctx, &rho, 1).unwrap();
    assert!(dec.identity_residual(&ctx, &rho, 1).is_zero());
}

#[test]
fn decomposition_identity_at_contact_degree_two() {
    // d of a 1-contact (n+1)-form is an (n+2)-form with a 2-contact part.
    let (ctx, lag) = free_particle();
    let el = euler_lagrange(&ctx, &lag).unwrap();
    let rho = ext_d(&ctx, el.form());
    let dec = residual(&ctx, &rho, 2).unwrap();
    assert!(dec.identity_residual(&ctx, &rho, 2).is_zero());

    let (ctx2, lag2) = wave();
    let el2 = euler_lagrange(&ctx2, &lag2).unwrap();
    let rho2 = ext_d(&ctx2, el2.form());
    let dec2 = residual(&ctx2, &rho2, 2).unwrap();
    assert!(dec2.identity_residual(&ctx2, &rho2, 2).is_zero());
}

#[test]
fn euler_lagrange_matches_classical_formula() {
    let (ctx, _) = free_particle();
    let density = &(&y_i(&[1]).pow(2) * &y_i(&[])) + &(&x(1) * &y_i(&[1, 1]).pow(2));
    let lag = horizontal_n_form(&ctx, density.clone());
    let el = euler_lagrange(&ctx, &lag).unwrap();
    assert_eq!(el.coefficient(&ctx, FieldId(0)), classical_el(&ctx, &density, FieldId(0)));
}

#[test]
fn euler_lagrange_of_wave_lagrangian() {
    let (ctx, lag) = wave();
    let el = euler_lagrange(&ctx, &lag).unwrap();
    assert_eq!(el.coefficient(&ctx, FieldId(0)), &y_i(&[2, 2]) - &y_i(&[1, 1]));
}

#[test]
fn euler_lagrange_kills_horizontal_differentials() {
    // lambda = d_H eta for a horizontal (n-1)-form is variationally trivial.
    let (ctx, _) = wave();
    let etas = vec![
        volume_contracted(&ctx, 1).scale_expr(&ctx, &(&y_i(&[]).pow(2) * &x(2))),
        volume_contracted(&ctx, 2).scale_expr(&ctx, &(&y_i(&[1]) * &y_i(&[]))),
    ];
    for eta in etas {
        let lag = d_horizontal(&ctx, &eta);
        let el = euler_lagrange(&ctx, &lag).unwrap();
        assert!(el.is_zero(), "nonzero EL for divergence of {eta}");
    }
}

#[test]
fn euler_lagrange_rejects_contact_input() {
    let (ctx, _) = free_particle();
    let rho = omega(&ctx, &[]).scale_expr(&ctx, &y_i(&[]));
    assert!(matches!(euler_lagrange(&ctx, &rho), Err(VarError::NotHorizontal)));
}

#[test]
fn momentum_of_free_particle() {
    let (ctx, lag) = free_particle();
    let p = momentum(&ctx, &lag).unwrap();
    assert!(p.equals(&ctx, &omega(&ctx, &[]).scale_expr(&ctx, &y_i(&[1]))));
}

#[test]
fn momentum_of_zero_lagrangian() {
    let (ctx, _) = free_particle();
    let p = momentum(&ctx, &Form::zero(1)).unwrap();
    assert!(p.is_zero());
}

#[test]
fn momentum_of_wave_lagrangian() {
    let (ctx, lag) = wave();
    let p = momentum(&ctx, &lag).unwrap();
    let expected = omega(&ctx, &[])
        .wedge(&ctx, &volume_contracted(&ctx, 1))
        .scale_expr(&ctx, &y_i(&[1]))
        .sub(
            &ctx,
            &omega(&ctx, &[])
                .wedge(&ctx, &volume_contracted(&ctx, 2))
                .scale_expr(&ctx, &y_i(&[2])),
        );
    assert!(p.equals(&ctx, &expected));
}

#[test]
fn noether_current_for_vertical_translation() {
    let (ctx, lag) = free_particle();
    let eps = noether_current(&ctx, &lag, &vertical(&ctx, Expr::one())).unwrap();
    assert!(eps.form().equals(&ctx, &Form::scalar(&ctx, y_i(&[1]))));
}

#[test]
fn noether_current_for_time_translation_is_energy() {
    let (ctx, lag) = free_particle();
    let mut fiber = BTreeMap::new();
    fiber.insert(FieldId(0), Expr::zero());
    let dx1 = VecField::new(&ctx, vec![Expr::one()], fiber).unwrap();
    let eps = noether_current(&ctx, &lag, &dx1).unwrap();
    let expected = Form::scalar(&ctx, y_i(&[1]).pow(2).scale(&rat(-1, 2)));
    assert!(eps.form().equals(&ctx, &expected));
}

#[test]
fn noether_current_of_zero_field() {
    let (ctx, lag) = free_particle();
    let eps = noether_current(&ctx, &lag, &VecField::zero(&ctx)).unwrap();
    assert!(eps.form().is_zero());
}

#[test]
fn first_variation_identity_vertical() {
    let (ctx, lag) = free_particle();
    let psi = vertical(&ctx, &x(1).pow(2) + &Expr::one());
    let split = variation_decompose(&ctx, &lag, std::slice::from_ref(&psi)).unwrap();
    assert!(split.residual(&ctx).is_zero());
}

#[test]
fn first_variation_identity_projectable() {
    let (ctx, lag) = free_particle();
    let mut fiber = BTreeMap::new();
    fiber.insert(FieldId(0), &y_i(&[]) + &x(1));
    let psi = VecField::new(&ctx, vec![x(1).pow(2)], fiber).unwrap();
    let split = variation_decompose(&ctx, &lag, std::slice::from_ref(&psi)).unwrap();
    assert!(split.residual(&ctx).is_zero());
}

#[test]
fn second_variation_identity_on_wave() {
    let (ctx, lag) = wave();
    let psi1 = vertical(&ctx, &x(1).pow(2) + &(&x(2) * &x(1)));
    let psi2 = vertical(&ctx, x(2).pow(2));
    let split = variation_decompose(&ctx, &lag, &[psi1, psi2]).unwrap();
    assert!(split.residual(&ctx).is_zero());
}

#[test]
fn on_shell_first_variation_leaves_only_the_current_term() {
    let (ctx, lag) = free_particle();
    let psi = vertical(&ctx, x(1).pow(3));
    let gamma = Section::scalar(&ctx, &x(1).scale(&rat(3, 1)) + &Expr::int(2)).unwrap();
    let split = variation_decompose(&ctx, &lag, std::slice::from_ref(&psi)).unwrap();
    let euler_pullback = crate::calcforms::pullback(&ctx, &split.euler_term, &gamma);
    assert!(euler_pullback.is_zero());
    let lie_pullback = crate::calcforms::pullback(&ctx, &split.lie_side, &gamma);
    let current_pullback = crate::calcforms::pullback(&ctx, &split.current_terms[0], &gamma);
    assert!(lie_pullback.equals(&ctx, &current_pullback));
}

#[test]
fn variation_decompose_rejects_empty_field_list() {
    let (ctx, lag) = free_particle();
    assert!(matches!(
        variation_decompose(&ctx, &lag, &[]),
        Err(VarError::NoVariationFields)
    ));
}

#[test]
fn jacobi_morphism_of_free_particle() {
    let (ctx, lag) = free_particle();
    // psi = a(x) d_y with a = x^3: J_psi = -a'' omega ^ dx = -6x omega ^ dx.
    let psi = vertical(&ctx, x(1).pow(3));
    let j = jacobi_morphism(&ctx, &lag, &psi).unwrap();
    assert_eq!(j.coefficient(&ctx, FieldId(0)), x(1).scale(&rat(-6, 1)));
}

#[test]
fn jacobi_morphism_of_wave_lagrangian() {
    let (ctx, lag) = wave();
    // J_psi = -(d11 a - d22 a) omega ^ ds; a = x1^2 gives -2.
    let psi = vertical(&ctx, x(1).pow(2));
    let j = jacobi_morphism(&ctx, &lag, &psi).unwrap();
    assert_eq!(j.coefficient(&ctx, FieldId(0)), Expr::int(-2));
    // a = x1^2 + x2^2 is in the kernel.
    let psi2 = vertical(&ctx, &x(1).pow(2) + &x(2).pow(2));
    let j2 = jacobi_morphism(&ctx, &lag, &psi2).unwrap();
    assert!(j2.is_zero());
}

#[test]
fn jacobi_morphism_rejects_non_vertical_fields() {
    let (ctx, lag) = free_particle();
    let mut fiber = BTreeMap::new();
    fiber.insert(FieldId(0), Expr::zero());
    let dx1 = VecField::new(&ctx, vec![Expr::one()], fiber).unwrap();
    assert!(matches!(jacobi_morphism(&ctx, &lag, &dx1), Err(VarError::NotVertical)));
}

#[test]
fn adjoint_expression_agrees_for_base_dependent_fields() {
    let (ctx, _) = free_particle();
    let density = &y_i(&[1]).pow(2).scale(&rat(1, 2)) + &(&y_i(&[]).pow(2) * &y_i(&[1]).pow(2));
    let lag = horizontal_n_form(&ctx, density);
    let psi = vertical(&ctx, x(1).pow(2));
    let j = jacobi_morphism(&ctx, &lag, &psi).unwrap();
    let adj = jacobi_adjoint_expression(&ctx, &lag, &psi).unwrap();
    assert!(j.form().equals(&ctx, adj.form()));
}

#[test]
fn is_jacobi_field_detects_kernel_members() {
    let (ctx, lag) = free_particle();
    let gamma = Section::scalar(&ctx, &x(1).scale(&rat(3, 1)) + &Expr::int(2)).unwrap();
    // a = alpha + beta x has a'' = 0.
    let affine = vertical(&ctx, &x(1).scale(&rat(5, 2)) + &Expr::int(1));
    let t = is_jacobi_field(&ctx, &lag, &affine, Some(&gamma)).unwrap();
    assert!(t.is_jacobi);
    assert!(t.residual.is_zero());

    let quadratic = vertical(&ctx, x(1).pow(2));
    let t = is_jacobi_field(&ctx, &lag, &quadratic, None).unwrap();
    assert!(!t.is_jacobi);
    let expected = omega(&ctx, &[]).wedge(&ctx, &volume(&ctx)).scale_expr(&ctx, &Expr::int(-2));
    assert!(t.residual.equals(&ctx, &expected));
}

#[test]
fn is_jacobi_field_rejects_non_extremals() {
    let (ctx, lag) = free_particle();
    let bad = Section::scalar(&ctx, x(1).pow(3)).unwrap();
    let psi = vertical(&ctx, Expr::one());
    let err = is_jacobi_field(&ctx, &lag, &psi, Some(&bad)).unwrap_err();
    assert!(matches!(err, VarError::NotExtremal { .. }));
}

#[test]
fn pair_current_is_the_wronskian() {
    let (ctx, lag) = free_particle();
    // Independent route: the Noether current of -a y_11 dx for b d_y is
    // b (dL/dy_1 - d(dL/dy_11)) + b' dL/dy_11 = a' b - a b'.
    let cases: Vec<(Expr, Expr)> = vec![
        (Expr::one(), x(1)),
        (x(1).pow(2), &x(1) + &Expr::int(1)),
        (&x(1).pow(3) + &x(1), x(1).pow(2).scale(&rat(1, 3))),
    ];
    for (a, b) in cases {
        let psi1 = vertical(&ctx, a.clone());
        let psi2 = vertical(&ctx, b.clone());
        let current = pair_current(&ctx, &lag, &psi1, &psi2).unwrap();
        let da = ctx.total_derivative(&a, 1);
        let db = ctx.total_derivative(&b, 1);
        let wronskian = &(&da * &b) - &(&a * &db);
        assert!(current.form().equals(&ctx, &Form::scalar(&ctx, wronskian)));
    }
    // a = 1, b = x pins the constant current to -1.
    let c = pair_current(&ctx, &lag, &vertical(&ctx, Expr::one()), &vertical(&ctx, x(1)))
        .unwrap();
    assert!(c.form().equals(&ctx, &Form::scalar(&ctx, Expr::int(-1))));
}

#[test]
fn commutator_identity_vanishes() {
    let (ctx, lag) = free_particle();
    let pairs = vec![
        (vertical(&ctx, x(1).pow(2)), vertical(&ctx, &x(1) + &Expr::int(2))),
        (vertical(&ctx, y_i(&[])), vertical(&ctx, &x(1) * &y_i(&[]))),
        (vertical(&ctx, &y_i(&[]).pow(2) + &x(1)), vertical(&ctx, y_i(&[]))),
    ];
    for (psi1, psi2) in pairs {
        let r = check_commutator_identity(&ctx, &lag, &psi1, &psi2).unwrap();
        assert!(r.is_zero());
    }
    // psi2 = 0 trivially.
    let r =
        check_commutator_identity(&ctx, &lag, &vertical(&ctx, x(1)), &VecField::zero(&ctx))
            .unwrap();
    assert!(r.is_zero());
}

#[test]
fn commutator_identity_vanishes_on_wave() {
    let (ctx, lag) = wave();
    let psi1 = vertical(&ctx, &x(1) * &x(2));
    let psi2 = vertical(&ctx, &y_i(&[]) + &x(2).pow(2));
    let r = check_commutator_identity(&ctx, &lag, &psi1, &psi2).unwrap();
    assert!(r.is_zero());
}

#[test]
fn strong_conservation_for_affine_jacobi_field() {
    let (ctx, lag) = free_particle();
    // psi1 affine (off-shell Jacobi), psi2 a symmetry of the first variation.
    let psi1 = vertical(&ctx, &x(1).scale(&rat(2, 1)) + &Expr::int(1));
    let psi2 = vertical(&ctx, Expr::one());
    let r = strong_conservation_check(&ctx, &lag, &[psi1, psi2], 1).unwrap();
    assert!(r.is_zero());
}

#[test]
fn strong_conservation_diagnoses_non_jacobi_first_slot() {
    let (ctx, lag) = free_particle();
    let psi1 = vertical(&ctx, x(1).pow(2));
    let psi2 = vertical(&ctx, Expr::one());
    let r = strong_conservation_check(&ctx, &lag, &[psi1, psi2], 1).unwrap();
    assert!(!r.is_zero());
}

#[test]
fn third_variation_identity() {
    let (ctx, lag) = free_particle();
    let psi1 = vertical(&ctx, &x(1) + &Expr::int(1));
    let psi2 = vertical(&ctx, x(1).pow(2));
    let psi3 = vertical(&ctx, Expr::one());
    let split = variation_decompose(&ctx, &lag, &[psi1, psi2, psi3]).unwrap();
    assert!(split.residual(&ctx).is_zero());
}

#[test]
fn adjoint_expression_agrees_on_shell_for_fiber_dependent_fields() {
    // psi = y d_y: the engine path and the adjoint expression differ off
    // shell by a term proportional to the Euler-Lagrange coefficients, and
    // agree after pullback along any extremal.
    let (ctx, lag) = free_particle();
    let psi = vertical(&ctx, y_i(&[]));
    let j = jacobi_morphism(&ctx, &lag, &psi).unwrap();
    let adj = jacobi_adjoint_expression(&ctx, &lag, &psi).unwrap();
    let difference = j.form().sub(&ctx, adj.form());
    assert!(!difference.is_zero());
    // Off shell the difference is (dpsi/dy) E = -y_11 on this Lagrangian.
    let diff_coeff = &j.coefficient(&ctx, FieldId(0)) - &adj.coefficient(&ctx, FieldId(0));
    assert_eq!(diff_coeff, -y_i(&[1, 1]));
    // On shell both pull back to the same values.
    let gamma = Section::scalar(&ctx, &x(1).scale(&rat(3, 1)) + &Expr::int(2)).unwrap();
    let diff_density = crate::calcforms::horizontal_n_form(&ctx, diff_coeff);
    assert!(crate::calcforms::pullback(&ctx, &diff_density, &gamma).is_zero());
}

#[test]
fn cancellation_interrupts_derivations() {
    let (mut ctx, lag) = free_particle();
    let token = crate::jetgeom::CancelToken::never();
    token.cancel();
    ctx.set_cancel(token);
    let err = euler_lagrange(&ctx, &lag).unwrap_err();
    assert!(matches!(err, VarError::Jet(crate::jetgeom::JetError::Cancelled)));
}

#[test]
fn order_cap_guards_deep_derivations() {
    let (mut ctx, lag) = free_particle();
    ctx.set_order_cap(Some(2));
    assert!(euler_lagrange(&ctx, &lag).is_ok());
    // The Euler-Lagrange form of a second-order Lagrangian reaches order 4.
    let second_order = horizontal_n_form(&ctx, y_i(&[1, 1]).pow(2).scale(&rat(1, 2)));
    let err = euler_lagrange(&ctx, &second_order).unwrap_err();
    assert!(matches!(
        err,
        VarError::Jet(crate::jetgeom::JetError::OrderCapExceeded { needed: 4, cap: 2 })
    ));
}

#[test]
fn self_adjointness_defect_is_exact_for_commuting_fields() {
    let (ctx, lag) = free_particle();
    let psi1 = vertical(&ctx, x(1).pow(3));
    let psi2 = vertical(&ctx, x(1).pow(2));
    let defect = self_adjointness_defect(&ctx, &lag, &psi1, &psi2).unwrap();
    let pair = pair_current(&ctx, &lag, &psi1, &psi2).unwrap();
    let dh = d_horizontal(&ctx, pair.form());
    assert!(defect.add(&ctx, &dh).is_zero());
}

#[test]
fn self_adjointness_on_shell_for_jacobi_pair() {
    let (ctx, lag) = free_particle();
    let gamma = Section::scalar(&ctx, &x(1).scale(&rat(3, 1)) + &Expr::int(2)).unwrap();
    let psi1 = vertical(&ctx, &Expr::int(1) + &x(1));
    let psi2 = vertical(&ctx, x(1).scale(&rat(7, 1)));
    let defect = self_adjointness_defect(&ctx, &lag, &psi1, &psi2).unwrap();
    let pb = crate::calcforms::pullback(&ctx, &defect, &gamma);
    assert!(pb.is_zero());
}
