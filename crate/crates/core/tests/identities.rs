//! Property tests for the operator identities on randomized inputs:
//! the first-variation formula, the integration-by-parts decomposition,
//! variational triviality of divergences, naturality of the Lie derivative,
//! and the commutator identity for vertical fields.

use proptest::prelude::*;
use std::collections::BTreeMap;
use varfield_core::calcforms::{
    contact_split, d_horizontal, ext_d, horizontal_n_form, horizontalize, lie_derivative,
    volume, volume_contracted, BasisOne, Form,
};
use varfield_core::jetgeom::{JetContext, VecField};
use varfield_core::symkernel::{rat, Atom, Expr, FieldId, MultiIndex};
use varfield_core::varops::{
    check_commutator_identity, euler_lagrange, interior_euler, residual, variation_decompose,
};

const N: u8 = 2;
const M: u16 = 2;

fn ctx() -> JetContext {
    JetContext::new(N, &["u", "v"], 2)
}

/// Atom pool: base coordinates plus jets up to the given order.
fn atom_pool(max_order: usize) -> Vec<Atom> {
    let mut pool: Vec<Atom> = (1..=N).map(Atom::base).collect();
    for f in 0..M {
        for index in varfield_core::symkernel::multi_indices_up_to(N, max_order) {
            pool.push(Atom::jet(FieldId(f), index));
        }
    }
    pool
}

fn expr_from_pool(pool: Vec<Atom>) -> impl Strategy<Value = Expr> {
    let term = (
        -3i64..=3,
        prop::collection::vec((0..pool.len(), 1u32..=2), 0..=2),
    );
    prop::collection::vec(term, 1..=3).prop_map(move |terms| {
        let mut acc = Expr::zero();
        for (c, factors) in terms {
            if c == 0 {
                continue;
            }
            let mut t = Expr::rational(rat(c, 1));
            for (ix, p) in factors {
                t = &t * &Expr::atom(pool[ix].clone()).pow(p);
            }
            acc = &acc + &t;
        }
        acc
    })
}

/// Density with jets up to second order.
fn density() -> impl Strategy<Value = Expr> {
    expr_from_pool(atom_pool(2))
}

/// Base-only polynomial components.
fn base_poly() -> impl Strategy<Value = Expr> {
    expr_from_pool((1..=N).map(Atom::base).collect())
}

/// Components in base and order-0 fiber coordinates.
fn fiber_poly() -> impl Strategy<Value = Expr> {
    expr_from_pool(atom_pool(0))
}

fn projectable_field() -> impl Strategy<Value = (Vec<Expr>, Vec<Expr>)> {
    (
        prop::collection::vec(base_poly(), N as usize),
        prop::collection::vec(fiber_poly(), M as usize),
    )
}

fn vertical_field() -> impl Strategy<Value = Vec<Expr>> {
    prop::collection::vec(fiber_poly(), M as usize)
}

fn make_field(ctx: &JetContext, base: Vec<Expr>, fiber: Vec<Expr>) -> VecField {
    let table: BTreeMap<FieldId, Expr> =
        fiber.into_iter().enumerate().map(|(i, e)| (FieldId(i as u16), e)).collect();
    VecField::new(ctx, base, table).expect("projectable components")
}

/// Brute-force differentiator over raw term lists: the independent oracle
/// for the partial-derivative contract (power rule on each factor, no
/// canonicalization machinery involved).
fn brute_force_partial(terms: &[(i64, Vec<(Atom, u32)>)], v: &Atom) -> Expr {
    let mut acc = Expr::zero();
    for (coeff, factors) in terms {
        for (k, (a, p)) in factors.iter().enumerate() {
            if a != v {
                continue;
            }
            let mut term = Expr::rational(rat(coeff * (*p as i64), 1));
            for (j, (b, q)) in factors.iter().enumerate() {
                let power = if j == k { q - 1 } else { *q };
                term = &term * &Expr::atom(b.clone()).pow(power);
            }
            acc = &acc + &term;
        }
    }
    acc
}

#[test]
fn metric_contraction_differentiates_like_the_brute_force_oracle() {
    // d(1/2 sum_{mu,nu} eta^{mu nu} y_mu y_nu)/dy_1 for eta = diag(1,-1):
    // expand the double sum concretely and compare against the raw
    // term-list differentiator.
    let eta = [[1i64, 0], [0, -1]];
    let y = |mu: u8| Atom::jet(FieldId(0), MultiIndex::new(vec![mu]));
    let mut raw: Vec<(i64, Vec<(Atom, u32)>)> = Vec::new();
    let mut expr = Expr::zero();
    for mu in 1..=2u8 {
        for nu in 1..=2u8 {
            let c = eta[(mu - 1) as usize][(nu - 1) as usize];
            if c == 0 {
                continue;
            }
            // The 1/2 factor is kept exact by doubling the oracle input.
            raw.push((c, vec![(y(mu), 1), (y(nu), 1)]));
            let term = (&Expr::atom(y(mu)) * &Expr::atom(y(nu))).scale(&rat(c, 2));
            expr = &expr + &term;
        }
    }
    let engine = varfield_core::symkernel::partial(&expr, &y(1)).unwrap();
    let oracle = brute_force_partial(&raw, &y(1)).scale(&rat(1, 2));
    assert_eq!(engine, oracle);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn first_variation_identity((base, fiber) in projectable_field(), l in density()) {
        let ctx = ctx();
        let lag = horizontal_n_form(&ctx, l);
        let psi = make_field(&ctx, base, fiber);
        let split = variation_decompose(&ctx, &lag, std::slice::from_ref(&psi)).unwrap();
        prop_assert!(split.residual(&ctx).is_zero());
    }

    #[test]
    fn decomposition_identity_first_contact_degree(
        c0 in density(), c1 in density(), c2 in density(),
    ) {
        // rho = sum over a few contact classes of omega^sigma_J ^ (coeff ds).
        let ctx = ctx();
        let ds = volume(&ctx);
        let classes = [
            (FieldId(0), MultiIndex::empty(), c0),
            (FieldId(1), MultiIndex::new(vec![1]), c1),
            (FieldId(0), MultiIndex::new(vec![1, 2]), c2),
        ];
        let mut rho = Form::zero(N as usize + 1);
        for (f, index, coeff) in classes {
            let w = Form::basis(&ctx, BasisOne::Omega(f, index));
            rho = rho.add(&ctx, &w.wedge(&ctx, &ds).scale_expr(&ctx, &coeff));
        }
        let dec = residual(&ctx, &rho, 1).unwrap();
        prop_assert!(dec.identity_residual(&ctx, &rho, 1).is_zero());
    }

    #[test]
    fn decomposition_identity_second_contact_degree(l in density(), f in fiber_poly()) {
        // The 2-contact forms exercised by second variations: d of
        // (psi _| E(lambda)) exterior derivatives and d(E(lambda)) itself.
        let ctx = ctx();
        let lag = horizontal_n_form(&ctx, l);
        let el = euler_lagrange(&ctx, &lag).unwrap();
        let rho = ext_d(&ctx, el.form());
        let dec = residual(&ctx, &rho, 2).unwrap();
        prop_assert!(dec.identity_residual(&ctx, &rho, 2).is_zero());
        let _ = f;
    }

    #[test]
    fn exactness_divergences_are_variationally_trivial(e1 in density(), e2 in density()) {
        let ctx = ctx();
        let eta = volume_contracted(&ctx, 1)
            .scale_expr(&ctx, &e1)
            .add(&ctx, &volume_contracted(&ctx, 2).scale_expr(&ctx, &e2));
        let lag = d_horizontal(&ctx, &eta);
        let el = euler_lagrange(&ctx, &lag).unwrap();
        prop_assert!(el.is_zero());
    }

    #[test]
    fn interior_euler_fixes_source_forms(e1 in density(), e2 in density()) {
        let ctx = ctx();
        let coeffs: BTreeMap<FieldId, Expr> =
            [(FieldId(0), e1), (FieldId(1), e2)].into_iter().collect();
        let s = varfield_core::varops::SourceForm::from_coefficients(&ctx, &coeffs);
        let i = interior_euler(&ctx, s.form(), 1).unwrap();
        prop_assert!(i.form().equals(&ctx, s.form()));
    }

    #[test]
    fn lie_derivative_naturality((base, fiber) in projectable_field(), l in density()) {
        // I(L_psi E(lambda)) = E(h L_psi lambda).
        let ctx = ctx();
        let lag = horizontal_n_form(&ctx, l);
        let psi = make_field(&ctx, base, fiber);
        let el = euler_lagrange(&ctx, &lag).unwrap();
        let lhs = interior_euler(&ctx, &lie_derivative(&ctx, &psi, el.form()), 1).unwrap();
        let dragged = horizontalize(&ctx, &lie_derivative(&ctx, &psi, &lag));
        let rhs = euler_lagrange(&ctx, &dragged).unwrap();
        prop_assert!(lhs.form().equals(&ctx, rhs.form()));
    }

    #[test]
    fn commutator_identity(l in density(), f1 in vertical_field(), f2 in vertical_field()) {
        let ctx = ctx();
        let lag = horizontal_n_form(&ctx, l);
        let psi1 = make_field(&ctx, vec![Expr::zero(); N as usize], f1);
        let psi2 = make_field(&ctx, vec![Expr::zero(); N as usize], f2);
        let r = check_commutator_identity(&ctx, &lag, &psi1, &psi2).unwrap();
        prop_assert!(r.is_zero());
    }

    #[test]
    fn horizontalized_differential_agrees(l in density()) {
        // h d h mu = d_H(h mu) for n-forms.
        let ctx = ctx();
        let mu = horizontal_n_form(&ctx, l).add(
            &ctx,
            &Form::basis(&ctx, BasisOne::Omega(FieldId(0), MultiIndex::empty()))
                .wedge(&ctx, &volume_contracted(&ctx, 2)),
        );
        let h = horizontalize(&ctx, &mu);
        let lhs = horizontalize(&ctx, &ext_d(&ctx, &h));
        let rhs = d_horizontal(&ctx, &h);
        prop_assert!(lhs.equals(&ctx, &rhs));
    }

    #[test]
    fn partial_derivatives_commute(e in density(), i in 0usize..8, j in 0usize..8) {
        let pool = atom_pool(2);
        let a = &pool[i % pool.len()];
        let b = &pool[j % pool.len()];
        if !a.is_differentiation_target() || !b.is_differentiation_target() {
            return Ok(());
        }
        let ab = varfield_core::symkernel::partial(
            &varfield_core::symkernel::partial(&e, a).unwrap(), b).unwrap();
        let ba = varfield_core::symkernel::partial(
            &varfield_core::symkernel::partial(&e, b).unwrap(), a).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn numeric_evaluation_respects_ring_operations(
        a in density(), b in density(), seed in 0u64..1000,
    ) {
        // (a + b) * a evaluated after canonicalization agrees with the
        // pointwise combination of the factors to relative 1e-12.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut bind = std::collections::BTreeMap::new();
        for atom in atom_pool(2) {
            bind.insert(atom, rng.gen_range(-2.0..2.0));
        }
        let combined = &(&a + &b) * &a;
        let lhs = varfield_core::symkernel::eval_numeric(&combined, &bind).unwrap();
        let va = varfield_core::symkernel::eval_numeric(&a, &bind).unwrap();
        let vb = varfield_core::symkernel::eval_numeric(&b, &bind).unwrap();
        let rhs = (va + vb) * va;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn contact_basis_pulls_back_to_zero_on_random_sections(
        c0 in base_poly(), c1 in base_poly(),
    ) {
        let ctx = ctx();
        let comps: BTreeMap<FieldId, Expr> =
            [(FieldId(0), c0), (FieldId(1), c1)].into_iter().collect();
        let gamma = varfield_core::jetgeom::Section::new(&ctx, comps).unwrap();
        for f in 0..M {
            for index in varfield_core::symkernel::multi_indices_up_to(N, 2) {
                let omega = Form::basis(&ctx, BasisOne::Omega(FieldId(f), index));
                let pb = varfield_core::calcforms::pullback(&ctx, &omega, &gamma);
                prop_assert!(pb.is_zero());
            }
        }
    }

    #[test]
    fn prolongation_is_linear(f1 in fiber_poly(), f2 in fiber_poly()) {
        let ctx = ctx();
        let psi1 = make_field(&ctx, vec![Expr::zero(); N as usize], vec![f1.clone(), Expr::zero()]);
        let psi2 = make_field(&ctx, vec![Expr::zero(); N as usize], vec![f2.clone(), Expr::zero()]);
        let sum = make_field(&ctx, vec![Expr::zero(); N as usize], vec![&f1 + &f2, Expr::zero()]);
        for index in varfield_core::symkernel::multi_indices_up_to(N, 2) {
            let lhs = sum.prolonged_component(&ctx, FieldId(0), &index);
            let rhs = &psi1.prolonged_component(&ctx, FieldId(0), &index)
                + &psi2.prolonged_component(&ctx, FieldId(0), &index);
            prop_assert_eq!(lhs, rhs);
        }
        // The zero field prolongs to zero.
        let zero = varfield_core::jetgeom::VecField::zero(&ctx);
        for index in varfield_core::symkernel::multi_indices_up_to(N, 2) {
            prop_assert!(zero.prolonged_component(&ctx, FieldId(0), &index).is_zero());
        }
    }

    #[test]
    fn contact_split_components_are_homogeneous(l in density(), c in density()) {
        let ctx = ctx();
        let rho = horizontal_n_form(&ctx, l).add(
            &ctx,
            &Form::basis(&ctx, BasisOne::Omega(FieldId(1), MultiIndex::new(vec![2])))
                .wedge(&ctx, &volume_contracted(&ctx, 1))
                .scale_expr(&ctx, &c),
        );
        let split = contact_split(&ctx, &rho);
        for (deg, comp) in split.components().iter().enumerate() {
            for (m, _) in comp.terms() {
                prop_assert_eq!(m.contact_degree(), deg);
            }
        }
        prop_assert!(split
            .sum(&ctx)
            .equals(&ctx, &rho.raise_order(&ctx, rho.order() + 1)));
    }
}
