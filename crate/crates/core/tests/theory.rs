mod common;

use adasplit::analysis::{l2_norm, leading_error_strang, reference_solve, ReferenceConfig};
use adasplit::models::kpp::Kpp;
use adasplit::SchemeId;

use common::kpp_case;

fn kpp_lhs_and_leading(eps: f64, t: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let (sp, u0, p) = kpp_case(1.0, 1.0, -70.0, 70.0, 5001);
    let cfg = ReferenceConfig {
        rtol: 1e-13,
        atol: 1e-13,
        ..Default::default()
    };
    let exact = reference_solve(sp.model(), sp.grid(), &u0, t, &cfg).unwrap();
    let scheme = if eps == 0.0 {
        SchemeId::strang2()
    } else {
        SchemeId::strang2_shifted(eps).unwrap()
    };
    let split = sp.apply_scheme(&scheme, &u0, t).unwrap();
    let lhs: Vec<f64> = exact
        .values()
        .iter()
        .zip(split.values())
        .map(|(a, b)| a - b)
        .collect();
    let lead = leading_error_strang(
        u0.values(),
        sp.grid().dx(),
        &Kpp { k: 1.0 },
        p.k,
        p.d,
        eps,
        t,
    )
    .unwrap();
    (lhs, lead, sp.grid().dx())
}

#[test]
fn kpp_shifted_leading_term_matches_splitting_error() {
    let (lhs, lead, dx) = kpp_lhs_and_leading(0.01, 1e-3);
    let diff: Vec<f64> = lhs.iter().zip(&lead).map(|(a, b)| a - b).collect();
    let rel = l2_norm(&diff, dx) / l2_norm(&lead, dx);
    assert!(rel <= 0.2, "relative residual {rel}");
}

#[test]
fn kpp_unshifted_leading_term_matches_splitting_error() {
    let (lhs, lead, dx) = kpp_lhs_and_leading(0.0, 2e-3);
    let diff: Vec<f64> = lhs.iter().zip(&lead).map(|(a, b)| a - b).collect();
    let rel = l2_norm(&diff, dx) / l2_norm(&lead, dx);
    assert!(rel <= 0.2, "relative residual {rel}");
}

#[test]
fn kpp_leading_term_fit_improves_as_step_shrinks() {
    let rel = |t: f64| {
        let (lhs, lead, dx) = kpp_lhs_and_leading(0.01, t);
        let diff: Vec<f64> = lhs.iter().zip(&lead).map(|(a, b)| a - b).collect();
        l2_norm(&diff, dx) / l2_norm(&lead, dx)
    };
    let (coarse, fine) = (rel(1e-2), rel(1e-3));
    assert!(fine < coarse, "{fine} vs {coarse}");
}
