use qsp::grid::{random_smooth_field, DiscreteDomain, Field};
use qsp::ground_state::{
    default_guess, residual_a, solve_ground_state, solve_ground_state_from, sobolev_quotient,
    GroundStateOptions,
};
use rand::SeedableRng;

#[test]
fn level_is_start_independent_and_minimal() {
    let d = DiscreteDomain::new(31).unwrap();
    let r = 6.0;
    let a = solve_ground_state(d, r).unwrap();
    // A lopsided positive start.
    let start = Field::from_fn(d, |x, y| (std::f64::consts::PI * x).sin().powi(3) * y * (1.0 - y) * (1.0 + x));
    let b = solve_ground_state_from(&start, r, GroundStateOptions::default()).unwrap();
    assert!((a.m_frak - b.m_frak).abs() < 1e-6 * a.m_frak, "{} vs {}", a.m_frak, b.m_frak);

    // Scaling the minimizer leaves the quotient but not the equation.
    assert!(residual_a(&a.u_frak.scale(2.0), r).unwrap() > residual_a(&a.u_frak, r).unwrap());

    let q_min = sobolev_quotient(&a.u_frak, r).unwrap();
    assert!((q_min - a.sobolev_quotient).abs() < 1e-10 * q_min);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let bump = default_guess(d);
    for _ in 0..20 {
        // Positive smooth trial fields: the bump times a positive modulation.
        let w = random_smooth_field(d, &mut rng, 4);
        let v = Field::from_values(
            d,
            bump.as_slice().iter().zip(w.as_slice()).map(|(b, w)| b * (1.5 + w).max(0.1)).collect(),
        )
        .unwrap();
        assert!(sobolev_quotient(&v, r).unwrap() >= q_min * (1.0 - 1e-10));
    }
}
