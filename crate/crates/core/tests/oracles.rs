//! Production kernels against the independent reference routes.

use std::f64::consts::PI;

use kho_core::grid::make_grid;
use kho_core::liouville::{classical_step_with, ClassicalScheme};
use kho_core::metrics::dn;
use kho_core::oracle::{brute_force_kick, monte_carlo_classical, wavefunction_kick_oracle, PureState};
use kho_core::wigner::{quantum_kick, quantum_kick_comb};
use kho_core::{coherent_state, FieldKind, ModelParams};

#[test]
fn comb_matches_direct_quadrature() {
    let (k, eta) = (0.5, 0.25);
    let g = make_grid(4.0, 128, eta).unwrap();
    let s = g.comb_cells(eta).unwrap() as f64;
    let cutoff = PI * s;
    let steps = (64.0 * cutoff / (eta * eta)).ceil() as usize;
    let f = coherent_state(&g, (0.0, 1.1), eta, FieldKind::Quantum).unwrap();
    let brute = brute_force_kick(&f, k, eta, cutoff, steps).unwrap();
    let comb = quantum_kick_comb(&f, k, eta).unwrap();
    let l1 = dn(&brute, &comb).unwrap();
    assert!(l1 <= 1e-8, "{l1:e}");
    assert!(dn(&quantum_kick(&f, k, eta).unwrap(), &comb).unwrap() <= 1e-12);
}

#[test]
fn comb_matches_pure_state_route() {
    let (k, eta) = (0.5, 0.25);
    let g = make_grid(4.0, 128, eta).unwrap();
    let psi = PureState::coherent(&g, (0.0, 1.1), eta);
    let w0 = coherent_state(&g, (0.0, 1.1), eta, FieldKind::Quantum).unwrap();
    let oracle = wavefunction_kick_oracle(&psi, &g, k, eta).unwrap();
    let l1 = dn(&oracle, &quantum_kick(&w0, k, eta).unwrap()).unwrap();
    assert!(l1 <= 1e-10, "{l1:e}");
    // a stronger kick exercises more comb orders while staying inside the domain
    let oracle = wavefunction_kick_oracle(&psi, &g, 1.0, eta).unwrap();
    let l1 = dn(&oracle, &quantum_kick(&w0, 1.0, eta).unwrap()).unwrap();
    assert!(l1 <= 1e-10, "{l1:e}");
}

#[test]
fn grid_transport_matches_trajectory_sampling() {
    let params = ModelParams::new(0.5, 0.25);
    let d = 0.01;
    let g = make_grid(3.0 * PI, 256, params.eta).unwrap();
    let mc = monte_carlo_classical((0.0, 1.1), &params, d, 10, 10_000_000, 2024, &g).unwrap();
    for scheme in [ClassicalScheme::SemiLagrangian, ClassicalScheme::Spectral] {
        let mut f = coherent_state(&g, (0.0, 1.1), params.eta, FieldKind::Classical).unwrap();
        for _ in 0..10 {
            f = classical_step_with(&f, &params, d, scheme).unwrap().0;
        }
        let l1 = dn(&f, &mc).unwrap();
        assert!(l1 <= 0.05, "{scheme:?}: {l1}");
    }
}
