use glp_core::glp::{transition_mass, GlpSpec, MassQuery};
use glp_core::measures::GeneratingLaw;
use glp_core::plp::{
    intensity_coordinates, intensity_r, plp_terminal_pmf, psi, psi_inverse, survival_functions, PlpSpec,
};
use glp_core::DensityFamily;
use proptest::prelude::*;

fn plp(m: Vec<f64>) -> PlpSpec {
    PlpSpec::new(GeneratingLaw::geometric_truncated(0.5, 12).unwrap(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn terminal_pmf_sums_to_one(m1 in 0.2f64..3.0, m2 in 0.2f64..3.0) {
        let spec = plp(vec![m1, m2]);
        let mut total = 0.0;
        for a in 0..=12i64 {
            for b in 0..=(12 - a) {
                total += plp_terminal_pmf(&spec, &[a, b]).unwrap();
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12, "{}", total);
    }

    #[test]
    fn coordinate_intensities_split_the_total(
        m in prop::collection::vec(0.2f64..3.0, 1..=4),
        t in 0.0f64..0.95,
        counts in prop::collection::vec(0u8..3, 4),
    ) {
        let spec = plp(m.clone());
        let x: Vec<f64> = counts.iter().take(m.len()).map(|c| *c as f64).collect();
        let total = intensity_r(&spec, t, &x).unwrap();
        let parts: f64 = intensity_coordinates(&spec, t, &x).unwrap().iter().sum();
        prop_assert!((total - parts).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn psi_inverse_round_trips(m1 in 0.2f64..3.0, m2 in 0.2f64..3.0, x in 0.0f64..1.0) {
        let spec = plp(vec![m1, m2]);
        let u = psi(&spec, x).unwrap();
        prop_assert!((psi_inverse(&spec, u).unwrap() - x).abs() < 1e-10);
    }

    #[test]
    fn marginal_survival_decreases(m1 in 0.2f64..3.0, m2 in 0.2f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let spec = plp(vec![m1, m2]);
        let sf = survival_functions(&spec);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for i in 0..2 {
            prop_assert!(sf.marginal(i, hi).unwrap() <= sf.marginal(i, lo).unwrap() + 1e-15);
        }
    }

    #[test]
    fn lattice_transitions_sum_to_one(m1 in 0.2f64..3.0, m2 in 0.2f64..3.0, s in 0.0f64..0.5, x1 in 0u8..3, x2 in 0u8..3) {
        let spec = GlpSpec::new(
            DensityFamily::Poisson,
            GeneratingLaw::geometric_truncated(0.5, 12).unwrap(),
            vec![m1, m2],
        )
        .unwrap();
        let x = [x1 as f64, x2 as f64];
        for q in [MassQuery::Joint, MassQuery::Sum, MassQuery::Marginal(0), MassQuery::FullyConditioned(1), MassQuery::Terminal] {
            let mass = transition_mass(&spec, q, s, &x, s + 0.3).unwrap();
            prop_assert!((mass - 1.0).abs() < 1e-12, "{:?}: {}", q, mass);
        }
    }
}

#[test]
fn brownian_transitions_integrate_to_one() {
    let law = GeneratingLaw::from_pairs(&[(-1.0, 0.25), (1.5, 0.75)]).unwrap();
    let spec = GlpSpec::new(DensityFamily::Brownian { sigma: 0.7 }, law, vec![0.5, 1.5]).unwrap();
    for q in [MassQuery::Joint, MassQuery::Sum, MassQuery::Marginal(1), MassQuery::FullyConditioned(0), MassQuery::Terminal] {
        let mass = transition_mass(&spec, q, 0.2, &[0.3, -0.4], 0.7).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{q:?}: {mass}");
    }
}
