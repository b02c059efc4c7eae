use dra_market::case_study::golden_matrices;
use dra_market::game_engine::{bayesian_nash, find_dominant_row, Mechanism, TypeContingentStrategy};

fn dominant_rows(ep: &[dra_market::game_engine::ExpectedPayoffMatrix]) -> Vec<Option<usize>> {
    ep.iter().map(|m| find_dominant_row(m).dominant).collect()
}

#[test]
fn non_cooperative_fixtures_reproduce_the_narrated_equilibrium() {
    for g in golden_matrices().unwrap().iter().filter(|g| g.variant.mechanism == Mechanism::NonCooperative) {
        assert_eq!(dominant_rows(&g.ep_a), [Some(2), Some(2)], "{}", g.variant.name());
        assert_eq!(dominant_rows(&g.ep_b), [Some(2), Some(0)], "{}", g.variant.name());
        let result = bayesian_nash(&g.ep_a, &g.ep_b).unwrap();
        assert_eq!(result.equilibria.len(), 1);
        let e = result.primary().unwrap();
        assert_eq!(e.a, TypeContingentStrategy { actions: vec![2, 2] });
        assert_eq!(e.b, TypeContingentStrategy { actions: vec![2, 0] });
        // B's (3,1) is A's seventh column; A's (3,3) is B's ninth.
        assert_eq!(e.b.column(3), 6);
        assert_eq!(e.a.column(3), 8);
    }
}

#[test]
fn stackelberg_fixtures_have_a_different_equilibrium() {
    for g in golden_matrices().unwrap().iter().filter(|g| g.variant.mechanism == Mechanism::Stackelberg) {
        assert_eq!(dominant_rows(&g.ep_a), [None, None], "{}", g.variant.name());
        assert_eq!(dominant_rows(&g.ep_b), [None, Some(0)], "{}", g.variant.name());
        let result = bayesian_nash(&g.ep_a, &g.ep_b).unwrap();
        assert_eq!(result.equilibria.len(), 1);
        let e = result.primary().unwrap();
        assert_eq!(e.a.display(), "(3,2)");
        assert_eq!(e.b.display(), "(2,1)");
        // Type 2 of A strictly prefers the marginal bid against B's (3,1).
        let col = TypeContingentStrategy { actions: vec![2, 0] }.column(3);
        let v = g.ep_a[1].values();
        assert!(v[[1, col]] > v[[2, col]]);
    }
}
