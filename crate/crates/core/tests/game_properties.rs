use lossless::game::{ConstantSum, GameSpec, Matrix, MixedProfile};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|w| {
        let w: Vec<f64> = w.iter().map(|v| v + 1e-9).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn profile(counts: &'static [usize]) -> impl Strategy<Value = MixedProfile> {
    counts
        .iter()
        .map(|&n| simplex(n))
        .collect::<Vec<_>>()
        .prop_map(|blocks| MixedProfile::new(blocks).unwrap())
}

/// Three agents with 2, 3 and 2 actions; every pair constant-sum with its own constant.
fn random_constant_sum_game() -> impl Strategy<Value = GameSpec> {
    let counts = [2usize, 3, 2];
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let entries: usize = pairs.iter().map(|&(i, k)| counts[i] * counts[k]).sum();
    (
        prop::collection::vec(-2.0f64..2.0, entries),
        prop::collection::vec(-1.0f64..1.0, 3),
    )
        .prop_map(move |(vals, cs)| {
            let mut edges = Vec::new();
            let mut it = vals.into_iter();
            for (&(i, k), c) in pairs.iter().zip(cs) {
                let rows: Vec<Vec<f64>> = (0..counts[i])
                    .map(|_| (0..counts[k]).map(|_| it.next().unwrap()).collect())
                    .collect();
                let a = Matrix::from_rows(&rows).unwrap();
                let back: Vec<Vec<f64>> = (0..counts[k])
                    .map(|l| (0..counts[i]).map(|j| c - a.get(j, l)).collect())
                    .collect();
                edges.push((i, k, a));
                edges.push((k, i, Matrix::from_rows(&back).unwrap()));
            }
            GameSpec::new(counts.to_vec(), edges)
                .unwrap()
                .with_constant_sum_tolerance(1e-12)
        })
}

fn total_payoff(game: &GameSpec, x: &MixedProfile) -> f64 {
    let p = game.payoff(x).unwrap();
    x.agents()
        .iter()
        .zip(p.agents())
        .map(|(x, p)| x.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Zero-sum 2×2 game with the pure saddle point (row 0, column 1).
fn saddle_game() -> (GameSpec, MixedProfile) {
    let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, -1.0]]).unwrap();
    let game = GameSpec::new(
        vec![2, 2],
        [(0, 1, a.clone()), (1, 0, a.transpose().scaled(-1.0))],
    )
    .unwrap();
    let ne = MixedProfile::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    (game, ne)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn total_payoff_is_sum_of_pair_constants(
        (game, x) in random_constant_sum_game().prop_flat_map(|g| (Just(g), profile(&[2, 3, 2])))
    ) {
        let ConstantSum::Holds(pairs) = game.validate_constant_sum() else {
            return Err(TestCaseError::fail("constructed game must be constant-sum"));
        };
        let c: f64 = pairs.iter().map(|p| p.c).sum();
        prop_assert!((total_payoff(&game, &x) - c).abs() <= 1e-10);
    }

    #[test]
    fn supply_vanishes_at_fully_mixed_equilibria(x in profile(&[3, 3]), y in profile(&[2, 2, 2])) {
        let rps = GameSpec::rock_paper_scissors();
        let s = rps.game_operator_supply(&x, &MixedProfile::uniform(&[3, 3])).unwrap();
        prop_assert!(s.abs() <= 1e-10);
        let cmp = GameSpec::cyclic_matching_pennies();
        let s = cmp.game_operator_supply(&y, &MixedProfile::uniform(&[2, 2, 2])).unwrap();
        prop_assert!(s.abs() <= 1e-10);
    }

    #[test]
    fn supply_is_nonnegative_at_any_equilibrium(x in profile(&[2, 2])) {
        let (game, ne) = saddle_game();
        prop_assert!(game.verify_nash(&ne, 1e-12).unwrap().is_nash);
        prop_assert!(game.game_operator_supply(&x, &ne).unwrap() >= -1e-10);
    }

    #[test]
    fn payoff_is_linear_in_each_agent(
        (game, x, y) in random_constant_sum_game().prop_flat_map(|g| (Just(g), profile(&[2, 3, 2]), profile(&[2, 3, 2]))),
        alpha in 0.0f64..1.0,
        agent in 0usize..3,
    ) {
        let mut mixed = x.clone().into_inner();
        mixed[agent] = x.agent(agent).iter().zip(y.agent(agent)).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let mut swapped = x.clone().into_inner();
        swapped[agent] = y.agent(agent).to_vec();
        let pm = game.payoff(&MixedProfile::new(mixed).unwrap()).unwrap();
        let px = game.payoff(&x).unwrap();
        let py = game.payoff(&MixedProfile::new(swapped).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..pm.agent(i).len() {
                let lin = alpha * px.agent(i)[j] + (1.0 - alpha) * py.agent(i)[j];
                prop_assert!((pm.agent(i)[j] - lin).abs() <= 1e-12);
            }
        }
    }
}
