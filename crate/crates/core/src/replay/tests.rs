use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::generate::{dataset_model, simulate_log, Generated, DATASETS};
use crate::oracle::TokenGame;

fn supply_chain() -> (Generated, EventLog) {
    let g = dataset_model(&DATASETS[1], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let log = simulate_log(&g, &mut rng, 12, 100);
    (g, log)
}

const ENGINES: [CompilationMode; 3] = [CompilationMode::Full, CompilationMode::Default, CompilationMode::Optimized];

#[test]
fn conforming_traces_accepted_everywhere() {
    let (g, log) = supply_chain();
    for mode in CompilationMode::ALL {
        let r = replay(&g.model, &log, mode, ReplayOptions::default()).unwrap();
        assert_eq!((r.conforming, r.non_conforming), (log.len(), 0), "{mode}");
        assert!(r.traces.iter().all(|(_, _, t)| t.completed), "{mode}");
    }
}

#[test]
fn swapped_events_rejected_without_side_effects() {
    let (g, log) = supply_chain();
    let game = TokenGame::new(&g.model).unwrap();
    let t = log.traces.iter().find(|t| t.events.len() >= 3).unwrap();
    let mut bad = t.clone();
    let (i, j) = (0..bad.events.len())
        .flat_map(|i| (i + 1..t.events.len()).map(move |j| (i, j)))
        .find(|&(i, j)| {
            let mut x = t.clone();
            x.events.swap(i, j);
            !game.accepts(&x.names())
        })
        .unwrap();
    bad.events.swap(i, j);
    for mode in ENGINES {
        let r = Replayer::new(&g.model, mode).unwrap();
        let res = r.run(&bad, ReplayOptions { verify_rejections: true }).unwrap();
        assert!(!res.conforming && !res.rejected.is_empty(), "{mode}");
        assert_eq!(res.mutating_rejections, 0, "{mode}");
    }
    let basic = Replayer::new(&g.model, CompilationMode::Basic).unwrap();
    assert!(basic.run(&bad, ReplayOptions::default()).unwrap().conforming);
}

#[test]
fn unknown_task_is_an_error() {
    let (g, _) = supply_chain();
    let t = Trace { events: vec![Event::new("No such task")] };
    for mode in CompilationMode::ALL {
        let r = Replayer::new(&g.model, mode).unwrap();
        assert!(matches!(r.run(&t, ReplayOptions::default()), Err(ReplayError::UnknownTask(_))));
    }
}

#[test]
fn full_mode_rejections_name_the_reason() {
    let (g, log) = supply_chain();
    let r = Replayer::new(&g.model, CompilationMode::Full).unwrap();
    let mut t = log.traces[0].clone();
    t.events.push(t.events[0].clone());
    let res = r.run(&t, ReplayOptions::default()).unwrap();
    assert_eq!(res.rejected, vec![t.events.len() - 1]);
    assert!(res.reasons[0].contains("BadWorkitemId"), "{:?}", res.reasons);
}

#[test]
fn report_is_deterministic_and_ordered() {
    let (g, log) = supply_chain();
    let a = cost_report("Supply chain", &g.model, &log).unwrap();
    let b = cost_report("Supply chain", &g.model, &log).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_table(), b.to_table());
    let inst = |m| a.mode(m).unwrap().instantiation;
    assert!(inst(CompilationMode::Basic) < inst(CompilationMode::Optimized));
    assert!(inst(CompilationMode::Optimized) <= inst(CompilationMode::Default));
    assert!(inst(CompilationMode::Default) < inst(CompilationMode::Full));
    let exec = |m| a.mode(m).unwrap().execution;
    assert!(exec(CompilationMode::Default) >= exec(CompilationMode::Optimized));
}

#[test]
fn invoicing_distinct_traces_match_a_set() {
    let g = dataset_model(&DATASETS[0], 1);
    let log = simulate_log(&g, &mut ChaCha8Rng::seed_from_u64(4), 300, 400);
    let groups = dedupe(&log);
    let set: std::collections::HashSet<String> = log.traces.iter().map(|t| t.to_string()).collect();
    assert_eq!(groups.len(), set.len());
    assert_eq!(groups.iter().map(|(_, n)| n).sum::<usize>(), 300);
    assert!(groups.len() > 1);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dedupe_partitions_the_log(picks in proptest::collection::vec(0usize..4, 0..40)) {
            let pool: Vec<Trace> = (0..4).map(|i| Trace { events: vec![Event::new(&format!("t{i}")); i + 1] }).collect();
            let log = EventLog { traces: picks.iter().map(|&i| pool[i].clone()).collect() };
            let groups = dedupe(&log);
            for (t, n) in &groups {
                prop_assert_eq!(*n, log.traces.iter().filter(|x| *x == t).count());
            }
            prop_assert_eq!(groups.iter().map(|g| g.1).sum::<usize>(), log.len());
        }

        #[test]
        fn noise_is_seeded(seed in any::<u64>(), fraction in 0.0f64..=1.0) {
            let g = dataset_model(&DATASETS[1], 2);
            let log = simulate_log(&g, &mut ChaCha8Rng::seed_from_u64(seed), 6, 100);
            let a = inject_noise(&log, &g.model, fraction, seed).unwrap();
            prop_assert_eq!(&a, &inject_noise(&log, &g.model, fraction, seed).unwrap());
            let game = TokenGame::new(&g.model).unwrap();
            let changed = a.traces.iter().zip(&log.traces).filter(|(x, y)| x != y).count();
            prop_assert_eq!(changed, (fraction * 6.0).round() as usize);
            for (x, y) in a.traces.iter().zip(&log.traces) {
                if x != y {
                    prop_assert!(!game.accepts(&x.names()));
                }
            }
        }
    }
}
