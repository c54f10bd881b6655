//! Seeded noise: perturbed traces are re-drawn until the token game
//! refuses them.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{NodeKind, ProcessModel};
use crate::oracle::TokenGame;

use super::{Event, EventLog, Trace};

const ATTEMPTS: usize = 1000;

fn task_event(m: &ProcessModel, name: &str) -> Event {
    let mut e = Event::new(name);
    if let Some(a) = m.nodes.iter().find(|n| n.name == name).and_then(|n| n.annotation.as_ref()) {
        e.inputs = a.import_params.iter().map(|p| (p.name.clone(), "0".to_string())).collect();
    }
    e
}

/// One random change: swap two events, drop one, repeat one or put a
/// different task in its place.
fn perturb<R: Rng>(t: &mut Trace, names: &[&str], m: &ProcessModel, rng: &mut R) {
    let n = t.events.len();
    match rng.gen_range(0..4) {
        0 if n >= 2 => {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            t.events.swap(i, j);
        }
        1 if n >= 2 => {
            t.events.remove(rng.gen_range(0..n));
        }
        2 => {
            let i = rng.gen_range(0..n);
            let e = t.events[i].clone();
            t.events.insert(i, e);
        }
        _ => {
            let i = rng.gen_range(0..n);
            let name = names[rng.gen_range(0..names.len())];
            t.events[i] = task_event(m, name);
        }
    }
}

/// Perturbs `round(fraction * len)` traces chosen at random. Each changed
/// trace is refused by the token game; the change is redrawn otherwise
/// (and stacked on itself after many misses).
pub fn inject_noise(log: &EventLog, model: &ProcessModel, fraction: f64, seed: u64) -> Result<EventLog, String> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(format!("fraction {fraction} outside [0, 1]"));
    }
    let mut out = log.clone();
    let k = (fraction * log.len() as f64).round() as usize;
    if k == 0 {
        return Ok(out);
    }
    let game = TokenGame::new(model)?;
    let names: Vec<&str> =
        model.nodes.iter().filter(|n| matches!(n.kind, NodeKind::Task(_))).map(|n| n.name.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, log.len(), k).into_vec();
    picked.sort_unstable();
    for i in picked {
        let orig = &log.traces[i];
        let mut t = orig.clone();
        for tries in 0.. {
            if tries < ATTEMPTS {
                t = orig.clone();
            }
            perturb(&mut t, &names, model, &mut rng);
            if !t.events.is_empty() && !game.accepts(&t.names()) {
                break;
            }
            if tries > 20 * ATTEMPTS {
                return Err(format!("trace {i} could not be made non-conforming"));
            }
        }
        out.traces[i] = t;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{dataset_model, simulate_log, DATASETS};

    fn fixture() -> (ProcessModel, EventLog) {
        let g = dataset_model(&DATASETS[1], 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let log = simulate_log(&g, &mut rng, 10, 100);
        (g.model, log)
    }

    #[test]
    fn zero_fraction_is_identity() {
        let (m, log) = fixture();
        assert_eq!(inject_noise(&log, &m, 0.0, 1).unwrap(), log);
    }

    #[test]
    fn seeded_and_exact() {
        let (m, log) = fixture();
        let a = inject_noise(&log, &m, 0.5, 11).unwrap();
        assert_eq!(a, inject_noise(&log, &m, 0.5, 11).unwrap());
        let game = TokenGame::new(&m).unwrap();
        let changed: Vec<usize> = (0..log.len()).filter(|i| a.traces[*i] != log.traces[*i]).collect();
        assert_eq!(changed.len(), 5);
        for i in changed {
            assert!(!game.accepts(&a.traces[i].names()));
        }
    }

    #[test]
    fn bad_fraction() {
        let (m, log) = fixture();
        assert!(inject_noise(&log, &m, 1.5, 0).is_err());
    }
}
