use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use tabu_design::search::{search, Evaluation, MoveKind, Objective, SearchConfig, SearchResult};
use tabu_design::{Cell, Result, SearchSpace};

/// Lowest of a few random bowls, plus a ripple. Counts its calls.
#[derive(Debug)]
pub struct Bumps {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
    offsets: Vec<f64>,
    ripple: f64,
    pub calls: AtomicUsize,
}

impl Objective for Bumps {
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let bowl = self
            .centers
            .iter()
            .zip(&self.weights)
            .zip(&self.offsets)
            .map(|((c, w), o)| w * c.iter().zip(x).map(|(c, x)| (x - c) * (x - c)).sum::<f64>() + o)
            .fold(f64::INFINITY, f64::min);
        Ok(Evaluation::feasible(bowl + self.ripple * x.iter().map(|v| (3.0 * v).sin()).sum::<f64>()))
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub bounds: Vec<(f64, f64, f64)>,
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
    pub ripple: f64,
    pub cfg: SearchConfig,
}

impl Case {
    pub fn space(&self) -> SearchSpace {
        SearchSpace::from_bounds(&self.bounds).unwrap()
    }

    pub fn objective(&self) -> Bumps {
        Bumps {
            centers: self.centers.clone(),
            weights: self.weights.clone(),
            offsets: self.offsets.clone(),
            ripple: self.ripple,
            calls: AtomicUsize::new(0),
        }
    }
}

pub fn case() -> impl Strategy<Value = Case> {
    let dim_bounds = (-5i32..5, 2i64..40, prop::sample::select(vec![0.1, 0.25, 0.5, 1.0, 2.0]))
        .prop_map(|(lo, n, step)| (lo as f64, lo as f64 + n as f64 * step, step));
    (1usize..=3)
        .prop_flat_map(move |d| {
            (
                prop::collection::vec(dim_bounds.clone(), d),
                prop::collection::vec(prop::collection::vec(-10.0f64..30.0, d), 1..4),
                any::<u64>(),
            )
        })
        .prop_flat_map(|(bounds, centers, seed)| {
            let k = centers.len();
            let d = bounds.len();
            (
                Just(bounds.clone()),
                Just(centers),
                prop::collection::vec(0.1f64..5.0, k),
                prop::collection::vec(-3.0f64..3.0, k),
                prop::sample::select(vec![0.0, 0.0, 0.3]),
                (1usize..10, 1usize..6, prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]), 1u32..4),
                (1u32..8, 1u32..8, 1u32..12, 1usize..400, any::<bool>()),
                prop::collection::vec(1i64..12, d),
                Just(seed),
            )
        })
        .prop_map(
            |(
                bounds,
                centers,
                weights,
                offsets,
                ripple,
                (tenure, best_size, k, r),
                (i, dd, rr, budget, mem),
                st,
                seed,
            )| {
                let steps = bounds
                    .iter()
                    .zip(&st)
                    .map(|(&(lo, hi, m), &s)| {
                        let n = ((hi - lo) / m).round() as i64;
                        s.min(n.max(1)) as f64 * m
                    })
                    .collect();
                let cfg = SearchConfig {
                    tenure,
                    best_size,
                    pattern_factor: k,
                    reduction_multiple: r,
                    initial_steps: Some(steps),
                    intensify_after: i,
                    diversify_after: i + dd,
                    reduce_after: i + dd + rr,
                    budget,
                    seed,
                    start: None,
                    use_memory: mem,
                };
                Case { bounds, centers, weights, offsets, ripple, cfg }
            },
        )
}

/// Replays the accepted moves against an independent tabu list.
pub fn check_tabu_replay(r: &SearchResult, tenure: usize) -> std::result::Result<(), String> {
    let mut tabu = std::collections::VecDeque::<Cell>::new();
    for (i, v) in r.visits.iter().enumerate() {
        if !v.kind.is_restart() && tabu.contains(&v.cell) && v.value >= v.best_before {
            return Err(format!("visit {i} {:?} re-entered a tabu cell without aspiration", v.cell));
        }
        tabu.push_back(v.cell.clone());
        if tabu.len() > tenure {
            tabu.pop_front();
        }
    }
    Ok(())
}

/// Every engine invariant on one random case.
pub fn check_search(c: &Case) -> std::result::Result<(), TestCaseError> {
    let space = c.space();
    let f = c.objective();
    let r = search(&f, &space, &c.cfg).unwrap();

    // evaluation counter wraps the objective
    prop_assert_eq!(r.evaluations, f.calls.load(Ordering::Relaxed));
    prop_assert!(r.evaluations <= c.cfg.budget);

    // monotone convergence history ending at the reported best
    prop_assert!(!r.history.is_empty());
    for w in r.history.windows(2) {
        prop_assert!(w[1].0 > w[0].0 && w[1].1 < w[0].1);
    }
    prop_assert_eq!(r.history.last().unwrap().1, r.best_value);
    prop_assert!(r.history.last().unwrap().0 <= r.evaluations);
    prop_assert_eq!(f.evaluate(&r.best).unwrap().value, r.best_value);

    // grid alignment of everything visited
    for v in &r.visits {
        for (i, &k) in v.cell.indices().iter().enumerate() {
            prop_assert!(k >= 0 && k <= space.intervals()[i]);
        }
        prop_assert!(space.is_aligned(&space.point(&v.cell)));
        prop_assert!(v.value >= r.best_value);
    }
    prop_assert!(space.is_aligned(&r.best));

    if c.cfg.use_memory {
        check_tabu_replay(&r, c.cfg.tenure).map_err(TestCaseError::fail)?;
    } else {
        prop_assert!(r
            .visits
            .iter()
            .all(|v| matches!(v.kind, MoveKind::Start | MoveKind::Explore | MoveKind::Pattern)));
        for w in r.visits.windows(2) {
            prop_assert!(w[1].value < w[0].value, "plain descent only takes improving moves");
        }
    }

    // determinism
    let again = search(&c.objective(), &space, &c.cfg).unwrap();
    prop_assert_eq!(&again.visits, &r.visits);
    prop_assert_eq!(&again.history, &r.history);
    prop_assert_eq!(again.termination, r.termination);
    Ok(())
}
