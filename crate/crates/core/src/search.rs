//! Discrete tabu search driven by Hooke-Jeeves exploration and pattern moves.
//!
//! One iteration explores around the current base point by sweeping the
//! coordinates, moving the trial point whenever a probe improves on it. If the
//! sweep found nothing better, the search still takes the best admissible
//! neighbour (an uphill move), so it cannot settle in a local optimum. A
//! neighbour is admissible when it is not in the tabu list, or when it beats
//! the best value found so far (aspiration). Improving moves are extended by a
//! pattern move.
//!
//! Consecutive iterations without a new global best escalate: intensify
//! (restart from what the best list has in common), then diversify (random
//! restart), then shrink the step sizes by a fixed number of minimum steps.
//! With memory disabled the loop is plain discrete Hooke-Jeeves.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memory::{BestList, TabuList};
use crate::space::{Cell, DesignVector, SearchSpace};

/// Objective value and feasibility of one design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub feasible: bool,
}

impl Evaluation {
    pub fn feasible(value: f64) -> Self {
        Self { value, feasible: true }
    }

    pub fn infeasible(value: f64) -> Self {
        Self { value, feasible: false }
    }
}

/// Objective to minimise. Must be deterministic: the engine caches values
/// by grid cell and independent runs may share one instance across threads.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        Ok(Evaluation::feasible(self(x)))
    }
}

/// Tuning knobs for [`search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Tabu tenure `n`.
    pub tenure: usize,
    /// Size `m` of the best-solution list.
    pub best_size: usize,
    /// Pattern-move extension factor `k`.
    pub pattern_factor: f64,
    /// Steps shrink by this many minimum steps per reduction.
    pub reduction_multiple: u32,
    /// Starting step per dimension (real units, multiples of the minimum
    /// step). Defaults to a tenth of each range.
    pub initial_steps: Option<Vec<f64>>,
    pub intensify_after: u32,
    pub diversify_after: u32,
    pub reduce_after: u32,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    pub seed: u64,
    /// Starting point; a random grid point when absent.
    pub start: Option<Vec<f64>>,
    /// Tabu memory, aspiration, intensification and diversification. When
    /// false only improving moves are taken.
    pub use_memory: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tenure: 7,
            best_size: 5,
            pattern_factor: 1.0,
            reduction_multiple: 1,
            initial_steps: None,
            intensify_after: 10,
            diversify_after: 15,
            reduce_after: 25,
            budget: 10_000,
            seed: 0,
            start: None,
            use_memory: true,
        }
    }
}

impl SearchConfig {
    /// Checks the configuration against `space` and returns the initial
    /// steps in minimum-step units.
    pub fn resolve_steps(&self, space: &SearchSpace) -> Result<Vec<i64>> {
        fn bad<T>(m: String) -> Result<T> {
            Err(Error::InvalidConfig(m))
        }
        if self.tenure == 0 {
            return bad("tenure must be positive".into());
        }
        if self.best_size == 0 {
            return bad("best list size must be positive".into());
        }
        if !(self.pattern_factor > 0.0 && self.pattern_factor.is_finite()) {
            return bad(format!("pattern factor {} must be positive", self.pattern_factor));
        }
        if self.reduction_multiple == 0 {
            return bad("reduction multiple must be positive".into());
        }
        if !(0 < self.intensify_after
            && self.intensify_after < self.diversify_after
            && self.diversify_after < self.reduce_after)
        {
            return bad(format!(
                "thresholds must satisfy 0 < intensify ({}) < diversify ({}) < reduce ({})",
                self.intensify_after, self.diversify_after, self.reduce_after
            ));
        }
        if self.budget == 0 {
            return bad("budget must be positive".into());
        }
        if let Some(start) = &self.start {
            space.check_dim(start.len())?;
            if !space.is_aligned(start) {
                return Err(Error::OutOfBounds(start.clone()));
            }
        }
        match &self.initial_steps {
            None => Ok(space.intervals().iter().map(|&n| (n / 10).max(1)).collect()),
            Some(steps) => {
                space.check_dim(steps.len())?;
                steps
                    .iter()
                    .zip(space.min_step())
                    .map(|(&s, &m)| {
                        let k = s / m;
                        let r = k.round();
                        if r < 1.0 || (k - r).abs() > 1e-9 * r {
                            bad(format!("initial step {s} is not a positive multiple of {m}"))
                        } else {
                            Ok(r as i64)
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Budget,
    Converged,
}

/// How a point became the current base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Start,
    Explore,
    Pattern,
    Intensify,
    Diversify,
}

impl MoveKind {
    /// Restarts are jumps, not neighbourhood moves, and ignore the tabu list.
    pub fn is_restart(self) -> bool {
        matches!(self, Self::Start | Self::Intensify | Self::Diversify)
    }
}

/// One accepted point, in acceptance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Visit {
    pub cell: Cell,
    pub value: f64,
    pub kind: MoveKind,
    /// Best value known when the move was chosen (the aspiration level).
    pub best_before: f64,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: DesignVector,
    pub best_cell: Cell,
    pub best_value: f64,
    pub feasible: bool,
    /// Calls made to the objective (cache hits are not counted).
    pub evaluations: usize,
    /// `(evaluation index, best value so far)`, appended on every improvement.
    pub history: Vec<(usize, f64)>,
    pub termination: Termination,
    pub visits: Vec<Visit>,
}

/// Stops a run early.
#[derive(Debug)]
pub enum Halt {
    Budget,
    Failed(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Failed(e)
    }
}

/// Memoising, budget-enforcing wrapper around an objective.
pub struct Evaluator<'a, O: ?Sized> {
    objective: &'a O,
    space: &'a SearchSpace,
    budget: usize,
    calls: usize,
    cache: HashMap<Cell, Evaluation>,
    best: Option<(Cell, Evaluation)>,
    history: Vec<(usize, f64)>,
}

impl<'a, O: Objective + ?Sized> Evaluator<'a, O> {
    pub fn new(objective: &'a O, space: &'a SearchSpace, budget: usize) -> Self {
        Self { objective, space, budget, calls: 0, cache: HashMap::new(), best: None, history: Vec::new() }
    }

    pub fn evaluations(&self) -> usize {
        self.calls
    }

    pub fn best_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.1.value)
    }

    pub fn evaluate(&mut self, cell: &Cell) -> Result<Evaluation, Halt> {
        if let Some(e) = self.cache.get(cell) {
            return Ok(*e);
        }
        if self.calls >= self.budget {
            return Err(Halt::Budget);
        }
        let x = self.space.point(cell);
        if !self.space.is_aligned(&x) {
            return Err(Halt::Failed(Error::OutOfBounds(x.0)));
        }
        self.calls += 1;
        let e = self
            .objective
            .evaluate(&x)
            .map_err(|err| Halt::Failed(Error::Objective(format!("evaluation {} at {:?}: {err}", self.calls, x.0))))?;
        if e.value.is_nan() {
            return Err(Halt::Failed(Error::Objective(format!("evaluation {} at {:?} returned NaN", self.calls, x.0))));
        }
        if e.value < self.best_value() {
            self.best = Some((cell.clone(), e));
            self.history.push((self.calls, e.value));
        }
        self.cache.insert(cell.clone(), e);
        Ok(e)
    }
}

/// Outcome of one exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub cell: Cell,
    pub value: f64,
    /// The move lowers the objective relative to the base point.
    pub improving: bool,
}

/// Hooke-Jeeves exploration around `base` under tabu restrictions.
///
/// Coordinates are swept in order, negative direction first; the trial point
/// follows every admissible probe that improves on it. When the sweep leaves
/// the trial at `base` and `aggressive` is set, the best admissible neighbour
/// of `base` is returned even if it is worse. `None` means no admissible move.
#[allow(clippy::too_many_arguments)]
pub fn explore<O: Objective + ?Sized>(
    ev: &mut Evaluator<'_, O>,
    base: &Cell,
    base_value: f64,
    steps: &[i64],
    tabu: &TabuList,
    best_so_far: f64,
    use_tabu: bool,
    aggressive: bool,
) -> Result<Option<Move>, Halt> {
    let space = ev.space;
    let admissible = |c: &Cell, v: f64| !use_tabu || v < best_so_far || !tabu.contains(c);
    let mut trial = base.clone();
    let mut trial_value = base_value;
    // Neighbours of `base` that were probed before the trial point moved.
    let mut fallback: Option<(Cell, f64)> = None;
    let mut moved = false;

    for (i, &step) in steps.iter().enumerate() {
        let mut pick: Option<(Cell, f64)> = None;
        for dir in [-1, 1] {
            let mut raw = trial.0.clone();
            raw[i] += dir * step;
            let cand = space.clamp(raw);
            if cand == trial {
                continue;
            }
            let v = ev.evaluate(&cand)?.value;
            if !admissible(&cand, v) {
                continue;
            }
            if !moved && fallback.as_ref().is_none_or(|f| v < f.1) {
                fallback = Some((cand.clone(), v));
            }
            if v < trial_value && pick.as_ref().is_none_or(|p| v < p.1) {
                pick = Some((cand, v));
            }
        }
        if let Some((c, v)) = pick {
            trial = c;
            trial_value = v;
            moved = true;
        }
    }

    if moved {
        return Ok(Some(Move { cell: trial, value: trial_value, improving: true }));
    }
    if !aggressive {
        return Ok(None);
    }
    Ok(fallback.map(|(cell, value)| Move { improving: value < base_value, cell, value }))
}

/// `exploration + k * (exploration - base)`, rounded to the grid and clamped.
pub fn pattern_cell(space: &SearchSpace, base: &Cell, exploration: &Cell, k: f64) -> Cell {
    let raw = base.0.iter().zip(&exploration.0).map(|(&b, &e)| e + (k * (e - b) as f64).round() as i64).collect();
    space.clamp(raw)
}

/// Real-valued form of [`pattern_cell`].
pub fn pattern_move(space: &SearchSpace, base: &[f64], exploration: &[f64], k: f64) -> Result<DesignVector> {
    let b = space.cell_of(base)?;
    let e = space.cell_of(exploration)?;
    Ok(space.point(&pattern_cell(space, &b, &e, k)))
}

/// Shrinks each step by `r` minimum steps, never below one. The flag is set
/// when every step was already at the minimum.
pub fn reduce_step_cells(steps: &[i64], r: u32) -> (Vec<i64>, bool) {
    let at_floor = steps.iter().all(|&s| s <= 1);
    (steps.iter().map(|&s| (s - r as i64).max(1)).collect(), at_floor)
}

/// Real-valued form of [`reduce_step_cells`].
pub fn reduce_steps(steps: &[f64], space: &SearchSpace, r: u32) -> Result<(Vec<f64>, bool)> {
    space.check_dim(steps.len())?;
    let cells: Vec<i64> = steps.iter().zip(space.min_step()).map(|(s, m)| (s / m).round() as i64).collect();
    let (next, floor) = reduce_step_cells(&cells, r);
    Ok((next.iter().zip(space.min_step()).map(|(&k, m)| k as f64 * m).collect(), floor))
}

/// True when `v` falls in a cell held by `tabu`.
pub fn is_tabu(space: &SearchSpace, tabu: &TabuList, v: &[f64]) -> Result<bool> {
    Ok(tabu.contains(&space.snap(v)?))
}

/// Uniform random grid point.
pub fn diversify<R: rand::Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> DesignVector {
    space.point(&space.random_cell(rng))
}

struct Run<'a, O: ?Sized> {
    ev: Evaluator<'a, O>,
    tabu: TabuList,
    best_list: BestList,
    visits: Vec<Visit>,
    base: Cell,
    base_value: f64,
}

impl<O: Objective + ?Sized> Run<'_, O> {
    fn accept(&mut self, cell: Cell, value: f64, kind: MoveKind, best_before: f64) {
        self.tabu.record(cell.clone());
        self.best_list.offer(&cell, value);
        self.visits.push(Visit { cell: cell.clone(), value, kind, best_before });
        self.base = cell;
        self.base_value = value;
    }

    fn restart(&mut self, cell: Cell, kind: MoveKind) -> Result<(), Halt> {
        let best_before = self.ev.best_value();
        let v = self.ev.evaluate(&cell)?.value;
        self.accept(cell, v, kind, best_before);
        Ok(())
    }
}

/// Runs one seeded search over `space`.
pub fn search<O: Objective + ?Sized>(f: &O, space: &SearchSpace, cfg: &SearchConfig) -> Result<SearchResult> {
    let mut steps = cfg.resolve_steps(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = match &cfg.start {
        Some(x) => space.cell_of(x)?,
        None => space.random_cell(&mut rng),
    };

    let mut run = Run {
        ev: Evaluator::new(f, space, cfg.budget),
        tabu: TabuList::new(cfg.tenure),
        best_list: BestList::new(cfg.best_size),
        visits: Vec::new(),
        base: start.clone(),
        base_value: f64::INFINITY,
    };

    let outcome = iterate(&mut run, space, cfg, &mut steps, &mut rng, start);
    let termination = match outcome {
        Ok(t) => t,
        Err(Halt::Budget) => Termination::Budget,
        Err(Halt::Failed(e)) => return Err(e),
    };

    let (best_cell, best_eval) =
        run.ev.best.clone().ok_or_else(|| Error::Objective("no evaluation completed".into()))?;
    Ok(SearchResult {
        best: space.point(&best_cell),
        best_cell,
        best_value: best_eval.value,
        feasible: best_eval.feasible,
        evaluations: run.ev.calls,
        history: run.ev.history,
        termination,
        visits: run.visits,
    })
}

fn iterate<O: Objective + ?Sized>(
    run: &mut Run<'_, O>,
    space: &SearchSpace,
    cfg: &SearchConfig,
    steps: &mut Vec<i64>,
    rng: &mut ChaCha8Rng,
    start: Cell,
) -> Result<Termination, Halt> {
    run.restart(start, MoveKind::Start)?;
    let mem = cfg.use_memory;
    let mut stalled = 0u32;

    loop {
        let best_before = run.ev.best_value();
        let base = run.base.clone();
        let mv = explore(&mut run.ev, &base, run.base_value, steps, &run.tabu, best_before, mem, mem)?;

        match mv {
            None if !mem => {
                let (next, at_floor) = reduce_step_cells(steps, cfg.reduction_multiple);
                if at_floor {
                    return Ok(Termination::Converged);
                }
                *steps = next;
                continue;
            }
            None => {
                // Boxed in by the tabu list.
                run.restart(space.random_cell(rng), MoveKind::Diversify)?;
            }
            Some(m) => {
                run.accept(m.cell.clone(), m.value, MoveKind::Explore, best_before);
                if m.improving {
                    let pat = pattern_cell(space, &base, &m.cell, cfg.pattern_factor);
                    if pat != m.cell {
                        let pv = run.ev.evaluate(&pat)?.value;
                        let allowed = !mem || pv < best_before || !run.tabu.contains(&pat);
                        if pv < m.value && allowed {
                            run.accept(pat, pv, MoveKind::Pattern, best_before);
                        }
                    }
                }
            }
        }

        if !mem {
            continue;
        }
        if run.ev.best_value() < best_before {
            stalled = 0;
            continue;
        }
        stalled += 1;
        if stalled == cfg.intensify_after {
            let cell = run.best_list.intensify()?;
            run.restart(cell, MoveKind::Intensify)?;
        } else if stalled == cfg.diversify_after {
            run.restart(space.random_cell(rng), MoveKind::Diversify)?;
        } else if stalled >= cfg.reduce_after {
            let (next, at_floor) = reduce_step_cells(steps, cfg.reduction_multiple);
            if at_floor {
                return Ok(Termination::Converged);
            }
            *steps = next;
            stalled = 0;
        }
    }
}

/// Runs `trials` searches with seeds `base_seed + i`, in parallel when the
/// `parallel` feature is enabled.
pub fn run_trials<O: Objective + ?Sized>(
    f: &O,
    space: &SearchSpace,
    cfg: &SearchConfig,
    base_seed: u64,
    trials: usize,
) -> Vec<Result<SearchResult>> {
    crate::parallel::map((0..trials as u64).collect(), |i| {
        let cfg = SearchConfig { seed: base_seed.wrapping_add(i), ..cfg.clone() };
        search(f, space, &cfg)
    })
}
