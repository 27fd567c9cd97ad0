use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exhaustive::improves;
use super::{decode, Discretization, QuboModel, SolveResult, SolveStatus};
use crate::{seed, Error, Result};

/// Geometric inverse-temperature schedule for single-flip Metropolis sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Independent restarts.
    pub reads: usize,
    pub rng_seed: u64,
}

impl AnnealSchedule {
    /// Picks the β range from the model's coefficients: at `beta_start` the
    /// costliest single flip is accepted with probability 1/2, at `beta_end`
    /// the cheapest one with probability 1/100.
    pub fn for_model(model: &QuboModel, sweeps: usize, reads: usize, rng_seed: u64) -> Self {
        let adj = model.adjacency();
        let mut max_delta: f64 = 0.0;
        let mut min_delta = f64::INFINITY;
        for (i, neighbours) in adj.iter().enumerate() {
            let a = model.linear[i].abs();
            let span = a + neighbours.iter().map(|(_, b)| b.abs()).sum::<f64>();
            max_delta = max_delta.max(span);
            for c in std::iter::once(a).chain(neighbours.iter().map(|(_, b)| b.abs())) {
                if c > 0.0 {
                    min_delta = min_delta.min(c);
                }
            }
        }
        if max_delta == 0.0 {
            max_delta = 1.0;
            min_delta = 1.0;
        }
        let beta_start = std::f64::consts::LN_2 / max_delta;
        let beta_end = (100f64.ln() / min_delta).max(beta_start * 10.0);
        Self {
            sweeps,
            beta_start,
            beta_end,
            reads,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.reads == 0 {
            return Err(Error::Config("annealing needs at least one sweep and one read".into()));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start) {
            return Err(Error::Config(format!(
                "inverse temperatures must satisfy 0 < beta_start < beta_end (got {} and {})",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    fn beta(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_end;
        }
        let t = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(t)
    }
}

fn anneal_once(
    model: &QuboModel,
    adj: &[Vec<(usize, f64)>],
    schedule: &AnnealSchedule,
    read: usize,
) -> (Vec<bool>, f64) {
    let mut rng = seed::rng(seed::derive(schedule.rng_seed, read as u64));
    let n = model.n_vars();
    let groups = &model.groups;
    let n_grouped = groups.n_vars().min(model.n_original());
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    // field[i] = a_i + Σ_j b_ij x_j
    let mut field: Vec<f64> = (0..n)
        .map(|i| model.linear[i] + adj[i].iter().filter(|(j, _)| x[*j]).map(|(_, b)| b).sum::<f64>())
        .collect();
    let mut hot: Vec<usize> = (0..groups.groups)
        .map(|g| (0..groups.levels).filter(|&v| x[groups.var(g, v)]).count())
        .collect();
    let mut off_count = hot.iter().filter(|&&h| h != 1).count();
    let mut energy = model.energy(&x);
    let mut best: Option<(Vec<bool>, f64)> = None;
    for sweep in 0..schedule.sweeps {
        let beta = schedule.beta(sweep);
        for i in 0..n {
            let delta = if x[i] { -field[i] } else { field[i] };
            let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
            if !accept {
                continue;
            }
            x[i] = !x[i];
            energy += delta;
            let sign = if x[i] { 1.0 } else { -1.0 };
            for &(j, b) in &adj[i] {
                field[j] += sign * b;
            }
            if i < n_grouped {
                let g = i / groups.levels;
                let was_ok = hot[g] == 1;
                if x[i] {
                    hot[g] += 1
                } else {
                    hot[g] -= 1
                }
                match (was_ok, hot[g] == 1) {
                    (true, false) => off_count += 1,
                    (false, true) => off_count -= 1,
                    _ => {}
                }
            }
            if off_count == 0 && best.as_ref().is_none_or(|(_, e)| energy < *e - 1e-12) {
                best = Some((x.clone(), energy));
            }
        }
    }
    let pick = match best {
        Some((bx, e)) if off_count != 0 || e < energy => bx,
        _ => x,
    };
    tighten_auxiliaries(model, pick)
}

/// Sets every auxiliary to its defining product when that does not raise
/// the energy, so the reported energy is the polynomial value.
fn tighten_auxiliaries(model: &QuboModel, x: Vec<bool>) -> (Vec<bool>, f64) {
    let e = model.energy(&x);
    let completed = model.complete_assignment(&x);
    let ce = model.energy(&completed);
    if ce <= e {
        (completed, ce)
    } else {
        (x, e)
    }
}

/// Runs `reads` independent Metropolis anneals and returns the lowest-energy
/// feasible final sample (ties: lowest read index).
pub fn solve_anneal(model: &QuboModel, schedule: &AnnealSchedule, disc: &Discretization) -> Result<SolveResult> {
    schedule.validate()?;
    let start = Instant::now();
    let adj = model.adjacency();
    let samples: Vec<(Vec<bool>, f64)> = (0..schedule.reads)
        .into_par_iter()
        .map(|read| anneal_once(model, &adj, schedule, read))
        .collect();

    let groups = &model.groups;
    let mut feasible_count = 0;
    let mut best_feasible: Option<usize> = None;
    let mut best_any = 0;
    for (r, (x, e)) in samples.iter().enumerate() {
        if improves(*e, samples[best_any].1) {
            best_any = r;
        }
        if groups.is_feasible(x) {
            feasible_count += 1;
            if best_feasible.is_none_or(|b| improves(*e, samples[b].1)) {
                best_feasible = Some(r);
            }
        }
    }
    let (status, pick) = match best_feasible {
        Some(r) => (SolveStatus::Feasible, r),
        None => (SolveStatus::NoFeasibleSample, best_any),
    };
    let (assignment, energy) = samples[pick].clone();
    let decoded_theta = match status {
        SolveStatus::Feasible => Some(decode(&assignment, disc, groups)?),
        SolveStatus::NoFeasibleSample => None,
    };
    Ok(SolveResult {
        status,
        best_assignment: assignment,
        best_energy: energy,
        explored_count: schedule.reads as u64,
        feasible_count,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        decoded_theta,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::adiabatic::{discretize, OneHotLayout};

    #[test]
    fn single_variable_positive_field() {
        let model = QuboModel {
            linear: vec![1.0],
            quadratic: BTreeMap::new(),
            offset: 0.0,
            penalty_lambda: 1.0,
            groups: OneHotLayout::new(0, 1),
            auxiliaries: Vec::new(),
        };
        let schedule = AnnealSchedule::for_model(&model, 100, 4, 1);
        let d = crate::adiabatic::Discretization::from_values(vec![0.5], 1.0).unwrap();
        let r = solve_anneal(&model, &schedule, &d).unwrap();
        assert_eq!(r.best_assignment, vec![false]);
        assert_eq!(r.best_energy, 0.0);
    }

    #[test]
    fn reports_missing_feasible_sample() {
        // Double-hot is the ground state and a cold schedule never climbs
        // into a one-hot state.
        let g = OneHotLayout::new(1, 2);
        let model = QuboModel {
            linear: vec![5.0, 5.0],
            quadratic: BTreeMap::from([((0, 1), -20.0)]),
            offset: 0.0,
            penalty_lambda: 1.0,
            groups: g,
            auxiliaries: Vec::new(),
        };
        let schedule = AnnealSchedule {
            sweeps: 50,
            beta_start: 50.0,
            beta_end: 100.0,
            reads: 4,
            rng_seed: 0,
        };
        let r = solve_anneal(&model, &schedule, &discretize(2, 1.0).unwrap()).unwrap();
        assert_eq!(r.status, SolveStatus::NoFeasibleSample);
        assert!(r.decoded_theta.is_none());
        assert_eq!(r.feasible_count, 0);
    }

    #[test]
    fn schedule_validation() {
        let bad = AnnealSchedule {
            sweeps: 10,
            beta_start: 2.0,
            beta_end: 1.0,
            reads: 1,
            rng_seed: 0,
        };
        assert!(bad.validate().is_err());
        assert!(AnnealSchedule {
            sweeps: 0,
            beta_end: 3.0,
            ..bad
        }
        .validate()
        .is_err());
    }
}
