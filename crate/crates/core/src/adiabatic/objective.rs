//! Least-squares objective over the phase-dropped ansatz operator.
//!
//! For a record with latest value `x` and label `y`, a single block maps the
//! encoded state `ψ_x` through the real diagonal `exp(s_{j,k}·θ_k/2)`. Only
//! the two components that the measured qubit distinguishes are compared
//! with the target vector: index 0 (`|0…0⟩`) and the measured index (`|10…0⟩`).

use rand::Rng;

use super::{BinaryPolynomial, Discretization, OneHotLayout, SameGroupProducts};
use crate::data::TrendRow;
use crate::qsim::{ansatz_diagonal, encode_input, ring_signs, AnsatzParams, OperatorMode, RegisterLayout};
use crate::{seed, Error, Result};

/// Target amplitudes at index 0 and at the measured index.
pub fn record_targets(label: u8) -> (f64, f64) {
    if label == 1 {
        (0.0, 1.0)
    } else {
        (1.0, 0.0)
    }
}

fn compared_indices(layout: &RegisterLayout) -> [usize; 2] {
    [0, layout.measured_index()]
}

/// Direct evaluation of the objective at real angles.
pub fn least_squares_loss(rows: &[TrendRow], theta: &AnsatzParams, layout: &RegisterLayout) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Domain("objective of an empty training set".into()));
    }
    let op = ansatz_diagonal(theta, layout, OperatorMode::PhaseDropped)?;
    let mut total = 0.0;
    for row in rows {
        let psi = encode_input(row.latest(), layout)?;
        let amps = psi.amplitudes().expect("encoding is pure");
        let (t0, t1) = record_targets(row.label);
        for (j, target) in compared_indices(layout).into_iter().zip([t0, t1]) {
            let predicted = op.entry(j).re * amps[j].re;
            total += (predicted - target).powi(2);
        }
    }
    Ok(total / rows.len() as f64)
}

/// Expands the objective into a polynomial over one-hot level variables,
/// dropping same-group level products.
pub fn build_objective(rows: &[TrendRow], disc: &Discretization, layout: &RegisterLayout) -> Result<BinaryPolynomial> {
    build_objective_with(rows, disc, layout, SameGroupProducts::Eliminate)
}

pub fn build_objective_with(
    rows: &[TrendRow],
    disc: &Discretization,
    layout: &RegisterLayout,
    same_group: SameGroupProducts,
) -> Result<BinaryPolynomial> {
    if rows.is_empty() {
        return Err(Error::Domain("objective of an empty training set".into()));
    }
    let groups = OneHotLayout::new(layout.ring_size(), disc.parts());
    let n = rows.len() as f64;
    let indices = compared_indices(layout);

    // The operator factor at component j is the same for every record, so
    // Σ_t (ψ_t·P − y_t)² = (Σψ²)·P² − 2(Σyψ)·P + Σy² with P = Π_k L_k.
    let mut psi_sq = [0.0; 2];
    let mut psi_target = [0.0; 2];
    let mut target_sq = 0.0;
    for row in rows {
        let psi = encode_input(row.latest(), layout)?;
        let amps = psi.amplitudes().expect("encoding is pure");
        let (t0, t1) = record_targets(row.label);
        for (slot, (&j, target)) in indices.iter().zip([t0, t1]).enumerate() {
            let a = amps[j].re;
            psi_sq[slot] += a * a;
            psi_target[slot] += a * target;
            target_sq += target * target;
        }
    }

    let mut poly = BinaryPolynomial::constant(groups.n_vars(), target_sq / n);
    for (slot, &j) in indices.iter().enumerate() {
        let signs = ring_signs(layout, j);
        let mut product = BinaryPolynomial::constant(groups.n_vars(), 1.0);
        for (k, s) in signs.iter().enumerate() {
            let vars: Vec<usize> = (0..disc.parts()).map(|v| groups.var(k, v)).collect();
            let coeffs: Vec<f64> = disc.values.iter().map(|d| (s * d / 2.0).exp()).collect();
            let factor = BinaryPolynomial::linear(groups.n_vars(), &vars, &coeffs);
            product = product.mul(&factor, &groups, same_group);
        }
        let squared = product.mul(&product, &groups, same_group);
        poly.add_assign(&squared.scaled(psi_sq[slot] / n));
        poly.add_assign(&product.scaled(-2.0 * psi_target[slot] / n));
    }
    Ok(poly)
}

/// Adds `λ·Σ_k (Σ_v x_{k,v} − 1)²`, expanded with `x² = x`.
pub fn add_one_hot_penalties(poly: &BinaryPolynomial, groups: &OneHotLayout, penalty_lambda: f64) -> BinaryPolynomial {
    let mut out = poly.clone();
    for g in 0..groups.groups {
        out.add_term(&[], penalty_lambda);
        for v in 0..groups.levels {
            out.add_term(&[groups.var(g, v)], -penalty_lambda);
            for w in v + 1..groups.levels {
                out.add_term(&[groups.var(g, v), groups.var(g, w)], 2.0 * penalty_lambda);
            }
        }
    }
    out
}

/// Number of random one-hot points used to estimate the objective's spread.
pub const PENALTY_SAMPLE: usize = 64;

/// `2·(max − min) + 1` of the objective over a seeded random sample of
/// feasible assignments.
pub fn sampled_penalty_lambda(poly: &BinaryPolynomial, groups: &OneHotLayout, rng_seed: u64) -> f64 {
    let mut rng = seed::rng(rng_seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..PENALTY_SAMPLE {
        let levels: Vec<usize> = (0..groups.groups).map(|_| rng.random_range(0..groups.levels)).collect();
        let value = poly.evaluate(&groups.encode(&levels));
        lo = lo.min(value);
        hi = hi.max(value);
    }
    2.0 * (hi - lo) + 1.0
}

/// Largest `(Π n_k − 1) / Σ (n_k − 1)²` over hot-counts `n_k ∈ 1..=levels`,
/// not all one. Multisets suffice because the ratio is symmetric.
pub fn multi_hot_ratio(groups: &OneHotLayout) -> f64 {
    fn walk(left: usize, min_n: usize, levels: usize, prod: f64, sq: f64, best: &mut f64) {
        if left == 0 {
            if sq > 0.0 {
                *best = best.max((prod - 1.0) / sq);
            }
            return;
        }
        for n in min_n..=levels {
            let d = (n - 1) as f64;
            walk(left - 1, n, levels, prod * n as f64, sq + d * d, best);
        }
    }
    let mut best = 0.0;
    walk(groups.groups, 1, groups.levels, 1.0, 0.0, &mut best);
    best
}

/// A penalty weight under which no infeasible assignment beats the best
/// feasible one.
///
/// With same-group products eliminated every monomial picks exactly one
/// variable per group, so an assignment with `n_k` hot variables in group k
/// evaluates to `C + Σ (f(c) − C)` over the `Π n_k` feasible combinations it
/// covers, where `C` is the constant term and `f ≥ 0`. That sum is at least
/// `C − (Π n_k − 1)·C` while its penalty is `λ·Σ (n_k − 1)²`, which gives the
/// ratio bound below. A group left empty zeroes every monomial and leaves `C`.
pub fn dominant_penalty_lambda(poly: &BinaryPolynomial, groups: &OneHotLayout) -> f64 {
    let c = poly.offset().max(0.0);
    (multi_hot_ratio(groups) * c * 1.01).max(f64::MIN_POSITIVE)
}

/// The default weight: the sampled estimate, raised to the dominance bound
/// when the estimate falls short of it.
pub fn default_penalty_lambda(poly: &BinaryPolynomial, groups: &OneHotLayout, rng_seed: u64) -> f64 {
    sampled_penalty_lambda(poly, groups, rng_seed).max(dominant_penalty_lambda(poly, groups))
}
