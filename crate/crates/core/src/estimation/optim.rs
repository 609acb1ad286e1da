//! Box-constrained global and local minimisers used by the profile search.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeSettings {
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    pub weight: f64,
    /// Stop once `max f - min f <= tolerance * (1 + |min f|)` over the population.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub population: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub generations: usize,
    pub evaluations: usize,
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Where the initial population is drawn. Defaults to the whole box.
#[derive(Debug, Clone, Default)]
pub struct DeStart {
    /// Sub-box for the random members; clipped to the search box.
    pub init: Option<(Vec<f64>, Vec<f64>)>,
    /// Members placed verbatim (after clamping) at the front of the population.
    pub seeds: Vec<Vec<f64>>,
    /// Half-widths of uniform perturbations around the seeds; when set, half
    /// of the population is drawn this way.
    pub jitter: Option<Vec<f64>>,
}

/// Differential evolution, `rand/1/bin`, with synchronous generations.
///
/// A mutant coordinate that leaves the box is moved halfway from its target
/// towards the violated bound, and a trial replaces its target when it is no
/// worse.
pub fn differential_evolution<F, R>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    start: &DeStart,
    settings: &DeSettings,
    rng: &mut R,
) -> DeOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng,
{
    let dim = lower.len();
    assert!(dim > 0 && upper.len() == dim, "bounds must be non-empty and matching");
    let np = settings.population.max(4);
    let evaluate = |pop: &[Vec<f64>]| -> Vec<f64> { pop.par_iter().with_min_len(8).map(|x| f(x)).collect() };

    let (init_lo, init_hi) = match &start.init {
        Some((lo, hi)) => (
            (0..dim).map(|d| lo[d].clamp(lower[d], upper[d])).collect::<Vec<_>>(),
            (0..dim).map(|d| hi[d].clamp(lower[d], upper[d])).collect::<Vec<_>>(),
        ),
        None => (lower.to_vec(), upper.to_vec()),
    };
    let mut pop: Vec<Vec<f64>> = start
        .seeds
        .iter()
        .take(np)
        .map(|s| {
            let mut s = s.clone();
            clamp_into(&mut s, lower, upper);
            s
        })
        .collect();
    let seeded = pop.len();
    if let (Some(jitter), true) = (&start.jitter, seeded > 0) {
        while pop.len() < np / 2 {
            let centre = pop[pop.len() % seeded].clone();
            let mut x: Vec<f64> = (0..dim)
                .map(|d| if jitter[d] > 0.0 { centre[d] + rng.random_range(-jitter[d]..=jitter[d]) } else { centre[d] })
                .collect();
            clamp_into(&mut x, lower, upper);
            pop.push(x);
        }
    }
    while pop.len() < np {
        pop.push(
            (0..dim)
                .map(|d| {
                    let (a, b) = (init_lo[d].min(init_hi[d]), init_lo[d].max(init_hi[d]));
                    if a < b {
                        rng.random_range(a..=b)
                    } else {
                        a
                    }
                })
                .collect(),
        );
    }
    let mut values = evaluate(&pop);
    let mut evaluations = np;
    let mut generations = 0;

    while generations < settings.generations {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= settings.tolerance * (1.0 + lo.abs()) {
            break;
        }
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let r = rng.random_range(0..np);
                    if r != i {
                        break r;
                    }
                };
                let r1 = pick();
                let r2 = loop {
                    let r = pick();
                    if r != r1 {
                        break r;
                    }
                };
                let r3 = loop {
                    let r = pick();
                    if r != r1 && r != r2 {
                        break r;
                    }
                };
                let jrand = rng.random_range(0..dim);
                (0..dim)
                    .map(|d| {
                        if d == jrand || rng.random::<f64>() < settings.crossover {
                            let v = pop[r1][d] + settings.weight * (pop[r2][d] - pop[r3][d]);
                            if v < lower[d] {
                                0.5 * (pop[i][d] + lower[d])
                            } else if v > upper[d] {
                                0.5 * (pop[i][d] + upper[d])
                            } else {
                                v
                            }
                        } else {
                            pop[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_values = evaluate(&trials);
        evaluations += np;
        for (i, (x, v)) in trials.into_iter().zip(trial_values).enumerate() {
            if v <= values[i] {
                pop[i] = x;
                values[i] = v;
            }
        }
        generations += 1;
    }

    let b = argmin(&values);
    DeOutcome {
        best: pop[b].clone(),
        best_value: values[b],
        population: pop,
        values,
        generations,
        evaluations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmSettings {
    pub max_iterations: usize,
    /// Stop once `max f - min f <= tolerance * (|min f| + tolerance)` over the simplex.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Nelder-Mead simplex search with every vertex clamped to the box.
pub fn nelder_mead<F>(f: F, x0: &[f64], lower: &[f64], upper: &[f64], settings: &NmSettings) -> NmOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut start = x0.to_vec();
    clamp_into(&mut start, lower, upper);
    let mut simplex = vec![start.clone()];
    for d in 0..dim {
        let mut v = start.clone();
        let step = 0.05 * (upper[d] - lower[d]);
        v[d] = if v[d] + step <= upper[d] { v[d] + step } else { v[d] - step };
        simplex.push(v);
    }
    let mut fs: Vec<f64> = simplex.iter().map(|x| f(x)).collect();

    let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
        clamp_into(&mut p, lower, upper);
        p
    };

    let mut iterations = 0;
    while iterations < settings.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        fs = order.iter().map(|&i| fs[i]).collect();
        if (fs[dim] - fs[0]).abs() <= settings.tolerance * (fs[0].abs() + settings.tolerance) {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|v| v[d]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let reflected = blend(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < fs[0] {
            let expanded = blend(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                fs[dim] = fe;
            } else {
                simplex[dim] = reflected;
                fs[dim] = fr;
            }
            continue;
        }
        if fr < fs[dim - 1] {
            simplex[dim] = reflected;
            fs[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < fs[dim] {
            let c = blend(&centroid, &reflected, 0.5);
            let fc = f(&c);
            (c, fc)
        } else {
            let c = blend(&centroid, &worst, 0.5);
            let fc = f(&c);
            (c, fc)
        };
        if fc < fs[dim].min(fr) {
            simplex[dim] = contracted;
            fs[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            simplex[i] = blend(&simplex[0], &simplex[i], 0.5);
            fs[i] = f(&simplex[i]);
        }
    }

    let b = argmin(&fs);
    NmOutcome {
        x: simplex[b].clone(),
        value: fs[b],
        iterations,
    }
}
