//! Downhill-simplex (Nelder–Mead) minimization.
//!
//! Every coordinate calibration in the embedding pipeline runs through this
//! derivative-free minimizer: landmark placement, expander placement and the
//! per-node fits. The implementation is the textbook method with the
//! canonical coefficients and an axis-aligned initial simplex.

use crate::error::{Error, Result};

/// Simplex search parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Iteration budget; `None` means `500 * n` for an `n`-dimensional
    /// problem.
    pub max_iterations: Option<usize>,
    /// Stop once the simplex diameter falls below this.
    pub tolerance: f64,
    /// Axis offset used to build the initial simplex around the start point.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: None,
            tolerance: 1e-6,
            initial_step: 1.0,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == Some(0) {
            return Err(Error::Argument("max_iterations must be at least 1".into()));
        }
        // NaN fails every range check below.
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::Argument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !self.initial_step.is_finite() || self.initial_step <= 0.0 {
            return Err(Error::Argument("initial_step must be positive".into()));
        }
        if !self.reflection.is_finite() || self.reflection <= 0.0 {
            return Err(Error::Argument("reflection coefficient must be > 0".into()));
        }
        if !self.expansion.is_finite() || self.expansion <= 1.0 {
            return Err(Error::Argument("expansion coefficient must be > 1".into()));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(Error::Argument(
                "contraction coefficient must be in (0, 1)".into(),
            ));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Argument(
                "shrink coefficient must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn budget(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(500 * n.max(1))
    }
}

/// Outcome of a [`minimize`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `objective` starting from `start`.
///
/// Stops when the simplex diameter drops below `tolerance`, when the value
/// spread drops below `tolerance^2`, or when the budget runs out. If the
/// first run exhausts its budget, one restart is attempted from the best
/// point found with the initial step halved. The reported value never
/// exceeds `objective(start)`.
pub fn minimize<F>(objective: F, start: &[f64], config: &OptimizerConfig) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    if start.is_empty() {
        return Err(Error::Argument("start point must be non-empty".into()));
    }
    if start.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("start point must be finite".into()));
    }

    let mut result = run(&objective, start, config.initial_step, config)?;
    if !result.converged {
        let restarted = run(
            &objective,
            &result.argmin,
            config.initial_step * 0.5,
            config,
        )?;
        let iterations = result.iterations + restarted.iterations;
        result = if restarted.value <= result.value {
            restarted
        } else {
            result
        };
        result.iterations = iterations;
    }
    Ok(result)
}

fn eval<F: Fn(&[f64]) -> f64>(objective: &F, point: &[f64]) -> Result<f64> {
    let v = objective(point);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            point: point.to_vec(),
        })
    }
}

fn run<F>(
    objective: &F,
    start: &[f64],
    step: f64,
    config: &OptimizerConfig,
) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let max_iterations = config.budget(n);

    // Start point plus one vertex offset along each axis.
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(n + 1);
    for v in &simplex {
        values.push(eval(objective, v)?);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if converged_now(&simplex, best, config.tolerance)
            || values[worst] - values[best] < config.tolerance * config.tolerance
        {
            converged = true;
            break;
        }
        iterations += 1;

        // Centroid of all vertices except the worst.
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in order.iter().take(n) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        blend_into(
            &mut candidate,
            &centroid,
            &simplex[worst],
            -config.reflection,
        );
        let f_reflected = eval(objective, &candidate)?;

        if f_reflected < values[best] {
            blend_into(&mut second, &centroid, &simplex[worst], -config.expansion);
            let f_expanded = eval(objective, &second)?;
            if f_expanded < f_reflected {
                simplex[worst].copy_from_slice(&second);
                values[worst] = f_expanded;
            } else {
                simplex[worst].copy_from_slice(&candidate);
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst].copy_from_slice(&candidate);
            values[worst] = f_reflected;
        } else {
            // Contract toward the better of the worst vertex and its
            // reflection; shrink the whole simplex when that fails too.
            let (toward, f_toward): (&[f64], f64) = if f_reflected < values[worst] {
                (&candidate, f_reflected)
            } else {
                (&simplex[worst], values[worst])
            };
            blend_into(&mut second, &centroid, toward, config.contraction);
            let f_contracted = eval(objective, &second)?;
            if f_contracted <= f_toward {
                simplex[worst].copy_from_slice(&second);
                values[worst] = f_contracted;
            } else {
                candidate.copy_from_slice(&simplex[best]);
                for i in 0..=n {
                    if i == best {
                        continue;
                    }
                    for (x, b) in simplex[i].iter_mut().zip(&candidate) {
                        *x = b + config.shrink * (*x - b);
                    }
                    values[i] = eval(objective, &simplex[i])?;
                }
            }
        }
    }

    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let best = order[0];
    Ok(OptimizeResult {
        argmin: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    })
}

/// `out = centroid + coeff * (point - centroid)`; negative coefficients
/// reflect through the centroid.
fn blend_into(out: &mut [f64], centroid: &[f64], point: &[f64], coeff: f64) {
    for i in 0..out.len() {
        out[i] = centroid[i] + coeff * (point[i] - centroid[i]);
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Simplex-diameter stopping test. The distances from the best vertex
/// bound the diameter within a factor of two, so the full pairwise scan
/// only runs when the cheap bound is inconclusive.
fn converged_now(simplex: &[Vec<f64>], best: usize, tolerance: f64) -> bool {
    let mut from_best = 0.0f64;
    for (i, v) in simplex.iter().enumerate() {
        if i != best {
            from_best = from_best.max(dist(v, &simplex[best]));
        }
    }
    if 2.0 * from_best < tolerance {
        return true;
    }
    if from_best >= tolerance {
        return false;
    }
    let mut max = 0.0f64;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            max = max.max(dist(&simplex[i], &simplex[j]));
        }
    }
    max < tolerance
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_minimum_of_shifted_parabola() {
        let r = minimize(
            |x| (x[0] - 3.0) * (x[0] - 3.0),
            &[0.0],
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!((r.argmin[0] - 3.0).abs() < 1e-4, "argmin {:?}", r.argmin);
        assert!(r.value < 1e-4);
        assert!(r.converged);
    }

    #[test]
    fn solves_rosenbrock() {
        let rosenbrock = |x: &[f64]| {
            let a = 1.0 - x[0];
            let b = x[1] - x[0] * x[0];
            a * a + 100.0 * b * b
        };
        let cfg = OptimizerConfig {
            tolerance: 1e-9,
            ..OptimizerConfig::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!((r.argmin[0] - 1.0).abs() < 1e-3, "argmin {:?}", r.argmin);
        assert!((r.argmin[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exhausted_budget_reports_not_converged() {
        let cfg = OptimizerConfig {
            max_iterations: Some(1),
            ..OptimizerConfig::default()
        };
        let r = minimize(|x| x[0] * x[0], &[10.0], &cfg).unwrap();
        assert!(!r.converged);
        // Best-so-far never exceeds the starting value.
        assert!(r.value <= 100.0);
    }

    #[test]
    fn convex_quadratics_reach_the_analytic_minimum() {
        for n in [2usize, 5, 10] {
            let target: Vec<f64> = (0..n).map(|i| (i as f64) * 0.7 - 1.3).collect();
            let t = target.clone();
            let f = move |x: &[f64]| -> f64 {
                x.iter()
                    .zip(&t)
                    .enumerate()
                    .map(|(i, (xi, ti))| (1.0 + i as f64) * (xi - ti) * (xi - ti))
                    .sum()
            };
            let r = minimize(&f, &vec![0.0; n], &OptimizerConfig::default()).unwrap();
            for (a, b) in r.argmin.iter().zip(&target) {
                assert!(
                    (a - b).abs() < 1e-3,
                    "n={n}: {:?} vs {:?}",
                    r.argmin,
                    target
                );
            }
        }
    }

    #[test]
    fn deterministic_for_identical_inputs() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>() + (x[0] * 3.0).sin();
        let a = minimize(f, &[2.0, -1.0, 0.3], &OptimizerConfig::default()).unwrap();
        let b = minimize(f, &[2.0, -1.0, 0.3], &OptimizerConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_objective_is_an_evaluation_error() {
        let r = minimize(|x| (1.0 / x[0]).ln(), &[-1.0], &OptimizerConfig::default());
        assert!(matches!(r, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = |cfg: OptimizerConfig| minimize(|x| x[0], &[0.0], &cfg).is_err();
        assert!(bad(OptimizerConfig {
            max_iterations: Some(0),
            ..OptimizerConfig::default()
        }));
        assert!(bad(OptimizerConfig {
            tolerance: 0.0,
            ..OptimizerConfig::default()
        }));
        assert!(bad(OptimizerConfig {
            expansion: 1.0,
            ..OptimizerConfig::default()
        }));
        assert!(bad(OptimizerConfig {
            contraction: 1.5,
            ..OptimizerConfig::default()
        }));
        assert!(bad(OptimizerConfig {
            shrink: 0.0,
            ..OptimizerConfig::default()
        }));
        assert!(minimize(|x| x[0], &[f64::NAN], &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn reported_value_is_monotone_versus_start() {
        // A bumpy but finite objective; whatever happens, the result must
        // not be worse than where we started.
        let f = |x: &[f64]| x[0].sin() * 5.0 + x[0].abs();
        for start in [-7.3, -0.2, 4.4, 19.0] {
            let r = minimize(f, &[start], &OptimizerConfig::default()).unwrap();
            assert!(r.value <= f(&[start]) + 1e-12);
        }
    }
}
