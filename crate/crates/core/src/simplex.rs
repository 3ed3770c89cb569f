//! Derivative-free Nelder-Mead simplex minimizer.

/// Outcome of a simplex search.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the simplex shrank
    /// below tolerance; `x` is still the best point seen.
    pub converged: bool,
}

/// Minimize `f` starting from `x0`, with an initial simplex displaced by
/// `steps` along each coordinate. Convergence: simplex diameter below `tol`
/// in units of `scales`, or `max_evals` evaluations.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    scales: &[f64],
    tol: f64,
    max_evals: usize,
) -> SimplexResult {
    let n = x0.len();
    assert!(n > 0 && steps.len() == n && scales.len() == n);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(simplex[0].0.iter())
                    .zip(scales.iter())
                    .map(|((a, b), s)| ((a - b) / s).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        if evals >= max_evals {
            break;
        }

        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let shift = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst.0.iter())
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = shift(alpha);
        let vr = eval(&reflected, &mut evals);
        if vr < simplex[0].1 {
            let expanded = shift(gamma);
            let ve = eval(&expanded, &mut evals);
            simplex[n] = if ve < vr {
                (expanded, ve)
            } else {
                (reflected, vr)
            };
        } else if vr < simplex[n - 1].1 {
            simplex[n] = (reflected, vr);
        } else {
            let contracted = if vr < worst.1 {
                shift(rho)
            } else {
                shift(-rho)
            };
            let vc = eval(&contracted, &mut evals);
            if vc < vr.min(worst.1) {
                simplex[n] = (contracted, vc);
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(best.iter())
                        .map(|(xi, bi)| bi + sigma * (xi - bi))
                        .collect();
                    let v = eval(&x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    SimplexResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        evaluations: evals,
        converged,
    }
}

/// Nelder-Mead with restarts: after each convergence the simplex is
/// rebuilt around the best point with shrunken steps, which walks out of
/// the collapsed shapes the plain method leaves behind in curved valleys.
/// The evaluation budget is shared across rounds.
pub fn minimize_with_restarts<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    scales: &[f64],
    tol: f64,
    max_evals: usize,
    rounds: usize,
) -> SimplexResult {
    let mut best = minimize(&mut f, x0, steps, scales, tol, max_evals);
    let mut steps: Vec<f64> = steps.to_vec();
    for _ in 1..rounds {
        if best.evaluations >= max_evals {
            break;
        }
        for s in steps.iter_mut() {
            *s *= 0.25;
        }
        let next = minimize(
            &mut f,
            &best.x,
            &steps,
            scales,
            tol,
            max_evals - best.evaluations,
        );
        let evaluations = best.evaluations + next.evaluations;
        let improved = next.value < best.value;
        best = SimplexResult {
            x: if improved { next.x } else { best.x },
            value: if improved { next.value } else { best.value },
            evaluations,
            converged: next.converged,
        };
        if !improved {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 3.0).powi(2) + 4.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            &[1.0, 1.0],
            1e-8,
            10_000,
        );
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.x[1], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.2, 0.2],
            &[1.0, 1.0],
            1e-9,
            10_000,
        );
        assert!(r.converged);
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(r.x[1], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn infinity_penalties_are_avoided() {
        let r = minimize(
            |x| {
                if x[0] <= 0.0 {
                    f64::INFINITY
                } else {
                    (x[0].ln()).powi(2)
                }
            },
            &[0.5, 0.0],
            &[0.3, 0.1],
            &[1.0, 1.0],
            1e-8,
            10_000,
        );
        assert_abs_diff_eq!(r.x[0], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn budget_exhaustion_reports_not_converged() {
        let r = minimize(
            |x| (x[0] - 3.0).powi(2),
            &[1000.0],
            &[0.01],
            &[1.0],
            1e-12,
            10,
        );
        assert!(!r.converged);
        assert_eq!(r.evaluations, 10);
    }
}
