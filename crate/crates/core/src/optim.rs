//! Derivative-free Nelder-Mead simplex descent. The quadrature-based model
//! is too noisy to finite-difference, so the fit layer relies on this plus a
//! deterministic restart schedule.

/// Options for one simplex run.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Relative spread of function values across the simplex at convergence.
    pub f_tol: f64,
    /// Absolute simplex diameter (per coordinate) at convergence.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            f_tol: 1e-12,
            x_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with per-coordinate initial steps `step`.
/// Out-of-domain points may return infinity; the starting point must be finite.
pub fn nelder_mead<F>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1 && step.len() == n);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evaluations = 0;
    let mut eval = |x: &[f64], count: &mut usize| -> f64 {
        *count += 1;
        f(x)
    };

    // Initial simplex: x0 plus one vertex per coordinate step.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        let fv = eval(&v, &mut evaluations);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

        let best = simplex[0].1;
        let worst = simplex[n].1;
        let f_spread = (worst - best).abs();
        let x_spread = (0..n)
            .map(|i| {
                simplex[1..]
                    .iter()
                    .map(|(v, _)| (v[i] - simplex[0].0[i]).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        // Converged once the simplex has collapsed spatially, or the values
        // have flattened relative to the incumbent minimum.
        let f_ok = f_spread <= opts.f_tol * (best.abs() + opts.f_tol);
        if best.is_finite() && (x_spread <= opts.x_tol || f_ok) {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - simplex[n].0[i]))
            .collect();
        let f_reflect = eval(&reflect, &mut evaluations);

        if f_reflect < simplex[0].1 {
            // Try to expand further in the same direction.
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                .collect();
            let f_expand = eval(&expand, &mut evaluations);
            simplex[n] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
            continue;
        }
        if f_reflect < simplex[n - 1].1 {
            simplex[n] = (reflect, f_reflect);
            continue;
        }

        // Contract toward the better of the worst vertex and the reflection.
        let use_reflect = f_reflect < simplex[n].1;
        let base: Vec<f64> = if use_reflect {
            reflect.clone()
        } else {
            simplex[n].0.clone()
        };
        let f_base = if use_reflect { f_reflect } else { simplex[n].1 };
        let contract: Vec<f64> = (0..n)
            .map(|i| centroid[i] + rho * (base[i] - centroid[i]))
            .collect();
        let f_contract = eval(&contract, &mut evaluations);
        if f_contract < f_base {
            simplex[n] = (contract, f_contract);
            continue;
        }

        // Shrink everything toward the best vertex.
        let best_x = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = (0..n)
                .map(|i| best_x[i] + sigma * (entry.0[i] - best_x[i]))
                .collect();
            let fv = eval(&v, &mut evaluations);
            *entry = (v, fv);
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    SimplexResult {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let mut f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.5).powi(2);
        let r = nelder_mead(
            &mut f,
            &[0.0, 0.0],
            &[0.5, 0.5],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-6);
        assert!((r.x[1] + 1.5).abs() < 1e-6);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let mut f = |x: &[f64]| {
            100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
        };
        let r = nelder_mead(
            &mut f,
            &[-1.2, 1.0],
            &[0.2, 0.2],
            &SimplexOptions {
                max_iterations: 5000,
                ..Default::default()
            },
        );
        assert!(r.converged, "nelder-mead did not converge: {r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-4, "x = {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn walks_out_of_infinite_region() {
        // Objective is +inf left of x = 1; start at the boundary's edge.
        let mut f = |x: &[f64]| {
            if x[0] < 1.0 {
                f64::INFINITY
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let r = nelder_mead(&mut f, &[1.1, 0.0], &[0.3, 0.3], &SimplexOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn is_deterministic() {
        let run = || {
            let mut f = |x: &[f64]| x[0].powi(2) + (x[1] - 1.0).powi(4) + x[0].sin() * 0.1;
            nelder_mead(&mut f, &[2.0, -1.0], &[0.4, 0.4], &SimplexOptions::default())
        };
        let a = run();
        let b = run();
        assert_eq!(a.x, b.x);
        assert_eq!(a.evaluations, b.evaluations);
    }
}
