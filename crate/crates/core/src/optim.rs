//! Derivative-free minimization with the Nelder–Mead simplex method.
//!
//! Bounded problems are handled by the callers through smooth
//! reparametrizations (log for positive scales, a sine map for boxes), so the
//! simplex itself always works in an unconstrained space.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when the spread of objective values across the simplex drops below this.
    pub f_tolerance: f64,
    /// ... and the simplex diameter (max coordinate distance to the best vertex) is below this.
    pub x_tolerance: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5_000,
            f_tolerance: 1e-14,
            x_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex whose
/// edge along coordinate `i` is `steps[i]`.
///
/// NaN objective values are treated as `+inf`, so infeasible regions can be
/// signalled by returning NaN or infinity.
pub fn nelder_mead<F>(
    what: &'static str,
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: NelderMeadOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1 && steps.len() == n);
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = if best.is_finite() && worst.is_finite() {
            (worst - best).abs()
        } else {
            f64::INFINITY
        };
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if spread <= opts.f_tolerance && diameter <= opts.x_tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged {
                what,
                best: simplex[0].0.clone(),
                value: best,
                iterations,
            });
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let worst_x = simplex[n].0.clone();
        let reflected = toward(REFLECT, &worst_x);
        let fr = eval(&reflected);

        if fr < simplex[0].1 {
            let expanded = toward(EXPAND, &worst_x);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        // Contraction: outside if the reflection improved on the worst, inside otherwise.
        let (contracted, fc) = if fr < worst {
            let x = toward(CONTRACT, &worst_x);
            let v = eval(&x);
            (x, v)
        } else {
            let x = toward(-CONTRACT, &worst_x);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.min(fr) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (xi, bi) in vertex.0.iter_mut().zip(&best_x) {
                *xi = bi + SHRINK * (*xi - bi);
            }
            vertex.1 = eval(&vertex.0);
        }
    }

    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        iterations,
    })
}

/// Maps an unconstrained coordinate onto `[lo, hi]` (and back) through a sine,
/// which keeps both ends reachable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoxMap {
    pub lo: f64,
    pub hi: f64,
}

impl BoxMap {
    pub fn to_bounded(self, u: f64) -> f64 {
        let v = self.lo + (self.hi - self.lo) * 0.5 * (u.sin() + 1.0);
        v.clamp(self.lo, self.hi)
    }

    pub fn to_unbounded(self, v: f64) -> f64 {
        let t = (2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0).clamp(-1.0, 1.0);
        t.asin()
    }
}
