//! Dense BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_BRACKET: usize = 30;
const MAX_ZOOM: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `f <= f_exact`.
    ExactValue,
    /// Gradient norm below the tolerance.
    GradientNorm,
    MaxIterations,
    /// No step satisfying the Wolfe conditions was found.
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct BfgsOptions {
    pub grad_tol: f64,
    /// When set the gradient test is `||g|| <= 2 sqrt(f) grad_tol`, the
    /// `||grad C|| <= grad_tol` test written for `f = C^2`.
    pub grad_relative_to_sqrt_f: bool,
    pub f_exact: f64,
    pub max_iterations: usize,
    pub record_trace: bool,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-5,
            grad_relative_to_sqrt_f: true,
            f_exact: 1e-20,
            max_iterations: 3000,
            record_trace: false,
        }
    }
}

/// One row of the optimization trace: iteration, `f`, gradient norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    pub trace: Vec<TracePoint>,
}

impl BfgsResult {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::ExactValue | StopReason::GradientNorm)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Probe<'a, F> {
    fg: &'a mut F,
    x: &'a [f64],
    p: &'a [f64],
    evals: usize,
}

struct Point {
    a: f64,
    f: f64,
    d: f64,
    g: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Probe<'_, F> {
    fn at(&mut self, a: f64) -> Point {
        let xa: Vec<f64> = self.x.iter().zip(self.p).map(|(x, p)| x + a * p).collect();
        let (f, g) = (self.fg)(&xa);
        self.evals += 1;
        let d = dot(&g, self.p);
        Point { a, f, d, g }
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, if any.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    probe: &mut Probe<'_, F>,
    f0: f64,
    d0: f64,
    mut lo: Point,
    mut hi: Point,
) -> Option<Point> {
    for _ in 0..MAX_ZOOM {
        let (l, h) = (lo.a.min(hi.a), lo.a.max(hi.a));
        let width = h - l;
        if width <= 1e-16 * h.max(1.0) {
            break;
        }
        let mut a = cubic_min(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d).unwrap_or(0.5 * (l + h));
        if a < l + 0.1 * width || a > h - 0.1 * width {
            a = 0.5 * (l + h);
        }
        let pt = probe.at(a);
        if !pt.f.is_finite() || pt.f > f0 + C1 * a * d0 || pt.f >= lo.f {
            hi = pt;
        } else {
            if pt.d.abs() <= -C2 * d0 {
                return Some(pt);
            }
            if pt.d * (hi.a - lo.a) >= 0.0 {
                hi = std::mem::replace(&mut lo, pt);
            } else {
                lo = pt;
            }
        }
    }
    // Accept a sufficient-decrease point when the interval collapses.
    (lo.a > 0.0 && lo.f < f0).then_some(lo)
}

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    probe: &mut Probe<'_, F>,
    f0: f64,
    d0: f64,
    g0: &[f64],
    a1: f64,
) -> Option<Point> {
    let mut prev = Point {
        a: 0.0,
        f: f0,
        d: d0,
        g: g0.to_vec(),
    };
    let mut a = a1;
    for i in 0..MAX_BRACKET {
        let pt = probe.at(a);
        if !pt.f.is_finite() || pt.f > f0 + C1 * a * d0 || (i > 0 && pt.f >= prev.f) {
            return zoom(probe, f0, d0, prev, pt);
        }
        if pt.d.abs() <= -C2 * d0 {
            return Some(pt);
        }
        if pt.d >= 0.0 {
            return zoom(probe, f0, d0, pt, prev);
        }
        prev = pt;
        a *= 2.0;
    }
    None
}

/// Minimizes `f` given `fg(x) = (f(x), grad f(x))`.
pub fn bfgs_minimize<F>(mut fg: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut f, mut g) = fg(&x);
    let mut evals = 1;
    let mut trace = Vec::new();
    // Inverse Hessian approximation, row-major; `None` until the first step.
    let mut h: Option<Vec<f64>> = None;
    let mut iter = 0;
    let stop = loop {
        let gn = norm(&g);
        if opts.record_trace {
            trace.push(TracePoint {
                iteration: iter,
                value: f,
                grad_norm: gn,
            });
        }
        if f <= opts.f_exact {
            break StopReason::ExactValue;
        }
        let gtol = if opts.grad_relative_to_sqrt_f {
            2.0 * f.max(0.0).sqrt() * opts.grad_tol
        } else {
            opts.grad_tol
        };
        if gn <= gtol || n == 0 {
            break StopReason::GradientNorm;
        }
        if iter >= opts.max_iterations {
            break StopReason::MaxIterations;
        }
        let mut p: Vec<f64> = match &h {
            Some(hm) => (0..n).map(|i| -dot(&hm[i * n..(i + 1) * n], &g)).collect(),
            None => g.iter().map(|v| -v).collect(),
        };
        let mut d0 = dot(&p, &g);
        if !(d0 < 0.0) {
            h = None;
            p = g.iter().map(|v| -v).collect();
            d0 = -gn * gn;
        }
        let a1 = if h.is_none() { (1.0 / gn).min(1.0) } else { 1.0 };
        let mut probe = Probe {
            fg: &mut fg,
            x: &x,
            p: &p,
            evals: 0,
        };
        let found = line_search(&mut probe, f, d0, &g, a1);
        evals += probe.evals;
        let Some(pt) = found else {
            break StopReason::LineSearchFailed;
        };
        let s: Vec<f64> = p.iter().map(|v| pt.a * v).collect();
        let y: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        f = pt.f;
        g = pt.g;
        iter += 1;
        let ys = dot(&y, &s);
        if ys > 1e-300 {
            let hm = h.get_or_insert_with(|| {
                let scale = ys / dot(&y, &y);
                let mut m = vec![0.0; n * n];
                (0..n).for_each(|i| m[i * n + i] = scale);
                m
            });
            // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
            let r = 1.0 / ys;
            let hy: Vec<f64> = (0..n).map(|i| dot(&hm[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let c = r * r * yhy + r;
            for i in 0..n {
                for j in 0..n {
                    hm[i * n + j] += c * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    };
    BfgsResult {
        x,
        f,
        iterations: iter,
        evaluations: evals,
        stop,
        trace,
    }
}
