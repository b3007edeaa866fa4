//! One-dimensional quadrature building blocks: Gauss–Legendre rules of any
//! order and an adaptive Gauss–Kronrod (15/7) integrator for vector-valued
//! integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights matching `XGK`.
pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Embedded Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
pub(crate) const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes on [-1, 1] in ascending order together with their
/// Kronrod and Gauss weights (Gauss weight 0 for Kronrod-only nodes).
pub(crate) fn gk15_nodes() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[j] = (-XGK[j], WGK[j], wg);
        out[14 - j] = (XGK[j], WGK[j], wg);
    }
    out[7] = (0.0, WGK[7], WG[3]);
    out
}

/// Gauss–Legendre nodes and weights of order `n` on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule: `panels` equal panels on `[a, b]`, each
/// with `order` nodes. Returns `(nodes, weights)`.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    /// Sum of the per-panel |Kronrod − Gauss| estimates (max-norm).
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error
            .total_cmp(&o.error)
            .then_with(|| o.a.total_cmp(&self.a))
    }
}

fn gk15_panel<F>(f: &F, a: f64, b: f64, dim: usize) -> Panel
where
    F: Fn(f64, &mut [f64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for (x, wk, wg) in gk15_nodes() {
        f(c + h * x, &mut buf);
        for d in 0..dim {
            k[d] += wk * buf[d];
            g[d] += wg * buf[d];
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    Panel { a, b, value: k, error: err }
}

/// Adaptive Gauss–Kronrod integration of a `dim`-component integrand over
/// `[a, b]`. Initial panels are the intervals between consecutive entries of
/// `breaks` (which must start at `a` and end at `b`). Stops when the summed
/// error estimate is below `max(abs_tol, rel_tol·|value|_∞)` or when
/// `max_panels` panels exist.
pub fn adaptive_gk<F>(
    f: F,
    breaks: &[f64],
    dim: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Integral
where
    F: Fn(f64, &mut [f64]),
{
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15_panel(&f, w[0], w[1], dim));
        }
    }
    let total = |heap: &BinaryHeap<Panel>| {
        let mut v = vec![0.0; dim];
        let mut e = 0.0;
        for p in heap.iter() {
            for d in 0..dim {
                v[d] += p.value[d];
            }
            e += p.error;
        }
        (v, e)
    };
    let mut converged = false;
    loop {
        let (v, e) = total(&heap);
        let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if e <= abs_tol.max(rel_tol * scale) {
            converged = true;
            break;
        }
        if heap.len() >= max_panels {
            break;
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Cannot bisect further in floating point.
            heap.push(worst);
            break;
        }
        heap.push(gk15_panel(&f, worst.a, mid, dim));
        heap.push(gk15_panel(&f, mid, worst.b, dim));
    }
    // Deterministic summation order: by left endpoint.
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for p in &panels {
        for d in 0..dim {
            value[d] += p.value[d];
        }
        error += p.error;
    }
    Integral {
        value,
        error,
        panels: panels.len(),
        converged,
    }
}

/// Scalar convenience wrapper around [`adaptive_gk`].
pub fn adaptive_gk_scalar<F>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> (f64, f64, bool)
where
    F: Fn(f64) -> f64,
{
    let r = adaptive_gk(|x, out: &mut [f64]| out[0] = f(x), breaks, 1, abs_tol, rel_tol, max_panels);
    (r.value[0], r.error, r.converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 2.0 / 13.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(40);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((s - 2.0 * 3f64.sin() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let (v, e, ok) =
            adaptive_gk_scalar(|x| 1.0 / (1e-4 + x * x), &[-1.0, 1.0], 1e-12, 1e-12, 2000);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!(ok);
        assert!((v - exact).abs() < 1e-9 * exact, "{v} {exact} {e}");
    }

    #[test]
    fn gk_nodes_integrate_constants() {
        let s: f64 = gk15_nodes().iter().map(|n| n.1).sum();
        let g: f64 = gk15_nodes().iter().map(|n| n.2).sum();
        assert!((s - 2.0).abs() < 1e-15 && (g - 2.0).abs() < 1e-15);
    }
}
