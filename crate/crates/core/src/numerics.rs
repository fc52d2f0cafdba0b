//! Small numerical helpers shared by the laboratories: composite quadrature,
//! bracketed 1-D minimisation, histograms.

// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss-Legendre rule with `panels` equal panels on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut acc = 0.0;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Complex-valued variant of [`integrate`].
pub fn integrate_complex<F: FnMut(f64) -> num_complex::Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
) -> num_complex::Complex64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = num_complex::Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            total += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    total
}

/// Brent's parabolic-interpolation minimiser on the bracket `[a, b]`.
///
/// Returns `(x_min, f(x_min))`. The bracket need not contain an interior
/// minimum, in which case an end point is approached.
pub fn minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = xtol + 1e-15 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Equal-width histogram on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// Samples that fell outside `[lo, hi)`.
    pub outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0, "degenerate histogram");
        Self {
            lo,
            hi,
            counts: vec![0; bins],
            outside: 0,
        }
    }

    pub fn from_samples(
        lo: f64,
        hi: f64,
        bins: usize,
        samples: impl IntoIterator<Item = f64>,
    ) -> Self {
        let mut h = Self::new(lo, hi, bins);
        for x in samples {
            h.add(x);
        }
        h
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.bins() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins())
            .map(|i| self.lo + i as f64 * self.bin_width())
            .collect()
    }

    pub fn add(&mut self, x: f64) {
        match self.index_of(x) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.bin_width()) as usize;
        Some(i.min(self.bins() - 1))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.outside
    }

    /// Bin probabilities normalised by the total sample count (outside
    /// samples included in the denominator).
    pub fn masses(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Σ |p_i − q_i|.
pub fn l1_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let v = integrate(|x| x.powi(9) - 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert_relative_eq!(v, exact, max_relative = 1e-13);
    }

    #[test]
    fn quadrature_gaussian() {
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, 40);
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn brent_finds_cosine_minimum() {
        let (x, f) = minimize(|x| x.cos(), 2.0, 4.5, 1e-12);
        assert!((x - std::f64::consts::PI).abs() < 1e-7);
        assert!((f + 1.0).abs() < 1e-14);
    }

    #[test]
    fn histogram_counts() {
        let h = Histogram::from_samples(0.0, 1.0, 4, [0.1, 0.3, 0.3, 0.99, 1.0, -0.1]);
        assert_eq!(h.counts, vec![1, 2, 0, 1]);
        assert_eq!(h.outside, 2);
        assert_relative_eq!(h.masses().iter().sum::<f64>(), 4.0 / 6.0);
    }
}
