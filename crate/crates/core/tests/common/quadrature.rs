//! Grid quadrature of low-dimensional posteriors.

/// Trapezoid-rule posterior on a uniform 1-D grid.
pub struct Grid1 {
    pub xs: Vec<f64>,
    /// Normalised density values at `xs`.
    pub density: Vec<f64>,
    /// `log ∫ exp(log_target)`
    pub log_mass: f64,
}

impl Grid1 {
    pub fn new(lo: f64, hi: f64, points: usize, log_target: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / (points - 1) as f64;
        let xs: Vec<f64> = (0..points).map(|k| lo + h * k as f64).collect();
        let lt: Vec<f64> = xs.iter().map(|&x| log_target(x)).collect();
        let m = lt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lt.iter().map(|v| (v - m).exp()).collect();
        let mass = trapezoid(&w, h);
        Self {
            density: w.iter().map(|v| v / mass).collect(),
            log_mass: m + mass.ln(),
            xs,
        }
    }

    fn h(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn mean(&self) -> f64 {
        let f: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.density)
            .map(|(x, d)| x * d)
            .collect();
        trapezoid(&f, self.h())
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let f: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.density)
            .map(|(x, d)| (x - m).powi(2) * d)
            .collect();
        trapezoid(&f, self.h()).sqrt()
    }

    /// Linear interpolation of the density.
    pub fn density_at(&self, x: f64) -> f64 {
        let h = self.h();
        let pos = (x - self.xs[0]) / h;
        let k = (pos.floor() as usize).min(self.xs.len() - 2);
        let t = pos - k as f64;
        self.density[k] * (1.0 - t) + self.density[k + 1] * t
    }

    /// Cumulative distribution at each grid point.
    pub fn cdf(&self) -> Vec<f64> {
        let h = self.h();
        let mut out = vec![0.0; self.xs.len()];
        for k in 1..self.xs.len() {
            out[k] = out[k - 1] + 0.5 * h * (self.density[k - 1] + self.density[k]);
        }
        out
    }

    /// Kolmogorov–Smirnov distance between a sample and this distribution.
    pub fn ks_distance(&self, sample: &[f64]) -> f64 {
        let cdf = self.cdf();
        let h = self.h();
        let f = |x: f64| -> f64 {
            if x <= self.xs[0] {
                return 0.0;
            }
            let pos = (x - self.xs[0]) / h;
            let k = pos.floor() as usize;
            if k + 1 >= self.xs.len() {
                return 1.0;
            }
            let t = pos - k as f64;
            cdf[k] * (1.0 - t) + cdf[k + 1] * t
        };
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &x)| {
                let fx = f(x);
                (fx - i as f64 / n)
                    .abs()
                    .max(((i + 1) as f64 / n - fx).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// 2-D trapezoid integration of `exp(log_target)` over a rectangle.
pub fn log_mass_2d(
    (lo0, hi0): (f64, f64),
    (lo1, hi1): (f64, f64),
    points: usize,
    log_target: impl Fn(f64, f64) -> f64,
) -> (f64, [f64; 2]) {
    let h0 = (hi0 - lo0) / (points - 1) as f64;
    let h1 = (hi1 - lo1) / (points - 1) as f64;
    let mut lt = vec![0.0; points * points];
    for a in 0..points {
        for b in 0..points {
            lt[a * points + b] = log_target(lo0 + h0 * a as f64, lo1 + h1 * b as f64);
        }
    }
    let m = lt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mass = 0.0;
    let mut mean = [0.0; 2];
    for a in 0..points {
        for b in 0..points {
            let wa = if a == 0 || a == points - 1 { 0.5 } else { 1.0 };
            let wb = if b == 0 || b == points - 1 { 0.5 } else { 1.0 };
            let v = wa * wb * (lt[a * points + b] - m).exp();
            mass += v;
            mean[0] += v * (lo0 + h0 * a as f64);
            mean[1] += v * (lo1 + h1 * b as f64);
        }
    }
    mean[0] /= mass;
    mean[1] /= mass;
    (m + (mass * h0 * h1).ln(), mean)
}

pub fn trapezoid(f: &[f64], h: f64) -> f64 {
    let inner: f64 = f[1..f.len() - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[f.len() - 1]))
}

/// Marginal of the first argument of a 2-D target, integrating the second
/// over `[lo1, hi1]` by the trapezoid rule.
pub fn marginal_first(
    (lo0, hi0): (f64, f64),
    (lo1, hi1): (f64, f64),
    points: usize,
    log_target: impl Fn(f64, f64) -> f64,
) -> Grid1 {
    let h1 = (hi1 - lo1) / (points - 1) as f64;
    Grid1::new(lo0, hi0, points, |a| {
        let lt: Vec<f64> = (0..points)
            .map(|b| log_target(a, lo1 + h1 * b as f64))
            .collect();
        let m = lt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = lt.iter().map(|v| (v - m).exp()).collect();
        m + trapezoid(&w, h1).ln()
    })
}
