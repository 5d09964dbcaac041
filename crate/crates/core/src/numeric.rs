//! Compensated summation and Gauss–Legendre quadrature.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Neumaier-compensated accumulator for real sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

impl FromIterator<Complex64> for ComplexKahan {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = ComplexKahan::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared 16-point rule.
    pub fn gl16() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(16))
    }

    /// Shared 32-point rule.
    pub fn gl32() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    /// Integrates `f` over [a, b] with a single application of the rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = KahanSum::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = ComplexKahan::new();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(f(mid + half * x) * *w);
        }
        acc.value() * half
    }

    /// Composite rule over `panels` equal sub-intervals of [a, b].
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = KahanSum::new();
        for k in 0..panels {
            let lo = a + h * k as f64;
            acc.add(self.integrate(lo, lo + h, &mut f));
        }
        acc.value()
    }

    pub fn composite_complex<F: FnMut(f64) -> Complex64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> Complex64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = ComplexKahan::new();
        for k in 0..panels {
            let lo = a + h * k as f64;
            acc.add(self.integrate_complex(lo, lo + h, &mut f));
        }
        acc.value()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Gauss–Legendre quadrature: bisects until the 16- and 32-point
/// rules agree to `tol` (absolute) on every leaf interval.
pub fn adaptive_gl<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<f64, f64> {
    fn rec<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, depth: u32, f: &mut F, acc: &mut KahanSum) -> bool {
        let coarse = GaussLegendre::gl16().integrate(a, b, &mut *f);
        let fine = GaussLegendre::gl32().integrate(a, b, &mut *f);
        let err = (coarse - fine).abs();
        let floor = 32.0 * f64::EPSILON * fine.abs().max(coarse.abs());
        if err <= tol.max(floor) || depth == 0 {
            acc.add(fine);
            return err <= tol.max(floor);
        }
        let m = 0.5 * (a + b);
        let left = rec(a, m, 0.5 * tol, depth - 1, f, acc);
        let right = rec(m, b, 0.5 * tol, depth - 1, f, acc);
        left && right
    }
    let mut acc = KahanSum::new();
    let ok = rec(a, b, tol, 30, &mut f, &mut acc);
    if ok {
        Ok(acc.value())
    } else {
        Err(acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(16);
        // degree 31 is the exactness limit
        let v = rule.integrate(-1.0, 1.0, |x| x.powi(30));
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let s: f64 = rule.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rule_has_center_node() {
        let rule = GaussLegendre::new(7);
        assert_eq!(rule.nodes[3], 0.0);
        let v = rule.integrate(0.0, 1.0, |x| x.powi(13));
        assert!((v - 1.0 / 14.0).abs() < 1e-14);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-12).abs() < 1e-20);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive_gl(0.0, 1.0, 1e-13, |x| 1.0 / (1e-3 + (x - 0.3).powi(2))).unwrap();
        let exact = ((0.7f64 / 1e-3f64.sqrt()).atan() + (0.3f64 / 1e-3f64.sqrt()).atan()) / 1e-3f64.sqrt();
        assert!((v - exact).abs() < 1e-10 * exact);
    }
}
