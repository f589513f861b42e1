//! Gauss-Legendre rules and composite panel integration.
//!
//! Nodes and weights are computed by Newton iteration on the Legendre
//! recurrence, which is accurate to machine precision for the small orders
//! used here (panel rules of order 3 to 10).

use num_complex::Complex64;

/// A Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial value and derivative at `x` for degree `n`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussRule {
    /// The `n`-point Gauss-Legendre rule, exact for polynomials of degree
    /// 2n - 1. Panics on `n = 0`.
    pub fn legendre(n: usize) -> GaussRule {
        assert!(n >= 1, "quadrature order must be at least 1");
        if n == 1 {
            return GaussRule { nodes: vec![0.0], weights: vec![2.0] };
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Roots come in symmetric pairs; solve for the non-negative half.
        for i in 0..(n + 1) / 2 {
            // Chebyshev-based initial guess for the i-th largest root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_pair(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_pair(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto the interval [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// Integral of `f` over [a, b] with a single application of `rule`.
pub fn integrate_complex<F>(rule: &GaussRule, a: f64, b: f64, mut f: F) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.mapped(a, b) {
        acc += w * f(x);
    }
    acc
}

/// Integral of `f` over [a, b] on panels of length at most `max_step`,
/// each handled by `rule`. Panel count and summation order are deterministic.
pub fn composite_complex<F>(rule: &GaussRule, a: f64, b: f64, max_step: f64, mut f: F) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    assert!(b >= a, "integration bounds must be ordered");
    assert!(max_step > 0.0, "panel length must be positive");
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let n = ((b - a) / max_step - 1e-12).ceil().max(1.0) as usize;
    let step = (b - a) / n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..n {
        let pa = a + p as f64 * step;
        let pb = if p + 1 == n { b } else { a + (p + 1) as f64 * step };
        acc += integrate_complex(rule, pa, pb, &mut f);
    }
    acc
}

/// Splits [a, b] at the points of `cuts` that fall strictly inside, then
/// subdivides every piece to length at most `max_step`, and integrates `f`
/// with `rule` on each panel. Used when the integrand has kinks at known
/// locations (element boundaries, scaling-path corners).
pub fn composite_with_cuts<F>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    cuts: &[f64],
    max_step: f64,
    mut f: F,
) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    assert!(b >= a, "integration bounds must be ordered");
    let mut bounds: Vec<f64> = vec![a];
    for &c in cuts {
        if c > a && c < b {
            bounds.push(c);
        }
    }
    bounds.push(b);
    bounds.sort_by(|x, y| x.partial_cmp(y).unwrap());
    bounds.dedup();
    let mut acc = Complex64::new(0.0, 0.0);
    for w in bounds.windows(2) {
        acc += composite_complex(rule, w[0], w[1], max_step, &mut f);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn five_point_rule_matches_reference_values() {
        // Frozen reference: classical 5-point Gauss-Legendre abscissas and
        // weights, e.g. from standard quadrature tables.
        let rule = GaussRule::legendre(5);
        let nodes = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let weights = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        for i in 0..5 {
            assert!(approx_eq(rule.nodes[i], nodes[i], 1e-14), "node {i}");
            assert!(approx_eq(rule.weights[i], weights[i], 1e-14), "weight {i}");
        }
    }

    #[test]
    fn rules_integrate_polynomials_exactly() {
        // An n-point rule must integrate x^m exactly for m <= 2n - 1.
        for n in 1..=10 {
            let rule = GaussRule::legendre(n);
            for m in 0..=(2 * n - 1) {
                let got = integrate_complex(&rule, -1.0, 1.0, |x| {
                    Complex64::new(x.powi(m as i32), 0.0)
                });
                let exact = if m % 2 == 0 { 2.0 / (m as f64 + 1.0) } else { 0.0 };
                assert!(
                    approx_eq(got.re, exact, 1e-13),
                    "n={n} m={m} got {} want {exact}",
                    got.re
                );
                assert!(got.im == 0.0);
            }
        }
    }

    #[test]
    fn weights_are_positive_and_sum_to_two() {
        for n in 1..=12 {
            let rule = GaussRule::legendre(n);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            let s: f64 = rule.weights.iter().sum();
            assert!(approx_eq(s, 2.0, 1e-13), "n={n} sum {s}");
        }
    }

    #[test]
    fn composite_handles_oscillatory_integrand() {
        // int_0^{2pi} e^{i t} dt = 0 and int_0^{pi} sin t dt = 2.
        let rule = GaussRule::legendre(5);
        let z = composite_complex(&rule, 0.0, 2.0 * std::f64::consts::PI, 0.1, |t| {
            Complex64::new(t.cos(), t.sin())
        });
        assert!(z.norm() < 1e-12);
        let s = composite_complex(&rule, 0.0, std::f64::consts::PI, 0.1, |t| {
            Complex64::new(t.sin(), 0.0)
        });
        assert!(approx_eq(s.re, 2.0, 1e-12));
    }

    #[test]
    fn cuts_recover_accuracy_for_kinked_integrand() {
        // |x| has a kink at 0; panels aligned with the kink integrate it
        // exactly, panels straddling it do not.
        let rule = GaussRule::legendre(4);
        let with_cut = composite_with_cuts(&rule, -1.0, 1.0, &[0.0], 0.3, |x| {
            Complex64::new(x.abs(), 0.0)
        });
        assert!(approx_eq(with_cut.re, 1.0, 1e-14));
    }

    #[test]
    fn panel_count_is_deterministic_near_multiples() {
        // Length 1.0 with step 0.1 must produce exactly 10 panels, not 11
        // from floating-point noise in the division.
        let rule = GaussRule::legendre(2);
        let ones = composite_complex(&rule, 0.0, 1.0, 0.1, |_| Complex64::new(1.0, 0.0));
        assert!(approx_eq(ones.re, 1.0, 1e-14));
    }
}
