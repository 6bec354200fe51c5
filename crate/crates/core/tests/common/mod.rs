#![allow(dead_code)]

use llrer::CensoredSample;
use rand::Rng;

pub fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Random sample with distinct positive responses, `x ~ U(0, 10)` and
/// roughly 40% censoring.
pub fn random_sample<R: Rng>(rng: &mut R, n: usize) -> CensoredSample {
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..10.0)).collect();
    let d: Vec<bool> = (0..n).map(|_| rng.random_bool(0.6)).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    CensoredSample::from_columns(&y, &d, &x).unwrap()
}

/// Product-limit censoring survival just below `t`, written directly from
/// the definition. Assumes distinct responses.
pub fn km_left_limit(ys: &[f64], deltas: &[bool], t: f64) -> f64 {
    let mut g = 1.0;
    for (j, &yj) in ys.iter().enumerate() {
        if deltas[j] || yj >= t {
            continue;
        }
        let at_risk = ys.iter().filter(|&&yk| yk >= yj).count() as f64;
        g *= 1.0 - 1.0 / at_risk;
    }
    g
}

/// `delta_i y_i^(-l) / G(y_i-)` for every record.
pub fn synthetic(sample: &CensoredSample, ell: i32) -> Vec<f64> {
    let ys: Vec<f64> = sample.ys().collect();
    let ds: Vec<bool> = sample.records().iter().map(|r| r.delta).collect();
    ys.iter()
        .zip(&ds)
        .map(|(&y, &d)| if d { y.powi(-ell) / km_left_limit(&ys, &ds, y) } else { 0.0 })
        .collect()
}

/// Double-double value `(hi, lo)` built from error-free transforms.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let v = s - a;
        Dd(s, (a - (s - v)) + (b - v))
    }

    fn add(self, o: Dd) -> Dd {
        let Dd(s, e) = Dd::sum(self.0, o.0);
        let e = e + self.1 + o.1;
        let hi = s + e;
        Dd(hi, e - (hi - s))
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + self.0 * o.1 + self.1 * o.0;
        let hi = p + e;
        Dd(hi, e - (hi - p))
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }
}

/// Double-sum local linear ratio with weights
/// `(X_i - x)((X_i - x) - (X_j - x)) K_i K_j a_i b_j`,
/// numerator weighted additionally by `c_j / b_j`. Returns `(num, den)`,
/// accumulated in double-double so cancellation between terms is harmless.
pub fn double_sum(xs: &[f64], a: &[f64], b: &[f64], c: &[f64], x: f64, h: f64) -> (f64, f64) {
    let d: Vec<Dd> = xs.iter().map(|&xi| Dd::sum(xi, -x)).collect();
    let k: Vec<f64> = xs.iter().map(|&xi| gaussian((xi - x) / h)).collect();
    let mut num = Dd(0.0, 0.0);
    let mut den = Dd(0.0, 0.0);
    for i in 0..xs.len() {
        for j in 0..xs.len() {
            let w = d[i].mul(d[i].add(d[j].neg())).mul(Dd(k[i] * k[j], 0.0)).mul(Dd(a[i], 0.0));
            num = num.add(w.mul(Dd(c[j], 0.0)));
            den = den.add(w.mul(Dd(b[j], 0.0)));
        }
    }
    (num.0 + num.1, den.0 + den.1)
}

/// Leave-one-out Nadaraya-Watson scores at each `h`, recomputing the
/// survival estimate for every fold.
pub fn cr_loo_scores(sample: &CensoredSample, hs: &[f64]) -> Vec<f64> {
    let targets = synthetic(sample, -1);
    let xs: Vec<f64> = sample.xs().collect();
    let folds: Vec<(Vec<f64>, Vec<f64>)> = (0..sample.len())
        .map(|i| {
            let sub = sample.without(i).unwrap();
            (sub.xs().collect(), synthetic(&sub, -1))
        })
        .collect();
    hs.iter()
        .map(|&h| {
            let mut score = 0.0;
            for (i, (sx, tau)) in folds.iter().enumerate() {
                let w: Vec<f64> = sx.iter().map(|&xj| gaussian((xj - xs[i]) / h)).collect();
                let den: f64 = w.iter().sum();
                let pred = if den > 1e-12 * sx.len() as f64 * gaussian(0.0) {
                    w.iter().zip(tau).map(|(a, b)| a * b).sum::<f64>() / den
                } else {
                    0.0
                };
                score += (targets[i] - pred).powi(2);
            }
            score
        })
        .collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Composite Simpson rule with `2m` panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
    let n = 2 * m;
    let step = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * step);
    }
    s * step / 3.0
}

/// Type-7 median.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
