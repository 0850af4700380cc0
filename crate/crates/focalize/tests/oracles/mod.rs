//! Independent reference computations used by the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// ln Γ(x) for x > 0 (Lanczos, g = 7, n = 9).
#[allow(clippy::excessive_precision)]
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    // Split into pieces so sharp peaks are not missed by the first estimate.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_step(&f, x0, x1, f0, fm, f1, whole, eps / pieces as f64, 50)
        })
        .sum()
}

pub fn student_t_density(x: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

/// Two-tailed p by integrating the t density.
pub fn t_two_tailed(t: f64, df: f64) -> f64 {
    let central = integrate(|x| student_t_density(x, df), 0.0, t.abs(), 1e-14);
    (1.0 - 2.0 * central).max(0.0)
}

/// Upper-tail F probability; integrates in `s` with `x = s^2` so the
/// `d1 = 1` pole at zero disappears.
pub fn f_upper(f: f64, d1: f64, d2: f64) -> f64 {
    let ln_c = ln_gamma((d1 + d2) / 2.0) - ln_gamma(d1 / 2.0) - ln_gamma(d2 / 2.0)
        + d1 / 2.0 * (d1 / d2).ln();
    let g = |s: f64| {
        let x = s * s;
        2.0 * s.powf(d1 - 1.0) * (ln_c - (d1 + d2) / 2.0 * (1.0 + d1 * x / d2).ln()).exp()
    };
    (1.0 - integrate(g, 0.0, f.sqrt(), 1e-14)).max(0.0)
}

/// One-pass textbook Pearson r.
pub fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// (F, df_between, df_within)
pub fn anova(groups: &[Vec<f64>]) -> (f64, f64, f64) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let ssb: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    let ssw: f64 = groups
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        })
        .sum();
    let d1 = (groups.len() - 1) as f64;
    let d2 = (all.len() - groups.len()) as f64;
    ((ssb / d1) / (ssw / d2), d1, d2)
}

/// (t, Welch-Satterthwaite df)
pub fn welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (qa, qb) = (var(a) / a.len() as f64, var(b) / b.len() as f64);
    let t = (mean(a) - mean(b)) / (qa + qb).sqrt();
    let df = (qa + qb).powi(2)
        / (qa * qa / (a.len() - 1) as f64 + qb * qb / (b.len() - 1) as f64);
    (t, df)
}

/// Nominal alpha by enumerating value pairs directly.
///
/// Observed disagreement: every ordered pair of distinct annotators within a
/// unit, weighted `1 / (m_u - 1)`. Expected disagreement: every ordered pair
/// of distinct value instances pooled over pairable units.
pub fn alpha_pairs(units: &[Vec<Option<u8>>]) -> Option<f64> {
    let mut observed = 0.0;
    let mut pooled: Vec<u8> = Vec::new();
    for unit in units {
        let vals: Vec<u8> = unit.iter().flatten().copied().collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                if i != j && vals[i] != vals[j] {
                    observed += 1.0 / (m - 1) as f64;
                }
            }
        }
        pooled.extend(vals);
    }
    let n = pooled.len();
    if n < 2 {
        return None;
    }
    let mut expected_pairs = 0u64;
    for i in 0..n {
        for j in 0..n {
            if i != j && pooled[i] != pooled[j] {
                expected_pairs += 1;
            }
        }
    }
    if expected_pairs == 0 {
        return None;
    }
    let d_o = observed / n as f64;
    let d_e = expected_pairs as f64 / (n * (n - 1)) as f64;
    Some(1.0 - d_o / d_e)
}

/// Multinomial Naive Bayes posterior with Laplace smoothing 1, computed as
/// plain products of probabilities. `train` holds (tokens, class) pairs.
pub fn nb_posterior(
    train: &[(Vec<String>, usize)],
    vocabulary: &[String],
    test: &[String],
) -> BTreeMap<usize, f64> {
    let n_docs = train.len() as f64;
    let v = vocabulary.len() as f64;
    let mut joint = BTreeMap::new();
    for class in 0..3 {
        let docs: Vec<&Vec<String>> = train.iter().filter(|(_, c)| *c == class).map(|(t, _)| t).collect();
        if docs.is_empty() {
            continue;
        }
        let total: f64 = docs
            .iter()
            .map(|d| d.iter().filter(|t| vocabulary.contains(t)).count() as f64)
            .sum();
        let mut p = docs.len() as f64 / n_docs;
        for tok in test.iter().filter(|t| vocabulary.contains(t)) {
            let count: f64 = docs.iter().map(|d| d.iter().filter(|t| *t == tok).count() as f64).sum();
            p *= (count + 1.0) / (total + v);
        }
        joint.insert(class, p);
    }
    let z: f64 = joint.values().sum();
    joint.into_iter().map(|(c, p)| (c, p / z)).collect()
}

/// Expand a 3x4 confusion table (gold rows, predicted columns with an
/// invalid column last) into pairs and score each class by counting.
/// Returns per-class (precision, recall, f1, support) and weighted (P, R, F1).
pub type ClassCounts = (f64, f64, f64, u64);

pub fn prf_by_counting(counts: &[[u64; 4]; 3]) -> (Vec<ClassCounts>, (f64, f64, f64)) {
    let mut pairs = Vec::new();
    for (g, row) in counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                pairs.push((g, p));
            }
        }
    }
    let mut per = Vec::new();
    for c in 0..3 {
        let tp = pairs.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
        let predicted = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
        let actual = pairs.iter().filter(|&&(g, _)| g == c).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if tp > 0.0 { 2.0 * tp / (predicted + actual) } else { 0.0 };
        per.push((precision, recall, f1, actual as u64));
    }
    let total: f64 = per.iter().map(|x| x.3 as f64).sum();
    let w = |f: fn(&ClassCounts) -> f64| {
        if total == 0.0 {
            0.0
        } else {
            per.iter().map(|x| x.3 as f64 * f(x)).sum::<f64>() / total
        }
    };
    let weighted = (w(|x| x.0), w(|x| x.1), w(|x| x.2));
    (per, weighted)
}

pub fn oracle_self_check() -> Result<(), String> {
    // Γ(5) = 24, Γ(1/2) = sqrt(pi)
    let checks = [
        (ln_gamma(5.0), 24f64.ln()),
        (ln_gamma(0.5), std::f64::consts::PI.sqrt().ln()),
        // df = 2: p = 1 - t / sqrt(2 + t^2)
        (t_two_tailed(1.5, 2.0), 1.0 - 1.5 / (2.0f64 + 2.25).sqrt()),
        // F(1, d) upper tail equals the two-tailed t tail at sqrt(F)
        (f_upper(4.0, 1.0, 7.0), t_two_tailed(2.0, 7.0)),
        // F(2, 2): P(F > f) = 1 / (1 + f)
        (f_upper(3.0, 2.0, 2.0), 0.25),
    ];
    for (i, (got, want)) in checks.iter().enumerate() {
        if (got - want).abs() > 1e-10 {
            return Err(format!("oracle self-check {i}: {got} vs {want}"));
        }
    }
    Ok(())
}
