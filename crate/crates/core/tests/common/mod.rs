//! Independent reference implementations shared by the integration tests.
//! None of these call into the library's numerical code.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use vowelspace::features::{Vowel, VowelRepresentatives};
use vowelspace::posterior::{PhoneSets, Posteriorgram, VowelFrameSets, PHONES, PHONE_COUNT};

/// Random representatives with every formant in a plausible range.
pub fn random_reps<R: Rng>(rng: &mut R) -> VowelRepresentatives {
    VowelRepresentatives {
        f1a: rng.gen_range(500.0..1100.0),
        f2a: rng.gen_range(900.0..1800.0),
        f1i: rng.gen_range(200.0..500.0),
        f2i: rng.gen_range(1700.0..3000.0),
        f1u: rng.gen_range(200.0..500.0),
        f2u: rng.gen_range(500.0..1400.0),
    }
}

/// Triangle area from the cross product of two edge vectors.
pub fn vsa_oracle(r: &VowelRepresentatives) -> f64 {
    let (ax, ay) = (r.f1a, r.f2a);
    let (bx, by) = (r.f1i, r.f2i);
    let (cx, cy) = (r.f1u, r.f2u);
    0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay)).abs()
}

pub fn vai_oracle(r: &VowelRepresentatives) -> f64 {
    let num = r.f1a + r.f2i;
    let den = r.f2a + r.f1i + r.f1u + r.f2u;
    num / den
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9.
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn t_density(x: f64, df: f64) -> f64 {
    let c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * PI).ln();
    (c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// ∫_a^b f by adaptive Simpson.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Student-t CDF by numerically integrating the density from 0.
pub fn t_cdf_oracle(t: f64, df: f64) -> f64 {
    let half = integrate(&|x| t_density(x, df), 0.0, t.abs(), 1e-13);
    if t >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

pub fn two_sided_p_oracle(t: f64, df: f64) -> f64 {
    2.0 * (1.0 - t_cdf_oracle(t.abs(), df))
}

/// r and two-sided p from the textbook sums.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    let t = r * ((n - 2.0) / (1.0 - r * r)).sqrt();
    (r, two_sided_p_oracle(t, n - 2.0))
}

/// Pooled-variance t of mean(a) − mean(b) and its df.
pub fn pooled_t_oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    let (ma, mb) = (mean(a), mean(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let sp2 = (ss(a, ma) + ss(b, mb)) / df;
    ((ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), df)
}

/// Williams' t with K taken as the determinant of the 3×3 correlation
/// matrix, expanded by cofactors.
pub fn williams_oracle(r13: f64, r23: f64, r12: f64, n: usize) -> (f64, f64) {
    let m = [[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let n = n as f64;
    let rbar = 0.5 * (r13 + r23);
    let t = (r13 - r23)
        * ((n - 1.0) * (1.0 + r12)
            / (2.0 * (n - 1.0) / (n - 3.0) * det + rbar * rbar * (1.0 - r12).powi(3)))
        .sqrt();
    (t, two_sided_p_oracle(t, n - 3.0))
}

pub fn softmax_oracle(row: &[f64; PHONE_COUNT]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// Both selection criteria with a full sort for the top-k.
pub fn select_oracle(pg: &Posteriorgram, sets: &PhoneSets, k: usize, alpha: f64) -> VowelFrameSets {
    let mut out = VowelFrameSets::default();
    for (t, row) in pg.logits().iter().enumerate() {
        let p = softmax_oracle(row);
        let mut order: Vec<usize> = (0..PHONE_COUNT).collect();
        order.sort_by(|&a, &b| {
            p[b].partial_cmp(&p[a])
                .unwrap()
                .then_with(|| PHONES[a].cmp(PHONES[b]))
        });
        let top: Vec<&str> = order[..k].iter().map(|&j| PHONES[j]).collect();
        for v in Vowel::ALL {
            let set = sets.get(v);
            let c1 = set.iter().any(|l| *l == pg.decoded()[t]);
            let c2 = top.iter().any(|l| {
                set.iter().any(|s| s == l) && p[PHONES.iter().position(|q| q == l).unwrap()] > alpha
            });
            if c1 || c2 {
                match v {
                    Vowel::A => out.a.push(t),
                    Vowel::I => out.i.push(t),
                    Vowel::U => out.u.push(t),
                }
            }
        }
    }
    out
}

/// Random posteriorgram with coarse logits (many exact ties) and decoded
/// labels drawn from the inventory plus silence.
pub fn random_posteriorgram<R: Rng>(rng: &mut R, frames: usize) -> Posteriorgram {
    let mut times = Vec::with_capacity(frames);
    let mut logits = Vec::with_capacity(frames);
    let mut decoded = Vec::with_capacity(frames);
    let coarse = rng.gen_bool(0.5);
    for t in 0..frames {
        let s = t as f64 * 0.03;
        times.push((s, s + 0.045));
        let mut row = [0.0; PHONE_COUNT];
        for x in row.iter_mut() {
            *x = if coarse {
                rng.gen_range(-3i32..=3) as f64
            } else {
                rng.gen_range(-4.0..4.0)
            };
        }
        // Occasionally make one vowel dominant.
        if rng.gen_bool(0.3) {
            let j = rng.gen_range(0..PHONE_COUNT);
            row[j] += rng.gen_range(1.0..6.0);
        }
        logits.push(row);
        decoded.push(if rng.gen_bool(0.1) {
            "SIL".to_string()
        } else {
            PHONES[rng.gen_range(0..PHONE_COUNT)].to_string()
        });
    }
    Posteriorgram::new(times, logits, decoded).unwrap()
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
