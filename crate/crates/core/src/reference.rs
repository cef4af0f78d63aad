//! Reference quantities computed by routes independent of the simulation
//! pipeline, used by the verification entry points and the test suites.

use std::f64::consts::PI;

/// Symbol error rate of M-PSK at the given signal amplitude under circularly
/// symmetric complex Gaussian noise of total variance `noise_variance`
/// (variance `noise_variance / 2` per real component), computed by numerical
/// quadrature of the received-phase density over the correct decision sector.
///
/// The phase density of `A + n` has the closed radial integral
///
/// ```text
/// p(theta) = exp(-(A sin theta)^2 / s^2) / (pi s^2)
///          * [ s^2/2 * exp(-(A cos theta)^2 / s^2)
///            + A cos theta * s sqrt(pi)/2 * (1 + erf(A cos theta / s)) ]
/// ```
///
/// with `s^2` the total noise variance; the sector integral is then done by
/// composite Simpson quadrature.
pub fn psk_ser_reference(order: usize, amplitude: f64, noise_variance: f64) -> f64 {
    assert!(order >= 2, "PSK order must be at least 2");
    assert!(amplitude >= 0.0 && noise_variance >= 0.0);
    if noise_variance == 0.0 {
        // Zero noise: exact detection, unless there is no signal at all and
        // the phase is uniform.
        return if amplitude > 0.0 {
            0.0
        } else {
            (order as f64 - 1.0) / order as f64
        };
    }
    let sector = PI / order as f64;
    let correct = simpson(-sector, sector, 4096, |theta| {
        phase_density(theta, amplitude, noise_variance)
    });
    (1.0 - correct).clamp(0.0, 1.0)
}

fn phase_density(theta: f64, amplitude: f64, noise_variance: f64) -> f64 {
    let s = noise_variance.sqrt();
    let (sin_t, cos_t) = theta.sin_cos();
    let cross = amplitude * cos_t;
    let radial = noise_variance / 2.0 * (-(cross * cross) / noise_variance).exp()
        + cross * s * PI.sqrt() / 2.0 * (1.0 + libm::erf(cross / s));
    (-(amplitude * sin_t).powi(2) / noise_variance).exp() / (PI * noise_variance) * radial
}

fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    debug_assert!(panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Spearman rank correlation with average ranks on ties. Returns a value in
/// [-1, 1]; used for monotone-trend assertions.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    assert!(x.len() >= 2, "spearman needs at least two points");
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
