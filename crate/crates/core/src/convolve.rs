//! Causal filtering and linear convolution.
//!
//! Direct evaluation is used for short inputs or short filters (exactly
//! reproducible, cache-friendly); FFT takes over for long filter/long input
//! pairs where O(n*K) is prohibitive. The dispatch rule is a fixed function
//! of the lengths, so a given call is bit-reproducible across runs.

use rustfft::{num_complex::Complex, FftPlanner};

const DIRECT_INPUT_MAX: usize = 4096;
const DIRECT_FILTER_MAX: usize = 64;

/// Apply the causal filter `c` to `x`: out[t] = sum_{i<=min(t,K)} c[i]*x[t-i].
/// Output has the same length as `x`; `x` is treated as starting fresh (zero
/// presample).
pub fn filter(c: &[f64], x: &[f64]) -> Vec<f64> {
    if x.len() <= DIRECT_INPUT_MAX || c.len() <= DIRECT_FILTER_MAX {
        filter_direct(c, x)
    } else {
        filter_fft(c, x)
    }
}

/// Apply three causal filters of a common length in one sweep over `x`.
/// The hot path for residual/score/Hessian evaluation on a fit window.
pub fn filter3(c0: &[f64], c1: &[f64], c2: &[f64], x: &[f64]) -> [Vec<f64>; 3] {
    assert_eq!(c0.len(), c1.len());
    assert_eq!(c0.len(), c2.len());
    if x.len() > DIRECT_INPUT_MAX && c0.len() > DIRECT_FILTER_MAX {
        return [filter_fft(c0, x), filter_fft(c1, x), filter_fft(c2, x)];
    }
    let n = x.len();
    let kk = c0.len().min(n);
    let mut y0 = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut y2 = vec![0.0; n];
    for i in 0..kk {
        let (a, b, c) = (c0[i], c1[i], c2[i]);
        let xs = &x[..n - i];
        let (s0, s1, s2) = (&mut y0[i..], &mut y1[i..], &mut y2[i..]);
        for t in 0..xs.len() {
            let xv = xs[t];
            s0[t] += a * xv;
            s1[t] += b * xv;
            s2[t] += c * xv;
        }
    }
    [y0, y1, y2]
}

pub fn filter_direct(c: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let kk = c.len().min(n);
    let mut y = vec![0.0; n];
    for i in 0..kk {
        let ci = c[i];
        if ci == 0.0 {
            continue;
        }
        let xs = &x[..n - i];
        let ys = &mut y[i..];
        for t in 0..xs.len() {
            ys[t] += ci * xs[t];
        }
    }
    y
}

fn filter_fft(c: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let kk = c.len().min(n);
    let mut out = convolve_full(&c[..kk], x);
    out.truncate(n);
    out
}

/// Full linear convolution, length a.len()+b.len()-1. Small products run
/// directly; large ones through a power-of-two complex FFT.
pub fn convolve_full(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if (a.len().min(b.len()) <= DIRECT_FILTER_MAX) || out_len <= DIRECT_INPUT_MAX {
        let mut y = vec![0.0; out_len];
        // iterate the shorter side in the outer loop
        let (s, l, sl) = if a.len() <= b.len() { (a, b, 0) } else { (b, a, 0) };
        let _ = sl;
        for (i, &si) in s.iter().enumerate() {
            if si == 0.0 {
                continue;
            }
            for (j, &lj) in l.iter().enumerate() {
                y[i + j] += si * lj;
            }
        }
        return y;
    }
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fa.resize(size, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fb.resize(size, Complex::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (va, vb) in fa.iter_mut().zip(fb.iter()) {
        *va *= vb;
    }
    ifft.process(&mut fa);
    let scale = 1.0 / size as f64;
    fa[..out_len].iter().map(|v| v.re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_matches_hand_case() {
        let y = filter_direct(&[1.0, -0.5], &[2.0, 4.0, 6.0]);
        assert_eq!(y, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn fft_matches_direct() {
        // force both paths on the same data
        let mut rng = crate::rng::stream_rng(3, 0);
        let c: Vec<f64> = (0..500)
            .map(|_| crate::rng::Innovations::Normal.draw(&mut rng))
            .collect();
        let x: Vec<f64> = (0..6000)
            .map(|_| crate::rng::Innovations::Normal.draw(&mut rng))
            .collect();
        let d = filter_direct(&c, &x);
        let f = super::filter_fft(&c, &x);
        let scale: f64 = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in d.iter().zip(f.iter()) {
            assert!((a - b).abs() <= 1e-11 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn filter3_consistent_with_single() {
        let mut rng = crate::rng::stream_rng(4, 0);
        let x: Vec<f64> = (0..300)
            .map(|_| crate::rng::Innovations::Normal.draw(&mut rng))
            .collect();
        let c0: Vec<f64> = (0..300).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let c1: Vec<f64> = (0..300).map(|i| (-0.5f64).powi(i as i32 % 7)).collect();
        let c2: Vec<f64> = (0..300).map(|i| (i as f64).sin()).collect();
        let [y0, y1, y2] = filter3(&c0, &c1, &c2, &x);
        assert_eq!(y0, filter_direct(&c0, &x));
        assert_eq!(y1, filter_direct(&c1, &x));
        assert_eq!(y2, filter_direct(&c2, &x));
    }

    #[test]
    fn convolve_full_small() {
        let y = convolve_full(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(y, vec![3.0, 10.0, 13.0, 10.0]);
    }
}
