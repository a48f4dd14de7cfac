//! Iterative radix-2 FFT, enough for power-of-two analysis windows.

/// Smallest power of two >= n.
pub fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

/// In-place complex FFT. `re.len()` must be a power of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (w_re, w_im) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let (mut cur_re, mut cur_im) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let even = (re[i + k], im[i + k]);
                let odd = (re[i + k + len / 2], im[i + k + len / 2]);
                let t_re = odd.0 * cur_re - odd.1 * cur_im;
                let t_im = odd.0 * cur_im + odd.1 * cur_re;
                re[i + k] = even.0 + t_re;
                im[i + k] = even.1 + t_im;
                re[i + k + len / 2] = even.0 - t_re;
                im[i + k + len / 2] = even.1 - t_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// In-place inverse FFT (conjugate trick), normalized by 1/n.
pub fn ifft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len() as f64;
    for v in im.iter_mut() {
        *v = -*v;
    }
    fft_in_place(re, im);
    for v in re.iter_mut() {
        *v /= n;
    }
    for v in im.iter_mut() {
        *v = -*v / n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive O(n^2) DFT, the independence oracle for the fast path.
    fn dft(signal: &[f64]) -> Vec<(f64, f64)> {
        let n = signal.len();
        (0..n)
            .map(|k| {
                let mut acc = (0.0, 0.0);
                for (t, &x) in signal.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
                    acc.0 += x * ang.cos();
                    acc.1 += x * ang.sin();
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let signal: Vec<f64> = (0..64)
            .map(|i| ((i * 7 + 3) % 13) as f64 / 13.0 - 0.5)
            .collect();
        let expected = dft(&signal);
        let mut re = signal.clone();
        let mut im = vec![0.0; 64];
        fft_in_place(&mut re, &mut im);
        for k in 0..64 {
            assert!((re[k] - expected[k].0).abs() < 1e-9);
            assert!((im[k] - expected[k].1).abs() < 1e-9);
        }
    }

    #[test]
    fn round_trips_through_inverse() {
        let signal: Vec<f64> = (0..128).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut re = signal.clone();
        let mut im = vec![0.0; 128];
        fft_in_place(&mut re, &mut im);
        ifft_in_place(&mut re, &mut im);
        for (a, b) in re.iter().zip(signal.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
