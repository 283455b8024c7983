//! Complex discrete Fourier transforms for the periodic direction.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other lengths use an
//! iterative mixed-radix decimation in time over the prime factors of the length.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    #[inline]
    pub fn mul(self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    #[inline]
    pub fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    #[inline]
    pub fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Complex {
        Complex::new(self.re * s, self.im * s)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Fft {
    len: usize,
    /// `exp(-2πik/len)` for `k < len`.
    twiddles: Vec<Complex>,
    bit_reverse: Option<Vec<usize>>,
    /// Prime factors, smallest first, and the input index feeding each position after
    /// the recursive splits; used when `len` is not a power of two.
    factors: Vec<usize>,
    order: Vec<usize>,
}

impl Fft {
    pub fn new(len: usize) -> Self {
        let twiddles = (0..len)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bit_reverse = len.is_power_of_two().then(|| {
            let bits = len.trailing_zeros();
            (0..len)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect()
        });
        let mut factors = Vec::new();
        let mut rest = len;
        while rest > 1 {
            let p = smallest_factor(rest);
            factors.push(p);
            rest /= p;
        }
        let mut order = Vec::with_capacity(len);
        if bit_reverse.is_none() {
            split_order(0, 1, &factors, &mut order);
        }
        Fft { len, twiddles, bit_reverse, factors, order }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Unnormalized forward transform `X_k = Σ x_j exp(-2πijk/N)`.
    pub fn forward(&self, data: &mut [Complex]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex]) {
        self.transform(data, true);
        let scale = 1.0 / self.len as f64;
        for x in data.iter_mut() {
            *x = x.scale(scale);
        }
    }

    fn transform(&self, data: &mut [Complex], inverse: bool) {
        debug_assert_eq!(data.len(), self.len);
        match &self.bit_reverse {
            Some(rev) => {
                for i in 0..self.len {
                    let j = rev[i];
                    if i < j {
                        data.swap(i, j);
                    }
                }
                let mut size = 2;
                while size <= self.len {
                    let half = size / 2;
                    let stride = self.len / size;
                    for chunk in data.chunks_exact_mut(size) {
                        let (lo, hi) = chunk.split_at_mut(half);
                        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                            let w = self.twiddles[k * stride];
                            let w = if inverse { Complex::new(w.re, -w.im) } else { w };
                            let t = b.mul(w);
                            *b = a.sub(t);
                            *a = a.add(t);
                        }
                    }
                    size *= 2;
                }
            }
            None => {
                let mut work: Vec<Complex> = self.order.iter().map(|&i| data[i]).collect();
                let mut scratch = Vec::new();
                let mut m = 1;
                for &p in self.factors.iter().rev() {
                    let n = p * m;
                    let step = self.len / n;
                    let coarse = self.len / p;
                    scratch.resize(p, Complex::ZERO);
                    let conj = |w: Complex| if inverse { Complex::new(w.re, -w.im) } else { w };
                    for block in work.chunks_exact_mut(n) {
                        // X[k + q m] = Σ_r W_n^{r(k + q m)} Y_r[k]
                        for k in 0..m {
                            if p == 2 {
                                let w = conj(self.twiddles[k * step]);
                                let t = block[m + k].mul(w);
                                let a = block[k];
                                block[k] = a.add(t);
                                block[k + m] = a.sub(t);
                                continue;
                            }
                            for (r, y) in scratch.iter_mut().enumerate() {
                                *y = block[r * m + k].mul(conj(self.twiddles[r * k * step]));
                            }
                            for q in 0..p {
                                let mut acc = Complex::ZERO;
                                let mut index = 0;
                                for y in scratch.iter() {
                                    acc = acc.add(y.mul(conj(self.twiddles[index * coarse])));
                                    index += q;
                                    if index >= p {
                                        index -= p;
                                    }
                                }
                                block[k + q * m] = acc;
                            }
                        }
                    }
                    m = n;
                }
                data.copy_from_slice(&work);
            }
        }
    }
}

/// Input indices in the order the leaves of the decimation-in-time recursion occupy.
fn split_order(offset: usize, stride: usize, factors: &[usize], order: &mut Vec<usize>) {
    match factors.split_first() {
        None => order.push(offset),
        Some((&p, rest)) => {
            for r in 0..p {
                split_order(offset + r * stride, stride * p, rest, order);
            }
        }
    }
}

fn smallest_factor(n: usize) -> usize {
    (2..).take_while(|d| d * d <= n).find(|d| n % d == 0).unwrap_or(n)
}
