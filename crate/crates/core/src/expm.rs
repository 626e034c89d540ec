//! Matrix exponential by scaling and squaring of a truncated Taylor series,
//! carried out in double-double arithmetic and rounded to `f64` at the end.
//! Entries stay within a few ulps even after a dozen squarings.

use nalgebra::DMatrix;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    #[cfg(test)]
    fn mul_f64(self, f: f64) -> Dd {
        let (p, e) = two_prod(self.hi, f);
        quick_two_sum(p, e + self.lo * f)
    }

    /// `1/k` to double-double accuracy.
    fn recip(k: f64) -> Dd {
        let hi = 1.0 / k;
        Dd {
            hi,
            lo: (-hi).mul_add(k, 1.0) / k,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Square matrix of [`Dd`] entries, row-major.
#[derive(Clone)]
struct DdMatrix {
    n: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    fn identity(n: usize) -> Self {
        let mut data = vec![Dd::ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = Dd::ONE;
        }
        DdMatrix { n, data }
    }

    fn mul(&self, o: &DdMatrix) -> DdMatrix {
        let n = self.n;
        let mut data = vec![Dd::ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.hi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] = data[i * n + j].add(a.mul(o.data[k * n + j]));
                }
            }
        }
        DdMatrix { n, data }
    }

    fn norm_inf(&self) -> f64 {
        self.data
            .chunks(self.n)
            .map(|r| r.iter().map(|x| x.hi.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Scaled-argument bound for the Taylor kernel.
const TAYLOR_RADIUS: f64 = 0.25;
const MAX_TERMS: usize = 60;

/// `e^{At}` for a finite square `a` and finite `t`.
pub(crate) fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let squarings = if norm > TAYLOR_RADIUS {
        (norm / TAYLOR_RADIUS).log2().ceil() as i32
    } else {
        0
    };
    let scale = 2f64.powi(-squarings);

    // X = A t 2^{-s}, exact up to the product a_ij·t.
    let mut x = DdMatrix {
        n,
        data: Vec::with_capacity(n * n),
    };
    for i in 0..n {
        for j in 0..n {
            let (p, e) = two_prod(a[(i, j)], t);
            x.data.push(Dd {
                hi: p * scale,
                lo: e * scale,
            });
        }
    }

    let mut sum = DdMatrix::identity(n);
    let mut term = DdMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        let inv_k = Dd::recip(k as f64);
        term = term.mul(&x);
        for v in term.data.iter_mut() {
            *v = v.mul(inv_k);
        }
        for (s, v) in sum.data.iter_mut().zip(&term.data) {
            *s = s.add(*v);
        }
        if term.norm_inf() <= 1e-34 * sum.norm_inf() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    DMatrix::from_fn(n, n, |i, j| sum.data[i * n + j].to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(got: f64, want: f64) -> f64 {
        if want == 0.0 {
            got.abs()
        } else {
            ((got - want) / want).abs()
        }
    }

    #[test]
    fn double_double_keeps_low_part() {
        let third = Dd::recip(3.0);
        let back = third.mul_f64(3.0);
        assert_eq!(back.to_f64(), 1.0);
        assert!((back.hi - 1.0).abs() + back.lo.abs() < 1e-31);
        let tiny = Dd::ONE.add(Dd { hi: 1e-20, lo: 0.0 });
        assert_eq!(tiny.hi, 1.0);
        assert_eq!(tiny.lo, 1e-20);
    }

    #[test]
    fn jordan_block_entrywise() {
        // exp(t [[l, 1], [0, l]]) = e^{lt} [[1, t], [0, 1]]
        for &(l, t) in &[(-0.3, 80.0), (0.05, 80.0), (0.0, 1e3), (-2.0, 7.5)] {
            let a = DMatrix::from_row_slice(2, 2, &[l, 1.0, 0.0, l]);
            let e = expm(&a, t);
            let el = (l * t).exp();
            assert!(rel_err(e[(0, 0)], el) < 1e-14, "{l} {t}");
            assert!(rel_err(e[(0, 1)], t * el) < 1e-14);
            assert_eq!(e[(1, 0)], 0.0);
            assert!(rel_err(e[(1, 1)], el) < 1e-14);
        }
    }

    #[test]
    fn rotation_entrywise() {
        let w = 1.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        for &t in &[0.1, 3.0, 80.0] {
            let e = expm(&a, t);
            let (s, c) = (w * t).sin_cos();
            assert!((e[(0, 0)] - c).abs() < 1e-14);
            assert!((e[(0, 1)] - s).abs() < 1e-14);
            assert!((e[(1, 0)] + s).abs() < 1e-14);
        }
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_pade(entries in proptest::collection::vec(-1.0f64..1.0, 16), t in -2.0f64..2.0) {
            let a = DMatrix::from_row_slice(4, 4, &entries);
            let ours = expm(&a, t);
            let pade = (&a * t).exp();
            let scale = pade.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let diff = (ours - pade).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            proptest::prop_assert!(diff <= 1e-12 * scale, "{}", diff);
        }
    }

    #[test]
    fn zero_time_and_zero_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(expm(&a, 0.0), DMatrix::identity(2, 2));
        assert_eq!(expm(&DMatrix::zeros(3, 3), 5.0), DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_and_negative_time() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -1.25, 2.0]));
        let e = expm(&a, -3.0);
        for (i, d) in [0.5f64, -1.25, 2.0].iter().enumerate() {
            assert!(rel_err(e[(i, i)], (-3.0 * d).exp()) < 1e-14);
        }
    }
}
