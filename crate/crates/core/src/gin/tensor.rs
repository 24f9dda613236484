/// Dense row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Tensor {
        assert_eq!(data.len(), rows * cols, "tensor data length");
        Tensor { rows, cols, data }
    }

    pub fn scalar(x: f64) -> Tensor {
        Tensor::from_vec(1, 1, vec![x])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on a non-scalar");
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn fill(&mut self, x: f64) {
        self.data.fill(x);
    }

    /// `a @ b`
    pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.cols, b.rows, "matmul shape");
        let mut out = Tensor::zeros(a.rows, b.cols);
        for i in 0..a.rows {
            let o = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (k, &x) in a.row(i).iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                for (y, &w) in o.iter_mut().zip(b.row(k)) {
                    *y += x * w;
                }
            }
        }
        out
    }

    /// `a @ bᵀ`
    pub fn matmul_bt(a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.cols, b.cols, "matmul_bt shape");
        let mut out = Tensor::zeros(a.rows, b.rows);
        for i in 0..a.rows {
            let ar = a.row(i);
            for j in 0..b.rows {
                out.data[i * b.rows + j] = ar.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
            }
        }
        out
    }

    /// `aᵀ @ b`
    pub fn matmul_at(a: &Tensor, b: &Tensor) -> Tensor {
        assert_eq!(a.rows, b.rows, "matmul_at shape");
        let mut out = Tensor::zeros(a.cols, b.cols);
        for r in 0..a.rows {
            let br = b.row(r);
            for (i, &x) in a.row(r).iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let o = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (y, &w) in o.iter_mut().zip(br) {
                    *y += x * w;
                }
            }
        }
        out
    }
}

/// Sum in ascending value order, so the result does not depend on the order
/// the terms were produced in.
pub fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_variants_agree() {
        let a = Tensor::from_vec(2, 3, vec![1., 2., 3., 4., 5., 6.]);
        let b = Tensor::from_vec(3, 2, vec![7., 8., 9., 10., 11., 12.]);
        let c = Tensor::matmul(&a, &b);
        assert_eq!(c.data, vec![58., 64., 139., 154.]);
        let bt = Tensor::from_vec(2, 3, vec![7., 9., 11., 8., 10., 12.]);
        assert_eq!(Tensor::matmul_bt(&a, &bt), c);
        let at = Tensor::from_vec(3, 2, vec![1., 4., 2., 5., 3., 6.]);
        assert_eq!(Tensor::matmul_at(&at, &b), c);
    }

    #[test]
    fn sorted_sum_is_order_free() {
        let mut a = [1e16, 1.0, -1e16, 3.0];
        let mut b = [3.0, -1e16, 1.0, 1e16];
        assert_eq!(sorted_sum(&mut a).to_bits(), sorted_sum(&mut b).to_bits());
    }
}
