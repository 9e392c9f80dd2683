use crate::par;

/// Dense row-major array over the integer box `lo ..= lo + shape − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    pub(crate) lo: Vec<i64>,
    pub(crate) shape: Vec<usize>,
    pub(crate) strides: Vec<usize>,
    pub(crate) data: Vec<T>,
}

pub(crate) fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for j in (0..shape.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    strides
}

impl<T: Clone> Grid<T> {
    pub fn filled(lo: Vec<i64>, shape: Vec<usize>, value: T) -> Self {
        let strides = strides_for(&shape);
        let len = shape.iter().product();
        Grid {
            lo,
            shape,
            strides,
            data: vec![value; len],
        }
    }
}

impl<T> Grid<T> {
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    /// Inclusive upper corner.
    pub fn hi(&self) -> Vec<i64> {
        self.lo.iter().zip(&self.shape).map(|(&l, &s)| l + s as i64 - 1).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..self.shape.len() {
            let off = x[j] - self.lo[j];
            if off < 0 || off as usize >= self.shape[j] {
                return None;
            }
            idx += off as usize * self.strides[j];
        }
        Some(idx)
    }

    pub fn coords_of(&self, mut idx: usize) -> Vec<i64> {
        let mut x = vec![0; self.shape.len()];
        for j in 0..self.shape.len() {
            x[j] = self.lo[j] + (idx / self.strides[j]) as i64;
            idx %= self.strides[j];
        }
        x
    }

    pub fn get(&self, x: &[i64]) -> Option<&T> {
        self.index_of(x).map(|i| &self.data[i])
    }
}

/// Box size of the convolution of boxes with the given shapes.
pub(crate) fn conv_shape(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().zip(b).map(|(x, y)| x + y - 1).collect()
}

/// `out[x] = Σ_y a[y] · b[x − y]`, gathered per output cell so that every
/// cell is summed in the same order (over the nonzeros of the smaller
/// operand) regardless of how cells are scheduled.
pub(crate) fn convolve<T, Z, N, F>(a: &Grid<T>, b: &Grid<T>, zero: Z, is_zero: N, fma: F) -> Grid<T>
where
    T: Clone + Send + Sync,
    Z: Fn() -> T + Sync + Send,
    N: Fn(&T) -> bool,
    F: Fn(&mut T, &T, &T) + Sync + Send,
{
    let nnz = |g: &Grid<T>| g.data.iter().filter(|v| !is_zero(v)).count();
    let (small, big) = if nnz(a) <= nnz(b) { (a, b) } else { (b, a) };
    let terms: Vec<(Vec<i64>, &T)> = small
        .data
        .iter()
        .enumerate()
        .filter(|(_, v)| !is_zero(v))
        .map(|(i, v)| (small.coords_of(i), v))
        .collect();
    let lo: Vec<i64> = a.lo.iter().zip(&b.lo).map(|(x, y)| x + y).collect();
    let shape = conv_shape(&a.shape, &b.shape);
    let strides = strides_for(&shape);
    let d = shape.len();
    let len: usize = shape.iter().product();
    let data = par::map_range(len, |o| {
        let mut rem = o;
        let mut x = vec![0i64; d];
        for j in 0..d {
            x[j] = lo[j] + (rem / strides[j]) as i64;
            rem %= strides[j];
        }
        let mut acc = zero();
        'terms: for (y, ay) in &terms {
            let mut idx = 0;
            for j in 0..d {
                let off = x[j] - y[j] - big.lo[j];
                if off < 0 || off as usize >= big.shape[j] {
                    continue 'terms;
                }
                idx += off as usize * big.strides[j];
            }
            fma(&mut acc, ay, &big.data[idx]);
        }
        acc
    });
    Grid {
        lo,
        shape,
        strides,
        data,
    }
}
