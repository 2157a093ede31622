//! Compensated and deterministic summation.
//!
//! All long sums in the crate go through [`Neumaier`] or [`CNeumaier`]. Parallel
//! reductions split the index range into a fixed number of contiguous parts and
//! combine the per-part accumulators in part order, so the result depends only on
//! the partition count and never on scheduling.

use num_complex::Complex64;

/// Neumaier (improved Kahan) accumulator for `f64`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Neumaier) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Complex accumulator built from two [`Neumaier`] lanes.
#[derive(Clone, Copy, Debug, Default)]
pub struct CNeumaier {
    re: Neumaier,
    im: Neumaier,
}

impl CNeumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn merge(&mut self, other: &CNeumaier) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn sum_f64<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

pub fn sum_c64<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
    let mut acc = CNeumaier::new();
    for z in it {
        acc.add(z);
    }
    acc.value()
}

/// Recursive pairwise summation.
pub fn pairwise(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}

/// Splits `0..n` into `parts` contiguous ranges of near-equal length.
pub fn partition(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.max(1).min(n.max(1));
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for i in 0..parts {
        let len = base + usize::from(i < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Maps `f` over the partition of `0..n` on up to `workers` threads and returns
/// the per-part results in part order.
pub fn map_parts<T, F>(n: usize, parts: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let ranges = partition(n, parts);
    if workers <= 1 || ranges.len() <= 1 {
        return ranges.into_iter().map(&f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..ranges.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(ranges.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= ranges.len() {
                    break;
                }
                let v = f(ranges[i].clone());
                results.lock().unwrap()[i] = Some(v);
            });
        }
    });
    slots.into_iter().map(|v| v.expect("part evaluated")).collect()
}

/// Deterministic partitioned complex sum of `term(i)` for `i < n`.
pub fn partitioned_sum_c64<F>(n: usize, parts: usize, workers: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let accs = map_parts(n, parts, workers, |r| {
        let mut acc = CNeumaier::new();
        for i in r {
            acc.add(term(i));
        }
        acc
    });
    let mut total = CNeumaier::new();
    for a in &accs {
        total.merge(a);
    }
    total.value()
}
