use crate::scalar::Real;

/// Neumaier-compensated running sum.
///
/// Terms are folded strictly in the order they are pushed; the result of a
/// fixed sequence is reproducible bit-for-bit, and reorderings agree to a
/// few ulps of the total.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one.
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}
