//! Multi-dimensional complex FFT on row-major arrays (axis 0 fastest).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::Real;

pub(crate) struct FftNd<T: Real> {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
}

impl<T: Real> FftNd<T> {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Unnormalized transform; `inverse` selects the `e^{+i}` kernel.
    pub fn process(&self, data: &mut [Complex<T>], inverse: bool) {
        assert_eq!(data.len(), self.len());
        let plans = if inverse { &self.inverse } else { &self.forward };
        let mut stride = 1;
        for (axis, &n) in self.dims.iter().enumerate() {
            let plan = &plans[axis];
            let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
            if axis == 0 {
                plan.process_with_scratch(data, &mut scratch);
            } else {
                let block = stride * n;
                let mut line = vec![Complex::default(); n];
                for chunk in data.chunks_mut(block) {
                    for offset in 0..stride {
                        for (k, x) in line.iter_mut().enumerate() {
                            *x = chunk[offset + k * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (k, x) in line.iter().enumerate() {
                            chunk[offset + k * stride] = *x;
                        }
                    }
                }
            }
            stride *= n;
        }
    }
}
