// Copyright 2026 Lightcone Lab Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unnormalized forward/inverse FFTs over row-major `P^d` arrays (d = 1, 2).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub struct FftNd {
    points: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("points", &self.points)
            .field("dim", &self.dim)
            .finish()
    }
}

impl FftNd {
    pub fn new(points: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            points,
            dim,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Inverse transform including the `1/P^d` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let p = self.points;
        // rows are contiguous in both layouts
        plan.process(data);
        if self.dim == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); p];
            for c in 0..p {
                for r in 0..p {
                    column[r] = data[r * p + c];
                }
                plan.process(&mut column);
                for r in 0..p {
                    data[r * p + c] = column[r];
                }
            }
        }
    }
}
