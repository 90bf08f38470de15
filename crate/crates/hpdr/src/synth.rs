//! Seeded synthetic fields for tests and benchmarks.

use hpdr_core::tensor::{element_count, strides};
use hpdr_core::{DType, Result, TensorData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Sum of a few low-frequency sinusoids with seeded phases.
    Smooth,
    /// Independent uniform values in [-1, 1).
    Random,
    Constant,
    /// Linear in every coordinate.
    Ramp,
}

impl FieldKind {
    pub const ALL: [FieldKind; 4] = [
        FieldKind::Smooth,
        FieldKind::Random,
        FieldKind::Constant,
        FieldKind::Ramp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Smooth => "smooth",
            FieldKind::Random => "random",
            FieldKind::Constant => "constant",
            FieldKind::Ramp => "ramp",
        }
    }
}

pub fn field(kind: FieldKind, dims: &[usize], dtype: DType, seed: u64) -> Result<TensorData> {
    let n = element_count(dims);
    let st = strides(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = match kind {
        FieldKind::Smooth => {
            let phase: Vec<f64> = (0..3 * dims.len())
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect();
            (0..n)
                .map(|i| {
                    let mut s = 0.0;
                    for (d, (&stride, &ext)) in st.iter().zip(dims).enumerate() {
                        let x = ((i / stride) % ext) as f64 / ext as f64;
                        for h in 0..3 {
                            let f = (h + 1) as f64;
                            s += (std::f64::consts::TAU * f * x + phase[3 * d + h]).sin() / f;
                        }
                    }
                    s
                })
                .collect()
        }
        FieldKind::Random => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        FieldKind::Constant => vec![rng.random_range(-10.0..10.0); n],
        FieldKind::Ramp => {
            let slope: Vec<f64> = dims.iter().map(|_| rng.random_range(-2.0..2.0)).collect();
            (0..n)
                .map(|i| {
                    st.iter()
                        .zip(dims)
                        .zip(&slope)
                        .map(|((&s, &e), &a)| a * ((i / s) % e) as f64)
                        .sum()
                })
                .collect()
        }
    };
    TensorData::from_f64_as(dims.to_vec(), dtype, values)
}
