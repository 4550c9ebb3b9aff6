//! Seeded generators for random states, measurements and channels.
//!
//! All generators take an explicit RNG so every run can be replayed from a seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, ToleranceConfig};
use crate::qobjects::{KrausChannel, MeasurementAssemblage, Povm};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_complex<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    random_complex(d, d, rng).hermitian_part()
}

/// Columns of a Ginibre matrix orthonormalised by modified Gram-Schmidt.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows, "an isometry needs rows >= cols");
    let g = random_complex(rows, cols, rng);
    let mut cols_out: Vec<ComplexMatrix> = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut v = g.column_vector(c);
        for q in &cols_out {
            let overlap = q.hs_inner(&v);
            v.add_scaled(q, -overlap);
        }
        let n = v.frobenius_norm();
        cols_out.push(v.scale(1.0 / n));
    }
    ComplexMatrix::from_fn(rows, cols, |r, c| cols_out[c][(r, 0)])
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry(d, d, rng)
}

/// Density matrix `G G† / tr(G G†)` with `G` a `d×rank` Ginibre matrix.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_complex(d, rank, rng);
    let m = g.matmul(&g.adjoint());
    let t = m.trace().re;
    m.scale(1.0 / t).hermitian_part()
}

/// Random POVM: `S^{-1/2} W_a S^{-1/2}` with Wishart `W_a` and `S = Σ W_a`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, outcomes: usize, rng: &mut R) -> Povm {
    let cfg = ToleranceConfig::default();
    let ws: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = random_complex(d, d, rng);
            g.matmul(&g.adjoint())
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    for w in &ws {
        total += w;
    }
    let r = crate::linalg::pinv_sqrt_on_support(&total.hermitian_part(), &cfg).expect("Wishart sum is PSD");
    let effects: Vec<(String, ComplexMatrix)> = ws
        .iter()
        .enumerate()
        .map(|(i, w)| (i.to_string(), r.sandwich(w).hermitian_part()))
        .collect();
    Povm::new(effects, &cfg).expect("construction yields a POVM")
}

pub fn random_measurement_assemblage<R: Rng + ?Sized>(
    d: usize,
    settings: usize,
    outcomes: usize,
    rng: &mut R,
) -> MeasurementAssemblage {
    let povms: Vec<(String, Povm)> = (0..settings)
        .map(|x| (x.to_string(), random_povm(d, outcomes, rng)))
        .collect();
    MeasurementAssemblage::new(povms).expect("settings share dimension")
}

/// Channel with `kraus_count` Kraus operators cut from a random isometry.
///
/// Generic draws have Choi rank `min(kraus_count, d_in·d_out)`.
pub fn random_channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, kraus_count: usize, rng: &mut R) -> KrausChannel {
    let v = random_isometry(kraus_count * d_out, d_in, rng);
    let kraus = (0..kraus_count)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |r, c| v[(k * d_out + r, c)]))
        .collect();
    KrausChannel::new(kraus, &ToleranceConfig::default()).expect("isometry blocks are trace preserving")
}

/// Uniform point in the closed unit ball.
pub fn random_bloch_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        ];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v;
        }
    }
}
