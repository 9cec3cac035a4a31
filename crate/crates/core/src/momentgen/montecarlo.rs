use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::region::RegionKind;
use super::{MomentSequence, Provenance};
use crate::error::{Error, Result};
use crate::multi_index::enumerate_basis;

/// Uniform sampling in the bounding box; standard errors go to the provenance.
pub(crate) fn region_moments(kind: &RegionKind, order: usize, samples: u64, seed: u64) -> Result<MomentSequence> {
    if samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
    }
    let n = kind.dim();
    let constraints = kind.constraints()?;
    let bbox = kind.bounding_box();
    let volume: f64 = bbox.iter().map(|[a, b]| b - a).product();
    let basis = enumerate_basis(n, order)?;
    // each monomial is its parent's value times one coordinate
    let parents: Vec<(usize, usize)> = basis
        .iter()
        .skip(1)
        .map(|a| {
            let i = a.exponents().iter().position(|&e| e > 0).expect("nonzero index");
            (a.sub_unit(i).expect("positive exponent").rank(), i)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; basis.len()];
    let mut sum_sq = vec![0.0; basis.len()];
    let mut x = vec![0.0; n];
    let mut mono = vec![0.0; basis.len()];
    for _ in 0..samples {
        for (xi, [a, b]) in x.iter_mut().zip(&bbox) {
            *xi = a + (b - a) * rng.random::<f64>();
        }
        if !constraints.iter().all(|c| c.eval(&x) <= 0.0) {
            continue;
        }
        mono[0] = 1.0;
        for (k, &(p, i)) in parents.iter().enumerate() {
            mono[k + 1] = mono[p] * x[i];
        }
        for ((s, q), m) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&mono) {
            *s += m;
            *q += m * m;
        }
    }
    let ns = samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| volume * s / ns).collect();
    let std_errors = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, q)| {
            let mean = s / ns;
            let var = (q / ns - mean * mean).max(0.0) * ns / (ns - 1.0);
            volume * (var / ns).sqrt()
        })
        .collect();
    MomentSequence::new(
        n,
        order,
        values,
        Provenance::MonteCarlo {
            samples,
            seed,
            std_errors,
        },
    )
}
