use alloc::vec::Vec;

use rand::Rng;

use crate::math::{floor, ln_1p};
use crate::{Error, Result};

/// Poisson subsampling of `0..n`: each index joins independently with
/// probability `q`. Gaps between members are drawn geometrically, so the
/// cost is proportional to the lot size, not to `n`.
pub fn poisson_sample<R: Rng + ?Sized>(n: usize, q: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("sampling probability {q} outside (0, 1]")));
    }
    if q == 1.0 {
        return Ok((0..n).collect());
    }
    let log_miss = ln_1p(-q);
    let mut lot = Vec::new();
    let mut next = 0usize;
    loop {
        // 1 - U lies in (0, 1], so the log is finite
        let u: f64 = 1.0 - rng.random::<f64>();
        let gap = floor(crate::math::ln(u) / log_miss);
        if !(gap < (n - next) as f64) {
            break;
        }
        next += gap as usize;
        lot.push(next);
        next += 1;
        if next >= n {
            break;
        }
    }
    Ok(lot)
}
