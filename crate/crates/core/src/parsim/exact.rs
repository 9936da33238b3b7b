//! Order-independent floating-point summation.
//!
//! Partial sums computed on different shard layouts must reduce to the same
//! bits, otherwise a partition would depend on the simulated rank count. An
//! [`ExactSum`] keeps the sum as a wide fixed-point integer covering the whole
//! `f64` range (a "superaccumulator"), so addition is associative and the
//! rounded result depends only on the multiset of inputs.

/// Bits per limb. Limbs are stored in `i64`, leaving 31 bits of carry
/// headroom.
const LIMB_BITS: u32 = 32;
/// Bit 0 of limb 0 is 2^-1074, the smallest subnormal. The largest finite
/// double ends near bit 2098, so 68 limbs leave room for carries.
const LIMBS: usize = 68;
const MIN_EXP: i32 = -1074;
/// Renormalize before any limb could overflow.
const MAX_PENDING: u32 = 1 << 29;

#[derive(Clone)]
pub struct ExactSum {
    limbs: [i64; LIMBS],
    pending: u32,
}

impl Default for ExactSum {
    fn default() -> Self {
        ExactSum {
            limbs: [0; LIMBS],
            pending: 0,
        }
    }
}

impl std::fmt::Debug for ExactSum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ExactSum({})", self.value())
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a finite value exactly. Non-finite values panic.
    pub fn add(&mut self, x: f64) {
        assert!(x.is_finite(), "ExactSum only accepts finite values");
        if x == 0.0 {
            return;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if biased == 0 {
            (frac, MIN_EXP)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let offset = (exp - MIN_EXP) as u32;
        let limb = (offset / LIMB_BITS) as usize;
        let shifted = (mantissa as u128) << (offset % LIMB_BITS);
        for i in 0..3 {
            let part = ((shifted >> (LIMB_BITS * i as u32)) & 0xffff_ffff) as i64;
            if part != 0 {
                if negative {
                    self.limbs[limb + i] -= part;
                } else {
                    self.limbs[limb + i] += part;
                }
            }
        }
        self.pending += 1;
        if self.pending >= MAX_PENDING {
            self.normalize();
        }
    }

    /// Adds another accumulator exactly.
    pub fn merge(&mut self, other: &ExactSum) {
        self.normalize();
        let mut other = other.clone();
        other.normalize();
        for (a, b) in self.limbs.iter_mut().zip(other.limbs.iter()) {
            *a += b;
        }
        self.normalize();
    }

    /// Propagates carries so every limb except the top lies in `[0, 2^32)`.
    /// The representation is then unique for the exact value.
    fn normalize(&mut self) {
        for i in 0..LIMBS - 1 {
            let carry = self.limbs[i] >> LIMB_BITS;
            self.limbs[i] -= carry << LIMB_BITS;
            self.limbs[i + 1] += carry;
        }
        self.pending = 0;
    }

    /// The sum rounded to `f64`. Deterministic in the exact value.
    pub fn value(&self) -> f64 {
        let mut norm = self.clone();
        norm.normalize();
        // After normalization the sign lives in the top limb alone.
        let negative = norm.limbs[LIMBS - 1] < 0;
        if negative {
            for l in norm.limbs.iter_mut() {
                *l = -*l;
            }
            norm.normalize();
        }
        let limbs = norm.limbs;
        let Some(top) = limbs.iter().rposition(|&l| l != 0) else {
            return 0.0;
        };
        // Fold the top three limbs (64+ significant bits) into an integer
        // window and scale once; lower limbs sit below the rounding position.
        let low = top.saturating_sub(2);
        let mut window: u128 = 0;
        for i in (low..=top).rev() {
            window = (window << LIMB_BITS) + limbs[i] as u128;
        }
        let magnitude = scale_pow2(window as f64, low as i32 * LIMB_BITS as i32 + MIN_EXP);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// `x * 2^e` without intermediate overflow/underflow for moderate `x`.
fn scale_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

impl FromIterator<f64> for ExactSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = ExactSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
