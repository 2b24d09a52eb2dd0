//! Foundational statistical quantities.
//!
//! Everything downstream is built from a handful of pieces: the cumulative
//! sample state of the two populations, the Wald interval for the difference
//! of proportions and its half-width, the Bernoulli variance proxy
//! `tau = p(1-p)`, the standard-normal quantile, and a minimax proportion
//! estimate that is strictly inside `(0,1)` so that planning formulas never
//! divide by zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the statistical layer.
#[derive(Debug, Error, PartialEq)]
pub enum StatError {
    /// Tail mass must lie strictly between 0 and 1.
    #[error("alpha must be in (0,1), got {0}")]
    AlphaOutOfRange(f64),

    /// Half-width bound must be positive and finite.
    #[error("epsilon must be positive and finite, got {0}")]
    EpsilonOutOfRange(f64),

    /// Batch capacity must be at least 1.
    #[error("batch capacity must be >= 1")]
    BatchZero,

    /// Per-observation costs must be positive and finite.
    #[error("observation cost must be positive and finite, got {0}")]
    CostOutOfRange(f64),

    /// Success count exceeds the observation count.
    #[error("success count {successes} exceeds observation count {observations}")]
    CountsInconsistent { successes: u64, observations: u64 },

    /// An operation needed at least one observation from each population.
    #[error("population {0} has no observations")]
    EmptySample(char),

    /// A proportion argument left `[0,1]` or was not finite.
    #[error("proportion must be in [0,1], got {0}")]
    ProportionOutOfRange(f64),
}

/// Cumulative successes and observation counts for both populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleState {
    pub w_x: u64,
    pub m_x: u64,
    pub w_y: u64,
    pub m_y: u64,
}

impl SampleState {
    /// Build a state, checking `w <= m` for both populations.
    pub fn new(w_x: u64, m_x: u64, w_y: u64, m_y: u64) -> Result<Self, StatError> {
        if w_x > m_x {
            return Err(StatError::CountsInconsistent {
                successes: w_x,
                observations: m_x,
            });
        }
        if w_y > m_y {
            return Err(StatError::CountsInconsistent {
                successes: w_y,
                observations: m_y,
            });
        }
        Ok(Self { w_x, m_x, w_y, m_y })
    }

    /// Sample mean of population X, if any observations exist.
    pub fn mean_x(&self) -> Option<f64> {
        (self.m_x > 0).then(|| self.w_x as f64 / self.m_x as f64)
    }

    /// Sample mean of population Y, if any observations exist.
    pub fn mean_y(&self) -> Option<f64> {
        (self.m_y > 0).then(|| self.w_y as f64 / self.m_y as f64)
    }

    /// Record `n` observations with `successes` successes from population X.
    pub fn record_x(&mut self, successes: u64, n: u64) {
        debug_assert!(successes <= n);
        self.w_x += successes;
        self.m_x += n;
    }

    /// Record `n` observations with `successes` successes from population Y.
    pub fn record_y(&mut self, successes: u64, n: u64) {
        debug_assert!(successes <= n);
        self.w_y += successes;
        self.m_y += n;
    }
}

/// Interval target: coverage tail mass, half-width bound, batch capacity.
///
/// The normal quantile `z` is derived once at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    alpha: f64,
    epsilon: f64,
    batch: u64,
    z: f64,
}

impl TargetSpec {
    pub fn new(alpha: f64, epsilon: f64, batch: u64) -> Result<Self, StatError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(StatError::EpsilonOutOfRange(epsilon));
        }
        if batch == 0 {
            return Err(StatError::BatchZero);
        }
        let z = z_quantile(alpha)?;
        Ok(Self {
            alpha,
            epsilon,
            batch,
            z,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn batch(&self) -> u64 {
        self.batch
    }

    /// `z_{alpha/2}`, the `1 - alpha/2` standard-normal quantile.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// The variance budget `epsilon^2 / z^2` that the allocation layer
    /// compares `tau_x/m_x + tau_y/m_y` against.
    pub fn variance_budget(&self) -> f64 {
        self.epsilon * self.epsilon / (self.z * self.z)
    }

    /// Same target with a different batch capacity.
    pub fn with_batch(&self, batch: u64) -> Result<Self, StatError> {
        Self::new(self.alpha, self.epsilon, batch)
    }
}

/// Per-observation sampling costs for the two populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    c_x: f64,
    c_y: f64,
}

impl CostModel {
    pub fn new(c_x: f64, c_y: f64) -> Result<Self, StatError> {
        for c in [c_x, c_y] {
            if !(c > 0.0) || !c.is_finite() {
                return Err(StatError::CostOutOfRange(c));
            }
        }
        Ok(Self { c_x, c_y })
    }

    /// Unit costs, under which cost minimization degenerates to
    /// observation minimization.
    pub fn unit() -> Self {
        Self { c_x: 1.0, c_y: 1.0 }
    }

    pub fn c_x(&self) -> f64 {
        self.c_x
    }

    pub fn c_y(&self) -> f64 {
        self.c_y
    }

    /// Price a pair of observation counts.
    pub fn price(&self, n_x: u64, n_y: u64) -> f64 {
        n_x as f64 * self.c_x + n_y as f64 * self.c_y
    }
}

/// A two-sided interval `center ± half_width` for `p_x - p_y`, together
/// with the sample sizes it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub m_x: u64,
    pub m_y: u64,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// Whether the interval contains `value`.
    pub fn covers(&self, value: f64) -> bool {
        (self.center - value).abs() <= self.half_width
    }
}

/// Bernoulli variance proxy `p(1-p)`, maximized at `p = 1/2`.
#[inline]
pub fn tau(p_hat: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_hat));
    p_hat * (1.0 - p_hat)
}

/// Standard-normal quantile `z` with `Phi(z) = 1 - alpha/2`.
///
/// Uses Wichura's PPND16 rational approximation of the inverse normal CDF,
/// accurate to well below 1e-9 over the full open interval.
pub fn z_quantile(alpha: f64) -> Result<f64, StatError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatError::AlphaOutOfRange(alpha));
    }
    Ok(inverse_normal_cdf(1.0 - alpha / 2.0))
}

/// Wichura's PPND16: `Phi^{-1}(p)` for `p` in (0,1).
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608e0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 7] = [
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_9e0,
        5.769_497_221_460_691_405_5e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 7] = [
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_4e0,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2e0,
        5.463_784_911_164_114_369_9e0,
        1.784_826_539_917_291_335_8e0,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 7] = [
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn rational(r: f64, num: &[f64; 8], den: &[f64; 7]) -> f64 {
        let n = num.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let d = den.iter().rev().fold(0.0, |acc, &c| acc * r + c) * r + 1.0;
        n / d
    }

    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * rational(r, &A, &B);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let v = if r <= 5.0 {
        r -= 1.6;
        rational(r, &C, &D)
    } else {
        r -= 5.0;
        rational(r, &E, &F)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Eq.-style half-width `z_{alpha/2} * sqrt(tau(X̄)/m_x + tau(Ȳ)/m_y)`.
pub fn wald_half_width(state: &SampleState, alpha: f64) -> Result<f64, StatError> {
    let z = z_quantile(alpha)?;
    half_width_with_z(state, z)
}

/// Half-width with a precomputed quantile; avoids re-deriving `z` in loops.
pub fn half_width_with_z(state: &SampleState, z: f64) -> Result<f64, StatError> {
    let x_bar = state.mean_x().ok_or(StatError::EmptySample('X'))?;
    let y_bar = state.mean_y().ok_or(StatError::EmptySample('Y'))?;
    Ok(z * (tau(x_bar) / state.m_x as f64 + tau(y_bar) / state.m_y as f64).sqrt())
}

/// Wald interval `X̄ - Ȳ ± H` for the difference of proportions.
pub fn wald_ci(state: &SampleState, alpha: f64) -> Result<ConfidenceInterval, StatError> {
    let half_width = wald_half_width(state, alpha)?;
    let center = state.mean_x().unwrap() - state.mean_y().unwrap();
    Ok(ConfidenceInterval {
        center,
        half_width,
        m_x: state.m_x,
        m_y: state.m_y,
    })
}

/// Minimax Bernoulli-mean estimate `(w + sqrt(m)/2) / (m + sqrt(m))`.
///
/// Strictly inside `(0,1)` for every valid `(w, m)` with `m >= 1`, which is
/// what the allocation formulas need when a raw sample mean is 0 or 1.
pub fn minimax_estimate(w: u64, m: u64) -> Result<f64, StatError> {
    if m == 0 {
        return Err(StatError::EmptySample('?'));
    }
    if w > m {
        return Err(StatError::CountsInconsistent {
            successes: w,
            observations: m,
        });
    }
    let root = (m as f64).sqrt();
    Ok((w as f64 + root / 2.0) / (m as f64 + root))
}
