//! Probability measures on ℕ described by a rule, with exact tails where the
//! rule allows it.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a distribution, stored in experiment configs as
/// `{kind, params}`. Rational parameters are written as `"a/b"` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TailSpec {
    /// p_j = 1/((j+1)(j+2)), tail(j) = 1/(j+1).
    Telescoping,
    /// p_j proportional to (j+1)^(-exponent), exponent ≥ 2.
    Zeta { exponent: u32 },
    /// p_j = (1-r) r^j.
    Geometric { ratio: String },
    /// Finitely supported masses summing to exactly one.
    Finite { masses: Vec<String> },
    /// Explicit prefix masses; the residual mass is spread over the indices
    /// after the prefix with the telescoping profile.
    Custom { prefix: Vec<String> },
}

/// Analytic class of the tail, which decides whether the square-ratio series
/// can be classified without summing it.
#[derive(Clone, Debug, PartialEq)]
pub enum TailClass {
    PolynomialDecay { exponent: u32 },
    Geometric { ratio: BigRational },
    ExplicitFinite { max_index: u64, residual: BigRational },
    Custom,
}

#[derive(Clone, Debug)]
enum Rule {
    Telescoping,
    Zeta { exponent: u32, zeta: f64 },
    Geometric { ratio: BigRational },
    Finite { masses: Vec<BigRational>, tails: Vec<BigRational> },
    Custom { prefix: Vec<BigRational>, prefix_tails: Vec<BigRational>, residual: BigRational },
}

#[derive(Clone, Debug)]
pub struct TailDistribution {
    spec: TailSpec,
    rule: Rule,
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
    let den: BigInt = den.parse().map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(num, den))
}

pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // scale both down to keep the quotient representable
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000);
            let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (q.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Σ_{i ≥ a} i^(-s) for a ≥ 1, s ≥ 2, by direct summation followed by an
/// Euler–Maclaurin tail.
pub fn hurwitz_zeta(s: u32, a: u64) -> f64 {
    const DIRECT: u64 = 16;
    let s_f = s as f64;
    let mut sum = 0.0;
    for i in a..a + DIRECT {
        sum += (i as f64).powf(-s_f);
    }
    let big_a = (a + DIRECT) as f64;
    let mut tail = big_a.powf(1.0 - s_f) / (s_f - 1.0) + 0.5 * big_a.powf(-s_f);
    // B_2k / (2k)! for k = 1..5
    let b = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1_209_600.0, 1.0 / 47_900_160.0];
    let mut rising = s_f;
    let mut power = big_a.powf(-s_f - 1.0);
    for (k, coeff) in b.iter().enumerate() {
        tail += coeff * rising * power;
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (s_f + k2 - 1.0) * (s_f + k2);
        power /= big_a * big_a;
    }
    sum + tail
}

impl TailDistribution {
    pub fn new(spec: TailSpec) -> Result<Self> {
        let rule = match &spec {
            TailSpec::Telescoping => Rule::Telescoping,
            TailSpec::Zeta { exponent } => {
                if *exponent < 2 {
                    return Err(Error::InvalidDistribution(format!(
                        "zeta exponent must be at least 2, got {exponent}"
                    )));
                }
                Rule::Zeta { exponent: *exponent, zeta: hurwitz_zeta(*exponent, 1) }
            }
            TailSpec::Geometric { ratio } => {
                let ratio = parse_rational(ratio)?;
                if !(ratio.is_positive() && ratio < BigRational::one()) {
                    return Err(Error::InvalidDistribution(format!(
                        "geometric ratio must lie in (0,1), got {}",
                        format_rational(&ratio)
                    )));
                }
                Rule::Geometric { ratio }
            }
            TailSpec::Finite { masses } => {
                let masses = masses.iter().map(|m| parse_rational(m)).collect::<Result<Vec<_>>>()?;
                if masses.is_empty() || masses.iter().any(|m| m.is_negative()) {
                    return Err(Error::InvalidDistribution("finite masses must be nonempty and nonnegative".into()));
                }
                let mut tails = vec![BigRational::zero(); masses.len() + 1];
                for j in (0..masses.len()).rev() {
                    tails[j] = &tails[j + 1] + &masses[j];
                }
                if !tails[0].is_one() {
                    return Err(Error::InvalidDistribution(format!(
                        "finite masses sum to {}, not 1",
                        format_rational(&tails[0])
                    )));
                }
                Rule::Finite { masses, tails }
            }
            TailSpec::Custom { prefix } => {
                let prefix = prefix.iter().map(|m| parse_rational(m)).collect::<Result<Vec<_>>>()?;
                if prefix.iter().any(|m| m.is_negative()) {
                    return Err(Error::InvalidDistribution("custom prefix masses must be nonnegative".into()));
                }
                let total: BigRational = prefix.iter().cloned().sum();
                let residual = BigRational::one() - total;
                if !residual.is_positive() {
                    return Err(Error::InvalidDistribution(
                        "custom prefix must leave positive residual mass".into(),
                    ));
                }
                let mut prefix_tails = vec![residual.clone(); prefix.len() + 1];
                for j in (0..prefix.len()).rev() {
                    prefix_tails[j] = &prefix_tails[j + 1] + &prefix[j];
                }
                Rule::Custom { prefix, prefix_tails, residual }
            }
        };
        Ok(Self { spec, rule })
    }

    pub fn telescoping() -> Self {
        Self::new(TailSpec::Telescoping).expect("telescoping is valid")
    }

    pub fn geometric_half() -> Self {
        Self::new(TailSpec::Geometric { ratio: "1/2".into() }).expect("valid ratio")
    }

    pub fn spec(&self) -> &TailSpec {
        &self.spec
    }

    pub fn tail_class(&self) -> TailClass {
        match &self.rule {
            Rule::Telescoping => TailClass::PolynomialDecay { exponent: 2 },
            Rule::Zeta { exponent, .. } => TailClass::PolynomialDecay { exponent: *exponent },
            Rule::Geometric { ratio } => TailClass::Geometric { ratio: ratio.clone() },
            Rule::Finite { masses, .. } => TailClass::ExplicitFinite {
                max_index: self.support_max().unwrap_or(masses.len() as u64 - 1),
                residual: BigRational::zero(),
            },
            Rule::Custom { .. } => TailClass::Custom,
        }
    }

    pub fn support_infinite(&self) -> bool {
        self.support_max().is_none()
    }

    /// Largest index with positive mass, `None` for infinite support.
    pub fn support_max(&self) -> Option<u64> {
        match &self.rule {
            Rule::Finite { masses, .. } => masses.iter().rposition(|m| m.is_positive()).map(|i| i as u64),
            _ => None,
        }
    }

    /// Whether masses and tails are exact rationals.
    pub fn is_exact(&self) -> bool {
        !matches!(self.rule, Rule::Zeta { .. })
    }

    pub fn mass_exact(&self, j: u64) -> Option<BigRational> {
        let r = |n: u64, d: u64| BigRational::new(BigInt::from(n), BigInt::from(d));
        match &self.rule {
            Rule::Telescoping => {
                let j = BigInt::from(j);
                Some(BigRational::new(BigInt::one(), (&j + 1u32) * (&j + 2u32)))
            }
            Rule::Zeta { .. } => None,
            Rule::Geometric { ratio } => {
                Some((BigRational::one() - ratio) * pow_rational(ratio, j))
            }
            Rule::Finite { masses, .. } => {
                Some(masses.get(j as usize).cloned().unwrap_or_else(BigRational::zero))
            }
            Rule::Custom { prefix, residual, .. } => {
                let n = prefix.len() as u64;
                if j < n {
                    Some(prefix[j as usize].clone())
                } else {
                    let k = j - n;
                    Some(residual * r(1, 1) / BigRational::from_integer(BigInt::from(k + 1) * BigInt::from(k + 2)))
                }
            }
        }
    }

    /// tail(j) = Σ_{i ≥ j} p_i, exactly when the rule allows it.
    pub fn tail_exact(&self, j: u64) -> Option<BigRational> {
        match &self.rule {
            Rule::Telescoping => Some(BigRational::new(BigInt::one(), BigInt::from(j) + 1u32)),
            Rule::Zeta { .. } => None,
            Rule::Geometric { ratio } => Some(pow_rational(ratio, j)),
            Rule::Finite { tails, .. } => {
                Some(tails.get(j as usize).cloned().unwrap_or_else(BigRational::zero))
            }
            Rule::Custom { prefix, prefix_tails, residual } => {
                let n = prefix.len() as u64;
                if j < n {
                    Some(prefix_tails[j as usize].clone())
                } else {
                    Some(residual / BigRational::from_integer(BigInt::from(j - n + 1)))
                }
            }
        }
    }

    pub fn mass(&self, j: u64) -> f64 {
        match &self.rule {
            Rule::Telescoping => 1.0 / ((j as f64 + 1.0) * (j as f64 + 2.0)),
            Rule::Zeta { exponent, zeta } => (j as f64 + 1.0).powf(-(*exponent as f64)) / zeta,
            Rule::Geometric { ratio } => {
                let r = rational_to_f64(ratio);
                (1.0 - r) * r.powf(j as f64)
            }
            _ => rational_to_f64(&self.mass_exact(j).expect("exact rule")),
        }
    }

    pub fn tail(&self, j: u64) -> f64 {
        match &self.rule {
            Rule::Telescoping => 1.0 / (j as f64 + 1.0),
            Rule::Zeta { exponent, zeta } => {
                if j == 0 {
                    1.0
                } else {
                    hurwitz_zeta(*exponent, j + 1) / zeta
                }
            }
            Rule::Geometric { ratio } => rational_to_f64(ratio).powf(j as f64),
            _ => rational_to_f64(&self.tail_exact(j).expect("exact rule")),
        }
    }

    /// Draws an index by inversion of the tail: X = max{j : tail(j) ≥ u} for
    /// u uniform on (0, 1].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = 1.0 - rng.gen::<f64>();
        self.invert_tail(u)
    }

    pub fn invert_tail(&self, u: f64) -> u64 {
        match &self.rule {
            Rule::Telescoping => ((1.0 / u).floor() as u64).saturating_sub(1),
            Rule::Geometric { ratio } => {
                let r = rational_to_f64(ratio);
                (u.ln() / r.ln()).floor().max(0.0) as u64
            }
            Rule::Zeta { .. } => {
                // exponential search then bisection on the monotone tail
                let mut hi = 1u64;
                while self.tail(hi) >= u {
                    hi = hi.saturating_mul(2);
                    if hi == u64::MAX {
                        return hi;
                    }
                }
                let mut lo = 0u64; // tail(lo) >= u > tail(hi)
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if self.tail(mid) >= u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
            Rule::Finite { tails, .. } => {
                let mut j = 0;
                while j + 1 < tails.len() && rational_to_f64(&tails[j + 1]) >= u {
                    j += 1;
                }
                j.min(tails.len() - 2) as u64
            }
            Rule::Custom { prefix, prefix_tails, residual } => {
                let res = rational_to_f64(residual);
                let n = prefix.len() as u64;
                if u <= res {
                    n + ((res / u).floor() as u64).saturating_sub(1)
                } else {
                    let mut j = 0usize;
                    while j + 1 < prefix_tails.len() && rational_to_f64(&prefix_tails[j + 1]) >= u {
                        j += 1;
                    }
                    j as u64
                }
            }
        }
    }

    /// Shannon entropy (natural log) of the masses at indices 0..=max_index.
    pub fn partial_entropy(&self, max_index: u64) -> f64 {
        (0..=max_index)
            .map(|j| self.mass(j))
            .filter(|&m| m > 0.0)
            .map(|m| -m * m.ln())
            .sum()
    }
}

pub(crate) fn pow_rational(q: &BigRational, e: u64) -> BigRational {
    let e = u32::try_from(e).expect("exponent fits in u32");
    BigRational::new(q.numer().pow(e), q.denom().pow(e))
}
