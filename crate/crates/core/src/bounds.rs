//! Agent-count thresholds `n_c`: above them every instance with `n + c` items
//! is known to admit an MMS allocation, and the solver switches to the
//! domination-based recursion.
//!
//! For large `c` the threshold is `floor(alpha^c * c!)`, evaluated exactly. The
//! closed form is a reconstruction, so every entry can be overridden.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::instance::ItemKind;
use crate::value::{ratio, Rational};

/// Largest `c` whose thresholds are evaluated; beyond it values outgrow `u128`.
pub const MAX_C: i64 = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundParams {
    pub alpha_goods: Rational,
    pub alpha_chores: Rational,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            alpha_goods: ratio(6597, 10000),
            alpha_chores: ratio(7838, 10000),
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_goods", &self.alpha_goods), ("alpha_chores", &self.alpha_chores)] {
            if *a <= Rational::zero() || *a >= Rational::one() {
                return Err(Error::PreconditionUnmet(format!(
                    "{name} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(())
    }
}

/// `c -> n_c` for goods and chores, computed from `BoundParams` unless an
/// entry is overridden.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundTable {
    pub params: BoundParams,
    pub goods_overrides: BTreeMap<usize, u128>,
    pub chores_overrides: BTreeMap<usize, u128>,
}

impl BoundTable {
    pub fn new(params: BoundParams) -> Self {
        BoundTable {
            params,
            ..Default::default()
        }
    }

    pub fn with_override(mut self, kind: ItemKind, c: usize, n_c: u128) -> Self {
        match kind {
            ItemKind::Goods => self.goods_overrides.insert(c, n_c),
            ItemKind::Chores => self.chores_overrides.insert(c, n_c),
        };
        self
    }

    pub fn n_c(&self, kind: ItemKind, c: i64) -> Result<u128> {
        let c = check_c(c)?;
        let overrides = match kind {
            ItemKind::Goods => &self.goods_overrides,
            ItemKind::Chores => &self.chores_overrides,
        };
        if let Some(&v) = overrides.get(&c) {
            return Ok(v);
        }
        Ok(match kind {
            ItemKind::Goods => match c {
                0..=5 => 1,
                6 => 4,
                7 => 8,
                _ => floor_alpha_factorial(&self.params.alpha_goods, c)?,
            },
            ItemKind::Chores => match c {
                0..=5 => 1,
                _ => floor_alpha_factorial(&self.params.alpha_chores, c)?,
            },
        })
    }

    /// Agents needed before some tail group must exceed its size threshold,
    /// summed over the group sizes used by the goods recursion (`c >= 7`).
    pub fn required_agents_goods(&self, c: i64) -> Result<u128> {
        if !(7..=MAX_C).contains(&c) {
            return Err(Error::COutOfRange { c, range: "7..=40" });
        }
        let cu = c as usize;
        let mut total = Rational::one();
        for k in 3..=cu - 2 {
            let reach = (cu - k) as u128;
            let nk = self.n_c(ItemKind::Goods, (cu - k + 1) as i64)?;
            total += group_weight(cu, k) * big(reach.max(nk));
        }
        ceil_u128(&total, c)
    }

    /// The chores analogue (`c >= 6`), which also counts the size-2 group.
    pub fn required_agents_chores(&self, c: i64) -> Result<u128> {
        if !(6..=MAX_C).contains(&c) {
            return Err(Error::COutOfRange { c, range: "6..=40" });
        }
        let cu = c as usize;
        let mut total = Rational::one();
        for k in 3..=cu - 1 {
            let reach = (cu - k + 1) as u128;
            let nk = self.n_c(ItemKind::Chores, (cu - k + 1) as i64)?;
            total += group_weight(cu, k) * big(reach.max(nk));
        }
        let pair = ((cu - 1) as u128).max(self.n_c(ItemKind::Chores, c - 1)?);
        total += big(pair);
        ceil_u128(&total, c)
    }

    /// One summand of the goods sum, for diagnostics.
    pub fn goods_summand(&self, c: usize, k: usize) -> Result<Rational> {
        let nk = self.n_c(ItemKind::Goods, (c - k + 1) as i64)?;
        Ok(group_weight(c, k) * big(((c - k) as u128).max(nk)))
    }
}

pub fn n_c_goods(c: i64) -> Result<u128> {
    BoundTable::default().n_c(ItemKind::Goods, c)
}

pub fn n_c_chores(c: i64) -> Result<u128> {
    BoundTable::default().n_c(ItemKind::Chores, c)
}

pub fn required_agents_goods(c: i64) -> Result<u128> {
    BoundTable::default().required_agents_goods(c)
}

pub fn required_agents_chores(c: i64) -> Result<u128> {
    BoundTable::default().required_agents_chores(c)
}

fn check_c(c: i64) -> Result<usize> {
    if c < 0 {
        return Err(Error::NegativeC(c));
    }
    if c > MAX_C {
        return Err(Error::COutOfRange { c, range: "0..=40" });
    }
    Ok(c as usize)
}

fn big(v: u128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `C(c, k-1)/k + C(c, k-2)/(k-1)`: how many size-`k` tails can avoid sharing
/// a `(k-1)`-subset, per unit of group threshold.
fn group_weight(c: usize, k: usize) -> Rational {
    Rational::new(binomial(c, k - 1), BigInt::from(k)) + Rational::new(binomial(c, k - 2), BigInt::from(k - 1))
}

fn floor_alpha_factorial(alpha: &Rational, c: usize) -> Result<u128> {
    let fact: BigInt = (1..=c).map(BigInt::from).product();
    let v = num_traits::pow(alpha.clone(), c) * Rational::from_integer(fact);
    v.floor().to_integer().to_u128().ok_or(Error::COutOfRange {
        c: c as i64,
        range: "value fits in u128",
    })
}

fn ceil_u128(v: &Rational, c: i64) -> Result<u128> {
    let (q, r) = v.numer().div_rem(v.denom());
    let q = if r.is_zero() { q } else { q + 1 };
    q.to_u128().ok_or(Error::COutOfRange {
        c,
        range: "value fits in u128",
    })
}
