//! API cost from token meters, in exact fixed point.
//!
//! Prices are micro-dollars per million tokens, so one token at price `p`
//! costs exactly `p` pico-dollars and every sum stays an integer.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::EpisodeTrace;

const PICO_PER_DOLLAR: u128 = 1_000_000_000_000;

/// Dollars per one million tokens, with at most six decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Price {
    micro_dollars_per_million: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid price '{0}': expected a non-negative decimal with at most 6 fractional digits")]
pub struct PriceError(String);

impl FromStr for Price {
    type Err = PriceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PriceError(s.to_string());
        let t = s.trim().trim_start_matches('$');
        let (int, frac) = t.split_once('.').unwrap_or((t, ""));
        let digits = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
        if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) || frac.len() > 6 {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = format!("{frac:0<6}").parse().map_err(|_| bad())?;
        int.checked_mul(1_000_000)
            .and_then(|v| v.checked_add(frac))
            .map(|micro_dollars_per_million| Price {
                micro_dollars_per_million,
            })
            .ok_or_else(bad)
    }
}

impl Price {
    pub fn cost(&self, tokens: u64) -> Money {
        Money {
            pico: tokens as u128 * self.micro_dollars_per_million as u128,
        }
    }
}

/// An exact dollar amount.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Money {
    pub pico: u128,
}

impl std::ops::Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money { pico: self.pico + rhs.pico }
    }
}

impl fmt::Display for Money {
    /// `$0.00045`: shortest exact decimal, at least two fraction digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.pico / PICO_PER_DOLLAR;
        let frac = format!("{:012}", self.pico % PICO_PER_DOLLAR);
        let mut frac = frac.trim_end_matches('0').to_string();
        while frac.len() < 2 {
            frac.push('0');
        }
        write!(f, "${int}.{frac}")
    }
}

/// `sum / n` kept as an exact fraction of pico-dollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeanMoney {
    pub total: Money,
    pub count: u64,
}

impl fmt::Display for MeanMoney {
    /// Exact when the decimal terminates within 24 digits, otherwise cut there.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 0 {
            return write!(f, "$0.00");
        }
        let den = PICO_PER_DOLLAR * self.count as u128;
        let int = self.total.pico / den;
        let mut rem = self.total.pico % den;
        let mut frac = String::new();
        while rem != 0 && frac.len() < 24 {
            rem *= 10;
            frac.push(char::from(b'0' + (rem / den) as u8));
            rem %= den;
        }
        while frac.len() < 2 {
            frac.push('0');
        }
        write!(f, "${int}.{frac}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceCost {
    pub id: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: Money,
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub per_trace: Vec<TraceCost>,
    pub total: Money,
    pub mean: MeanMoney,
    pub any_estimated: bool,
}

/// `cost = prompt × price_in / 1e6 + completion × price_out / 1e6` per trace.
pub fn cost_report(traces: &[EpisodeTrace], price_in: Price, price_out: Price) -> CostReport {
    let per_trace: Vec<TraceCost> = traces
        .iter()
        .map(|t| TraceCost {
            id: t.id.clone(),
            prompt_tokens: t.meters.prompt_tokens,
            completion_tokens: t.meters.completion_tokens,
            cost: price_in.cost(t.meters.prompt_tokens) + price_out.cost(t.meters.completion_tokens),
            estimated: t.meters.tokens_estimated,
        })
        .collect();
    let total = per_trace.iter().fold(Money::default(), |acc, c| acc + c.cost);
    CostReport {
        any_estimated: per_trace.iter().any(|c| c.estimated),
        mean: MeanMoney {
            total,
            count: per_trace.len() as u64,
        },
        total,
        per_trace,
    }
}
