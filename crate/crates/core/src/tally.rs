//! Per-arm count histograms and the VE ratio built from them.
//!
//! Units are summarised as `(at_risk, events)` cells. Merging adds integer
//! counts, so any reduction order gives identical results.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArmTally {
    cells: BTreeMap<(u32, u32), u64>,
}

impl ArmTally {
    pub fn add(&mut self, at_risk: u32, events: u32) {
        debug_assert!(events <= at_risk);
        *self.cells.entry((at_risk, events)).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &ArmTally) {
        for (&k, &n) in &other.cells {
            *self.cells.entry(k).or_insert(0) += n;
        }
    }

    /// `((at_risk, events), units)` cells in ascending order.
    pub fn cells(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.cells.iter().map(|(&k, &n)| (k, n))
    }

    pub fn units(&self) -> u64 {
        self.cells.values().sum()
    }

    pub fn at_risk(&self) -> u64 {
        self.cells.iter().map(|(&(m, _), &n)| m as u64 * n).sum()
    }

    pub fn events(&self) -> u64 {
        self.cells.iter().map(|(&(_, a), &n)| a as u64 * n).sum()
    }

    /// Aggregate rate `sum(events) / sum(at_risk)`.
    pub fn pooled_rate(&self) -> Option<f64> {
        let m = self.at_risk();
        (m > 0).then(|| self.events() as f64 / m as f64)
    }

    /// Mean of per-unit rates over units with at least one contact at risk.
    pub fn per_unit_mean_rate(&self) -> Option<f64> {
        let mut n = 0u64;
        let mut total = 0.0;
        for (&(m, a), &count) in &self.cells {
            if m > 0 {
                n += count;
                total += count as f64 * a as f64 / m as f64;
            }
        }
        (n > 0).then(|| total / n as f64)
    }

    pub fn rate(&self, pooling: SarPooling) -> Option<f64> {
        match pooling {
            SarPooling::Pooled => self.pooled_rate(),
            SarPooling::PerUnitMean => self.per_unit_mean_rate(),
        }
    }

    /// Linearised variance of the pooled ratio estimator, clustering by unit.
    pub fn pooled_rate_variance(&self) -> Option<f64> {
        let n = self.units();
        let r = self.pooled_rate()?;
        if n < 2 {
            return None;
        }
        let m_bar = self.at_risk() as f64 / n as f64;
        let ss: f64 = self
            .cells
            .iter()
            .map(|(&(m, a), &count)| {
                let z = a as f64 - r * m as f64;
                count as f64 * z * z
            })
            .sum();
        Some(ss / ((n - 1) as f64 * n as f64 * m_bar * m_bar))
    }

    /// Draws a bootstrap replicate with the same number of units.
    fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmTally {
        let mut remaining = self.units();
        let mut left_mass = remaining;
        let mut out = ArmTally::default();
        for (&cell, &count) in &self.cells {
            if remaining == 0 {
                break;
            }
            let p = (count as f64 / left_mass as f64).min(1.0);
            let k = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
            if k > 0 {
                out.cells.insert(cell, k);
            }
            remaining -= k;
            left_mass -= count;
        }
        out
    }
}

/// How per-arm SARs are formed from unit counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SarPooling {
    /// Sum of events over sum of contacts at risk.
    #[default]
    Pooled,
    /// Average of each unit's own attack rate.
    PerUnitMean,
}

/// Tallies split by the vaccination status of the (index or primary) case.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TwoArmTally {
    pub vaccinated: ArmTally,
    pub unvaccinated: ArmTally,
}

/// Point estimate of VE-SAR with its arm-level attack rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VeRatio {
    pub sar_vaccinated: f64,
    pub sar_unvaccinated: f64,
    pub ve: f64,
}

impl TwoArmTally {
    pub fn arm_mut(&mut self, vaccinated: bool) -> &mut ArmTally {
        if vaccinated {
            &mut self.vaccinated
        } else {
            &mut self.unvaccinated
        }
    }

    pub fn merge(&mut self, other: &TwoArmTally) {
        self.vaccinated.merge(&other.vaccinated);
        self.unvaccinated.merge(&other.unvaccinated);
    }

    pub fn ve(&self, pooling: SarPooling) -> Result<VeRatio> {
        if self.vaccinated.units() == 0 {
            return Err(Error::InsufficientData { arm: "vaccinated" });
        }
        if self.unvaccinated.units() == 0 {
            return Err(Error::InsufficientData { arm: "unvaccinated" });
        }
        let sar_v = self
            .vaccinated
            .rate(pooling)
            .ok_or(Error::InsufficientData { arm: "vaccinated" })?;
        let sar_u = self.unvaccinated.rate(pooling).unwrap_or(0.0);
        if sar_u == 0.0 {
            return Err(Error::UndefinedVe);
        }
        Ok(VeRatio {
            sar_vaccinated: sar_v,
            sar_unvaccinated: sar_u,
            ve: 1.0 - sar_v / sar_u,
        })
    }

    /// Delta-method standard error of the pooled VE, propagated through the
    /// log of the SAR ratio. Zero when the vaccinated arm has no events.
    pub fn delta_se(&self) -> Result<f64> {
        let r = self.ve(SarPooling::Pooled)?;
        let var_v = self.vaccinated.pooled_rate_variance().unwrap_or(0.0);
        let var_u = self.unvaccinated.pooled_rate_variance().unwrap_or(0.0);
        let (sv, su) = (r.sar_vaccinated, r.sar_unvaccinated);
        // R^2 (var_v / sv^2 + var_u / su^2), written to stay finite at sv = 0
        let var = var_v / (su * su) + sv * sv * var_u / (su * su * su * su);
        Ok(var.sqrt())
    }

    /// Nonparametric bootstrap standard error of the pooled VE, resampling
    /// units within each arm. Replicates with an undefined VE are skipped.
    pub fn bootstrap_se<R: Rng + ?Sized>(&self, reps: u32, rng: &mut R) -> Result<f64> {
        self.ve(SarPooling::Pooled)?;
        let mut draws = Vec::with_capacity(reps as usize);
        for _ in 0..reps {
            let boot = TwoArmTally {
                vaccinated: self.vaccinated.resample(rng),
                unvaccinated: self.unvaccinated.resample(rng),
            };
            if let Ok(r) = boot.ve(SarPooling::Pooled) {
                draws.push(r.ve);
            }
        }
        if draws.len() < 2 {
            return Err(Error::UndefinedVe);
        }
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(var.sqrt())
    }
}
