//! Closed-form target and actual estimands of the VE-SAR ratio.
//!
//! Every function here returns a transmission *ratio* `mu`; the matching
//! vaccine efficacy is `1 - mu`. "Target" is what a study would estimate
//! with perfect observation of primary cases, "actual" (or observed) is what
//! the naive estimator converges to under a given testing regime.

use crate::error::{invalid, Error, Result};

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(name, format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(invalid(name, format!("{x} must be finite and > 0")));
    }
    Ok(())
}

/// Parameters of the symptom-prompted testing model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymptomModelParams {
    lambda_symptom: f64,
    delta: f64,
    nu: f64,
    rho_symptom: f64,
    tau: f64,
}

impl SymptomModelParams {
    /// * `lambda_symptom`: P(symptoms | vaccinated) / P(symptoms | unvaccinated)
    /// * `delta`: transmission of asymptomatic relative to symptomatic cases
    /// * `nu`: transmission of vaccinated relative to unvaccinated cases
    /// * `rho_symptom`: P(symptoms | unvaccinated)
    /// * `tau`: per-contact transmission probability, symptomatic unvaccinated
    pub fn new(lambda_symptom: f64, delta: f64, nu: f64, rho_symptom: f64, tau: f64) -> Result<Self> {
        check_unit_interval("lambda_symptom", lambda_symptom)?;
        check_unit_interval("delta", delta)?;
        check_unit_interval("nu", nu)?;
        check_unit_interval("rho_symptom", rho_symptom)?;
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(invalid("tau", format!("{tau} is outside (0, 1]")));
        }
        Ok(Self {
            lambda_symptom,
            delta,
            nu,
            rho_symptom,
            tau,
        })
    }

    pub fn lambda_symptom(&self) -> f64 {
        self.lambda_symptom
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn rho_symptom(&self) -> f64 {
        self.rho_symptom
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_lambda_symptom(self, v: f64) -> Result<Self> {
        Self::new(v, self.delta, self.nu, self.rho_symptom, self.tau)
    }

    pub fn with_delta(self, v: f64) -> Result<Self> {
        Self::new(self.lambda_symptom, v, self.nu, self.rho_symptom, self.tau)
    }

    pub fn with_nu(self, v: f64) -> Result<Self> {
        Self::new(self.lambda_symptom, self.delta, v, self.rho_symptom, self.tau)
    }

    pub fn with_rho_symptom(self, v: f64) -> Result<Self> {
        Self::new(self.lambda_symptom, self.delta, self.nu, v, self.tau)
    }

    pub fn with_tau(self, v: f64) -> Result<Self> {
        Self::new(self.lambda_symptom, self.delta, self.nu, self.rho_symptom, v)
    }

    /// Replaces `nu` with the value that yields `target_ve` as the target
    /// efficacy, keeping the other parameters.
    pub fn with_target_ve(self, target_ve: f64) -> Result<Self> {
        let nu = invert_target_to_nu(target_ve, self.lambda_symptom, self.delta, self.rho_symptom)?;
        self.with_nu(nu)
    }
}

impl Default for SymptomModelParams {
    /// VE against symptomatic infection 0.9 and against infection 0.5 give
    /// `lambda_symptom = 0.2`; half of unvaccinated infections are symptomatic.
    fn default() -> Self {
        Self {
            lambda_symptom: 0.2,
            delta: 0.5,
            nu: 0.6,
            rho_symptom: 0.5,
            tau: 0.3,
        }
    }
}

/// Parameters of the infrequent-testing model: infection durations are
/// `Uniform(rho_v - c, rho_v + c)` and transmission accrues at a constant
/// daily hazard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationModelParams {
    rho0: f64,
    rho1: f64,
    c: f64,
    nu_daily: f64,
    tau0: f64,
}

impl DurationModelParams {
    pub fn new(rho0: f64, rho1: f64, c: f64, nu_daily: f64, tau0: f64) -> Result<Self> {
        check_positive("rho0", rho0)?;
        check_positive("rho1", rho1)?;
        check_positive("c", c)?;
        check_positive("tau0", tau0)?;
        check_unit_interval("nu_daily", nu_daily)?;
        if rho1 > rho0 {
            return Err(invalid("rho1", format!("{rho1} exceeds rho0 = {rho0}")));
        }
        if rho0 - c <= 0.0 {
            return Err(invalid("c", format!("rho0 - c = {} must be > 0", rho0 - c)));
        }
        // equivalent to lambda_duration > c / rho0
        if rho1 - c <= 0.0 {
            return Err(invalid(
                "rho1",
                format!("rho1 - c = {} must be > 0 (lambda_duration > c/rho0)", rho1 - c),
            ));
        }
        Ok(Self {
            rho0,
            rho1,
            c,
            nu_daily,
            tau0,
        })
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn nu_daily(&self) -> f64 {
        self.nu_daily
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Daily hazard for a vaccinated case.
    pub fn tau1(&self) -> f64 {
        self.tau0 * self.nu_daily
    }

    /// Ratio of mean durations, vaccinated over unvaccinated.
    pub fn lambda_duration(&self) -> f64 {
        self.rho1 / self.rho0
    }

    /// Mean duration for the given arm.
    pub fn mean_duration(&self, vaccinated: bool) -> f64 {
        if vaccinated {
            self.rho1
        } else {
            self.rho0
        }
    }

    pub fn daily_hazard(&self, vaccinated: bool) -> f64 {
        if vaccinated {
            self.tau1()
        } else {
            self.tau0
        }
    }

    pub fn with_rho0(self, v: f64) -> Result<Self> {
        Self::new(v, self.rho1, self.c, self.nu_daily, self.tau0)
    }

    pub fn with_rho1(self, v: f64) -> Result<Self> {
        Self::new(self.rho0, v, self.c, self.nu_daily, self.tau0)
    }

    pub fn with_c(self, v: f64) -> Result<Self> {
        Self::new(self.rho0, self.rho1, v, self.nu_daily, self.tau0)
    }

    pub fn with_nu_daily(self, v: f64) -> Result<Self> {
        Self::new(self.rho0, self.rho1, self.c, v, self.tau0)
    }

    pub fn with_tau0(self, v: f64) -> Result<Self> {
        Self::new(self.rho0, self.rho1, self.c, self.nu_daily, v)
    }

    /// Replaces `nu_daily` so that the target efficacy `1 - lambda_duration * nu_daily`
    /// equals `target_ve`.
    pub fn with_target_ve(self, target_ve: f64) -> Result<Self> {
        check_unit_interval("target_ve", target_ve)?;
        let ratio = (1.0 - target_ve) / self.lambda_duration();
        if ratio > 1.0 + 1e-12 {
            return Err(Error::InfeasibleTarget { target_ve, ratio });
        }
        self.with_nu_daily(ratio.min(1.0))
    }
}

impl Default for DurationModelParams {
    /// Durations span 14 days: mean 14 unvaccinated, 8 vaccinated.
    fn default() -> Self {
        Self {
            rho0: 14.0,
            rho1: 8.0,
            c: 7.0,
            nu_daily: 0.7,
            tau0: 0.01,
        }
    }
}

/// Target transmission ratio under symptom-prompted testing.
///
/// `nu * (lambda*rho + delta*(1 - lambda*rho)) / (rho + delta*(1 - rho))`
pub fn symptom_prompted_target_mu(p: &SymptomModelParams) -> Result<f64> {
    let (l, d, nu, r) = (p.lambda_symptom, p.delta, p.nu, p.rho_symptom);
    let denom = r + d * (1.0 - r);
    if denom == 0.0 {
        return Err(Error::Degenerate);
    }
    Ok(nu * (l * r + d * (1.0 - l * r)) / denom)
}

/// Ratio the naive estimator converges to when only symptomatic index cases
/// are sampled: the reduction in transmission at fixed symptom status.
pub fn symptom_prompted_actual_mu(p: &SymptomModelParams) -> f64 {
    p.nu
}

/// Solves the symptom-prompted target for `nu`.
pub fn invert_target_to_nu(target_ve: f64, lambda_symptom: f64, delta: f64, rho_symptom: f64) -> Result<f64> {
    check_unit_interval("target_ve", target_ve)?;
    check_unit_interval("lambda_symptom", lambda_symptom)?;
    check_unit_interval("delta", delta)?;
    check_unit_interval("rho_symptom", rho_symptom)?;
    let denom_v = lambda_symptom * rho_symptom + delta * (1.0 - lambda_symptom * rho_symptom);
    let denom_u = rho_symptom + delta * (1.0 - rho_symptom);
    if denom_u == 0.0 {
        return Err(Error::Degenerate);
    }
    let mu = 1.0 - target_ve;
    if denom_v == 0.0 {
        // vaccinated cases never transmit: only target_ve = 1 is reachable
        return if mu == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InfeasibleTarget {
                target_ve,
                ratio: f64::INFINITY,
            })
        };
    }
    let nu = mu * denom_u / denom_v;
    if nu > 1.0 + 1e-12 {
        return Err(Error::InfeasibleTarget { target_ve, ratio: nu });
    }
    Ok(nu.min(1.0))
}

/// Target transmission ratio under the duration model: `lambda_duration * nu_daily`.
pub fn infrequent_target_mu(d: &DurationModelParams) -> f64 {
    d.lambda_duration() * d.nu_daily
}

fn check_interval_args(k: f64, rho_v: f64, c: f64) -> Result<()> {
    check_positive("k", k)?;
    check_positive("rho_v", rho_v)?;
    check_positive("c", c)?;
    if rho_v - c <= 0.0 {
        return Err(invalid("c", format!("rho_v - c = {} must be > 0", rho_v - c)));
    }
    Ok(())
}

/// Which piece of the duration distribution a testing interval falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalRegime {
    /// `k <= rho_v - c`: every infection is detected.
    Short,
    /// `rho_v - c < k < rho_v + c`.
    Straddling,
    /// `k >= rho_v + c`: detection is proportional to duration for everyone.
    Long,
}

pub fn interval_regime(k: f64, rho_v: f64, c: f64) -> IntervalRegime {
    if k <= rho_v - c {
        IntervalRegime::Short
    } else if k >= rho_v + c {
        IntervalRegime::Long
    } else {
        IntervalRegime::Straddling
    }
}

/// `S_k` in the straddling regime, without range checks.
fn straddling_fraction(k: f64, rho_v: f64, c: f64) -> f64 {
    let lo = rho_v - c;
    let hi = rho_v + c;
    (2.0 * k * hi - lo * lo - k * k) / (4.0 * c * k)
}

/// Probability that an infection is caught by a test every `k` days with
/// uniform random phase: `E[min(N/k, 1)]` for `N ~ Uniform(rho_v - c, rho_v + c)`.
pub fn sampling_fraction(k: f64, rho_v: f64, c: f64) -> Result<f64> {
    check_interval_args(k, rho_v, c)?;
    Ok(match interval_regime(k, rho_v, c) {
        IntervalRegime::Short => 1.0,
        IntervalRegime::Straddling => straddling_fraction(k, rho_v, c),
        IntervalRegime::Long => rho_v / k,
    })
}

/// Transmission probability of a case that was detected by testing every `k`
/// days, up to the common factor that cancels between arms:
/// `tau_v * E[N * min(N/k, 1)] / E[min(N/k, 1)]`.
pub fn infrequent_observed_component(k: f64, rho_v: f64, c: f64, tau_v: f64) -> Result<f64> {
    check_interval_args(k, rho_v, c)?;
    if !(tau_v.is_finite() && tau_v >= 0.0) {
        return Err(invalid("tau_v", format!("{tau_v} must be finite and >= 0")));
    }
    let lo = rho_v - c;
    let hi = rho_v + c;
    let mean = match interval_regime(k, rho_v, c) {
        IntervalRegime::Short => rho_v,
        IntervalRegime::Straddling => {
            let s_k = straddling_fraction(k, rho_v, c);
            (3.0 * k * hi * hi - k * k * k - 2.0 * lo * lo * lo) / (12.0 * c * k * s_k)
        }
        IntervalRegime::Long => rho_v + c * c / (3.0 * rho_v),
    };
    Ok(tau_v * mean)
}

/// Observed transmission ratio under testing every `k` days.
pub fn infrequent_observed_mu(k: f64, d: &DurationModelParams) -> Result<f64> {
    let vacc = infrequent_observed_component(k, d.rho1, d.c, d.tau1())?;
    let unvacc = infrequent_observed_component(k, d.rho0, d.c, d.tau0)?;
    Ok(vacc / unvacc)
}
