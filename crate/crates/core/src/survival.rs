//! Kaplan-Meier estimation, Greenwood variance, log-minus-log confidence
//! bands and the two-group log-rank test.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Role};
use crate::error::{Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    pub duration: f64,
    /// True for an observed exit, false for right-censoring.
    pub event: bool,
    pub group: Option<u32>,
}

impl SurvivalSample {
    pub fn new(duration: f64, event: bool) -> Self {
        SurvivalSample {
            duration,
            event,
            group: None,
        }
    }

    pub fn grouped(duration: f64, event: bool, group: u32) -> Self {
        SurvivalSample {
            duration,
            event,
            group: Some(group),
        }
    }
}

fn validate(samples: &[SurvivalSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::domain("no survival observations"));
    }
    if let Some(s) = samples.iter().find(|s| !(s.duration > 0.0) || !s.duration.is_finite()) {
        return Err(Error::domain(format!(
            "duration {} is not a positive number",
            s.duration
        )));
    }
    Ok(())
}

/// Read duration and event columns from `data`, attaching `groups` when
/// given (one code per row). Rows with a missing duration or event are an
/// error.
pub fn samples_from_dataset(data: &Dataset, groups: Option<&[u32]>) -> Result<Vec<SurvivalSample>> {
    let col = |role: Role| -> Result<&[Option<f64>]> {
        let c = data
            .role_index(role)
            .ok_or_else(|| Error::domain(format!("dataset has no {role:?} column")))?;
        data.numeric(c)
            .ok_or_else(|| Error::domain(format!("{role:?} column must be numeric")))
    };
    let durations = col(Role::Duration)?;
    let events = col(Role::Event)?;
    if let Some(g) = groups {
        if g.len() != data.n_rows() {
            return Err(Error::domain("group vector length differs from row count"));
        }
    }
    (0..data.n_rows())
        .map(|r| {
            let duration = durations[r].ok_or_else(|| Error::domain(format!("duration missing at row {}", r + 1)))?;
            let event = match events[r] {
                Some(e) if e == 0.0 || e == 1.0 => e == 1.0,
                Some(e) => return Err(Error::domain(format!("event {e} at row {} is not 0/1", r + 1))),
                None => return Err(Error::domain(format!("event missing at row {}", r + 1))),
            };
            Ok(SurvivalSample {
                duration,
                event,
                group: groups.map(|g| g[r]),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    pub n: usize,
    /// Distinct event times, increasing.
    pub times: Vec<f64>,
    pub deaths: Vec<usize>,
    pub at_risk: Vec<usize>,
    pub survival: Vec<f64>,
    /// Greenwood variance; `None` once a risk set is exhausted (`r = d`).
    pub variance: Vec<Option<f64>>,
    /// Confidence bounds; `None` where undefined (survival 0 or 1, or no
    /// variance).
    pub ci_lower: Vec<Option<f64>>,
    pub ci_upper: Vec<Option<f64>>,
    pub confidence_level: Option<f64>,
}

impl KmCurve {
    /// Index of the last event time `<= t`.
    fn step_index(&self, t: f64) -> Option<usize> {
        let k = self.times.partition_point(|&x| x <= t);
        k.checked_sub(1)
    }

    pub fn survival_at(&self, t: f64) -> f64 {
        self.step_index(t).map_or(1.0, |i| self.survival[i])
    }

    /// Greenwood standard deviation at `t`; 0 before the first event.
    pub fn sd_at(&self, t: f64) -> Option<f64> {
        match self.step_index(t) {
            None => Some(0.0),
            Some(i) => self.variance[i].map(f64::sqrt),
        }
    }

    pub fn ci_at(&self, t: f64) -> Option<(f64, f64)> {
        let i = self.step_index(t)?;
        Some((self.ci_lower[i]?, self.ci_upper[i]?))
    }
}

/// Product-limit estimate over distinct event times. Subjects censored at an
/// event time are still at risk at that time.
pub fn km_fit(samples: &[SurvivalSample]) -> Result<KmCurve> {
    validate(samples)?;
    let mut sorted: Vec<&SurvivalSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.duration.total_cmp(&b.duration));
    let n = sorted.len();
    let mut curve = KmCurve {
        n,
        times: Vec::new(),
        deaths: Vec::new(),
        at_risk: Vec::new(),
        survival: Vec::new(),
        variance: Vec::new(),
        ci_lower: Vec::new(),
        ci_upper: Vec::new(),
        confidence_level: None,
    };
    // Between censorings the product telescopes to a ratio of risk-set
    // sizes, so survival is rebased only where someone is censored.
    let (mut base, mut base_risk) = (1.0, n);
    let mut s = 1.0;
    let mut i = 0;
    while i < n {
        let t = sorted[i].duration;
        let at_risk = n - i;
        let mut d = 0;
        while i < n && sorted[i].duration == t {
            d += usize::from(sorted[i].event);
            i += 1;
        }
        let censored = at_risk - (n - i) - d;
        if d > 0 {
            s = base * (at_risk - d) as f64 / base_risk as f64;
            curve.times.push(t);
            curve.deaths.push(d);
            curve.at_risk.push(at_risk);
            curve.survival.push(s);
        }
        if censored > 0 {
            base = s;
            base_risk = n - i;
        }
    }
    greenwood_variance(&mut curve);
    Ok(curve)
}

/// Fill `variance` with Greenwood's estimate.
pub fn greenwood_variance(curve: &mut KmCurve) {
    let mut sum = Some(0.0);
    curve.variance = curve
        .deaths
        .iter()
        .zip(&curve.at_risk)
        .zip(&curve.survival)
        .map(|((&d, &r), &s)| {
            sum = match sum {
                Some(acc) if r > d => Some(acc + d as f64 / (r as f64 * (r - d) as f64)),
                _ => None,
            };
            sum.map(|acc| s * s * acc)
        })
        .collect();
}

/// Log-minus-log bands `S^exp(±z σ / (S ln S))` at the given confidence
/// level.
pub fn km_confidence(curve: &mut KmCurve, level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level {level} must lie in (0, 1)")));
    }
    let z = special::z_for_level(level);
    let (lo, hi): (Vec<_>, Vec<_>) = curve
        .survival
        .iter()
        .zip(&curve.variance)
        .map(|(&s, v)| match v {
            Some(v) if s > 0.0 && s < 1.0 => {
                let e = z * v.sqrt() / (s * s.ln());
                // s ln s < 0, so exp(e) < 1 raises s and gives the upper bound
                (Some(s.powf((-e).exp())), Some(s.powf(e.exp())))
            }
            _ => (None, None),
        })
        .unzip();
    curve.ci_lower = lo;
    curve.ci_upper = hi;
    curve.confidence_level = Some(level);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankTest {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Group codes in the order used for `observed` and `expected`.
    pub groups: [u32; 2],
    pub observed: [f64; 2],
    pub expected: [f64; 2],
}

/// Two-group log-rank test. The groups are the two distinct `group` codes
/// present in `samples`.
pub fn logrank_test(samples: &[SurvivalSample]) -> Result<LogRankTest> {
    validate(samples)?;
    let mut codes: Vec<u32> = samples
        .iter()
        .map(|s| {
            s.group
                .ok_or_else(|| Error::domain("log-rank test needs a group for every subject"))
        })
        .collect::<Result<_>>()?;
    codes.sort_unstable();
    codes.dedup();
    if codes.len() != 2 {
        return Err(Error::domain(format!(
            "log-rank test needs exactly two groups, found {}",
            codes.len()
        )));
    }
    let a = codes[0];
    let mut sorted: Vec<&SurvivalSample> = samples.iter().collect();
    sorted.sort_by(|x, y| x.duration.total_cmp(&y.duration));
    let n = sorted.len();
    let mut n_a = sorted.iter().filter(|s| s.group == Some(a)).count();
    let (mut o_a, mut o_total, mut e_a, mut var) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < n {
        let t = sorted[i].duration;
        let r = (n - i) as f64;
        let r_a = n_a as f64;
        let (mut d, mut d_a, mut leaving_a) = (0.0, 0.0, 0);
        while i < n && sorted[i].duration == t {
            let in_a = sorted[i].group == Some(a);
            if sorted[i].event {
                d += 1.0;
                if in_a {
                    d_a += 1.0;
                }
            }
            if in_a {
                leaving_a += 1;
            }
            i += 1;
        }
        if d > 0.0 {
            o_a += d_a;
            o_total += d;
            e_a += d * r_a / r;
            if r > 1.0 {
                var += d * (r_a / r) * (1.0 - r_a / r) * (r - d) / (r - 1.0);
            }
        }
        n_a -= leaving_a;
    }
    if o_total == 0.0 {
        return Err(Error::domain("log-rank test needs at least one event"));
    }
    let statistic = if var > 0.0 { (o_a - e_a).powi(2) / var } else { 0.0 };
    Ok(LogRankTest {
        statistic,
        df: 1,
        p_value: special::chi_square_sf(statistic, 1.0),
        groups: [codes[0], codes[1]],
        observed: [o_a, o_total - o_a],
        expected: [e_a, o_total - e_a],
    })
}
