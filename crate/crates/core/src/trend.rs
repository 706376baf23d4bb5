//! Chains of same-sign waves whose peak amplitude grows linearly with the
//! shift `b`, and the straight-line extrapolation built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogisticWave;

/// Default relative tolerance on consecutive `A/b` ratios in [`auto_group`].
pub const DEFAULT_GROUP_TOLERANCE: f64 = 0.30;

/// Member count at which a chain is annotated as announcing a reversal.
pub const REVERSAL_MEMBERS: usize = 3;

/// Signed derivative-space peak `y_sat/(4a)`.
pub fn amplitude(w: &LogisticWave) -> f64 {
    w.amplitude()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveChain {
    pub chain_id: String,
    /// Ordered by `b`.
    pub member_ids: Vec<String>,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// `A_i / b_i` per member.
    pub ratios: Vec<f64>,
    pub reversal_flag: bool,
}

impl WaveChain {
    /// Amplitude the fitted line predicts at `b`.
    pub fn line_at(&self, b: f64) -> f64 {
        self.slope * b + self.intercept
    }
}

/// Least-squares line `A = slope·b + intercept` through the members'
/// `(b_i, A_i)`.
pub fn fit_chain(waves: &[LogisticWave], member_ids: &[&str]) -> Result<WaveChain> {
    let mut members: Vec<&LogisticWave> = Vec::with_capacity(member_ids.len());
    for id in member_ids {
        let w = waves
            .iter()
            .find(|w| w.id == *id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown wave id '{id}'")))?;
        if !members.iter().any(|m| m.id == w.id) {
            members.push(w);
        }
    }
    chain_from(members)
}

fn chain_from(mut members: Vec<&LogisticWave>) -> Result<WaveChain> {
    if members.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain too short: {} member(s), need at least 2",
            members.len()
        )));
    }
    let sign = members[0].y_sat.signum();
    if members.iter().any(|w| w.y_sat.signum() != sign) {
        return Err(Error::InvalidParameter("chain members have mixed y_sat signs".into()));
    }
    members.sort_by(|p, q| p.b.total_cmp(&q.b).then_with(|| p.id.cmp(&q.id)));

    let n = members.len() as f64;
    let bs: Vec<f64> = members.iter().map(|w| w.b).collect();
    let amps: Vec<f64> = members.iter().map(|w| w.amplitude()).collect();
    let mb = bs.iter().sum::<f64>() / n;
    let ma = amps.iter().sum::<f64>() / n;
    let sbb: f64 = bs.iter().map(|b| (b - mb) * (b - mb)).sum();
    if sbb <= 0.0 {
        return Err(Error::Numerical("chain members share one shift; no line through them".into()));
    }
    let sba: f64 = bs.iter().zip(&amps).map(|(b, a)| (b - mb) * (a - ma)).sum();
    let slope = sba / sbb;
    let intercept = ma - slope * mb;
    let residual_rms = (bs
        .iter()
        .zip(&amps)
        .map(|(b, a)| (a - slope * b - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let member_ids: Vec<String> = members.iter().map(|w| w.id.clone()).collect();
    Ok(WaveChain {
        chain_id: member_ids.join("+"),
        ratios: bs.iter().zip(&amps).map(|(b, a)| a / b).collect(),
        reversal_flag: members.len() >= REVERSAL_MEMBERS,
        member_ids,
        slope,
        intercept,
        residual_rms,
    })
}

/// Fitted line evaluated at `b_next`.
pub fn extrapolate_next(chain: &WaveChain, b_next: f64) -> f64 {
    chain.line_at(b_next)
}

/// Splits the waves by sign, orders each group by `b`, and cuts it wherever
/// consecutive ratios `A/b` differ by `tolerance` or more relative to the
/// larger of the two. Runs of at least two waves become chains, ordered by
/// their first shift.
pub fn auto_group(waves: &[LogisticWave], tolerance: f64) -> Result<Vec<WaveChain>> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "group tolerance must be finite and >= 0, got {tolerance}"
        )));
    }
    let mut chains = Vec::new();
    for sign in [1.0, -1.0] {
        let mut group: Vec<&LogisticWave> = waves
            .iter()
            .filter(|w| w.y_sat != 0.0 && w.y_sat.signum() == sign)
            .collect();
        group.sort_by(|p, q| p.b.total_cmp(&q.b).then_with(|| p.id.cmp(&q.id)));
        let mut run: Vec<&LogisticWave> = Vec::new();
        for w in group {
            if let Some(prev) = run.last() {
                if !close_ratios(prev, w, tolerance) {
                    chains.extend(chain_from(std::mem::take(&mut run)).ok());
                }
            }
            run.push(w);
        }
        chains.extend(chain_from(run).ok());
    }
    chains.sort_by(|p: &WaveChain, q: &WaveChain| p.chain_id.cmp(&q.chain_id));
    chains.sort_by(|p, q| first_b(waves, p).total_cmp(&first_b(waves, q)));
    Ok(chains)
}

fn first_b(waves: &[LogisticWave], c: &WaveChain) -> f64 {
    waves
        .iter()
        .find(|w| w.id == c.member_ids[0])
        .map_or(f64::INFINITY, |w| w.b)
}

fn close_ratios(p: &LogisticWave, q: &LogisticWave, tolerance: f64) -> bool {
    let rp = p.amplitude() / p.b;
    let rq = q.amplitude() / q.b;
    if !(rp.is_finite() && rq.is_finite()) {
        return false;
    }
    (rp - rq).abs() < tolerance * rp.abs().max(rq.abs())
}

/// JSON array of chain reports.
pub fn chains_to_json(chains: &[WaveChain]) -> Result<String> {
    Ok(serde_json::to_string_pretty(chains)?)
}
