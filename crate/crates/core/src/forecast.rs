//! One-step-ahead and short-horizon forecasting of traffic and harvest
//! series.
//!
//! Two predictors are built in: seasonal persistence (repeat the value one
//! season back) and a small recurrent cell trained by truncated gradient
//! descent on one-step squared error. Both are fit once and frozen; realized
//! values are appended as the simulation advances so predictions always
//! condition on the observed past only.

use crate::error::{Error, Result};
use crate::seeds;
use rand::Rng;

/// Internal training constants for the recurrent cell.
const LEARN_RATE: f64 = 0.08;
const GRAD_CLIP: f64 = 5.0;
const INIT_SCALE: f64 = 0.4;
/// How many steps back each gradient update unrolls the recurrence.
const TRUNCATION_DEPTH: usize = 8;

/// Which predictor to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastKind {
    /// Repeat the value from one season earlier.
    SeasonalPersistence,
    /// Single-layer recurrent cell with a linear readout.
    Recurrent,
}

/// Forecaster configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterSpec {
    pub kind: ForecastKind,
    /// Season length in slots (48 = one day of 30-minute slots).
    pub season_length: usize,
    /// Hidden state dimension of the recurrent cell.
    pub hidden_units: usize,
    /// Training epochs for the recurrent cell.
    pub epochs: usize,
    /// Leading fraction of the history used for training.
    pub train_fraction: f64,
}

impl Default for ForecasterSpec {
    fn default() -> Self {
        Self {
            kind: ForecastKind::SeasonalPersistence,
            season_length: 48,
            hidden_units: 4,
            epochs: 100,
            train_fraction: 0.67,
        }
    }
}

impl ForecasterSpec {
    pub fn validate(&self) -> Result<()> {
        if self.season_length == 0 {
            return Err(Error::Config("forecast.season_length must be at least 1".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::Config("forecast.hidden_units must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("forecast.epochs must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config("forecast.train_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Predictions for slots `origin + 1 ..= origin + predictions.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastHorizon {
    pub origin: usize,
    pub predictions: Vec<f64>,
}

/// A fitted predictor holding its observed history.
#[derive(Debug, Clone)]
pub enum Forecaster {
    Seasonal(Seasonal),
    Recurrent(Recurrent),
}

#[derive(Debug, Clone)]
pub struct Seasonal {
    season: usize,
    history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Recurrent {
    hidden: usize,
    /// Input weights, one per hidden unit.
    wx: Vec<f64>,
    /// Recurrent weights, row-major `hidden x hidden`.
    wh: Vec<f64>,
    bh: Vec<f64>,
    /// Readout weights.
    wo: Vec<f64>,
    bo: f64,
    /// Min-max normalization constants frozen at fit time.
    norm_min: f64,
    norm_range: f64,
    history: Vec<f64>,
}

/// Fits a predictor on `history` (oldest value first).
///
/// Seasonal persistence requires at least two full seasons of history; the
/// recurrent cell trains on the leading `train_fraction` of the history and
/// needs at least 16 values there. The result is deterministic in
/// `(spec, history, seed)`.
pub fn fit(spec: &ForecasterSpec, history: &[f64], seed: u64) -> Result<Forecaster> {
    spec.validate()?;
    if history.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Training("history holds negative or non-finite values".into()));
    }
    match spec.kind {
        ForecastKind::SeasonalPersistence => {
            if history.len() < 2 * spec.season_length {
                return Err(Error::Training(format!(
                    "seasonal persistence needs at least {} values, got {}",
                    2 * spec.season_length,
                    history.len()
                )));
            }
            Ok(Forecaster::Seasonal(Seasonal {
                season: spec.season_length,
                history: history.to_vec(),
            }))
        }
        ForecastKind::Recurrent => Ok(Forecaster::Recurrent(Recurrent::fit(spec, history, seed)?)),
    }
}

impl Forecaster {
    /// Predicts the value at slot `origin + k`, conditioned on the observed
    /// values at slots `0..=origin` only. `k` is 1-based.
    pub fn predict(&self, origin: usize, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Domain("prediction step k must be at least 1".into()));
        }
        match self {
            Forecaster::Seasonal(s) => s.predict(origin, k),
            Forecaster::Recurrent(r) => {
                let h = r.roll_to(origin)?;
                Ok(r.extend(h, origin, k).pop().expect("k >= 1"))
            }
        }
    }

    /// Predictions for the next `t` slots after `origin` in one call.
    pub fn horizon(&self, origin: usize, t: usize) -> Result<ForecastHorizon> {
        if t == 0 {
            return Err(Error::Domain("horizon length must be at least 1".into()));
        }
        let predictions = match self {
            Forecaster::Seasonal(s) => {
                (1..=t).map(|k| s.predict(origin, k)).collect::<Result<Vec<_>>>()?
            }
            Forecaster::Recurrent(r) => r.extend(r.roll_to(origin)?, origin, t),
        };
        Ok(ForecastHorizon { origin, predictions })
    }

    /// Appends one realized value to the observed history.
    pub fn push(&mut self, value: f64) {
        match self {
            Forecaster::Seasonal(s) => s.history.push(value),
            Forecaster::Recurrent(r) => r.history.push(value),
        }
    }

    pub fn history_len(&self) -> usize {
        match self {
            Forecaster::Seasonal(s) => s.history.len(),
            Forecaster::Recurrent(r) => r.history.len(),
        }
    }
}

impl Seasonal {
    fn predict(&self, origin: usize, k: usize) -> Result<f64> {
        if origin >= self.history.len() {
            return Err(Error::Domain(format!(
                "origin {origin} not yet observed (history ends at {})",
                self.history.len()
            )));
        }
        if k > self.season {
            return Err(Error::Domain(format!(
                "step {k} exceeds the season length {}",
                self.season
            )));
        }
        let idx = (origin + k).checked_sub(self.season).ok_or_else(|| {
            Error::Domain(format!("origin {origin} has no value one season back for step {k}"))
        })?;
        Ok(self.history[idx])
    }
}

impl Recurrent {
    fn fit(spec: &ForecasterSpec, history: &[f64], seed: u64) -> Result<Self> {
        if history.len() < 10 {
            return Err(Error::Training(format!(
                "recurrent cell needs at least 10 history values, got {}",
                history.len()
            )));
        }
        let n_train =
            (((history.len() as f64) * spec.train_fraction).floor() as usize).max(2);
        let train = &history[..n_train];
        let lo = train.iter().cloned().fold(f64::MAX, f64::min);
        let hi = train.iter().cloned().fold(f64::MIN, f64::max);
        let range = if hi - lo > 1e-12 { hi - lo } else { 1.0 };

        let h_dim = spec.hidden_units;
        let mut rng = seeds::rng(seed, &[h_dim as u64, spec.epochs as u64]);
        let mut init = || rng.gen_range(-INIT_SCALE..INIT_SCALE);
        let mut cell = Self {
            hidden: h_dim,
            wx: (0..h_dim).map(|_| init()).collect(),
            wh: (0..h_dim * h_dim).map(|_| init()).collect(),
            bh: vec![0.0; h_dim],
            wo: (0..h_dim).map(|_| init()).collect(),
            bo: 0.0,
            norm_min: lo,
            norm_range: range,
            history: history.to_vec(),
        };

        let x: Vec<f64> = train.iter().map(|v| (v - lo) / range).collect();
        let mut h = vec![0.0; h_dim];
        let mut z = vec![0.0; h_dim];
        // Rolling window of (input, pre-step hidden, post-step hidden) for
        // backpropagation truncated at TRUNCATION_DEPTH steps.
        let mut window: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(TRUNCATION_DEPTH);
        for _ in 0..spec.epochs {
            h.iter_mut().for_each(|v| *v = 0.0);
            window.clear();
            for t in 0..x.len() - 1 {
                // Forward: consume x[t], predict x[t+1].
                let h_prev = h.clone();
                cell.step(x[t], &h_prev, &mut z, &mut h);
                let y_hat: f64 =
                    cell.wo.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>() + cell.bo;
                let err = clip(y_hat - x[t + 1]);
                if window.len() == TRUNCATION_DEPTH {
                    window.remove(0);
                }
                window.push((x[t], h_prev, h.clone()));

                // Backward through the window; the hidden state at its far
                // end is treated as a constant.
                let mut gwx = vec![0.0; h_dim];
                let mut gbh = vec![0.0; h_dim];
                let mut gwh = vec![0.0; h_dim * h_dim];
                let mut dh: Vec<f64> = cell.wo.iter().map(|w| err * w).collect();
                for (xs, hp, hs) in window.iter().rev() {
                    let dz: Vec<f64> = (0..h_dim)
                        .map(|i| clip(dh[i] * (1.0 - hs[i] * hs[i])))
                        .collect();
                    for i in 0..h_dim {
                        gwx[i] += dz[i] * xs;
                        gbh[i] += dz[i];
                        for j in 0..h_dim {
                            gwh[i * h_dim + j] += dz[i] * hp[j];
                        }
                    }
                    let mut dh_prev = vec![0.0; h_dim];
                    for (j, d) in dh_prev.iter_mut().enumerate() {
                        for (i, dzi) in dz.iter().enumerate() {
                            *d += dzi * cell.wh[i * h_dim + j];
                        }
                    }
                    dh = dh_prev;
                }
                for i in 0..h_dim {
                    cell.wo[i] -= LEARN_RATE * clip(err * h[i]);
                    cell.wx[i] -= LEARN_RATE * clip(gwx[i]);
                    cell.bh[i] -= LEARN_RATE * clip(gbh[i]);
                    for j in 0..h_dim {
                        cell.wh[i * h_dim + j] -= LEARN_RATE * clip(gwh[i * h_dim + j]);
                    }
                }
                cell.bo -= LEARN_RATE * err;
            }
        }
        Ok(cell)
    }

    /// One cell update: `h = tanh(wx*x + Wh*h_prev + bh)`.
    fn step(&self, x: f64, h_prev: &[f64], z: &mut [f64], h: &mut [f64]) {
        for i in 0..self.hidden {
            let mut acc = self.wx[i] * x + self.bh[i];
            for (j, hp) in h_prev.iter().enumerate() {
                acc += self.wh[i * self.hidden + j] * hp;
            }
            z[i] = acc;
            h[i] = acc.tanh();
        }
    }

    /// Rolls the hidden state through the observed prefix `0..=origin`.
    fn roll_to(&self, origin: usize) -> Result<Vec<f64>> {
        if origin >= self.history.len() {
            return Err(Error::Domain(format!(
                "origin {origin} not yet observed (history ends at {})",
                self.history.len()
            )));
        }
        let mut h = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.hidden];
        let mut next = vec![0.0; self.hidden];
        for v in &self.history[..=origin] {
            let x = (v - self.norm_min) / self.norm_range;
            self.step(x, &h, &mut z, &mut next);
            std::mem::swap(&mut h, &mut next);
        }
        Ok(h)
    }

    /// Iterated rollout: reads out `k` predictions, feeding each back as the
    /// next input (clamped to the normalized training range).
    fn extend(&self, mut h: Vec<f64>, _origin: usize, k: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.hidden];
        let mut next = vec![0.0; self.hidden];
        let mut out = Vec::with_capacity(k);
        for step in 0..k {
            let y: f64 = self.wo.iter().zip(&h).map(|(w, hv)| w * hv).sum::<f64>() + self.bo;
            out.push((y * self.norm_range + self.norm_min).max(0.0));
            if step + 1 < k {
                self.step(y.clamp(0.0, 1.0), &h, &mut z, &mut next);
                std::mem::swap(&mut h, &mut next);
            }
        }
        out
    }
}

fn clip(g: f64) -> f64 {
    g.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Root-mean-square error between two equal-length series.
pub fn rmse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::Domain(format!(
            "length mismatch: {} predictions vs {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Domain("rmse of empty series".into()));
    }
    let se: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((se / predictions.len() as f64).sqrt())
}

/// Index of the first test slot for a series of length `n` under the given
/// training fraction.
pub fn train_test_boundary(n: usize, train_fraction: f64) -> usize {
    ((n as f64) * train_fraction).floor() as usize
}

/// k-step-ahead RMSE of a predictor over the test region of `series`.
///
/// The predictor is fit on the full series (the recurrent cell trains only
/// on the leading `train_fraction`); every prediction at origin `o`
/// conditions on slots `0..=o` only, so no test value leaks into its own
/// prediction.
pub fn k_step_rmse(spec: &ForecasterSpec, seed: u64, series: &[f64], k: usize) -> Result<f64> {
    let f = fit(spec, series, seed)?;
    let start = train_test_boundary(series.len(), spec.train_fraction);
    if start + k >= series.len() {
        return Err(Error::Domain("test region too short for the requested step".into()));
    }
    let mut preds = Vec::new();
    let mut actuals = Vec::new();
    for (target, &actual) in series.iter().enumerate().skip(start) {
        let origin = match target.checked_sub(k) {
            Some(o) => o,
            None => continue,
        };
        preds.push(f.predict(origin, k)?);
        actuals.push(actual);
    }
    rmse(&preds, &actuals)
}

/// k-step-ahead RMSE of last-value persistence (predict the origin's value)
/// over the same test region as [`k_step_rmse`].
pub fn last_value_k_step_rmse(series: &[f64], train_fraction: f64, k: usize) -> Result<f64> {
    let start = train_test_boundary(series.len(), train_fraction);
    if start + k >= series.len() {
        return Err(Error::Domain("test region too short for the requested step".into()));
    }
    let mut preds = Vec::new();
    let mut actuals = Vec::new();
    for (target, &actual) in series.iter().enumerate().skip(start) {
        let origin = match target.checked_sub(k) {
            Some(o) => o,
            None => continue,
        };
        preds.push(series[origin]);
        actuals.push(actual);
    }
    rmse(&preds, &actuals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinusoid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|t| 0.5 + 0.45 * (2.0 * std::f64::consts::PI * t as f64 / 48.0).sin())
            .collect()
    }

    #[test]
    fn test_rmse_example() {
        let r = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn test_seasonal_repeats_one_season_back() {
        let series: Vec<f64> = (0..120).map(|t| t as f64).collect();
        let f = fit(&ForecasterSpec::default(), &series, 0).unwrap();
        // Prediction for slot 100 from origin 99 is the value at slot 52.
        assert_eq!(f.predict(99, 1).unwrap(), 52.0);
        assert_eq!(f.predict(99, 3).unwrap(), 54.0);
    }

    #[test]
    fn test_seasonal_exact_on_periodic_series() {
        let series = sinusoid(480);
        let f = fit(&ForecasterSpec::default(), &series, 0).unwrap();
        for origin in 96..476 {
            for k in 1..=3usize {
                let err = (f.predict(origin, k).unwrap() - series[origin + k]).abs();
                assert!(err < 1e-12, "origin {origin} k {k} err {err}");
            }
        }
        let r = k_step_rmse(&ForecasterSpec::default(), 0, &series, 1).unwrap();
        assert!(r < 1e-12, "seasonal RMSE {r} on a period-48 series");
    }

    #[test]
    fn test_seasonal_constant_series() {
        let f = fit(&ForecasterSpec::default(), &vec![7.5; 96], 0).unwrap();
        assert_eq!(f.predict(95, 1).unwrap(), 7.5);
    }

    #[test]
    fn test_seasonal_needs_two_seasons() {
        let err = fit(&ForecasterSpec::default(), &vec![1.0; 95], 0);
        assert!(matches!(err, Err(Error::Training(_))));
    }

    #[test]
    fn test_push_extends_prediction_range() {
        let series: Vec<f64> = (0..96).map(|t| t as f64).collect();
        let mut f = fit(&ForecasterSpec::default(), &series, 0).unwrap();
        assert!(f.predict(96, 1).is_err());
        f.push(96.0);
        assert_eq!(f.predict(96, 1).unwrap(), 49.0);
    }

    #[test]
    fn test_recurrent_deterministic() {
        let spec = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
        let series = sinusoid(300);
        let a = fit(&spec, &series, 42).unwrap();
        let b = fit(&spec, &series, 42).unwrap();
        for k in 1..=3 {
            assert_eq!(a.predict(250, k).unwrap().to_bits(), b.predict(250, k).unwrap().to_bits());
        }
        let c = fit(&spec, &series, 43).unwrap();
        assert_ne!(a.predict(250, 1).unwrap(), c.predict(250, 1).unwrap());
    }

    #[test]
    fn test_recurrent_beats_last_value_on_sinusoid() {
        let spec = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
        let series = sinusoid(480);
        let model = k_step_rmse(&spec, 7, &series, 1).unwrap();
        let naive = last_value_k_step_rmse(&series, spec.train_fraction, 1).unwrap();
        assert!(model < naive, "recurrent {model} not below last-value {naive}");
    }

    #[test]
    fn test_recurrent_outputs_non_negative() {
        let spec = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
        // A series hugging zero must not yield negative forecasts.
        let series: Vec<f64> = (0..200).map(|t| if t % 48 < 24 { 0.0 } else { 1.0 }).collect();
        let f = fit(&spec, &series, 3).unwrap();
        for origin in 150..199 {
            for k in 1..=3 {
                assert!(f.predict(origin, k).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn test_horizon_matches_predict() {
        let spec = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
        let series = sinusoid(300);
        let f = fit(&spec, &series, 5).unwrap();
        let h = f.horizon(280, 3).unwrap();
        assert_eq!(h.origin, 280);
        for (i, p) in h.predictions.iter().enumerate() {
            assert_eq!(*p, f.predict(280, i + 1).unwrap());
        }
    }

    #[test]
    fn test_recurrent_needs_history() {
        let spec = ForecasterSpec { kind: ForecastKind::Recurrent, ..Default::default() };
        assert!(matches!(fit(&spec, &[1.0], 0), Err(Error::Training(_))));
    }

    #[test]
    fn test_fit_rejects_negative_history() {
        let err = fit(&ForecasterSpec::default(), &vec![-1.0; 96], 0);
        assert!(matches!(err, Err(Error::Training(_))));
    }
}
