//! Linear interpolation schedule and pseudo-clean (x-pred) estimation.
//!
//! Time runs from pure noise at `t = 0` to clean data at `t = 1`, with
//! `z_t = alpha_t * x + sigma_t * eps`, `alpha_t = t`, `sigma_t = 1 - t`.
//! Samplers that count time the other way must convert before calling in.
//!
//! All functions are generic over the float type so the identities can be
//! checked in both single and double precision.

use num_traits::Float;
use thiserror::Error;

/// Default lower bound on `t` for the noise-form estimate, which divides by `t`.
pub const DEFAULT_T_FLOOR: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("time {0} is outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error(
        "near-singular time: t = {t} is below the floor {t_floor} for the noise-form estimate"
    )]
    NearSingularTime { t: f64, t_floor: f64 },
    #[error("t_floor must lie in (0, 1), got {0}")]
    InvalidFloor(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("schedule is not linear: at t = {t} got alpha = {alpha}, sigma = {sigma}")]
    NonLinearSchedule { t: f64, alpha: f64, sigma: f64 },
    #[error("{prediction:?} prediction does not match a {schedule:?} schedule")]
    PredictionMismatch {
        prediction: PredictionKind,
        schedule: ScheduleKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Velocity-predicting flow-matching model.
    LinearFlow,
    /// Noise-predicting model on the same linear path.
    LinearNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Schedule {
    kind: ScheduleKind,
    t_floor: f64,
}

impl Schedule {
    pub fn linear_flow() -> Self {
        Self {
            kind: ScheduleKind::LinearFlow,
            t_floor: DEFAULT_T_FLOOR,
        }
    }

    pub fn linear_noise(t_floor: f64) -> Result<Self, ScheduleError> {
        if !(t_floor > 0.0 && t_floor < 1.0) {
            return Err(ScheduleError::InvalidFloor(t_floor));
        }
        Ok(Self {
            kind: ScheduleKind::LinearNoise,
            t_floor,
        })
    }

    /// Build a schedule from arbitrary coefficient functions.
    ///
    /// Only the linear pair `alpha_t = t`, `sigma_t = 1 - t` is supported;
    /// anything else (cosine, VP, shifted) is rejected.
    pub fn from_coefficients(
        kind: ScheduleKind,
        t_floor: f64,
        alpha: impl Fn(f64) -> f64,
        sigma: impl Fn(f64) -> f64,
    ) -> Result<Self, ScheduleError> {
        for i in 0..=64 {
            let t = i as f64 / 64.0;
            let (a, s) = (alpha(t), sigma(t));
            if (a - t).abs() > 1e-12 || (s - (1.0 - t)).abs() > 1e-12 {
                return Err(ScheduleError::NonLinearSchedule {
                    t,
                    alpha: a,
                    sigma: s,
                });
            }
        }
        let mut schedule = Self::linear_noise(t_floor)?;
        schedule.kind = kind;
        Ok(schedule)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn t_floor(&self) -> f64 {
        self.t_floor
    }

    pub fn alpha(&self, t: f64) -> f64 {
        t
    }

    pub fn sigma(&self, t: f64) -> f64 {
        1.0 - t
    }

    /// Prediction kind a model on this schedule emits.
    pub fn prediction_kind(&self) -> PredictionKind {
        match self.kind {
            ScheduleKind::LinearFlow => PredictionKind::Velocity,
            ScheduleKind::LinearNoise => PredictionKind::Noise,
        }
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::linear_flow()
    }
}

/// A latent `z_t` together with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState<T = f64> {
    pub z: Vec<T>,
    pub t: T,
}

impl<T: Float> LatentState<T> {
    pub fn new(z: Vec<T>, t: T) -> Result<Self, ScheduleError> {
        check_time(t)?;
        check_finite(&z, "latent")?;
        Ok(Self { z, t })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    Velocity,
    Noise,
}

/// Model output at a given state: a velocity `v` or a noise estimate `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T = f64> {
    pub kind: PredictionKind,
    pub value: Vec<T>,
}

impl<T> Prediction<T> {
    pub fn velocity(value: Vec<T>) -> Self {
        Self {
            kind: PredictionKind::Velocity,
            value,
        }
    }

    pub fn noise(value: Vec<T>) -> Self {
        Self {
            kind: PredictionKind::Noise,
            value,
        }
    }
}

fn to_f64<T: Float>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

fn check_time<T: Float>(t: T) -> Result<(), ScheduleError> {
    if t >= T::zero() && t <= T::one() {
        Ok(())
    } else {
        Err(ScheduleError::TimeOutOfRange(to_f64(t)))
    }
}

fn check_dims(expected: usize, actual: usize) -> Result<(), ScheduleError> {
    if expected == actual {
        Ok(())
    } else {
        Err(ScheduleError::DimensionMismatch { expected, actual })
    }
}

fn check_finite<T: Float>(v: &[T], what: &'static str) -> Result<(), ScheduleError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ScheduleError::NonFinite(what))
    }
}

/// `z_t = t * x + (1 - t) * eps`.
pub fn interpolate<T: Float>(x: &[T], eps: &[T], t: T) -> Result<LatentState<T>, ScheduleError> {
    check_dims(x.len(), eps.len())?;
    check_time(t)?;
    check_finite(x, "data")?;
    check_finite(eps, "noise")?;
    let s = T::one() - t;
    let z = x
        .iter()
        .zip(eps)
        .map(|(&xi, &ei)| t * xi + s * ei)
        .collect();
    Ok(LatentState { z, t })
}

/// Ground-truth flow velocity `dz_t/dt = x - eps`, constant along the path.
pub fn true_velocity<T: Float>(x: &[T], eps: &[T]) -> Result<Vec<T>, ScheduleError> {
    check_dims(x.len(), eps.len())?;
    Ok(x.iter().zip(eps).map(|(&xi, &ei)| xi - ei).collect())
}

/// Pseudo-clean estimate of the final sample from an intermediate state.
///
/// Velocity form: `x = z_t + (1 - t) v`. Noise form: `x = (z_t - (1 - t) eps) / t`,
/// refused below `schedule.t_floor()`.
pub fn x_pred<T: Float>(
    state: &LatentState<T>,
    pred: &Prediction<T>,
    schedule: &Schedule,
) -> Result<Vec<T>, ScheduleError> {
    check_dims(state.z.len(), pred.value.len())?;
    check_time(state.t)?;
    if pred.kind != schedule.prediction_kind() {
        return Err(ScheduleError::PredictionMismatch {
            prediction: pred.kind,
            schedule: schedule.kind(),
        });
    }
    let t = state.t;
    let s = T::one() - t;
    let out: Vec<T> = match pred.kind {
        PredictionKind::Velocity => state
            .z
            .iter()
            .zip(&pred.value)
            .map(|(&z, &v)| z + s * v)
            .collect(),
        PredictionKind::Noise => {
            let t64 = to_f64(t);
            if t64 < schedule.t_floor() {
                return Err(ScheduleError::NearSingularTime {
                    t: t64,
                    t_floor: schedule.t_floor(),
                });
            }
            state
                .z
                .iter()
                .zip(&pred.value)
                .map(|(&z, &e)| (z - s * e) / t)
                .collect()
        }
    };
    check_finite(&out, "x-pred output")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolate_examples() {
        let z = interpolate(&[2.0, 4.0], &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(z.z, vec![1.0, 2.0]);
        assert_eq!(z.t, 0.5);

        let x = [0.3, -1.7, 2.2];
        let z = interpolate(&x, &[5.0, 6.0, 7.0], 1.0).unwrap();
        assert_eq!(z.z, x.to_vec());

        // 0.25*1 + 0.75*3 = 2.5 ; 0.25*(-1) + 0.75*5 = 3.5
        let z = interpolate(&[1.0, -1.0], &[3.0, 5.0], 0.25).unwrap();
        assert_eq!(z.z, vec![2.5, 3.5]);
    }

    #[test]
    fn interpolate_errors() {
        assert!(matches!(
            interpolate(&[1.0], &[1.0, 2.0], 0.5),
            Err(ScheduleError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            interpolate(&[1.0], &[1.0], 1.5),
            Err(ScheduleError::TimeOutOfRange(_))
        ));
        assert!(matches!(
            interpolate(&[1.0], &[1.0], -0.1),
            Err(ScheduleError::TimeOutOfRange(_))
        ));
        assert!(matches!(
            interpolate(&[f64::NAN], &[1.0], 0.1),
            Err(ScheduleError::NonFinite(_))
        ));
    }

    #[test]
    fn velocity_examples() {
        assert_eq!(
            true_velocity(&[1.5, 2.0], &[1.5, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            true_velocity(&[1.0, 2.0], &[0.0, 0.0]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            true_velocity(&[1.0, -1.0], &[3.0, 5.0]).unwrap(),
            vec![-2.0, -6.0]
        );
        assert!(true_velocity(&[1.0], &[]).is_err());
    }

    #[test]
    fn x_pred_at_t_one_is_identity() {
        let state = LatentState::new(vec![0.1, 0.2, -3.0], 1.0).unwrap();
        let pred = Prediction::velocity(vec![100.0, -5.0, 7.0]);
        assert_eq!(
            x_pred(&state, &pred, &Schedule::linear_flow()).unwrap(),
            state.z
        );
    }

    #[test]
    fn x_pred_recovers_data() {
        let x = [1.0, -2.0, 0.5];
        let eps = [0.3, 0.9, -1.1];
        for t in [0.0, 0.3, 0.77] {
            let state = interpolate(&x, &eps, t).unwrap();
            let v = true_velocity(&x, &eps).unwrap();
            let got = x_pred(&state, &Prediction::velocity(v), &Schedule::linear_flow()).unwrap();
            for (g, e) in got.iter().zip(&x) {
                assert!((g - e).abs() < 1e-12);
            }
        }
        let noise = Schedule::linear_noise(0.05).unwrap();
        for t in [0.05, 0.5, 1.0] {
            let state = interpolate(&x, &eps, t).unwrap();
            let got = x_pred(&state, &Prediction::noise(eps.to_vec()), &noise).unwrap();
            for (g, e) in got.iter().zip(&x) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_form_below_floor_is_refused() {
        let noise = Schedule::linear_noise(0.05).unwrap();
        let state = LatentState::new(vec![1.0], 0.01).unwrap();
        let err = x_pred(&state, &Prediction::noise(vec![0.0]), &noise).unwrap_err();
        assert!(matches!(err, ScheduleError::NearSingularTime { .. }));
        let state = LatentState::new(vec![1.0], 0.0).unwrap();
        assert!(x_pred(&state, &Prediction::noise(vec![0.0]), &noise).is_err());
    }

    #[test]
    fn x_pred_rejects_mismatches() {
        let state = LatentState::new(vec![1.0, 2.0], 0.5).unwrap();
        assert!(matches!(
            x_pred(
                &state,
                &Prediction::velocity(vec![1.0]),
                &Schedule::linear_flow()
            ),
            Err(ScheduleError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            x_pred(
                &state,
                &Prediction::noise(vec![1.0, 1.0]),
                &Schedule::linear_flow()
            ),
            Err(ScheduleError::PredictionMismatch { .. })
        ));
    }

    #[test]
    fn schedule_construction() {
        assert!(Schedule::linear_noise(0.0).is_err());
        assert!(Schedule::linear_noise(1.0).is_err());
        let s = Schedule::from_coefficients(ScheduleKind::LinearNoise, 0.1, |t| t, |t| 1.0 - t)
            .unwrap();
        assert_eq!(s.t_floor(), 0.1);
        assert_eq!(s.alpha(0.3), 0.3);
        assert_eq!(s.sigma(0.25), 0.75);
        let cosine = Schedule::from_coefficients(
            ScheduleKind::LinearFlow,
            0.05,
            |t| (t * std::f64::consts::FRAC_PI_2).sin(),
            |t| (t * std::f64::consts::FRAC_PI_2).cos(),
        );
        assert!(matches!(
            cosine,
            Err(ScheduleError::NonLinearSchedule { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let x = [1.0f32, -1.0];
        let eps = [3.0f32, 5.0];
        let state = interpolate(&x, &eps, 0.25f32).unwrap();
        assert_eq!(state.z, vec![2.5f32, 3.5]);
        let v = true_velocity(&x, &eps).unwrap();
        let got = x_pred(&state, &Prediction::velocity(v), &Schedule::linear_flow()).unwrap();
        assert!((got[0] - 1.0).abs() < 1e-6 && (got[1] + 1.0).abs() < 1e-6);
    }
}
