use super::LiftError;

/// Value and first two derivatives of the smooth clamp at a distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clamped {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Smoothly clamped distance: `D - D^2/(2s)` below `s`, the plateau `s/2` above.
///
/// Value and slope are continuous at `D = s`; the curvature jumps from `-1/s`
/// to zero there.
pub fn smooth_clamp(distance: f64, s: f64) -> Result<Clamped, LiftError> {
    if !(s > 0.0) {
        return Err(LiftError::InvalidThreshold(s));
    }
    if distance < 0.0 || distance.is_nan() {
        return Err(LiftError::NegativeDistance(distance));
    }
    Ok(if distance < s {
        Clamped {
            value: distance - distance * distance / (2.0 * s),
            slope: 1.0 - distance / s,
            curvature: -1.0 / s,
        }
    } else {
        Clamped {
            value: 0.5 * s,
            slope: 0.0,
            curvature: 0.0,
        }
    })
}
