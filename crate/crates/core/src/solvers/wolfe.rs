use crate::error::{Error, Result};

/// Constants of the strong Wolfe conditions and the search budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    /// Total number of trial evaluations.
    pub max_evals: usize,
    pub t_max: f64,
    /// Round-off allowance in the decrease tests, relative to `1 + |phi(0)|`.
    pub decrease_slack: f64,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 0.9, max_evals: 40, t_max: 1e10, decrease_slack: 1e-12 }
    }
}

impl WolfeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Wolfe constants must satisfy 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.decrease_slack >= 0.0) {
            return Err(Error::InvalidInput("decrease slack must be nonnegative".into()));
        }
        if self.max_evals == 0 || !(self.t_max > 0.0) {
            return Err(Error::InvalidInput("empty line-search budget".into()));
        }
        Ok(())
    }
}

/// Accepted step with the data computed at it.
#[derive(Clone, Debug)]
pub struct LineSearchOutcome<T> {
    pub t: f64,
    pub phi: f64,
    pub dphi: f64,
    pub data: Option<T>,
    /// Both strong Wolfe conditions hold (otherwise a fallback step).
    pub strong_wolfe: bool,
    pub evaluations: usize,
}

struct Trial<T> {
    t: f64,
    phi: f64,
    dphi: f64,
    data: Option<T>,
}

/// Minimizer of the cubic through two points with slopes, or `None` if the
/// interpolant has no interior minimizer.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

/// Strong Wolfe line search on `phi(t)`, `t > 0`.
///
/// `eval(t)` returns `(phi(t), phi'(t), data)`. Bracketing doubles the step
/// from `t_init`; the zoom phase uses safeguarded cubic interpolation. If the
/// curvature condition cannot be met within the budget, the best step with
/// sufficient decrease is returned instead. `dphi0 = 0` returns the zero step.
///
/// Function values are compared up to `decrease_slack (1 + |phi0|)`, so that
/// the search still terminates once the decrease drops below the accuracy
/// of `phi`; the curvature condition then selects the step.
pub fn wolfe_line_search<T>(
    mut eval: impl FnMut(f64) -> Result<(f64, f64, T)>,
    phi0: f64,
    dphi0: f64,
    t_init: f64,
    params: &WolfeParams,
) -> Result<LineSearchOutcome<T>> {
    params.validate()?;
    if !(phi0.is_finite() && dphi0.is_finite()) {
        return Err(Error::LineSearch("non-finite initial value or slope".into()));
    }
    if dphi0 > 0.0 {
        return Err(Error::LineSearch(format!("ascent direction, slope {dphi0:e}")));
    }
    if dphi0 == 0.0 {
        return Ok(LineSearchOutcome { t: 0.0, phi: phi0, dphi: 0.0, data: None, strong_wolfe: true, evaluations: 0 });
    }
    let (c1, c2) = (params.c1, params.c2);
    let slack = params.decrease_slack * (1.0 + phi0.abs());
    let armijo = |t: f64, phi: f64| phi <= phi0 + c1 * t * dphi0 + slack;
    let curvature = |dphi: f64| dphi.abs() <= -c2 * dphi0;

    let mut evals = 0usize;
    let mut best: Option<Trial<T>> = None;
    let mut run = |t: f64, best: &mut Option<Trial<T>>, evals: &mut usize| -> Result<(f64, f64, Option<T>)> {
        *evals += 1;
        let (phi, dphi, data) = eval(t)?;
        // non-finite values (e.g. outside the objective's domain) act as +inf
        let (phi, dphi) = if phi.is_finite() && dphi.is_finite() { (phi, dphi) } else { (f64::INFINITY, f64::NAN) };
        let mut data = Some(data);
        if armijo(t, phi) && best.as_ref().map_or(true, |b| phi < b.phi) {
            *best = Some(Trial { t, phi, dphi, data: data.take() });
        }
        Ok((phi, dphi, data))
    };
    let accept = |t: f64, phi: f64, dphi: f64, data: Option<T>, best: &mut Option<Trial<T>>, evals: usize| {
        // the best-trial slot may already own the data for this step
        let data = data.or_else(|| best.take().filter(|b| b.t == t).and_then(|b| b.data));
        LineSearchOutcome { t, phi, dphi, data, strong_wolfe: true, evaluations: evals }
    };

    let mut prev = (0.0, phi0, dphi0);
    let mut t = t_init.clamp(f64::MIN_POSITIVE, params.t_max);
    let mut bracket: Option<((f64, f64, f64), (f64, f64, f64))> = None;
    let mut first = true;
    while evals < params.max_evals {
        let (phi, dphi, data) = run(t, &mut best, &mut evals)?;
        if !armijo(t, phi) || (!first && phi > prev.1 + slack) {
            bracket = Some((prev, (t, phi, dphi)));
            break;
        }
        if curvature(dphi) {
            let n = evals;
            return Ok(accept(t, phi, dphi, data, &mut best, n));
        }
        if dphi >= 0.0 {
            bracket = Some(((t, phi, dphi), prev));
            break;
        }
        first = false;
        prev = (t, phi, dphi);
        if t >= params.t_max {
            break;
        }
        t = (2.0 * t).min(params.t_max);
    }

    if let Some((mut lo, mut hi)) = bracket {
        while evals < params.max_evals {
            let (a, b) = (lo.0.min(hi.0), lo.0.max(hi.0));
            let width = b - a;
            if width <= 1e-16 * b.max(1.0) {
                break;
            }
            let guard = 0.1 * width;
            let mut tj = if hi.2.is_finite() {
                cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2).unwrap_or(0.5 * (a + b))
            } else {
                0.5 * (a + b)
            };
            if !(tj >= a + guard && tj <= b - guard) {
                tj = 0.5 * (a + b);
            }
            let (phi, dphi, data) = run(tj, &mut best, &mut evals)?;
            if !armijo(tj, phi) || phi > lo.1 + slack {
                hi = (tj, phi, dphi);
            } else {
                if curvature(dphi) {
                    let n = evals;
                    return Ok(accept(tj, phi, dphi, data, &mut best, n));
                }
                if dphi * (hi.0 - lo.0) >= 0.0 {
                    hi = lo;
                }
                lo = (tj, phi, dphi);
            }
        }
    }

    match best {
        Some(b) if b.t >= 1e-14 => Ok(LineSearchOutcome {
            t: b.t,
            phi: b.phi,
            dphi: b.dphi,
            data: b.data,
            strong_wolfe: false,
            evaluations: evals,
        }),
        _ => Err(Error::LineSearch(format!("no decrease found in {evals} evaluations"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(t: f64) -> Result<(f64, f64, ())> {
        Ok(((t - 1.0).powi(2), 2.0 * (t - 1.0), ()))
    }

    #[test]
    fn unit_step_accepted_on_quadratic() {
        let out = wolfe_line_search(quad, 1.0, -2.0, 1.0, &WolfeParams::default()).unwrap();
        assert_eq!(out.t, 1.0);
        assert!(out.strong_wolfe);
        assert_eq!(out.evaluations, 1);
    }

    #[test]
    fn small_initial_step_expands_into_the_wolfe_bracket() {
        let p = WolfeParams { c2: 0.1, ..Default::default() };
        let out = wolfe_line_search(quad, 1.0, -2.0, 1e-3, &p).unwrap();
        assert!(out.strong_wolfe);
        assert!((out.t - 1.0).abs() <= 0.1, "t = {}", out.t);
        // overshooting start is pulled back by interpolation
        let out = wolfe_line_search(quad, 1.0, -2.0, 50.0, &p).unwrap();
        assert!((out.t - 1.0).abs() <= 0.1, "t = {}", out.t);
    }

    #[test]
    fn zero_slope_returns_zero_step() {
        let out = wolfe_line_search(quad, 0.0, 0.0, 1.0, &WolfeParams::default()).unwrap();
        assert_eq!(out.t, 0.0);
        assert!(out.data.is_none());
    }

    #[test]
    fn ascent_is_rejected() {
        assert!(wolfe_line_search(quad, 1.0, 2.0, 1.0, &WolfeParams::default()).is_err());
    }

    #[test]
    fn linear_decrease_falls_back_to_a_decrease_step() {
        let lin = |t: f64| Ok((-t, -1.0, t));
        let p = WolfeParams { max_evals: 10, t_max: 8.0, ..Default::default() };
        let out = wolfe_line_search(lin, 0.0, -1.0, 1.0, &p).unwrap();
        assert!(!out.strong_wolfe);
        assert_eq!(out.t, 8.0);
        assert_eq!(out.data, Some(8.0));
    }

    #[test]
    fn no_decrease_is_an_error() {
        // slope claims descent but the function only increases
        let bad = |t: f64| Ok((t, 1.0, ()));
        let p = WolfeParams { decrease_slack: 0.0, ..Default::default() };
        assert!(wolfe_line_search(bad, 0.0, -1.0, 1.0, &p).is_err());
    }

    #[test]
    fn decrease_below_round_off_is_decided_by_curvature() {
        // phi varies by 1e-20 only; its slope is still informative
        let flat = |t: f64| Ok((1.0 + 1e-20 * (t - 1.0).powi(2), 2e-20 * (t - 1.0), ()));
        let out = wolfe_line_search(flat, 1.0, -2e-20, 0.25, &WolfeParams { c2: 0.1, ..Default::default() }).unwrap();
        assert!(out.strong_wolfe);
        assert!((out.t - 1.0).abs() <= 0.1, "t = {}", out.t);
    }

    #[test]
    fn strong_conditions_hold_on_a_quartic() {
        let f = |t: f64| Ok((t.powi(4) - 3.0 * t * t + t, 4.0 * t.powi(3) - 6.0 * t + 1.0, ()));
        let p = WolfeParams { c2: 0.5, ..Default::default() };
        // slope at 0 is +1, so search along the reflected direction
        let g = |t: f64| f(-t).map(|(v, d, u)| (v, -d, u));
        let out = wolfe_line_search(g, 0.0, -1.0, 0.1, &p).unwrap();
        assert!(out.strong_wolfe);
        assert!(out.phi <= 1e-4 * out.t * -1.0);
        assert!(out.dphi.abs() <= 0.5);
    }
}
