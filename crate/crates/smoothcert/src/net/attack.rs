//! Projected gradient descent in the l-infinity ball, attacking the base
//! classifier on the clean input.

use crate::core::{Label, Vector};
use crate::error::{Error, Result};
use crate::net::mlp::Mlp;
use crate::net::tape::Tape;

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of the cross-entropy at `(x, y)` with respect to the input.
pub fn input_gradient(f: &Mlp, x: &[f64], y: Label) -> Result<Vec<f64>> {
    if x.len() != f.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.input_dim(),
            got: x.len(),
        });
    }
    if y.index() >= f.output_dim() {
        return Err(Error::OutOfRange(format!(
            "label {} out of range for {} classes",
            y.index(),
            f.output_dim()
        )));
    }
    let mut tape = Tape::new();
    let x_vars: Vec<_> = x.iter().map(|v| tape.leaf(*v)).collect();
    let params: Vec<_> = f.params_flat().iter().map(|p| tape.constant(*p)).collect();
    let scores = f.forward_tape(&mut tape, &params, &x_vars);
    let lse = tape.log_sum_exp(&scores);
    let ce = tape.sub(lse, scores[y.index()]);
    let adjoint = tape.backward(ce);
    Ok(tape.gradient(&adjoint, &x_vars))
}

/// PGD with sign-gradient ascent steps, projected onto the l-infinity ball
/// of radius `eps_inf` around `x` intersected with the clip box.
///
/// The returned point satisfies `|x'_i - x_i| <= eps_inf` and
/// `clip.0 <= x'_i <= clip.1` for every coordinate.
pub fn pgd_attack(
    f: &Mlp,
    x: &Vector,
    y: Label,
    eps_inf: f64,
    iters: usize,
    step: f64,
    clip: (f64, f64),
) -> Result<Vector> {
    if !(eps_inf >= 0.0 && eps_inf.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "eps_inf must be finite and non-negative, got {eps_inf}"
        )));
    }
    if !(step >= 0.0 && step.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "step must be finite and non-negative, got {step}"
        )));
    }
    let (lo, hi) = clip;
    if !(lo <= hi) {
        return Err(Error::OutOfRange(format!(
            "clip interval is empty: ({lo}, {hi})"
        )));
    }
    if x.as_slice().iter().any(|v| *v < lo || *v > hi) {
        return Err(Error::OutOfRange(
            "input lies outside the clip box".into(),
        ));
    }

    let mut adv: Vec<f64> = x.as_slice().to_vec();
    for _ in 0..iters {
        let grad = input_gradient(f, &adv, y)?;
        for i in 0..adv.len() {
            let stepped = adv[i] + step * sign(grad[i]);
            adv[i] = stepped
                .clamp(x[i] - eps_inf, x[i] + eps_inf)
                .clamp(lo, hi);
        }
    }
    Vector::new(adv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::BaseClassifier;
    use crate::core::rng_stream;

    fn label(i: usize) -> Label {
        Label::new(i, 2).unwrap()
    }

    /// Linear two-class net: score_1 = w . z, score_0 = 0.
    fn linear_net(w: &[f64]) -> Mlp {
        let mut stream = rng_stream(0, 0);
        let mut net = Mlp::new(&[w.len(), 2], &mut stream).unwrap();
        let mut params = vec![0.0; net.num_params()];
        params[w.len()..2 * w.len()].copy_from_slice(w);
        net.set_params_flat(&params).unwrap();
        net
    }

    #[test]
    fn zero_budget_returns_input_exactly() {
        let net = linear_net(&[1.0, -0.5]);
        let x = Vector::new(vec![0.3, 0.4]).unwrap();
        let adv = pgd_attack(&net, &x, label(1), 0.0, 10, 0.1, (-1.0, 1.0)).unwrap();
        assert_eq!(adv, x);
    }

    #[test]
    fn iterates_stay_feasible() {
        let mut stream = rng_stream(31, 0);
        let net = Mlp::new(&[3, 8, 2], &mut stream).unwrap();
        for trial in 0..50 {
            let x = Vector::new(vec![
                stream.next_uniform() * 1.6 - 0.8,
                stream.next_uniform() * 1.6 - 0.8,
                stream.next_uniform() * 1.6 - 0.8,
            ])
            .unwrap();
            let eps = 0.25;
            let adv = pgd_attack(&net, &x, label(trial % 2), eps, 10, eps / 4.0, (-1.0, 1.0))
                .unwrap();
            for i in 0..3 {
                assert!((adv[i] - x[i]).abs() <= eps + 1e-12);
                assert!(adv[i] >= -1.0 && adv[i] <= 1.0);
            }
        }
    }

    #[test]
    fn flips_a_linear_model_past_its_margin() {
        // score_1 = z_0, margin 0.1; budget 0.2 crosses it.
        let net = linear_net(&[1.0, 0.0]);
        let x = Vector::new(vec![0.1, 0.0]).unwrap();
        assert_eq!(net.evaluate(x.as_slice()).index(), 1);
        let adv = pgd_attack(&net, &x, label(1), 0.2, 10, 0.05, (-8.0, 8.0)).unwrap();
        assert_eq!(net.evaluate(adv.as_slice()).index(), 0, "adv {adv:?}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut stream = rng_stream(77, 1);
        let net = Mlp::new(&[2, 6, 2], &mut stream).unwrap();
        let x = [0.4, -0.3];
        let y = label(1);
        let grad = input_gradient(&net, &x, y).unwrap();
        let ce = |x: &[f64]| -> f64 {
            let s = net.forward(x);
            let m = s[0].max(s[1]);
            m + ((s[0] - m).exp() + (s[1] - m).exp()).ln() - s[y.index()]
        };
        const H: f64 = 1e-6;
        for i in 0..2 {
            let mut hi = x;
            let mut lo = x;
            hi[i] += H;
            lo[i] -= H;
            let fd = (ce(&hi) - ce(&lo)) / (2.0 * H);
            assert!((grad[i] - fd).abs() < 1e-6, "dim {i}: {} vs {fd}", grad[i]);
        }
    }

    #[test]
    fn rejects_input_outside_clip_box() {
        let net = linear_net(&[1.0]);
        let x = Vector::new(vec![2.0]).unwrap();
        assert!(pgd_attack(&net, &x, label(0), 0.1, 5, 0.05, (-1.0, 1.0)).is_err());
    }
}
