use alloc::vec::Vec;

use super::{ParamId, Result, Tape, Tensor, Var};

/// Magnitude below which differences are measured absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Compares tape gradients of a scalar function with central differences
/// at `point` and returns the largest relative error over all coordinates.
///
/// `f` receives the point tensors as parameter leaves in order.
pub fn grad_check<F>(f: F, point: &[Tensor], eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let grads = {
        let mut tape = Tape::new(point);
        let vars: Vec<Var> = (0..point.len()).map(|i| tape.param(ParamId(i))).collect();
        let out = f(&mut tape, &vars)?;
        tape.backward(out)?
    };
    let mut work: Vec<Tensor> = point.to_vec();
    let mut worst = 0.0f64;
    for (p, tensor) in point.iter().enumerate() {
        for i in 0..tensor.len() {
            let orig = tensor.data()[i];
            work[p].data_mut()[i] = orig + eps;
            let up = value_only(&f, &work)?;
            work[p].data_mut()[i] = orig - eps;
            let down = value_only(&f, &work)?;
            work[p].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.get(ParamId(p)).map_or(0.0, |g| g.data()[i]);
            worst = worst.max(relative_error(analytic, numeric));
        }
    }
    Ok(worst)
}

fn value_only<F>(f: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new(params);
    let vars: Vec<Var> = (0..params.len()).map(|i| tape.param(ParamId(i))).collect();
    let out = f(&mut tape, &vars)?;
    Ok(tape.value(out).item())
}
