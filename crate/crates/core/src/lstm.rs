//! Single-layer LSTM cell: parameters, one forward step, and exact
//! backpropagation through time over a whole sequence.
//!
//! Gate equations (⊙ is elementwise):
//!
//! ```text
//! i  = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
//! o  = σ(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
//! c' = f ⊙ c + i ⊙ g               h' = o ⊙ tanh(c')
//! ```

use thiserror::Error;

use crate::numkit::{sigmoid, Matrix};
use crate::rng::SplitMix64;

/// Half-width of the uniform init range.
pub const INIT_RANGE: f64 = 0.08;
/// Initial forget-gate bias.
pub const FORGET_BIAS: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LstmError {
    #[error("hidden and embed sizes must be >= 1 (got hidden={hidden}, embed={embed})")]
    ZeroSize { hidden: usize, embed: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("upstream has {upstream} steps but inputs have {inputs}")]
    LengthMismatch { inputs: usize, upstream: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input,
    Forget,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate];

    pub fn suffix(self) -> &'static str {
        match self {
            Gate::Input => "i",
            Gate::Forget => "f",
            Gate::Output => "o",
            Gate::Candidate => "g",
        }
    }

    #[inline]
    fn idx(self) -> usize {
        self as usize
    }
}

/// Weights of one LSTM layer, indexed by [`Gate`].
///
/// The same type doubles as a gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    hidden: usize,
    embed: usize,
    /// `W_g`, hidden × embed
    pub w: [Matrix; 4],
    /// `U_g`, hidden × hidden
    pub u: [Matrix; 4],
    /// `b_g`, hidden × 1
    pub b: [Matrix; 4],
}

impl LstmParams {
    pub fn zeros(hidden: usize, embed: usize) -> Self {
        Self {
            hidden,
            embed,
            w: std::array::from_fn(|_| Matrix::zeros(hidden, embed)),
            u: std::array::from_fn(|_| Matrix::zeros(hidden, hidden)),
            b: std::array::from_fn(|_| Matrix::zeros(hidden, 1)),
        }
    }

    /// Uniform `[-0.08, 0.08]` weights drawn gate by gate (W then U), biases
    /// zero except the forget gate at 1.0.
    pub fn init(hidden: usize, embed: usize, rng: &mut SplitMix64) -> Result<Self, LstmError> {
        if hidden == 0 || embed == 0 {
            return Err(LstmError::ZeroSize { hidden, embed });
        }
        let mut p = Self::zeros(hidden, embed);
        for k in 0..4 {
            for x in p.w[k].data_mut() {
                *x = rng.uniform(-INIT_RANGE, INIT_RANGE);
            }
            for x in p.u[k].data_mut() {
                *x = rng.uniform(-INIT_RANGE, INIT_RANGE);
            }
        }
        p.b[Gate::Forget.idx()].fill(FORGET_BIAS);
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn embed(&self) -> usize {
        self.embed
    }

    pub fn gate_w(&self, g: Gate) -> &Matrix {
        &self.w[g.idx()]
    }

    pub fn gate_u(&self, g: Gate) -> &Matrix {
        &self.u[g.idx()]
    }

    pub fn gate_b(&self, g: Gate) -> &Matrix {
        &self.b[g.idx()]
    }

    /// Named tensors in a fixed order: `W_i, U_i, b_i, W_f, ...`.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::with_capacity(12);
        for g in Gate::ALL {
            let k = g.idx();
            out.push((format!("W_{}", g.suffix()), &self.w[k]));
            out.push((format!("U_{}", g.suffix()), &self.u[k]));
            out.push((format!("b_{}", g.suffix()), &self.b[k]));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = Vec::with_capacity(12);
        for ((g, w), (u, b)) in Gate::ALL
            .iter()
            .zip(self.w.iter_mut())
            .zip(self.u.iter_mut().zip(self.b.iter_mut()))
        {
            out.push((format!("W_{}", g.suffix()), w));
            out.push((format!("U_{}", g.suffix()), u));
            out.push((format!("b_{}", g.suffix()), b));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), LstmError> {
    if expected != got {
        return Err(LstmError::Shape {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, indexed by [`Gate`].
    gates: [Vec<f64>; 4],
    tanh_c: Vec<f64>,
}

fn forward_step(p: &LstmParams, x: &[f64], s: &LstmState) -> (LstmState, StepCache) {
    let hidden = p.hidden;
    let mut gates: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden]);
    for (k, z) in gates.iter_mut().enumerate() {
        z.copy_from_slice(p.b[k].data());
        p.w[k].matvec_acc(x, z);
        p.u[k].matvec_acc(&s.h, z);
        if k == Gate::Candidate.idx() {
            z.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            z.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
    }
    let [i, f, o, g] = &gates;
    let mut c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    for j in 0..hidden {
        c[j] = f[j] * s.c[j] + i[j] * g[j];
        tanh_c[j] = c[j].tanh();
        h[j] = o[j] * tanh_c[j];
    }
    let cache = StepCache {
        x: x.to_vec(),
        h_prev: s.h.clone(),
        c_prev: s.c.clone(),
        gates,
        tanh_c,
    };
    (LstmState { h, c }, cache)
}

pub fn lstm_step(p: &LstmParams, x: &[f64], s: &LstmState) -> Result<LstmState, LstmError> {
    check_len("input", p.embed, x.len())?;
    check_len("state.h", p.hidden, s.h.len())?;
    check_len("state.c", p.hidden, s.c.len())?;
    Ok(forward_step(p, x, s).0)
}

/// Unrolled forward pass with cached activations.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    steps: Vec<StepCache>,
    states: Vec<LstmState>,
    initial: LstmState,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State after step `t` (0-based).
    pub fn state(&self, t: usize) -> &LstmState {
        &self.states[t]
    }

    /// State after the last step, or the initial state for an empty sequence.
    pub fn final_state(&self) -> &LstmState {
        self.states.last().unwrap_or(&self.initial)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &[f64]> {
        self.states.iter().map(|s| s.h.as_slice())
    }

    /// Reverse-mode pass over the trace.
    ///
    /// `upstream_h[t]` is dL/dh_t arriving from outside the recurrence;
    /// `dc_final` is dL/dc at the last step. Parameter gradients are added to
    /// `grads`. Returns dL/d(initial state) and dL/dx_t for every step.
    pub fn backward_into(
        &self,
        p: &LstmParams,
        upstream_h: &[Vec<f64>],
        dc_final: Option<&[f64]>,
        grads: &mut LstmParams,
    ) -> Result<(LstmState, Vec<Vec<f64>>), LstmError> {
        if upstream_h.len() != self.steps.len() {
            return Err(LstmError::LengthMismatch {
                inputs: self.steps.len(),
                upstream: upstream_h.len(),
            });
        }
        let hidden = p.hidden;
        let mut dh_next = vec![0.0; hidden];
        let mut dc_next = match dc_final {
            Some(dc) => {
                check_len("dc_final", hidden, dc.len())?;
                dc.to_vec()
            }
            None => vec![0.0; hidden],
        };
        let mut dxs = vec![Vec::new(); self.steps.len()];
        let mut dz: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden]);

        for t in (0..self.steps.len()).rev() {
            let cache = &self.steps[t];
            check_len("upstream_h", hidden, upstream_h[t].len())?;
            let [i, f, o, g] = &cache.gates;
            for j in 0..hidden {
                let dh = dh_next[j] + upstream_h[t][j];
                let dc = dc_next[j] + dh * o[j] * (1.0 - cache.tanh_c[j] * cache.tanh_c[j]);
                let d_o = dh * cache.tanh_c[j];
                let d_i = dc * g[j];
                let d_g = dc * i[j];
                let d_f = dc * cache.c_prev[j];
                dz[Gate::Input.idx()][j] = d_i * i[j] * (1.0 - i[j]);
                dz[Gate::Forget.idx()][j] = d_f * f[j] * (1.0 - f[j]);
                dz[Gate::Output.idx()][j] = d_o * o[j] * (1.0 - o[j]);
                dz[Gate::Candidate.idx()][j] = d_g * (1.0 - g[j] * g[j]);
                dc_next[j] = dc * f[j];
            }
            let mut dx = vec![0.0; p.embed];
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..4 {
                grads.w[k].outer_acc(&dz[k], &cache.x);
                grads.u[k].outer_acc(&dz[k], &cache.h_prev);
                for (b, d) in grads.b[k].data_mut().iter_mut().zip(&dz[k]) {
                    *b += d;
                }
                p.w[k].matvec_t_acc(&dz[k], &mut dx);
                p.u[k].matvec_t_acc(&dz[k], &mut dh_next);
            }
            dxs[t] = dx;
        }
        Ok((
            LstmState {
                h: dh_next,
                c: dc_next,
            },
            dxs,
        ))
    }
}

pub fn lstm_forward<X: AsRef<[f64]>>(
    p: &LstmParams,
    inputs: &[X],
    initial: &LstmState,
) -> Result<LstmTrace, LstmError> {
    check_len("initial.h", p.hidden, initial.h.len())?;
    check_len("initial.c", p.hidden, initial.c.len())?;
    let mut steps = Vec::with_capacity(inputs.len());
    let mut states = Vec::with_capacity(inputs.len());
    let mut s = initial.clone();
    for x in inputs {
        let x = x.as_ref();
        check_len("input", p.embed, x.len())?;
        let (next, cache) = forward_step(p, x, &s);
        steps.push(cache);
        states.push(next.clone());
        s = next;
    }
    Ok(LstmTrace {
        steps,
        states,
        initial: initial.clone(),
    })
}

/// Gradients produced by [`lstm_sequence_backward`].
#[derive(Debug, Clone)]
pub struct SequenceGrads {
    pub params: LstmParams,
    pub initial: LstmState,
    pub inputs: Vec<Vec<f64>>,
}

/// Runs the forward recurrence and then its exact reverse-mode derivative.
pub fn lstm_sequence_backward<X: AsRef<[f64]>>(
    p: &LstmParams,
    inputs: &[X],
    initial: &LstmState,
    upstream_h: &[Vec<f64>],
    dc_final: Option<&[f64]>,
) -> Result<SequenceGrads, LstmError> {
    if upstream_h.len() != inputs.len() {
        return Err(LstmError::LengthMismatch {
            inputs: inputs.len(),
            upstream: upstream_h.len(),
        });
    }
    let trace = lstm_forward(p, inputs, initial)?;
    let mut params = LstmParams::zeros(p.hidden, p.embed);
    let (initial, inputs) = trace.backward_into(p, upstream_h, dc_final, &mut params)?;
    Ok(SequenceGrads {
        params,
        initial,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_params(hidden: usize, embed: usize, seed: u64, scale: f64) -> LstmParams {
        let mut rng = SplitMix64::new(seed);
        let mut p = LstmParams::zeros(hidden, embed);
        for (_, m) in p.tensors_mut() {
            for x in m.data_mut() {
                *x = rng.uniform(-scale, scale);
            }
        }
        p
    }

    fn random_vecs(n: usize, len: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..len).map(|_| rng.uniform(-1.0, 1.0)).collect())
            .collect()
    }

    #[test]
    fn init_shapes_and_determinism() {
        let a = LstmParams::init(2, 3, &mut SplitMix64::new(5)).unwrap();
        let b = LstmParams::init(2, 3, &mut SplitMix64::new(5)).unwrap();
        assert_eq!(a, b);
        for g in Gate::ALL {
            assert_eq!(a.gate_w(g).shape(), (2, 3));
            assert_eq!(a.gate_u(g).shape(), (2, 2));
            assert_eq!(a.gate_b(g).shape(), (2, 1));
        }
        assert_eq!(a.gate_b(Gate::Forget).data(), &[1.0, 1.0]);
        assert_eq!(a.gate_b(Gate::Input).data(), &[0.0, 0.0]);
        assert!(matches!(
            LstmParams::init(0, 3, &mut SplitMix64::new(1)),
            Err(LstmError::ZeroSize { .. })
        ));
    }

    #[test]
    fn init_range_over_a_million_draws() {
        let p = LstmParams::init(500, 500, &mut SplitMix64::new(17)).unwrap();
        let drawn: usize = p
            .tensors()
            .iter()
            .filter(|(n, _)| !n.starts_with('b'))
            .map(|(_, m)| m.data().len())
            .sum();
        assert!(drawn >= 1_000_000);
        let max = p
            .tensors()
            .iter()
            .filter(|(n, _)| !n.starts_with('b'))
            .map(|(_, m)| m.max_abs())
            .fold(0.0, f64::max);
        assert!(max <= INIT_RANGE);
    }

    #[test]
    fn zero_weights_zero_state() {
        let p = LstmParams::zeros(1, 1);
        let s = lstm_step(&p, &[0.7], &LstmState::zeros(1)).unwrap();
        assert_eq!(s.c, vec![0.0]);
        assert_eq!(s.h, vec![0.0]);
    }

    #[test]
    fn zero_weights_decay_cell() {
        let p = LstmParams::zeros(1, 1);
        let s = lstm_step(
            &p,
            &[0.3],
            &LstmState {
                h: vec![0.0],
                c: vec![2.0],
            },
        )
        .unwrap();
        assert!((s.c[0] - 1.0).abs() < 1e-15);
        assert!((s.h[0] - 0.380797).abs() < 1e-6);
    }

    #[test]
    fn saturated_gates_preserve_memory() {
        let mut p = LstmParams::zeros(2, 1);
        p.b[Gate::Forget.idx()].fill(60.0);
        p.b[Gate::Input.idx()].fill(-60.0);
        let s = LstmState {
            h: vec![0.1, -0.2],
            c: vec![1.5, -0.75],
        };
        let next = lstm_step(&p, &[1.0], &s).unwrap();
        for (a, b) in next.c.iter().zip(&s.c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_errors() {
        let p = LstmParams::zeros(2, 3);
        assert!(lstm_step(&p, &[1.0], &LstmState::zeros(2)).is_err());
        assert!(lstm_step(&p, &[1.0; 3], &LstmState::zeros(3)).is_err());
        let inputs = vec![vec![0.0; 3]; 2];
        assert!(matches!(
            lstm_sequence_backward(&p, &inputs, &LstmState::zeros(2), &[vec![0.0; 2]], None),
            Err(LstmError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn hidden_stays_bounded() {
        let p = random_params(6, 4, 3, 5.0);
        let mut rng = SplitMix64::new(4);
        let mut s = LstmState::zeros(6);
        for x in random_vecs(50, 4, &mut rng) {
            s = lstm_step(&p, &x, &s).unwrap();
            assert!(s.h.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let p = random_params(5, 3, 8, 0.5);
        let mut rng = SplitMix64::new(9);
        let xs = random_vecs(10, 3, &mut rng);
        let a = lstm_forward(&p, &xs, &LstmState::zeros(5)).unwrap();
        let b = lstm_forward(&p, &xs, &LstmState::zeros(5)).unwrap();
        assert_eq!(a.final_state(), b.final_state());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = random_params(4, 3, 1, 0.5);
        let mut rng = SplitMix64::new(2);
        let xs = random_vecs(6, 3, &mut rng);
        let up = vec![vec![0.0; 4]; 6];
        let g = lstm_sequence_backward(&p, &xs, &LstmState::zeros(4), &up, None).unwrap();
        assert!(g.params.tensors().iter().all(|(_, m)| m.max_abs() == 0.0));
        assert!(g.initial.h.iter().chain(&g.initial.c).all(|&v| v == 0.0));
        assert!(g.inputs.iter().flatten().all(|&v| v == 0.0));
    }

    /// Scalar objective `Σ_t <w_t, h_t> + <v, c_T>` whose gradient w.r.t.
    /// h_t is exactly `w_t` and w.r.t. c_T is `v`.
    fn objective(
        p: &LstmParams,
        xs: &[Vec<f64>],
        init: &LstmState,
        ws: &[Vec<f64>],
        v: &[f64],
    ) -> f64 {
        let trace = lstm_forward(p, xs, init).unwrap();
        let mut total = 0.0;
        for (h, w) in trace.outputs().zip(ws) {
            total += crate::numkit::dot(h, w);
        }
        total + crate::numkit::dot(&trace.final_state().c, v)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn backward_matches_central_differences() {
        let eps = 1e-5;
        for seed in 0..4u64 {
            let hidden = 3 + seed as usize;
            let embed = 2 + seed as usize;
            let len = 5 + 2 * seed as usize;
            let p = random_params(hidden, embed, seed, 0.6);
            let mut rng = SplitMix64::new(100 + seed);
            let xs = random_vecs(len, embed, &mut rng);
            let init = LstmState {
                h: random_vecs(1, hidden, &mut rng).remove(0),
                c: random_vecs(1, hidden, &mut rng).remove(0),
            };
            let ws = random_vecs(len, hidden, &mut rng);
            let v = random_vecs(1, hidden, &mut rng).remove(0);
            let g = lstm_sequence_backward(&p, &xs, &init, &ws, Some(&v)).unwrap();

            let mut worst: f64 = 0.0;
            let mut probe = p.clone();
            let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
            for (ti, name) in names.iter().enumerate() {
                let n = p.tensors()[ti].1.data().len();
                for k in 0..n {
                    let orig = p.tensors()[ti].1.data()[k];
                    probe.tensors_mut()[ti].1.data_mut()[k] = orig + eps;
                    let lp = objective(&probe, &xs, &init, &ws, &v);
                    probe.tensors_mut()[ti].1.data_mut()[k] = orig - eps;
                    let lm = objective(&probe, &xs, &init, &ws, &v);
                    probe.tensors_mut()[ti].1.data_mut()[k] = orig;
                    let fd = (lp - lm) / (2.0 * eps);
                    let an = g.params.tensors()[ti].1.data()[k];
                    let e = rel_err(an, fd);
                    assert!(e < 1e-4, "{name}[{k}] analytic={an} fd={fd}");
                    worst = worst.max(e);
                }
            }
            for t in 0..len {
                for k in 0..embed {
                    let mut xp = xs.clone();
                    xp[t][k] += eps;
                    let mut xm = xs.clone();
                    xm[t][k] -= eps;
                    let fd = (objective(&p, &xp, &init, &ws, &v)
                        - objective(&p, &xm, &init, &ws, &v))
                        / (2.0 * eps);
                    assert!(rel_err(g.inputs[t][k], fd) < 1e-4);
                }
            }
            for k in 0..hidden {
                for which in 0..2 {
                    let mut ip = init.clone();
                    let mut im = init.clone();
                    if which == 0 {
                        ip.h[k] += eps;
                        im.h[k] -= eps;
                    } else {
                        ip.c[k] += eps;
                        im.c[k] -= eps;
                    }
                    let fd = (objective(&p, &xs, &ip, &ws, &v)
                        - objective(&p, &xs, &im, &ws, &v))
                        / (2.0 * eps);
                    let an = if which == 0 { g.initial.h[k] } else { g.initial.c[k] };
                    assert!(rel_err(an, fd) < 1e-4);
                }
            }
            assert!(worst < 1e-4);
        }
    }

    #[test]
    fn input_gradient_is_causal() {
        // With upstream only at steps < t0, inputs at steps >= t0 get zero gradient.
        let p = random_params(4, 3, 21, 0.5);
        let mut rng = SplitMix64::new(22);
        let len = 8;
        let t0 = 5;
        let xs = random_vecs(len, 3, &mut rng);
        let mut up = random_vecs(len, 4, &mut rng);
        for u in up.iter_mut().skip(t0) {
            u.iter_mut().for_each(|v| *v = 0.0);
        }
        let g = lstm_sequence_backward(&p, &xs, &LstmState::zeros(4), &up, None).unwrap();
        for t in t0..len {
            assert!(g.inputs[t].iter().all(|&v| v == 0.0), "step {t}");
        }
        assert!(g.inputs[t0 - 1].iter().any(|&v| v != 0.0));
    }
}
