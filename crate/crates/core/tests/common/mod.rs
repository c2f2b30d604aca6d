//! Reference computations shared by the integration tests. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

pub type M2 = [[f64; 2]; 2];

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Two-state transition matrix from the spectral form.
pub fn transition(theta0: f64, theta1: f64, t: f64) -> M2 {
    let s = theta0 + theta1;
    if s == 0.0 {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let e = (-s * t).exp();
    let (p, q) = (theta0 / s, theta1 / s);
    [[q + p * e, p - p * e], [q - q * e, p + q * e]]
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn axpy(a: &M2, h: f64, b: &M2) -> M2 {
    let mut c = *a;
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] += h * b[i][j];
        }
    }
    c
}

/// Solves `Phi' = Phi (Q + diag u(s))`, `Phi(s0) = I` over `[s0, s0 + len]`
/// with classical Runge-Kutta.
pub fn tilted_propagator(theta: [f64; 2], u: impl Fn(f64) -> [f64; 2], s0: f64, len: f64, steps: usize) -> M2 {
    let gen = |s: f64| {
        let v = u(s);
        [[-theta[0] + v[0], theta[0]], [theta[1], -theta[1] + v[1]]]
    };
    let h = len / steps as f64;
    let mut y: M2 = [[1.0, 0.0], [0.0, 1.0]];
    for k in 0..steps {
        let s = s0 + k as f64 * h;
        let k1 = mul(&y, &gen(s));
        let k2 = mul(&axpy(&y, h / 2.0, &k1), &gen(s + h / 2.0));
        let k3 = mul(&axpy(&y, h / 2.0, &k2), &gen(s + h / 2.0));
        let k4 = mul(&axpy(&y, h, &k3), &gen(s + h));
        for i in 0..2 {
            for j in 0..2 {
                y[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
    }
    y
}

/// Switch times of the hidden chain on `[0, end]` from `x0`, drawn from
/// exponential holding times. Returns the switches in `buf`.
pub fn chain_path<R: Rng>(theta: [f64; 2], x0: usize, end: f64, rng: &mut R, buf: &mut Vec<f64>) {
    buf.clear();
    let (mut t, mut x) = (0.0, x0);
    loop {
        if theta[x] == 0.0 {
            return;
        }
        let hold: f64 = rng.sample::<f64, _>(Exp1) / theta[x];
        t += hold;
        if t >= end {
            return;
        }
        buf.push(t);
        x = 1 - x;
    }
}

pub fn state_at(x0: usize, switches: &[f64], t: f64) -> usize {
    (x0 + switches.partition_point(|&s| s <= t)) % 2
}

/// Time spent in each state over `[0, t]`.
pub fn occupation(x0: usize, switches: &[f64], t: f64) -> [f64; 2] {
    let mut occ = [0.0; 2];
    let (mut last, mut x) = (0.0, x0);
    for &s in switches {
        if s >= t {
            break;
        }
        occ[x] += s - last;
        last = s;
        x = 1 - x;
    }
    occ[x] += t - last;
    occ
}

const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss8(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += w * (f(mid - half * x) + f(mid + half * x));
    }
    s * half
}

/// `gauss8` on each piece of `breaks` clipped to `[a, b]`.
pub fn gauss8_pieces(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    cuts.windows(2).map(|w| gauss8(&mut f, w[0], w[1])).sum()
}

#[derive(Debug, Clone, Copy)]
pub enum Hazard {
    /// `a + b x + c m`
    Linear { a: f64, b: f64, c: f64 },
    /// `(a + c m) e^{-t} + b x`
    Decay { a: f64, b: f64, c: f64 },
}

impl Hazard {
    pub fn rate(&self, t: f64, x: usize, m: usize) -> f64 {
        let (x, m) = (x as f64, m as f64);
        match *self {
            Hazard::Linear { a, b, c } => a + b * x + c * m,
            Hazard::Decay { a, b, c } => (a + c * m) * (-t).exp() + b * x,
        }
    }

    /// Integral of `rate` over `[u, v]` with `x` and `m` fixed.
    pub fn integral(&self, u: f64, v: f64, x: usize, m: usize) -> f64 {
        let (xf, mf) = (x as f64, m as f64);
        match *self {
            Hazard::Linear { a, b, c } => (a + b * xf + c * mf) * (v - u),
            Hazard::Decay { a, b, c } => (a + c * mf) * ((-u).exp() - (-v).exp()) + b * xf * (v - u),
        }
    }
}

/// The observed record the posterior oracle conditions on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observed {
    YJump(f64),
    Default(f64),
}

impl Observed {
    fn time(&self) -> f64 {
        match *self {
            Observed::YJump(t) | Observed::Default(t) => t,
        }
    }
}

/// Full model in plain numbers: `eta[table][x]`, the table after `n` jumps
/// being `(y0 + n) % 2`, or its complement under the parity reading.
#[derive(Debug, Clone, Copy)]
pub struct PlainModel {
    pub theta: [f64; 2],
    pub eta: [[f64; 2]; 2],
    pub parity_reading: bool,
    pub y0: usize,
    pub x0: usize,
    pub obligors: usize,
    pub hazard: Hazard,
}

impl PlainModel {
    fn table(&self, n: usize) -> [f64; 2] {
        let occupied = (self.y0 + n) % 2;
        self.eta[if self.parity_reading { 1 - occupied } else { occupied }]
    }

    /// Log-likelihood of the observed record on `[0, s]` for each `s` in
    /// `checkpoints` along one hidden path.
    fn log_likelihoods(&self, switches: &[f64], record: &[Observed], checkpoints: &[f64], out: &mut Vec<(f64, usize)>) {
        out.clear();
        let (mut n, mut m) = (0usize, 0usize);
        let mut ll = 0.0;
        let mut now = 0.0;
        let mut ev = record.iter().peekable();
        for &s in checkpoints {
            loop {
                let next = ev.peek().map(|e| e.time()).filter(|&t| t <= s);
                let until = next.unwrap_or(s);
                ll -= self.exposure(switches, now, until, n, m);
                now = until;
                let Some(_) = next else { break };
                let x = state_at(self.x0, switches, now);
                match ev.next().expect("peeked") {
                    Observed::YJump(_) => {
                        ll += self.table(n)[x].ln();
                        n += 1;
                    }
                    Observed::Default(t) => {
                        ll += self.hazard.rate(*t, x, m).ln();
                        m += 1;
                    }
                }
            }
            out.push((ll, state_at(self.x0, switches, s)));
        }
    }

    /// Y no-jump exposure plus every survivor's hazard over `[u, v]`.
    fn exposure(&self, switches: &[f64], u: f64, v: f64, n: usize, m: usize) -> f64 {
        if v <= u {
            return 0.0;
        }
        let eta = self.table(n);
        let alive = self.obligors - m;
        let mut total = 0.0;
        let mut left = u;
        let mut x = state_at(self.x0, switches, u);
        let first = switches.partition_point(|&s| s <= u);
        for &s in &switches[first..] {
            if s >= v {
                break;
            }
            total += eta[x] * (s - left) + alive as f64 * self.hazard.integral(left, s, x, m);
            left = s;
            x = 1 - x;
        }
        total + eta[x] * (v - left) + alive as f64 * self.hazard.integral(left, v, x, m)
    }

    /// `P(X_s = 1 | record on [0, s])` for each checkpoint, by weighting
    /// hidden paths with the likelihood of the record.
    pub fn weighted_posterior(&self, record: &[Observed], checkpoints: &[f64], paths: usize, seed: u64) -> Vec<f64> {
        let end = checkpoints.iter().copied().fold(0.0, f64::max);
        let chunks = 64usize;
        let per = paths.div_ceil(chunks);
        let sums = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut r = rng(seed, c as u64);
                let mut buf = Vec::new();
                let mut ll = Vec::new();
                let mut acc = vec![[0.0f64; 2]; checkpoints.len()];
                for _ in 0..per.min(paths.saturating_sub(c * per)) {
                    chain_path(self.theta, self.x0, end, &mut r, &mut buf);
                    self.log_likelihoods(&buf, record, checkpoints, &mut ll);
                    for (a, &(l, x)) in acc.iter_mut().zip(&ll) {
                        a[x] += l.exp();
                    }
                }
                acc
            })
            .reduce(
                || vec![[0.0; 2]; checkpoints.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        x[0] += y[0];
                        x[1] += y[1];
                    }
                    a
                },
            );
        sums.iter().map(|w| w[1] / (w[0] + w[1])).collect()
    }
}
